"""conekit: cone multipliers, Besicovitch box families, symmetric cones and
Cauchy-Szego kernels, with the numerical experiments tying them together."""

__version__ = "0.1.0"
