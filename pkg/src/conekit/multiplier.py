"""Fourier multiplier operators for the cone, half-spaces and the half-line,
with both an FFT path and closed-form evaluation, plus the square-function
experiment that exhibits the failure of local (p, q) bounds.

The closed-form path follows from the splitting P f = (f + i H f) / 2 of the
positive-frequency projection, with H(1_[a,b])(t) = (1/pi) log|t-a|/|t-b|,
so the image of a box indicator under a half-space projection separates into
a 1D factor along the normal axis times the cross-section indicator.

The left side of the square-function inequality is evaluated as the certified
lower bound  sum_j integral over the translated box of |H_j 1_{F_j}|  (the
translates are pairwise disjoint, so this never overcounts); the right side
uses the stratified Monte-Carlo identity

    integral count^s = sum_j |F_j| * E_{x ~ Unif(F_j)} [count(x)^(s-1)].
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import besicovitch as bs
from .errors import SingularPointError

BOUNDARY_TOL = 1e-12
# symbol value assigned on frequency-lattice points that fall on the symbol
# boundary; 1/2 is the symmetrized convention
BOUNDARY_VALUE = 0.5

BALL_RADIUS = bs.BALL_RADIUS_3D


# --- grids -------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    """Samples of a compactly supported function on [-L, L)^d.

    ``support_radius`` records the sup-norm radius of the support as declared
    by the builder; the multiplier application refuses grids whose support
    exceeds half the extent, since periodization would alias.
    """

    values: np.ndarray
    extent: float
    support_radius: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim not in (1, 3):
            raise ValueError("grids are 1D or 3D")
        if len(set(v.shape)) != 1:
            raise ValueError("grid must have equal samples per axis")
        if v.shape[0] & (v.shape[0] - 1):
            raise ValueError("samples per axis must be a power of two")
        object.__setattr__(self, "values", v.astype(complex))

    @property
    def dims(self):
        return self.values.ndim

    @property
    def samples_per_axis(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return 2.0 * self.extent / self.samples_per_axis

    def axis(self):
        m = self.samples_per_axis
        return -self.extent + self.spacing * np.arange(m)

    def freqs(self):
        return np.fft.fftfreq(self.samples_per_axis, d=self.spacing)

    def norm_l2(self):
        return float(
            np.sqrt(self.spacing**self.dims * np.sum(np.abs(self.values) ** 2))
        )

    def with_values(self, values, support_radius=None):
        return GridFunction(values, self.extent, support_radius)


# --- multiplier symbols --------------------------------------------------------

@dataclass(frozen=True)
class HalfLine1D:
    """Keeps frequencies with sign * xi > 0."""

    sign: int = 1


@dataclass(frozen=True)
class HalfSpace:
    """Keeps frequencies with <xi, normal> < 0."""

    normal: tuple

    def normal_array(self):
        return np.asarray(self.normal, dtype=float)


@dataclass(frozen=True)
class Cone:
    """Keeps frequencies inside the forward light cone xi_1 > |xi'|."""


def sample_symbol(symbol, freq_axes, shift=None):
    """Symbol values on the frequency lattice, with the boundary rule.

    ``freq_axes`` is the per-axis frequency array; ``shift`` evaluates the
    predicate at xi + shift (used for the modulated cone experiment).
    """
    if isinstance(symbol, HalfLine1D):
        xi = freq_axes[0] + (0.0 if shift is None else shift)
        g = symbol.sign * xi
    elif isinstance(symbol, HalfSpace):
        normal = symbol.normal_array()
        mesh = np.meshgrid(*freq_axes, indexing="ij", sparse=True)
        if shift is None:
            shift = np.zeros(len(mesh))
        g = sum(-(m + s) * c for m, s, c in zip(mesh, shift, normal))
    elif isinstance(symbol, Cone):
        mesh = np.meshgrid(*freq_axes, indexing="ij", sparse=True)
        if shift is None:
            shift = np.zeros(len(mesh))
        first = mesh[0] + shift[0]
        rest = sum((m + s) ** 2 for m, s in zip(mesh[1:], shift[1:]))
        g = first - np.sqrt(rest)
    else:
        raise TypeError(f"unknown symbol {symbol!r}")
    out = np.where(g > BOUNDARY_TOL, 1.0, 0.0)
    out = np.where(np.abs(g) <= BOUNDARY_TOL, BOUNDARY_VALUE, out)
    return out


def fft_multiplier_apply(f, symbol, shift=None):
    """Apply a Fourier multiplier on the grid: DFT, symbol, inverse DFT."""
    if f.support_radius is not None and f.support_radius > f.extent / 2:
        raise ValueError(
            "grid support exceeds half the extent; pad the grid to control "
            "periodization"
        )
    fhat = np.fft.fftn(f.values)
    m = sample_symbol(symbol, [f.freqs()] * f.dims, shift=shift)
    out = np.fft.ifftn(fhat * m)
    return f.with_values(out)


def indicator_interval(extent, samples, a, b):
    """Grid samples of 1_[a,b] with one-cell box-filter antialiasing."""
    g = GridFunction(np.zeros(samples), extent, support_radius=max(abs(a), abs(b)))
    x = g.axis()
    h = g.spacing
    cov = np.clip((np.minimum(b - x, x - a) / h) + 0.5, 0.0, 1.0)
    return g.with_values(cov.astype(complex), support_radius=max(abs(a), abs(b)))


def indicator_box(box, extent, samples):
    """3D grid samples of a box indicator, antialiased per box axis."""
    g = GridFunction(np.zeros((samples,) * 3), extent)
    x = g.axis()
    h = g.spacing
    vals = np.empty((samples,) * 3)
    for i0 in range(0, samples, 32):
        i1 = min(i0 + 32, samples)
        mesh = np.stack(
            np.meshgrid(x[i0:i1], x, x, indexing="ij"), axis=-1
        )
        local = (mesh - box.center) @ box.axes.T
        cov = np.clip(
            (box.half_extents - np.abs(local)) / h + 0.5, 0.0, 1.0
        )
        vals[i0:i1] = np.prod(cov, axis=-1)
    radius = float(np.max(np.abs(box.vertices()))) + h
    return g.with_values(vals.astype(complex), support_radius=radius)


# --- closed forms --------------------------------------------------------------

def halfline_projection_1d(a, b, t, sign=1):
    """Value at t of the positive-frequency part of 1_[a,b].

    Closed form (1/2) 1_[a,b](t) + sign * (i / 2 pi) log|t-a|/|t-b|; raises
    at the interval endpoints where the logarithm is singular.
    """
    if not a < b:
        raise ValueError("need a < b")
    t = np.asarray(t, dtype=float)
    if np.any(t == a) or np.any(t == b):
        raise SingularPointError("evaluation at an interval endpoint")
    real = 0.5 * ((t > a) & (t < b))
    imag = np.log(np.abs((t - a) / (t - b))) / (2.0 * np.pi)
    out = real + 1j * sign * imag
    return complex(out) if out.ndim == 0 else out


def halfline_projection_periodic(a, b, t, period, sign=1):
    """Periodized positive-frequency projection of 1_[a,b].

    The DFT path acts on the periodization of the input, so its continuum
    limit is this function, not the line closed form: summing the Hilbert
    kernel over the period lattice turns the log ratio into

        (1/2 pi) log | sin(pi (t-a)/P) / sin(pi (t-b)/P) |.
    """
    if not a < b:
        raise ValueError("need a < b")
    if b - a >= period:
        raise ValueError("interval longer than the period")
    t = np.asarray(t, dtype=float)
    sa = np.sin(np.pi * (t - a) / period)
    sb = np.sin(np.pi * (t - b) / period)
    if np.any(sa == 0.0) or np.any(sb == 0.0):
        raise SingularPointError("evaluation at a periodized endpoint")
    frac = np.mod(t - a, period)
    real = 0.5 * (frac < (b - a))
    imag = np.log(np.abs(sa / sb)) / (2.0 * np.pi)
    out = real + 1j * sign * imag
    return complex(out) if out.ndim == 0 else out


def box_axis_interval(box, n_tilde):
    """Index of the box axis parallel to n_tilde, its halfline sign, and the
    1D interval the box occupies along that axis."""
    unit = np.asarray(n_tilde, dtype=float)
    unit = unit / np.linalg.norm(unit)
    dots = box.axes @ unit
    idx = int(np.argmax(np.abs(dots)))
    if abs(abs(dots[idx]) - 1.0) > 1e-12:
        raise ValueError("n_tilde is not parallel to a box axis")
    # <xi, n_tilde> < 0 keeps sign * xi > 0 along the axis coordinate, with
    # sign = -sign(axis . n_tilde)
    sign = -int(np.sign(dots[idx]))
    c = float(box.center @ box.axes[idx])
    e = float(box.half_extents[idx])
    return idx, sign, c - e, c + e


def box_halfspace_image(box, n_tilde, x):
    """Exact value of the half-space projection of the box indicator at x.

    Separates as the 1D half-line projection along the n_tilde axis times
    the indicator of the cross-section; x may be a single point or an array
    of points with last dimension 3.
    """
    idx, sign, a, b = box_axis_interval(box, n_tilde)
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    local = (pts - box.center) @ box.axes.T
    t = pts @ box.axes[idx]
    line = halfline_projection_1d(a, b, t, sign=sign)
    cross = np.ones(pts.shape[0], dtype=bool)
    for other in range(3):
        if other == idx:
            continue
        cross &= np.abs(local[:, other]) <= box.half_extents[other]
    out = np.where(cross, line, 0.0 + 0.0j)
    return complex(out[0]) if np.asarray(x).ndim == 1 else out


def box_image_grid(box, n_tilde, grid):
    """Closed-form image sampled on a 3D grid (chunked over the first axis)."""
    x = grid.axis()
    m = grid.samples_per_axis
    vals = np.empty((m, m, m), dtype=complex)
    for i0 in range(0, m, 32):
        i1 = min(i0 + 32, m)
        mesh = np.stack(np.meshgrid(x[i0:i1], x, x, indexing="ij"), axis=-1)
        flat = mesh.reshape(-1, 3)
        vals[i0:i1] = box_halfspace_image(box, n_tilde, flat).reshape(
            i1 - i0, m, m
        )
    return grid.with_values(vals)


def gaussian_halfline_image(t, sigma, sign=1):
    """Positive/negative-frequency part of a centered Gaussian.

    For g = exp(-x^2 / 2 sigma^2) the half-line projection is
    (1/2) w(sign * t / (sigma sqrt 2)) with w the Faddeeva function.
    """
    from scipy.special import wofz

    return 0.5 * wofz(sign * np.asarray(t) / (sigma * np.sqrt(2.0)))


def hermite_probe_axis(t, sigma):
    """(t^2 - sigma^2) exp(-t^2 / 2 sigma^2): a Gaussian whose spectrum
    vanishes to second order at frequency zero."""
    t = np.asarray(t, dtype=float)
    return (t**2 - sigma**2) * np.exp(-(t**2) / (2.0 * sigma**2))


def hermite_halfline_image(t, sigma, sign=1):
    """Half-line projection of ``hermite_probe_axis``.

    Differentiating the Gaussian projection twice gives
    (sigma^2 / 4) w''(z) at z = sign t / (sigma sqrt 2), with
    w'' = (4 z^2 - 2) w - 4 i z / sqrt(pi).  The double zero of the
    spectrum at the symbol cut makes this image decay like t^-3, so its
    periodization is dominated by the first few lattice copies.
    """
    from scipy.special import wofz

    z = sign * np.asarray(t) / (sigma * np.sqrt(2.0))
    w = wofz(z)
    wpp = (4.0 * z**2 - 2.0) * w - 4.0j * z / np.sqrt(np.pi)
    return (sigma**2 / 4.0) * wpp


def _live_image_shifts(box, widths, idx, extent, reach, threshold=1e-12):
    """Box-frame offsets of the periodization images whose transverse
    Gaussian weight survives anywhere within ``reach`` of the origin.

    The DFT output is the 2*extent-periodization of the continuum image.
    Transverse offsets grow linearly along every lattice direction, so only
    finitely many copies contribute and the image sum converges absolutely
    on the comparison window (the slow 1/t axis tails are tamed by their
    transverse factors).
    """
    period = 2.0 * extent
    shifts = []
    cross_idx = [j for j in range(3) if j != idx]
    for m1 in range(-4, 5):
        for m2 in range(-4, 5):
            for m3 in range(-4, 5):
                v = period * np.array([m1, m2, m3], dtype=float)
                off = box.axes @ v
                weight = 1.0
                for j in cross_idx:
                    gap = max(abs(off[j]) - reach, 0.0)
                    weight *= np.exp(-(gap**2) / (2.0 * widths[j] ** 2))
                if weight > threshold:
                    shifts.append(off)
    return shifts


def gaussian_box_probe(box, n_tilde, extent, samples, widths=None,
                       window=None):
    """Relative L2 defect between the FFT path and the closed form for a
    box-frame separable probe pushed through the half-space symbol.

    The probe shares the box's tilted axes, so it exercises exactly the
    geometry used by the indicator images, but being smooth it is free of
    the Gibbs skirts that make pointwise indicator comparisons meaningless
    at feasible grid sizes.  Along the half-line axis the probe is the
    Hermite-windowed Gaussian, whose image decays cubically; the few
    periodization copies that still matter are summed into the closed form.
    The comparison runs on the central window |x|_inf <= window.
    """
    template = GridFunction(np.zeros((samples,) * 3), extent)
    h = template.spacing
    if widths is None:
        widths = np.maximum(box.half_extents, 2.0 * h)
    if window is None:
        window = extent / 2.0
    idx, sign, _, _ = box_axis_interval(box, n_tilde)
    reach = np.sqrt(3.0) * window + float(np.linalg.norm(box.center))
    shifts = _live_image_shifts(box, widths, idx, extent, reach)
    x = template.axis()
    vals = np.empty((samples,) * 3, dtype=complex)
    center = box.center
    cross_idx = [j for j in range(3) if j != idx]
    for i0 in range(0, samples, 32):
        i1 = min(i0 + 32, samples)
        mesh = np.stack(np.meshgrid(x[i0:i1], x, x, indexing="ij"), axis=-1)
        local = (mesh - center) @ box.axes.T
        cross = np.exp(
            -sum(local[..., j] ** 2 / (2.0 * widths[j] ** 2)
                 for j in cross_idx)
        )
        vals[i0:i1] = hermite_probe_axis(local[..., idx], widths[idx]) * cross
    probe = template.with_values(vals)
    image = fft_multiplier_apply(probe, HalfSpace(tuple(n_tilde)))

    sel = np.abs(x) <= window
    xw = x[sel]
    mesh = np.stack(np.meshgrid(xw, xw, xw, indexing="ij"), axis=-1)
    local = (mesh - center) @ box.axes.T
    exact = np.zeros(mesh.shape[:-1], dtype=complex)
    for off in shifts:
        shifted = local + off
        cross = np.exp(
            -sum(shifted[..., j] ** 2 / (2.0 * widths[j] ** 2)
                 for j in cross_idx)
        )
        exact += (
            hermite_halfline_image(shifted[..., idx], widths[idx], sign)
            * cross
        )
    got = image.values[np.ix_(sel, sel, sel)]
    return float(np.linalg.norm(got - exact) / np.linalg.norm(exact))


# --- quadrature ----------------------------------------------------------------

def adaptive_simpson(func, a, b, tol, max_depth=40):
    """Adaptive Simpson quadrature with Richardson error control."""

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2.0
        lm, rm = (a + m) / 2.0, (m + b) / 2.0
        flm, frm = func(lm), func(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2.0, depth + 1
        )

    fa, fb = func(a), func(b)
    m = (a + b) / 2.0
    fm = func(m)
    whole = simpson(fa, fm, fb, b - a)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def cone_dilation_symbol_defect(lam, samples=128, extent=8.0):
    """Sup defect of the lattice identity cone(xi) = cone(lam * xi).

    This is the exact content of the homogeneity of the cone symbol; the
    defect is zero unless a lattice point falls inside the boundary
    tolerance band for one scale but not the other.
    """
    template = GridFunction(np.zeros((samples,) * 3), extent)
    freqs = [template.freqs()] * 3
    base = sample_symbol(Cone(), freqs)
    scaled = sample_symbol(Cone(), [lam * f for f in freqs])
    return float(np.max(np.abs(base - scaled)))


def cone_dilation_probe(lam, samples=128, extent=8.0, order=3,
                        spectral_width=0.8, window=4.0):
    """Spatial dilation covariance of the cone multiplier.

    Applies the cone to a frequency-built probe (spectrum vanishing on the
    cone surface to the given order, so its image decays fast) and to its
    lam-compression, and compares values on the wrap-free central window
    |lam x|_inf <= window.  Periodization wraps of the uncompressed image
    bound what any finite grid can achieve here; the window keeps them
    subdominant.
    """
    template = GridFunction(np.zeros((samples,) * 3), extent)
    freqs = template.freqs()
    mesh = np.meshgrid(freqs, freqs, freqs, indexing="ij", sparse=True)

    def spectrum(scale):
        x1, x2, x3 = (m * scale for m in mesh)
        delta = x1**2 - x2**2 - x3**2
        radius = np.sqrt(x1**2 + x2**2 + x3**2)
        # shell keeps probe mass at |xi| ~ 1 for every scaling tested
        return delta**order * np.exp(
            -np.pi * (radius - 1.0) ** 2 / spectral_width**2
        )

    symbol = sample_symbol(Cone(), [freqs] * 3)
    compressed = np.fft.ifftn(symbol * spectrum(1.0 / lam) / lam**3)
    base = np.fft.ifftn(symbol * spectrum(1.0))
    x = np.fft.fftfreq(samples, d=1.0 / (2.0 * extent))
    n = np.where(np.abs(lam * x) <= window)[0]
    j = (lam * n) % samples
    sub = np.ix_(n, n, n)
    tgt = np.ix_(j, j, j)
    return float(
        np.linalg.norm(compressed[sub] - base[tgt])
        / np.linalg.norm(base[tgt])
    )


# --- the square-function experiment ---------------------------------------------

@dataclass(frozen=True)
class SquareFunctionResult:
    k: int
    n_boxes: int
    p: float
    lhs: float
    kappa: float
    rhs_exact: float
    rhs_stderr: float
    rhs_holder: float
    union_eps: float
    mc_flagged: bool
    control: bool


def translate_image_integral(f_box, ntilde, shift=bs.SHIFT, tol=1e-8):
    """Certified integral of |H 1_F| over the translated box F + shift*ntilde.

    The translate sits along the half-line axis, so the integral is the
    cross-section area times a 1D integral of the log tail, done by adaptive
    Simpson with the requested error control.
    """
    idx, sign, a, b = box_axis_interval(f_box, ntilde)
    ntilde = np.asarray(ntilde, dtype=float)
    axis_shift = float(shift * ntilde @ f_box.axes[idx])
    lo, hi = a + axis_shift, b + axis_shift
    if not (hi < a or lo > b):
        raise ValueError("translate overlaps the box along the axis")
    cross_area = 4.0 * float(
        np.prod([f_box.half_extents[i] for i in range(3) if i != idx])
    )

    def integrand(t):
        return abs(np.log(abs((t - a) / (t - b)))) / (2.0 * np.pi)

    line = adaptive_simpson(integrand, lo, hi, tol)
    return cross_area * line


def translate_image_minimum(f_box, ntilde, shift=bs.SHIFT):
    """Uniform lower bound of |H 1_F| over the translate.

    The log tail decreases away from the interval, so the minimum sits at the
    translate end farthest from the box, at distance |shift * ntilde| along
    the axis from the near interval endpoint."""
    idx, sign, a, b = box_axis_interval(f_box, ntilde)
    far = abs(float(shift * np.asarray(ntilde) @ f_box.axes[idx]))
    return float(np.log1p((b - a) / far) / (2.0 * np.pi))


def stratified_count_moment(boxes, power, n_samples, seed):
    """Stratified Monte-Carlo estimate of integral count(x)^(power+1) via

        sum_j |F_j| E_{x ~ Unif(F_j)}[count(x)^power],

    returning (estimate, standard error).
    """
    n = boxes.n_boxes
    per_box = np.full(n, n_samples // n)
    per_box[: n_samples % n] += 1
    rng = np.random.Generator(np.random.Philox(seed))
    total = 0.0
    var_total = 0.0
    for j, f_box in enumerate(boxes.boxes_f):
        m = int(per_box[j])
        local = rng.uniform(-1.0, 1.0, size=(m, 3)) * f_box.half_extents
        pts = f_box.center + local @ f_box.axes
        counts = np.zeros(m, dtype=np.int64)
        for other in boxes.boxes_f:
            counts += other.contains(pts)
        g = counts.astype(float) ** power
        vol = f_box.volume()
        total += vol * g.mean()
        var_total += vol**2 * g.var(ddof=1) / m
    return total, float(np.sqrt(var_total))


def square_function_v2(
    boxes,
    p,
    mc_samples,
    seed=0,
    eps_resolution=2**-14,
    control=False,
    quad_tol=1e-8,
):
    """Both sides of the square-function inequality for f_j = 1_{F_j}.

    The left side is the certified lower bound over the disjoint translates;
    the exact right side is the stratified Monte-Carlo estimate of
    (integral count^(p/2))^(1/p); the Holder side chains through the measured
    union bound eps_hat of the enclosing boxes.
    """
    if control:
        if p != 2.0:
            raise ValueError("control mode is the p = 2 run")
    elif not 1.0 <= p < 2.0:
        raise ValueError("p must be in [1, 2); p = 2 only as control")
    if mc_samples < 10_000:
        raise ValueError("mc_samples must be at least 10^4")

    lhs = sum(
        translate_image_integral(f_box, ntilde, tol=quad_tol)
        for f_box, ntilde in zip(boxes.boxes_f, boxes.normals)
    )
    kappa = min(
        translate_image_minimum(f_box, ntilde)
        for f_box, ntilde in zip(boxes.boxes_f, boxes.normals)
    )

    moment, moment_err = stratified_count_moment(
        boxes, p / 2.0 - 1.0, mc_samples, seed
    )
    rhs_exact = moment ** (1.0 / p)
    rhs_stderr = (
        (1.0 / p) * moment ** (1.0 / p - 1.0) * moment_err if moment > 0 else 0.0
    )

    union, union_err = bs.union_measure(boxes, eps_resolution)
    eps_hat = union + union_err
    total_volume = sum(b.volume() for b in boxes.boxes_f)
    rhs_holder = np.sqrt(total_volume) * eps_hat ** (1.0 / p - 0.5)

    return SquareFunctionResult(
        k=boxes.k,
        n_boxes=boxes.n_boxes,
        p=p,
        lhs=float(lhs),
        kappa=float(kappa),
        rhs_exact=float(rhs_exact),
        rhs_stderr=float(rhs_stderr),
        rhs_holder=float(rhs_holder),
        union_eps=float(eps_hat),
        mc_flagged=bool(rhs_stderr > 0.1 * rhs_exact),
        control=control,
    )


@dataclass(frozen=True)
class ExperimentReport:
    k: int
    n: int
    eps_hat: float
    p: float
    lhs: float
    rhs_exact: float
    rhs_stderr: float
    rhs_holder: float
    ratio: float
    ratio_holder: float
    m_lower: float
    wall_ms: float
    control: bool

    CSV_FIELDS = (
        "k", "n", "eps_hat", "p", "lhs", "rhs_exact", "rhs_stderr",
        "rhs_holder", "ratio", "ratio_holder", "m_lower", "wall_ms",
        "control",
    )
    CSV_HEADER = (
        "k", "N", "eps_hat", "p", "lhs", "rhs_exact", "rhs_stderr",
        "rhs_holder", "ratio", "ratio_holder", "m_lower", "wall_ms",
        "control",
    )


DEFAULT_KHINTCHINE_CP = float(np.sqrt(2.0))   # config value, not from theory


def ratio_experiment(
    k_list,
    p_list,
    mc_samples,
    seed=0,
    c_p=DEFAULT_KHINTCHINE_CP,
    eps_resolution=2**-14,
):
    """Run the square-function experiment over a (k, p) grid.

    For p < 2 the Holder-normalized ratio grows like eps_hat^(1/2 - 1/p) as
    the union shrinks; the optional p = 2 entries are control runs whose
    ratio stays bounded.
    """
    reports = []
    for k in k_list:
        boxes = bs.build_boxes(bs.build_perron_rectangles(k))
        for p in p_list:
            report = ratio_experiment_cell(
                boxes, p, mc_samples, seed=seed, c_p=c_p,
                eps_resolution=eps_resolution,
            )
            reports.append(report)
    return reports


def ratio_experiment_cell(boxes, p, mc_samples, seed=0,
                          c_p=DEFAULT_KHINTCHINE_CP,
                          eps_resolution=2**-14):
    """One (k, p) cell of the ratio experiment.

    The cell's RNG stream is derived from (seed, k, p), so results do not
    depend on how cells are grouped into runs.
    """
    child_seed = int(
        np.random.SeedSequence(
            seed, spawn_key=(boxes.k, int(round(p * 1e6)))
        ).generate_state(1)[0]
    )
    control = p == 2.0
    start = time.perf_counter()
    res = square_function_v2(
        boxes,
        p,
        mc_samples,
        seed=child_seed,
        eps_resolution=eps_resolution,
        control=control,
    )
    wall_ms = 1e3 * (time.perf_counter() - start)
    return ExperimentReport(
        k=boxes.k,
        n=res.n_boxes,
        eps_hat=res.union_eps,
        p=p,
        lhs=res.lhs,
        rhs_exact=res.rhs_exact,
        rhs_stderr=res.rhs_stderr,
        rhs_holder=res.rhs_holder,
        ratio=res.lhs / res.rhs_exact,
        ratio_holder=res.lhs / res.rhs_holder,
        m_lower=res.lhs / res.rhs_exact / c_p,
        wall_ms=wall_ms,
        control=control,
    )


# --- random-sign (Khintchine-style) lower bound ----------------------------------

def _check_resolvable(boxes, grid):
    min_extent = min(float(np.min(b.half_extents)) for b in boxes.boxes_f)
    if 2.0 * min_extent < grid.spacing:
        raise ValueError(
            "boxes are thinner than the grid spacing; use k <= 2 or refine"
        )


def _modulation_phase(grid, freq_vector):
    """exp(2 pi i <x, v>) on the grid, built separably."""
    x = grid.axis()
    phases = [np.exp(2j * np.pi * v * x) for v in freq_vector]
    out = phases[0]
    for ph in phases[1:]:
        out = np.multiply.outer(out, ph)
    return out


def modulated_box_images(boxes, r_mod, samples_per_axis=256, extent=24.0):
    """Demodulated cone images g_j with ghat_j = 1_Omega(. + R n_j) fhat_j.

    The shifted symbol realizes the modulation exactly on the lattice, with
    no aliasing no matter how large R is.
    """
    if r_mod < 1.0:
        raise ValueError("modulation parameter must be >= 1")
    template = GridFunction(np.zeros((samples_per_axis,) * 3), extent)
    _check_resolvable(boxes, template)
    images = []
    indicators = []
    for f_box, ray in zip(boxes.boxes_f, boxes.light_rays):
        ind = indicator_box(f_box, extent, samples_per_axis)
        g = fft_multiplier_apply(ind, Cone(), shift=r_mod * ray)
        indicators.append(ind)
        images.append(g)
    return indicators, images


def modulated_box_distance(boxes, r_mod, samples_per_axis=256, extent=24.0):
    """Relative L2 distances between the modulated cone images and the
    closed-form half-space images, per box."""
    return modulation_convergence(boxes, [r_mod], samples_per_axis, extent)[0]


def modulation_convergence(boxes, r_list, samples_per_axis=256, extent=24.0):
    """Per-box closed-form distances for a sweep of modulation parameters.

    Indicators and oracle grids are box properties, so they are built once;
    each modulation step only pays for the shifted-symbol transform.  The
    translated cones grow with the modulation (Omega - R1 n is contained in
    Omega - R2 n for R1 < R2), so the distances decrease monotonically.
    """
    template = GridFunction(np.zeros((samples_per_axis,) * 3), extent)
    _check_resolvable(boxes, template)
    indicators = [
        indicator_box(f_box, extent, samples_per_axis)
        for f_box in boxes.boxes_f
    ]
    oracles = [
        box_image_grid(f_box, ntilde, template)
        for f_box, ntilde in zip(boxes.boxes_f, boxes.normals)
    ]
    norms = [np.linalg.norm(o.values) for o in oracles]
    rows = []
    for r_mod in r_list:
        if r_mod < 1.0:
            raise ValueError("modulation parameter must be >= 1")
        dists = []
        for ind, oracle, nrm, ray in zip(indicators, oracles, norms,
                                         boxes.light_rays):
            g = fft_multiplier_apply(ind, Cone(), shift=r_mod * ray)
            dists.append(float(np.linalg.norm(g.values - oracle.values) / nrm))
        rows.append(dists)
    return rows


def random_sign_norm_lower_bound(
    boxes,
    p,
    trials,
    r_mod,
    samples_per_axis=256,
    extent=24.0,
    seed=0,
):
    """Empirical lower bound for the local operator norm of the cone
    multiplier: max over random sign patterns of ||S f||_L1(B) / ||f||_Lp(B)
    with f = sum_j eps_j exp(2 pi i R <x, n_j>) 1_{F_j}.

    The cone is applied per box through the shifted symbol; the modulation
    phases re-enter only pointwise at grid nodes when the pieces are summed.
    """
    indicators, images = modulated_box_images(
        boxes, r_mod, samples_per_axis, extent
    )
    template = images[0]
    x = template.axis()
    mesh = np.meshgrid(x, x, x, indexing="ij", sparse=True)
    ball = sum(m**2 for m in mesh) <= BALL_RADIUS**2
    vol_el = template.spacing**3

    phases = [
        _modulation_phase(template, r_mod * ray) for ray in boxes.light_rays
    ]
    rng = np.random.Generator(np.random.Philox(seed))
    best = 0.0
    for _ in range(trials):
        signs = rng.choice([-1.0, 1.0], size=len(images))
        sf = np.zeros(template.values.shape, dtype=complex)
        f = np.zeros(template.values.shape, dtype=complex)
        for eps, g, ind, ph in zip(signs, images, indicators, phases):
            sf += eps * ph * g.values
            f += eps * ph * ind.values
        norm_sf = vol_el * np.sum(np.abs(sf)[ball])
        norm_f = (vol_el * np.sum(np.abs(f)[ball] ** p)) ** (1.0 / p)
        if norm_f > 0:
            best = max(best, norm_sf / norm_f)
    return best


# --- tensor extension -------------------------------------------------------------

def tensor_extension_check(
    phi,
    k,
    samples_3d=64,
    extent_3d=4.0,
    normal_last=0.0,
):
    """Relative L2 defect of the separability identity

        H(1_F ⊗ phi) = H^(3)(1_F) ⊗ phi

    for the half-space with normal (-1, u_1, u_2, normal_last).  With a zero
    last component the symbol ignores the fourth frequency and the identity
    is exact up to rounding; a nonzero component is the negative control.
    """
    if phi.dims != 1:
        raise ValueError("phi must live on a 1D grid")
    boxes = bs.build_boxes(bs.build_perron_rectangles(k))
    f_box = boxes.boxes_f[0]
    ntilde3 = boxes.normals[0]
    _check_resolvable(boxes, GridFunction(np.zeros((samples_3d,) * 3), extent_3d))

    ind3 = indicator_box(f_box, extent_3d, samples_3d)
    if np.all(phi.values == 0):
        return 0.0

    prod4 = np.multiply.outer(ind3.values, phi.values)
    fhat = np.fft.fftn(prod4)
    freqs3 = [ind3.freqs()] * 3
    freq4 = phi.freqs()
    normal4 = np.concatenate([ntilde3, [normal_last]])
    mesh = np.meshgrid(*freqs3, freq4, indexing="ij", sparse=True)
    g = sum(-m * c for m, c in zip(mesh, normal4))
    symbol = np.where(g > BOUNDARY_TOL, 1.0, 0.0)
    symbol = np.where(np.abs(g) <= BOUNDARY_TOL, BOUNDARY_VALUE, symbol)
    applied = np.fft.ifftn(fhat * symbol)

    image3 = fft_multiplier_apply(ind3, HalfSpace(tuple(ntilde3)))
    tensor = np.multiply.outer(image3.values, phi.values)
    return float(
        np.linalg.norm(applied - tensor) / max(np.linalg.norm(tensor), 1e-300)
    )
