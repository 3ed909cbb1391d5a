"""Euclidean Jordan algebras: spin factors and real symmetric matrices.

Two algebra kinds are supported:

* spin factor of dimension n >= 3: V = R x R^(n-1) with product
  x*y = (x1*y1 + <x', y'>, x1*y' + y1*x'), rank 2, and the Lorentz
  determinant det(x) = x1^2 - |x'|^2.  The positivity cone is the forward
  light cone {x1 > |x'|}.
* Sym(r), r >= 2: real symmetric r x r matrices with product
  x*y = (xy + yx)/2, rank r, the usual matrix determinant, and the cone of
  positive definite matrices.

Elements are stored as flat coordinate vectors (symmetric matrices use the
row-major upper triangle).  The inner product is the trace form tr(xy) for
matrices and the Euclidean dot product for spin factors.

Besides the algebra arithmetic, the module provides cone membership through
principal minors, Peirce decompositions with respect to an idempotent, and
the filling-radius search: the smallest R such that xi + R*(e - c1) enters
the cone, which exists exactly when <xi, c1> > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivisionSingularityError

IDEMPOTENT_TOL = 1e-8
FRAME_TOL = 1e-10
SPLIT_TOL = 1e-9


@dataclass(frozen=True)
class Algebra:
    """Descriptor of a Euclidean Jordan algebra (spin factor or Sym(r))."""

    kind: str          # "spin" or "sym"
    size: int          # n for the spin factor, r for Sym(r)

    def __post_init__(self):
        if self.kind == "spin":
            if self.size < 3:
                raise ValueError("spin factor needs dimension >= 3")
        elif self.kind == "sym":
            if self.size < 2:
                raise ValueError("Sym(r) needs rank >= 2")
        else:
            raise ValueError(f"unknown algebra kind {self.kind!r}")

    @property
    def dim(self):
        if self.kind == "spin":
            return self.size
        return self.size * (self.size + 1) // 2

    @property
    def rank(self):
        return 2 if self.kind == "spin" else self.size


def spin_factor(n):
    return Algebra("spin", n)


def sym_matrix(r):
    return Algebra("sym", r)


@dataclass(frozen=True)
class Element:
    """A point of a Jordan algebra, real or complexified.

    ``coords`` has length ``algebra.dim``; a complex dtype marks an element
    of the complexified algebra (used by the Cayley-transform machinery).
    """

    algebra: Algebra
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords)
        if coords.shape != (self.algebra.dim,):
            raise ValueError(
                f"coords of length {coords.shape} do not match dim {self.algebra.dim}"
            )
        if not np.iscomplexobj(coords):
            coords = coords.astype(float)
        object.__setattr__(self, "coords", coords)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.coords)

    def __add__(self, other):
        _require_same_algebra(self, other)
        return Element(self.algebra, self.coords + other.coords)

    def __sub__(self, other):
        _require_same_algebra(self, other)
        return Element(self.algebra, self.coords - other.coords)

    def __mul__(self, scalar):
        return Element(self.algebra, self.coords * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Element(self.algebra, -self.coords)


def _require_same_algebra(x, y):
    if x.algebra != y.algebra:
        raise ValueError("elements belong to different algebras")


# --- symmetric matrix <-> coordinate vector layout -------------------------

def _triu_indices(r):
    return np.triu_indices(r)


def mat_to_vec(m):
    """Flatten a symmetric matrix to the canonical upper-triangle vector."""
    m = np.asarray(m)
    r = m.shape[0]
    return m[_triu_indices(r)]


def vec_to_mat(v, r):
    """Rebuild the full symmetric matrix from its upper-triangle vector."""
    m = np.zeros((r, r), dtype=np.asarray(v).dtype)
    iu = _triu_indices(r)
    m[iu] = v
    m[(iu[1], iu[0])] = v
    return m


def from_matrix(m):
    """Element of Sym(r) from a full symmetric matrix (symmetrized)."""
    m = np.asarray(m)
    r = m.shape[0]
    ms = (m + m.T) / 2
    return Element(sym_matrix(r), mat_to_vec(ms))


def as_matrix(x):
    if x.algebra.kind != "sym":
        raise ValueError("as_matrix requires a Sym(r) element")
    return vec_to_mat(x.coords, x.algebra.size)


def from_spin(x1, xprime):
    xprime = np.atleast_1d(np.asarray(xprime))
    coords = np.concatenate(([x1], xprime))
    return Element(spin_factor(coords.shape[0]), coords)


def identity(algebra):
    if algebra.kind == "spin":
        coords = np.zeros(algebra.dim)
        coords[0] = 1.0
        return Element(algebra, coords)
    return from_matrix(np.eye(algebra.size))


def zero(algebra):
    return Element(algebra, np.zeros(algebra.dim))


# --- basic arithmetic -------------------------------------------------------

def jordan_product(x, y):
    """The Jordan product x*y; commutative, not associative."""
    _require_same_algebra(x, y)
    a = x.algebra
    if a.kind == "spin":
        x1, xp = x.coords[0], x.coords[1:]
        y1, yp = y.coords[0], y.coords[1:]
        first = x1 * y1 + xp @ yp
        rest = x1 * yp + y1 * xp
        return Element(a, np.concatenate(([first], rest)))
    xm, ym = as_matrix(x), as_matrix(y)
    return from_matrix((xm @ ym + ym @ xm) / 2)


def square(x):
    return jordan_product(x, x)


def inner(x, y):
    """Trace form tr(xy) for Sym(r); Euclidean dot for spin factors."""
    _require_same_algebra(x, y)
    if x.algebra.kind == "spin":
        return x.coords @ y.coords
    return np.trace(as_matrix(x) @ as_matrix(y))


def norm(x):
    return float(np.sqrt(abs(inner(x, conj(x))))) if x.is_complex else float(
        np.sqrt(inner(x, x))
    )


def conj(x):
    return Element(x.algebra, np.conj(x.coords))


def determinant(x):
    """Jordan determinant: x1^2 - <x', x'> (bilinear) or det of the matrix."""
    if x.algebra.kind == "spin":
        x1, xp = x.coords[0], x.coords[1:]
        val = x1 * x1 - xp @ xp
    else:
        val = np.linalg.det(as_matrix(x))
    return complex(val) if x.is_complex else float(val)


def jordan_inverse(x):
    """Jordan inverse; for the spin factor (x1, -x')/det(x)."""
    if x.algebra.kind == "spin":
        d = determinant(x)
        if d == 0:
            raise DivisionSingularityError("spin element has zero determinant")
        coords = np.concatenate(([x.coords[0]], -x.coords[1:])) / d
        return Element(x.algebra, coords)
    return from_matrix(np.linalg.inv(as_matrix(x)))


def trace(x):
    if x.algebra.kind == "spin":
        return 2 * x.coords[0]
    return np.trace(as_matrix(x))


# --- idempotents, frames, Peirce decomposition ------------------------------

def is_idempotent(c, tol=FRAME_TOL):
    return norm(jordan_product(c, c) - c) <= tol * max(1.0, norm(c))


def mult_operator(c):
    """Matrix of L(c): y -> c*y in an orthonormal coordinate basis.

    For Sym(r) the coordinates are rescaled (off-diagonal entries by
    sqrt(2)) so that the trace form becomes the Euclidean dot product and
    L(c) is represented by a symmetric matrix.
    """
    a = c.algebra
    if a.kind == "spin":
        c1, cp = c.coords[0], c.coords[1:]
        n = a.dim
        op = np.zeros((n, n))
        op[0, 0] = c1
        op[0, 1:] = cp
        op[1:, 0] = cp
        op[1:, 1:] = c1 * np.eye(n - 1)
        return op
    r = a.size
    iu = _triu_indices(r)
    scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    cm = as_matrix(c)
    dim = a.dim
    op = np.zeros((dim, dim))
    for col in range(dim):
        v = np.zeros(dim)
        v[col] = 1.0
        basis_mat = vec_to_mat(v / scale, r)
        prod = (cm @ basis_mat + basis_mat @ cm) / 2
        op[:, col] = mat_to_vec(prod) * scale
    return op


def primitive_idempotent_check(c, tol=IDEMPOTENT_TOL):
    """True iff c is a nonzero idempotent whose Peirce 1-eigenspace is a line.

    The eigenvalue-1 multiplicity of L(c) is counted spectrally; spectra of
    idempotent multiplications sit near {0, 1/2, 1}.
    """
    if c.is_complex:
        raise ValueError("primitivity is defined for real elements")
    if norm(c) == 0.0:
        return False
    if not is_idempotent(c, tol=tol * max(1.0, norm(c))):
        return False
    eigvals = np.linalg.eigvalsh(mult_operator(c))
    ones = np.sum(np.abs(eigvals - 1.0) <= 0.25)
    return int(ones) == 1


def peirce_components(x, c):
    """Eigencomponents of x under L(c) for any idempotent c (values 1, 1/2, 0).

    Uses the spectral projections 2L^2 - L (eigenvalue 1), 4L - 4L^2
    (eigenvalue 1/2) and I - 3L + 2L^2 (eigenvalue 0), which are exact
    polynomial identities for L = L(c) with c idempotent.
    """
    lx = jordan_product(c, x)
    llx = jordan_product(c, lx)
    x1 = 2 * llx - lx
    xhalf = 4 * lx - 4 * llx
    x0 = x - 3 * lx + 2 * llx
    return x1, xhalf, x0


@dataclass(frozen=True)
class PeirceSplit:
    """Decomposition x = x1 + xhalf + x0 with respect to an idempotent c."""

    c: Element
    x1: Element
    xhalf: Element
    x0: Element

    def reassembled(self):
        return self.x1 + self.xhalf + self.x0


def peirce_decompose(x, c):
    if not primitive_idempotent_check(c):
        raise ValueError("peirce_decompose expects a primitive idempotent")
    x1, xhalf, x0 = peirce_components(x, c)
    return PeirceSplit(c=c, x1=x1, xhalf=xhalf, x0=x0)


@dataclass(frozen=True)
class JordanFrame:
    """Complete system of orthogonal primitive idempotents summing to e."""

    algebra: Algebra
    idempotents: tuple

    def __post_init__(self):
        if len(self.idempotents) != self.algebra.rank:
            raise ValueError("frame size must equal the algebra rank")

    def validate(self, tol=FRAME_TOL):
        cs = self.idempotents
        for i, c in enumerate(cs):
            if norm(jordan_product(c, c) - c) > tol * max(1.0, norm(c)):
                return False
            if not primitive_idempotent_check(c):
                return False
            for j in range(i):
                if norm(jordan_product(c, cs[j])) > tol:
                    return False
        total = cs[0]
        for c in cs[1:]:
            total = total + c
        return norm(total - identity(self.algebra)) <= tol


def standard_frame(algebra):
    if algebra.kind == "spin":
        u = np.zeros(algebra.dim - 1)
        u[0] = 1.0
        return spin_frame(u)
    r = algebra.size
    cs = []
    for i in range(r):
        m = np.zeros((r, r))
        m[i, i] = 1.0
        cs.append(from_matrix(m))
    return JordanFrame(algebra, tuple(cs))


def spin_frame(u):
    """Frame {(1, u)/2, (1, -u)/2} of the spin factor from a unit vector u."""
    u = np.asarray(u, dtype=float)
    nrm = np.linalg.norm(u)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError("spin frame direction must be a unit vector")
    a = spin_factor(u.shape[0] + 1)
    c1 = Element(a, np.concatenate(([1.0], u)) / 2)
    c2 = Element(a, np.concatenate(([1.0], -u)) / 2)
    return JordanFrame(a, (c1, c2))


def frame_vectors(frame):
    """Unit eigenvectors q_i with c_i = q_i q_i^T, for a Sym(r) frame."""
    if frame.algebra.kind != "sym":
        raise ValueError("frame_vectors requires a Sym(r) frame")
    qs = []
    for c in frame.idempotents:
        w, v = np.linalg.eigh(as_matrix(c))
        qs.append(v[:, np.argmax(w)])
    return np.column_stack(qs)


# --- cone membership --------------------------------------------------------

def principal_minors(x, frame):
    """Principal minors along a Jordan frame.

    The l-th entry is the determinant of the projection of x onto the
    subalgebra generated by the first l frame idempotents.  For the spin
    factor this is (<x, c1>/<c1, c1>, det(x)); for Sym(r) the determinant
    of the compression onto the span of the first l frame directions.
    """
    if frame.algebra != x.algebra:
        raise ValueError("frame belongs to a different algebra")
    if not frame.validate():
        raise ValueError("incomplete or invalid Jordan frame")
    if x.algebra.kind == "spin":
        return np.array(
            [peirce_coefficient(x, frame.idempotents[0]), determinant(x)]
        )
    q = frame_vectors(frame)
    m = as_matrix(x)
    r = x.algebra.size
    return np.array(
        [np.linalg.det(q[:, : l + 1].T @ m @ q[:, : l + 1]) for l in range(r)]
    )


def cone_contains(x, frame=None):
    """Membership in the open symmetric cone: all principal minors > 0."""
    if frame is None:
        return in_cone(x)
    return bool(np.all(principal_minors(x, frame) > 0.0))


def in_cone(x):
    """Direct cone test: x1 > |x'| for spin, positive definiteness for Sym."""
    if x.is_complex:
        raise ValueError("cone membership is defined for real elements")
    if x.algebra.kind == "spin":
        return bool(x.coords[0] > np.linalg.norm(x.coords[1:]))
    try:
        np.linalg.cholesky(as_matrix(x))
        return True
    except np.linalg.LinAlgError:
        return False


def cone_margin(x):
    """Distance-like margin of cone membership (min eigenvalue style)."""
    if x.algebra.kind == "spin":
        return float(x.coords[0] - np.linalg.norm(x.coords[1:]))
    return float(np.linalg.eigvalsh(as_matrix(x))[0])


# --- filling radius (pushing a point into the cone along e - c1) -----------

@dataclass(frozen=True)
class FillingResult:
    status: str            # "found" | "not_fillable" | "exceeded"
    radius: float | None = None

    @property
    def found(self):
        return self.status == "found"


R_TOL = 1e-8


def filling_radius(xi, c1, r_max=None):
    """Smallest R with xi + R*(e - c1) in the cone, if one exists.

    Returns ``not_fillable`` when <xi, c1> <= 0 (the first minor can never
    become positive), otherwise brackets exponentially and bisects to
    absolute tolerance 1e-8.  ``exceeded`` is returned when no radius below
    r_max works.
    """
    if not primitive_idempotent_check(c1):
        raise ValueError("filling_radius expects a primitive idempotent")
    if r_max is None:
        r_max = 1e6 * (1.0 + norm(xi))
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if inner(xi, c1) <= 0.0:
        return FillingResult("not_fillable")
    n = identity(xi.algebra) - c1
    if in_cone(xi):
        return FillingResult("found", 0.0)
    hi = 1.0
    while not in_cone(xi + hi * n):
        hi *= 2.0
        if hi > r_max:
            return FillingResult("exceeded")
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > R_TOL:
        mid = (lo + hi) / 2.0
        if in_cone(xi + mid * n):
            hi = mid
        else:
            lo = mid
    return FillingResult("found", hi)


def peirce_coefficient(x, c):
    """Coefficient lambda with x_1-component = lambda * c (normalized pairing)."""
    return inner(x, c) / inner(c, c)


def _v0_determinant(x0, c1):
    """Determinant inside the Peirce-0 subalgebra of a primitive idempotent."""
    a = c1.algebra
    if a.kind == "spin":
        eprime = identity(a) - c1
        return inner(x0, eprime) / inner(eprime, eprime)
    cm = as_matrix(c1)
    w, v = np.linalg.eigh(cm)
    u = v[:, w < 0.5]                      # orthonormal basis of ker(c1)
    return np.linalg.det(u.T @ as_matrix(x0) @ u)


def det_identity_residual(xi, r_shift, c1):
    """Defect of the rank-reduction determinant identity.

    Compares det(xi + R*(e - c1)) with
    lam * det'(xi' + R*e' - (xi_half^2)'/lam), where lam is the Peirce
    coefficient of xi along c1, primes denote Peirce-0 projections and
    xi_half^2 is the Jordan square of the half-component.
    """
    if not primitive_idempotent_check(c1):
        raise ValueError("det_identity_residual expects a primitive idempotent")
    lam = peirce_coefficient(xi, c1)
    if lam == 0.0:
        raise DivisionSingularityError("Peirce coefficient of xi along c1 is zero")
    _, xihalf, xi0 = peirce_components(xi, c1)
    half_sq = square(xihalf)
    _, _, half_sq0 = peirce_components(half_sq, c1)
    eprime = identity(xi.algebra) - c1
    lhs = determinant(xi + r_shift * eprime)
    arg = xi0 + r_shift * eprime - (1.0 / lam) * half_sq0
    rhs = lam * _v0_determinant(arg, c1)
    return abs(lhs - rhs)


# --- rank-2 slice of a higher-rank cone -------------------------------------

def slice_test(xi_tilde, frame):
    """Compare ambient and rank-2 cone membership for an element of the
    upper 2x2 subalgebra.

    Returns (ambient, rank2) where ambient tests xi~ + e' against the full
    cone (e' the identity of the lower block) and rank2 tests xi~ inside the
    rank-2 subalgebra spanned by the first two frame idempotents.  The two
    answers agree.
    """
    a = frame.algebra
    if a.rank < 3:
        raise ValueError("slice_test needs an ambient algebra of rank >= 3")
    if not frame.validate():
        raise ValueError("incomplete or invalid Jordan frame")
    eprime = zero(a)
    for c in frame.idempotents[2:]:
        eprime = eprime + c
    ambient = in_cone_via_minors(xi_tilde + eprime, frame)
    q = frame_vectors(frame)[:, :2]
    m2 = q.T @ as_matrix(xi_tilde) @ q
    rank2 = bool(m2[0, 0] > 0.0 and np.linalg.det(m2) > 0.0)
    return ambient, rank2


def in_cone_via_minors(x, frame):
    return bool(np.all(principal_minors(x, frame) > 0.0))
