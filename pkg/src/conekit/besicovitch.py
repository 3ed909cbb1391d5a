"""Families of overlapping rotated rectangles with disjoint translates, and
the 3D boxes built on top of them.

``build_perron_rectangles`` produces N = 2^k unit x (1/N) rectangles whose
directions fan over a fixed sector of width 1/3 radian.  Base anchors are
slid by a bisection scheme: at every dyadic level the right half of each
cluster is translated so that its pencil of center lines crosses the left
half's pencil at a prescribed height inside the rectangles.  Crossing
heights are staggered across clusters, so different height bands absorb the
overlap of different dyadic scales and the measure of the union keeps
shrinking as k grows, while the translated copies R_j + 5 u_j stay pairwise
disjoint (their center lines would only meet far below the translated band).
Disjointness is still verified exactly with separating-axis tests; if a
placement ever failed them, the crossing heights would be flattened toward
the common-anchor arrangement, which separates trivially.

``build_boxes`` lifts a family to the 3D boxes: E_j = [0,1] x R_j and the
rotated box F_j spanned by (1,-u_j), (1,u_j), (0,u_j-perp) with side 1/sqrt2
along the light-ray direction, plus the translates F_j + 5*(-1, u_j).

``union_measure`` rasterizes by horizontal scanlines with exact per-line
interval unions, so the only error is the midpoint rule in y; the reported
bound is the conservative perimeter certificate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionFailedError

SHIFT = 5.0                 # translation multiple along u_j, the tested default
SECTOR = 1.0 / 3.0          # angular spread of the direction fan, radians
BALL_RADIUS_2D = 10.0
BALL_RADIUS_3D = 20.0


@dataclass(frozen=True)
class Rect2:
    """Rotated rectangle: unit long axis u, width = 1/N of its family."""

    center: np.ndarray
    direction: np.ndarray
    length: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        u = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError("rectangle direction must be a unit vector")
        object.__setattr__(self, "direction", u)

    @property
    def normal(self):
        u = self.direction
        return np.array([-u[1], u[0]])

    def vertices(self):
        hl = 0.5 * self.length * self.direction
        hw = 0.5 * self.width * self.normal
        c = self.center
        return np.array([c + hl + hw, c + hl - hw, c - hl - hw, c - hl + hw])

    def translated(self, shift):
        return Rect2(self.center + shift, self.direction, self.length, self.width)


@dataclass(frozen=True)
class RectangleFamily:
    k: int
    rects: tuple
    shift: float = SHIFT

    @property
    def n_rects(self):
        return len(self.rects)

    def translates(self):
        return tuple(
            r.translated(self.shift * r.direction) for r in self.rects
        )

    def total_area(self):
        return float(sum(r.length * r.width for r in self.rects))


@dataclass(frozen=True)
class Box3:
    """Box given by center, orthonormal axis rows and half extents."""

    center: np.ndarray
    axes: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        axes = np.asarray(self.axes, dtype=float)
        if np.max(np.abs(axes @ axes.T - np.eye(3))) > 1e-12:
            raise ValueError("box axes must be orthonormal")
        object.__setattr__(self, "axes", axes)
        he = np.asarray(self.half_extents, dtype=float)
        if np.any(he <= 0):
            raise ValueError("half extents must be positive")
        object.__setattr__(self, "half_extents", he)

    def volume(self):
        return float(8.0 * np.prod(self.half_extents))

    def vertices(self):
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        return self.center + (signs * self.half_extents) @ self.axes

    def contains(self, points, slack=0.0):
        """True where all box-frame coordinates are within the extents."""
        local = (np.atleast_2d(points) - self.center) @ self.axes.T
        return np.all(np.abs(local) <= self.half_extents + slack, axis=1)

    def translated(self, shift):
        return Box3(self.center + np.asarray(shift), self.axes, self.half_extents)


@dataclass(frozen=True)
class BoxFamily:
    k: int
    boxes_e: tuple
    boxes_f: tuple
    boxes_f_shifted: tuple
    light_rays: np.ndarray        # rows n_j = (1, u_j)
    normals: np.ndarray           # rows ntilde_j = (-1, u_j)

    @property
    def n_boxes(self):
        return len(self.boxes_f)


# --- construction ------------------------------------------------------------

MERGE_RATIO = 0.9           # per-level shrink ratio of the bisection scheme


def _perron_anchors(k, dtheta, flatten=1.0):
    """Base offsets of the bisection scheme.

    At level i the right half of every cluster slides left so that the two
    half-pencils cross at height MERGE_RATIO^(i+1): finest pairs branch near
    the top, the coarsest merge forms the trunk near the base, exactly as in
    the triangle sprouting construction.
    """
    n = 2**k
    anchors = np.zeros(n)
    for level in range(k):
        size = 2**level
        gap = size * dtheta
        height = flatten * MERGE_RATIO ** (level + 1)
        for start in range(0, n, 2 * size):
            anchors[start + size : start + 2 * size] -= gap * height
    return anchors


def build_perron_rectangles(k):
    """Deterministic bisection-scheme family of N = 2^k rectangles.

    The translated copies R_j + 5 u_j are verified pairwise disjoint with
    exact separating-axis tests; if a raw placement failed, the crossing
    heights would be flattened (eventually reaching the common-anchor
    arrangement, which separates by 5*sin(dtheta) > width).
    """
    if not 1 <= k <= 12:
        raise ValueError("construction level k must be in 1..12")
    n = 2**k
    width = 1.0 / n
    dtheta = SECTOR / n
    thetas = (np.arange(n) - (n - 1) / 2.0) * dtheta
    directions = np.column_stack([np.sin(thetas), np.cos(thetas)])
    flatten = 1.0
    for _ in range(40):
        anchors = _perron_anchors(k, dtheta, flatten)
        anchors -= anchors.mean()
        rects = tuple(
            Rect2(
                center=np.array([anchors[j], 0.0]) + 0.5 * directions[j],
                direction=directions[j],
                length=1.0,
                width=width,
            )
            for j in range(n)
        )
        family = RectangleFamily(k=k, rects=rects)
        if translates_disjoint(family) and _family_in_ball(family):
            return family
        flatten *= 0.7
    raise ConstructionFailedError(
        f"no disjoint placement found for k={k}"
    )


def _family_in_ball(family, radius=BALL_RADIUS_2D):
    verts = np.concatenate(
        [r.vertices() for r in family.rects]
        + [r.vertices() for r in family.translates()]
    )
    return bool(np.max(np.linalg.norm(verts, axis=1)) <= radius)


# --- exact intersection predicates -------------------------------------------

def rects_intersect(r1, r2):
    """True iff the rectangle interiors overlap (separating-axis test)."""
    d = r2.center - r1.center
    for axis in (r1.direction, r1.normal, r2.direction, r2.normal):
        radius1 = (
            0.5 * r1.length * abs(axis @ r1.direction)
            + 0.5 * r1.width * abs(axis @ r1.normal)
        )
        radius2 = (
            0.5 * r2.length * abs(axis @ r2.direction)
            + 0.5 * r2.width * abs(axis @ r2.normal)
        )
        if abs(axis @ d) >= radius1 + radius2:
            return False
    return True


def boxes_intersect(b1, b2):
    """Separating-axis test for oriented 3D boxes (15 candidate axes)."""
    d = b2.center - b1.center
    axes = [b1.axes[i] for i in range(3)] + [b2.axes[i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            cross = np.cross(b1.axes[i], b2.axes[j])
            nrm = np.linalg.norm(cross)
            if nrm > 1e-14:
                axes.append(cross / nrm)
    for axis in axes:
        r1 = np.sum(b1.half_extents * np.abs(b1.axes @ axis))
        r2 = np.sum(b2.half_extents * np.abs(b2.axes @ axis))
        if abs(axis @ d) >= r1 + r2:
            return False
    return True


def translates_disjoint(family):
    """Exact pairwise disjointness of the translated rectangles or boxes."""
    if isinstance(family, RectangleFamily):
        shapes = family.translates()
        overlap = rects_intersect
    elif isinstance(family, BoxFamily):
        shapes = family.boxes_f_shifted
        overlap = boxes_intersect
    else:
        shapes = tuple(family)
        overlap = rects_intersect if isinstance(shapes[0], Rect2) else boxes_intersect
    m = len(shapes)
    for i in range(m):
        for j in range(i + 1, m):
            if overlap(shapes[i], shapes[j]):
                return False
    return True


# --- union measure -----------------------------------------------------------

def union_measure(shapes, resolution):
    """Measure of a union of rectangles by exact-interval scanlines.

    Every horizontal line meets each rectangle in an interval computed in
    closed form; per-line interval unions are exact, so the only error is the
    midpoint rule across lines.  Returns (measure, error_bound) with the
    conservative certificate error = total_perimeter * resolution * 2.

    Accepts a RectangleFamily (its overlapping rectangles), a BoxFamily
    (planar projections of the E_j, which reproduce the R_j) or a plain
    sequence of Rect2.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    rects = _as_rect_list(shapes)
    verts = np.concatenate([r.vertices() for r in rects])
    ymin, ymax = verts[:, 1].min(), verts[:, 1].max()
    n_rows = int(np.ceil((ymax - ymin) / resolution))
    chunk = max(1, min(n_rows, 2**22 // max(len(rects), 1)))

    covered = 0.0
    for row0 in range(0, n_rows, chunk):
        rows = min(chunk, n_rows - row0)
        ys = ymin + (row0 + np.arange(rows) + 0.5) * resolution
        covered += _scanline_coverage(rects, ys)
    measure = float(resolution * covered)

    total_perimeter = sum(2.0 * (r.length + r.width) for r in rects)
    error_bound = float(total_perimeter * resolution * 2.0)
    return measure, error_bound


def _scanline_coverage(rects, ys):
    """Sum over rows of the exact 1D measure of the union's slice."""
    n_rows = ys.shape[0]
    lo = np.full((n_rows, len(rects)), np.inf)
    hi = np.full((n_rows, len(rects)), -np.inf)
    for idx, rect in enumerate(rects):
        v = rect.vertices()
        for a in range(4):
            p, q = v[a], v[(a + 1) % 4]
            if p[1] == q[1]:
                continue
            t = (ys - p[1]) / (q[1] - p[1])
            mask = (t >= 0.0) & (t <= 1.0)
            xs = p[0] + t * (q[0] - p[0])
            lo[mask, idx] = np.minimum(lo[mask, idx], xs[mask])
            hi[mask, idx] = np.maximum(hi[mask, idx], xs[mask])

    order = np.argsort(lo, axis=1)
    lo_sorted = np.take_along_axis(lo, order, axis=1)
    hi_sorted = np.take_along_axis(hi, order, axis=1)
    running = np.maximum.accumulate(hi_sorted, axis=1)
    prev = np.concatenate(
        [np.full((n_rows, 1), -np.inf), running[:, :-1]], axis=1
    )
    start = np.maximum(lo_sorted, prev)
    contrib = np.clip(hi_sorted - start, 0.0, None)
    contrib[~np.isfinite(contrib)] = 0.0
    return float(contrib.sum())


def _as_rect_list(shapes):
    if isinstance(shapes, RectangleFamily):
        return list(shapes.rects)
    if isinstance(shapes, BoxFamily):
        return [_project_box(b) for b in shapes.boxes_e]
    return list(shapes)


def _project_box(box):
    """Planar rectangle obtained by dropping the first coordinate of an E_j
    style box (one axis along e1, the others planar)."""
    planar_axes = [i for i in range(3) if abs(box.axes[i, 0]) < 1e-12]
    if len(planar_axes) != 2:
        raise ValueError("box is not aligned with the first coordinate axis")
    i, j = planar_axes
    u = box.axes[i, 1:]
    length = 2.0 * box.half_extents[i]
    width = 2.0 * box.half_extents[j]
    if length < width:
        i, j = j, i
        u = box.axes[i, 1:]
        length, width = width, length
    return Rect2(center=box.center[1:], direction=u, length=length, width=width)


def mc_union_measure(shapes, n_samples, seed):
    """Monte-Carlo cross-check of the union measure over the bounding box."""
    rects = _as_rect_list(shapes)
    verts = np.concatenate([r.vertices() for r in rects])
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.uniform(lo, hi, size=(n_samples, 2))
    covered = np.zeros(n_samples, dtype=bool)
    for rect in rects:
        local = pts - rect.center
        along = local @ rect.direction
        across = local @ rect.normal
        covered |= (np.abs(along) <= rect.length / 2) & (
            np.abs(across) <= rect.width / 2
        )
    area_box = float(np.prod(hi - lo))
    p = covered.mean()
    est = area_box * p
    stderr = area_box * np.sqrt(max(p * (1 - p), 0.0) / n_samples)
    return float(est), float(stderr)


# --- 3D boxes ----------------------------------------------------------------

def build_boxes(family):
    """The boxes E_j = [0,1] x R_j, the rotated inner boxes F_j and the
    translates F_j + 5*(-1, u_j)."""
    n = family.n_rects
    width = 1.0 / n
    boxes_e, boxes_f, boxes_ft = [], [], []
    rays, normals = [], []
    sqrt2 = np.sqrt(2.0)
    for rect in family.rects:
        u = rect.direction
        uperp = rect.normal
        bc = rect.center
        e_box = Box3(
            center=np.array([0.5, bc[0], bc[1]]),
            axes=np.array(
                [[1.0, 0.0, 0.0], [0.0, u[0], u[1]], [0.0, uperp[0], uperp[1]]]
            ),
            half_extents=np.array([0.5, 0.5, width / 2]),
        )
        a1 = np.array([1.0, -u[0], -u[1]]) / sqrt2
        a2 = np.array([1.0, u[0], u[1]]) / sqrt2
        a3 = np.array([0.0, uperp[0], uperp[1]])
        f_box = Box3(
            center=np.array([0.5, bc[0], bc[1]]),
            axes=np.array([a1, a2, a3]),
            half_extents=np.array([sqrt2 / 4, sqrt2 / 4, width / 2]),
        )
        ntilde = np.array([-1.0, u[0], u[1]])
        boxes_e.append(e_box)
        boxes_f.append(f_box)
        boxes_ft.append(f_box.translated(family.shift * ntilde))
        rays.append(np.array([1.0, u[0], u[1]]))
        normals.append(ntilde)
    return BoxFamily(
        k=family.k,
        boxes_e=tuple(boxes_e),
        boxes_f=tuple(boxes_f),
        boxes_f_shifted=tuple(boxes_ft),
        light_rays=np.array(rays),
        normals=np.array(normals),
    )


def box_geometry_check(boxes):
    """Verify the box-family invariants; returns a dict of named booleans."""
    n = boxes.n_boxes
    report = {}
    vol_f = np.array([b.volume() for b in boxes.boxes_f])
    report["volumes_f"] = bool(np.max(np.abs(vol_f - 1.0 / (2 * n))) <= 1e-12)
    vol_ft = np.array([b.volume() for b in boxes.boxes_f_shifted])
    report["total_translate_volume"] = bool(abs(vol_ft.sum() - 0.5) <= 1e-12)
    report["f_inside_e"] = all(
        bool(np.all(e.contains(f.vertices(), slack=1e-12)))
        for e, f in zip(boxes.boxes_e, boxes.boxes_f)
    )
    report["translates_disjoint"] = translates_disjoint(boxes)
    report["normals_have_sqrt2_length"] = bool(
        np.max(np.abs(np.linalg.norm(boxes.normals, axis=1) - np.sqrt(2.0)))
        <= 1e-12
    )
    shift_ok = True
    for f, ft, ntilde in zip(boxes.boxes_f, boxes.boxes_f_shifted, boxes.normals):
        if np.max(np.abs(ft.center - f.center - SHIFT * ntilde)) > 1e-12:
            shift_ok = False
    report["translates_are_shifts"] = shift_ok
    all_verts = np.concatenate(
        [b.vertices() for b in boxes.boxes_f]
        + [b.vertices() for b in boxes.boxes_f_shifted]
    )
    max_norm = float(np.max(np.linalg.norm(all_verts, axis=1)))
    report["max_vertex_norm"] = max_norm
    report["inside_ball"] = bool(max_norm <= BALL_RADIUS_3D)
    report["projections_match"] = _projections_match(boxes)
    report["all_passed"] = all(
        v for key, v in report.items() if isinstance(v, bool)
    )
    return report


def _projections_match(boxes):
    """Planar projections of the translated E_j equal the translated R_j."""
    for e_box, ntilde in zip(boxes.boxes_e, boxes.normals):
        e_shift = e_box.translated(SHIFT * ntilde)
        proj = _project_box(e_shift)
        u = ntilde[1:]
        expected_center = e_box.center[1:] + SHIFT * u
        if np.max(np.abs(proj.center - expected_center)) > 1e-12:
            return False
        if abs(abs(proj.direction @ u) - 1.0) > 1e-12:
            return False
    return True


# --- serialization -----------------------------------------------------------

SCHEMA_VERSION = 1


def family_to_json(family):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "rectangle_family",
        "k": family.k,
        "n_rects": family.n_rects,
        "shift": family.shift,
        "rects": [
            {
                "center": rect.center.tolist(),
                "direction": rect.direction.tolist(),
                "length": rect.length,
                "width": rect.width,
            }
            for rect in family.rects
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def family_from_json(text):
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("unsupported schema version")
    rects = tuple(
        Rect2(
            center=np.array(r["center"]),
            direction=np.array(r["direction"]),
            length=r["length"],
            width=r["width"],
        )
        for r in doc["rects"]
    )
    return RectangleFamily(k=doc["k"], rects=rects, shift=doc["shift"])


def boxes_to_json(boxes):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "box_family",
        "k": boxes.k,
        "n_boxes": boxes.n_boxes,
        "shift": SHIFT,
        "boxes": [
            {
                "e": _box_doc(e_box),
                "f": _box_doc(f_box),
                "f_shifted": _box_doc(ft_box),
                "light_ray": ray.tolist(),
                "normal": ntilde.tolist(),
            }
            for e_box, f_box, ft_box, ray, ntilde in zip(
                boxes.boxes_e, boxes.boxes_f, boxes.boxes_f_shifted,
                boxes.light_rays, boxes.normals,
            )
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def _box_doc(box):
    return {
        "center": box.center.tolist(),
        "axes": box.axes.tolist(),
        "half_extents": box.half_extents.tolist(),
    }


def _box_from_doc(doc):
    return Box3(
        center=np.array(doc["center"]),
        axes=np.array(doc["axes"]),
        half_extents=np.array(doc["half_extents"]),
    )


def boxes_from_json(text):
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("unsupported schema version")
    entries = doc["boxes"]
    return BoxFamily(
        k=doc["k"],
        boxes_e=tuple(_box_from_doc(b["e"]) for b in entries),
        boxes_f=tuple(_box_from_doc(b["f"]) for b in entries),
        boxes_f_shifted=tuple(_box_from_doc(b["f_shifted"]) for b in entries),
        light_rays=np.array([b["light_ray"] for b in entries]),
        normals=np.array([b["normal"] for b in entries]),
    )


def family_to_svg(family, margin=0.5):
    """SVG rendering of the rectangles and their translates."""
    groups = [
        ("#1f77b4", family.rects),
        ("#d62728", family.translates()),
    ]
    verts = np.concatenate([r.vertices() for _, rs in groups for r in rs])
    lo, hi = verts.min(axis=0) - margin, verts.max(axis=0) + margin
    span = hi - lo
    scale = 800.0 / span.max()
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{span[0] * scale:.0f}" height="{span[1] * scale:.0f}" '
        f'viewBox="0 0 {span[0] * scale:.2f} {span[1] * scale:.2f}">'
    ]
    for color, rs in groups:
        for rect in rs:
            pts = " ".join(
                f"{(v[0] - lo[0]) * scale:.3f},{(hi[1] - v[1]) * scale:.3f}"
                for v in rect.vertices()
            )
            parts.append(
                f'<polygon points="{pts}" fill="{color}" fill-opacity="0.35" '
                f'stroke="{color}" stroke-width="0.5"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
