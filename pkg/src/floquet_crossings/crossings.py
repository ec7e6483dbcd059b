"""Detection of eigenvalue crossing sets on sampled fields and construction of
the closed surfaces that surround them."""
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .chern import BOUNDARY_GAP_MIN, band_chern
from .errors import (BoundaryDegenerate, Overlap, RadiusTooLarge, SelfIntersection,
                     ThresholdTooCoarse, UnknownGeometry)
from .linalg import gap_values, label_stack
from .manifolds import Loop, slab_mesh, sphere_mesh, tube_mesh

IDENTITY = 0
# ||U - 1||_max is about 2 pi times the eigenphase distance from 0
IDENTITY_SCALE = 2 * np.pi
SHRINK = 0.7
MAX_SHRINK = 5


@dataclass(frozen=True)
class Geometry:
    """Shape of a crossing component.

    ``kind`` is one of ``Point``, ``Loop``, ``Slice``, ``Bulk`` or ``Unknown``.
    ``center`` is a chart point on the component; ``direction`` is the
    winding vector of a loop (per axis, in periods) and ``axis``/``value``
    locate a slice.
    """

    kind: str
    center: tuple = (0.0, 0.0, 0.0)
    direction: tuple = ()
    axis: int = -1
    value: float = 0.0

    @property
    def offset(self):
        """For a loop with direction ``(a, b, 0)``: ``b*x0 - a*x1`` wrapped to (-pi, pi]."""
        if self.kind != "Loop" or self.direction[2] != 0:
            return None
        a, b = self.direction[:2]
        c = b * self.center[0] - a * self.center[1]
        return float(-(np.mod(-c + np.pi, 2 * np.pi) - np.pi))

    def describe(self):
        def r(x):
            return 0.0 if abs(x) < 1e-9 else x

        if self.kind == "Loop":
            off = "" if self.offset is None else f", offset={r(self.offset):.4g}"
            return (f"Loop(direction={self.direction}{off}, "
                    f"through={np.round(self.center, 4).tolist()})")
        if self.kind == "Slice":
            return f"Slice(axis={self.axis}, value={r(self.value):.4g})"
        if self.kind == "Point":
            return f"Point({np.round(self.center, 4).tolist()})"
        return self.kind


@dataclass
class CrossingComponent:
    j: int
    vertices: np.ndarray
    geometry: Geometry
    mesh: object = None
    bbox: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def is_identity(self):
        return self.j == IDENTITY

    def report(self):
        d = {"j": "identity" if self.is_identity else int(self.j),
             "geometry": self.geometry.describe(),
             "vertices": int(len(self.vertices)),
             "bbox": [list(map(float, b)) for b in self.bbox]}
        if self.mesh is not None:
            d["mesh"] = {"kind": self.mesh.geometry, "quads": int(len(self.mesh.quads)),
                         "vertices": int(len(self.mesh.vertices)),
                         "signs": list(self.mesh.signs)}
        return d


def field_labels(field):
    lam, _, _ = label_stack(field.values)
    return lam


def gap_field(field, j, lam=None):
    """Gap after band ``j`` at every grid vertex."""
    lam = field_labels(field) if lam is None else lam
    n = lam.shape[-1]
    if not 1 <= j <= n:
        raise IndexError(f"band index {j} outside 1..{n}")
    return gap_values(lam)[..., j - 1]


def identity_distance(field):
    n = field.n
    return np.max(np.abs(field.values - np.eye(n)), axis=(-1, -2))


def default_threshold(field, lam=None):
    """Three times the 95th percentile of per-edge gap variation."""
    lam = field_labels(field) if lam is None else lam
    g = gap_values(lam)
    var = []
    for ax in range(3):
        d = np.abs(np.diff(g, axis=ax))
        var.append(d.ravel())
    return float(3 * np.percentile(np.concatenate(var), 95))


def _label(mask, grid):
    """26-connected components with periodic wrap; returns (labels, count)."""
    lab, n = ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=int))
    if n == 0:
        return lab, 0
    parent = np.arange(n + 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ax, per in enumerate(grid.periodic):
        if not per:
            continue
        first = np.take(lab, 0, axis=ax)
        last = np.take(lab, -1, axis=ax)
        # faces touch through all 9 neighbour offsets in the face plane
        for s1 in (-1, 0, 1):
            for s2 in (-1, 0, 1):
                shifted = _shift_face(first, s1, s2, grid, ax)
                both = (last > 0) & (shifted > 0)
                for a, b in zip(last[both], shifted[both]):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(n + 1)])
    uniq, new = np.unique(roots[1:], return_inverse=True)
    remap = np.concatenate([[0], new + 1])
    return remap[lab], len(uniq)


def _shift_face(face, s1, s2, grid, ax):
    others = [a for a in range(3) if a != ax]
    out = face
    for s, a, dim in ((s1, others[0], 0), (s2, others[1], 1)):
        if s == 0:
            continue
        if grid.periodic[a]:
            out = np.roll(out, s, axis=dim)
        else:
            out = np.roll(out, s, axis=dim)
            idx = [slice(None)] * 2
            idx[dim] = 0 if s > 0 else -1
            out = out.copy()
            out[tuple(idx)] = 0
    return out


def _lift(indices, grid):
    """BFS over a component assigning lifted index coordinates; returns (lifted, wraps).

    ``wraps`` lists the distinct period vectors (in periods per axis) met
    when the search closes a cycle through the periodic seams.
    """
    sizes = grid.sizes
    per = grid.periodic
    pos = {tuple(int(v) for v in x): i for i, x in enumerate(indices)}
    lifted = [None] * len(indices)
    wraps = set()
    offsets = [tuple(o[a] - 1 for a in range(3)) for o in np.ndindex(3, 3, 3) if o != (1, 1, 1)]
    for start in range(len(indices)):
        if lifted[start] is not None:
            continue
        lifted[start] = tuple(int(v) for v in indices[start])
        queue = deque([start])
        while queue:
            cur = lifted[queue.popleft()]
            for o in offsets:
                raw = (cur[0] + o[0], cur[1] + o[1], cur[2] + o[2])
                base = []
                for ax in range(3):
                    v = raw[ax]
                    if per[ax]:
                        v %= sizes[ax]
                    elif not 0 <= v < sizes[ax]:
                        break
                    base.append(v)
                else:
                    k = pos.get(tuple(base))
                    if k is None:
                        continue
                    if lifted[k] is None:
                        lifted[k] = raw
                        queue.append(k)
                    elif lifted[k] != raw:
                        wraps.add(tuple((raw[a] - lifted[k][a]) // sizes[a] for a in range(3)))
    return np.array(lifted, dtype=int).reshape(-1, 3), sorted(wraps)


def _chart(lifted, grid):
    lo = np.array([b[0] for b in grid.bounds])
    h = np.array([grid.spacing(a) for a in range(3)])
    return lo + lifted * h


def _wrap_value(x, grid, ax):
    if grid.periodic[ax]:
        lo, hi = grid.bounds[ax]
        return lo + np.mod(x - lo, hi - lo)
    return x


def classify(indices, grid):
    """Geometry of a connected vertex set (integer indices, shape (M, 3))."""
    if len(indices) == grid.n_vertices:
        return Geometry("Bulk")
    pts = grid.coords()[tuple(indices.T)]
    if grid.kind == "sphere3":
        chi = pts[:, 0]
        h = grid.spacing(0)
        north, south = np.min(chi) < 0.5 * h, np.max(chi) > np.pi - 0.5 * h
        if north and not south:
            return Geometry("Point", (0.0, 0.0, 0.0))
        if south and not north:
            return Geometry("Point", (np.pi, 0.0, 0.0))
        if not (north or south) and np.ptp(pts[:, 1]) >= np.pi - 1e-9:
            return Geometry("Slice", axis=0, value=float(0.5 * (np.min(chi) + np.max(chi))))
        return Geometry("Unknown")
    if grid.kind in ("sphere_circle", "sphere_cylinder"):
        lifted, wraps = _lift(indices, grid)
        t = _chart(lifted, grid)[:, 2]
        t_wrap = any(w[2] != 0 for w in wraps)
        if not t_wrap and np.ptp(pts[:, 0]) >= np.pi - 1e-9:
            mid = 0.5 * (np.min(t) + np.max(t))
            return Geometry("Slice", axis=2, value=float(_wrap_value(mid, grid, 2)))
        return Geometry("Unknown")
    lifted, wraps = _lift(indices, grid)
    rank = np.linalg.matrix_rank(np.array(wraps)) if wraps else 0
    center = _chart(lifted, grid).mean(axis=0)
    center = tuple(float(_wrap_value(center[a], grid, a)) for a in range(3))
    if rank == 0:
        return Geometry("Point", center)
    if rank == 1:
        w = np.array(wraps[0])
        w = w // np.gcd.reduce(np.abs(w[w != 0]))
        if w[np.nonzero(w)[0][0]] < 0:
            w = -w
        return Geometry("Loop", center, tuple(int(x) for x in w))
    if rank == 2:
        w = np.array(wraps)
        normal = [a for a in range(3) if np.all(w[:, a] == 0)]
        if len(normal) == 1:
            ax = normal[0]
            return Geometry("Slice", center, axis=ax, value=center[ax])
    return Geometry("Unknown", center)


def _components(mask, grid, j):
    lab, n = _label(mask, grid)
    comps = []
    for c in range(1, n + 1):
        idx = np.argwhere(lab == c)
        geom = classify(idx, grid)
        pts = grid.coords()[tuple(idx.T)]
        bbox = tuple((float(pts[:, a].min()), float(pts[:, a].max())) for a in range(3))
        comps.append(CrossingComponent(j, idx, geom, bbox=bbox))
    return comps, lab, n


def _check_split(mask_full, mask_half, grid):
    lab_full, n_full = _label(mask_full, grid)
    lab_half, _ = _label(mask_half, grid)
    for c in range(1, n_full + 1):
        inside = np.unique(lab_half[(lab_full == c) & (lab_half > 0)])
        if len(inside) >= 2:
            raise ThresholdTooCoarse(
                f"component {c} splits into {len(inside)} pieces at half the threshold")


def detect(field, j, threshold=None, lam=None, identity_threshold=None):
    """Connected components of ``{gap_j < threshold}``.

    For ``N >= 3`` clusters that contain near-identity vertices belong to the
    identity set and are left out (see :func:`detect_identity`).
    """
    lam = field_labels(field) if lam is None else lam
    thr = default_threshold(field, lam) if threshold is None else threshold
    g = gap_field(field, j, lam)
    mask = g < thr
    _check_split(mask, g < thr / 2, field.grid)
    comps, lab, _ = _components(mask, field.grid, j)
    if field.n >= 3:
        id_thr = IDENTITY_SCALE * thr if identity_threshold is None else identity_threshold
        near_id = identity_distance(field) < id_thr
        comps = [c for c in comps if not np.any(near_id[tuple(c.vertices.T)])]
    return comps


def detect_identity(field, threshold=None, lam=None):
    """Connected components of ``{||U - 1||_max < threshold}``."""
    if threshold is None:
        threshold = IDENTITY_SCALE * default_threshold(field, lam)
    d = identity_distance(field)
    mask = d < threshold
    _check_split(mask, d < threshold / 2, field.grid)
    comps, _, _ = _components(mask, field.grid, IDENTITY)
    return comps


# ---------------------------------------------------------------------------
# surrounding surfaces

def _other_points(others, grid):
    if not others:
        return np.zeros((0, 3))
    return np.concatenate([grid.coords()[tuple(c.vertices.T)] for c in others])


def _caps(grid):
    """Largest radius allowed along each axis: a quarter of its range."""
    return np.array([grid.periods[a] / 4 if grid.periodic[a]
                     else (grid.bounds[a][1] - grid.bounds[a][0]) / 4 for a in range(3)])


def _clearance(comp, others, grid, axes):
    """Chebyshev distance to the nearest other component over ``axes``, in caps."""
    rest = _other_points(others, grid)
    if not len(rest):
        return np.inf
    caps = _caps(grid)
    lo = np.array([b[0] for b in grid.bounds])
    scale = np.zeros(3)
    scale[list(axes)] = 1.0 / caps[list(axes)]
    box = np.array([grid.periods[a] * scale[a] if grid.periodic[a] and scale[a] > 0 else 1e12
                    for a in range(3)])
    x = lambda p: np.mod((p - lo) * scale, box)  # noqa: E731
    tree = cKDTree(x(rest), boxsize=box)
    d, _ = tree.query(x(grid.coords()[tuple(comp.vertices.T)]), p=np.inf)
    return float(np.min(d))


def _loop_frame(direction):
    w = np.array(direction)
    zero = [a for a in range(3) if w[a] == 0]
    if len(zero) == 2:
        return zero[0], zero[1]
    nz = [a for a in range(3) if w[a] != 0]
    return nz[-1], zero[0]


def _default_radii(comp, others, grid):
    """Half the normalized clearance to other components, at most a quarter range."""
    geom = comp.geometry
    caps = _caps(grid)
    if geom.kind == "Slice":
        axes = (geom.axis,)
    elif geom.kind == "Loop":
        axes = _loop_frame(geom.direction)
    elif geom.kind == "Point":
        if grid.kind == "sphere3":
            axes = (0,)
            # one cell short of the equator keeps antipodal balls apart
            caps = np.full(3, np.pi / 2 - grid.spacing(0))
        else:
            axes = (0, 1, 2)
    else:
        raise UnknownGeometry(f"cannot surround a {geom.kind} component")
    s = min(1.0, 0.5 * _clearance(comp, others, grid, axes)) if others else 1.0
    rad = [float(s * caps[a]) for a in axes]
    if geom.kind == "Slice":
        # the slab must contain the whole (possibly thick) component
        ax = geom.axis
        pts = grid.coords()[tuple(comp.vertices.T)][:, ax]
        d = np.abs(pts - geom.value)
        if grid.periodic[ax]:
            d = np.minimum(d, grid.periods[ax] - d)
        rad[0] = max(rad[0], float(np.max(d)) + grid.spacing(ax))
    return tuple(rad)


def build_mesh(comp, grid, radii, resolution=None):
    geom = comp.geometry
    if geom.kind == "Slice":
        r = radii[0]
        ax = geom.axis
        lo, hi = geom.value - r, geom.value + r
        if grid.periodic[ax]:
            lo, hi = _wrap_value(lo, grid, ax), _wrap_value(hi, grid, ax)
        else:
            b0, b1 = grid.bounds[ax]
            if lo <= b0 or hi >= b1:
                raise RadiusTooLarge("slab leaves the chart")
        return slab_mesh(grid, lo, hi, axis=ax, resolution=resolution or (48, 48))
    if geom.kind == "Loop":
        e1, e2 = _loop_frame(geom.direction)
        span = np.array(geom.direction, float) * np.array(
            [p if np.isfinite(p) else 0.0 for p in grid.periods])
        basis = np.eye(3)
        loop = Loop(tuple(geom.center), tuple(span), tuple(basis[e1]), tuple(basis[e2]))
        return tube_mesh(grid, loop, radii, resolution or (64, 64))
    if geom.kind == "Point":
        if grid.kind == "sphere3":
            return sphere_mesh(grid, geom.center, radii[0], resolution or (16, 32))
        return sphere_mesh(grid, geom.center, radii, resolution or (24, 48))
    raise UnknownGeometry(f"cannot surround a {geom.kind} component")


def boundary_gaps(mesh, evaluator):
    lam, _, _ = label_stack(np.asarray(evaluator(mesh.vertices), dtype=complex))
    return gap_values(lam)


def _check_overlap(mesh, others, grid):
    rest = _other_points(others, grid)
    if not len(rest):
        return
    h = np.array([grid.spacing(a) for a in range(3)])
    lo = np.array([b[0] for b in grid.bounds])
    box = np.array([grid.sizes[a] if grid.periodic[a] else 1e9 for a in range(3)], float)

    def scaled(p):
        x = (p - lo) / h
        return np.where(np.isfinite(box) & (box < 1e9), np.mod(x, box), x)

    tree = cKDTree(scaled(rest), boxsize=np.where(box < 1e9, box, 1e12))
    d, _ = tree.query(scaled(grid.wrap(mesh.vertices)))
    if np.min(d) < 1.0:
        raise Overlap("surface passes within one cell of another crossing component")


def surround(comp, evaluator, grid, others=(), radii=None, resolution=None,
             gap_min=BOUNDARY_GAP_MIN):
    """Attach a closed surface mesh around ``comp``.

    With ``radii`` unset, radii default to half the clearance to other
    components (at most a quarter of the axis) and shrink by 0.7 until the
    spectrum is non-degenerate on the surface.
    """
    auto = radii is None
    rad = _default_radii(comp, list(others), grid) if auto else tuple(np.atleast_1d(radii))
    for _ in range(MAX_SHRINK + 1):
        try:
            mesh = build_mesh(comp, grid, rad, resolution)
            g = boundary_gaps(mesh, evaluator)
            if np.min(g) <= gap_min:
                raise BoundaryDegenerate(f"eigenvalues nearly coincide on the surface "
                                         f"(min gap {np.min(g):.3g})")
            _check_overlap(mesh, list(others), grid)
            return replace(comp, mesh=mesh, meta={**comp.meta, "radii": tuple(map(float, rad))})
        except (BoundaryDegenerate, RadiusTooLarge, SelfIntersection, Overlap):
            if not auto:
                raise
            rad = tuple(SHRINK * r for r in rad)
    raise BoundaryDegenerate("no admissible surrounding surface found")


def ch_local(comp, evaluator, band=None, gap_min=BOUNDARY_GAP_MIN):
    """Local charge of a surrounded component.

    For a crossing of band ``j`` this is the Chern number of band ``j`` over
    its surface; for an identity component pass the band ``band`` wanted.
    """
    if comp.mesh is None:
        raise ValueError("component has no surface; call surround first")
    b = comp.j if band is None else band
    if b == IDENTITY:
        raise ValueError("identity components need an explicit band")
    return band_chern(comp.mesh, evaluator, b, gap_min).value
