"""Parameter grids on closed (or cylindrical) 3-manifolds and closed quad meshes.

Charts
------
``torus3``          (k1, k2, t) in [-pi, pi)^2 x [0, 1), all periodic
``torus_cylinder``  (k1, k2, t) in [-pi, pi)^2 x [0, 1], t clamped
``sphere3``         (chi, theta, phi) hyperspherical angles on S^3 = SU(2)
``sphere_circle``   (theta, phi, t) on S^2 x S^1
``sphere_cylinder`` (theta, phi, t) on S^2 x [0, 1]

Every chart carries an ``orientation`` sign relating the coordinate order to
the orientation of the manifold; winding numbers and Chern numbers are
multiplied by it.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSize, RadiusTooLarge, SelfIntersection

TWO_PI = 2 * np.pi

# (low, high, periodic) per axis
_AXES = {
    "torus3": ((-np.pi, np.pi, True), (-np.pi, np.pi, True), (0.0, 1.0, True)),
    "torus_cylinder": ((-np.pi, np.pi, True), (-np.pi, np.pi, True), (0.0, 1.0, False)),
    "sphere3": ((0.0, np.pi, False), (0.0, np.pi, False), (0.0, TWO_PI, True)),
    "sphere_circle": ((0.0, np.pi, False), (0.0, TWO_PI, True), (0.0, 1.0, True)),
    "sphere_cylinder": ((0.0, np.pi, False), (0.0, TWO_PI, True), (0.0, 1.0, False)),
}

# Chart orientation relative to the manifold orientation used for all
# reported integers. Fixed once from the anchor values (identity map on
# SU(2) has W3 = +1; torus coordinates (k1, k2, t) are positive).
CHART_ORIENTATION = {
    "torus3": 1,
    "torus_cylinder": 1,
    "sphere3": 1,
    "sphere_circle": 1,
    "sphere_cylinder": 1,
}

# periodic counterpart of each cylinder chart (used when gluing)
CLOSED_KIND = {"torus_cylinder": "torus3", "sphere_cylinder": "sphere_circle"}
CYLINDER_KIND = {v: k for k, v in CLOSED_KIND.items()}

# axis whose level sets are the "time slices" (or chi-spheres on S^3)
SLICE_AXIS = {"torus3": 2, "torus_cylinder": 2, "sphere3": 0, "sphere_circle": 2,
              "sphere_cylinder": 2}


@dataclass(frozen=True)
class Grid3:
    """Uniform vertex grid on one of the supported charts."""

    kind: str
    sizes: tuple
    orientation: int = 1

    def __post_init__(self):
        if self.kind not in _AXES:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if len(self.sizes) != 3 or any(int(n) < 4 for n in self.sizes):
            raise InvalidSize(f"every axis needs at least 4 vertices, got {self.sizes}")

    @property
    def periodic(self):
        return tuple(a[2] for a in _AXES[self.kind])

    @property
    def bounds(self):
        return tuple((a[0], a[1]) for a in _AXES[self.kind])

    @property
    def periods(self):
        return tuple((hi - lo) if per else np.inf for (lo, hi, per) in _AXES[self.kind])

    @property
    def is_cylinder(self):
        return self.kind in CLOSED_KIND

    @property
    def n_vertices(self):
        return int(np.prod(self.sizes))

    def spacing(self, axis):
        lo, hi, per = _AXES[self.kind][axis]
        n = self.sizes[axis]
        return (hi - lo) / (n if per else n - 1)

    def axis_values(self, axis):
        lo, hi, per = _AXES[self.kind][axis]
        n = self.sizes[axis]
        if per:
            return lo + (hi - lo) * np.arange(n) / n
        return np.linspace(lo, hi, n)

    def coords(self):
        """Chart coordinates of all vertices, shape ``sizes + (3,)``."""
        a, b, c = (self.axis_values(i) for i in range(3))
        return np.stack(np.meshgrid(a, b, c, indexing="ij"), axis=-1)

    def points(self):
        return self.coords().reshape(-1, 3)

    def reversed(self):
        return Grid3(self.kind, self.sizes, -self.orientation)

    def wrap(self, points):
        """Map chart points into the fundamental domain along periodic axes."""
        p = np.array(points, dtype=float, copy=True)
        for ax, (lo, hi, per) in enumerate(_AXES[self.kind]):
            if per:
                p[..., ax] = lo + np.mod(p[..., ax] - lo, hi - lo)
        return p

    def chart_distance(self, p, q):
        """Per-axis displacement ``q - p`` using the shortest periodic image."""
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        for ax, per in enumerate(self.periodic):
            if per:
                L = self.periods[ax]
                d[..., ax] = (d[..., ax] + L / 2) % L - L / 2
        return d


def build_grid(kind, sizes, orientation=None):
    """Uniform grid of the given kind; orientation defaults to the chart convention."""
    if orientation is None:
        orientation = CHART_ORIENTATION.get(kind, 1)
    return Grid3(kind, tuple(int(n) for n in sizes), int(orientation))


def sphere3_embedding(points):
    """(chi, theta, phi) -> (x, y, z, w) on the unit 3-sphere."""
    p = np.asarray(points, dtype=float)
    chi, th, ph = p[..., 0], p[..., 1], p[..., 2]
    s = np.sin(chi)
    return np.stack([np.cos(chi), s * np.sin(th) * np.cos(ph),
                     s * np.sin(th) * np.sin(ph), s * np.cos(th)], axis=-1)


@dataclass
class ClosedSurfaceMesh:
    """Oriented closed quad mesh whose vertices live in a grid chart.

    ``quads`` list vertex indices in traversal order. Polar quads may repeat
    an index (a collapsed edge). ``component`` assigns each quad to a
    connected piece and ``signs[c]`` is the orientation factor of piece ``c``
    (outward-normal convention combined with the chart orientation).
    """

    vertices: np.ndarray
    quads: np.ndarray
    geometry: str
    signs: tuple
    component: np.ndarray
    names: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def quad_sign(self):
        return np.asarray(self.signs)[self.component]

    @property
    def sign(self):
        return self.signs

    def edges(self):
        q = self.quads
        e = np.stack([q, np.roll(q, -1, axis=1)], axis=-1).reshape(-1, 2)
        return e[e[:, 0] != e[:, 1]]

    def is_closed(self):
        """Every edge shared by exactly two quads with opposite traversal."""
        e = self.edges()
        directed = {}
        for a, b in map(tuple, e):
            directed[(a, b)] = directed.get((a, b), 0) + 1
        for (a, b), n in directed.items():
            if n != 1 or directed.get((b, a), 0) != 1:
                return False
        return True

    def euler_characteristic(self, comp=None):
        quads = self.quads if comp is None else self.quads[self.component == comp]
        e = np.stack([quads, np.roll(quads, -1, axis=1)], axis=-1).reshape(-1, 2)
        e = e[e[:, 0] != e[:, 1]]
        n_e = len({tuple(sorted(x)) for x in map(tuple, e)})
        n_v = len(np.unique(quads))
        return n_v - n_e + len(quads)

    def flipped(self):
        return ClosedSurfaceMesh(self.vertices, self.quads, self.geometry,
                                 tuple(-s for s in self.signs), self.component,
                                 self.names, dict(self.meta))

    def refined(self):
        """Same surface at twice the resolution (rebuilt from the recipe)."""
        recipe = self.meta.get("recipe")
        if recipe is None:
            raise ValueError("mesh has no rebuild recipe")
        fn, kwargs = recipe
        res = tuple(2 * r for r in kwargs["resolution"])
        return fn(**{**kwargs, "resolution": res})


def _surface(fn, na, nb, wrap_a, wrap_b, collapse_a=False):
    """Quad mesh of a parametrized surface ``fn(sa, sb) -> chart point``.

    ``sa, sb`` run over [0, 1]; wrapped directions drop the duplicate end row.
    With ``collapse_a`` the rows ``sa = 0`` and ``sa = 1`` are single (polar)
    vertices.
    """
    ra = na if wrap_a else na + 1
    rb = nb if wrap_b else nb + 1
    sa = np.arange(ra) / na
    sb = np.arange(rb) / nb
    A, B = np.meshgrid(sa, sb, indexing="ij")
    idx = np.arange(ra * rb).reshape(ra, rb)
    pts = fn(A, B).reshape(-1, 3)
    if collapse_a:
        keep = np.ones(ra * rb, dtype=bool)
        keep[idx[0, 1:]] = False
        keep[idx[-1, 1:]] = False
        idx[0, :] = idx[0, 0]
        idx[-1, :] = idx[-1, 0]
        remap = -np.ones(ra * rb, dtype=int)
        remap[keep] = np.arange(keep.sum())
        idx = remap[idx]
        pts = pts[keep]
    quads = []
    for i in range(na):
        i1 = (i + 1) % ra
        for j in range(nb):
            j1 = (j + 1) % rb
            quads.append((idx[i, j], idx[i1, j], idx[i1, j1], idx[i, j1]))
    return pts, np.array(quads, dtype=int)


def _orientation_sign(fn, outward, grid, sa=0.37, sb=0.41, h=1e-5):
    da = (fn(np.array(sa + h), np.array(sb)) - fn(np.array(sa - h), np.array(sb))).reshape(3)
    db = (fn(np.array(sa), np.array(sb + h)) - fn(np.array(sa), np.array(sb - h))).reshape(3)
    n = np.asarray(outward(sa, sb), dtype=float).reshape(3)
    s = np.sign(np.linalg.det(np.stack([n, da, db])))
    return int(s) * grid.orientation


def _combine(pieces, geometry, names=(), meta=None):
    verts, quads, comp, signs = [], [], [], []
    offset = 0
    for c, (pts, q, s) in enumerate(pieces):
        verts.append(pts)
        quads.append(q + offset)
        comp.append(np.full(len(q), c))
        signs.append(s)
        offset += len(pts)
    return ClosedSurfaceMesh(np.concatenate(verts), np.concatenate(quads), geometry,
                             tuple(signs), np.concatenate(comp), tuple(names), meta or {})


def _sphere_param(axes, fixed_axis, fixed_value):
    """(theta, phi) lat-long sphere on the two axes other than ``fixed_axis``."""
    ath, aph = axes

    def fn(sa, sb):
        p = np.zeros(np.shape(sa) + (3,))
        p[..., fixed_axis] = fixed_value
        p[..., ath] = np.pi * sa
        p[..., aph] = TWO_PI * sb
        return p
    return fn


def _torus_param(axes, fixed_axis, fixed_value):
    a1, a2 = axes

    def fn(sa, sb):
        p = np.zeros(np.shape(sa) + (3,))
        p[..., fixed_axis] = fixed_value
        p[..., a1] = -np.pi + TWO_PI * sa
        p[..., a2] = -np.pi + TWO_PI * sb
        return p
    return fn


def _level_surface(grid, axis, value, outward, resolution):
    """Closed level set ``x_axis = value`` with the given outward direction (+1/-1)."""
    others = tuple(a for a in range(3) if a != axis)
    na, nb = resolution
    if grid.kind in ("torus3", "torus_cylinder"):
        fn = _torus_param(others, axis, value)
        pts, q = _surface(fn, na, nb, True, True)
    else:
        fn = _sphere_param(others, axis, value)
        pts, q = _surface(fn, na, nb, False, True, collapse_a=True)
    nvec = np.zeros(3)
    nvec[axis] = outward
    s = _orientation_sign(fn, lambda a, b: nvec, grid)
    return pts, q, s


def sphere_mesh(grid, center, radius, resolution=(16, 32), exclusions=()):
    """Mesh of the boundary sphere of a ball around ``center``.

    On ``sphere3`` with the center at a pole (the identity ``chi = 0`` or its
    antipode ``chi = pi``) the ball is ``{chi <= r}`` (resp. ``{chi >= pi - r}``)
    and its boundary is a level sphere. Elsewhere the ball is an axis-aligned
    ellipsoid in chart coordinates with per-axis radii.

    ``exclusions`` are chart points that must stay outside the ball.
    """
    center = np.asarray(center, dtype=float)
    exclusions = np.asarray(exclusions, dtype=float).reshape(-1, 3)
    if grid.kind == "sphere3" and (np.isclose(center[0], 0) or np.isclose(center[0], np.pi)):
        r = float(np.max(radius))
        if not 0 < r < np.pi:
            raise RadiusTooLarge(f"radius {r} leaves the chart")
        north = np.isclose(center[0], 0)
        level = r if north else np.pi - r
        if len(exclusions):
            inside = exclusions[:, 0] <= r if north else exclusions[:, 0] >= np.pi - r
            if np.any(inside):
                raise RadiusTooLarge("ball touches an excluded crossing")
        pts, q, s = _level_surface(grid, 0, level, 1 if north else -1, resolution)
        recipe = (sphere_mesh, dict(grid=grid, center=center, radius=radius,
                                    resolution=resolution, exclusions=exclusions))
        return _combine([(pts, q, s)], "SphereLike", (f"chi={level:.6g}",),
                        {"recipe": recipe})
    radii = np.broadcast_to(np.asarray(radius, dtype=float), (3,)).copy()
    for ax, ((lo, hi), per) in enumerate(zip(grid.bounds, grid.periodic)):
        if per and radii[ax] >= grid.periods[ax] / 2:
            raise RadiusTooLarge(f"radius along axis {ax} wraps around")
        if not per and (center[ax] - radii[ax] <= lo or center[ax] + radii[ax] >= hi):
            raise RadiusTooLarge(f"ball leaves the chart along axis {ax}")
    if len(exclusions):
        d = grid.chart_distance(center, exclusions) / radii
        if np.any(np.sum(d ** 2, axis=-1) <= 1.0):
            raise RadiusTooLarge("ball touches an excluded crossing")

    def fn(sa, sb):
        a, b = np.pi * sa, TWO_PI * sb
        u = np.stack([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)], axis=-1)
        return center + radii * u

    na, nb = resolution
    pts, q = _surface(fn, na, nb, False, True, collapse_a=True)
    s = _orientation_sign(fn, lambda a, b: (fn(np.array(a), np.array(b)) - center) / radii ** 2,
                          grid)
    recipe = (sphere_mesh, dict(grid=grid, center=center, radius=radius,
                                resolution=resolution, exclusions=exclusions))
    return _combine([(pts, q, s)], "SphereLike", ("ball",), {"recipe": recipe})


@dataclass(frozen=True)
class Loop:
    """Straight closed curve ``origin + s * span`` (s in [0, 1)) in a chart.

    ``e1`` and ``e2`` are the transverse chart directions of its tube.
    """

    origin: tuple
    span: tuple
    e1: tuple
    e2: tuple


def _rectangle(sb, r1, r2):
    """Counter-clockwise walk around the rectangle [-r1, r1] x [-r2, r2]."""
    sb = np.mod(sb, 1.0)
    side = np.floor(sb * 4).astype(int) % 4
    f = sb * 4 - np.floor(sb * 4)
    x = np.select([side == 0, side == 1, side == 2, side == 3],
                  [np.full_like(f, r1), r1 - 2 * r1 * f, np.full_like(f, -r1), -r1 + 2 * r1 * f])
    y = np.select([side == 0, side == 1, side == 2, side == 3],
                  [-r2 + 2 * r2 * f, np.full_like(f, r2), r2 - 2 * r2 * f, np.full_like(f, -r2)])
    return x, y


def tube_mesh(grid, loop, transverse_radii, resolution=(64, 64)):
    """Torus surrounding ``loop``: loop samples times a transverse rectangle.

    ``resolution = (m, n)`` gives ``m * n`` quads; ``n`` should be a multiple
    of 4 so the rectangle corners are mesh vertices.
    """
    r1, r2 = (float(r) for r in transverse_radii)
    o, span = np.asarray(loop.origin, float), np.asarray(loop.span, float)
    e1, e2 = np.asarray(loop.e1, float), np.asarray(loop.e2, float)
    for r, e in ((r1, e1), (r2, e2)):
        ax = int(np.argmax(np.abs(e)))
        if grid.periodic[ax]:
            if r >= grid.periods[ax] / 2:
                raise SelfIntersection(f"tube radius {r} exceeds half the loop spacing")
        else:
            lo, hi = grid.bounds[ax]
            if o[ax] - r <= lo or o[ax] + r >= hi:
                raise SelfIntersection("tube leaves the chart")

    def fn(sa, sb):
        x, y = _rectangle(sb, r1, r2)
        return (o + np.asarray(sa)[..., None] * span + x[..., None] * e1 + y[..., None] * e2)

    def outward(sa, sb):
        x, y = _rectangle(np.array(sb), r1, r2)
        nx = np.sign(x) if np.isclose(abs(x), r1) else 0.0
        ny = np.sign(y) if np.isclose(abs(y), r2) else 0.0
        return nx * e1 + ny * e2

    m, n = resolution
    pts, q = _surface(fn, m, n, True, True)
    s = _orientation_sign(fn, outward, grid, sa=0.37, sb=0.125)
    recipe = (tube_mesh, dict(grid=grid, loop=loop, transverse_radii=transverse_radii,
                              resolution=resolution))
    return _combine([(pts, q, s)], "TorusLike", ("tube",), {"recipe": recipe})


def slab_mesh(grid, lo, hi, axis=None, resolution=(48, 48)):
    """Boundary of the slab ``lo <= x_axis <= hi`` (cyclically on periodic axes).

    The ``hi`` face has outward normal ``+axis`` and the ``lo`` face ``-axis``;
    both signs follow from the outward-normal rule and the chart orientation.
    """
    if axis is None:
        axis = SLICE_AXIS[grid.kind]
    p_hi = _level_surface(grid, axis, hi, +1, resolution)
    p_lo = _level_surface(grid, axis, lo, -1, resolution)
    recipe = (slab_mesh, dict(grid=grid, lo=lo, hi=hi, axis=axis, resolution=resolution))
    return _combine([p_hi, p_lo], "SlabPair", (f"hi={hi:.6g}", f"lo={lo:.6g}"),
                    {"recipe": recipe, "axis": axis})


def slice_mesh(grid, value, outward=1, axis=None, resolution=(48, 48)):
    """Single level surface, e.g. the collar boundary ``t = eps`` of a cylinder."""
    if axis is None:
        axis = SLICE_AXIS[grid.kind]
    p = _level_surface(grid, axis, value, outward, resolution)
    recipe = (slice_mesh, dict(grid=grid, value=value, outward=outward, axis=axis,
                               resolution=resolution))
    return _combine([p], "SlabPair", (f"slice={value:.6g}",), {"recipe": recipe, "axis": axis})


def export_mesh_csv(mesh, path):
    """Write vertices and quads to one CSV (``kind`` column tells them apart).

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_mesh_rows(mesh, path)
        return
    with open(path, "w", newline="") as fh:
        _write_mesh_rows(mesh, fh)


def _write_mesh_rows(mesh, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["kind", "index", "a", "b", "c", "d", "sign"])
    for i, p in enumerate(mesh.vertices):
        w.writerow(["v", i, *(f"{x:.12g}" for x in p), "", ""])
    for i, (q, s) in enumerate(zip(mesh.quads, mesh.quad_sign)):
        w.writerow(["q", i, *q, int(s)])
