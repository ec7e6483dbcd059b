"""Chern numbers of eigenvector line bundles over closed quad meshes.

Each oriented mesh edge ``(p, q)`` carries a link phase
``<v(p), v(q)> / |<v(p), v(q)>|``; the argument of the product of the four
links around a quad, taken in ``(-pi, pi]``, is its plaquette phase. The sum
of plaquette phases over a closed mesh is ``2 pi`` times an integer because
every link enters twice with opposite orientation.
"""
from dataclasses import dataclass

import numpy as np

from .errors import IsolationFailure, LinkCollapse
from .linalg import gap_values, label_stack

BOUNDARY_GAP_MIN = 0.02
LINK_MIN = 0.1
DET_LINK_MIN = 0.01

# The sum of plaquette phases integrates the Berry curvature of the
# connection -i<v, dv>; the first Chern class of the bundle is minus that.
FHS_SIGN = -1


@dataclass(frozen=True)
class BandSelector:
    """Contiguous band range ``first..last`` (1-based, inclusive)."""

    first: int
    last: int

    def __post_init__(self):
        if not 1 <= self.first <= self.last:
            raise ValueError(f"bad band range {self.first}..{self.last}")

    @property
    def size(self):
        return self.last - self.first + 1


@dataclass(frozen=True)
class ChernResult:
    value: int
    raw: float
    residual: float
    per_component: tuple = ()

    def __int__(self):
        return self.value


def mesh_eigensystem(mesh, evaluator):
    """Labeled eigenphases and eigenvectors of ``evaluator`` at every mesh vertex."""
    u = np.asarray(evaluator(mesh.vertices), dtype=complex)
    lam, vec, _ = label_stack(u)
    return lam, vec


def _check_isolated(lam, sel, gap_min):
    n = lam.shape[-1]
    if sel.size == n:
        return
    g = gap_values(lam)
    lower = g[:, sel.last - 1]
    upper = g[:, (sel.first - 2) % n]
    worst = min(np.min(lower), np.min(upper))
    if worst <= gap_min:
        raise IsolationFailure(
            f"bands {sel.first}..{sel.last} not isolated on the mesh (min gap {worst:.3g})")


def plaquette_phases(mesh, vectors, sel, link_min=None):
    """Plaquette phase per quad for the band range ``sel``."""
    v = vectors[..., sel.first - 1:sel.last]
    q = mesh.quads
    a, b = q, np.roll(q, -1, axis=1)
    # overlap matrices G_pq = V(p)^dag V(q) for every quad edge
    g = np.einsum("...ia,...ib->...ab", np.conj(v[a]), v[b])
    if sel.size == 1:
        ov = g[..., 0, 0]
        floor = LINK_MIN if link_min is None else link_min
    else:
        ov = np.linalg.det(g)
        floor = DET_LINK_MIN if link_min is None else link_min
    degenerate = a == b
    mag = np.abs(ov)
    if np.any(mag[~degenerate] < floor):
        raise LinkCollapse(f"link overlap {np.min(mag[~degenerate]):.3g} below {floor}")
    link = np.where(degenerate, 1.0, ov / np.where(mag > 0, mag, 1.0))
    return np.angle(np.prod(link, axis=1))


def chern_number(mesh, evaluator, sel, gap_min=BOUNDARY_GAP_MIN, eig=None):
    """Chern number of the line bundle ``det(bands sel)`` over an oriented mesh.

    ``eig`` may carry a precomputed ``(lambdas, vectors)`` pair for the mesh.
    """
    lam, vec = mesh_eigensystem(mesh, evaluator) if eig is None else eig
    n = lam.shape[-1]
    if sel.last > n:
        raise ValueError(f"band {sel.last} out of range for N = {n}")
    _check_isolated(lam, sel, gap_min)
    phase = plaquette_phases(mesh, vec, sel)
    per = []
    for c, s in enumerate(mesh.signs):
        raw = FHS_SIGN * s * np.sum(np.sort(phase[mesh.component == c])) / (2 * np.pi)
        per.append(raw)
    raw = float(np.sum(per))
    k = int(np.rint(raw))
    res = abs(raw - k)
    if res > 1e-9:
        raise LinkCollapse(f"non-integer plaquette sum {raw:.6f}")
    return ChernResult(k, raw, res, tuple(int(np.rint(x)) for x in per))


def band_chern(mesh, evaluator, j, gap_min=BOUNDARY_GAP_MIN, eig=None):
    """Chern number of the ``j``-th eigenvector line bundle over ``mesh``."""
    return chern_number(mesh, evaluator, BandSelector(j, j), gap_min, eig)


def band_group_chern(mesh, evaluator, first, last, gap_min=BOUNDARY_GAP_MIN, eig=None):
    """Chern number of the determinant bundle of bands ``first..last``."""
    return chern_number(mesh, evaluator, BandSelector(first, last), gap_min, eig)


def plaquette_rows(mesh, evaluator, j):
    """Rows ``(quad, centroid..., phase)`` for curvature plots."""
    _, vec = mesh_eigensystem(mesh, evaluator)
    phase = plaquette_phases(mesh, vec, BandSelector(j, j))
    cen = mesh.vertices[mesh.quads].mean(axis=1)
    return np.column_stack([np.arange(len(phase)), cen, phase * mesh.quad_sign * FHS_SIGN])
