"""Sampled unitary fields, time evolution, SU(N) reduction, gluing and the
relative evolution that closes a Floquet map into a periodic one."""
from dataclasses import dataclass

import numpy as np

from .errors import (EndpointMismatch, GapClosed, GridTooCoarse, NonzeroSigmaWinding,
                     StepAcrossDiscontinuity)
from .linalg import (GAP_TOL, check_unitary, dagger, gap_values, label_stack, polar_unitary)
from .manifolds import CLOSED_KIND, Grid3, SLICE_AXIS

RENORM_EVERY = 64


@dataclass(frozen=True)
class UnitaryField:
    """One ``N x N`` unitary per grid vertex, ``values.shape == grid.sizes + (N, N)``."""

    grid: Grid3
    values: np.ndarray
    special: bool = True
    glued: bool = False

    @property
    def n(self):
        return self.values.shape[-1]

    def slice(self, index, axis=None):
        axis = SLICE_AXIS[self.grid.kind] if axis is None else axis
        return np.take(self.values, index, axis=axis)

    def to_rows(self):
        """Row-major flattening with real/imaginary parts interleaved."""
        pts = self.grid.points()
        v = self.values.reshape(len(pts), -1)
        ri = np.stack([v.real, v.imag], axis=-1).reshape(len(pts), -1)
        return np.concatenate([pts, ri], axis=1)


def sample(model, grid, validate=True):
    """Evaluate ``model`` (any callable on chart points) on every grid vertex."""
    vals = np.asarray(model(grid.coords()), dtype=complex)
    if validate:
        check_unitary(vals, special=True, tol=1e-10)
    return UnitaryField(grid, vals, special=True)


def _time_steps(t0, t1, substeps, jumps, split):
    edges = np.linspace(t0, t1, substeps + 1)
    inner = [j for j in jumps if t0 + 1e-12 < j < t1 - 1e-12]
    if not inner:
        return edges
    on_edge = [np.min(np.abs(edges - j)) < 1e-12 for j in inner]
    if all(on_edge):
        return edges
    if not split:
        raise StepAcrossDiscontinuity(f"step [{t0}, {t1}] crosses a jump of H")
    return np.unique(np.concatenate([edges, inner]))


def evolve(hamiltonian, grid, steps_per_cell=16, discontinuities=(), split=True):
    """Solve ``i dU/dt = H U`` with ``U(t=0) = 1`` along the time axis of ``grid``.

    Each grid interval is cut into ``steps_per_cell`` substeps and advanced by
    the midpoint exponential ``exp(-i dt H(t_mid))`` (exact when ``H`` is
    constant on the step). Substeps are cut at declared discontinuities
    unless ``split`` is false, in which case straddling one is an error.
    """
    axis = SLICE_AXIS[grid.kind]
    if axis != 2:
        raise ValueError("evolution needs a grid whose last axis is time")
    coords = grid.coords()
    base = coords[:, :, 0, :]
    times = grid.axis_values(2)
    n_t = len(times)
    probe = np.asarray(hamiltonian(base), dtype=complex)
    n = probe.shape[-1]
    out = np.empty(grid.sizes + (n, n), dtype=complex)
    u = np.broadcast_to(np.eye(n, dtype=complex), base.shape[:-1] + (n, n)).copy()
    out[:, :, 0] = u
    count = 0
    for m in range(n_t - 1):
        steps = _time_steps(times[m], times[m + 1], steps_per_cell, discontinuities, split)
        for a, b in zip(steps[:-1], steps[1:]):
            pts = base.copy()
            pts[..., 2] = 0.5 * (a + b)
            h = np.asarray(hamiltonian(pts), dtype=complex)
            w, v = np.linalg.eigh(h)
            step = (v * np.exp(-1j * (b - a) * w)[..., None, :]) @ dagger(v)
            u = step @ u
            count += 1
            if count % RENORM_EVERY == 0:
                u = polar_unitary(u)
        out[:, :, m + 1] = u
    det_ok = np.allclose(np.linalg.det(out), 1.0, atol=1e-8)
    return UnitaryField(grid, out, special=bool(det_ok))


def _winding_along(phase_diff, axis):
    return np.sum(phase_diff, axis=axis) / (2 * np.pi)


def w1_reduce(field):
    """Turn a U(N) field with trivial det-winding on the base into an SU(N) field.

    The det-winding ``p`` along the time circle is removed by multiplying with
    ``diag(e^{-2 pi i p t}, 1, ..., 1)``; the remaining phase of ``det`` is
    unwrapped along a spanning tree rooted at the origin vertex and divided
    out through its continuous ``N``-th root.
    """
    grid = field.grid
    u = field.values
    n = u.shape[-1]
    det = np.linalg.det(u)
    if np.allclose(det, 1.0, atol=1e-12):
        return UnitaryField(grid, u.copy(), special=True, glued=field.glued)
    t_axis = SLICE_AXIS[grid.kind]
    for ax, per in enumerate(grid.periodic):
        if not per:
            continue
        d = np.angle(np.roll(det, -1, axis=ax) / det)
        wind = np.rint(_winding_along(d, ax))
        if ax != t_axis and grid.kind in ("torus3", "torus_cylinder") and np.any(wind != 0):
            raise NonzeroSigmaWinding(f"det winds {int(np.max(np.abs(wind)))} times along axis {ax}")
    p = 0
    if grid.periodic[t_axis]:
        d = np.angle(np.roll(det, -1, axis=t_axis) / det)
        wind = np.rint(_winding_along(d, t_axis))
        p = int(wind.flat[0])
        if np.any(wind != p):
            raise GridTooCoarse("time winding of det is not constant over the base")
    t = grid.coords()[..., t_axis]
    lo, hi = grid.bounds[t_axis]
    tau = (t - lo) / (hi - lo)
    corr = np.ones(grid.sizes + (n,), dtype=complex)
    corr[..., 0] = np.exp(-2j * np.pi * p * tau)
    up = u * corr[..., None, :]
    det = np.linalg.det(up)
    phi = _tree_unwrap(np.angle(det), grid)
    root = np.exp(1j * phi / n)
    return UnitaryField(grid, up / root[..., None, None], special=True, glued=field.glued)


def _tree_unwrap(angle, grid):
    """Unwrap a phase field along axis 0 at the root line, then axis 1, then axis 2."""
    phi = np.array(angle)
    phi[:, 0, 0] = np.unwrap(phi[:, 0, 0])
    phi[:, :, 0] = np.unwrap(phi[:, :, 0], axis=1)
    phi = np.unwrap(phi, axis=2)
    for ax, per in enumerate(grid.periodic):
        if per:
            jump = np.take(phi, 0, axis=ax) - np.take(phi, -1, axis=ax)
            principal = np.angle(np.exp(1j * jump))
            if np.max(np.abs(jump - principal)) > np.pi / 4 or np.max(np.abs(principal)) > np.pi / 4:
                raise GridTooCoarse(f"det phase does not close along axis {ax}")
        step = np.abs(np.diff(phi, axis=ax))
        if step.size and np.max(step) > np.pi / 4:
            raise GridTooCoarse(f"det phase jumps by more than pi/4 along axis {ax}")
    return phi


def glue(u0, u1, tol=1e-8):
    """Periodic field running ``u0`` forward and then ``u1`` backward.

    Both inputs live on the same cylinder grid; the output grid is the closed
    chart with ``2 (n_t - 1)`` time vertices.
    """
    g0, g1 = u0.grid, u1.grid
    if g0.kind != g1.kind or g0.sizes != g1.sizes or g0.kind not in CLOSED_KIND:
        raise EndpointMismatch("glue needs two fields on the same cylinder grid")
    a, b = u0.values, u1.values
    for idx in (0, -1):
        err = np.max(np.abs(a[:, :, idx] - b[:, :, idx]))
        if err > tol:
            raise EndpointMismatch(f"fields differ by {err:.2e} at the t={idx % a.shape[2]} slice")
    n_t = g0.sizes[2]
    vals = np.concatenate([a[:, :, :-1], b[:, :, :0:-1]], axis=2)
    grid = Grid3(CLOSED_KIND[g0.kind], (g0.sizes[0], g0.sizes[1], 2 * (n_t - 1)), g0.orientation)
    return UnitaryField(grid, vals, special=u0.special and u1.special, glued=True)


def gap_midpoints(lam, j):
    """Pointwise midpoint between ``lam_j`` and ``lam_{j+1}`` (cyclically for ``j = N``)."""
    n = lam.shape[-1]
    upper = lam[..., j - 1]
    lower = lam[..., j] if j < n else lam[..., 0] - 1.0
    return 0.5 * (upper + lower)


def effective_hamiltonian(v, j, gap_tol=GAP_TOL):
    """``H_alpha`` with ``exp(2 pi i H) = v`` and branch cut in the ``j``-th gap.

    Returns ``(H, mu, vectors)`` where ``mu`` are the eigenvalues of ``H``
    (the ``j`` largest shifted down by one, so ``tr H = -j``; for ``j = N``
    the trace-free representative ``mu = lambda`` is used).
    """
    lam, vec, _ = label_stack(v)
    if np.min(gap_values(lam)) <= gap_tol:
        raise GapClosed("endpoint has a closed gap")
    alpha = gap_midpoints(lam, j)
    mu = alpha[..., None] - np.mod(alpha[..., None] - lam, 1.0)
    if j == lam.shape[-1]:
        # same branch cut one sheet up: the trace-free logarithm (mu = lambda)
        mu = mu + 1.0
    h = (vec * mu[..., None, :]) @ dagger(vec)
    return h, mu, vec


def relative_evolution(field, j, gap_tol=GAP_TOL):
    """Close a Floquet field by the reverse branch-cut flow of its endpoint.

    On ``[1, 2]`` the field continues as ``exp(2 pi i (2 - s) H_alpha)``;
    the result is a periodic field on the closed chart with ``2 (n_t - 1)``
    time vertices. It is special unitary only for ``j = N``.
    """
    g = field.grid
    if g.kind not in CLOSED_KIND:
        raise ValueError("relative evolution needs a cylinder grid")
    v = field.values[:, :, -1]
    _, mu, vec = effective_hamiltonian(v, j, gap_tol)
    n_t = g.sizes[2]
    back = []
    for m in range(n_t - 1):
        s = 1.0 - m / (n_t - 1)
        back.append((vec * np.exp(2j * np.pi * s * mu)[..., None, :]) @ dagger(vec))
    back = np.stack(back, axis=2)
    vals = np.concatenate([field.values[:, :, :-1], back], axis=2)
    grid = Grid3(CLOSED_KIND[g.kind], (g.sizes[0], g.sizes[1], 2 * (n_t - 1)), g.orientation)
    return UnitaryField(grid, vals, special=(j == field.n), glued=True)


def projector_flow(v, j, grid):
    """Periodic U(N) field ``exp(2 pi i t P)`` with ``P`` the projector on bands ``1..j`` of ``v``.

    ``v`` has shape ``grid.sizes[:2] + (N, N)``; ``grid`` is a closed chart.
    """
    _, vec, _ = label_stack(v)
    p = vec[..., :j] @ dagger(vec[..., :j])
    t = grid.axis_values(2)
    n = v.shape[-1]
    eye = np.eye(n)
    vals = np.stack([eye + (np.exp(2j * np.pi * s) - 1.0) * p for s in t], axis=2)
    return UnitaryField(grid, vals, special=False)
