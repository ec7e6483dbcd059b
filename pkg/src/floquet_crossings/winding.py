"""Discrete winding numbers: W1 of det along loops and W3 of fields on 3-grids."""
from dataclasses import dataclass

import numpy as np

from .errors import PhaseJumpTooLarge
from .linalg import dagger

RESIDUAL_MAX = 0.1


@dataclass(frozen=True)
class WindingResult:
    value: float
    integer: int
    residual: float
    threshold: float = RESIDUAL_MAX

    @property
    def ok(self):
        return self.residual < self.threshold

    def as_dict(self):
        return {"value": float(self.value), "integer": int(self.integer),
                "residual": float(self.residual), "ok": bool(self.ok)}


def w1(loop):
    """Winding number of ``det`` around a closed sequence of unitaries."""
    d = np.linalg.det(np.asarray(loop, dtype=complex))
    inc = np.angle(np.roll(d, -1) / d)
    if np.max(np.abs(inc)) >= np.pi / 2:
        raise PhaseJumpTooLarge(f"det phase jumps by {np.max(np.abs(inc)):.3f} rad")
    val = float(np.sum(inc) / (2 * np.pi))
    k = int(np.rint(val))
    return WindingResult(val, k, abs(val - k), 1e-6)


def _shift(u, axis, periodic):
    if periodic:
        return np.roll(u, -1, axis=axis)
    return np.take(u, np.arange(1, u.shape[axis]), axis=axis)


def _trim(u, axis, periodic):
    return u if periodic else np.take(u, np.arange(u.shape[axis] - 1), axis=axis)


def _cells(u, grid):
    """The eight corner fields of every grid cell, indexed by (i, j, k) bits."""
    per = grid.periodic
    corners = {}
    for bits in np.ndindex(2, 2, 2):
        c = u
        for ax in range(3):
            c = _shift(c, ax, per[ax]) if bits[ax] else _trim(c, ax, per[ax])
        corners[bits] = c
    return corners


def _density(a1, a2, a3):
    # eps^{mnr} tr(A_m A_n A_r) = 3 tr(A_1 [A_2, A_3])
    comm = a2 @ a3 - a3 @ a2
    return 3.0 * np.real(np.einsum("...ij,...ji->...", a1, comm))


def _derivative(u, axis, periodic):
    """Fourth-order central difference per grid step (one-sided at clamped ends)."""
    if periodic:
        r = lambda k: np.roll(u, -k, axis=axis)  # noqa: E731
        return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / 12.0
    u = np.moveaxis(u, axis, 0)
    d = np.empty_like(u)
    d[0] = (-3 * u[0] + 4 * u[1] - u[2]) / 2
    d[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / 2
    d[1:-1] = (u[2:] - u[:-2]) / 2
    if u.shape[0] > 4:
        d[2:-2] = (-u[4:] + 8 * u[3:-1] - 8 * u[1:-3] + u[:-4]) / 12.0
    return np.moveaxis(d, 0, axis)


def _trapezoid_weights(grid):
    w = np.ones(grid.sizes)
    for ax, per in enumerate(grid.periodic):
        if not per:
            idx = [slice(None)] * 3
            for end in (0, -1):
                idx[ax] = end
                w[tuple(idx)] *= 0.5
    return w


def w3_density(field, scheme="centered"):
    """Local contributions (already divided by 24 pi^2, orientation applied).

    ``forward`` returns one value per cell, ``centered`` one per vertex.
    """
    grid = field.grid
    u = field.values
    if scheme == "forward":
        c = _cells(u, grid)
        base = c[(0, 0, 0)]
        inv = dagger(base)
        a = [inv @ (c[e] - base) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
        dens = _density(*a)
    elif scheme == "centered":
        inv = dagger(u)
        a = [inv @ _derivative(u, ax, grid.periodic[ax]) for ax in range(3)]
        dens = _trapezoid_weights(grid) * _density(*a)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return grid.orientation * dens / (24 * np.pi ** 2)


def w3(field, scheme="centered"):
    """Three-dimensional winding number of a sampled special-unitary field.

    Parameters
    ----------
    field : UnitaryField
        Field on a closed chart (all cells of the chart are summed).
    scheme : {"centered", "forward"}
        ``forward`` uses ``A = U^-1 (U_{+mu} - U)`` at the base corner of each
        cell (first order). ``centered`` evaluates ``A = U^-1 dU`` at every
        vertex with fourth-order central differences and sums with
        trapezoid weights.

    Returns
    -------
    WindingResult
    """
    dens = w3_density(field, scheme)
    # ordered summation keeps the result bit-reproducible
    val = float(np.sum(np.sort(dens.ravel())))
    k = int(np.rint(val))
    thr = 2 * RESIDUAL_MAX if getattr(field, "glued", False) else RESIDUAL_MAX
    return WindingResult(val, k, abs(val - k), thr)
