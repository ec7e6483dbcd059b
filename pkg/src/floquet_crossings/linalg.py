"""Small dense linear algebra on unitary matrices.

Everything here works on single matrices ``(N, N)`` and, where it matters for
speed, on stacks ``(..., N, N)``. Eigenphases are measured in cycles: an
eigenvalue ``exp(2*pi*i*lam)`` is recorded as ``lam``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BranchCutHit, EigensolverFailure, NotSpecialUnitary, NotUnitary

UNITARITY_TOL = 1e-10
LABEL_TOL = 1e-9
GAP_TOL = 1e-6

# eigenphases closer than this are treated as one cluster and re-solved by Schur
_CLUSTER_TOL = 1e-7

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class EigenLabeling:
    """Canonical eigenphases ``lambdas`` and matching eigenvector columns."""

    lambdas: np.ndarray
    vectors: np.ndarray
    residual: float

    @property
    def n(self):
        return len(self.lambdas)


@dataclass(frozen=True)
class StratumTag:
    k: int
    pattern: frozenset


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def unitarity_error(u):
    n = u.shape[-1]
    return np.max(np.abs(dagger(u) @ u - np.eye(n)), axis=(-1, -2))


def check_unitary(u, special=False, tol=UNITARITY_TOL):
    """Validate ``u`` (single or stacked) and return it as a complex array."""
    u = np.asarray(u, dtype=complex)
    if u.ndim < 2 or u.shape[-1] != u.shape[-2] or u.shape[-1] < 2:
        raise NotUnitary(f"expected square matrices of size >= 2, got shape {u.shape}")
    err = np.max(unitarity_error(u))
    if err > tol:
        raise NotUnitary(f"||U^dag U - 1||_max = {err:.3e} exceeds {tol:.1e}")
    if special:
        derr = np.max(np.abs(np.linalg.det(u) - 1.0))
        if derr > tol:
            raise NotSpecialUnitary(f"|det U - 1| = {derr:.3e} exceeds {tol:.1e}")
    return u


def random_unitary(n, rng, special=True):
    """Haar-random element of U(n) (or SU(n))."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    if special:
        q = q / np.linalg.det(q) ** (1.0 / n)
    return q


def _shift_labels(theta_sorted):
    # theta sorted descending in [0, 1). det U = 1 forces sum(theta) to be an
    # integer m; moving the m largest phases down by one cycle to the end of
    # the list is the only cyclic shift that both keeps the chain
    # lam_1 >= ... >= lam_N >= lam_1 - 1 and zeroes the sum.
    n = theta_sorted.shape[-1]
    m = np.rint(theta_sorted.sum(axis=-1)).astype(int)
    m = np.clip(m, 0, n - 1)
    idx = (np.arange(n) + m[..., None])
    wrapped = idx >= n
    order = idx % n
    lam = np.take_along_axis(theta_sorted, order, axis=-1) - wrapped
    return lam, order


def _phases(w):
    # phases a rounding error below a full cycle are read as tiny negatives so
    # that an exactly degenerate matrix such as the identity labels as zero
    theta = np.mod(np.angle(w) / (2 * np.pi), 1.0)
    return np.where(theta > 1.0 - 1e-12, theta - 1.0, theta)


def _eig_stack(u):
    """Eigenphases (cycles, in [0,1)) and orthonormal eigenvectors of a stack."""
    n = u.shape[-1]
    w, v = np.linalg.eig(u)
    theta = _phases(w)
    # near-degenerate clusters: redo those matrices with a Schur factorization,
    # whose unitary factor is an orthonormal eigenbasis for normal matrices
    d = np.abs(theta[..., :, None] - theta[..., None, :])
    d = np.minimum(d, 1.0 - d) + np.eye(n) * 10
    bad = np.min(d, axis=(-1, -2)) < _CLUSTER_TOL
    if np.any(bad):
        for idx in np.argwhere(np.atleast_1d(bad)):
            idx = tuple(idx)[:bad.ndim]
            t, z = scipy.linalg.schur(u[idx], output="complex")
            v[idx] = z
            theta[idx] = _phases(np.diag(t))
    v, _ = np.linalg.qr(v)
    return theta, v


def label_stack(u, label_tol=LABEL_TOL):
    """Vectorized labeling of a stack ``(..., N, N)`` of SU(N) matrices.

    Returns ``(lambdas, vectors, residual)`` with shapes ``(..., N)``,
    ``(..., N, N)`` and ``(...)``.
    """
    u = np.asarray(u, dtype=complex)
    theta, v = _eig_stack(u)
    order = np.argsort(-theta, axis=-1, kind="stable")
    theta = np.take_along_axis(theta, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    lam, shift = _shift_labels(theta)
    v = np.take_along_axis(v, shift[..., None, :], axis=-1)
    phases = np.exp(2j * np.pi * lam)
    residual = np.max(np.abs(u @ v - v * phases[..., None, :]), axis=(-1, -2))
    if np.any(residual > 1e3 * label_tol):
        raise EigensolverFailure(f"eigen-residual {np.max(residual):.3e} too large")
    return lam, v, residual


def label_eigenvalues(u, label_tol=LABEL_TOL, tol=UNITARITY_TOL):
    """Unique labeling of the eigenvalues of ``u`` in SU(N).

    Parameters
    ----------
    u : (N, N) array
        Special unitary matrix.
    label_tol : float
        Tolerance used for the residual check.

    Returns
    -------
    EigenLabeling
        ``lambdas`` obey ``lam_1 >= ... >= lam_N >= lam_1 - 1`` and sum to zero.
    """
    u = check_unitary(u, special=True, tol=max(tol, 1e-12))
    lam, v, res = label_stack(u[None], label_tol)
    return EigenLabeling(lam[0], v[0], float(res[0]))


def gap_values(lambdas):
    """All N cyclic gaps of a stack of labelings, shape ``(..., N)``."""
    lam = np.asarray(lambdas, dtype=float)
    nxt = np.concatenate([lam[..., 1:], lam[..., :1] - 1.0], axis=-1)
    return lam - nxt


def gap(lab, j):
    """Gap after band ``j`` (1-based); ``j = N`` closes the circle."""
    lam = lab.lambdas if isinstance(lab, EigenLabeling) else np.asarray(lab)
    n = lam.shape[-1]
    if not 1 <= j <= n:
        raise IndexError(f"band index {j} outside 1..{n}")
    return gap_values(lam)[..., j - 1]


def stratum(lab, gap_tol=GAP_TOL):
    g = gap_values(lab.lambdas if isinstance(lab, EigenLabeling) else lab)
    pattern = frozenset(int(j) + 1 for j in np.nonzero(g < gap_tol)[0])
    return StratumTag(k=len(pattern), pattern=pattern)


def branch_log(u, alpha, gap_tol=GAP_TOL):
    """Hermitian ``H`` with ``exp(2*pi*i*H) = u`` and spectrum in ``(alpha-1, alpha)``."""
    u = check_unitary(u, tol=1e-8)
    theta, v = _eig_stack(u[None])
    theta, v = theta[0], v[0]
    mu = alpha - np.mod(alpha - theta, 1.0)
    dist = np.mod(theta - alpha, 1.0)
    if np.any(np.minimum(dist, 1.0 - dist) < gap_tol):
        raise BranchCutHit(f"eigenphase within {gap_tol} of branch cut at {alpha}")
    return (v * mu) @ dagger(v)


def exp_i_hermitian(h, s=1.0):
    """``exp(2*pi*i*s*h)`` for Hermitian ``h`` (single or stacked)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(2j * np.pi * s * w)[..., None, :]) @ dagger(v)


def polar_unitary(a):
    """Closest unitary matrix to ``a`` (polar factor), stack aware."""
    x, _, yh = np.linalg.svd(a)
    return x @ yh
