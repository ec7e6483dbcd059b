"""Model zoo: closed-form unitary maps with their reference integers.

Every evaluator takes chart points of shape ``(..., 3)`` and returns matrices
of shape ``(..., N, N)``. Hamiltonians (where available) take the same
points, with the last coordinate read as time, and are used only to
cross-check the closed forms through the propagator.
"""
from dataclasses import dataclass, field

import numpy as np

from .linalg import SIGMA_0, SIGMA_1, SIGMA_2, SIGMA_3

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class ModelSpec:
    """A named unitary map together with what it is expected to produce.

    Attributes
    ----------
    name : str
    n : int
        Matrix size.
    domain_kind : str
        Grid kind the evaluator's chart points belong to.
    evaluator : callable
        ``points (..., 3) -> (..., n, n)`` special unitary matrices.
    hamiltonian : callable or None
        ``points (..., 3) -> (..., n, n)`` Hermitian, time in the last slot.
    discontinuities : tuple
        Times where the Hamiltonian jumps.
    expected : dict
        Reference integers (``"W3"``, ``"I"``, ``"C"``, local charges).
    source : dict
        Short description of where each reference value comes from.
    """

    name: str
    n: int
    domain_kind: str
    evaluator: object
    description: str = ""
    hamiltonian: object = None
    discontinuities: tuple = ()
    expected: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)
    default_grid: tuple = (24, 24, 24)

    def __call__(self, points):
        return self.evaluator(points)

    @property
    def is_floquet(self):
        return self.domain_kind in ("torus_cylinder", "sphere_cylinder")

    def metadata(self):
        return {
            "name": self.name,
            "description": self.description,
            "domain": self.domain_kind,
            "N": self.n,
            "expected": {k: _jsonable(v) for k, v in self.expected.items()},
            "source": dict(self.source),
        }


def _jsonable(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return [int(x) for x in v]
    return int(v)


def _pauli(a0, a1, a2, a3):
    """``a0*1 + a1*s1 + a2*s2 + a3*s3`` for broadcastable coefficient arrays."""
    return (np.asarray(a0)[..., None, None] * SIGMA_0 + np.asarray(a1)[..., None, None] * SIGMA_1
            + np.asarray(a2)[..., None, None] * SIGMA_2 + np.asarray(a3)[..., None, None] * SIGMA_3)


def su2_from_uv(u, v):
    """The matrix ``[[u, -conj(v)], [v, conj(u)]]``."""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))
    out = np.empty(u.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = u
    out[..., 0, 1] = -np.conj(v)
    out[..., 1, 0] = v
    out[..., 1, 1] = np.conj(u)
    return out


def embed3(g, corner=1.0):
    """Block embedding ``diag(g, corner)`` of 2x2 matrices into 3x3."""
    g = np.asarray(g)
    out = np.zeros(g.shape[:-2] + (3, 3), dtype=complex)
    out[..., :2, :2] = g
    out[..., 2, 2] = corner
    return out


# ---------------------------------------------------------------------------
# two-band periodically driven model

def rudner_hamiltonian(k1, k2, t, J=TWO_PI):
    """Four-step piecewise constant drive; ``t`` is read modulo one period."""
    k1, k2, t = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (k1, k2, t)))
    t = np.mod(t, 1.0)
    step = np.minimum((t * 4).astype(int), 3)
    d = k1 - k2
    c = np.select([step == 0, step == 1, step == 2, step == 3],
                  [np.ones_like(t), np.cos(d), np.cos(k1), np.cos(k2)])
    s = np.select([step == 0, step == 1, step == 2, step == 3],
                  [np.zeros_like(t), np.sin(d), np.sin(k1), np.sin(k2)])
    z = np.zeros_like(t)
    return -J * _pauli(z, c, s, z)


def rudner_propagator(k1, k2, t):
    """Closed-form propagator at the resonant coupling ``J = 2*pi``, ``t`` in [0, 1]."""
    k1, k2, t = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (k1, k2, t)))
    c, s = np.cos(TWO_PI * t), np.sin(TWO_PI * t)
    d = k1 - k2
    z = np.zeros_like(t)
    mid = (t > 0.25) & (t < 0.75)
    # identity/sigma_3 part: plain cos outside the middle window
    a0 = np.where(mid, c * np.cos(d), c)
    a3 = np.where(mid, -c * np.sin(d), z)
    # sigma_1/sigma_2 part: rotated by k2 after t = 1/2
    late = t > 0.5
    a1 = np.where(late, s * np.cos(k2), s)
    a2 = np.where(late, s * np.sin(k2), z)
    return _pauli(a0, 1j * a1, 1j * a2, 1j * a3)


def rudner_endpoint_formula(k1, k2):
    """Endpoint ``V`` at ``t = 5/8`` written out explicitly."""
    k1, k2 = np.broadcast_arrays(np.asarray(k1, float), np.asarray(k2, float))
    out = np.empty(k1.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(1j * (k1 - k2))
    out[..., 0, 1] = 1j * np.exp(1j * k2)
    out[..., 1, 0] = 1j * np.exp(-1j * k2)
    out[..., 1, 1] = np.exp(-1j * (k1 - k2))
    return -out / np.sqrt(2)


def _rudner(points):
    p = np.asarray(points, dtype=float)
    return rudner_propagator(p[..., 0], p[..., 1], np.mod(p[..., 2], 1.0))


def _rudner_h(points):
    p = np.asarray(points, dtype=float)
    return rudner_hamiltonian(p[..., 0], p[..., 1], p[..., 2])


def truncated_rudner(t_max):
    """Resonant drive stopped at ``t_max``, time rescaled to [0, 1]."""

    def ev(points):
        p = np.asarray(points, dtype=float)
        return rudner_propagator(p[..., 0], p[..., 1], t_max * p[..., 2])

    def ham(points):
        p = np.asarray(points, dtype=float)
        return t_max * rudner_hamiltonian(p[..., 0], p[..., 1], t_max * p[..., 2])

    jumps = tuple(q / t_max for q in (0.25, 0.5, 0.75) if q < t_max)
    return ev, ham, jumps


# ---------------------------------------------------------------------------
# maps out of SU(2) and S^2 x S^1

def sphere3_uv(points):
    """Hyperspherical chart ``(chi, theta, phi)`` -> ``(u, v)`` with ``|u|^2+|v|^2 = 1``."""
    p = np.asarray(points, dtype=float)
    chi, th, ph = p[..., 0], p[..., 1], p[..., 2]
    s = np.sin(chi)
    x, y = np.cos(chi), s * np.sin(th) * np.cos(ph)
    z, w = s * np.sin(th) * np.sin(ph), s * np.cos(th)
    return x + 1j * y, z + 1j * w


def sphere2_section(theta, phi):
    """Section ``g`` of SU(2) -> S^2 with first column ``(cos(theta/2), e^{i phi} sin(theta/2))``."""
    u = np.cos(np.asarray(theta) / 2)
    v = np.exp(1j * np.asarray(phi)) * np.sin(np.asarray(theta) / 2)
    return su2_from_uv(u, v)


def identity_su2(points):
    return su2_from_uv(*sphere3_uv(points))


def _conj_diag(g, phases):
    """``g diag(phases) g^dagger`` for a stack of unitaries."""
    return (g * phases[..., None, :]) @ np.conj(np.swapaxes(g, -1, -2))


def adjoint_su2(points):
    """``g(theta, phi) diag(e^{2 pi i t}, e^{-2 pi i t}) g^-1`` on S^2 x S^1."""
    p = np.asarray(points, dtype=float)
    g = sphere2_section(p[..., 0], p[..., 1])
    a = np.exp(TWO_PI * 1j * p[..., 2])
    return _conj_diag(g, np.stack([a, np.conj(a)], axis=-1))


def embed_standard(points):
    return embed3(identity_su2(points))


def embed_perturbed(points, e_it=1j):
    """Block ``e^{it} g`` with corner ``e^{-2it}``; the default is ``e^{it} = i``."""
    g = identity_su2(points)
    return embed3(e_it * g, e_it ** -2)


def adjoint_embed(points):
    return embed3(adjoint_su2(points))


def _adjoint_flow(rate):
    """CP^1 x [0, 1] -> SU(2): ``g diag(e^{i rate t}, e^{-i rate t}) g^-1``."""

    def ev(points):
        p = np.asarray(points, dtype=float)
        g = sphere2_section(p[..., 0], p[..., 1])
        a = np.exp(1j * rate * p[..., 2])
        return _conj_diag(g, np.stack([a, np.conj(a)], axis=-1))

    def ham(points):
        # i dU/dt = H U  with  U = g exp(i rate t sigma_3) g^-1
        p = np.asarray(points, dtype=float)
        g = sphere2_section(p[..., 0], p[..., 1])
        return -rate * (g @ SIGMA_3 @ np.conj(np.swapaxes(g, -1, -2)))

    return ev, ham


def _embedded(ev, ham):
    return (lambda p: embed3(ev(p)),
            lambda p: embed3(ham(p), 0.0))


def const_identity(points, n=2):
    p = np.asarray(points)
    return np.broadcast_to(np.eye(n, dtype=complex), p.shape[:-1] + (n, n)).copy()


# ---------------------------------------------------------------------------
# registry

def _build_registry():
    reg = {}

    def add(model):
        reg[model.name] = model

    add(ModelSpec(
        "rudner", 2, "torus3", _rudner,
        description="resonant four-step two-band drive on T^2 x S^1",
        hamiltonian=_rudner_h, discontinuities=(0.25, 0.5, 0.75),
        expected={"W3": 1, "Ch(X0;1)": 0, "Ch(loop;1)": -1, "Ch(loop;2)": -1},
        source={"W3": "degree of the resonant propagator",
                "Ch(X0;1)": "trivial eigenbundle on the t = 1/8, 7/8 slices",
                "Ch(loop;1)": "transition function winding around the t = 1/2 loop",
                "Ch(loop;2)": "same computation for the second band"}))
    add(ModelSpec(
        "identity-su2", 2, "sphere3", identity_su2,
        description="identity map SU(2) -> SU(2)",
        expected={"W3": 1, "Ch(1;1)": -1, "Ch(-1;2)": -1},
        source={"W3": "degree of the identity", "Ch(1;1)": "clutching function on the equator",
                "Ch(-1;2)": "clutching function on the equator"}))
    add(ModelSpec(
        "adjoint-su2", 2, "sphere_circle", adjoint_su2,
        description="adjoint map S^2 x S^1 -> SU(2)",
        hamiltonian=_adjoint_flow(TWO_PI)[1],
        expected={"W3": 2, "Ch(Cr1;1)": -2},
        source={"W3": "degree of the double cover", "Ch(Cr1;1)": "tautological and dual slices"}))
    add(ModelSpec(
        "embed-standard", 3, "sphere3", embed_standard,
        description="standard embedding SU(2) -> SU(3)",
        expected={"W3": 1, "Ch(1;2)": 0, "Ch(1;3)": 1, "Ch(-1;3)": -1},
        source={"W3": "degree of the embedding", "Ch(1;2)": "constant eigenvector",
                "Ch(1;3)": "reduces to the identity map", "Ch(-1;3)": "reduces to the identity map"}))
    add(ModelSpec(
        "embed-perturbed", 3, "sphere3", embed_perturbed,
        description="embedding twisted by e^{it} = i",
        expected={"W3": 1, "Ch(Cr3;3)": -1},
        source={"W3": "homotopic to the standard embedding",
                "Ch(Cr3;3)": "two slices contributing 0 and -1"}))
    add(ModelSpec(
        "adjoint-embed", 3, "sphere_circle", adjoint_embed,
        description="adjoint map followed by the standard embedding",
        expected={"W3": 2, "Ch(Y;2)+Ch(Y;3)": 2},
        source={"W3": "degree of the double cover",
                "Ch(Y;2)+Ch(Y;3)": "determinant bundle on the two slices"}))
    for name, rate, idx in (("floquet-u1", np.pi / 2, (1, 0)), ("floquet-u2", -3 * np.pi / 2, (-1, -2))):
        ev, ham = _adjoint_flow(rate)
        add(ModelSpec(
            name, 2, "sphere_cylinder", ev,
            description=f"conjugated diagonal flow with rate {rate / np.pi:+.2g} pi on CP^1 x [0, 1]",
            hamiltonian=ham, expected={"I": idx},
            source={"I": "local charges of the crossing components"},
            default_grid=(16, 24, 25)))
    for name, rate, i1 in (("floquet-v1", np.pi / 2, 1), ("floquet-v2", -3 * np.pi / 2, -1)):
        ev, ham = _embedded(*_adjoint_flow(rate))
        add(ModelSpec(
            name, 3, "sphere_cylinder", ev,
            description="two-band flow embedded in SU(3)",
            hamiltonian=ham, expected={"I1": i1},
            source={"I1": "full degeneracy at t = 0 contributes through bands 2 and 3"},
            default_grid=(16, 24, 25)))
    for name, tmax, idx in (("rudner-trunc-5-8", 5 / 8, (1, 1)), ("rudner-trunc-3-8", 3 / 8, (0, 0))):
        ev, ham, jumps = truncated_rudner(tmax)
        add(ModelSpec(
            name, 2, "torus_cylinder", ev,
            description=f"resonant drive stopped at t = {tmax:g}",
            hamiltonian=ham, discontinuities=jumps,
            expected={"I": idx, "C": (0, 0)},
            source={"I": "crossing charges of the truncated drive",
                    "C": "endpoint eigenbundles are trivial"},
            default_grid=(24, 24, 25)))
    add(ModelSpec(
        "const-identity", 2, "torus3", const_identity,
        description="constant identity field",
        hamiltonian=lambda p: np.zeros(np.shape(p)[:-1] + (2, 2), dtype=complex),
        expected={"W3": 0}, source={"W3": "constant map"}))
    return reg


MODELS = _build_registry()


def get_model(name):
    try:
        return MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(MODELS)}") from None


def list_models():
    return list(MODELS.values())
