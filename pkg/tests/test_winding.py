import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floquet_crossings.errors import PhaseJumpTooLarge
from floquet_crossings.manifolds import build_grid
from floquet_crossings.models import get_model, rudner_propagator
from floquet_crossings.propagator import UnitaryField, sample
from floquet_crossings.winding import w1, w3

from oracles import haar_su, w3_riemann

T3 = build_grid("torus3", (24, 24, 24))


def rudner_field(grid=T3, swap=False, shift=0.0):
    c = grid.coords()
    k1, k2 = (c[..., 1], c[..., 0]) if swap else (c[..., 0], c[..., 1])
    return UnitaryField(grid, rudner_propagator(k1, k2, np.mod(c[..., 2] + shift, 1.0)))


# --- W1 ----------------------------------------------------------------------

def test_w1_constant():
    assert w1(np.broadcast_to(np.eye(2), (16, 2, 2))).integer == 0


def test_w1_single_revolution():
    t = np.arange(32) / 32
    loop = np.zeros((32, 2, 2), complex)
    loop[:, 0, 0] = np.exp(2j * np.pi * t)
    loop[:, 1, 1] = 1
    r = w1(loop)
    assert r.integer == 1 and r.residual < 1e-6


def test_w1_rudner_det_loop():
    t = np.arange(64) / 64
    assert w1(rudner_propagator(0.3, -1.2, t)).integer == 0


def test_w1_jump_too_large():
    loop = np.zeros((3, 1, 1), complex)
    loop[:, 0, 0] = np.exp(2j * np.pi * np.arange(3) / 3)
    with pytest.raises(PhaseJumpTooLarge):
        w1(loop)


# --- W3 reference values -----------------------------------------------------

def test_w3_constant():
    assert w3(sample(get_model("const-identity"), T3)).value == 0


@pytest.mark.parametrize("name, expected", [("identity-su2", 1), ("rudner", 1), ("adjoint-su2", 2)])
def test_w3_reference_values(name, expected):
    m = get_model(name)
    r = w3(sample(m, build_grid(m.domain_kind, (24, 24, 24))))
    assert abs(r.value - expected) < 0.05 and r.integer == expected


@pytest.mark.parametrize("name", ["identity-su2", "rudner", "adjoint-su2", "embed-standard"])
def test_w3_against_quadrature_oracle(name):
    m = get_model(name)
    g = build_grid(m.domain_kind, (24, 24, 24))
    ref = w3_riemann(m, g.bounds, 32)
    assert abs(w3(sample(m, g)).value - ref) < 0.05


def test_forward_scheme_integer():
    # the first-order scheme is coarser but still lands on the right integer
    r = w3(rudner_field(build_grid("torus3", (32, 32, 32))), scheme="forward")
    assert r.integer == 1 and r.residual < 0.1


def test_unknown_scheme():
    with pytest.raises(ValueError):
        w3(rudner_field(build_grid("torus3", (8, 8, 8))), scheme="simpson")


# --- properties ----------------------------------------------------------------

def test_orientation_reversal():
    f = rudner_field()
    r = w3(UnitaryField(T3.reversed(), f.values))
    assert np.isclose(r.value, -w3(f).value)


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_axis_reflection_negates(axis):
    f = rudner_field()
    flipped = np.roll(np.flip(f.values, axis=axis), 1, axis=axis)
    assert np.isclose(w3(UnitaryField(T3, flipped)).value, -w3(f).value, atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_conjugation_invariance(seed):
    g = haar_su(2, np.random.default_rng(seed))
    f = rudner_field()
    conj = UnitaryField(T3, g @ f.values @ g.conj().T)
    assert w3(conj).integer == 1
    assert np.isclose(w3(conj).value, w3(f).value, atol=1e-9)


def test_refinement_keeps_integer():
    for name in ("rudner", "identity-su2", "adjoint-su2"):
        m = get_model(name)
        vals = [w3(sample(m, build_grid(m.domain_kind, (n, n, n)))) for n in (16, 24, 32)]
        assert len({r.integer for r in vals}) == 1
        assert vals[-1].residual <= vals[0].residual


def test_convergence_rate():
    m = get_model("identity-su2")
    res = [w3(sample(m, build_grid("sphere3", (n, n, n)))).residual for n in (12, 24)]
    assert res[1] <= res[0] / 2


def test_additivity():
    a, b = rudner_field(), rudner_field(shift=0.37)
    c = rudner_field(swap=True)
    for x, y in ((a, b), (a, c)):
        rx, ry = w3(x), w3(y)
        rp = w3(UnitaryField(T3, x.values @ y.values))
        assert rp.integer == rx.integer + ry.integer
        assert abs(rp.value - rx.value - ry.value) < rp.residual + rx.residual + ry.residual + 0.05


def test_glued_threshold_doubled():
    f = rudner_field()
    glued = UnitaryField(T3, f.values, glued=True)
    assert w3(glued).threshold == 2 * w3(f).threshold


def test_deterministic():
    f = rudner_field()
    assert w3(f).value == w3(f).value
