import json

import numpy as np
import pytest

from floquet_crossings.errors import GridMismatch, NotFloquetMap
from floquet_crossings.indices import (HOMOTOPIC, NOT_HOMOTOPIC, check_floquet,
                                       check_index_relations, classify, endpoint_cherns,
                                       floquet_data, floquet_indices, verify,
                                       verify_local_formula)
from floquet_crossings.manifolds import build_grid
from floquet_crossings.models import MODELS, get_model
from floquet_crossings.propagator import UnitaryField, sample

CLOSED = [n for n, m in MODELS.items() if not m.is_floquet]
FLOQUET = [n for n, m in MODELS.items() if m.is_floquet]


def grid_of(name):
    m = get_model(name)
    return m, build_grid(m.domain_kind, m.default_grid)


# --- closed manifolds -------------------------------------------------------------

def test_local_formula_rudner():
    m, g = grid_of("rudner")
    ok, w, d = verify_local_formula(m, g, 1, threshold=0.05)
    assert ok and w.integer == 1 and sorted(d.charges) == [-1, 0]


def test_local_formula_perturbed_embedding():
    m, g = grid_of("embed-perturbed")
    ok, w, d = verify_local_formula(m, g, 3, threshold=0.05)
    assert ok and d.charges == [-1]


def test_local_formula_standard_embedding_identity_term():
    m, g = grid_of("embed-standard")
    ok, w, d = verify_local_formula(m, g, 2, threshold=0.05)
    assert ok and d.charges == [] and d.identity_charges == [{3: 1}]


@pytest.mark.parametrize("name", CLOSED)
def test_j_independence(name):
    rep = verify(get_model(name))
    assert rep.passed, rep.table()
    rhs = next(c for c in rep.checks if c.name == "independent of j").computed
    assert len(set(rhs.values())) == 1


def test_const_identity_all_zero():
    rep = verify(get_model("const-identity"))
    assert rep.passed and rep.w3["integer"] == 0
    assert all(c["ch"] == 0 for cs in rep.crossings.values() for c in cs)


# --- Floquet maps ----------------------------------------------------------------

@pytest.mark.parametrize("name, expected", [
    ("floquet-u1", [1, 0]), ("floquet-u2", [-1, -2]),
    ("rudner-trunc-5-8", [1, 1]), ("rudner-trunc-3-8", [0, 0])])
def test_floquet_indices(name, expected):
    m, g = grid_of(name)
    assert floquet_indices(floquet_data(m, g)) == expected


@pytest.mark.parametrize("name, expected", [("floquet-v1", 1), ("floquet-v2", -1)])
def test_floquet_index_su3(name, expected):
    m, g = grid_of(name)
    assert floquet_indices(floquet_data(m, g))[0] == expected


def test_endpoint_cherns_truncated_drive():
    m, g = grid_of("rudner-trunc-5-8")
    assert endpoint_cherns(m, g) == [0, 0]


def test_endpoint_cherns_constant():
    m = get_model("const-identity")
    g = build_grid("torus_cylinder", (8, 8, 9))
    diag = lambda p: np.broadcast_to(np.diag([1j, -1j]), np.shape(p)[:-1] + (2, 2))  # noqa: E731
    assert endpoint_cherns(type(m)("c", 2, "torus_cylinder", diag), g) == [0, 0]


def test_endpoint_cherns_u1_follow_index_relation():
    # I(U2; 2) - I(U2; 1) = -1 forces C(V; 2) = -1 on the shared endpoint
    for name in ("floquet-u1", "floquet-u2"):
        m, g = grid_of(name)
        assert endpoint_cherns(m, g) == [1, -1]


@pytest.mark.parametrize("name", FLOQUET)
def test_index_relations(name):
    m, g = grid_of(name)
    checks = check_index_relations(m, g)
    assert all(c.passed for c in checks), [(c.name, c.expected, c.computed) for c in checks]
    n = m.n
    assert len([c for c in checks if c.name.startswith("I(")]) == n * (n + 1) // 2


@pytest.mark.parametrize("name", FLOQUET)
def test_endpoint_cherns_sum_to_zero(name):
    m, g = grid_of(name)
    assert sum(endpoint_cherns(m, g)) == 0


def test_not_floquet_map():
    m, g = grid_of("floquet-u2")
    f = sample(m, g)
    bad = UnitaryField(g, f.values[:, :, ::-1].copy())
    with pytest.raises(NotFloquetMap):
        check_floquet(bad)


# --- classification -----------------------------------------------------------------

def test_classify_u1_u2():
    m, g = grid_of("floquet-u1")
    v = classify(m, get_model("floquet-u2"), g)
    assert v.verdict == NOT_HOMOTOPIC
    assert v.glue_w3["integer"] == 2 and abs(v.glue_w3["value"] - 2) < 0.1
    assert v.glue_consistent
    assert v.criterion_indices == v.criterion_mixed


@pytest.mark.parametrize("name", FLOQUET)
def test_classify_self(name):
    m, g = grid_of(name)
    v = classify(m, m, g)
    assert v.verdict == HOMOTOPIC and v.glue_w3["integer"] == 0


def test_classify_truncated_pair():
    m, g = grid_of("rudner-trunc-5-8")
    v = classify(m, get_model("rudner-trunc-3-8"), g)
    assert v.verdict == NOT_HOMOTOPIC and v.cherns[0] == v.cherns[1]
    assert v.criterion_indices == v.criterion_mixed


def test_criteria_agree_on_all_pairs():
    names = [n for n in FLOQUET if MODELS[n].domain_kind == "sphere_cylinder"]
    for a in names:
        for b in names:
            ma, mb = get_model(a), get_model(b)
            if ma.n != mb.n:
                continue
            v = classify(ma, mb, build_grid(ma.domain_kind, ma.default_grid))
            assert v.criterion_indices == v.criterion_mixed


def test_classify_mismatch():
    m, g = grid_of("floquet-u1")
    with pytest.raises(GridMismatch):
        classify(m, get_model("floquet-v1"), g)
    with pytest.raises(GridMismatch):
        classify(m, get_model("floquet-u2"), build_grid("torus_cylinder", (8, 8, 9)))


# --- reports -----------------------------------------------------------------------

def test_report_json_schema_and_determinism():
    a = verify(get_model("rudner")).to_json()
    b = verify(get_model("rudner")).to_json()
    assert a == b
    d = json.loads(a)
    assert d["schema"] == 1 and d["passed"] and d["w3"]["integer"] == 1
    assert set(d["provenance"]) >= {"W3"}


def test_report_table_mentions_checks():
    rep = verify(get_model("floquet-u1"))
    t = rep.table()
    assert "I(U; j) = [1, 0]" in t and "[PASS]" in t and "[FAIL]" not in t
