import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floquet_crossings.errors import BranchCutHit, NotSpecialUnitary
from floquet_crossings.linalg import (LABEL_TOL, branch_log, exp_i_hermitian, gap, gap_values,
                                      label_eigenvalues, label_stack, random_unitary, stratum)

from oracles import haar_su, label_candidates, scalar_branch_log


def lab(*phases):
    return label_eigenvalues(np.diag(np.exp(2j * np.pi * np.array(phases))))


# --- labeling ---------------------------------------------------------------

def test_label_diag_i_minus_i():
    assert np.allclose(label_eigenvalues(np.diag([1j, -1j])).lambdas, [0.25, -0.25])


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_label_identity_is_zero(n):
    assert np.allclose(label_eigenvalues(np.eye(n)).lambdas, 0)


def test_label_minus_one_one_minus_one():
    assert np.allclose(label_eigenvalues(np.diag([-1, 1, -1])).lambdas, [0.5, 0, -0.5])


def test_label_minus_identity_su2():
    assert np.allclose(label_eigenvalues(-np.eye(2)).lambdas, [0.5, -0.5])


def test_label_ignores_eigenvalue_order():
    rng = np.random.default_rng(4)
    u = haar_su(4, rng)
    w, v = np.linalg.eig(u)
    perm = rng.permutation(4)
    u2 = v[:, perm] @ np.diag(w[perm]) @ np.linalg.inv(v[:, perm])
    assert np.allclose(label_eigenvalues(u).lambdas, label_eigenvalues(u2).lambdas, atol=1e-9)


def test_label_matches_cyclic_shift_search():
    rng = np.random.default_rng(0)
    for n in (2, 3, 4):
        for _ in range(1000):
            u = haar_su(n, rng)
            cands = label_candidates(u)
            assert len(cands) == 1
            assert np.allclose(label_eigenvalues(u).lambdas, cands[0], atol=1e-9)


def test_label_rejects_non_special():
    with pytest.raises(NotSpecialUnitary):
        label_eigenvalues(np.diag([1j, 1j]))


def test_label_stack_matches_single():
    rng = np.random.default_rng(1)
    us = np.stack([haar_su(3, rng) for _ in range(20)])
    lam, vec, res = label_stack(us)
    for i in range(20):
        assert np.allclose(lam[i], label_eigenvalues(us[i]).lambdas)
    assert np.max(res) < 1e-9


def test_random_unitary_is_special():
    u = random_unitary(4, np.random.default_rng(2), special=True)
    assert np.allclose(u @ u.conj().T, np.eye(4))
    assert np.isclose(np.linalg.det(u), 1)


sizes = st.integers(2, 4)
seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=200, deadline=None)
@given(n=sizes, seed=seeds)
def test_conjugation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    u, g = haar_su(n, rng), haar_su(n, rng)
    a = label_eigenvalues(u).lambdas
    b = label_eigenvalues(g @ u @ g.conj().T).lambdas
    assert np.allclose(a, b, atol=10 * LABEL_TOL)


@settings(max_examples=200, deadline=None)
@given(n=sizes, seed=seeds)
def test_reconstruction(n, seed):
    u = haar_su(n, np.random.default_rng(seed))
    lb = label_eigenvalues(u)
    v = lb.vectors
    rec = v @ np.diag(np.exp(2j * np.pi * lb.lambdas)) @ v.conj().T
    assert np.allclose(rec, u, atol=1e3 * LABEL_TOL)


@settings(max_examples=200, deadline=None)
@given(n=sizes, seed=seeds)
def test_labeling_chain_and_sum(n, seed):
    lam = label_eigenvalues(haar_su(n, np.random.default_rng(seed))).lambdas
    assert np.all(np.diff(lam) <= 1e-12)
    assert lam[-1] >= lam[0] - 1 - 1e-12
    assert abs(lam.sum()) < 1e-9


# --- gaps and strata --------------------------------------------------------

def test_gap_examples():
    lb = lab(0.25, -0.25)
    assert np.isclose(gap(lb, 1), 0.5)
    assert np.isclose(gap(lb, 2), 0.5)
    assert np.isclose(gap(label_eigenvalues(np.diag([-1, 1, -1])), 3), 0)


def test_gap_out_of_range():
    with pytest.raises((IndexError, ValueError)):
        gap(lab(0.25, -0.25), 3)


def test_stratum_examples():
    s = stratum(lab(0.25, -0.25), 1e-6)
    assert s.k == 0 and set(s.pattern) == set()
    s = stratum(label_eigenvalues(np.eye(2)), 1e-6)
    assert s.k == 1 and set(s.pattern) == {1}
    s = stratum(label_eigenvalues(-np.eye(2)), 1e-6)
    assert s.k == 1 and set(s.pattern) == {2}


@settings(max_examples=100, deadline=None)
@given(n=sizes, seed=seeds, tol=st.floats(1e-4, 0.3))
def test_stratum_counts_small_gaps(n, seed, tol):
    lb = label_eigenvalues(haar_su(n, np.random.default_rng(seed)))
    g = gap_values(lb.lambdas)
    s = stratum(lb, tol)
    assert s.k == int(np.sum(g < tol)) == len(s.pattern)


# --- branch logarithm -------------------------------------------------------

def test_branch_log_examples():
    assert np.allclose(branch_log(np.eye(2), 0.5), 0)
    assert np.allclose(branch_log(np.diag([1j, -1j]), 0.5), np.diag([0.25, -0.25]))
    assert np.allclose(branch_log(np.diag([1j, -1j]), 0.0), np.diag([-0.75, -0.25]))


def test_branch_log_matches_scalar_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = haar_su(3, rng)
        alpha = rng.uniform(-1, 1)
        try:
            h = branch_log(u, alpha)
        except BranchCutHit:
            continue
        assert np.allclose(h, scalar_branch_log(u, alpha), atol=1e-8)


def test_branch_log_cut_hit():
    with pytest.raises(BranchCutHit):
        branch_log(np.diag([1j, -1j]), 0.25)


@settings(max_examples=200, deadline=None)
@given(n=sizes, seed=seeds, alpha=st.floats(-2, 2))
def test_exp_of_log(n, seed, alpha):
    u = haar_su(n, np.random.default_rng(seed))
    try:
        h = branch_log(u, alpha)
    except BranchCutHit:
        return
    assert np.allclose(exp_i_hermitian(h), u, atol=1e3 * LABEL_TOL)
    w = np.linalg.eigvalsh(h)
    assert np.all(w < alpha) and np.all(w > alpha - 1)
