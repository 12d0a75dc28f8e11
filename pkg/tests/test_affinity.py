import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afmech.affinity import (
    AffinityError,
    CounterexampleAffinity,
    OmegaAffinity,
    RowLinearAffinity,
    ScaledAffinity,
    adjoint_selfcheck,
    condition_norm,
    condition_operator,
    counterexample_eval,
    diff_fd_error,
    random_tangent,
)
from afmech.manifold import ManifoldError, apply_replicator, barycenter, project_t0

from conftest import assignments, random_assignment, random_symmetric_stochastic


def test_omega_fixes_barycenter_and_identity(rng):
    B = barycenter(4, 3)
    F = OmegaAffinity(random_symmetric_stochastic(rng, 4))
    assert np.allclose(F(B), B, atol=1e-15)
    S = random_assignment(rng, 4, 3)
    assert np.array_equal(OmegaAffinity(np.eye(4))(S), S)


def test_omega_hand_product():
    F = OmegaAffinity([[0.5, 0.5], [0.5, 0.5]])
    out = F([[0.5, 0.5], [0.75, 0.25]])
    assert np.allclose(out, [[0.625, 0.375]] * 2, atol=1e-16)


@pytest.mark.parametrize(
    "omega, symmetric",
    [
        ([[1.0, 0.5], [0.0, 1.0]], None),
        ([[-0.5, 1.5], [0.5, 0.5]], None),
        ([[0.3, 0.7], [0.5, 0.5]], True),
        ([[1.0, 0.0, 0.0]], None),
        ([[np.nan, 1.0], [0.5, 0.5]], None),
    ],
)
def test_omega_rejects_invalid(omega, symmetric):
    with pytest.raises(AffinityError):
        OmegaAffinity(omega, symmetric=symmetric)


def test_omega_is_read_only():
    F = OmegaAffinity(np.eye(2))
    with pytest.raises(ValueError):
        F.omega[0, 0] = 2.0


def test_omega_shape_mismatch():
    with pytest.raises(ManifoldError):
        OmegaAffinity(np.eye(3)).eval(barycenter(2, 3))


@pytest.mark.parametrize(
    "p, expected",
    [
        ([0.98, 0.01, 0.01], [0.0, 0.98, 0.0]),
        ([1 / 3, 1 / 3, 1 / 3], [0.0, 1 / 3, 0.0]),
    ],
)
def test_counterexample_eval(p, expected):
    assert np.allclose(counterexample_eval(p), expected, atol=1e-16)


def test_counterexample_needs_three_labels():
    with pytest.raises(AffinityError):
        CounterexampleAffinity(2)


def _affinities(rng, m, n):
    yield OmegaAffinity(random_symmetric_stochastic(rng, m))
    om = rng.random((m, m))
    yield OmegaAffinity(om / om.sum(axis=1, keepdims=True))
    yield RowLinearAffinity(rng.standard_normal((n, n)))
    if n >= 3:
        yield CounterexampleAffinity(n)
    yield ScaledAffinity(RowLinearAffinity(rng.standard_normal((n, n))), -1.7)


@settings(max_examples=40)
@given(st.integers(1, 6), st.integers(2, 6), st.integers(0, 2**31))
def test_adjoint_consistency(m, n, seed):
    rng = np.random.default_rng(seed)
    W = random_assignment(rng, m, n)
    for F in _affinities(rng, m, n):
        assert adjoint_selfcheck(F, W, trials=3, rng=rng) <= 1e-12


@settings(max_examples=40)
@given(st.integers(1, 6), st.integers(2, 6), st.integers(0, 2**31))
def test_diff_matches_finite_differences(m, n, seed):
    rng = np.random.default_rng(seed)
    W = random_assignment(rng, m, n)
    V = random_tangent(rng, m, n)
    for F in _affinities(rng, m, n):
        assert diff_fd_error(F, W, V) <= 1e-7


def test_symmetric_row_linear_adjoint(rng):
    M = rng.standard_normal((4, 4))
    F = RowLinearAffinity(M + M.T)
    assert adjoint_selfcheck(F, random_assignment(rng, 3, 4), rng=rng) <= 1e-12


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(2, 8), st.integers(0, 2**31))
def test_symmetric_omega_is_admissible(m, n, seed):
    rng = np.random.default_rng(seed)
    F = OmegaAffinity(random_symmetric_stochastic(rng, m), symmetric=True)
    assert condition_norm(F, random_assignment(rng, m, n)) <= 1e-10


def test_counterexample_quarter_quarter_half():
    C = condition_operator(CounterexampleAffinity(3), np.array([0.25, 0.25, 0.5]))
    assert abs(C[0, 0] - (-1 / 128)) <= 1e-15


def _closed_form(p):
    return -(p[0] ** 2) * p[1] * (1 - p[0] - p[1])


def _condition_oracle(p):
    """Explicit matrices: R_p (F - F^T) R_p F p for F = e_2 e_1^T."""
    n = p.size
    R = np.diag(p) - np.outer(p, p)
    M = np.zeros((n, n))
    M[1, 0] = 1.0
    return R @ (M - M.T) @ R @ (M @ p)


@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=6))
def test_counterexample_first_coordinate(raw):
    p = np.array(raw) / np.sum(raw)
    C = condition_operator(CounterexampleAffinity(p.size), p)[0]
    assert abs(C[0] - _closed_form(p)) <= 1e-12
    assert np.allclose(C, _condition_oracle(p), atol=1e-15)


def test_condition_vanishes_at_barycenter(rng):
    for F in _affinities(rng, 3, 4):
        if isinstance(F, OmegaAffinity):
            assert condition_norm(F, barycenter(3, 4)) <= 1e-16


@given(st.integers(1, 5), st.integers(0, 2**31))
def test_two_labels_always_admissible(m, seed):
    rng = np.random.default_rng(seed)
    F = RowLinearAffinity(rng.standard_normal((2, 2)))
    assert condition_norm(F, random_assignment(rng, m, 2)) <= 1e-12


def test_condition_lies_in_range_of_replicator(rng):
    W = random_assignment(rng, 1, 4)
    C = condition_operator(CounterexampleAffinity(4), W)
    assert abs(C.sum()) <= 1e-15
    assert np.allclose(apply_replicator(W, project_t0(C / W)), C, atol=1e-15)


@given(assignments(max_m=4, max_n=5))
def test_scaled_affinity_scales_condition_quadratically(W):
    n = W.shape[1]
    M = np.arange(n * n, dtype=float).reshape(n, n) % 3
    base = RowLinearAffinity(M)
    c1 = condition_operator(base, W)
    c2 = condition_operator(ScaledAffinity(base, 2.0), W)
    assert np.allclose(c2, 4 * c1, atol=1e-12)
