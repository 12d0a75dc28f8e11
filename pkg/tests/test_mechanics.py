import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afmech.affinity import CounterexampleAffinity, OmegaAffinity, RowLinearAffinity, random_tangent
from afmech.integrate import IntegratorConfig, integrate
from afmech.labeling import GridGraph, build_omega, sflow_init, synth_dataset
from afmech.manifold import apply_replicator, barycenter, fisher_rao_inner, project_t0
from afmech.mechanics import (
    LagrangianState,
    a_operator,
    a_operator_bulk,
    acceleration_closed_form,
    b_matrix,
    b_operator_bulk,
    covariant_derivative,
    energy,
    euler_lagrange_residual,
    flow_field,
    flow_field_differential,
    grad_potential,
    lagrangian_vector_field,
    potential,
    variance,
)

from conftest import random_assignment, random_symmetric_stochastic

HALF = np.array([0.5, 0.5])
CONST_10 = RowLinearAffinity([[1.0, 1.0], [0.0, 0.0]])  # F(p) = (1, 0) on the simplex


def test_variance_examples():
    assert variance(HALF, [0.0, 1.0]) == 0.25
    assert variance([0.2, 0.3, 0.5], [2.0, 2.0, 2.0]) == pytest.approx(0.0, abs=1e-15)


@given(st.integers(2, 8), st.integers(0, 2**31))
def test_variance_is_replicator_norm(n, seed):
    rng = np.random.default_rng(seed)
    p = random_assignment(rng, 1, n)[0]
    f = rng.standard_normal(n)
    Rf = apply_replicator(p, f)
    assert abs(variance(p, f) - fisher_rao_inner(p, Rf, Rf)) <= 1e-10


@pytest.mark.parametrize(
    "F, W, G",
    [
        (RowLinearAffinity(np.eye(2)), HALF, 0.0),
        (CONST_10, HALF, -0.125),
        (OmegaAffinity(np.full((3, 3), 1 / 3)), barycenter(3, 4), 0.0),
    ],
)
def test_potential_examples(F, W, G):
    assert potential(F, W).G == pytest.approx(G, abs=1e-16)


def test_potential_is_nonpositive(rng):
    for _ in range(20):
        W = random_assignment(rng, 3, 4)
        assert potential(RowLinearAffinity(rng.standard_normal((4, 4))), W).G <= 0


def test_a_operator_examples(rng):
    assert np.array_equal(a_operator(HALF, [0.0, 0.0]), [0.0, 0.0])
    assert np.allclose(a_operator(HALF, [0.5, -0.5]), [0.0, 0.0], atol=1e-16)
    W = random_assignment(rng, 4, 5)
    V = random_tangent(rng, 4, 5)
    assert np.max(np.abs(a_operator_bulk(W, V).sum(axis=1))) <= 1e-12
    rows = np.stack([a_operator(w, v) for w, v in zip(W, V)])
    assert np.allclose(a_operator_bulk(W, V), rows, atol=1e-15)


def test_b_matrix_examples(rng):
    assert np.allclose(b_matrix(HALF, [1.0, 0.0]), [[0.0, 0.0], [-0.5, -0.5]], atol=1e-16)
    p = random_assignment(rng, 1, 4)[0]
    c = 2.5
    B = b_matrix(p, np.full(4, c))
    assert np.allclose(B, -c * np.outer(p, np.ones(4)), atol=1e-15)
    R = np.diag(p) - np.outer(p, p)
    assert np.allclose(B @ R @ np.full(4, c), 0, atol=1e-15)


@given(st.integers(2, 7), st.integers(0, 2**31))
def test_b_matrix_identities(n, seed):
    rng = np.random.default_rng(seed)
    p = random_assignment(rng, 1, n)[0]
    f = rng.standard_normal(n)
    R = np.diag(p) - np.outer(p, p)
    B = b_matrix(p, f)
    assert np.allclose(B @ R, R @ B.T, atol=1e-14)
    assert np.allclose(B @ (R @ f), a_operator(p, R @ f), atol=1e-14)
    V = rng.standard_normal((1, n))
    assert np.allclose(b_operator_bulk(p[None], f[None], V)[0], B @ V[0], atol=1e-14)


def test_flow_field_examples(rng):
    assert np.allclose(flow_field(CONST_10, HALF), [[0.25, -0.25]], atol=1e-16)
    F = OmegaAffinity(random_symmetric_stochastic(rng, 3))
    assert np.max(np.abs(flow_field(F, barycenter(3, 2)))) == 0


def _affinities(rng, m, n):
    yield OmegaAffinity(random_symmetric_stochastic(rng, m), symmetric=True)
    om = rng.random((m, m))
    yield OmegaAffinity(om / om.sum(axis=1, keepdims=True))
    yield RowLinearAffinity(rng.standard_normal((n, n)))
    if n >= 3:
        yield CounterexampleAffinity(n)


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(2, 6), st.integers(0, 2**31))
def test_flow_field_differential_fd(m, n, seed):
    rng = np.random.default_rng(seed)
    W = random_assignment(rng, m, n)
    V = random_tangent(rng, m, n)
    h = 1e-6
    for F in _affinities(rng, m, n):
        exact = flow_field_differential(F, W, V)
        fd = (flow_field(F, W + h * V) - flow_field(F, W - h * V)) / (2 * h)
        assert np.linalg.norm(fd - exact) <= 1e-6 * max(1.0, np.linalg.norm(exact))
        assert np.array_equal(flow_field_differential(F, W, np.zeros_like(W)), np.zeros_like(W))


def test_flow_field_differential_at_barycenter(rng):
    om = random_symmetric_stochastic(rng, 3)
    F = OmegaAffinity(om)
    B = barycenter(3, 4)
    V = random_tangent(rng, 3, 4)
    by_parts = apply_replicator(B, om @ V) + np.stack([b_matrix(b, f) @ v for b, f, v in zip(B, om @ B, V)])
    assert np.allclose(flow_field_differential(F, B, V), by_parts, atol=1e-15)


def gradient_fd_error(F, W, V, h=1e-6):
    """Relative mismatch of g(grad G, V) against central differences of G."""
    exact = fisher_rao_inner(W, grad_potential(F, W), V)
    fd = (potential(F, W + h * V).G - potential(F, W - h * V).G) / (2 * h)
    return abs(fd - exact) / max(abs(exact), 1e-8)


@settings(max_examples=30)
@given(st.integers(1, 6), st.integers(3, 6), st.integers(0, 2**31))
def test_grad_potential_fd(m, n, seed):
    rng = np.random.default_rng(seed)
    W = random_assignment(rng, m, n)
    V = random_tangent(rng, m, n)
    for F in _affinities(rng, m, n):
        assert gradient_fd_error(F, W, V) <= 1e-5
        assert abs(grad_potential(F, W).sum()) <= 1e-12 * max(1, np.abs(grad_potential(F, W)).max())


def test_grad_potential_vanishes_at_equilibrium(rng):
    F = OmegaAffinity(random_symmetric_stochastic(rng, 4))
    assert np.max(np.abs(grad_potential(F, barycenter(4, 3)))) == 0


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(2, 8), st.integers(0, 2**31))
def test_energy_zero_along_flow_field(m, n, seed):
    rng = np.random.default_rng(seed)
    W = random_assignment(rng, m, n)
    for F in _affinities(rng, m, n):
        U = flow_field(F, W)
        assert abs(energy(F, LagrangianState(W, U))) <= 1e-12 * m * n
        norm = fisher_rao_inner(W, U, U)
        assert energy(F, LagrangianState(W, 2 * U)) == pytest.approx(1.5 * norm, rel=1e-10, abs=1e-15)


def test_energy_and_field_at_equilibrium():
    F = OmegaAffinity(np.full((2, 2), 0.5))
    B = barycenter(2, 3)
    s = LagrangianState(B, np.zeros((2, 3)))
    assert energy(F, s) == 0
    dW, dV = lagrangian_vector_field(F, s)
    assert not dW.any() and not dV.any()


@settings(max_examples=20)
@given(st.integers(1, 5), st.integers(2, 5), st.integers(0, 2**31))
def test_lagrangian_field_matches_flow_derivative_when_admissible(m, n, seed):
    rng = np.random.default_rng(seed)
    F = OmegaAffinity(random_symmetric_stochastic(rng, m), symmetric=True)
    W = random_assignment(rng, m, n)
    U = flow_field(F, W)
    _, dV = lagrangian_vector_field(F, LagrangianState(W, U))
    assert np.allclose(dV, flow_field_differential(F, W, U), atol=1e-12)


def test_covariant_derivative_of_constant_velocity(rng):
    W = random_assignment(rng, 2, 3)
    V = random_tangent(rng, 2, 3)
    Ws, Vs = np.stack([W] * 4), np.stack([V] * 4)
    assert np.allclose(covariant_derivative(Ws, Vs, 0.1), -0.5 * a_operator_bulk(W, V), atol=1e-15)


def test_covariant_derivative_rejects_short_input():
    with pytest.raises(ValueError):
        covariant_derivative(np.ones((2, 1, 2)) / 2, np.zeros((2, 1, 2)), 0.1)


def _geodesic_residual(h):
    """Max |D_t V| along an RK4 geodesic (zero affinity => no force)."""
    F = RowLinearAffinity(np.zeros((3, 3)))
    W0 = np.array([[0.5, 0.3, 0.2], [0.2, 0.2, 0.6]])
    V0 = project_t0([[0.3, -0.1, 0.0], [0.0, 0.2, -0.1]])
    tr = integrate(F, LagrangianState(W0, V0), IntegratorConfig(h=h, t_end=1.0))
    cov = covariant_derivative(tr.states, tr.velocities, h)
    return np.linalg.norm(cov, axis=(1, 2))[:: round(0.05 / h)].max()


def test_geodesic_has_vanishing_covariant_acceleration():
    r1, r2 = _geodesic_residual(1e-2), _geodesic_residual(5e-3)
    assert r1 <= 1e-3
    assert 3.0 <= r1 / r2 <= 5.0


def _sflow_problem(size=4, n=3, seed=7):
    om = build_omega(GridGraph(size, size))
    return om, sflow_init(om, synth_dataset(size, size, n, 0.3, seed).D).S


def _acceleration_gap(F, W0, h):
    tr = integrate(F, W0, IntegratorConfig(h=h, t_end=0.5))
    Vs = np.stack([flow_field(F, W) for W in tr.states])
    cov = covariant_derivative(tr.states, Vs, h)
    closed = np.stack([acceleration_closed_form(F, W) for W in tr.states])
    return np.linalg.norm(cov - closed, axis=(1, 2))[:: round(0.05 / h)][1:-1].max()


@pytest.mark.parametrize("which", ["omega", "counterexample"])
def test_acceleration_closed_form_second_order(which):
    if which == "omega":
        F, W0 = _sflow_problem()
    else:
        F, W0 = CounterexampleAffinity(3), np.array([[0.45, 0.1, 0.45]])
    g1, g2 = _acceleration_gap(F, W0, 1e-2), _acceleration_gap(F, W0, 5e-3)
    assert 3.0 <= g1 / g2 <= 5.0


def test_el_residual_symmetric_omega_is_second_order():
    F, S0 = _sflow_problem()
    for h in (1e-2, 5e-3):
        el = euler_lagrange_residual(F, integrate(F, S0, IntegratorConfig(h=h, t_end=1.0)))
        assert np.all(el.residual <= 10 * h**2)
        assert el.identity_gap.max() <= 1e-9
        assert el.condition.max() <= 1e-10


def test_el_residual_counterexample_does_not_vanish():
    F = CounterexampleAffinity(3)
    el = euler_lagrange_residual(F, integrate(F, np.array([[0.45, 0.1, 0.45]]), IntegratorConfig(h=1e-3, t_end=0.5)))
    assert el.residual[1:-1].min() > 1e-3
    assert np.allclose(el.residual, el.condition, rtol=1e-3)
    assert el.bridge.max() <= 1e-5
    assert el.identity_gap.max() <= 1e-9


def test_el_residual_requires_uniform_samples():
    F = CounterexampleAffinity(3)
    tr = integrate(F, np.array([[0.45, 0.1, 0.45]]), IntegratorConfig(h=0.03, t_end=0.1))
    with pytest.raises(ValueError):
        euler_lagrange_residual(F, tr)
