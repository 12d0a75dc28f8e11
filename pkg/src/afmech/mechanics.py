"""Lagrangian mechanics of assignment flows.

The Lagrangian is ``L(W, V) = 1/2 |V|_g^2 - G(W)`` with the non-positive
potential ``G(W) = -1/2 sum_i Var_{W_i}(F_i(W))``. Everything here is
expressed in the flat embedding: tangent vectors are zero-row-sum
matrices and time derivatives are ordinary derivatives of arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affinity import Affinity, condition_operator
from .manifold import (
    ManifoldError,
    _as_matrix,
    apply_replicator,
    check_assignment,
)


@dataclass(frozen=True)
class LagrangianState:
    """A point ``(W, V)`` of the tangent bundle."""

    W: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class PotentialValue:
    G: float
    variances: np.ndarray


def variance(p, f) -> float:
    """``Var_p(f) = <p, f^2> - <p, f>^2``."""
    p = np.asarray(p, dtype=float)
    f = np.asarray(f, dtype=float)
    mean = np.dot(p, f)
    return float(np.dot(p, f * f) - mean * mean)


def _row_variances(W: np.ndarray, A: np.ndarray) -> np.ndarray:
    mean = np.sum(W * A, axis=1)
    return np.sum(W * A * A, axis=1) - mean * mean


def potential(F: Affinity, W) -> PotentialValue:
    W = check_assignment(W)
    var = _row_variances(W, F.eval(W))
    return PotentialValue(G=-0.5 * float(var.sum()) + 0.0, variances=var)


def a_operator(p, v) -> np.ndarray:
    """``A(p, v) = v^2 / p - |v|_g^2 p`` for a single row."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    q = v * v / p
    return q - q.sum() * p


def a_operator_bulk(W, V) -> np.ndarray:
    W = _as_matrix(W, "W")
    V = _as_matrix(V, "V")
    if W.shape != V.shape:
        raise ManifoldError(f"shape mismatch: {W.shape} vs {V.shape}")
    Q = V * V / W
    return Q - Q.sum(axis=1, keepdims=True) * W


def b_matrix(p, f) -> np.ndarray:
    """``B(p, f) = Diag(f) - <p, f> I - p f^T``."""
    p = np.asarray(p, dtype=float)
    f = np.asarray(f, dtype=float)
    n = p.size
    return np.diag(f) - np.dot(p, f) * np.eye(n) - np.outer(p, f)


def b_operator_bulk(W, A, V) -> np.ndarray:
    """Rowwise ``B(W_i, A_i) V_i`` without forming the matrices."""
    return (A - np.sum(W * A, axis=1, keepdims=True)) * V - W * np.sum(A * V, axis=1, keepdims=True)


def flow_field(F: Affinity, W) -> np.ndarray:
    """Assignment-flow vector field ``R_W[F(W)]``."""
    W = check_assignment(W)
    return apply_replicator(W, F.eval(W))


def flow_field_differential(F: Affinity, W, V) -> np.ndarray:
    """Differential of ``W -> R_W[F(W)]`` in direction ``V``."""
    W = check_assignment(W)
    V = _as_matrix(V, "V")
    return apply_replicator(W, F.diff(W, V)) + b_operator_bulk(W, F.eval(W), V)


def grad_potential(F: Affinity, W) -> np.ndarray:
    """Riemannian (Fisher-Rao) gradient of the potential ``G``."""
    W = check_assignment(W)
    U = apply_replicator(W, F.eval(W))
    return -apply_replicator(W, F.adjoint_diff(W, U)) - 0.5 * a_operator_bulk(W, U)


def acceleration_closed_form(F: Affinity, W) -> np.ndarray:
    """Covariant acceleration of the assignment flow through ``W``.

    ``R_W dF R_W[F] + 1/2 A(W, R_W[F])``, valid for any affinity.
    """
    W = check_assignment(W)
    U = apply_replicator(W, F.eval(W))
    return apply_replicator(W, F.diff(W, U)) + 0.5 * a_operator_bulk(W, U)


def covariant_derivative(Ws, Vs, h: float) -> np.ndarray:
    """``dV/dt - 1/2 A(W, V)`` along uniformly sampled ``(W_k, V_k)``.

    ``dV/dt`` uses central differences in the interior and second-order
    one-sided differences at both ends.
    """
    Ws = np.asarray(Ws, dtype=float)
    Vs = np.asarray(Vs, dtype=float)
    if Ws.shape != Vs.shape or Ws.ndim != 3:
        raise ManifoldError("expected matching (K, m, n) sample arrays")
    if len(Ws) < 3:
        raise ValueError("covariant_derivative needs at least 3 samples")
    if not h > 0:
        raise ValueError("step must be positive")
    Vdot = np.gradient(Vs, h, axis=0, edge_order=2)
    Q = Vs * Vs / Ws
    A = Q - Q.sum(axis=2, keepdims=True) * Ws
    return Vdot - 0.5 * A


def energy(F: Affinity, s: LagrangianState) -> float:
    """``E(W, V) = 1/2 |V|_g^2 + G(W)``."""
    W = check_assignment(s.W)
    V = _as_matrix(s.V, "V")
    return 0.5 * float(np.sum(V * V / W)) + potential(F, W).G


def lagrangian_vector_field(F: Affinity, s: LagrangianState) -> tuple[np.ndarray, np.ndarray]:
    W = check_assignment(s.W)
    V = _as_matrix(s.V, "V")
    return V, 0.5 * a_operator_bulk(W, V) - grad_potential(F, W)


@dataclass(frozen=True)
class ELResidual:
    """Euler-Lagrange diagnostics along a sampled first-order trajectory.

    Attributes
    ----------
    residual : per-sample ``|D_t W' + grad G|_F`` with ``D_t W'`` from
        finite differences.
    bridge : per-sample ``|D_t W' + grad G - C(W)|_F`` where ``C`` is the
        admissibility condition term; shrinks like ``h^2`` for any affinity.
    condition : per-sample ``|C(W)|_F``.
    identity_gap : per-sample gap of the closed-form identity
        ``acc(W) + grad G(W) = C(W)``; roundoff only.
    """

    times: np.ndarray
    residual: np.ndarray
    bridge: np.ndarray
    condition: np.ndarray
    identity_gap: np.ndarray


def euler_lagrange_residual(F: Affinity, trajectory) -> ELResidual:
    """Euler-Lagrange residual along a uniformly sampled trajectory.

    ``trajectory`` needs ``times`` and ``states``; if it carries
    ``velocities`` those are used, otherwise the flow field is evaluated
    at every sample.
    """
    times = np.asarray(trajectory.times, dtype=float)
    Ws = np.asarray(trajectory.states, dtype=float)
    if len(times) < 3:
        raise ValueError("need at least 3 samples")
    dt = np.diff(times)
    h = float(dt.mean())
    if np.max(np.abs(dt - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("trajectory must be uniformly sampled")
    Vs = getattr(trajectory, "velocities", None)
    if Vs is None:
        Vs = np.stack([flow_field(F, W) for W in Ws])
    Vs = np.asarray(Vs, dtype=float)

    cov = covariant_derivative(Ws, Vs, h)
    residual, bridge, cond, gap = [], [], [], []
    for W, D in zip(Ws, cov):
        g = grad_potential(F, W)
        C = condition_operator(F, W)
        residual.append(np.linalg.norm(D + g))
        bridge.append(np.linalg.norm(D + g - C))
        cond.append(np.linalg.norm(C))
        gap.append(np.linalg.norm(acceleration_closed_form(F, W) + g - C))
    return ELResidual(
        times=times,
        residual=np.array(residual),
        bridge=np.array(bridge),
        condition=np.array(cond),
        identity_gap=np.array(gap),
    )
