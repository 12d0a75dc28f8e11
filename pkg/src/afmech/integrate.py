"""Time integration of first- and second-order assignment dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .affinity import Affinity
from .manifold import (
    ManifoldError,
    apply_replicator,
    check_assignment,
    floor_rows,
    lift_counted,
    project_t0,
)
from .mechanics import LagrangianState, lagrangian_vector_field, potential

FLOOR_STORM_FRACTION = 0.01
JACOBI_RATE = 2.0
JACOBI_DELTA = 1e-8


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings for :func:`integrate`.

    ``eps_conv=None`` disables the convergence stop so that the run always
    reaches ``t_end``.
    """

    method: str = "rk4"
    h: float = 1e-2
    t_end: float = 1.0
    stride: int = 1
    eps_conv: float | None = None

    def __post_init__(self):
        if self.method not in ("geometric-euler", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("step h must be positive")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be nonnegative")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError("stride must be a positive integer")
        if self.eps_conv is not None and not 0 < self.eps_conv < 1:
            raise ValueError("eps_conv must lie in (0, 1)")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray | None = None
    converged: bool = False
    n_steps: int = 0
    floored: int = 0

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def geometric_euler_step(F: Affinity, W, h: float) -> np.ndarray:
    """``W_next = lift(W, h F(W))``; stays on the manifold by construction."""
    W = check_assignment(W)
    return lift_counted(W, h * F.eval(W))[0]


def _rk4_first_order(F: Affinity, W: np.ndarray, h: float) -> tuple[np.ndarray, int]:
    def f(X):
        return apply_replicator(X, F.eval(X))

    k1 = f(W)
    k2 = f(W + 0.5 * h * k1)
    k3 = f(W + 0.5 * h * k2)
    k4 = f(W + h * k3)
    return floor_rows(W + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))


def rk4_step_first_order(F: Affinity, W, h: float, return_floored: bool = False):
    """Classical RK4 step for ``W' = R_W[F(W)]`` in the flat embedding.

    Rows are floored at ``1e-14`` and renormalized after the full step.
    With ``return_floored=True`` the number of clamped entries is returned
    as well.
    """
    W = check_assignment(W)
    out, count = _rk4_first_order(F, W, h)
    return (out, count) if return_floored else out


def _rk4_second_order(F: Affinity, s: LagrangianState, h: float) -> tuple[LagrangianState, int]:
    def f(W, V):
        return lagrangian_vector_field(F, LagrangianState(W, V))

    W, V = s.W, s.V
    a1, b1 = f(W, V)
    a2, b2 = f(W + 0.5 * h * a1, V + 0.5 * h * b1)
    a3, b3 = f(W + 0.5 * h * a2, V + 0.5 * h * b2)
    a4, b4 = f(W + h * a3, V + h * b3)
    W_new = W + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
    V_new = V + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
    W_new, count = floor_rows(W_new)
    return LagrangianState(W_new, project_t0(V_new)), count


def rk4_step_second_order(F: Affinity, s: LagrangianState, h: float) -> LagrangianState:
    """Classical RK4 step for the Lagrangian vector field on ``(W, V)``.

    ``W`` is floored and renormalized, ``V`` is reprojected onto zero row
    sums after each step.
    """
    s = LagrangianState(check_assignment(s.W), np.asarray(s.V, dtype=float))
    return _rk4_second_order(F, s, h)[0]


def labeling_confidence(W: np.ndarray) -> float:
    """``min_i max_j W_ij``."""
    return float(np.min(np.max(W, axis=1)))


def integrate(F: Affinity, start, config: IntegratorConfig, monitor_rows=None) -> Trajectory:
    """Integrate from ``start`` until ``t_end`` or labeling convergence.

    ``start`` is an assignment matrix (first-order flow) or a
    :class:`LagrangianState` (second-order flow, which always uses RK4 and
    records velocities).

    Every ``stride``-th state is recorded; the final state is always
    recorded. If ``t_end`` is not a multiple of ``h`` the last step is
    shortened. ``monitor_rows`` (an index or slice) restricts the
    convergence test to a subset of rows.

    Raises
    ------
    IntegrationError
        On non-finite values, when a step leaves the manifold, or when more
        than 1% of the entries hit the positivity floor in a single step.
    """
    second_order = isinstance(start, LagrangianState)
    if second_order:
        W = check_assignment(start.W)
        V = project_t0(start.V)
    else:
        W = check_assignment(start)
        V = None
    m, n = W.shape
    storm = FLOOR_STORM_FRACTION * m * n
    h = config.h
    n_steps = max(0, math.ceil(config.t_end / h - 1e-9))

    times, states, vels = [0.0], [W], [V]
    floored = 0
    rows = slice(None) if monitor_rows is None else monitor_rows
    converged = config.eps_conv is not None and labeling_confidence(W[rows]) >= 1 - config.eps_conv
    k = 0
    t = 0.0
    while k < n_steps and not converged:
        step = config.t_end - k * h if k == n_steps - 1 else h
        try:
            if second_order:
                s, count = _rk4_second_order(F, LagrangianState(W, V), step)
                W, V = s.W, s.V
            elif config.method == "rk4":
                W, count = _rk4_first_order(F, W, step)
            else:
                W, count = lift_counted(W, step * F.eval(W))
        except (ManifoldError, FloatingPointError) as exc:
            raise IntegrationError(f"step {k + 1} at t={t:.6g} failed: {exc}") from exc
        k += 1
        t = config.t_end if k == n_steps else k * h
        if not np.all(np.isfinite(W)) or (V is not None and not np.all(np.isfinite(V))):
            raise IntegrationError(f"non-finite state after step {k} (t={t:.6g})")
        if count > storm:
            raise IntegrationError(
                f"positivity floor hit {count} of {m * n} entries in step {k} (t={t:.6g})"
            )
        floored += count
        if config.eps_conv is not None:
            converged = labeling_confidence(W[rows]) >= 1 - config.eps_conv
        if k % config.stride == 0 or k == n_steps or converged:
            times.append(t)
            states.append(W)
            vels.append(V)

    return Trajectory(
        times=np.array(times),
        states=np.stack(states),
        velocities=np.stack(vels) if second_order else None,
        converged=bool(converged),
        n_steps=k,
        floored=floored,
    )


@dataclass(frozen=True)
class JacobiTrajectory:
    """A trajectory reparametrized by ``ds/dt = rate * (-G)``.

    ``speeds`` holds ``|dW/ds|`` measured in the Jacobi metric
    ``(-G) g``; along an energy-zero curve it is constant.
    """

    times: np.ndarray
    s: np.ndarray
    states: np.ndarray
    speeds: np.ndarray
    neg_G: np.ndarray
    rate: float

    @property
    def speed_mean(self) -> float:
        return float(np.mean(self.speeds))

    @property
    def relative_std(self) -> float:
        return float(np.std(self.speeds) / np.mean(self.speeds))

    @property
    def relative_variation(self) -> float:
        return float((np.max(self.speeds) - np.min(self.speeds)) / np.mean(self.speeds))


def jacobi_speeds(F: Affinity, times, states, rate: float = JACOBI_RATE, delta: float = JACOBI_DELTA):
    """Per-sample ``(-G, |dW/ds|_{h0})``; speeds are NaN where ``-G < delta``.

    ``dW/dt`` comes from second-order finite differences of the samples, so
    the result does not depend on the vector field that produced them.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if len(times) < 3:
        raise ValueError("need at least 3 samples")
    neg_G = np.array([-potential(F, W).G for W in states])
    Wdot = np.gradient(states, times, axis=0, edge_order=2)
    g_speed = np.sqrt(np.sum(Wdot * Wdot / states, axis=(1, 2)))
    ok = neg_G >= delta
    speeds = np.full(len(times), np.nan)
    speeds[ok] = g_speed[ok] / (rate * np.sqrt(neg_G[ok]))
    return neg_G, speeds


def jacobi_reparametrize(
    F: Affinity, traj: Trajectory, rate: float = JACOBI_RATE, delta: float = JACOBI_DELTA
) -> JacobiTrajectory:
    """Reparametrize a first-order trajectory for the energy-zero Jacobi metric.

    The new parameter is ``s(t) = int_0^t rate * (-G) dt`` (trapezoid rule).

    Raises
    ------
    ValueError
        If some sample has ``-G < delta``, i.e. touches the Mane critical set.
    """
    times = np.asarray(traj.times, dtype=float)
    neg_G, speeds = jacobi_speeds(F, times, traj.states, rate, delta)
    bad = np.flatnonzero(neg_G < delta)
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"sample {i} (t={times[i]:.6g}) lies in the critical set: -G={neg_G[i]:.3e} < {delta:g}"
        )
    dsdt = rate * neg_G
    s = np.concatenate([[0.0], np.cumsum(0.5 * (dsdt[1:] + dsdt[:-1]) * np.diff(times))])
    return JacobiTrajectory(
        times=times, s=s, states=np.asarray(traj.states), speeds=speeds, neg_G=neg_G, rate=rate
    )
