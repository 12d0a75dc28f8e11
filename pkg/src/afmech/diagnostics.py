"""Per-sample diagnostic tables along first-order trajectories."""

from __future__ import annotations

import numpy as np

from .affinity import Affinity, OmegaAffinity, condition_norm
from .integrate import jacobi_speeds
from .labeling import objective_j
from .mechanics import LagrangianState, energy, euler_lagrange_residual, flow_field, potential


class _Samples:
    def __init__(self, times, states):
        self.times = times
        self.states = states
        self.velocities = None


def uniform_prefix(times, rtol: float = 1e-9) -> int:
    """Length of the longest uniformly spaced prefix of ``times``."""
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        return len(times)
    dt = np.diff(times)
    bad = np.flatnonzero(np.abs(dt - dt[0]) > rtol * max(dt[0], 1.0))
    return len(times) if bad.size == 0 else int(bad[0]) + 1


def diagnostics_table(F: Affinity, times, states) -> dict[str, np.ndarray]:
    """Columns ``t, energy, G, J, speed_g, el_residual, condition_norm, h0_speed``.

    ``energy`` is evaluated at ``(W, R_W[F(W)])``. ``J`` is only defined for
    :class:`OmegaAffinity` and is NaN otherwise. The EL residual needs a
    uniformly spaced run of at least three samples; samples outside it get
    NaN, as do Jacobi speeds inside the critical set.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    K = len(times)
    E, G, J, speed, cond = (np.empty(K) for _ in range(5))
    for k, W in enumerate(states):
        V = flow_field(F, W)
        E[k] = energy(F, LagrangianState(W, V))
        G[k] = potential(F, W).G
        J[k] = objective_j(F, W)[0] if isinstance(F, OmegaAffinity) else np.nan
        speed[k] = np.sqrt(np.sum(V * V / W))
        cond[k] = condition_norm(F, W)

    el = np.full(K, np.nan)
    h0 = np.full(K, np.nan)
    u = uniform_prefix(times)
    if u >= 3:
        el[:u] = euler_lagrange_residual(F, _Samples(times[:u], states[:u])).residual
    if K >= 3:
        h0 = jacobi_speeds(F, times, states)[1]
    return {
        "t": times,
        "energy": E,
        "G": G,
        "J": J,
        "speed_g": speed,
        "el_residual": el,
        "condition_norm": cond,
        "h0_speed": h0,
    }
