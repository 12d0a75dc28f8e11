"""Assignment flows on the assignment manifold and their Lagrangian mechanics."""

__version__ = "0.1.0"

from .affinity import (
    Affinity,
    CounterexampleAffinity,
    OmegaAffinity,
    RowLinearAffinity,
    ScaledAffinity,
    condition_norm,
    condition_operator,
)
from .integrate import IntegratorConfig, Trajectory, integrate, jacobi_reparametrize
from .labeling import (
    GridGraph,
    build_omega,
    extract_labels,
    mane_analysis,
    objective_j,
    sflow_init,
    sflow_run,
    synth_dataset,
)
from .manifold import apply_replicator, barycenter, fisher_rao_inner, lift, project_t0
from .mechanics import (
    LagrangianState,
    energy,
    euler_lagrange_residual,
    grad_potential,
    potential,
)

__all__ = [
    "Affinity",
    "CounterexampleAffinity",
    "GridGraph",
    "IntegratorConfig",
    "LagrangianState",
    "OmegaAffinity",
    "RowLinearAffinity",
    "ScaledAffinity",
    "Trajectory",
    "apply_replicator",
    "barycenter",
    "build_omega",
    "condition_norm",
    "condition_operator",
    "energy",
    "euler_lagrange_residual",
    "extract_labels",
    "fisher_rao_inner",
    "grad_potential",
    "integrate",
    "jacobi_reparametrize",
    "lift",
    "mane_analysis",
    "objective_j",
    "potential",
    "project_t0",
    "sflow_init",
    "sflow_run",
    "synth_dataset",
]
