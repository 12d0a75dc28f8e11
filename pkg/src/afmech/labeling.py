"""Metric data labeling with the S-flow on grid graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .affinity import Affinity, OmegaAffinity
from .integrate import IntegratorConfig, Trajectory, integrate
from .manifold import _as_matrix, barycenter, check_assignment, lift, project_t0

MANE_SIZE_CAP = 4096
NULLSPACE_RTOL = 1e-10


class LabelingError(ValueError):
    pass


@dataclass(frozen=True)
class GridGraph:
    """Regular 2-d grid with node index ``y * width + x``.

    The neighborhood of a node is every offset with ``|dy| + |dx| <= radius``
    (``norm="l1"``, radius 1 gives the 4-neighborhood) or
    ``max(|dy|, |dx|) <= radius`` (``norm="linf"``), always including the
    node itself. ``boundary="torus"`` wraps around; ``"clamped"`` drops
    offsets that leave the grid.
    """

    height: int
    width: int
    radius: int = 1
    boundary: str = "torus"
    norm: str = "l1"

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise LabelingError("grid needs at least one node")
        if self.radius < 0:
            raise LabelingError("radius must be nonnegative")
        if self.boundary not in ("torus", "clamped"):
            raise LabelingError(f"unknown boundary mode {self.boundary!r}")
        if self.norm not in ("l1", "linf"):
            raise LabelingError(f"unknown neighborhood norm {self.norm!r}")

    @property
    def m(self) -> int:
        return self.height * self.width

    def offsets(self) -> list[tuple[int, int]]:
        r = self.radius
        out = []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                d = abs(dy) + abs(dx) if self.norm == "l1" else max(abs(dy), abs(dx))
                if d <= r:
                    out.append((dy, dx))
        return out

    def neighbors(self, i: int) -> list[int]:
        """Neighbor indices of node ``i`` (with multiplicity on small tori)."""
        y, x = divmod(i, self.width)
        out = []
        for dy, dx in self.offsets():
            yy, xx = y + dy, x + dx
            if self.boundary == "torus":
                yy %= self.height
                xx %= self.width
            elif not (0 <= yy < self.height and 0 <= xx < self.width):
                continue
            out.append(yy * self.width + xx)
        return out

    def adjacency_mask(self) -> np.ndarray:
        mask = np.zeros((self.m, self.m), dtype=bool)
        for i in range(self.m):
            mask[i, self.neighbors(i)] = True
        return mask


def build_omega(graph: GridGraph, weights="uniform") -> OmegaAffinity:
    """Averaging matrix supported on the graph neighborhoods.

    ``weights="uniform"`` gives every neighborhood entry the same weight;
    an explicit ``(m, m)`` array is validated (nonnegative, unit row sums,
    zero outside neighborhoods) and used as is. Uniform weights on a torus
    are symmetric and the result is marked as such.
    """
    m = graph.m
    if isinstance(weights, str):
        if weights != "uniform":
            raise LabelingError(f"unknown weight scheme {weights!r}")
        omega = np.zeros((m, m))
        for i in range(m):
            nb = graph.neighbors(i)
            np.add.at(omega[i], nb, 1.0 / len(nb))
    else:
        omega = _as_matrix(weights, "weights")
        if omega.shape != (m, m):
            raise LabelingError(f"weights must have shape {(m, m)}, got {omega.shape}")
        if np.any(omega < 0):
            raise LabelingError("weights must be nonnegative")
        if np.max(np.abs(omega.sum(axis=1) - 1)) > 1e-12:
            raise LabelingError("weight rows must sum to 1")
        if np.any(omega[~graph.adjacency_mask()] != 0):
            raise LabelingError("weights are nonzero outside the neighborhoods")
    claim = graph.boundary == "torus" and isinstance(weights, str)
    return OmegaAffinity(omega, symmetric=claim or None)


@dataclass(frozen=True)
class Dataset:
    """Synthetic labeling problem.

    ``D[i, j]`` is the squared Euclidean distance between the noisy feature
    of node ``i`` and prototype ``j``; prototypes are the unit vectors.
    """

    D: np.ndarray
    labels: np.ndarray
    features: np.ndarray
    height: int
    width: int


def ground_truth_image(height: int, width: int, n_labels: int) -> np.ndarray:
    """Piecewise-constant label image made of vertical stripes.

    Column ``x`` gets label ``(x * n_labels) // width``. Straight stripe
    boundaries are stationary under uniform averaging on a torus, so even
    stripes one pixel wide survive the S-flow; block layouts with corners
    do not on very small grids.
    """
    labels = (np.arange(width) * n_labels) // width
    return np.tile(labels, (height, 1)).astype(int)


def synth_dataset(height: int, width: int, n_labels: int, noise: float, seed: int) -> Dataset:
    """Block image with additive Gaussian feature noise.

    Noise comes from a counter-based Philox stream keyed by ``seed``, so the
    data are bit-reproducible.
    """
    if n_labels < 2:
        raise LabelingError("need at least two labels")
    if noise < 0:
        raise LabelingError("noise must be nonnegative")
    labels = ground_truth_image(height, width, n_labels).ravel()
    protos = np.eye(n_labels)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    feats = protos[labels] + noise * rng.standard_normal((labels.size, n_labels))
    diff = feats[:, None, :] - protos[None, :, :]
    D = np.sum(diff * diff, axis=2)
    return Dataset(D=D, labels=labels, features=feats, height=height, width=width)


@dataclass(frozen=True)
class SFlowState:
    S: np.ndarray
    W: np.ndarray


def sflow_init(omega: OmegaAffinity, D) -> SFlowState:
    """``S(0) = lift(barycenter, -Omega D)`` and ``W(0) = barycenter``."""
    D = _as_matrix(D, "D")
    if np.any(D < 0):
        raise LabelingError("data matrix must be nonnegative")
    m, n = D.shape
    if m != omega.m:
        raise LabelingError(f"shape mismatch: Omega is {omega.omega.shape}, D is {D.shape}")
    B = barycenter(m, n)
    return SFlowState(S=lift(B, -(omega.omega @ D)), W=B)


class SFlowCoupled(Affinity):
    """Affinity of the stacked state ``[S; W]`` -> ``[Omega S; S]``.

    Integrating the stacked assignment flow advances ``S' = R_S[Omega S]``
    and ``W' = R_W[S]`` together with a single scheme.
    """

    def __init__(self, omega: OmegaAffinity):
        self.inner = omega
        self.m = omega.m

    def eval(self, X):
        S = X[: self.m]
        return np.vstack([self.inner.eval(S), S])

    def diff(self, X, V):
        VS = V[: self.m]
        return np.vstack([self.inner.diff(X[: self.m], VS), VS])

    def adjoint_diff(self, X, A):
        AS, AW = A[: self.m], A[self.m :]
        top = project_t0(self.inner.omega.T @ AS + AW)
        return np.vstack([top, np.zeros_like(AW)])


@dataclass(frozen=True)
class SFlowResult:
    S: Trajectory
    W: Trajectory
    converged: bool
    floored: int


def sflow_run(state: SFlowState, omega: OmegaAffinity, config: IntegratorConfig) -> SFlowResult:
    """Integrate the S-flow and the assignment it drives.

    The convergence stop (when enabled) looks at ``W`` only, since labels
    are read from ``W``; rows of ``S`` at region boundaries can take much
    longer to settle.
    """
    S0 = check_assignment(state.S)
    W0 = check_assignment(state.W)
    m = omega.m
    traj = integrate(SFlowCoupled(omega), np.vstack([S0, W0]), config, monitor_rows=slice(m, None))
    common = dict(times=traj.times, converged=traj.converged, n_steps=traj.n_steps, floored=traj.floored)
    return SFlowResult(
        S=Trajectory(states=traj.states[:, :m], **common),
        W=Trajectory(states=traj.states[:, m:], **common),
        converged=traj.converged,
        floored=traj.floored,
    )


def objective_j(omega: OmegaAffinity, S) -> tuple[float, float]:
    """``J(S) = 1/2 <S, Omega S>`` and its smoothness decomposition.

    Returns ``(J, J_split)`` with
    ``J_split = 1/2 |S|^2 - 1/4 sum_ij Omega_ij |S_i - S_j|^2``; the two
    agree when ``Omega`` is symmetric.
    """
    S = _as_matrix(S, "S")
    Om = omega.omega
    J = 0.5 * float(np.sum(S * (Om @ S)))
    sq = np.sum(S * S, axis=1)
    pair = sq[:, None] + sq[None, :] - 2.0 * (S @ S.T)
    split = 0.5 * float(sq.sum()) - 0.25 * float(np.sum(Om * pair))
    return J, split


def extract_labels(W, eps_conv: float = 1e-3) -> tuple[np.ndarray, float, bool]:
    """Argmax label per row (zero-based, ties to the lowest index).

    Returns ``(labels, confidence, converged)`` where ``confidence`` is
    ``min_i max_j W_ij`` and ``converged`` is ``confidence >= 1 - eps_conv``.
    """
    W = _as_matrix(W, "W")
    conf = float(np.min(np.max(W, axis=1)))
    return np.argmax(W, axis=1), conf, conf >= 1 - eps_conv


@dataclass(frozen=True)
class ManeReport:
    m: int
    n: int
    rank_omega: int
    dim_ker_omega: int
    rank_r: int
    dim_sigma: int
    dim_sigma_formula: int
    dim_mcrit: int
    distance: float | None = None
    ptw_omega_norm: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _nullspace(A: np.ndarray, rtol: float = NULLSPACE_RTOL) -> tuple[np.ndarray, int]:
    """Orthonormal nullspace basis (columns) and rank via the SVD."""
    _, sv, Vt = np.linalg.svd(A)
    tol = rtol * (sv[0] if sv.size else 0.0)
    rank = int(np.count_nonzero(sv > tol)) if sv.size and sv[0] > 0 else 0
    return Vt[rank:].T, rank


def tangent_basis(m: int, n: int) -> np.ndarray:
    """Columns span zero-row-sum ``(m, n)`` matrices (row-major flattening).

    Uses ``E_{ij} - E_{in}`` for ``j < n``.
    """
    B = np.zeros((m * n, m * (n - 1)))
    col = 0
    for i in range(m):
        for j in range(n - 1):
            B[i * n + j, col] = 1.0
            B[i * n + n - 1, col] = -1.0
            col += 1
    return B


def sigma_basis(omega: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of ``{V tangent : Omega V = 0}`` found by brute force."""
    m = omega.shape[0]
    T = np.linalg.qr(tangent_basis(m, n))[0]
    op = np.kron(omega, np.eye(n)) @ T
    N, _ = _nullspace(op)
    return T @ N


def mane_analysis(omega: OmegaAffinity, n: int, query=None) -> ManeReport:
    """Dimensions of the Mane critical set of the S-flow affinity.

    The kernel of ``V -> Omega V`` on tangent matrices is computed by brute
    force and compared with ``(n - 1) dim ker Omega``; a mismatch raises.
    For a ``query`` point, reports the Frobenius distance of
    ``query - barycenter`` to that kernel and ``|P_T0[Omega query]|``.
    """
    m = omega.m
    if n < 2:
        raise LabelingError("need n >= 2")
    if m * n > MANE_SIZE_CAP:
        raise LabelingError(f"m*n = {m * n} exceeds the dense size cap {MANE_SIZE_CAP}")
    _, rank_om = _nullspace(omega.omega)
    ker = m - rank_om
    basis = sigma_basis(omega.omega, n)
    dim_sigma = basis.shape[1]
    formula = (n - 1) * ker
    if dim_sigma != formula:
        raise LabelingError(f"brute-force dim {dim_sigma} != formula {formula}")
    dist = ptw = None
    if query is not None:
        Q = check_assignment(query)
        if Q.shape != (m, n):
            raise LabelingError(f"query must have shape {(m, n)}")
        x = (Q - barycenter(m, n)).ravel()
        dist = float(np.linalg.norm(x - basis @ (basis.T @ x)))
        ptw = float(np.linalg.norm(project_t0(omega.omega @ Q)))
    return ManeReport(
        m=m,
        n=n,
        rank_omega=rank_om,
        dim_ker_omega=ker,
        rank_r=m * (n - 1) - dim_sigma,
        dim_sigma=dim_sigma,
        dim_sigma_formula=formula,
        dim_mcrit=dim_sigma,
        distance=dist,
        ptw_omega_norm=ptw,
    )
