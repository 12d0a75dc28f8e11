"""Primitives of the assignment manifold.

Points of the assignment manifold are stored as plain ``(m, n)`` float64
arrays whose rows are strictly positive probability vectors; tangent
vectors are ``(m, n)`` arrays with zero row sums. Every operator acts
row by row, so rows never interact and results do not depend on the
order in which rows are processed.
"""

from __future__ import annotations

import numpy as np

POSITIVITY_FLOOR = 1e-14
SINGULARITY_THRESHOLD = 1e-15
STRUCTURAL_TOL = 1e-12


class ManifoldError(ValueError):
    """Input is not a valid point or tangent vector."""


class SingularityError(ManifoldError):
    """Division by an assignment entry that is numerically zero."""


def _as_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2:
        raise ManifoldError(f"{name} must be a vector or a matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ManifoldError(f"{name} contains non-finite entries")
    return A


def _check_same_shape(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise ManifoldError(f"shape mismatch: {A.shape} vs {B.shape}")


def check_assignment(W, tol: float = STRUCTURAL_TOL) -> np.ndarray:
    """Validate an assignment matrix and return it as a 2-d float array.

    A 1-d input is treated as a single simplex point (``m = 1``).
    """
    W = _as_matrix(W, "W")
    m, n = W.shape
    if m < 1 or n < 2:
        raise ManifoldError(f"assignment matrix needs m >= 1 and n >= 2, got {W.shape}")
    if np.any(W <= 0):
        raise ManifoldError("assignment matrix must be strictly positive")
    err = np.max(np.abs(W.sum(axis=1) - 1.0))
    if err > tol:
        raise ManifoldError(f"rows must sum to 1 (max deviation {err:.3e})")
    return W


def check_tangent(V, tol: float = STRUCTURAL_TOL) -> np.ndarray:
    V = _as_matrix(V, "V")
    err = np.max(np.abs(V.sum(axis=1)))
    if err > tol * max(1.0, np.max(np.abs(V))):
        raise ManifoldError(f"tangent rows must sum to 0 (max deviation {err:.3e})")
    return V


def barycenter(m: int, n: int) -> np.ndarray:
    """The assignment matrix with every entry equal to ``1/n``."""
    if m < 1 or n < 2:
        raise ManifoldError(f"need m >= 1 and n >= 2, got ({m}, {n})")
    return np.full((m, n), 1.0 / n)


def floor_rows(W: np.ndarray, floor: float = POSITIVITY_FLOOR) -> tuple[np.ndarray, int]:
    """Clamp entries to ``floor`` and renormalize rows.

    Returns the repaired matrix and the number of clamped entries.
    """
    low = W < floor
    count = int(np.count_nonzero(low))
    if count:
        W = np.where(low, floor, W)
    W = W / W.sum(axis=1, keepdims=True)
    return W, count


def project_t0(A) -> np.ndarray:
    """Orthogonal projection onto matrices with zero row sums."""
    A = _as_matrix(A)
    return A - A.mean(axis=1, keepdims=True)


def replicator_matrix(p) -> np.ndarray:
    """``Diag(p) - p p^T`` for a single simplex point ``p``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ManifoldError("replicator_matrix expects a single simplex point")
    check_assignment(p)
    return np.diag(p) - np.outer(p, p)


def apply_replicator(W, A) -> np.ndarray:
    """Apply ``R_{W_i}`` to every row ``A_i``.

    Uses ``R_p a = p * (a - <p, a>)``, which avoids forming the matrices.
    """
    W = _as_matrix(W, "W")
    A = _as_matrix(A)
    _check_same_shape(W, A)
    return W * (A - np.sum(W * A, axis=1, keepdims=True))


def _check_nonsingular(W: np.ndarray) -> None:
    if np.any(W < SINGULARITY_THRESHOLD):
        raise SingularityError(
            f"assignment entry below {SINGULARITY_THRESHOLD:g}: min={W.min():.3e}"
        )


def inverse_replicator(W, U) -> np.ndarray:
    """Inverse of the replicator map restricted to tangent matrices.

    Raises
    ------
    SingularityError
        If an entry of ``W`` is below ``1e-15``.
    """
    W = _as_matrix(W, "W")
    U = _as_matrix(U, "U")
    _check_same_shape(W, U)
    _check_nonsingular(W)
    return project_t0(U / W)


def fisher_rao_inner(W, U, V) -> float:
    """Product Fisher-Rao metric ``sum_ij U_ij V_ij / W_ij``."""
    W = _as_matrix(W, "W")
    U = _as_matrix(U, "U")
    V = _as_matrix(V, "V")
    _check_same_shape(W, U)
    _check_same_shape(W, V)
    _check_nonsingular(W)
    return float(np.sum(U * V / W))


def fisher_rao_norm_sq(W, V) -> float:
    return fisher_rao_inner(W, V, V)


def lift(W, V) -> np.ndarray:
    """Lifting map ``W_i * exp(V_i) / <W_i, exp(V_i)>`` applied rowwise.

    ``V`` need not have zero row sums; adding a constant to a row of ``V``
    does not change the result. Rows are shifted by their maximum before
    exponentiation and the positivity floor is applied to the output.
    """
    out, _ = lift_counted(W, V)
    return out


def lift_counted(W, V) -> tuple[np.ndarray, int]:
    """``lift`` that also reports how many entries hit the positivity floor."""
    W = _as_matrix(W, "W")
    V = _as_matrix(V, "V")
    _check_same_shape(W, V)
    P = W * np.exp(V - V.max(axis=1, keepdims=True))
    return floor_rows(P / P.sum(axis=1, keepdims=True))


def frobenius(A, B) -> float:
    return float(np.sum(np.asarray(A) * np.asarray(B)))
