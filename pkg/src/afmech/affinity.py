"""Affinity maps ``F`` with their differential and its adjoint.

The adjoint is taken with respect to the Frobenius inner product and is
returned already projected onto zero-row-sum matrices, so that
``<adjoint_diff(W, A), V> = <A, diff(W, V)>`` for every tangent ``V``.
"""

from __future__ import annotations

import numpy as np

from .manifold import (
    ManifoldError,
    _as_matrix,
    apply_replicator,
    check_assignment,
    project_t0,
)

FD_STEP = 1e-6
SYMMETRY_TOL = 1e-12
STOCHASTIC_TOL = 1e-12


class AffinityError(ValueError):
    pass


class Affinity:
    """Interface for affinity maps on the assignment manifold.

    Subclasses implement ``eval``, ``diff`` and ``adjoint_diff``.
    """

    def eval(self, W: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diff(self, W: np.ndarray, V: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint_diff(self, W: np.ndarray, A: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, W):
        return self.eval(W)


class OmegaAffinity(Affinity):
    """``F(S) = Omega S`` for a nonnegative row-stochastic averaging matrix.

    Parameters
    ----------
    omega : array_like, shape (m, m)
    symmetric : bool, optional
        If True the matrix is checked for symmetry and construction fails
        when ``max|Omega - Omega^T| > 1e-12``.
    """

    def __init__(self, omega, symmetric: bool | None = None):
        omega = np.array(omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise AffinityError(f"Omega must be square, got shape {omega.shape}")
        if not np.all(np.isfinite(omega)):
            raise AffinityError("Omega contains non-finite entries")
        if np.any(omega < 0):
            raise AffinityError("Omega must be nonnegative")
        dev = np.max(np.abs(omega.sum(axis=1) - 1.0))
        if dev > STOCHASTIC_TOL:
            raise AffinityError(f"Omega rows must sum to 1 (max deviation {dev:.3e})")
        asym = float(np.max(np.abs(omega - omega.T)))
        if symmetric and asym > SYMMETRY_TOL:
            raise AffinityError(f"Omega declared symmetric but max|Omega - Omega^T| = {asym:.3e}")
        omega.setflags(write=False)
        self.omega = omega
        self.asymmetry = asym
        self.is_symmetric = asym <= SYMMETRY_TOL

    @property
    def m(self) -> int:
        return self.omega.shape[0]

    def _check(self, X):
        X = _as_matrix(X)
        if X.shape[0] != self.m:
            raise ManifoldError(f"shape mismatch: Omega is {self.omega.shape}, argument {X.shape}")
        return X

    def eval(self, W):
        return self.omega @ self._check(W)

    def diff(self, W, V):
        return self.omega @ self._check(V)

    def adjoint_diff(self, W, A):
        return project_t0(self.omega.T @ self._check(A))

    def __repr__(self):
        return f"OmegaAffinity(m={self.m}, symmetric={self.is_symmetric})"


class RowLinearAffinity(Affinity):
    """Same linear map on every row: ``F(W)_i = M W_i``, i.e. ``F(W) = W M^T``."""

    def __init__(self, M):
        M = np.array(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise AffinityError(f"M must be square, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise AffinityError("M contains non-finite entries")
        M.setflags(write=False)
        self.M = M

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def _check(self, X):
        X = _as_matrix(X)
        if X.shape[1] != self.n:
            raise ManifoldError(f"shape mismatch: M is {self.M.shape}, argument {X.shape}")
        return X

    def eval(self, W):
        return self._check(W) @ self.M.T

    def diff(self, W, V):
        return self._check(V) @ self.M.T

    def adjoint_diff(self, W, A):
        return project_t0(self._check(A) @ self.M)

    def __repr__(self):
        return f"RowLinearAffinity(n={self.n})"


class CounterexampleAffinity(RowLinearAffinity):
    """``F p = p^1 e_2`` on every row (labels 0 and 1 in zero-based indexing).

    Fails the admissibility condition for three or more labels.
    """

    def __init__(self, n: int):
        if n < 3:
            raise AffinityError(
                f"the counterexample needs n >= 3 labels (got n={n}); "
                "with two labels every affinity is admissible"
            )
        M = np.zeros((n, n))
        M[1, 0] = 1.0
        super().__init__(M)

    def __repr__(self):
        return f"CounterexampleAffinity(n={self.n})"


def counterexample_eval(p) -> np.ndarray:
    """Evaluate the counterexample affinity on a point or an assignment matrix."""
    p = np.asarray(p, dtype=float)
    W = check_assignment(p)
    out = CounterexampleAffinity(W.shape[1]).eval(W)
    return out[0] if p.ndim == 1 else out


class ScaledAffinity(Affinity):
    """``lambda * F`` for a positive or negative constant ``lambda``."""

    def __init__(self, base: Affinity, factor: float):
        self.base = base
        self.factor = float(factor)

    def eval(self, W):
        return self.factor * self.base.eval(W)

    def diff(self, W, V):
        return self.factor * self.base.diff(W, V)

    def adjoint_diff(self, W, A):
        return self.factor * self.base.adjoint_diff(W, A)


def condition_operator(F: Affinity, W) -> np.ndarray:
    """``R_W (dF - dF^*) R_W [F(W)]``; vanishes exactly for admissible ``F``."""
    W = check_assignment(W)
    U = apply_replicator(W, F.eval(W))
    return apply_replicator(W, F.diff(W, U) - F.adjoint_diff(W, U))


def condition_norm(F: Affinity, W) -> float:
    return float(np.linalg.norm(condition_operator(F, W)))


def random_tangent(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    return project_t0(rng.standard_normal((m, n)))


def adjoint_selfcheck(F: Affinity, W, trials: int = 10, rng=None) -> float:
    """Worst relative mismatch between ``diff`` and ``adjoint_diff``.

    Returns ``max |<dF^*[A], V> - <A, dF[V]>| / (1 + |<A, dF[V]>|)`` over
    random ``A`` and tangent ``V``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    W = check_assignment(W)
    rng = np.random.default_rng(rng)
    m, n = W.shape
    worst = 0.0
    for _ in range(trials):
        A = rng.standard_normal((m, n))
        V = random_tangent(rng, m, n)
        rhs = float(np.sum(A * F.diff(W, V)))
        lhs = float(np.sum(F.adjoint_diff(W, A) * V))
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    return worst


def diff_fd_error(F: Affinity, W, V, h: float = FD_STEP) -> float:
    """Relative error of ``diff`` against central differences of ``eval``."""
    W = check_assignment(W)
    fd = (F.eval(W + h * V) - F.eval(W - h * V)) / (2 * h)
    exact = F.diff(W, V)
    return float(np.linalg.norm(fd - exact) / max(np.linalg.norm(exact), 1e-12))
