"""Shared ADMM machinery: proximal maps, cached solvers, stopping logic.

All vectorization in the package is column-major (``order="F"``) so that
``vec(A X B) = (B^T kron A) vec(X)`` holds with numpy's ``kron``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "AdmmConfig",
    "AdmmStatus",
    "CachedSolver",
    "AssemblyError",
    "NumericalError",
    "vec",
    "unvec",
    "prox_nuclear",
    "soft_threshold",
    "nuclear_norm",
    "build_cached_solver",
    "KronDifferenceOperator",
    "symmetry_difference_rows",
    "stop_check",
]


class AssemblyError(RuntimeError):
    """A constant linear system could not be factorized."""


class NumericalError(RuntimeError):
    """A dense decomposition failed mid-iteration."""


@dataclass(frozen=True)
class AdmmConfig:
    """Solver parameters shared by the exact and approximate designs.

    Defaults follow the reference experiment settings: penalty 0.1, at most
    1000 iterations, objective weights 0.9/0.1, trace gap 0.1, eigenspace
    separation weight 10 (approximate solver only).
    """

    rho: float = 0.1
    max_iters: int = 1000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    eta_par: float = 0.1
    eta_perp: float = 0.9
    epsilon: float = 0.1
    lam: float = 10.0

    def __post_init__(self):
        for name in ("rho", "eta_par", "eta_perp", "epsilon", "lam"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.tol_primal < 0 or self.tol_dual < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass(frozen=True)
class AdmmStatus:
    """Outcome of one ADMM run."""

    converged: bool
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).flatten(order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return np.asarray(v).reshape((rows, cols), order="F")


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Componentwise ``sign(v) * max(0, |v| - tau)``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def prox_nuclear(z: np.ndarray, tau: float) -> np.ndarray:
    """Singular-value shrinkage: the proximal map of ``tau * ||.||_*``.

    Returns ``V D_tau(Sigma) W^T`` where ``Z = V Sigma W^T`` and
    ``D_tau`` subtracts ``tau`` from every singular value, flooring at zero.
    Symmetric inputs take the eigendecomposition route (for ``Z = V L V^T``
    the SVD is ``(V sign(L)) |L| V^T``), which is substantially faster and
    exercised on every solver iteration.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    z = np.asarray(z, dtype=float)
    try:
        if z.shape[0] == z.shape[1] and np.abs(z - z.T).max(initial=0.0) < 1e-13 * (
            1.0 + np.abs(z).max(initial=0.0)
        ):
            lam, v = np.linalg.eigh((z + z.T) / 2)
            shrunk = np.sign(lam) * np.maximum(np.abs(lam) - tau, 0.0)
            return (v * shrunk) @ v.T
        u, s, vt = np.linalg.svd(z, full_matrices=False)
        return (u * np.maximum(s - tau, 0.0)) @ vt
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed in nuclear prox: {exc}") from exc


def nuclear_norm(z: np.ndarray) -> float:
    """Sum of singular values (eigen route for symmetric arguments)."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] == z.shape[1] and np.abs(z - z.T).max(initial=0.0) < 1e-13 * (
        1.0 + np.abs(z).max(initial=0.0)
    ):
        return float(np.abs(np.linalg.eigvalsh((z + z.T) / 2)).sum())
    return float(np.linalg.svd(z, compute_uv=False).sum())


@dataclass(frozen=True)
class CachedSolver:
    """Cholesky factorization of a fixed SPD matrix, reusable across iterations."""

    factor: tuple
    size: int

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self.factor, rhs)


def build_cached_solver(system_matrix: np.ndarray) -> CachedSolver:
    """Factor a symmetric positive-definite system once.

    Raises
    ------
    AssemblyError
        If the matrix is not positive definite; the message reports the
        smallest eigenvalue for diagnosis.
    """
    a = np.asarray(system_matrix, dtype=float)
    a = (a + a.T) / 2
    try:
        factor = cho_factor(a)
    except np.linalg.LinAlgError as exc:
        smallest = float(np.linalg.eigvalsh(a)[0])
        raise AssemblyError(
            f"system matrix not positive definite (smallest eigenvalue {smallest:.3e})"
        ) from exc
    return CachedSolver(factor=factor, size=a.shape[0])


class KronDifferenceOperator:
    """The linear map ``F -> F kron I_m - I_m kron F`` on ``m x m`` matrices.

    Stored structurally: applying it, applying its adjoint, and forming its
    Gram matrix never materialize the ``m^4 x m^2`` coefficient matrix,
    which would be prohibitively large already at ``m`` around 17. The dense
    matrix (columns ``vec(E_ij kron I - I kron E_ij)`` in column-major
    ``(i, j)`` order) remains available for verification at small ``m``.
    """

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("m must be positive")
        self.m = m
        self._eye = np.eye(m)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``F kron I - I kron F`` as an ``m^2 x m^2`` matrix."""
        return np.kron(f, self._eye) - np.kron(self._eye, f)

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        """``m x m`` matrix ``G`` with ``vec(G) = op^T vec(W)``.

        Contracting the two Kronecker factors reduces the adjoint to a pair
        of partial traces of ``W`` viewed as a 4-tensor.
        """
        m = self.m
        w4 = np.asarray(w).reshape((m, m, m, m), order="F")
        return np.einsum("upuq->pq", w4) - np.einsum("upvp->uv", w4)

    def gram(self) -> np.ndarray:
        """``op^T op = 2 m I - 2 vec(I) vec(I)^T`` in closed form."""
        vi = vec(self._eye)
        return 2.0 * self.m * np.eye(self.m * self.m) - 2.0 * np.outer(vi, vi)

    def dense(self) -> np.ndarray:
        """Materialize the ``m^4 x m^2`` matrix (tests and small sizes only)."""
        m = self.m
        out = np.zeros((m**4, m * m))
        for j in range(m):
            for i in range(m):
                e = np.zeros((m, m))
                e[i, j] = 1.0
                out[:, j * m + i] = vec(np.kron(e, self._eye) - np.kron(self._eye, e))
        return out


def symmetry_difference_rows(m: int) -> np.ndarray:
    """Rows ``(e_j kron e_i - e_i kron e_j)^T`` for ``i < j``.

    ``G @ vec(F) = 0`` exactly when ``F`` is symmetric.
    """
    g = np.zeros((m * (m - 1) // 2, m * m))
    k = 0
    for j in range(m):
        for i in range(j):
            g[k, j * m + i] = 1.0
            g[k, i * m + j] = -1.0
            k += 1
    return g


def stop_check(
    primal: float,
    dual: float,
    rhs_norm: float,
    iterate_norm: float,
    config: AdmmConfig,
) -> bool:
    """Joint primal/dual stopping rule.

    Converged when the worst equality-constraint residual is below
    ``tol_primal * (1 + ||b||)`` and the dual residual (penalty times the
    change in the coupled variables) is below ``tol_dual * (1 + ||iterate||)``.
    """
    return primal < config.tol_primal * (1.0 + rhs_norm) and dual < config.tol_dual * (
        1.0 + iterate_norm
    )
