"""Approximate-projection shift design for topologies without exact filters.

Works directly on the ``n x n`` shift matrix: the hard eigenspace-separation
constraint ``U_perp^T S U_par = 0`` of the exact design is replaced by a
quadratic penalty with weight ``lam``, so the problem stays feasible on any
topology and trades leakage against filter order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm_core import (
    AdmmConfig,
    AdmmStatus,
    CachedSolver,
    KronDifferenceOperator,
    build_cached_solver,
    nuclear_norm,
    prox_nuclear,
    stop_check,
    symmetry_difference_rows,
    unvec,
    vec,
)
from .graphs import Graph, topology_constraint_matrix
from .subspace import Basis, projection_matrix

__all__ = ["ApproxProblem", "ApproxResult", "assemble_approx", "solve_approx"]

_TIE_BREAK = 1e-9


@dataclass(frozen=True)
class ApproxProblem:
    """Assembled system for the penalized design.

    ``t`` stacks the topology rows, the symmetry-difference rows on
    ``vec(S)``, and the two trace rows ``vec(P_par)^T`` and ``vec(P_perp)^T``.
    The constant ``n^2 x n^2`` quadratic-form matrix is factored once and
    shared by both trace branches.
    """

    graph: Graph
    basis: Basis
    config: AdmmConfig
    a_par_op: KronDifferenceOperator
    b_perp_op: KronDifferenceOperator
    t: np.ndarray
    solver: CachedSolver

    def rhs(self, sign: int) -> np.ndarray:
        n, r = self.basis.n, self.basis.r
        b = np.zeros(self.t.shape[0])
        b[-2] = r
        b[-1] = (1.0 + sign * self.config.epsilon) * (n - r)
        return b


@dataclass(frozen=True)
class ApproxResult:
    """Shift matrix and diagnostics from one approximate design.

    ``s`` is hardened to the edge support and symmetrized;
    ``offdiag_energy`` is ``||U_perp^T S U_par||_F^2`` of the returned
    matrix, the quantity the ``lam`` penalty suppresses. ``y1``/``y2`` are
    the surrogate blocks at exit (``r^2 x r^2`` and ``(n-r)^2 x (n-r)^2``).
    """

    s: np.ndarray
    status: AdmmStatus
    offdiag_energy: float
    y1: np.ndarray
    y2: np.ndarray
    branch: int


def assemble_approx(g: Graph, basis: Basis, config: AdmmConfig) -> ApproxProblem:
    """Build and factor the constant S-update system.

    The quadratic form is
    ``D^T D + T^T T + (2 lam / rho)(P_par kron P_perp)
    + (2 / rho)(P_perp kron P_perp)`` with
    ``D^T D = eta_par^2 (2 r P_par kron P_par - 2 vec(P_par) vec(P_par)^T)
    + eta_perp^2 (2 (n-r) P_perp kron P_perp - 2 vec(P_perp) vec(P_perp)^T)``
    (the Gram matrices of the lifted Kronecker-difference operators in
    closed form).
    """
    if basis.n != g.n:
        raise ValueError(f"graph has {g.n} nodes but basis has {basis.n}")
    n, r = basis.n, basis.r
    m = n - r
    p_par = projection_matrix(basis)
    p_perp = basis.u_perp @ basis.u_perp.T

    w = topology_constraint_matrix(g)
    g_rows = symmetry_difference_rows(n)
    t = np.vstack([w, g_rows, vec(p_par)[None, :], vec(p_perp)[None, :]])

    pp = np.kron(p_par, p_par)
    qq = np.kron(p_perp, p_perp)
    vp = vec(p_par)
    vq = vec(p_perp)
    dtd = config.eta_par**2 * (2.0 * r * pp - 2.0 * np.outer(vp, vp)) + config.eta_perp**2 * (
        2.0 * m * qq - 2.0 * np.outer(vq, vq)
    )
    system = (
        dtd
        + t.T @ t
        + (2.0 * config.lam / config.rho) * np.kron(p_par, p_perp)
        + (2.0 / config.rho) * qq
    )
    return ApproxProblem(
        graph=g,
        basis=basis,
        config=config,
        a_par_op=KronDifferenceOperator(r),
        b_perp_op=KronDifferenceOperator(m),
        t=t,
        solver=build_cached_solver(system),
    )


def _objective(problem: ApproxProblem, s: np.ndarray) -> float:
    cfg = problem.config
    basis = problem.basis
    f_par = basis.u_par.T @ s @ basis.u_par
    f_perp = basis.u_perp.T @ s @ basis.u_perp
    off = basis.u_perp.T @ s @ basis.u_par
    return (
        cfg.eta_par * nuclear_norm(problem.a_par_op.apply(f_par))
        + cfg.eta_perp * nuclear_norm(problem.b_perp_op.apply(f_perp))
        + float(np.linalg.norm(f_perp) ** 2)
        + cfg.lam * float(np.linalg.norm(off) ** 2)
    )


def _solve_branch(problem: ApproxProblem, sign: int) -> ApproxResult:
    cfg = problem.config
    basis = problem.basis
    n, r = basis.n, basis.r
    m = n - r
    rho = cfg.rho
    t = problem.t
    b = problem.rhs(sign)
    b_norm = float(np.linalg.norm(b))
    u_par, u_perp = basis.u_par, basis.u_perp

    # feasible-direction start: the projector masked onto the edge support
    s = projection_matrix(basis)
    mask = ~problem.graph.adjacency()
    s[mask] = 0.0
    s = (s + s.T) / 2

    y1 = np.zeros((r * r, r * r))
    y2 = np.zeros((m * m, m * m))
    q11 = np.zeros_like(y1)
    q12 = np.zeros_like(y2)
    q2 = np.zeros(len(b))

    m1 = cfg.eta_par * problem.a_par_op.apply(u_par.T @ s @ u_par)
    m2 = cfg.eta_perp * problem.b_perp_op.apply(u_perp.T @ s @ u_perp)

    primal = np.inf
    dual = np.inf
    converged = False
    iterations = 0

    for k in range(cfg.max_iters):
        rhs = (
            cfg.eta_par * vec(u_par @ problem.a_par_op.adjoint(y1 + q11) @ u_par.T)
            + cfg.eta_perp * vec(u_perp @ problem.b_perp_op.adjoint(y2 + q12) @ u_perp.T)
            + t.T @ (b - q2)
        )
        s_new = unvec(problem.solver.solve(rhs), n)
        dual = rho * float(np.linalg.norm(s_new - s))
        s = s_new

        m1 = cfg.eta_par * problem.a_par_op.apply(u_par.T @ s @ u_par)
        m2 = cfg.eta_perp * problem.b_perp_op.apply(u_perp.T @ s @ u_perp)
        y1 = prox_nuclear(m1 - q11, 1.0 / rho)
        y2 = prox_nuclear(m2 - q12, 1.0 / rho)
        e1 = y1 - m1
        e2 = y2 - m2
        q11 += e1
        q12 += e2
        r2 = t @ vec(s) - b
        q2 += r2

        iterations = k + 1
        primal = max(
            float(np.linalg.norm(r2)),
            float(np.linalg.norm(e1)),
            float(np.linalg.norm(e2)),
        )
        if stop_check(primal, dual, b_norm, float(np.linalg.norm(s)), cfg):
            converged = True
            break

    objective = _objective(problem, s)
    s_hard = s.copy()
    s_hard[~problem.graph.adjacency()] = 0.0
    s_hard = (s_hard + s_hard.T) / 2
    off = u_perp.T @ s_hard @ u_par
    return ApproxResult(
        s=s_hard,
        status=AdmmStatus(
            converged=converged,
            iterations=iterations,
            primal_residual=primal,
            dual_residual=dual,
            objective=objective,
        ),
        offdiag_energy=float(np.linalg.norm(off) ** 2),
        y1=y1,
        y2=y2,
        branch=sign,
    )


def solve_approx(g: Graph, basis: Basis, config: AdmmConfig | None = None) -> ApproxResult:
    """Run both trace branches of the penalized design; best objective wins.

    Converged branches are preferred; among equals the smaller objective
    wins with ties going to the ``+`` branch.
    """
    cfg = config if config is not None else AdmmConfig()
    problem = assemble_approx(g, basis, cfg)
    plus = _solve_branch(problem, +1)
    minus = _solve_branch(problem, -1)
    if plus.status.converged != minus.status.converged:
        return plus if plus.status.converged else minus
    if minus.status.objective < plus.status.objective - _TIE_BREAK:
        return minus
    return plus
