"""Pre-solve feasibility analysis for exact projection filters.

The dimension of the cone of shift matrices that block-diagonalize in the
signal basis is ``E - rank((U_par^T kron U_perp^T) Phi)``. An exact
projection filter can only exist when that rank is at most ``E - 2``:
the cone must contain something besides scaled identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, edge_basis_matrix
from .subspace import Basis

__all__ = ["FeasibilityReport", "prefeasible_dimension", "necessary_condition_check"]

# Singular values sigma_i count toward the rank iff
# sigma_i > max(dims) * eps * sigma_1 * RANK_TOL_FACTOR; the factor leaves
# headroom over machine precision for the accumulated error of the dense SVD.
RANK_TOL_FACTOR = 1e3


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the rank test on one (graph, basis) pair."""

    reduced_edge_count: int
    constraint_rank: int
    prefeasible_dim: int
    necessary_ok: bool
    singular_values: np.ndarray


def prefeasible_dimension(
    g: Graph, basis: Basis, rank_tol_factor: float = RANK_TOL_FACTOR
) -> FeasibilityReport:
    """Dimension of the structured-shift cone for ``g`` and ``basis``.

    Builds ``M = (U_par^T kron U_perp^T) Phi`` (size ``r(n-r) x E``), takes
    its singular spectrum, and reports ``E - rank(M)``. The spectrum is
    retained so borderline rank calls can be audited.
    """
    if basis.n != g.n:
        raise ValueError(f"graph has {g.n} nodes but basis has {basis.n}")
    phi = edge_basis_matrix(g)
    m = np.kron(basis.u_par.T, basis.u_perp.T) @ phi
    sv = np.linalg.svd(m, compute_uv=False) if min(m.shape) else np.zeros(0)
    if sv.size and sv[0] > 0:
        tol = max(m.shape) * np.finfo(float).eps * sv[0] * rank_tol_factor
        rank = int(np.sum(sv > tol))
    else:
        rank = 0
    e_count = g.reduced_edge_count
    return FeasibilityReport(
        reduced_edge_count=e_count,
        constraint_rank=rank,
        prefeasible_dim=e_count - rank,
        necessary_ok=rank <= e_count - 2,
        singular_values=sv,
    )


def necessary_condition_check(report: FeasibilityReport) -> bool:
    """True iff the rank test permits an exact projection filter.

    A ``False`` return is conclusive: no exact projection filter exists on
    this topology for this subspace. ``True`` is necessary, not sufficient.
    """
    return report.constraint_rank <= report.reduced_edge_count - 2
