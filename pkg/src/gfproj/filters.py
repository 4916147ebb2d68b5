"""Graph filters: eigenstructure, coefficient fitting, local application.

A filter is a polynomial in a shift matrix. Applying an order-L filter costs
L synchronized neighbor exchanges; each node then linearly combines the
iterates it has seen, either with shared scalar coefficients or with its own
row of node-dependent coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .subspace import Basis

__all__ = [
    "GraphFilter",
    "PolyInfeasibleError",
    "VandermondeFit",
    "NodeDependentLadder",
    "shift_blocks",
    "distinct_eigenvalues",
    "fit_vandermonde",
    "fit_node_dependent",
    "apply_filter",
    "filter_matrix",
    "save_filter",
    "load_filter",
]

DEFAULT_EIGENVALUE_GAP = 0.005
CONDITION_LIMIT = 1e12


class PolyInfeasibleError(RuntimeError):
    """Signal and complement blocks share an eigenvalue cluster.

    No polynomial can then map the shared value to both 1 and 0, so the
    shift admits no exact projection filter at this clustering threshold.
    """


@dataclass(frozen=True)
class GraphFilter:
    """Shift matrix plus coefficients.

    ``coeffs`` is either a length ``L+1`` vector (scalar coefficients shared
    by all nodes) or an ``n x (L+1)`` matrix (row per node).
    """

    s: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        n = self.s.shape[0]
        if self.s.shape != (n, n):
            raise ValueError("shift matrix must be square")
        if np.abs(self.s - self.s.T).max(initial=0.0) > 1e-9 * (
            1.0 + np.abs(self.s).max(initial=0.0)
        ):
            raise ValueError("shift matrix must be symmetric")
        if self.order > n - 1:
            raise ValueError(f"order {self.order} exceeds n - 1 = {n - 1}")

    @property
    def order(self) -> int:
        c = np.asarray(self.coeffs)
        return (c.shape[-1] if c.ndim else 1) - 1

    @property
    def node_dependent(self) -> bool:
        return np.asarray(self.coeffs).ndim == 2


@dataclass(frozen=True)
class VandermondeFit:
    """Scalar coefficients from the clustered eigenvalue system."""

    coeffs: np.ndarray
    order: int
    residual: float
    condition: float
    ill_conditioned: bool
    signal_values: np.ndarray
    complement_values: np.ndarray


@dataclass(frozen=True)
class NodeDependentLadder:
    """Least-squares node-dependent fits for every order up to ``max_order``.

    ``coeffs[l]`` is the ``n x (l+1)`` coefficient matrix, ``matrices[l]``
    the realized operator, and ``sq_errors[l]`` equals
    ``||target - matrices[l]||_F^2``. Larger orders nest smaller ones, so
    ``sq_errors`` is nonincreasing.
    """

    shift: np.ndarray
    coeffs: list
    matrices: list
    sq_errors: np.ndarray

    def filter_at(self, order: int) -> GraphFilter:
        return GraphFilter(s=self.shift, coeffs=self.coeffs[order])


def shift_blocks(s: np.ndarray, basis: Basis):
    """Diagonal blocks of ``s`` in the signal basis plus the leakage energy.

    Returns ``(U_par^T S U_par, U_perp^T S U_perp, ||U_perp^T S U_par||_F^2)``.
    """
    if s.shape != (basis.n, basis.n):
        raise ValueError("shift matrix and basis dimensions differ")
    f_par = basis.u_par.T @ s @ basis.u_par
    f_perp = basis.u_perp.T @ s @ basis.u_perp
    off = basis.u_perp.T @ s @ basis.u_par
    return f_par, f_perp, float(np.linalg.norm(off) ** 2)


def distinct_eigenvalues(evals: np.ndarray, tau: float = DEFAULT_EIGENVALUE_GAP):
    """Count eigenvalue clusters by single-linkage gaps.

    Scanning the sorted values, a new cluster starts whenever the gap to the
    previous value exceeds ``tau``. Returns the cluster count and the cluster
    means as representatives.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    ev = np.sort(np.asarray(evals, dtype=float))
    if ev.size == 0:
        return 0, np.zeros(0)
    reps = []
    start = 0
    for k in range(1, ev.size):
        if ev[k] - ev[k - 1] > tau:
            reps.append(ev[start:k].mean())
            start = k
    reps.append(ev[start:].mean())
    return len(reps), np.array(reps)


def fit_vandermonde(
    basis: Basis,
    f_par: np.ndarray,
    f_perp: np.ndarray,
    tau: float = DEFAULT_EIGENVALUE_GAP,
) -> VandermondeFit:
    """Scalar filter coefficients mapping the shift's spectrum onto 1 / 0.

    Clusters each block's eigenvalues at threshold ``tau``, then solves the
    square Vandermonde system whose rows are powers of the cluster
    representatives with targets 1 on signal clusters and 0 on complement
    clusters. The filter order is the total cluster count minus one.

    Raises
    ------
    PolyInfeasibleError
        If a signal representative and a complement representative lie
        within ``tau`` of each other.
    """
    ev_par = np.linalg.eigvalsh((f_par + f_par.T) / 2)
    ev_perp = np.linalg.eigvalsh((f_perp + f_perp.T) / 2)
    _, reps_par = distinct_eigenvalues(ev_par, tau)
    _, reps_perp = distinct_eigenvalues(ev_perp, tau)
    for a in reps_par:
        for b in reps_perp:
            if abs(a - b) <= tau:
                raise PolyInfeasibleError(
                    f"signal cluster {a:.6g} and complement cluster {b:.6g} "
                    f"coincide within tau={tau}"
                )
    nodes = np.concatenate([reps_par, reps_perp])
    targets = np.concatenate([np.ones(len(reps_par)), np.zeros(len(reps_perp))])
    order = len(nodes) - 1
    vand = np.vander(nodes, N=order + 1, increasing=True)
    coeffs = np.linalg.solve(vand, targets)
    residual = float(np.linalg.norm(vand @ coeffs - targets))
    condition = float(np.linalg.cond(vand))
    return VandermondeFit(
        coeffs=coeffs,
        order=order,
        residual=residual,
        condition=condition,
        ill_conditioned=condition > CONDITION_LIMIT,
        signal_values=reps_par,
        complement_values=reps_perp,
    )


def fit_node_dependent(
    s: np.ndarray, target: np.ndarray, max_order: int
) -> NodeDependentLadder:
    """Per-node least-squares fits of ``target`` for every order up to ``max_order``.

    Row ``i`` of the order-l operator is ``sum_l' C[i, l'] (S^l')[i, :]``;
    each node's coefficients solve an independent least-squares problem
    against row ``i`` of ``target`` (minimum-norm solution when the local
    system is rank deficient).
    """
    n = s.shape[0]
    if max_order > n - 1:
        raise ValueError(f"max_order {max_order} exceeds n - 1 = {n - 1}")
    powers = [np.eye(n)]
    for _ in range(max_order):
        powers.append(powers[-1] @ s)
    # stack[i] has shape (n, max_order + 1): column l' is row i of S^l'
    stack = np.stack([p.T for p in powers], axis=-1)
    coeffs_per_order = []
    matrices = []
    sq_errors = np.zeros(max_order + 1)
    for order in range(max_order + 1):
        c = np.zeros((n, order + 1))
        h = np.zeros((n, n))
        for i in range(n):
            sol, _, _, _ = np.linalg.lstsq(stack[i][:, : order + 1], target[i], rcond=None)
            c[i] = sol
            h[i] = stack[i][:, : order + 1] @ sol
        coeffs_per_order.append(c)
        matrices.append(h)
        sq_errors[order] = np.linalg.norm(target - h) ** 2
    return NodeDependentLadder(
        shift=s, coeffs=coeffs_per_order, matrices=matrices, sq_errors=sq_errors
    )


def _neighbor_rows(s: np.ndarray):
    rows = []
    for i in range(s.shape[0]):
        idx = np.flatnonzero(s[i])
        rows.append((idx, s[i, idx]))
    return rows


def apply_filter(filt: GraphFilter, z: np.ndarray):
    """Run the filter as the network would: L local exchange rounds.

    Each round, every node gathers only its neighbors' current values (the
    nonzero pattern of its shift row) and forms its weighted sum; after L
    rounds each node combines the iterates it has stored. Returns the output
    signal and the number of exchanges used.
    """
    z = np.asarray(z, dtype=float)
    n = filt.s.shape[0]
    if z.shape != (n,):
        raise ValueError(f"signal length {z.shape} does not match n={n}")
    order = filt.order
    rows = _neighbor_rows(filt.s)
    iterates = [z]
    current = z
    for _ in range(order):
        nxt = np.empty(n)
        for i, (idx, vals) in enumerate(rows):
            nxt[i] = vals @ current[idx] if idx.size else 0.0
        iterates.append(nxt)
        current = nxt
    c = np.asarray(filt.coeffs, dtype=float)
    out = np.zeros(n)
    for l, it in enumerate(iterates):
        if filt.node_dependent:
            out += c[:, l] * it
        else:
            out += c[l] * it
    return out, order


def filter_matrix(filt: GraphFilter) -> np.ndarray:
    """Dense operator ``H = sum_l diag-or-scalar(c_l) S^l``."""
    n = filt.s.shape[0]
    c = np.asarray(filt.coeffs, dtype=float)
    h = np.zeros((n, n))
    power = np.eye(n)
    for l in range(filt.order + 1):
        if filt.node_dependent:
            h += c[:, l, None] * power
        else:
            h += c[l] * power
        power = power @ filt.s
    return h


def save_filter(path, filt: GraphFilter, r: int | None = None) -> None:
    """CSV blocks for the shift matrix and coefficients with a metadata header."""
    n = filt.s.shape[0]
    mode = "node" if filt.node_dependent else "scalar"
    c = np.atleast_2d(np.asarray(filt.coeffs, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"n={n},r={'' if r is None else r},L={filt.order},mode={mode}\n")
        for row in filt.s:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
        for row in c:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_filter(path) -> GraphFilter:
    with open(path) as fh:
        header = dict(kv.split("=") for kv in fh.readline().strip().split(","))
        n = int(header["n"])
        order = int(header["L"])
        rows = [np.fromstring(fh.readline(), sep=",") for _ in range(n)]
        s = np.array(rows)
        c_rows = [line for line in fh if line.strip()]
    c = np.array([np.fromstring(line, sep=",") for line in c_rows])
    if header["mode"] == "scalar":
        coeffs = c.reshape(order + 1)
    else:
        coeffs = c.reshape(n, order + 1)
    return GraphFilter(s=s, coeffs=coeffs)
