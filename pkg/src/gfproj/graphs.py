"""Communication graphs: generation, connectivity repair, topology matrices.

Graphs are undirected and always carry every self-loop: a node can use its
own measurement at no communication cost. The reduced edge set enumerates
each undirected edge once as a canonical ``(min, max)`` pair, self-loops
included, sorted lexicographically so every matrix built from it has a
reproducible column order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "generate_erdos_renyi",
    "generate_wsn",
    "ensure_connected",
    "topology_constraint_matrix",
    "edge_basis_matrix",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True)
class Graph:
    """Undirected communication graph with mandatory self-loops.

    Attributes
    ----------
    n : int
        Node count.
    edges : frozenset[tuple[int, int]]
        Unordered edge set stored as canonical ``(min, max)`` pairs,
        including all ``(i, i)`` self-loops.
    positions : ndarray or None
        Optional ``(n, d)`` sensor coordinates (present for WSN graphs).
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)
    positions: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        for i in range(self.n):
            if (i, i) not in self.edges:
                raise ValueError(f"self-loop ({i},{i}) missing")
        for (i, j) in self.edges:
            if not (0 <= i <= j < self.n):
                raise ValueError(f"edge ({i},{j}) not canonical for n={self.n}")
        if self.positions is not None and len(self.positions) != self.n:
            raise ValueError("positions length must equal node count")

    @property
    def reduced_edges(self) -> list[tuple[int, int]]:
        """Each undirected edge once, ``(min, max)``, sorted lexicographically."""
        return sorted(self.edges)

    @property
    def reduced_edge_count(self) -> int:
        return len(self.edges)

    def missing_pairs(self) -> list[tuple[int, int]]:
        """Off-diagonal pairs ``(i, j)`` with ``i < j`` absent from the graph."""
        return [
            (i, j)
            for j in range(self.n)
            for i in range(j)
            if (i, j) not in self.edges
        ]

    def neighbors(self, i: int) -> list[int]:
        """Neighbors of node ``i`` excluding ``i`` itself."""
        out = []
        for j in range(self.n):
            if j == i:
                continue
            if (min(i, j), max(i, j)) in self.edges:
                out.append(j)
        return out

    def adjacency(self) -> np.ndarray:
        """Boolean adjacency matrix, diagonal True."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for (i, j) in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by smallest member."""
        adj = self.adjacency()
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            stack, comp = [s], [s]
            seen[s] = True
            while stack:
                u = stack.pop()
                for v in np.flatnonzero(adj[u]):
                    if not seen[v]:
                        seen[v] = True
                        stack.append(int(v))
                        comp.append(int(v))
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1


def _with_self_loops(n: int) -> set:
    return {(i, i) for i in range(n)}


def generate_erdos_renyi(n: int, p_miss: float, rng: np.random.Generator) -> Graph:
    """Erdős–Rényi graph: each off-diagonal pair present with prob ``1 - p_miss``.

    Self-loops are always present. Deterministic given the generator state.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if not 0.0 <= p_miss <= 1.0:
        raise ValueError(f"p_miss must be in [0, 1], got {p_miss}")
    edges = _with_self_loops(n)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() >= p_miss:
                edges.add((i, j))
    return Graph(n=n, edges=frozenset(edges))


def generate_wsn(n: int, d_max: float, rng: np.random.Generator) -> Graph:
    """Geometric sensor-network graph on the unit square.

    Positions are i.i.d. uniform on ``[0, 1]^2``; nodes are linked when their
    Euclidean distance is strictly below ``d_max``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if d_max <= 0:
        raise ValueError(f"d_max must be positive, got {d_max}")
    positions = rng.random((n, 2))
    edges = _with_self_loops(n)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(positions[i] - positions[j]) < d_max:
                edges.add((i, j))
    return Graph(n=n, edges=frozenset(edges), positions=positions)


def ensure_connected(g: Graph, rng: np.random.Generator) -> Graph:
    """Add the minimum number of edges needed to connect ``g``.

    A ``c``-component graph gains exactly ``c - 1`` edges. Components are
    merged sequentially: component ``k+1`` is tied to the union of components
    ``1..k`` through one edge between uniformly drawn endpoints. Endpoints
    from distinct components can never duplicate an existing edge.
    """
    comps = g.components()
    if len(comps) == 1:
        return g
    edges = set(g.edges)
    merged = list(comps[0])
    for comp in comps[1:]:
        a = merged[rng.integers(len(merged))]
        b = comp[rng.integers(len(comp))]
        edges.add((min(a, b), max(a, b)))
        merged.extend(comp)
    return Graph(n=g.n, edges=frozenset(edges), positions=g.positions)


def topology_constraint_matrix(g: Graph) -> np.ndarray:
    """Rows selecting the entries of ``vec(S)`` that the topology forbids.

    One row per missing pair ``(i, j)``, ``i < j``; the row is
    ``(e_j ⊗ e_i)ᵀ`` so that ``W @ vec(S) = 0`` (column-major vec) exactly
    when ``S`` vanishes on every missing upper-triangular position.
    """
    n = g.n
    missing = g.missing_pairs()
    w = np.zeros((len(missing), n * n))
    for k, (i, j) in enumerate(missing):
        w[k, j * n + i] = 1.0
    return w


def edge_basis_matrix(g: Graph) -> np.ndarray:
    """Columns ``vec(Φ_e)`` spanning the symmetric matrices supported on ``g``.

    For edge ``(a, b)`` with ``a < b`` the basis matrix is
    ``e_a e_bᵀ + e_b e_aᵀ``; a self-loop ``(a, a)`` contributes ``2 e_a e_aᵀ``
    (the same formula evaluated at coincident endpoints — the factor 2 is
    absorbed downstream by the coordinates). Columns follow the canonical
    reduced-edge order.
    """
    n = g.n
    cols = []
    for (a, b) in g.reduced_edges:
        phi = np.zeros((n, n))
        phi[a, b] += 1.0
        phi[b, a] += 1.0
        cols.append(phi.flatten(order="F"))
    return np.array(cols).T if cols else np.zeros((n * n, 0))


def save_graph(path, g: Graph) -> None:
    """Write the edge-list text format: header ``n=<count>``, one ``i j`` pair
    per line (0-based, self-loops included), optional ``pos i x y`` lines."""
    lines = [f"n={g.n}"]
    for (i, j) in g.reduced_edges:
        lines.append(f"{i} {j}")
    if g.positions is not None:
        for i, (x, y) in enumerate(g.positions):
            lines.append(f"pos {i} {x!r} {y!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    """Read the edge-list format written by :func:`save_graph`."""
    n = None
    edges = set()
    pos: dict[int, tuple[float, float]] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("n="):
                n = int(line[2:])
            elif line.startswith("pos "):
                _, i, x, y = line.split()
                pos[int(i)] = (float(x), float(y))
            else:
                i, j = map(int, line.split())
                edges.add((min(i, j), max(i, j)))
    if n is None:
        raise ValueError(f"{path}: missing 'n=<count>' header")
    positions = None
    if pos:
        positions = np.array([pos[i] for i in range(n)])
    return Graph(n=n, edges=frozenset(edges), positions=positions)
