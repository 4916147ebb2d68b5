"""Signal-subspace bases, orthogonal complements, and projection operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Basis",
    "DegenerateBasisError",
    "random_orthonormal_basis",
    "parametric_basis",
    "orthogonal_complement",
    "projection_matrix",
    "save_matrix_csv",
    "load_matrix_csv",
]

_ORTHO_TOL = 1e-10


class DegenerateBasisError(ValueError):
    """Raised when requested basis atoms are numerically rank-deficient."""

    def __init__(self, numerical_rank: int, requested: int):
        self.numerical_rank = numerical_rank
        self.requested = requested
        super().__init__(
            f"atom matrix has numerical rank {numerical_rank} < {requested} columns"
        )


@dataclass(frozen=True)
class Basis:
    """Orthonormal basis ``u_par`` of the signal subspace plus a completion.

    ``u_par`` is ``n x r`` with orthonormal columns, ``u_perp`` is
    ``n x (n - r)`` spanning the orthogonal complement; ``0 < r < n``.
    """

    u_par: np.ndarray
    u_perp: np.ndarray

    def __post_init__(self):
        n, r = self.u_par.shape
        if not 0 < r < n:
            raise ValueError(f"need 0 < r < n, got r={r}, n={n}")
        if self.u_perp.shape != (n, n - r):
            raise ValueError("u_perp shape must be (n, n - r)")

    @property
    def n(self) -> int:
        return self.u_par.shape[0]

    @property
    def r(self) -> int:
        return self.u_par.shape[1]


def _orthonormalize(a: np.ndarray) -> np.ndarray:
    """Householder QR, re-orthogonalized once if orthonormality drifts."""
    q, _ = np.linalg.qr(a)
    gram_err = np.linalg.norm(q.T @ q - np.eye(q.shape[1]))
    if gram_err > _ORTHO_TOL:
        q, _ = np.linalg.qr(q)
    return q


def orthogonal_complement(u_par: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the complement of ``span(u_par)``.

    Any valid completion is acceptable; downstream designs do not depend on
    the choice. Implementation: the trailing ``n - r`` columns of a full QR.
    """
    n, r = u_par.shape
    q, _ = np.linalg.qr(u_par, mode="complete")
    return q[:, r:]


def random_orthonormal_basis(n: int, r: int, rng: np.random.Generator) -> Basis:
    """Orthonormalize an ``n x r`` matrix of i.i.d. standard normal entries."""
    if not 0 < r < n:
        raise ValueError(f"need 0 < r < n, got r={r}, n={n}")
    u_par = _orthonormalize(rng.standard_normal((n, r)))
    return Basis(u_par=u_par, u_perp=orthogonal_complement(u_par))


def parametric_basis(
    locations: np.ndarray,
    kind: str,
    sources=None,
    dct_orders: tuple[int, int] | None = None,
    region: tuple[float, float] = (1.0, 1.0),
) -> Basis:
    """Basis from physical field models evaluated at the sensor locations.

    Parameters
    ----------
    locations : (n, 2) array
        Sensor coordinates; must be distinct.
    kind : {"diffusion", "cauchy", "dct"}
        Atom family. ``diffusion`` uses Gaussian bells
        ``exp(-|x - c|^2 / (2 sigma^2)) / (2 pi sigma^2)``, ``cauchy`` uses
        ``1 / (1 + |x - c|^2 / sigma^2)``, ``dct`` uses separable cosine
        products over the region.
    sources : list of (center, width)
        One atom per source for the kernel families. ``width`` is sigma.
    dct_orders : (r1, r2)
        Cosine orders ``i1 < r1``, ``i2 < r2`` for ``kind="dct"``.
    region : (X1, X2)
        Side lengths of the monitored region for ``kind="dct"``.

    Raises
    ------
    DegenerateBasisError
        If the raw atom matrix is numerically rank-deficient.
    """
    locations = np.asarray(locations, dtype=float)
    n = locations.shape[0]
    if len({tuple(x) for x in locations}) != n:
        raise ValueError("sensor locations must be distinct")

    if kind in ("diffusion", "cauchy"):
        if not sources:
            raise ValueError(f"kind={kind!r} requires sources")
        atoms = []
        for center, width in sources:
            d2 = np.sum((locations - np.asarray(center, dtype=float)) ** 2, axis=1)
            if kind == "diffusion":
                atoms.append(np.exp(-d2 / (2.0 * width**2)) / (2.0 * np.pi * width**2))
            else:
                atoms.append(1.0 / (1.0 + d2 / width**2))
        atom_mat = np.array(atoms).T
    elif kind == "dct":
        if dct_orders is None:
            raise ValueError("kind='dct' requires dct_orders=(r1, r2)")
        r1, r2 = dct_orders
        x1, x2 = locations[:, 0], locations[:, 1]
        atoms = []
        for i1 in range(r1):
            for i2 in range(r2):
                atoms.append(
                    np.cos(np.pi / region[0] * i1 * (x1 + 0.5))
                    * np.cos(np.pi / region[1] * i2 * (x2 + 0.5))
                )
        atom_mat = np.array(atoms).T
    else:
        raise ValueError(f"unknown basis kind {kind!r}")

    r = atom_mat.shape[1]
    if not 0 < r < n:
        raise ValueError(f"need 0 < r < n atoms, got r={r}, n={n}")
    sv = np.linalg.svd(atom_mat, compute_uv=False)
    rank = int(np.sum(sv > max(atom_mat.shape) * np.finfo(float).eps * sv[0]))
    if rank < r:
        raise DegenerateBasisError(numerical_rank=rank, requested=r)
    u_par = _orthonormalize(atom_mat)
    return Basis(u_par=u_par, u_perp=orthogonal_complement(u_par))


def projection_matrix(basis: Basis) -> np.ndarray:
    """Orthogonal projector ``P = U U^T`` onto the signal subspace."""
    return basis.u_par @ basis.u_par.T


def save_matrix_csv(path, m: np.ndarray) -> None:
    """Dense CSV, row-major, header ``rows,cols``, 17 significant digits."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{m.shape[0]},{m.shape[1]}\n")
        for row in m:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix_csv`."""
    with open(path) as fh:
        rows, cols = map(int, fh.readline().strip().split(","))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {(rows, cols)}, data is {data.shape}")
    return data
