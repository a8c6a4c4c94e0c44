"""Numeric linear-subspace algebra.

A subspace of R^n is stored as an orthonormal basis matrix (n rows, one
column per basis vector), produced by an SVD with a relative singular-value
threshold.  All operations are pure and return new Subspace values; nothing
here mutates shared state, so values are safe to share across threads.

Dual covectors are identified with vectors through the standard basis, so
annihilators live in the same ambient R^n.
"""

import numpy as np

DEFAULT_RANK_TOL = 1e-9


class Subspace:
    """An r-dimensional linear subspace of R^n with an orthonormal basis.

    Attributes
    ----------
    ambient_dim : int
        Dimension n of the surrounding space, n >= 1.
    basis : ndarray, shape (n, r)
        Orthonormal columns spanning the subspace (r may be 0).
    rank_tol : float
        Relative singular-value threshold used for rank decisions and for
        containment tests involving this subspace.
    """

    __slots__ = ("ambient_dim", "basis", "rank_tol")

    def __init__(self, ambient_dim, basis, rank_tol=DEFAULT_RANK_TOL):
        if ambient_dim < 1:
            raise ValueError("ambient dimension must be positive")
        basis = np.array(basis, dtype=float)
        if basis.size == 0:
            basis = basis.reshape(ambient_dim, 0)
        if basis.ndim != 2 or basis.shape[0] != ambient_dim:
            raise ValueError("basis must have one row per ambient dimension")
        if basis.shape[1] > ambient_dim:
            raise ValueError("more basis vectors than ambient dimension")
        self.ambient_dim = int(ambient_dim)
        self.basis = basis
        self.rank_tol = float(rank_tol)
        self.basis.setflags(write=False)

    @property
    def dim(self):
        return self.basis.shape[1]

    def project(self, v):
        """Orthogonal projection of a vector onto the subspace."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.ambient_dim,):
            raise ValueError(f"vector has length {v.shape}, ambient is {self.ambient_dim}")
        return self.basis @ (self.basis.T @ v)

    def contains(self, v, tol=None):
        """True iff the projection residual of v is below tol * max(1, |v|)."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.ambient_dim,):
            raise ValueError(f"vector has length {v.shape}, ambient is {self.ambient_dim}")
        tol = self.rank_tol if tol is None else tol
        residual = np.linalg.norm(v - self.project(v))
        return residual <= tol * max(1.0, np.linalg.norm(v))

    def equals(self, other, tol=None):
        """Mutual containment of basis vectors, requiring equal dimension."""
        if self.ambient_dim != other.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        if self.dim != other.dim:
            return False
        return all(other.contains(b, tol) for b in self.basis.T) and all(
            self.contains(b, tol) for b in other.basis.T
        )

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def _numeric_rank(singular_values, rank_tol, scale=None):
    if singular_values.size == 0:
        return 0
    reference = singular_values[0] if scale is None else scale
    if reference == 0.0:
        return 0
    return int(np.sum(singular_values > rank_tol * reference))


def span(columns, ambient_dim=None, rank_tol=DEFAULT_RANK_TOL, scale=None) -> Subspace:
    """Column space of a matrix, with numeric rank decided by the SVD.

    The rank threshold is relative to the largest singular value, or to
    ``scale`` when given; pass scale=1.0 when projecting out of an
    orthonormal basis, where an all-noise block must collapse to rank 0.
    An empty column list yields the zero subspace; ``ambient_dim`` is then
    required to fix the surrounding space.
    """
    columns = np.asarray(columns, dtype=float)
    if columns.size == 0:
        if ambient_dim is None:
            if columns.ndim != 2 or columns.shape[0] == 0:
                raise ValueError("ambient dimension of an empty span is undetermined")
            ambient_dim = columns.shape[0]
        return Subspace(ambient_dim, np.zeros((ambient_dim, 0)), rank_tol)
    if columns.ndim == 1:
        columns = columns[:, None]
    if ambient_dim is not None and columns.shape[0] != ambient_dim:
        raise ValueError("column length does not match ambient dimension")
    u, s, _ = np.linalg.svd(columns, full_matrices=False)
    r = _numeric_rank(s, rank_tol, scale)
    return Subspace(columns.shape[0], u[:, :r], rank_tol)


def kernel(rows, ambient_dim=None, rank_tol=DEFAULT_RANK_TOL) -> Subspace:
    """Null space {x : rows @ x = 0}; dim(kernel) + rank(rows) = ambient."""
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        if ambient_dim is None:
            if rows.ndim != 2 or rows.shape[1] == 0:
                raise ValueError("ambient dimension of an empty kernel is undetermined")
            ambient_dim = rows.shape[1]
        return Subspace(ambient_dim, np.eye(ambient_dim), rank_tol)
    if rows.ndim == 1:
        rows = rows[None, :]
    if ambient_dim is not None and rows.shape[1] != ambient_dim:
        raise ValueError("row length does not match ambient dimension")
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    r = _numeric_rank(s, rank_tol)
    return Subspace(rows.shape[1], vt[r:].T, rank_tol)


def _check_same_ambient(a: Subspace, b: Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(
            f"ambient dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}"
        )


def annihilator(a: Subspace) -> Subspace:
    """Covectors vanishing on a, as a subspace of the identified dual R^n."""
    return kernel(a.basis.T, ambient_dim=a.ambient_dim, rank_tol=a.rank_tol)


def intersect(a: Subspace, b: Subspace) -> Subspace:
    """Largest subspace contained in both, via the stacked annihilators."""
    _check_same_ambient(a, b)
    rows = np.vstack([annihilator(a).basis.T, annihilator(b).basis.T])
    return kernel(rows, ambient_dim=a.ambient_dim, rank_tol=max(a.rank_tol, b.rank_tol))


def add(a: Subspace, b: Subspace) -> Subspace:
    """Subspace sum a + b, the span of the union of the two bases."""
    _check_same_ambient(a, b)
    return span(
        np.hstack([a.basis, b.basis]),
        ambient_dim=a.ambient_dim,
        rank_tol=max(a.rank_tol, b.rank_tol),
    )


def image(a: Subspace, matrix, rank_tol=None, scale=None) -> Subspace:
    """Image of the subspace under a linear map given by its matrix."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[1] != a.ambient_dim:
        raise ValueError("map domain does not match ambient dimension")
    return span(
        matrix @ a.basis,
        ambient_dim=matrix.shape[0],
        rank_tol=a.rank_tol if rank_tol is None else rank_tol,
        scale=scale,
    )


def full_space(ambient_dim, rank_tol=DEFAULT_RANK_TOL) -> Subspace:
    return Subspace(ambient_dim, np.eye(ambient_dim), rank_tol)


def zero_space(ambient_dim, rank_tol=DEFAULT_RANK_TOL) -> Subspace:
    return Subspace(ambient_dim, np.zeros((ambient_dim, 0)), rank_tol)
