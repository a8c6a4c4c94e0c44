"""Pointwise linear Dirac structures and the algebra that combines them.

A Dirac structure on V = R^n is a subspace D of V + V* (stored in R^{2n},
velocity entries first, covector entries last) that equals its own
orthogonal under the symmetric pairing

    <<(v, a), (w, b)>> = <a, w> + <b, v>.

Equivalently: dim D = n and every pair of elements pairs to zero.  The
module provides the constructions used to interconnect such structures:
direct sum on a product space, the bowtie product that eliminates a shared
covector, its quotient-by-diagonal twin, composition across a shared port
space, and push-forward along a linear map.  Everything is pure and
pointwise; nothing here knows about base points or bundles.
"""

import numpy as np

from . import subspace as sub
from .subspace import Subspace

ISOTROPY_TOL = 1e-10
SKEW_TOL = 1e-12


class DiracStructureError(ValueError):
    """A construction produced or received something that is not Dirac."""


class DegenerateMapError(DiracStructureError):
    """Push-forward along the given map does not yield a Dirac structure."""


def _swap_halves(n):
    """Matrix of the pairing: (v, a) -> (a, v), so <<x, y>> = x . swap(y)."""
    m = np.zeros((2 * n, 2 * n))
    m[:n, n:] = np.eye(n)
    m[n:, :n] = np.eye(n)
    return m


class LinearDirac:
    """A Dirac structure on R^n, held as an n-dimensional Subspace of R^{2n}."""

    __slots__ = ("base_dim", "subspace")

    def __init__(self, base_dim, subspace: Subspace):
        if subspace.ambient_dim != 2 * base_dim:
            raise ValueError("subspace ambient must be twice the base dimension")
        self.base_dim = int(base_dim)
        self.subspace = subspace

    @property
    def dim(self):
        return self.subspace.dim

    def velocity_part(self) -> np.ndarray:
        return self.subspace.basis[: self.base_dim]

    def covector_part(self) -> np.ndarray:
        return self.subspace.basis[self.base_dim :]

    def velocity_projection(self) -> Subspace:
        """The distribution pr_V(D), i.e. the admissible velocities."""
        return sub.span(self.velocity_part(), ambient_dim=self.base_dim, scale=1.0)

    def contains(self, velocity, covector, tol=None):
        pair = np.concatenate([np.asarray(velocity, float), np.asarray(covector, float)])
        return self.subspace.contains(pair, tol)

    def equals(self, other: "LinearDirac", tol=None):
        if self.base_dim != other.base_dim:
            raise ValueError("base dimension mismatch")
        return self.subspace.equals(other.subspace, tol)

    def __repr__(self):
        return f"LinearDirac(base_dim={self.base_dim}, dim={self.dim})"


class TwoFormOnDistribution:
    """A skew bilinear form carried on a distribution Delta of R^n.

    ``form`` is an n x n skew matrix acting as the flat map v -> form @ v;
    only its restriction to the distribution is meaningful.
    """

    __slots__ = ("distribution", "form")

    def __init__(self, distribution: Subspace, form):
        form = np.asarray(form, dtype=float)
        n = distribution.ambient_dim
        if form.shape != (n, n):
            raise ValueError("form must be square with the ambient dimension")
        if np.max(np.abs(form + form.T), initial=0.0) > SKEW_TOL:
            raise ValueError("form is not skew-symmetric")
        self.distribution = distribution
        self.form = form


def pairing_orthogonal(s: Subspace) -> Subspace:
    """Orthogonal of a subspace of R^{2n} under the symmetric pairing."""
    if s.ambient_dim % 2 != 0:
        raise ValueError("pairing orthogonal needs an even ambient dimension")
    n = s.ambient_dim // 2
    rows = s.basis.T @ _swap_halves(n)
    return sub.kernel(rows, ambient_dim=2 * n, rank_tol=s.rank_tol)


def validate_dirac(s: Subspace, tol=ISOTROPY_TOL) -> bool:
    """True iff s is maximally isotropic: dim n, isotropic, s = s-orthogonal."""
    if s.ambient_dim % 2 != 0:
        raise ValueError("a Dirac candidate needs an even ambient dimension")
    n = s.ambient_dim // 2
    if s.dim != n:
        return False
    gram = s.basis.T @ _swap_halves(n) @ s.basis
    if np.max(np.abs(gram), initial=0.0) > tol:
        return False
    return pairing_orthogonal(s).equals(s)


def is_dirac(d: LinearDirac, tol=ISOTROPY_TOL) -> bool:
    return validate_dirac(d.subspace, tol)


def from_form_and_distribution(data: TwoFormOnDistribution) -> LinearDirac:
    """Dirac structure {(v, a) : v in Delta, a - form@v in Delta-annihilator}."""
    delta = data.distribution
    n = delta.ambient_dim
    graph_part = np.vstack([delta.basis, data.form @ delta.basis])
    ann = sub.annihilator(delta)
    ann_part = np.vstack([np.zeros((n, ann.dim)), ann.basis])
    s = sub.span(np.hstack([graph_part, ann_part]), ambient_dim=2 * n,
                 rank_tol=delta.rank_tol)
    return LinearDirac(n, s)


def zero_form_structure(delta: Subspace) -> LinearDirac:
    """The structure Delta + Delta-annihilator carried by a distribution."""
    zero = np.zeros((delta.ambient_dim, delta.ambient_dim))
    return from_form_and_distribution(TwoFormOnDistribution(delta, zero))


def port_interconnection(n1, ns, n2):
    """Interconnection data composing structures across a shared port space.

    Returns (d_int, psi): the zero-form structure generated by the
    port-matching distribution {(v1, vs, -vs, v2)} on V1 x Vs x Vs x V2,
    and the projection matrix psi onto the outer factors (v1, v2).
    Pushing (d1 (+) d2) bowtie d_int forward along psi equals
    compose(d1, d2).
    """
    total = n1 + 2 * ns + n2
    cols = np.zeros((total, n1 + ns + n2))
    cols[:n1, :n1] = np.eye(n1)
    cols[n1 : n1 + ns, n1 : n1 + ns] = np.eye(ns)
    cols[n1 + ns : n1 + 2 * ns, n1 : n1 + ns] = -np.eye(ns)
    cols[n1 + 2 * ns :, n1 + ns :] = np.eye(n2)
    delta = sub.span(cols, ambient_dim=total)
    psi = np.zeros((n1 + n2, total))
    psi[:n1, :n1] = np.eye(n1)
    psi[n1:, n1 + 2 * ns :] = np.eye(n2)
    return zero_form_structure(delta), psi


def identity_structure(n, rank_tol=sub.DEFAULT_RANK_TOL) -> LinearDirac:
    """The bowtie identity element: all velocities, zero covectors."""
    if n < 1:
        raise ValueError("base dimension must be positive")
    basis = np.vstack([np.eye(n), np.zeros((n, n))])
    return LinearDirac(n, Subspace(2 * n, basis, rank_tol))


def canonical_structure(dof) -> LinearDirac:
    """Graph of the canonical symplectic flat map on R^{2*dof}.

    Coordinates are (q, p); the flat map sends (qdot, pdot) to (-pdot, qdot).
    """
    return from_form_and_distribution(
        TwoFormOnDistribution(sub.full_space(2 * dof), canonical_form_matrix(dof))
    )


def canonical_form_matrix(dof) -> np.ndarray:
    """Matrix of the canonical symplectic form on phase coordinates (q, p)."""
    j = np.zeros((2 * dof, 2 * dof))
    j[:dof, dof:] = -np.eye(dof)
    j[dof:, :dof] = np.eye(dof)
    return j


def direct_sum(d1: LinearDirac, d2: LinearDirac) -> LinearDirac:
    """Block embedding of two structures on the product space V1 x V2.

    Coordinates are concatenated per part: velocities (v1, v2) then
    covectors (a1, a2).
    """
    n1, n2 = d1.base_dim, d2.base_dim
    n = n1 + n2
    b1, b2 = d1.subspace.basis, d2.subspace.basis
    cols = np.zeros((2 * n, b1.shape[1] + b2.shape[1]))
    cols[:n1, : b1.shape[1]] = b1[:n1]
    cols[n : n + n1, : b1.shape[1]] = b1[n1:]
    cols[n1:n, b1.shape[1] :] = b2[:n2]
    cols[n + n1 :, b1.shape[1] :] = b2[n2:]
    return LinearDirac(n, sub.span(cols, ambient_dim=2 * n))


def _membership_rows(d: LinearDirac):
    """Rows annihilating d.subspace, so membership is 'rows @ x = 0'."""
    return sub.annihilator(d.subspace).basis.T


def bowtie(da: LinearDirac, db: LinearDirac) -> LinearDirac:
    """Tensor product eliminating a shared covector.

    Builds the space of triples (v, a, b) with (v, a + b) in D_a and
    (v, -b) in D_b, then projects out b.  The velocity projection of the
    result is the intersection of the two input distributions and the
    carried two-forms add.
    """
    if da.base_dim != db.base_dim:
        raise ValueError("bowtie needs equal base dimensions")
    n = da.base_dim
    na, nb = _membership_rows(da), _membership_rows(db)
    # Unknown triple layout: (v, a, b) in R^{3n}.
    rows = np.zeros((na.shape[0] + nb.shape[0], 3 * n))
    rows[: na.shape[0], : 2 * n] = na
    rows[: na.shape[0], 2 * n :] = na[:, n:]
    rows[na.shape[0] :, :n] = nb[:, :n]
    rows[na.shape[0] :, 2 * n :] = -nb[:, n:]
    triples = sub.kernel(rows, ambient_dim=3 * n)
    proj = np.hstack([np.eye(2 * n), np.zeros((2 * n, n))])
    result = sub.image(triples, proj, scale=1.0)
    if result.dim != n:
        raise DiracStructureError(
            f"bowtie produced dimension {result.dim}, expected {n}"
        )
    return LinearDirac(n, result)


def bowtie_via_pullback(da: LinearDirac, db: LinearDirac) -> LinearDirac:
    """Quotient construction of the same product on the doubled space.

    Intersects D_a (+) D_b with diagonal velocities, adds the quotient
    kernel K = {0} x {(-xi, xi)}, selects the coset representative whose
    second covector vanishes, and maps (v, v, a, 0) to (v, a).
    """
    if da.base_dim != db.base_dim:
        raise ValueError("bowtie needs equal base dimensions")
    n = da.base_dim
    pair = direct_sum(da, db)  # ambient 4n: (v1, v2, a1, a2)
    diag_rows = np.hstack([np.eye(n), -np.eye(n), np.zeros((n, 2 * n))])
    diagonal = sub.kernel(diag_rows, ambient_dim=4 * n)
    s = sub.intersect(pair.subspace, diagonal)
    k_cols = np.vstack([np.zeros((2 * n, n)), -np.eye(n), np.eye(n)])
    u = sub.add(s, sub.span(k_cols, ambient_dim=4 * n))
    second_covector_zero = sub.kernel(
        np.hstack([np.zeros((n, 3 * n)), np.eye(n)]), ambient_dim=4 * n
    )
    reps = sub.intersect(u, second_covector_zero)
    proj = np.zeros((2 * n, 4 * n))
    proj[:n, :n] = np.eye(n)
    proj[n:, 2 * n : 3 * n] = np.eye(n)
    result = sub.image(reps, proj, scale=1.0)
    if result.dim != n:
        raise DiracStructureError(
            f"pullback bowtie produced dimension {result.dim}, expected {n}"
        )
    return LinearDirac(n, result)


def _truncated_pinv(m, abs_tol):
    """Pseudo-inverse keeping only singular values above an absolute cutoff.

    The velocity block of an orthonormal Dirac basis has scale 1; noise
    directions sit at round-off and must not be inverted.
    """
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    keep = s > abs_tol
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return vt.T @ (inv[:, None] * u.T)


def extract_two_form(d: LinearDirac) -> TwoFormOnDistribution:
    """Recover the distribution and the skew form a structure carries.

    For (v1, a1) in D and v2 in the distribution, the form value is
    <a1, v2>; the returned matrix is sandwiched by the projection onto the
    distribution and exactly skew-symmetrized.
    """
    n = d.base_dim
    delta = d.velocity_projection()
    v = d.velocity_part()
    a = d.covector_part()
    lift = a @ _truncated_pinv(v, d.subspace.rank_tol)
    p = delta.basis @ delta.basis.T
    form = p @ lift @ p
    form = 0.5 * (form - form.T)
    return TwoFormOnDistribution(delta, form)


def compose(d1: LinearDirac, d2: LinearDirac, n1, ns, n2) -> LinearDirac:
    """Composition across a shared port space of dimension ns.

    d1 lives on V1 x Vs and d2 on Vs x V2; the result collects
    (v1, v2, a1, a2) such that for some shared (vs, as):

        (v1, vs, a1, as) in d1   and   (-vs, v2, as, a2) in d2.

    The shared pair is eliminated the same way bowtie eliminates its
    covector.
    """
    if d1.base_dim != n1 + ns or d2.base_dim != ns + n2:
        raise ValueError("factor dimensions do not match the structures")
    nout = n1 + n2
    m1, m2 = _membership_rows(d1), _membership_rows(d2)
    # Unknown layout: (v1, v2, a1, a2, vs, as).
    width = 2 * nout + 2 * ns
    rows = np.zeros((m1.shape[0] + m2.shape[0], width))
    r1 = rows[: m1.shape[0]]
    r1[:, :n1] = m1[:, :n1]
    r1[:, 2 * nout : 2 * nout + ns] = m1[:, n1 : n1 + ns]
    r1[:, nout : nout + n1] = m1[:, n1 + ns : 2 * n1 + ns]
    r1[:, 2 * nout + ns :] = m1[:, 2 * n1 + ns :]
    r2 = rows[m1.shape[0] :]
    r2[:, 2 * nout : 2 * nout + ns] = -m2[:, :ns]
    r2[:, n1:nout] = m2[:, ns : ns + n2]
    r2[:, 2 * nout + ns :] = m2[:, ns + n2 : 2 * ns + n2]
    r2[:, nout + n1 : 2 * nout] = m2[:, 2 * ns + n2 :]
    joint = sub.kernel(rows, ambient_dim=width)
    proj = np.hstack([np.eye(2 * nout), np.zeros((2 * nout, 2 * ns))])
    result = sub.image(joint, proj, scale=1.0)
    if result.dim != nout:
        raise DiracStructureError(
            f"composition produced dimension {result.dim}, expected {nout}"
        )
    return LinearDirac(nout, result)


def pushforward(d: LinearDirac, phi) -> LinearDirac:
    """Push-forward {(phi(v), a) : (v, phi^T a) in d} along a linear map."""
    phi = np.asarray(phi, dtype=float)
    nw, nu = phi.shape
    if nu != d.base_dim:
        raise ValueError("map domain does not match the structure")
    m = _membership_rows(d)
    # Unknown layout: (w, a, v) with w = phi v and (v, phi^T a) in d.
    width = 2 * nw + nu
    rows = np.zeros((nw + m.shape[0], width))
    rows[:nw, :nw] = np.eye(nw)
    rows[:nw, 2 * nw :] = -phi
    rows[nw:, 2 * nw :] = m[:, :nu]
    rows[nw:, nw : 2 * nw] = m[:, nu:] @ phi.T
    joint = sub.kernel(rows, ambient_dim=width)
    proj = np.hstack([np.eye(2 * nw), np.zeros((2 * nw, nu))])
    result = sub.image(joint, proj, scale=1.0)
    if result.dim != nw or not validate_dirac(result):
        raise DegenerateMapError(
            f"push-forward gave dimension {result.dim} on a base of dimension {nw}"
        )
    return LinearDirac(nw, result)
