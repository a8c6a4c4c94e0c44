"""Exact rational linear algebra used as a test oracle.

Everything here runs on stdlib Fractions so every rank decision is exact
for integer (or rational) inputs.  Matrices are lists of rows; subspaces
are lists of column vectors.  Oracle only: the package never imports this.
"""

from fractions import Fraction


def mat(rows):
    return [[Fraction(x) for x in row] for row in rows]


def rref(m):
    """Reduced row echelon form and the pivot column list."""
    m = [row[:] for row in m]
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        inv = m[r][c]
        m[r] = [x / inv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def rank(m):
    if not m or not m[0]:
        return 0
    return len(rref(mat(m))[1])


def nullspace(m, ncols):
    """Basis vectors (length ncols) of {x : m @ x = 0}, exactly."""
    if not m:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    reduced, pivots = rref(mat(m))
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for r, c in enumerate(pivots):
            vec[c] = -reduced[r][f]
        basis.append(vec)
    return basis


def column_space_rank(cols):
    """Rank of the span of a list of column vectors."""
    return rank([list(c) for c in cols])


def annihilating_rows(cols, ambient):
    """Rows r with r . x = 0 for every x in the span of the columns."""
    return nullspace([list(c) for c in cols], ambient)


def dirac_from_form(delta_cols, omega, n):
    """Columns spanning {(v, omega v) : v in span(delta)} + {0} x ann(delta).

    delta_cols: columns in Q^n; omega: n x n rational matrix (caller keeps
    it skew).  Returns columns in Q^{2n}.
    """
    omega = mat(omega)
    cols = []
    for d in delta_cols:
        top = list(d)
        bottom = [sum(omega[i][j] * d[j] for j in range(n)) for i in range(n)]
        cols.append(top + bottom)
    for a in annihilating_rows(delta_cols, n):
        cols.append([Fraction(0)] * n + list(a))
    return cols


def bowtie(da_cols, db_cols, n):
    """Exact bowtie of two structures given by spanning columns in Q^{2n}.

    Solves the membership conditions for triples (v, a, b) and projects out
    the eliminated covector; returns spanning columns (not necessarily
    independent) in Q^{2n}.
    """
    na = annihilating_rows(da_cols, 2 * n)
    nb = annihilating_rows(db_cols, 2 * n)
    rows = []
    for r in na:
        rows.append(list(r) + list(r[n:]))
    for r in nb:
        rows.append(list(r[:n]) + [Fraction(0)] * n + [-x for x in r[n:]])
    triples = nullspace(rows, 3 * n)
    return [t[: 2 * n] for t in triples]


def to_float_columns(cols):
    return [[float(x) for x in c] for c in cols]
