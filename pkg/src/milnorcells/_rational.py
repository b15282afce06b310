"""Exact linear algebra over the rationals (row reduction, rank, span tests)."""

from fractions import Fraction


def row_echelon(rows):
    """Return (echelon rows, pivot columns) of a list of rational vectors.

    The input is not modified.  Zero rows are dropped from the result.
    """
    m = [[Fraction(c) for c in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [x / p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows):
    return len(row_echelon(rows)[1])


def in_span(v, rows):
    """True iff v lies in the rational span of rows (the empty span is {0})."""
    if all(x == 0 for x in v):
        return True
    if not rows:
        return False
    return rank(list(rows) + [v]) == rank(rows)


def nullspace(rows, ncols):
    """Basis of {x : rows @ x = 0} as a list of rational column vectors."""
    ech, pivots = row_echelon(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, pc in zip(ech, pivots):
            x[pc] = -row[f]
        basis.append(x)
    return basis


def proportional(u, v):
    """Exact test that two nonzero vectors are scalar multiples (all 2x2 minors vanish)."""
    n = len(u)
    return all(u[i] * v[j] == u[j] * v[i] for i in range(n) for j in range(i + 1, n))
