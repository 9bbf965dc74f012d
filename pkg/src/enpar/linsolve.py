"""Exact sparse linear solves over the rationals.

Systems arising from Markov chains and energy unfoldings are sparse and
nearly banded when unknowns are ordered by energy level, so elimination
works on dict-of-rows and keeps fill-in small.  Arithmetic is done in
``gmpy2.mpq`` and converted back to ``Fraction`` at the boundary.
"""

from collections import defaultdict
from fractions import Fraction

from gmpy2 import mpq

from enpar.errors import SingularSystem


def _to_mpq(x):
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def _to_fraction(q):
    return Fraction(int(q.numerator), int(q.denominator))


def solve_sparse(rows, rhs):
    """Solve ``A x = b`` exactly.

    ``rows[i]`` maps column index to coefficient for row ``i``; the matrix
    must be square and nonsingular.  Returns a list of Fractions.

    >>> solve_sparse([{0: 2, 1: 1}, {0: 1, 1: 3}], [3, 5])
    [Fraction(4, 5), Fraction(7, 5)]
    """
    n = len(rows)
    if len(rhs) != n:
        raise ValueError("row/rhs length mismatch")
    mat = [{c: _to_mpq(v) for c, v in r.items() if v != 0} for r in rows]
    b = [_to_mpq(v) for v in rhs]
    col_rows = defaultdict(set)
    for i, r in enumerate(mat):
        for c in r:
            col_rows[c].add(i)

    used = [False] * n
    pivots = []
    for k in range(n):
        cands = [i for i in col_rows[k] if not used[i]]
        if not cands:
            raise SingularSystem(f"no pivot for column {k}")
        # fewest entries first keeps fill-in down; index breaks ties
        p = min(cands, key=lambda i: (len(mat[i]), i))
        used[p] = True
        pivots.append(p)
        prow = mat[p]
        pv = prow[k]
        bp = b[p]
        for i in cands:
            if i == p:
                continue
            ri = mat[i]
            f = ri[k] / pv
            for c, v in prow.items():
                nv = ri.get(c, 0) - f * v
                if nv == 0:
                    if c in ri:
                        del ri[c]
                        col_rows[c].discard(i)
                else:
                    if c not in ri:
                        col_rows[c].add(i)
                    ri[c] = nv
            b[i] -= f * bp

    x = [mpq(0)] * n
    for k in range(n - 1, -1, -1):
        p = pivots[k]
        prow = mat[p]
        acc = b[p]
        for c, v in prow.items():
            if c != k:
                acc -= v * x[c]
        x[k] = acc / prow[k]
    return [_to_fraction(v) for v in x]


def solve_dense(matrix, rhs):
    """Convenience wrapper for small dense systems."""
    rows = [{j: v for j, v in enumerate(r) if v != 0} for r in matrix]
    return solve_sparse(rows, rhs)
