"""Exact linear algebra over CScalar entries and over series entries.

Rank, nullspace and solve decisions feed span computations that must be
tolerance-free, so everything here is exact rational arithmetic with a
deterministic pivot rule: largest |entry|^2, ties broken by lowest index.
"""

from __future__ import annotations

from .series import CS_ONE, CS_ZERO, CScalar, SeriesError, TruncatedSeries


def rref(rows):
    """Reduced row echelon form. Returns (new_rows, pivot_columns)."""
    rows = [list(r) for r in rows]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for col in range(ncols):
        if r >= len(rows):
            break
        best, best_size = None, None
        for i in range(r, len(rows)):
            size = rows[i][col].abs2()
            if size != 0 and (best is None or size > best_size):
                best, best_size = i, size
        if best is None:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        inv = CS_ONE / rows[r][col]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][col].is_zero():
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    return rows, pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows, ncols=None):
    """Basis of the right nullspace, one vector per free column."""
    if rows:
        ncols = len(rows[0])
    elif ncols is None:
        raise ValueError("ncols required for an empty matrix")
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [CS_ZERO] * ncols
        v[fc] = CS_ONE
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def solve_unique(rows, rhs):
    """Solve A x = b for square invertible A; raises on singular input."""
    n = len(rows)
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        raise SeriesError("singular linear system")
    return [red[i][n] for i in range(n)]


class SpanTracker:
    """Incremental exact span of row vectors; reports dimension growth."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows = []

    def add(self, vec) -> bool:
        """Reduce vec against the stored echelon; keep it if independent."""
        vec = list(vec)
        for row in self.rows:
            lead = next(i for i, x in enumerate(row) if not x.is_zero())
            if not vec[lead].is_zero():
                f = vec[lead]
                vec = [a - f * b for a, b in zip(vec, row)]
        lead = next((i for i, x in enumerate(vec) if not x.is_zero()), None)
        if lead is None:
            return False
        inv = CS_ONE / vec[lead]
        vec = [x * inv for x in vec]
        self.rows.append(vec)
        self.rows.sort(key=lambda r: next(i for i, x in enumerate(r) if not x.is_zero()))
        return True

    @property
    def dim(self) -> int:
        return len(self.rows)

    def contains(self, vec) -> bool:
        vec = list(vec)
        for row in self.rows:
            lead = next(i for i, x in enumerate(row) if not x.is_zero())
            if not vec[lead].is_zero():
                f = vec[lead]
                vec = [a - f * b for a, b in zip(vec, row)]
        return all(x.is_zero() for x in vec)


def series_solve(rows, rhs):
    """Solve A x = b where entries are series and A(0) is invertible.

    Gaussian elimination over the series ring; every pivot must be a unit
    (nonzero constant term), which A(0) invertible guarantees.
    """
    n = len(rows)
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        best, best_size = None, None
        for i in range(col, n):
            size = aug[i][col].constant_term().abs2()
            if size != 0 and (best is None or size > best_size):
                best, best_size = i, size
        if best is None:
            raise SeriesError("series system pivot is not a unit")
        aug[col], aug[best] = aug[best], aug[col]
        inv = aug[col][col].invert_unit()
        aug[col] = [x * inv for x in aug[col]]
        for i in range(n):
            if i != col and not aug[i][col].is_zero():
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [aug[i][n] for i in range(n)]


def series_matrix_inverse(rows):
    """Inverse of a square series matrix with invertible constant term."""
    n = len(rows)
    cols = []
    for j in range(n):
        e = [
            TruncatedSeries.constant(rows[0][0].nvars, 1 if i == j else 0, rows[i][j].order)
            for i in range(n)
        ]
        cols.append(series_solve(rows, e))
    # columns of the inverse were solved one at a time
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def eval_matrix(rows, point=None):
    """Constant-term (or point) evaluation of a series matrix."""
    out = []
    for r in rows:
        if point is None:
            out.append([x.constant_term() for x in r])
        else:
            out.append([x.eval_at(point) for x in r])
    return out
