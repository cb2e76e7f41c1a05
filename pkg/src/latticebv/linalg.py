"""Dense exact linear algebra over Gaussian rationals.

Small matrices only (a few thousand entries); everything is exact, so rank
and solvability statements are decisions, not estimates.  The causal solver
used for Green functions lives in model.py; this module supplies the
elimination primitives it builds on, plus an independent fraction-free
integer elimination (Bareiss) used as the rank oracle in tests.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .series import Gaussian, ZERO, ONE


class Matrix:
    """Dense matrix of Gaussian rationals."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = [list(r) for r in rows]

    @classmethod
    def zeros(cls, n: int, m: int) -> "Matrix":
        return cls([[ZERO] * m for _ in range(n)])

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        out = cls.zeros(n, n)
        for i in range(n):
            out.rows[i][i] = ONE
        return out

    @property
    def shape(self):
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __setitem__(self, ij, value):
        i, j = ij
        self.rows[i][j] = value

    def __add__(self, other):
        return Matrix([[a + b for a, b in zip(r1, r2)]
                       for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return Matrix([[a - b for a, b in zip(r1, r2)]
                       for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self):
        return Matrix([[-a for a in r] for r in self.rows])

    def __mul__(self, other):
        if isinstance(other, Matrix):
            n, k = self.shape
            k2, m = other.shape
            if k != k2:
                raise ValueError("shape mismatch")
            bt = list(zip(*other.rows))
            out = []
            for r in self.rows:
                row = []
                for col in bt:
                    s = ZERO
                    for a, b in zip(r, col):
                        if a and b:
                            s = s + a * b
                    row.append(s)
                out.append(row)
            return Matrix(out)
        g = other if isinstance(other, Gaussian) else Gaussian(other)
        return Matrix([[a * g for a in r] for r in self.rows])

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Gaussian)):
            return self * other
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.rows == other.rows

    __hash__ = None

    def transpose(self) -> "Matrix":
        return Matrix(list(map(list, zip(*self.rows))))

    def is_zero(self) -> bool:
        return all(not a for r in self.rows for a in r)

    def nonzero_count(self) -> int:
        return sum(1 for r in self.rows for a in r if a)

    def max_magnitude(self) -> Fraction:
        best = Fraction(0)
        for r in self.rows:
            for a in r:
                m = a.magnitude()
                if m > best:
                    best = m
        return best

    def copy(self) -> "Matrix":
        return Matrix(self.rows)

    def __repr__(self):
        return "Matrix([" + ",\n        ".join(
            "[" + ", ".join(str(a) for a in r) + "]" for r in self.rows) + "])"


def solve_constrained(rows, rhs, col_order):
    """Solve a linear system exactly with a pinned free-variable convention.

    ``rows``: list of coefficient lists (one per equation), ``rhs``: the
    right-hand sides, ``col_order``: a permutation of the unknowns giving
    the order in which they are offered as pivots.  Unknowns that never
    pivot (the free ones) are set to zero, so the earlier a column appears
    in ``col_order`` the more likely it is to be pinned by the data rather
    than zeroed.  Returns a solution vector, or None if inconsistent.
    """
    sols = solve_constrained_multi(rows, [rhs], col_order)
    return None if sols is None else sols[0]


def solve_constrained_multi(rows, rhs_columns, col_order):
    """solve_constrained for several right-hand sides over one matrix.

    One elimination serves all systems.  Returns a list of solution
    vectors, or None if any system is inconsistent.
    """
    n_un = len(rows[0]) if rows else 0
    if sorted(col_order) != list(range(n_un)):
        raise ValueError("col_order must be a permutation of the unknowns")
    aug = Matrix([[r[c] for c in col_order] + [col[i] for col in rhs_columns]
                  for i, r in enumerate(rows)])
    red, pivots = rref(aug)
    if pivots and pivots[-1] >= n_un:
        return None  # a pivot in an rhs column: 0 = nonzero
    sols = [[ZERO] * n_un for _ in rhs_columns]
    for r_i, pc in enumerate(pivots):
        # RREF cleared all other pivot columns and free unknowns are zero,
        # so the pivot value is exactly the reduced right-hand side.
        row = red.rows[r_i]
        for j in range(len(rhs_columns)):
            sols[j][col_order[pc]] = row[n_un + j]
    return sols


def rref(matrix: Matrix):
    """Reduced row echelon form; returns (Matrix, pivot_columns)."""
    rows = [list(r) for r in matrix.rows]
    n, m = len(rows), len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(m):
        pivot = None
        for i in range(r, n):
            if rows[i][c]:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [a * inv if a else a for a in rows[r]]
        for i in range(n):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b if b else a
                           for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == n:
            break
    return Matrix(rows), pivots


def rank(matrix: Matrix) -> int:
    return len(rref(matrix)[1])


def kernel_basis(matrix: Matrix):
    """Basis of the right null space, as lists of Gaussians."""
    n, m = matrix.shape
    red, pivots = rref(matrix)
    pivot_set = set(pivots)
    free = [c for c in range(m) if c not in pivot_set]
    basis = []
    for fc in free:
        v = [ZERO] * m
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -red.rows[r][fc]
        basis.append(v)
    return basis


def complex_to_real(matrix: Matrix) -> list:
    """Embed an n x m Gaussian matrix as a 2n x 2m rational matrix
    [[Re, -Im], [Im, Re]]; ranks double exactly."""
    n, m = matrix.shape
    out = [[Fraction(0)] * (2 * m) for _ in range(2 * n)]
    for i in range(n):
        for j in range(m):
            a = matrix.rows[i][j]
            out[i][j] = a.re
            out[i][j + m] = -a.im
            out[i + n][j] = a.im
            out[i + n][j + m] = a.re
    return out


def bareiss_rank(frac_rows) -> int:
    """Rank via fraction-free integer elimination (independent oracle).

    Rows of Fractions are scaled to integers row by row (rank-preserving),
    then Bareiss elimination runs in pure integer arithmetic.
    """
    rows = []
    for r in frac_rows:
        den = 1
        for a in r:
            den = den * a.denominator // gcd(den, a.denominator)
        rows.append([int(a * den) for a in r])
    n = len(rows)
    m = len(rows[0]) if rows else 0
    prev = 1
    rank_ = 0
    r = 0
    for c in range(m):
        pivot = None
        for i in range(r, n):
            if rows[i][c]:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(r + 1, n):
            for j in range(c + 1, m):
                rows[i][j] = (rows[r][c] * rows[i][j]
                              - rows[i][c] * rows[r][j]) // prev
            rows[i][c] = 0
        prev = rows[r][c]
        rank_ += 1
        r += 1
        if r == n:
            break
    return rank_
