"""Exact integer linear algebra and homology of chain complexes over Z.

Everything here runs on Python's arbitrary-precision integers.  Normal-form
pivoting can blow intermediate entries well past machine range even for small
matrices, and a silent wraparound would corrupt torsion coefficients, so no
fixed-width arithmetic is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Mapping, Sequence


class DimensionMismatch(ValueError):
    """Matrix shapes are incompatible for the requested operation."""


class CompositionNotZero(ValueError):
    """The two maps handed to homology_at do not compose to zero."""


class TorsionUnsupported(ValueError):
    """graded_tensor only accepts torsion-free graded groups."""


class SparseIntMatrix:
    """Sparse matrix over Z, immutable after construction.

    Entries are stored as a map (row, col) -> value with no explicit zeros.
    All operations return fresh matrices.
    """

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, entries=None):
        if rows < 0 or cols < 0:
            raise DimensionMismatch(f"negative shape ({rows}, {cols})")
        self.rows = rows
        self.cols = cols
        data: dict[tuple[int, int], int] = {}
        if entries:
            items: Iterable
            if isinstance(entries, Mapping):
                items = ((i, j, v) for (i, j), v in entries.items())
            else:
                items = entries
            for i, j, v in items:
                v = int(v)
                if v == 0:
                    continue
                if not (0 <= i < rows and 0 <= j < cols):
                    raise DimensionMismatch(
                        f"entry ({i}, {j}) outside {rows} x {cols}")
                data[(i, j)] = data.get((i, j), 0) + v
                if data[(i, j)] == 0:
                    del data[(i, j)]
        self._data = data

    @classmethod
    def from_dense(cls, rows_list: Sequence[Sequence[int]]) -> "SparseIntMatrix":
        m = len(rows_list)
        n = len(rows_list[0]) if m else 0
        entries = [(i, j, v) for i, row in enumerate(rows_list)
                   for j, v in enumerate(row) if v]
        return cls(m, n, entries)

    @classmethod
    def identity(cls, n: int) -> "SparseIntMatrix":
        return cls(n, n, [(i, i, 1) for i in range(n)])

    @classmethod
    def zero(cls, rows: int, cols: int) -> "SparseIntMatrix":
        return cls(rows, cols)

    def entry(self, i: int, j: int) -> int:
        return self._data.get((i, j), 0)

    def items(self):
        return self._data.items()

    @property
    def nnz(self) -> int:
        return len(self._data)

    def is_zero(self) -> bool:
        return not self._data

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self._data.items():
            out[i][j] = v
        return out

    def columns(self) -> list[dict[int, int]]:
        cols: list[dict[int, int]] = [dict() for _ in range(self.cols)]
        for (i, j), v in self._data.items():
            cols[j][i] = v
        return cols

    def transpose(self) -> "SparseIntMatrix":
        return SparseIntMatrix(
            self.cols, self.rows,
            [(j, i, v) for (i, j), v in self._data.items()])

    def __matmul__(self, other: "SparseIntMatrix") -> "SparseIntMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(
                f"cannot multiply {self.rows}x{self.cols} by "
                f"{other.rows}x{other.cols}")
        rows_of_other: dict[int, list[tuple[int, int]]] = {}
        for (k, j), v in other._data.items():
            rows_of_other.setdefault(k, []).append((j, v))
        acc: dict[tuple[int, int], int] = {}
        for (i, k), a in self._data.items():
            for j, b in rows_of_other.get(k, ()):
                key = (i, j)
                acc[key] = acc.get(key, 0) + a * b
        return SparseIntMatrix(self.rows, other.cols, acc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseIntMatrix):
            return NotImplemented
        return (self.rows, self.cols, self._data) == \
               (other.rows, other.cols, other._data)

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self._data.items())))

    def __repr__(self):
        return f"SparseIntMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

def _argmin_abs(a, m, n, t):
    """Smallest nonzero |a[i][j]| with i, j >= t; None if that block is zero."""
    best = None
    best_val = 0
    for i in range(t, m):
        row = a[i]
        for j in range(t, n):
            v = row[j]
            if v:
                av = abs(v)
                if best is None or av < best_val:
                    best = (i, j)
                    best_val = av
                    if av == 1:
                        return best
    return best


class _Tracked:
    """Dense working copy of a matrix with optional U / V / V^-1 trackers.

    Row operations act on U from the left, column operations on V from the
    right; vinv receives the inverse row operation of every column operation
    so that vinv stays the exact inverse of V throughout.
    """

    def __init__(self, mat: SparseIntMatrix, want_u: bool, want_v: bool,
                 want_vinv: bool):
        self.m = mat.rows
        self.n = mat.cols
        self.a = mat.to_dense()
        eye = lambda k: [[1 if i == j else 0 for j in range(k)] for i in range(k)]
        self.u = eye(self.m) if want_u else None
        self.v = eye(self.n) if want_v else None
        self.vinv = eye(self.n) if want_vinv else None

    def swap_rows(self, p, q):
        if p == q:
            return
        self.a[p], self.a[q] = self.a[q], self.a[p]
        if self.u is not None:
            self.u[p], self.u[q] = self.u[q], self.u[p]

    def swap_cols(self, p, q):
        if p == q:
            return
        for row in self.a:
            row[p], row[q] = row[q], row[p]
        if self.v is not None:
            for row in self.v:
                row[p], row[q] = row[q], row[p]
        if self.vinv is not None:
            self.vinv[p], self.vinv[q] = self.vinv[q], self.vinv[p]

    def add_row(self, dst, src, k):
        # row dst += k * row src
        if k == 0:
            return
        rd, rs = self.a[dst], self.a[src]
        for j in range(self.n):
            if rs[j]:
                rd[j] += k * rs[j]
        if self.u is not None:
            ud, us = self.u[dst], self.u[src]
            for j in range(self.m):
                if us[j]:
                    ud[j] += k * us[j]

    def add_col(self, dst, src, k):
        # col dst += k * col src
        if k == 0:
            return
        for row in self.a:
            if row[src]:
                row[dst] += k * row[src]
        if self.v is not None:
            for row in self.v:
                if row[src]:
                    row[dst] += k * row[src]
        if self.vinv is not None:
            # inverse operation on the left: row src -= k * row dst
            rs, rd = self.vinv[src], self.vinv[dst]
            for j in range(self.n):
                if rd[j]:
                    rs[j] -= k * rd[j]

    def negate_row(self, p):
        self.a[p] = [-x for x in self.a[p]]
        if self.u is not None:
            self.u[p] = [-x for x in self.u[p]]


def _smithify(w: _Tracked) -> int:
    """Reduce w.a to Smith form in place; returns the number of nonzero
    invariant factors.  Pivots are chosen by smallest nonzero absolute value,
    with full row/column sweeps and the usual divisibility repair step.
    """
    a, m, n = w.a, w.m, w.n
    t = 0
    while t < min(m, n):
        pos = _argmin_abs(a, m, n, t)
        if pos is None:
            break
        w.swap_rows(t, pos[0])
        w.swap_cols(t, pos[1])
        while True:
            # clear column t
            moved = False
            for i in range(t + 1, m):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    w.add_row(i, t, -q)
                    if a[i][t]:
                        # remainder is strictly smaller; adopt it as pivot
                        w.swap_rows(t, i)
                        moved = True
                        break
            if moved:
                continue
            # clear row t
            for j in range(t + 1, n):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    w.add_col(j, t, -q)
                    if a[t][j]:
                        w.swap_cols(t, j)
                        moved = True
                        break
            if moved:
                continue
            break
        # divisibility repair: pivot must divide every remaining entry
        piv = a[t][t]
        offender = None
        for i in range(t + 1, m):
            row = a[i]
            for j in range(t + 1, n):
                if row[j] % piv:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            w.add_row(t, offender, 1)
            continue
        if a[t][t] < 0:
            w.negate_row(t)
        t += 1
    return t


def smith_normal_form(A: SparseIntMatrix):
    """Smith normal form of A.

    Returns (U, S, V) with U * A * V == S, U and V unimodular, and S diagonal
    with nonnegative entries satisfying d1 | d2 | ... .
    """
    w = _Tracked(A, want_u=True, want_v=True, want_vinv=False)
    _smithify(w)
    S = SparseIntMatrix.from_dense(w.a) if w.a else SparseIntMatrix(0, A.cols)
    U = SparseIntMatrix.from_dense(w.u) if w.u else SparseIntMatrix(0, 0)
    if A.cols:
        V = SparseIntMatrix.from_dense(w.v)
    else:
        V = SparseIntMatrix(0, 0)
    if A.rows == 0:
        S = SparseIntMatrix(0, A.cols)
        U = SparseIntMatrix(0, 0)
    return U, S, V


def invariant_factors(A: SparseIntMatrix) -> list[int]:
    """Nonzero invariant factors of A, in divisibility order."""
    w = _Tracked(A, want_u=False, want_v=False, want_vinv=False)
    t = _smithify(w)
    return [w.a[i][i] for i in range(t)]


def determinant(A: SparseIntMatrix) -> int:
    """Exact determinant via fraction-free (Bareiss) elimination."""
    if A.rows != A.cols:
        raise DimensionMismatch("determinant of non-square matrix")
    n = A.rows
    if n == 0:
        return 1
    a = A.to_dense()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def column_rank(A: SparseIntMatrix) -> int:
    """Rank of A over Q, by sparse exact elimination.

    Rows may be rescaled by nonzero integers during elimination (rank is
    unaffected); entries are re-reduced by their gcd to control growth.
    """
    rows: dict[int, dict[int, int]] = {}
    for (i, j), v in A.items():
        rows.setdefault(i, {})[j] = v
    col_index: dict[int, set[int]] = {}
    for i, row in rows.items():
        for j in row:
            col_index.setdefault(j, set()).add(i)
    rank = 0
    while rows:
        # pivot: smallest |value|, then least fill
        best = None
        for i, row in rows.items():
            for j, v in row.items():
                key = (abs(v), len(row) * len(col_index[j]))
                if best is None or key < best[0]:
                    best = (key, i, j)
            if best is not None and best[0][0] == 1 and best[0][1] <= 4:
                break
        _, pi, pj = best
        piv_row = rows.pop(pi)
        piv = piv_row[pj]
        for j in piv_row:
            col_index[j].discard(pi)
        for i in list(col_index.get(pj, ())):
            row = rows[i]
            v = row[pj]
            if v % piv == 0:
                f = v // piv
                for j, pv in piv_row.items():
                    nv = row.get(j, 0) - f * pv
                    if nv:
                        row[j] = nv
                        col_index.setdefault(j, set()).add(i)
                    elif j in row:
                        del row[j]
                        col_index[j].discard(i)
            else:
                for j in list(row):
                    row[j] *= piv
                for j, pv in piv_row.items():
                    nv = row.get(j, 0) - v * pv
                    if nv:
                        row[j] = nv
                        col_index.setdefault(j, set()).add(i)
                    elif j in row:
                        del row[j]
                        col_index[j].discard(i)
                g = 0
                for val in row.values():
                    g = gcd(g, val)
                if g > 1:
                    for j in row:
                        row[j] //= g
            if not row:
                del rows[i]
        col_index.pop(pj, None)
        rank += 1
    return rank


def kernel_basis(A: SparseIntMatrix) -> list[tuple[int, ...]]:
    """Integer basis of ker(A) as length-cols tuples."""
    if A.cols == 0:
        return []
    w = _Tracked(A, want_u=False, want_v=True, want_vinv=False)
    t = _smithify(w)
    out = []
    for j in range(t, A.cols):
        out.append(tuple(w.v[i][j] for i in range(A.cols)))
    return out


def homology_at(d_out: SparseIntMatrix,
                d_in: SparseIntMatrix | None) -> "FGAbelianGroup":
    """ker(d_out) / im(d_in) in canonical form.

    d_out maps the middle group outward, d_in maps into it; d_out * d_in must
    be zero.  Passing d_in=None means the incoming map is zero.
    """
    n = d_out.cols
    if d_in is None:
        d_in = SparseIntMatrix.zero(n, 0)
    if d_in.rows != n:
        raise DimensionMismatch(
            f"d_out has {n} columns but d_in has {d_in.rows} rows")
    if not (d_out @ d_in).is_zero():
        raise CompositionNotZero("d_out * d_in != 0")
    if n == 0:
        return FGAbelianGroup(0)
    if d_in.is_zero():
        return FGAbelianGroup(n - column_rank(d_out))
    w = _Tracked(d_out, want_u=False, want_v=True, want_vinv=True)
    t = _smithify(w)
    k = n - t
    if k == 0:
        return FGAbelianGroup(0)
    # coordinates of im(d_in) in the kernel basis: rows t..n-1 of vinv * d_in
    tail = w.vinv[t:]
    cols = d_in.columns()
    entries = []
    for cj, col in enumerate(cols):
        for ri, vrow in enumerate(tail):
            s = 0
            for i, v in col.items():
                if vrow[i]:
                    s += vrow[i] * v
            if s:
                entries.append((ri, cj, s))
    M = SparseIntMatrix(k, d_in.cols, entries)
    facs = invariant_factors(M)
    return FGAbelianGroup.from_cyclic(k - len(facs),
                                      [f for f in facs if f > 1])


# ---------------------------------------------------------------------------
# Finitely generated abelian groups
# ---------------------------------------------------------------------------

def _factorint(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _canonical_torsion(orders: Iterable[int]) -> tuple[int, ...]:
    """Recombine cyclic orders into invariant factors d1 | d2 | ..."""
    by_prime: dict[int, list[int]] = {}
    for d in orders:
        d = abs(int(d))
        if d <= 1:
            continue
        for p, e in _factorint(d).items():
            by_prime.setdefault(p, []).append(e)
    if not by_prime:
        return ()
    for exps in by_prime.values():
        exps.sort(reverse=True)
    width = max(len(v) for v in by_prime.values())
    factors = []
    for slot in range(width):
        f = 1
        for p, exps in by_prime.items():
            if slot < len(exps):
                f *= p ** exps[slot]
        factors.append(f)
    factors.reverse()  # ascending divisibility: d1 | d2 | ...
    return tuple(factors)


@dataclass(frozen=True)
class FGAbelianGroup:
    """Finitely generated abelian group: free rank plus invariant factors.

    The torsion tuple is canonical, each entry > 1 and dividing the next.
    """

    rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("negative rank")
        object.__setattr__(self, "torsion", tuple(int(t) for t in self.torsion))
        prev = 1
        for t in self.torsion:
            if t <= 1 or t % prev:
                raise ValueError(f"torsion {self.torsion} is not a "
                                 "divisibility chain of entries > 1")
            prev = t

    @classmethod
    def from_cyclic(cls, rank: int, orders: Iterable[int] = ()) -> "FGAbelianGroup":
        extra = 0
        pool = []
        for d in orders:
            if d == 0:
                extra += 1
            else:
                pool.append(d)
        return cls(rank + extra, _canonical_torsion(pool))

    @property
    def is_trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    def direct_sum(self, *others: "FGAbelianGroup") -> "FGAbelianGroup":
        rank = self.rank + sum(g.rank for g in others)
        orders = list(self.torsion)
        for g in others:
            orders.extend(g.torsion)
        return FGAbelianGroup.from_cyclic(rank, orders)

    def __str__(self):
        parts = []
        if self.rank == 1:
            parts.append("Z")
        elif self.rank > 1:
            parts.append(f"Z^{self.rank}")
        parts.extend(f"Z/{t}" for t in self.torsion)
        return " + ".join(parts) if parts else "0"


class GradedGroup:
    """Graded stack of FGAbelianGroups indexed by degree, trailing zeros trimmed."""

    __slots__ = ("groups",)

    def __init__(self, groups: Iterable[FGAbelianGroup]):
        gs = list(groups)
        while gs and gs[-1].is_trivial:
            gs.pop()
        self.groups = tuple(gs)

    @classmethod
    def free(cls, ranks: Iterable[int]) -> "GradedGroup":
        return cls([FGAbelianGroup(r) for r in ranks])

    def at(self, degree: int) -> FGAbelianGroup:
        if 0 <= degree < len(self.groups):
            return self.groups[degree]
        return FGAbelianGroup(0)

    @property
    def top(self) -> int:
        return len(self.groups) - 1

    def ranks(self) -> tuple[int, ...]:
        return tuple(g.rank for g in self.groups)

    def has_torsion(self) -> bool:
        return any(g.torsion for g in self.groups)

    def __eq__(self, other):
        if not isinstance(other, GradedGroup):
            return NotImplemented
        return self.groups == other.groups

    def __hash__(self):
        return hash(self.groups)

    def __repr__(self):
        return "GradedGroup(" + ", ".join(str(g) for g in self.groups) + ")"


def graded_tensor(A: GradedGroup, B: GradedGroup) -> GradedGroup:
    """Degreewise tensor of torsion-free graded groups.

    rank of degree n is sum_i rank(A_i) * rank(B_{n-i}).  Torsion on either
    side is rejected rather than dropped.
    """
    if A.has_torsion() or B.has_torsion():
        raise TorsionUnsupported("graded_tensor requires torsion-free inputs")
    if not A.groups or not B.groups:
        return GradedGroup([])
    ra, rb = A.ranks(), B.ranks()
    out = [0] * (len(ra) + len(rb) - 1)
    for i, x in enumerate(ra):
        for j, y in enumerate(rb):
            out[i + j] += x * y
    return GradedGroup.free(out)


def chain_complex_homology(dims: Sequence[int],
                           boundaries: Sequence[SparseIntMatrix]) -> GradedGroup:
    """Homology of a complex of free groups.

    dims[i] is the rank of the degree-i chain group; boundaries[i] maps
    degree i+1 to degree i and must match those shapes.
    """
    if len(boundaries) != max(len(dims) - 1, 0):
        raise DimensionMismatch("need exactly len(dims)-1 boundary maps")
    for i, b in enumerate(boundaries):
        if b.rows != dims[i] or b.cols != dims[i + 1]:
            raise DimensionMismatch(
                f"boundary {i} is {b.rows}x{b.cols}, expected "
                f"{dims[i]}x{dims[i + 1]}")
    out = []
    for i, dim in enumerate(dims):
        d_out = SparseIntMatrix.zero(0, dim) if i == 0 else boundaries[i - 1]
        d_in = boundaries[i] if i < len(boundaries) else None
        out.append(homology_at(d_out, d_in))
    return GradedGroup(out)
