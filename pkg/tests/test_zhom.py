import random
from fractions import Fraction

import pytest

from morseflow.zhom import (CompositionNotZero, DimensionMismatch,
                            FGAbelianGroup, GradedGroup, SparseIntMatrix,
                            TorsionUnsupported, chain_complex_homology,
                            column_rank, determinant, graded_tensor,
                            homology_at, kernel_basis, smith_normal_form)

Z = FGAbelianGroup(1)
ZERO = FGAbelianGroup(0)


# ---------------------------------------------------------------------------
# Independent oracles (fraction arithmetic, no shared code with the library)
# ---------------------------------------------------------------------------

def rank_oracle(dense) -> int:
    """Gaussian elimination over Q."""
    a = [[Fraction(v) for v in row] for row in dense]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    rank = 0
    pr = 0
    for c in range(cols):
        piv = next((i for i in range(pr, rows) if a[i][c]), None)
        if piv is None:
            continue
        a[pr], a[piv] = a[piv], a[pr]
        for i in range(rows):
            if i != pr and a[i][c]:
                f = a[i][c] / a[pr][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[pr])]
        pr += 1
        rank += 1
    return rank


def det_oracle(dense) -> Fraction:
    a = [[Fraction(v) for v in row] for row in dense]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def random_matrix(rng, max_dim=8, lo=-9, hi=9):
    m = rng.randint(1, max_dim)
    n = rng.randint(1, max_dim)
    return [[rng.randint(lo, hi) for _ in range(n)] for _ in range(m)]


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

def test_snf_identity():
    A = SparseIntMatrix.identity(2)
    U, S, V = smith_normal_form(A)
    assert S == A and U == A and V == A


def test_snf_small_example():
    # invariant factors of [[2,4],[6,8]]: gcd of entries is 2 and |det| = 8,
    # so the factors are 2 and 4; cross-checked by the rank oracle
    A = SparseIntMatrix.from_dense([[2, 4], [6, 8]])
    U, S, V = smith_normal_form(A)
    assert S.to_dense() == [[2, 0], [0, 4]]
    assert (U @ A) @ V == S
    assert rank_oracle(A.to_dense()) == 2


def test_snf_zero_matrix():
    A = SparseIntMatrix.zero(3, 2)
    U, S, V = smith_normal_form(A)
    assert S.is_zero() and S.rows == 3 and S.cols == 2
    assert U == SparseIntMatrix.identity(3)
    assert V == SparseIntMatrix.identity(2)


def test_snf_random_properties():
    rng = random.Random(20240811)
    for _ in range(150):
        dense = random_matrix(rng)
        A = SparseIntMatrix.from_dense(dense)
        U, S, V = smith_normal_form(A)
        assert (U @ A) @ V == S
        assert abs(det_oracle(U.to_dense())) == 1
        assert abs(det_oracle(V.to_dense())) == 1
        diag = [S.entry(i, i) for i in range(min(S.rows, S.cols))]
        off_diag = [v for (i, j), v in S.items() if i != j]
        assert not off_diag
        nonzero = [d for d in diag if d]
        assert all(d > 0 for d in nonzero)
        for a, b in zip(nonzero, nonzero[1:]):
            assert b % a == 0
        assert diag[:len(nonzero)] == nonzero  # zeros trail
        assert len(nonzero) == rank_oracle(dense)
        assert column_rank(A) == len(nonzero)
        assert determinant(U) in (1, -1)


def test_kernel_basis_spans_kernel():
    rng = random.Random(7)
    for _ in range(40):
        dense = random_matrix(rng, max_dim=6)
        A = SparseIntMatrix.from_dense(dense)
        basis = kernel_basis(A)
        assert len(basis) == A.cols - rank_oracle(dense)
        for vec in basis:
            img = [sum(dense[i][j] * vec[j] for j in range(A.cols))
                   for i in range(A.rows)]
            assert all(v == 0 for v in img)


# ---------------------------------------------------------------------------
# homology_at
# ---------------------------------------------------------------------------

def boundary_circle(n):
    """Boundary map of the n-gon: edges (i, i+1) to vertices."""
    entries = []
    for e in range(n):
        entries.append((e, e, -1))
        entries.append(((e + 1) % n, e, 1))
    return SparseIntMatrix(n, n, entries)


def test_homology_circle_middle_degree():
    d1 = boundary_circle(3)
    assert homology_at(d1, None) == Z


def test_homology_explicit_torsion():
    d_out = SparseIntMatrix.zero(0, 1)
    d_in = SparseIntMatrix.from_dense([[2]])
    assert homology_at(d_out, d_in) == FGAbelianGroup(0, (2,))


TORUS7 = [(i % 7, (i + 1) % 7, (i + 3) % 7) for i in range(7)] + \
         [(i % 7, (i + 2) % 7, (i + 3) % 7) for i in range(7)]


def test_homology_seven_vertex_torus():
    from morseflow.flowcat import simplicial_boundaries
    dims, bnd = simplicial_boundaries(TORUS7)
    assert dims == [7, 21, 14]
    h = chain_complex_homology(dims, bnd)
    assert h.groups == (Z, FGAbelianGroup(2), Z)
    # rank-nullity cross-check for the middle degree with the oracle
    r1 = rank_oracle(bnd[0].to_dense())
    r2 = rank_oracle(bnd[1].to_dense())
    assert (21 - r1) - r2 == 2


def test_homology_rejects_bad_composition():
    d_out = SparseIntMatrix.from_dense([[1, 0], [0, 1]])
    d_in = SparseIntMatrix.from_dense([[1], [0]])
    with pytest.raises(CompositionNotZero):
        homology_at(d_out, d_in)


def test_homology_rejects_shape_mismatch():
    d_out = SparseIntMatrix.zero(2, 3)
    d_in = SparseIntMatrix.zero(4, 1)
    with pytest.raises(DimensionMismatch):
        homology_at(d_out, d_in)


def _unimodular(rng, n):
    """Random unimodular matrix with its exact inverse."""
    m = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    inv = [row[:] for row in m]
    for _ in range(3 * n):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        k = rng.randint(-2, 2)
        # left-multiplying by (row i += k row j) means the tracked inverse
        # picks up the inverse operation on the right: col j -= k col i
        for c in range(n):
            m[i][c] += k * m[j][c]
        for r in range(n):
            inv[r][j] -= k * inv[r][i]
    return SparseIntMatrix.from_dense(m), SparseIntMatrix.from_dense(inv)


def test_homology_invariant_under_basis_change():
    rng = random.Random(99)
    d_out = boundary_circle(4)
    d_in = SparseIntMatrix.from_dense([[1], [1], [1], [1]])
    assert (d_out @ d_in).is_zero()
    base = homology_at(d_out, d_in)
    for _ in range(10):
        U, _ = _unimodular(rng, 4)
        W, Winv = _unimodular(rng, 4)
        changed = homology_at((U @ d_out) @ W, Winv @ d_in)
        assert changed == base


# ---------------------------------------------------------------------------
# Graded groups and tensor
# ---------------------------------------------------------------------------

def test_group_canonicalization():
    assert FGAbelianGroup.from_cyclic(0, [2, 3]) == FGAbelianGroup(0, (6,))
    assert FGAbelianGroup.from_cyclic(1, [4, 6]) == FGAbelianGroup(1, (2, 12))
    assert FGAbelianGroup.from_cyclic(0, [0, 0, 5]).rank == 2
    with pytest.raises(ValueError):
        FGAbelianGroup(1, (4, 6))  # 4 does not divide 6
    with pytest.raises(ValueError):
        FGAbelianGroup(-1)


def test_graded_tensor_circle_squared():
    circle = GradedGroup([Z, Z])
    assert graded_tensor(circle, circle) == \
        GradedGroup([Z, FGAbelianGroup(2), Z])


def test_graded_tensor_unit():
    point = GradedGroup([Z])
    x = GradedGroup([Z, FGAbelianGroup(3), ZERO, Z])
    assert graded_tensor(point, x) == x
    assert graded_tensor(x, point) == x


def test_graded_tensor_sphere_times_circle():
    sphere = GradedGroup([Z, ZERO, Z])
    circle = GradedGroup([Z, Z])
    assert graded_tensor(sphere, circle) == GradedGroup([Z, Z, Z, Z])


def test_graded_tensor_rejects_torsion():
    torsioned = GradedGroup([Z, FGAbelianGroup(0, (2,))])
    with pytest.raises(TorsionUnsupported):
        graded_tensor(torsioned, GradedGroup([Z]))


def test_graded_tensor_associative_commutative_ranks():
    rng = random.Random(5)
    for _ in range(20):
        gs = [GradedGroup.free([rng.randint(0, 3) for _ in range(rng.randint(1, 4))])
              for _ in range(3)]
        a, b, c = gs
        assert graded_tensor(a, b).ranks() == graded_tensor(b, a).ranks()
        left = graded_tensor(graded_tensor(a, b), c)
        right = graded_tensor(a, graded_tensor(b, c))
        assert left.ranks() == right.ranks()


def test_sparse_matrix_invariants():
    m = SparseIntMatrix(2, 2, [(0, 0, 1), (0, 0, -1), (1, 1, 3)])
    assert m.nnz == 1  # cancelling entries are not stored
    with pytest.raises(DimensionMismatch):
        SparseIntMatrix(1, 1, [(2, 0, 1)])
    a = SparseIntMatrix.from_dense([[1, 2], [3, 4]])
    b = SparseIntMatrix.from_dense([[0, 1], [1, 0]])
    assert (a @ b).to_dense() == [[2, 1], [4, 3]]


def test_degenerate_shapes():
    for rows, cols in ((0, 0), (0, 3), (3, 0)):
        A = SparseIntMatrix.zero(rows, cols)
        U, S, V = smith_normal_form(A)
        assert S.rows == rows and S.cols == cols
        assert len(kernel_basis(A)) == cols
        assert column_rank(A) == 0
    assert homology_at(SparseIntMatrix.zero(0, 0), None).is_trivial


def test_snf_larger_entries_smoke():
    rng = random.Random(314159)
    dense = [[rng.randint(-99, 99) for _ in range(12)] for _ in range(12)]
    A = SparseIntMatrix.from_dense(dense)
    U, S, V = smith_normal_form(A)
    assert (U @ A) @ V == S
    nonzero = [S.entry(i, i) for i in range(12) if S.entry(i, i)]
    for a, b in zip(nonzero, nonzero[1:]):
        assert b % a == 0
    assert len(nonzero) == rank_oracle(dense)
