import random
from fractions import Fraction

import pytest

from flatcheck import linsolve


def random_system(rng, nrows, ncols, density=0.6):
    rows = []
    for _ in range(nrows):
        row = {}
        for c in range(ncols):
            if rng.random() < density:
                v = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                if v:
                    row[c] = v
        rows.append(row)
    return rows


def is_nullspace_basis(rows, ncols, basis):
    for v in basis:
        for row in rows:
            if sum(val * v[c] for c, val in row.items()):
                return False
    return True


@pytest.mark.parametrize("seed", range(25))
def test_backends_agree_on_nullspace(seed):
    rng = random.Random(seed)
    nrows, ncols = rng.randint(1, 12), rng.randint(1, 14)
    rows = random_system(rng, nrows, ncols)
    exact = linsolve.nullspace(rows, ncols, backend="exact")
    modular = linsolve._nullspace_modular(rows, ncols)
    assert modular is not None
    assert exact == modular
    assert is_nullspace_basis(rows, ncols, exact)
    # rank-nullity against the span of the rows
    red = linsolve.SpanReducer()
    for row in rows:
        red.add(dict(row))
    assert len(exact) == ncols - red.rank


@pytest.mark.parametrize("seed", range(25))
def test_backends_agree_on_solve(seed):
    rng = random.Random(seed)
    nrows, ncols = rng.randint(1, 10), rng.randint(1, 12)
    rows = random_system(rng, nrows, ncols)
    if rng.random() < 0.5:
        # consistent system: manufacture the rhs from a known solution
        x = [Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(ncols)]
        rhs = [sum(v * x[c] for c, v in row.items()) if row else Fraction(0)
               for row in rows]
    else:
        rhs = [Fraction(rng.randint(-3, 3)) for _ in range(nrows)]
    exact = linsolve.solve(rows, ncols, rhs, backend="exact")
    modular = linsolve._solve_modular(rows, ncols, rhs)
    if exact is None:
        assert modular is not None and modular[0] == "unsolvable"
    else:
        assert all(sum(v * exact[c] for c, v in row.items()) == b
                   for row, b in zip(rows, rhs))
        assert modular is not None and modular[0] == "solution"
        x = modular[1]
        assert all(sum(v * x[c] for c, v in row.items()) == b
                   for row, b in zip(rows, rhs))


def test_solve_certified_unsolvable():
    # x = 0 and x = 1 simultaneously
    rows = [{0: Fraction(1)}, {0: Fraction(1)}]
    rhs = [Fraction(0), Fraction(1)]
    assert linsolve.solve(rows, 1, rhs, backend="exact") is None
    out = linsolve._solve_modular(rows, 1, rhs)
    assert out is not None and out[0] == "unsolvable"


def test_rref_canonical_under_recombination():
    rng = random.Random(7)
    vectors = [[Fraction(rng.randint(-3, 3)) for _ in range(6)] for _ in range(4)]
    base = linsolve.rref_vectors(vectors)
    # random invertible recombination spans the same space
    for trial in range(5):
        mixed = []
        for _ in range(6):
            coefs = [Fraction(rng.randint(-2, 2)) for _ in vectors]
            mixed.append([sum(c * v[i] for c, v in zip(coefs, vectors))
                          for i in range(6)])
        mixed.extend(vectors)
        assert linsolve.rref_vectors(mixed) == base


def test_span_reducer_membership():
    red = linsolve.SpanReducer()
    red.add({0: Fraction(1), 2: Fraction(1)})
    red.add({1: Fraction(1)})
    assert red.contains({0: Fraction(2), 1: Fraction(3), 2: Fraction(2)})
    assert not red.contains({2: Fraction(1)})


def test_span_reducer_late_pivot_columns():
    # regression: reduction must clear pivot columns beyond the leading one
    red = linsolve.SpanReducer()
    red.add({5: Fraction(1)})
    red.add({2: Fraction(1), 5: Fraction(1)})
    row = red.pivots[2]
    assert 5 not in row
    assert red.contains({2: Fraction(3), 5: Fraction(3)})


def test_rational_reconstruction_round_trip():
    p_list = list(linsolve._PRIMES[:3])
    for num, den in [(0, 1), (1, 1), (-7, 3), (355, 113), (1234, 997)]:
        residues = [num * pow(den, -1, p) % p for p in p_list]
        a, m = linsolve._crt(residues, p_list)
        q = linsolve._rational_reconstruct(a, m)
        assert q == Fraction(num, den)


def test_modular_threshold_routes_large_systems():
    # a zero matrix large enough to trip the modular path: full nullspace
    ncols = 500
    rows = [dict() for _ in range(300)]
    basis = linsolve.nullspace(rows, ncols)
    assert len(basis) == ncols
    for j, vec in enumerate(basis):
        assert vec[j] == 1


def _plain_echelon_reference(mat, p):
    """Unblocked textbook elimination, the oracle for the panel-blocked one."""
    import numpy as np
    m = mat.copy()
    n, cc = m.shape
    r = 0
    pivs = []
    for col in range(cc):
        if r == n:
            break
        nz = np.nonzero(m[r:, col])[0]
        if nz.size == 0:
            continue
        j = r + int(nz[0])
        if j != r:
            m[[r, j]] = m[[j, r]]
        inv = pow(int(m[r, col]), p - 2, p)
        m[r, col:] = m[r, col:] * inv % p
        f = m[r + 1:, col].copy()
        nzr = np.nonzero(f)[0]
        if nzr.size:
            idx = nzr + r + 1
            m[idx, col:] = (m[idx, col:] - np.outer(f[nzr], m[r, col:])) % p
        pivs.append(col)
        r += 1
    return m, pivs


@pytest.mark.parametrize("seed", range(5))
def test_blocked_echelon_matches_reference_across_panels(seed):
    # wide enough that the blocked elimination crosses several pivot panels
    import numpy as np
    rng = random.Random(9100 + seed)
    nrows, ncols = 120 + 10 * seed, 150 + 7 * seed
    rows = random_system(rng, nrows, ncols, density=0.05)
    int_rows = linsolve._rows_to_int_matrix(rows, ncols)
    p = linsolve._PRIMES[seed % 3]
    mat = linsolve._dense_mod(int_rows, ncols, p)
    blocked, piv = linsolve._forward_echelon(mat.copy(), p)
    reference, piv_ref = _plain_echelon_reference(mat, p)
    assert piv == piv_ref
    assert np.array_equal(blocked, reference)


def test_blocked_echelon_respects_stop_col():
    import numpy as np
    rng = random.Random(77)
    rows = random_system(rng, 90, 110, density=0.08)
    rhs = [Fraction(rng.randint(-3, 3)) for _ in range(90)]
    int_rows = linsolve._rows_to_int_matrix(rows, 110, rhs)
    p = linsolve._PRIMES[0]
    mat = linsolve._dense_mod(int_rows, 111, p)
    blocked, piv = linsolve._forward_echelon(mat.copy(), p, stop_col=110)
    assert all(c < 110 for c in piv)
    # the rhs column must receive the same updates as in the reference
    reference = mat.copy()
    r = 0
    for col in range(110):
        if r == reference.shape[0]:
            break
        nz = np.nonzero(reference[r:, col])[0]
        if nz.size == 0:
            continue
        j = r + int(nz[0])
        if j != r:
            reference[[r, j]] = reference[[j, r]]
        inv = pow(int(reference[r, col]), p - 2, p)
        reference[r, col:] = reference[r, col:] * inv % p
        f = reference[r + 1:, col].copy()
        nzr = np.nonzero(f)[0]
        if nzr.size:
            idx = nzr + r + 1
            reference[idx, col:] = (reference[idx, col:]
                                    - np.outer(f[nzr], reference[r, col:])) % p
        r += 1
    assert np.array_equal(blocked, reference)


def test_modular_reconstruction_on_small_entry_system():
    """Tile many independent small systems along the diagonal: the combined
    system crosses the modular threshold and panel boundaries while its
    echelon entries stay reconstruction-sized, so the modular path must
    succeed end to end and agree with the exact one."""
    rng = random.Random(4242)
    rows = []
    ncols = 0
    for _ in range(45):
        block = random_system(rng, 8, 9, density=0.6)
        rows.extend({c + ncols: v for c, v in row.items()} for row in block)
        ncols += 9
    exact = linsolve.nullspace(rows, ncols, backend="exact")
    modular = linsolve._nullspace_modular(rows, ncols)
    assert modular is not None
    assert modular == exact
    assert is_nullspace_basis(rows, ncols, modular)


def test_modular_unsolvable_certificate_at_scale():
    """A tiled system above the modular threshold with one planted
    inconsistency: the certificate (a row combination u with u.A = 0 and
    u.b != 0) must be found and verified exactly."""
    rng = random.Random(1717)
    rows = []
    rhs = []
    ncols = 0
    for _ in range(45):
        block = random_system(rng, 8, 9, density=0.6)
        for row in block:
            rows.append({c + ncols: v for c, v in row.items()})
            rhs.append(sum(row.values(), Fraction(0)))  # consistent: x = all ones
        ncols += 9
    rows.append({0: Fraction(1)})
    rows.append({0: Fraction(1)})
    rhs.extend([Fraction(0), Fraction(1)])
    out = linsolve._solve_modular(rows, ncols, rhs)
    assert out is not None and out[0] == "unsolvable"
    assert linsolve.solve(rows, ncols, rhs) is None


def test_modular_falls_back_when_entries_outgrow_the_ladder():
    """A dense-rank random system has echelon entries with hundreds of
    digits; the prime ladder cannot reconstruct them, the internal modular
    routine reports failure, and the public entry point stays correct by
    falling back."""
    rng = random.Random(9100)
    rows = random_system(rng, 150, 170, density=0.05)
    assert linsolve._nullspace_modular(rows, 170) is None
    basis = linsolve.nullspace(rows, 170)
    assert is_nullspace_basis(rows, 170, basis)
    red = linsolve.SpanReducer()
    for row in rows:
        red.add(dict(row))
    assert len(basis) == 170 - red.rank
