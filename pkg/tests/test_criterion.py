import pytest

from flatcheck.criterion import (EngineConfig, Presentation, build_reduction,
                                 check_condition1, check_flat, describe_psi,
                                 verify_reduction)
from flatcheck.ringlinalg import (BlockDecomposition, SeriesMatrix, choose_block,
                                  make_ideal)
from flatcheck.series import Series, VarSplit, parse_series, random_series

from conftest import seeded

YX = VarSplit(1, 1, ("y",), ("x",))
Y2X = VarSplit(2, 1, ("y1", "y2"), ("x",))
CFG = EngineConfig(order=8, seed=0)


def s(text, split=YX):
    return parse_series(text, split)


def mat(rows, split=YX):
    return SeriesMatrix(split, [[s(t, split) for t in row] for row in rows])


def pres(rows, split=YX, label=""):
    return Presentation(split, mat(rows, split), label)


J0 = make_ideal([])
JY = make_ideal([parse_series("y", YX.base_only())])


# ---------------------------------------------------------------------------
# condition (1)


def test_condition1_diag_fails_over_zero():
    dec = choose_block(mat([["x", "0"], ["0", "y"]]), 8)
    report = check_condition1(dec, J0, 8)
    assert not report.passed
    i, j, verdict = report.first_failure()
    assert (i, j) == (0, 0)
    assert verdict.witness.coefficient.same_terms(parse_series("y", YX.base_only()))


def test_condition1_diag_passes_over_y():
    dec = choose_block(mat([["x", "0"], ["0", "y"]]), 8)
    assert check_condition1(dec, JY, 8).passed


def test_condition1_vacuous_at_full_row_rank():
    dec = choose_block(mat([["1", "y"]]), 8)
    report = check_condition1(dec, J0, 8)
    assert report.passed and not report.entries


# ---------------------------------------------------------------------------
# the reduction construction


def test_reduction_row_example():
    # alpha = [x], beta = [y]: T_1 = [y], G = [y] over the base alone
    dec = choose_block(mat([["x", "y"], ["0", "0"]]), 8)
    red = build_reduction(dec, CFG, 8)
    assert red.d == 1
    assert red.change.is_identity()
    base = YX.drop_last_fiber()
    assert red.t_blocks[0].entry(0, 0).same_terms(parse_series("y", base))
    assert red.g_matrix.rows == 1 and red.g_matrix.cols == 1
    assert red.g_matrix.entry(0, 0).same_terms(parse_series("y", base))
    assert red.effective_order is None
    assert verify_reduction(dec, red, 8)


def test_reduction_multiplication_matrix_degree_two():
    """Multiplication by x modulo g = x^2 - x*y on the basis x, 1:
    x.x = x^2 = y.x (mod P) and x.1 = x, read off by Euclid division."""
    phi = mat([["x^2 - x*y", "x"]])
    dec = BlockDecomposition(
        phi=phi, row_order=(0,), col_order=(0, 1), r=1,
        alpha=phi.submatrix((0,), (0,)), beta=phi.submatrix((0,), (1,)),
        gamma=phi.submatrix((), (0,)), delta=phi.submatrix((), (1,)),
        g=phi.entry(0, 0), adj=SeriesMatrix(YX, [[Series.one(YX)]]))
    red = build_reduction(dec, CFG, 8)
    assert red.d == 2
    base = YX.drop_last_fiber()
    # remainder of x under division by g is x itself: T_1 = [1], T_2 = [0]
    assert red.t_blocks[0].entry(0, 0).same_terms(Series.one(base))
    assert red.t_blocks[1].entry(0, 0).is_zero()
    expect = [["y", "1"], ["0", "0"]]
    for i in range(2):
        for j in range(2):
            assert red.g_matrix.entry(i, j).same_terms(parse_series(expect[i][j], base))
    assert verify_reduction(dec, red, 8)


def test_reduction_with_empty_beta():
    dec = choose_block(mat([["x^2 - y"]]), 8)
    red = build_reduction(dec, CFG, 8)
    assert red.d == 2
    assert red.g_matrix.rows == 2 and red.g_matrix.cols == 0
    assert verify_reduction(dec, red, 8)


def test_reduction_rejects_unit_g():
    dec = choose_block(mat([["1 + x", "y"]]), 8)
    with pytest.raises(Exception):
        build_reduction(dec, CFG, 8)


@pytest.mark.parametrize("seed", range(12))
def test_reduction_congruences_seeded(seed):
    rng = seeded(5100 + seed)
    q, p = rng.randint(1, 3), rng.randint(1, 3)
    phi = SeriesMatrix(YX, [[random_series(YX, rng, degree=2, terms=3)
                             for _ in range(p)] for _ in range(q)])
    dec = choose_block(phi, 8)
    if dec.r == 0 or dec.g_is_unit():
        return
    red = build_reduction(dec, CFG, 8)
    assert verify_reduction(dec, red, 8)


# ---------------------------------------------------------------------------
# the recursive engine


@pytest.mark.parametrize("rows,split,J,status,level", [
    ([["x*y"]], YX, J0, "not_flat", 0),
    ([["x*y"]], YX, JY, "flat", None),
    ([["x^2 - y"]], YX, J0, "flat", None),
    ([["x^2 - x*y"]], YX, J0, "flat", None),
    ([["x", "0"], ["0", "y"]], YX, J0, "not_flat", 0),
    ([["x", "y"], ["0", "0"]], YX, J0, "not_flat", 1),
    ([["y1*x - y2"]], Y2X, J0, "not_flat", 0),
])
def test_engine_corpus(rows, split, J, status, level):
    verdict = check_flat(pres(rows, split), J, CFG)
    assert verdict.status == status
    if status == "not_flat":
        assert verdict.witness is not None and verdict.witness.level == level
        assert not verdict.witness.coefficient.is_zero()
    else:
        assert verdict.certified_order == "exact"


def test_engine_row_example_recursion_detail():
    verdict = check_flat(pres([["x", "y"], ["0", "0"]]), J0, CFG)
    assert len(verdict.chain) == 2
    step0, step1 = verdict.chain
    assert step0.r == 1 and step0.fiber_dim == 1 and not step0.g_is_unit
    assert step0.reduction is not None and step0.reduction.d == 1
    assert step1.fiber_dim == 0
    assert verdict.witness.coefficient.same_terms(
        parse_series("y", YX.drop_last_fiber()))


def test_engine_maximal_ideal_always_flat():
    for seed in range(20):
        rng = seeded(600 + seed)
        split = YX if seed % 2 else Y2X
        maximal = make_ideal([parse_series(name, split.base_only())
                              for name in split.base_names])
        q, p = rng.randint(1, 3), rng.randint(1, 3)
        phi = SeriesMatrix(split, [[random_series(split, rng, degree=2, terms=3)
                                    for _ in range(p)] for _ in range(q)])
        verdict = check_flat(Presentation(split, phi), maximal, CFG)
        assert verdict.status == "flat", str(phi)


def test_monotone_stability_across_orders():
    cases = [
        (pres([["x*y"]]), J0, "not_flat"),
        (pres([["x", "0"], ["0", "y"]]), J0, "not_flat"),
        (pres([["x", "y"], ["0", "0"]]), J0, "not_flat"),
        (pres([["y1*x - y2"]], Y2X), J0, "not_flat"),
        (pres([["x^2 - y"]]), J0, "flat"),
        (pres([["x*y"]]), JY, "flat"),
    ]
    for presentation, J, expected in cases:
        for order in (4, 8, 12):
            verdict = check_flat(presentation, J, EngineConfig(order=order, seed=0))
            assert verdict.status == expected, (presentation.label, order)


def test_precision_exhaustion_is_inconclusive():
    verdict = check_flat(pres([["x^2 - x*y"]]), J0, EngineConfig(order=2, seed=0))
    assert verdict.status == "inconclusive"
    assert "order" in verdict.reason or "precision" in verdict.reason


def test_depth_limit_is_inconclusive():
    verdict = check_flat(pres([["x", "y"], ["0", "0"]]), J0,
                         EngineConfig(order=8, seed=0, max_depth=1))
    assert verdict.status == "inconclusive"
    assert "depth" in verdict.reason


def test_not_flat_witness_is_exact_nonzero_polynomial():
    verdict = check_flat(pres([["y1*x - y2"]], Y2X), J0, CFG)
    w = verdict.witness
    assert w is not None
    assert w.coefficient.exact and not w.coefficient.is_zero()


def test_condition1_pass_forces_rank_equality():
    """The minor form of condition (1) pins the ideal-level rank to the rank
    at the origin (up to the min{r >= 1} floor of the latter's definition)."""
    from flatcheck.ringlinalg import rank_at_origin, rank_mod_ideal
    base = YX.base_only()
    ideals = [J0, JY, make_ideal([parse_series("y - y^2", base)])]
    checked = 0
    for seed in range(30):
        rng = seeded(8800 + seed)
        q, p = rng.randint(1, 3), rng.randint(1, 3)
        phi = SeriesMatrix(YX, [[random_series(YX, rng, degree=2, terms=3)
                                 for _ in range(p)] for _ in range(q)])
        dec = choose_block(phi, 8)
        for J in ideals:
            if check_condition1(dec, J, 8).passed:
                r_m = rank_at_origin(phi, 8)
                assert rank_mod_ideal(phi, J, 8) == max(r_m, 1)
                checked += 1
    assert checked >= 10


# ---------------------------------------------------------------------------
# the textual psi certificate


def test_describe_psi_diag():
    dec = choose_block(mat([["x", "0"], ["0", "y"]]), 8)
    text = describe_psi(dec)
    assert "g = det(alpha) = x" in text
    assert "l = q - r = 1" in text


def test_describe_psi_r_zero():
    dec = choose_block(mat([["x*y"]]), 8)
    text = describe_psi(dec)
    assert "r = 0" in text
    assert "l = q - r = 1" in text


def test_describe_psi_full_rank():
    dec = choose_block(mat([["1", "y"]]), 8)
    text = describe_psi(dec)
    assert "l = q - r = 0" in text
    assert "vacuous" in text
