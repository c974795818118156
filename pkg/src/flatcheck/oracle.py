"""Independent flatness test through jet-level kernels.

Flatness of coker(phi) (x) R/J over R/J is equivalent to the evaluated
kernel equality (ker_J phi)(0) = ker(phi_m).  This module realizes both
sides as solution spaces of rational linear systems on polynomial jets of
bounded degree and compares their spans.  It deliberately avoids the
Weierstrass machinery of the engine so its failure modes are independent.

Jet kernels of injective maps contain spurious top-degree solutions (x.z = 0
modulo degree > N admits z concentrated in degree N), so spans are compared
only through an interior window N - guard, guard = the maximal entry degree;
the discarded band is recorded on the verdict.

The evaluated J-kernel is always contained in the origin kernel; that
containment is asserted on every run, and a strict gap is returned as a
not-flat verdict with the unmatched kernel vector as witness.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from . import linsolve
from .criterion import EngineConfig, FlatnessVerdict, Presentation, check_flat
from .ringlinalg import (BlockDecomposition, Ideal, SeriesMatrix, ideal_contains,
                         rank_at_origin, rank_mod_ideal, reduced_complement)
from .series import Series, VarSplit, monomials_upto

__all__ = [
    "JetKernel",
    "ProjectionView",
    "OracleVerdict",
    "ProjectionLemmaReport",
    "CrossValidation",
    "jet_kernel_at_origin",
    "jet_kernel_mod_J",
    "direct_flatness_test",
    "check_projection_lemma",
    "cross_validate",
]


class OracleInternalError(AssertionError):
    """A structural invariant of the oracle failed (reported as exit 3)."""


@dataclass(frozen=True)
class JetKernel:
    """A basis (reduced echelon over Q) of a jet-level kernel space.

    Vectors are tuples of Series of length p; the coordinate order used for
    echelonization is (component, graded monomial).
    """

    split: VarSplit
    order: int
    width: int
    basis: tuple[tuple[Series, ...], ...]

    def dimension(self) -> int:
        return len(self.basis)

    def evaluate_base_origin(self) -> "JetKernel":
        vecs = tuple(tuple(s.evaluate_base_origin() for s in vec) for vec in self.basis)
        return JetKernel(split=self.split.fiber_only(), order=self.order,
                         width=self.width, basis=vecs)

    def coefficient_rows(self, degree: int) -> list[list[Fraction]]:
        """Dense coefficient vectors truncated to the given total degree."""
        mons = monomials_upto(self.split.nvars, degree)
        index = {e: i for i, e in enumerate(mons)}
        rows = []
        for vec in self.basis:
            row = [Fraction(0)] * (self.width * len(mons))
            for j, s in enumerate(vec):
                for e, c in s.terms.items():
                    if sum(e) <= degree:
                        row[j * len(mons) + index[e]] = c
            rows.append(row)
        return rows


@dataclass(frozen=True)
class ProjectionView:
    """Components of kernel vectors selected by a block decomposition:
    'first' takes the alpha columns, 'second' the complementary ones."""

    which: str
    kernel: JetKernel
    columns: tuple[int, ...]

    @staticmethod
    def of(kernel: JetKernel, dec: BlockDecomposition, which: str) -> "ProjectionView":
        r = dec.r
        cols = dec.col_order[:r] if which == "first" else dec.col_order[r:]
        return ProjectionView(which=which, kernel=kernel, columns=cols)

    def vectors(self) -> list[tuple[Series, ...]]:
        return [tuple(vec[c] for c in self.columns) for vec in self.kernel.basis]


def _mon_index(nvars: int, order: int) -> tuple[tuple, dict]:
    mons = monomials_upto(nvars, order)
    return mons, {e: i for i, e in enumerate(mons)}


def _vectors_from_nullspace(null: list[list[Fraction]], split: VarSplit, order: int,
                            width: int) -> tuple[tuple[Series, ...], ...]:
    mons, _ = _mon_index(split.nvars, order)
    per = len(mons)
    out = []
    for vec in null:
        comps = []
        for j in range(width):
            terms = {mons[k]: vec[j * per + k] for k in range(per) if vec[j * per + k]}
            comps.append(Series(split, terms, order))
        out.append(tuple(comps))
    return tuple(out)


def jet_kernel_at_origin(phi: SeriesMatrix, order: int,
                         backend: str = "auto") -> JetKernel:
    """Solutions of phi(0, x).z(x) = 0 modulo total degree > order, for
    polynomial jet vectors z of degree <= order, echelonized over Q."""
    phi0 = phi.evaluate_base_origin()
    split = phi0.split
    q, p = phi0.rows, phi0.cols
    mons, index = _mon_index(split.nvars, order)
    per = len(mons)
    rows: dict[tuple[int, tuple], dict[int, Fraction]] = {}
    for i in range(q):
        for j in range(p):
            entry = phi0.entries[i][j]
            for e, c in entry.terms.items():
                de = sum(e)
                for k, mu in enumerate(mons):
                    if sum(mu) + de > order:
                        continue
                    out = tuple(a + b for a, b in zip(e, mu))
                    row = rows.setdefault((i, out), {})
                    col = j * per + k
                    row[col] = row.get(col, Fraction(0)) + c
    null = linsolve.nullspace(list(rows.values()), p * per, backend=backend)
    return JetKernel(split=split, order=order, width=p,
                     basis=_vectors_from_nullspace(null, split, order, p))


def jet_kernel_mod_J(phi: SeriesMatrix, J: Ideal, order: int,
                     backend: str = "auto") -> JetKernel:
    """Solutions of phi.z in J.A^q modulo total degree > order.

    Multiplier jets for the generators of J are eliminated alongside z; the
    returned basis is the echelonized z-part of the solution space.
    """
    split = phi.split
    q, p = phi.rows, phi.cols
    mons, index = _mon_index(split.nvars, order)
    per = len(mons)
    gens = [g.embed(split) for g in J.generators]
    ncols = p * per + len(gens) * q * per
    rows: dict[tuple[int, tuple], dict[int, Fraction]] = {}
    for i in range(q):
        for j in range(p):
            entry = phi.entries[i][j]
            for e, c in entry.terms.items():
                de = sum(e)
                for k, mu in enumerate(mons):
                    if sum(mu) + de > order:
                        continue
                    out = tuple(a + b for a, b in zip(e, mu))
                    row = rows.setdefault((i, out), {})
                    col = j * per + k
                    row[col] = row.get(col, Fraction(0)) + c
    for t, g in enumerate(gens):
        for i in range(q):
            base = p * per + (t * q + i) * per
            for e, c in g.terms.items():
                de = sum(e)
                for k, mu in enumerate(mons):
                    if sum(mu) + de > order:
                        continue
                    out = tuple(a + b for a, b in zip(e, mu))
                    row = rows.setdefault((i, out), {})
                    col = base + k
                    row[col] = row.get(col, Fraction(0)) - c
    null = linsolve.nullspace(list(rows.values()), ncols, backend=backend)
    if gens:
        projected = [vec[: p * per] for vec in null]
        null = linsolve.rref_vectors(projected)
    # without multipliers the nullspace already is the echelonized z-part
    return JetKernel(split=split, order=order, width=p,
                     basis=_vectors_from_nullspace(null, split, order, p))


@dataclass
class OracleVerdict:
    status: str                        # flat_to_order | not_flat | inconclusive
    order: int
    window: Optional[int]              # interior comparison degree
    guard: int
    dim_origin: Optional[int] = None   # interior dims
    dim_evaluated: Optional[int] = None
    witness: Optional[tuple[Series, ...]] = None
    reason: Optional[str] = None

    @property
    def conclusive(self) -> bool:
        return self.status in ("flat_to_order", "not_flat")

    @property
    def is_flat(self) -> bool:
        return self.status == "flat_to_order"


def direct_flatness_test(pres: Presentation, J: Ideal, config: EngineConfig,
                         backend: str = "auto") -> OracleVerdict:
    """Lemma-of-kernels flatness test: compare (ker_J phi)(0) with
    ker(phi_m) through the interior window.  Containment of the evaluated
    J-kernel in the origin kernel is asserted; a strict gap returns a
    not-flat verdict witnessed by the unmatched origin-kernel vector."""
    phi = pres.phi
    order = config.order
    guard = max(0, phi.max_degree())
    window = order - guard
    if J.is_unit():
        return OracleVerdict(status="flat_to_order", order=order, window=window,
                             guard=guard, reason="unit ideal: the quotient ring is zero")
    if window < 0:
        return OracleVerdict(status="inconclusive", order=order, window=None,
                             guard=guard, reason="entry degrees exceed the jet order")
    k0 = jet_kernel_at_origin(phi, order, backend=backend)
    k1 = jet_kernel_mod_J(phi, J, order, backend=backend)
    k1_eval = k1.evaluate_base_origin()
    _assert_containment(phi, k1_eval, order)
    nvars = k0.split.nvars
    rows0 = k0.coefficient_rows(window)
    rows1 = k1_eval.coefficient_rows(window)
    gap_w, dim0_w, dim1_w = _window_gap(rows0, rows1, k0.width, nvars, window)
    if gap_w is None:
        return OracleVerdict(status="flat_to_order", order=order, window=window,
                             guard=guard, dim_origin=dim0_w, dim_evaluated=dim1_w)
    if window == 0:
        return OracleVerdict(status="inconclusive", order=order, window=window,
                             guard=guard, dim_origin=dim0_w, dim_evaluated=dim1_w,
                             reason="gap confined to the top of a zero-width window")
    # demand the gap strictly inside the window: a gap visible only in the
    # top homogeneous band is indistinguishable from a truncation artifact
    inner0 = _truncate_rows(rows0, k0.width, nvars, window, window - 1)
    inner1 = _truncate_rows(rows1, k0.width, nvars, window, window - 1)
    gap_in, dim0_in, dim1_in = _window_gap(inner0, inner1, k0.width, nvars, window - 1)
    if gap_in is None:
        return OracleVerdict(status="inconclusive", order=order, window=window,
                             guard=guard, dim_origin=dim0_w, dim_evaluated=dim1_w,
                             reason="kernel gap confined to the top window band")
    mons = monomials_upto(nvars, window - 1)
    per = len(mons)
    comps = []
    for j in range(k0.width):
        terms = {mons[k]: gap_in[j * per + k]
                 for k in range(per) if gap_in[j * per + k]}
        comps.append(Series(k0.split, terms, window - 1))
    return OracleVerdict(status="not_flat", order=order, window=window, guard=guard,
                         dim_origin=dim0_in, dim_evaluated=dim1_in,
                         witness=tuple(comps))


def _truncate_rows(rows: list[list[Fraction]], width: int, nvars: int,
                   from_window: int, to_window: int) -> list[list[Fraction]]:
    """Drop the top homogeneous band: the graded monomial table for the
    smaller window is a prefix of the larger one, per component block."""
    per_from = len(monomials_upto(nvars, from_window))
    per_to = len(monomials_upto(nvars, to_window))
    out = []
    for row in rows:
        out.append([row[j * per_from + k] for j in range(width) for k in range(per_to)])
    return out


def _window_gap(rows0: list[list[Fraction]], rows1: list[list[Fraction]],
                width: int, nvars: int, window: int):
    """Compare two coefficient-row families; returns (a minimal-valuation
    gap vector or None, interior dim of the origin kernel, of the evaluated
    kernel).  Containment of the second span in the first is asserted."""
    r0 = linsolve.rref_vectors(rows0)
    r1 = linsolve.rref_vectors(rows1)
    span0 = linsolve.SpanReducer()
    for row in r0:
        span0.add({c: v for c, v in enumerate(row) if v})
    for row in r1:
        if span0.reduce({c: v for c, v in enumerate(row) if v}):
            raise OracleInternalError(
                "evaluated J-kernel escapes the origin kernel inside the window")
    if len(r0) == len(r1):
        return None, len(r0), len(r1)
    span1 = linsolve.SpanReducer()
    for row in r1:
        span1.add({c: v for c, v in enumerate(row) if v})
    mons = monomials_upto(nvars, window)
    per = len(mons)
    best = None
    for row in r0:
        if span1.reduce({c: v for c, v in enumerate(row) if v}):
            val = min((sum(mons[k % per]) for k, v in enumerate(row) if v),
                      default=window + 1)
            if best is None or val < best[0]:
                best = (val, row)
    if best is None:
        raise OracleInternalError("kernel dimensions differ but no gap vector found")
    return best[1], len(r0), len(r1)


def _assert_containment(phi: SeriesMatrix, k1_eval: JetKernel, order: int):
    """(ker_J phi)(0) is inside ker(phi_m): exact re-check per basis vector."""
    phi0 = phi.evaluate_base_origin()
    for vec in k1_eval.basis:
        image = phi0.mul_vector(list(vec))
        for s in image:
            if not all(sum(e) > order for e in s.terms):
                raise OracleInternalError(
                    "containment (ker_J phi)(0) in ker(phi_m) failed")


# ---------------------------------------------------------------------------
# Lemma-level property checks


@lru_cache(maxsize=64)
def _principal_reducer(gens: tuple[Series, ...], split: VarSplit, order: int) -> linsolve.SpanReducer:
    """Echelonized span of {truncate(mu.h)} for full-split generators h."""
    mons, index = _mon_index(split.nvars, order)
    red = linsolve.SpanReducer()
    for h in gens:
        hval = h.valuation() or 0
        for mu in monomials_upto(split.nvars, max(0, order - hval)):
            row: dict[int, Fraction] = {}
            for e, c in h.terms.items():
                ee = tuple(a + b for a, b in zip(mu, e))
                if sum(ee) <= order:
                    k = index[ee]
                    row[k] = row.get(k, Fraction(0)) + c
            red.add(row)
    return red


def _in_span_ideal(f: Series, gens: Sequence[Series], order: int) -> bool:
    """Membership of f in the A-ideal generated by full-split gens, mod
    total degree > order (a pure rational span reduction)."""
    split = f.split
    mons, index = _mon_index(split.nvars, order)
    red = _principal_reducer(tuple(gens), split, order)
    vec = {index[e]: c for e, c in f.terms.items() if sum(e) <= order}
    return red.contains(vec)


@dataclass
class ProjectionLemmaReport:
    checked_mod_J: int
    checked_at_origin: int
    ok: bool


def check_projection_lemma(phi: SeriesMatrix, J: Ideal, dec: BlockDecomposition,
                           order: int, backend: str = "auto") -> ProjectionLemmaReport:
    """Verify the projection characterization on every computed kernel basis
    vector: for eta the complementary components of a J-kernel vector,
    adj(alpha).beta.eta lies in g.A + J.A and the reduced complement applied
    to eta lies in J.A; at J = m the evaluated form reduces to membership in
    the principal ideal g(0,x).A(0)."""
    split = phi.split
    ab = dec.adj.mul(dec.beta) if dec.r > 0 else None
    mcomp = reduced_complement(dec)
    ok = True
    kernel = jet_kernel_mod_J(phi, J, order, backend=backend)
    view = ProjectionView.of(kernel, dec, "second")
    checked = 0
    g_gens = (dec.g,) + tuple(g.embed(split) for g in J.generators)
    for eta in view.vectors():
        checked += 1
        if ab is not None and ab.cols > 0:
            for comp in ab.mul_vector(list(eta)):
                if not _in_span_ideal(comp, g_gens, order):
                    ok = False
        if mcomp.rows > 0 and mcomp.cols > 0 and dec.r > 0:
            for comp in mcomp.mul_vector(list(eta)):
                if not ideal_contains(J, comp, order).is_member:
                    ok = False
    # Remark at J = m: evaluated membership in the principal ideal g(0,x)
    k0 = jet_kernel_at_origin(phi, order, backend=backend)
    view0 = ProjectionView.of(k0, dec, "second")
    g0 = dec.g.evaluate_base_origin()
    ab0 = ab.evaluate_base_origin() if ab is not None else None
    checked0 = 0
    for eta in view0.vectors():
        checked0 += 1
        if ab0 is not None and ab0.cols > 0:
            for comp in ab0.mul_vector(list(eta)):
                if not _in_span_ideal(comp, (g0,), order):
                    ok = False
    return ProjectionLemmaReport(checked_mod_J=checked, checked_at_origin=checked0, ok=ok)


# ---------------------------------------------------------------------------
# engine/oracle cross-validation


@dataclass
class CrossValidation:
    engine: FlatnessVerdict
    oracle: OracleVerdict
    agreement: Optional[bool]              # None when either is inconclusive
    rank_equality: Optional[bool] = None   # when condition (1) passed at level 0
    g_oracle: Optional[OracleVerdict] = None
    proposition_consistent: Optional[bool] = None

    @property
    def ok(self) -> bool:
        if self.agreement is False:
            return False
        if self.proposition_consistent is False:
            return False
        return True


def cross_validate(pres: Presentation, J: Ideal, config: EngineConfig,
                   backend: str = "auto") -> CrossValidation:
    """Run engine and oracle side by side; additionally test the rank and
    kernel equivalence behind the induction whenever condition (1) passed:
    the engine's verdict must equal [rank_J phi = rank phi_m] AND [the
    oracle's verdict on the multiplication matrix G].  Mismatches are hard
    failures for CI, reported through ok = False."""
    engine = check_flat(pres, J, config)
    oracle = direct_flatness_test(pres, J, config, backend=backend)
    agreement: Optional[bool] = None
    if engine.conclusive and oracle.conclusive:
        agreement = engine.is_flat == oracle.is_flat
    rank_eq: Optional[bool] = None
    g_oracle: Optional[OracleVerdict] = None
    consistent: Optional[bool] = None
    step0 = engine.chain[0] if engine.chain else None
    if step0 is not None and step0.cond1 is not None and step0.cond1.passed \
            and not J.is_unit():
        # rank_J carries a min{r >= 1} floor, so r_m = 0 compares against 1
        r_m = rank_at_origin(pres.phi, config.order)
        rank_eq = rank_mod_ideal(pres.phi, J, config.order) == max(r_m, 1)
        if step0.reduction is not None:
            g_split = pres.split.drop_last_fiber()
            g_pres = Presentation(g_split, step0.reduction.g_matrix, "reduction matrix")
            sub = EngineConfig(order=step0.order - step0.reduction.d,
                               seed=config.seed, max_depth=config.max_depth,
                               regularize_retries=config.regularize_retries) \
                if step0.order - step0.reduction.d >= 1 else None
            if sub is not None:
                g_oracle = direct_flatness_test(g_pres, J, sub, backend=backend)
                if engine.conclusive and g_oracle.conclusive:
                    consistent = engine.is_flat == (rank_eq and g_oracle.is_flat)
        elif engine.conclusive and step0.g_is_unit:
            # no reduction: the verdict is condition (1) alone
            consistent = engine.is_flat == rank_eq if engine.is_flat else None
    return CrossValidation(engine=engine, oracle=oracle, agreement=agreement,
                           rank_equality=rank_eq, g_oracle=g_oracle,
                           proposition_consistent=consistent)
