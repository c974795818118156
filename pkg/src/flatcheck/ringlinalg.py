"""Matrices over the truncated series ring and ideal membership at jet order.

Provides the block machinery the flatness criterion consumes: the rank of a
presentation matrix at the base origin, a deterministic choice of an
invertible block with its adjugate, the reduced complement whose entries are
the (r+1)-minors, and membership tests of series in J.A for an ideal J of
the base ring (exactly for zero/monomial/maximal ideals, as a bounded-degree
linear solve for general polynomial ideals).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .linsolve import SpanReducer
from .series import Series, SeriesError, VarSplit, monomials_upto

__all__ = [
    "SeriesMatrix",
    "BlockDecomposition",
    "Ideal",
    "MembershipVerdict",
    "MembershipWitness",
    "determinant",
    "adjugate",
    "rank_at_origin",
    "choose_block",
    "reduced_complement",
    "verify_identity",
    "make_ideal",
    "ideal_sum",
    "ideal_contains",
    "rank_mod_ideal",
    "coefficient_ideal",
]


class SeriesMatrix:
    """A rectangular matrix of Series sharing one variable split."""

    __slots__ = ("split", "entries")

    def __init__(self, split: VarSplit, entries: Sequence[Sequence[Series]]):
        self.split = split
        self.entries = tuple(tuple(row) for row in entries)
        for row in self.entries:
            if len(row) != self.cols:
                raise SeriesError("ragged matrix")
            for e in row:
                if e.split != split:
                    raise SeriesError("matrix entries must share the variable split")

    # -- shape/access --------------------------------------------------------

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def entry(self, i: int, j: int) -> Series:
        return self.entries[i][j]

    def order(self) -> Optional[int]:
        orders = [e.order for row in self.entries for e in row if e.order is not None]
        return min(orders) if orders else None

    def is_exact(self) -> bool:
        return all(e.exact for row in self.entries for e in row)

    def max_degree(self) -> int:
        return max((e.degree() for row in self.entries for e in row), default=-1)

    @staticmethod
    def build(split: VarSplit, rows: int, cols: int, fn) -> "SeriesMatrix":
        return SeriesMatrix(split, [[fn(i, j) for j in range(cols)] for i in range(rows)])

    @staticmethod
    def zero(split: VarSplit, rows: int, cols: int) -> "SeriesMatrix":
        z = Series.zero(split)
        return SeriesMatrix(split, [[z] * cols for _ in range(rows)])

    @staticmethod
    def identity(split: VarSplit, size: int) -> "SeriesMatrix":
        one, zero = Series.one(split), Series.zero(split)
        return SeriesMatrix(split, [[one if i == j else zero for j in range(size)]
                                    for i in range(size)])

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "SeriesMatrix":
        return SeriesMatrix(self.split, [[self.entries[i][j] for j in col_idx]
                                         for i in row_idx])

    # -- arithmetic ----------------------------------------------------------

    def mul(self, other: "SeriesMatrix") -> "SeriesMatrix":
        if self.cols != other.rows:
            raise SeriesError("matrix shapes do not compose")
        if self.cols == 0:
            return SeriesMatrix.zero(self.split, self.rows, other.cols)
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Series.zero(self.split)
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return SeriesMatrix(self.split, out)

    def add(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return SeriesMatrix(self.split, [[a + b for a, b in zip(ra, rb)]
                                         for ra, rb in zip(self.entries, other.entries)])

    def sub(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return SeriesMatrix(self.split, [[a - b for a, b in zip(ra, rb)]
                                         for ra, rb in zip(self.entries, other.entries)])

    def scale(self, s: Series) -> "SeriesMatrix":
        return SeriesMatrix(self.split, [[s * e for e in row] for row in self.entries])

    def apply(self, fn) -> "SeriesMatrix":
        return SeriesMatrix(self.split, [[fn(e) for e in row] for row in self.entries])

    def evaluate_base_origin(self) -> "SeriesMatrix":
        fib = self.split.fiber_only()
        return SeriesMatrix(fib, [[e.evaluate_base_origin() for e in row]
                                  for row in self.entries])

    def mul_vector(self, vec: Sequence[Series]) -> list[Series]:
        out = []
        for i in range(self.rows):
            acc = Series.zero(self.split)
            for k in range(self.cols):
                acc = acc + self.entries[i][k] * vec[k]
            out.append(acc)
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, SeriesMatrix) and self.split == other.split
                and self.entries == other.entries)

    def __str__(self) -> str:
        return "[" + "; ".join(", ".join(str(e) for e in row) for row in self.entries) + "]"


def determinant(mat: SeriesMatrix, _memo: Optional[dict] = None) -> Series:
    """Determinant by first-row cofactor expansion (empty matrix gives 1)."""
    if mat.rows != mat.cols:
        raise SeriesError("determinant of a non-square matrix")
    memo: dict = {} if _memo is None else _memo

    def rec(rows: tuple[int, ...], cols: tuple[int, ...]) -> Series:
        if not rows:
            return Series.one(mat.split)
        key = (rows, cols)
        hit = memo.get(key)
        if hit is not None:
            return hit
        i = rows[0]
        rest = rows[1:]
        acc = Series.zero(mat.split)
        for k, j in enumerate(cols):
            e = mat.entries[i][j]
            if e.is_zero():
                continue
            sub = rec(rest, cols[:k] + cols[k + 1:])
            term = e * sub
            acc = acc + (term if k % 2 == 0 else -term)
        memo[key] = acc
        return acc

    return rec(tuple(range(mat.rows)), tuple(range(mat.cols)))


def adjugate(mat: SeriesMatrix) -> SeriesMatrix:
    """Classical adjugate: adj(A).A = A.adj(A) = det(A).Id, exactly."""
    if mat.rows != mat.cols:
        raise SeriesError("adjugate of a non-square matrix")
    size = mat.rows
    if size == 0:
        return SeriesMatrix(mat.split, [])
    memo: dict = {}
    idx = tuple(range(size))
    out = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            rows = tuple(k for k in idx if k != j)
            cols = tuple(k for k in idx if k != i)
            minor = _minor_det(mat, rows, cols, memo)
            out[i][j] = minor if (i + j) % 2 == 0 else -minor
    return SeriesMatrix(mat.split, out)


def _minor_det(mat: SeriesMatrix, rows: tuple[int, ...], cols: tuple[int, ...],
               memo: dict) -> Series:
    if not rows:
        return Series.one(mat.split)
    key = (rows, cols)
    hit = memo.get(key)
    if hit is not None:
        return hit
    i = rows[0]
    rest = rows[1:]
    acc = Series.zero(mat.split)
    for k, j in enumerate(cols):
        e = mat.entries[i][j]
        if e.is_zero():
            continue
        term = e * _minor_det(mat, rest, cols[:k] + cols[k + 1:], memo)
        acc = acc + (term if k % 2 == 0 else -term)
    memo[key] = acc
    return acc


# ---------------------------------------------------------------------------
# rank at the origin and the block decomposition


def rank_at_origin(phi: SeriesMatrix, order: int) -> int:
    """Largest r such that some r x r minor of phi(0, x) is nonzero to the
    working order (exact for polynomial entries of degree within order)."""
    phi0 = phi.evaluate_base_origin()
    top = min(phi.rows, phi.cols)
    memo: dict = {}
    for r in range(top, 0, -1):
        for rows in itertools.combinations(range(phi.rows), r):
            for cols in itertools.combinations(range(phi.cols), r):
                if not _minor_det(phi0, rows, cols, memo).is_zero():
                    return r
    return 0


@dataclass(frozen=True)
class BlockDecomposition:
    """Permuted block form of a presentation matrix with invertible alpha.

    ``row_order``/``col_order`` list original indices in permuted order: the
    first r of each select the alpha block.  g = det(alpha) satisfies
    g(0, x) != 0; adj is the adjugate with alpha.adj = g.Id exactly.
    l = rows - r counts the complementary rows.
    """

    phi: SeriesMatrix
    row_order: tuple[int, ...]
    col_order: tuple[int, ...]
    r: int
    alpha: SeriesMatrix
    beta: SeriesMatrix
    gamma: SeriesMatrix
    delta: SeriesMatrix
    g: Series
    adj: SeriesMatrix

    @property
    def l(self) -> int:
        return self.phi.rows - self.r

    def permuted(self) -> SeriesMatrix:
        return self.phi.submatrix(self.row_order, self.col_order)

    def g_is_unit(self) -> bool:
        return self.g.constant_term() != 0


def choose_block(phi: SeriesMatrix, order: int) -> BlockDecomposition:
    """Deterministic block choice among all r x r submatrices invertible at
    y = 0: lowest vanishing order of det(0, x) at x = 0 wins, ties broken
    lexicographically on (row set, column set).  r = 0 uses the empty-block
    convention g = 1, delta = phi."""
    r = rank_at_origin(phi, order)
    q, p = phi.rows, phi.cols
    if r == 0:
        rows_sel: tuple[int, ...] = ()
        cols_sel: tuple[int, ...] = ()
    else:
        phi0 = phi.evaluate_base_origin()
        memo: dict = {}
        best = None
        for rows in itertools.combinations(range(q), r):
            for cols in itertools.combinations(range(p), r):
                det0 = _minor_det(phi0, rows, cols, memo)
                if det0.is_zero():
                    continue
                key = (det0.valuation(), rows, cols)
                if best is None or key < best:
                    best = key
        assert best is not None
        _, rows_sel, cols_sel = best
    row_order = rows_sel + tuple(i for i in range(q) if i not in rows_sel)
    col_order = cols_sel + tuple(j for j in range(p) if j not in cols_sel)
    alpha = phi.submatrix(rows_sel, cols_sel)
    beta = phi.submatrix(rows_sel, col_order[r:])
    gamma = phi.submatrix(row_order[r:], cols_sel)
    delta = phi.submatrix(row_order[r:], col_order[r:])
    g = determinant(alpha)
    adj = adjugate(alpha)
    return BlockDecomposition(phi=phi, row_order=row_order, col_order=col_order,
                              r=r, alpha=alpha, beta=beta, gamma=gamma, delta=delta,
                              g=g, adj=adj)


def reduced_complement(dec: BlockDecomposition) -> SeriesMatrix:
    """M = g.delta - gamma.adj(alpha).beta; entries are (r+1)-minors of the
    permuted matrix (checked against cofactor expansion in the test suite)."""
    if dec.r == 0:
        return dec.phi
    gd = dec.delta.scale(dec.g)
    if dec.beta.cols == 0 or dec.gamma.rows == 0:
        return gd
    return gd.sub(dec.gamma.mul(dec.adj).mul(dec.beta))


def verify_identity(dec: BlockDecomposition, order: Optional[int] = None) -> bool:
    """The bookkeeping identity behind the minor description of M:

        g.Phi = [[alpha, 0], [gamma, Id]] . [[g.Id, adj.beta], [0, M]]

    (after the recorded permutations).  Exact on polynomial data, else
    compared to the working order.
    """
    split = dec.phi.split
    q, p, r = dec.phi.rows, dec.phi.cols, dec.r
    perm = dec.permuted()
    lhs = perm.scale(dec.g)
    m_block = reduced_complement(dec) if r > 0 else dec.phi
    left = SeriesMatrix.build(
        split, q, q,
        lambda i, j: (dec.alpha.entry(i, j) if i < r and j < r else
                      Series.zero(split) if i < r else
                      dec.gamma.entry(i - r, j) if j < r else
                      (Series.one(split) if i == j else Series.zero(split))))
    adj_beta = dec.adj.mul(dec.beta) if r > 0 and dec.beta.cols > 0 else None
    g_series = dec.g

    def right_entry(i: int, j: int) -> Series:
        if i < r and j < r:
            return g_series if i == j else Series.zero(split)
        if i < r:
            return adj_beta.entry(i, j - r) if adj_beta is not None else Series.zero(split)
        if j < r:
            return Series.zero(split)
        return m_block.entry(i - r, j - r)

    right = SeriesMatrix.build(split, q, p, right_entry)
    rhs = left.mul(right)
    if lhs.is_exact() and rhs.is_exact():
        return lhs == rhs
    if order is None:
        orders = [o for o in (lhs.order(), rhs.order()) if o is not None]
        order = min(orders)
    for i in range(q):
        for j in range(p):
            if not lhs.entry(i, j).agrees_to_order(rhs.entry(i, j), order):
                return False
    return True


# ---------------------------------------------------------------------------
# ideals in the base ring and membership at jet order


@dataclass(frozen=True)
class Ideal:
    """A finitely generated ideal of the base ring, with a membership
    strategy chosen per kind: zero | maximal | monomial | general."""

    generators: tuple[Series, ...]
    kind: str

    @property
    def split(self) -> Optional[VarSplit]:
        return self.generators[0].split if self.generators else None

    def is_zero(self) -> bool:
        return self.kind == "zero"

    def is_unit(self) -> bool:
        """Whether the ideal is the whole local ring (a generator is a unit)."""
        return any(g.constant_term() != 0 for g in self.generators)

    def __str__(self) -> str:
        if not self.generators:
            return "(0)"
        return "(" + ", ".join(str(g) for g in self.generators) + ")"


def _normalize_generator(g: Series) -> Series:
    lead = min(g.terms, key=lambda e: (sum(e), e))
    return g.scale(1 / g.terms[lead])


def _classify(gens: tuple[Series, ...], n: int) -> str:
    if not gens:
        return "zero"
    if all(len(g.terms) == 1 for g in gens):
        expos = {next(iter(g.terms)) for g in gens}
        units = {tuple(1 if i == k else 0 for i in range(n)) for k in range(n)}
        if expos == units:
            return "maximal"
        return "monomial"
    return "general"


def make_ideal(generators: Iterable[Series]) -> Ideal:
    """Build an ideal from base-only polynomial generators (normalized so
    the graded-lex leading coefficient is 1, zero generators dropped)."""
    gens = []
    split = None
    for g in generators:
        if g.split.m != 0:
            raise SeriesError("ideal generators must live in the base variables only")
        if not g.exact:
            raise SeriesError("ideal generators must be exact polynomials")
        if g.is_zero():
            continue
        if split is None:
            split = g.split
        elif g.split != split:
            raise SeriesError("ideal generators must share one base split")
        gens.append(_normalize_generator(g))
    # dedupe while preserving a canonical order
    uniq: list[Series] = []
    for g in sorted(gens, key=lambda s: (s.degree(), len(s.terms), str(s))):
        if all(not g.same_terms(h) for h in uniq):
            uniq.append(g)
    n = split.n if split is not None else 0
    return Ideal(tuple(uniq), _classify(tuple(uniq), n))


def ideal_sum(a: Ideal, b: Ideal) -> Ideal:
    return make_ideal(list(a.generators) + list(b.generators))


@dataclass(frozen=True)
class MembershipWitness:
    """Exact evidence of non-membership: the fiber exponent nu whose base
    coefficient lies outside the ideal, and the jet order that certified it."""

    fiber_exponent: tuple[int, ...]
    coefficient: Series
    jet_order: int


@dataclass(frozen=True)
class MembershipVerdict:
    status: str                     # "member" | "non_member"
    exact: bool                     # True when no order-N hedge is needed
    order: Optional[int]            # certification order for hedged verdicts
    witness: Optional[MembershipWitness] = None

    @property
    def is_member(self) -> bool:
        return self.status == "member"


@lru_cache(maxsize=256)
def _general_reducer(gens: tuple[Series, ...], k: int) -> SpanReducer:
    """Echelonized span of {truncate_k(mu . g_i)} over base monomials mu.

    Membership of c modulo (y)^{k+1} is reduction to zero against this span;
    a nonzero residual is an exact proof of non-membership in the local ring.
    """
    split = gens[0].split
    mons = monomials_upto(split.n, k)
    index = {e: i for i, e in enumerate(mons)}
    red = SpanReducer()
    for g in gens:
        gval = g.valuation() or 0
        for mu in monomials_upto(split.n, max(0, k - gval)):
            row: dict[int, Fraction] = {}
            for e, c in g.terms.items():
                ee = tuple(a + b for a, b in zip(mu, e))
                if sum(ee) <= k:
                    row[index[ee]] = row.get(index[ee], Fraction(0)) + c
            red.add(row)
    return red


def _coefficient_member(J: Ideal, c: Series, k: int) -> bool:
    """Is the base polynomial c in J modulo (y)^{k+1}?"""
    if J.kind == "zero":
        return c.is_zero()
    if J.kind == "maximal":
        return c.constant_term() == 0
    if J.kind == "monomial":
        gen_expos = [next(iter(g.terms)) for g in J.generators]
        for e in c.terms:
            if not any(all(a >= b for a, b in zip(e, ge)) for ge in gen_expos):
                return False
        return True
    mons = monomials_upto(c.split.n, k)
    index = {e: i for i, e in enumerate(mons)}
    vec = {index[e]: v for e, v in c.terms.items() if sum(e) <= k}
    return _general_reducer(J.generators, k).contains(vec)


def ideal_contains(J: Ideal, f: Series, order: int) -> MembershipVerdict:
    """Test f in J.A at jet order: expand f = sum c_nu(y) x^nu and test each
    base coefficient.  Non-membership is exact (a truncation of any true
    representation would still solve the jet system); membership is exact
    for zero/maximal/monomial kinds on exact input, else to the order."""
    total = order if f.order is None else min(order, f.order)
    kind_exact = J.kind in ("zero", "maximal", "monomial")
    checked = []
    for nu in f.fiber_exponents():
        c = f.coefficient_in_fiber(nu)
        k = total - sum(nu)
        if k < 0:
            continue
        if kind_exact:
            ok = _coefficient_member(J, c, k)
        else:
            ok = _coefficient_member(J, c.truncate(k), k)
        if not ok:
            return MembershipVerdict(
                status="non_member", exact=True, order=None,
                witness=MembershipWitness(fiber_exponent=nu, coefficient=c,
                                          jet_order=k))
        checked.append(k)
    exact = kind_exact and f.exact
    return MembershipVerdict(status="member", exact=exact,
                             order=None if exact else total)


def rank_mod_ideal(phi: SeriesMatrix, J: Ideal, order: int) -> int:
    """min { r >= 1 : every (r+1)x(r+1) minor of phi lies in J.A }, minors
    enumerated directly (the sizes in scope keep this cheap)."""
    top = min(phi.rows, phi.cols)
    memo: dict = {}
    for r in range(1, top + 1):
        ok = True
        for rows in itertools.combinations(range(phi.rows), r + 1):
            for cols in itertools.combinations(range(phi.cols), r + 1):
                minor = _minor_det(phi, rows, cols, memo)
                if not ideal_contains(J, minor, order).is_member:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return r
    return top if top >= 1 else 1


def coefficient_ideal(mat: SeriesMatrix, order: int) -> Ideal:
    """The ideal of the base ring generated by all base coefficients c_nu(y)
    of all entries (fiber degree within the order), pruned pairwise: a
    generator divisible by another (in the local ring, to the working order)
    is dropped."""
    raw: list[Series] = []
    for row in mat.entries:
        for e in row:
            for nu in e.fiber_exponents():
                if sum(nu) > order:
                    continue
                c = e.coefficient_in_fiber(nu)
                if not c.is_zero():
                    raw.append(_normalize_generator(c))
    uniq: list[Series] = []
    for g in sorted(raw, key=lambda s: (s.degree(), len(s.terms), str(s))):
        if all(not g.same_terms(h) for h in uniq):
            uniq.append(g)
    kept: list[Series] = []
    for g in uniq:
        principal = [make_ideal([h]) for h in kept]
        if any(_coefficient_member(P, g, order) for P in principal):
            continue
        kept.append(g)
    return make_ideal(kept)
