"""Exact truncated multivariate power series over the rationals.

A series lives in a ring with a declared split of the variables into *base*
variables y = (y1, .., yn) and *fiber* variables x = (x1, .., xm).  Terms are
stored sparsely as a dict mapping exponent tuples (base exponents first) to
nonzero ``Fraction`` coefficients.

Truncation is by total degree.  ``order`` is the highest total degree whose
coefficients are certified; ``order=None`` means the series is *exact*: it
equals its own infinite expansion (true for polynomial input and preserved
by any operation that provably discards nothing).  Arithmetic results carry
the minimum of the operand orders.

The module also provides the three division algorithms used by the flatness
engine: Weierstrass division and preparation with respect to the last fiber
variable, and Euclidean division by a monic polynomial in the last fiber
variable.  Division results are certified to a reduced order N - d (one d
per division, d = regularity order); every division self-checks its residual
and raises if the certified congruence fails.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence, Union

Coeff = Union[int, Fraction]

__all__ = [
    "VarSplit",
    "Series",
    "LinearChange",
    "WeierstrassData",
    "XmPolynomial",
    "SeriesError",
    "ParseError",
    "PrecisionError",
    "RegularityError",
    "parse_series",
    "xm_order",
    "regularize",
    "weierstrass_divide",
    "weierstrass_prepare",
    "euclid_divide",
    "random_series",
]


class SeriesError(ValueError):
    """Base error for series-level misuse (incompatible splits etc.)."""


class ParseError(SeriesError):
    """Malformed series literal; carries the offset of the offending token."""

    def __init__(self, message: str, text: str, pos: int, token: str = ""):
        self.text = text
        self.pos = pos
        self.token = token
        super().__init__(f"{message} at position {pos}" + (f" (near {token!r})" if token else ""))


class PrecisionError(SeriesError):
    """Raised when an operation cannot certify any jet order (budget < 0)."""


class RegularityError(SeriesError):
    """Raised when a divisor is not x_m-regular at the required order."""


def _default_names(prefix: str, count: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(count))


@dataclass(frozen=True)
class VarSplit:
    """Declares n base variables and m fiber variables, base first."""

    n: int
    m: int
    base_names: tuple[str, ...] = ()
    fiber_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise SeriesError("variable counts must be nonnegative")
        if not self.base_names:
            object.__setattr__(self, "base_names", _default_names("y", self.n))
        if not self.fiber_names:
            object.__setattr__(self, "fiber_names", _default_names("x", self.m))
        if len(self.base_names) != self.n or len(self.fiber_names) != self.m:
            raise SeriesError("variable name lists do not match counts")
        names = self.base_names + self.fiber_names
        if len(set(names)) != len(names):
            raise SeriesError(f"variable names must be distinct: {names}")

    @property
    def nvars(self) -> int:
        return self.n + self.m

    @property
    def names(self) -> tuple[str, ...]:
        return self.base_names + self.fiber_names

    def base_only(self) -> "VarSplit":
        return VarSplit(self.n, 0, self.base_names, ())

    def fiber_only(self) -> "VarSplit":
        return VarSplit(0, self.m, (), self.fiber_names)

    def drop_last_fiber(self) -> "VarSplit":
        if self.m == 0:
            raise SeriesError("no fiber variable to drop")
        return VarSplit(self.n, self.m - 1, self.base_names, self.fiber_names[:-1])


@lru_cache(maxsize=None)
def monomials_upto(nvars: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """All exponent tuples of total degree <= degree, graded-lex ordered."""
    if degree < 0:
        return ()
    if nvars == 0:
        return ((),)
    out = []
    for d in range(degree + 1):
        for bars in itertools.combinations(range(d + nvars - 1), nvars - 1):
            expo = []
            prev = -1
            for b in bars:
                expo.append(b - prev - 1)
                prev = b
            expo.append(d + nvars - 2 - prev)
            out.append(tuple(expo))
    return tuple(out)


def _min_order(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _mul_terms(a: dict, b: dict, cutoff: Optional[int]) -> dict:
    """Cauchy product of term dicts, discarding total degree > cutoff."""
    out: dict = {}
    for ea, ca in a.items():
        da = sum(ea)
        for eb, cb in b.items():
            if cutoff is not None and da + sum(eb) > cutoff:
                continue
            e = tuple(i + j for i, j in zip(ea, eb))
            c = out.get(e)
            c = ca * cb if c is None else c + ca * cb
            if c:
                out[e] = c
            elif e in out:
                del out[e]
    return out


class Series:
    """A truncated (or exact) multivariate power series over Q."""

    __slots__ = ("split", "order", "terms")

    def __init__(self, split: VarSplit, terms: dict, order: Optional[int] = None):
        self.split = split
        self.order = order
        if order is not None:
            terms = {e: c for e, c in terms.items() if sum(e) <= order and c}
        else:
            terms = {e: c for e, c in terms.items() if c}
        self.terms = terms

    # -- construction ------------------------------------------------------

    @staticmethod
    def zero(split: VarSplit, order: Optional[int] = None) -> "Series":
        return Series(split, {}, order)

    @staticmethod
    def constant(split: VarSplit, value: Coeff, order: Optional[int] = None) -> "Series":
        v = Fraction(value)
        return Series(split, {(0,) * split.nvars: v} if v else {}, order)

    @staticmethod
    def one(split: VarSplit, order: Optional[int] = None) -> "Series":
        return Series.constant(split, 1, order)

    @staticmethod
    def monomial(split: VarSplit, expo: Sequence[int], coeff: Coeff = 1,
                 order: Optional[int] = None) -> "Series":
        expo = tuple(expo)
        if len(expo) != split.nvars or any(e < 0 for e in expo):
            raise SeriesError(f"bad exponent {expo} for {split.nvars} variables")
        return Series(split, {expo: Fraction(coeff)}, order)

    @staticmethod
    def variable(split: VarSplit, name: str, order: Optional[int] = None) -> "Series":
        idx = split.names.index(name)
        expo = tuple(1 if i == idx else 0 for i in range(split.nvars))
        return Series.monomial(split, expo, 1, order)

    # -- basic queries -----------------------------------------------------

    @property
    def exact(self) -> bool:
        return self.order is None

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Max total degree of a stored term (-1 for the zero series)."""
        return max((sum(e) for e in self.terms), default=-1)

    def valuation(self) -> Optional[int]:
        """Min total degree of a stored term (None for the zero series)."""
        return min((sum(e) for e in self.terms), default=None)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.split.nvars, Fraction(0))

    def coefficient(self, expo: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(expo), Fraction(0))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Series) and self.split == other.split
                and self.order == other.order and self.terms == other.terms)

    def __hash__(self):
        return hash((self.split, self.order, tuple(sorted(self.terms.items()))))

    def same_terms(self, other: "Series") -> bool:
        return self.split == other.split and self.terms == other.terms

    def agrees_to_order(self, other: "Series", order: int) -> bool:
        """Termwise equality of all coefficients of total degree <= order."""
        for e in set(self.terms) | set(other.terms):
            if sum(e) <= order and self.terms.get(e, 0) != other.terms.get(e, 0):
                return False
        return True

    # -- arithmetic --------------------------------------------------------

    def _check_compatible(self, other: "Series"):
        if self.split != other.split:
            raise SeriesError(f"incompatible variable splits: {self.split} vs {other.split}")

    def __add__(self, other: "Series") -> "Series":
        self._check_compatible(other)
        order = _min_order(self.order, other.order)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, 0) + c
            if s:
                terms[e] = s
            elif e in terms:
                del terms[e]
        return Series(self.split, terms, order)

    def __neg__(self) -> "Series":
        return Series(self.split, {e: -c for e, c in self.terms.items()}, self.order)

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def __mul__(self, other) -> "Series":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check_compatible(other)
        order = _min_order(self.order, other.order)
        full = _mul_terms(self.terms, other.terms, None)
        if order is not None:
            kept = {e: c for e, c in full.items() if sum(e) <= order}
            return Series(self.split, kept, order)
        return Series(self.split, full, None)

    def __rmul__(self, other) -> "Series":
        return self.__mul__(other)

    def scale(self, c: Coeff) -> "Series":
        c = Fraction(c)
        if not c:
            return Series.zero(self.split, self.order)
        return Series(self.split, {e: v * c for e, v in self.terms.items()}, self.order)

    def __pow__(self, k: int) -> "Series":
        if k < 0:
            raise SeriesError("negative power of a series")
        result = Series.one(self.split, self.order)
        for _ in range(k):
            result = result * self
        return result

    def truncate(self, order: Optional[int]) -> "Series":
        """Re-certify at a (weaker or equal) jet order, dropping excess terms."""
        new = _min_order(self.order, order)
        return Series(self.split, self.terms, new)

    # -- structure maps ----------------------------------------------------

    def evaluate_base_origin(self) -> "Series":
        """f(0, x): drop every term with positive base degree."""
        n = self.split.n
        fib = self.split.fiber_only()
        terms = {e[n:]: c for e, c in self.terms.items() if not any(e[:n])}
        return Series(fib, terms, self.order)

    def evaluate_origin(self) -> Fraction:
        return self.constant_term()

    def evaluate_base_point(self, point: Sequence[Coeff]) -> "Series":
        """Substitute y = point (exact series only); result is fiber-only."""
        if not self.exact:
            raise PrecisionError("cannot evaluate a truncated jet at a base point")
        point = [Fraction(p) for p in point]
        n = self.split.n
        if len(point) != n:
            raise SeriesError("point dimension does not match base variable count")
        fib = self.split.fiber_only()
        out: dict = {}
        for e, c in self.terms.items():
            v = c
            for a, p in zip(e[:n], point):
                v *= p ** a
            if v:
                key = e[n:]
                s = out.get(key, 0) + v
                if s:
                    out[key] = s
                elif key in out:
                    del out[key]
        return Series(fib, out, None)

    def coefficient_in_fiber(self, nu: Sequence[int]) -> "Series":
        """The base-variable coefficient series c_nu(y) of x^nu."""
        nu = tuple(nu)
        n = self.split.n
        base = self.split.base_only()
        terms = {e[:n]: c for e, c in self.terms.items() if e[n:] == nu}
        order = None if self.order is None else self.order - sum(nu)
        return Series(base, terms, order)

    def fiber_exponents(self) -> list[tuple[int, ...]]:
        n = self.split.n
        return sorted({e[n:] for e in self.terms}, key=lambda t: (sum(t), t))

    def embed(self, split: VarSplit) -> "Series":
        """Reinterpret in a larger split (variables matched by name)."""
        pos = {name: i for i, name in enumerate(split.names)}
        idx = []
        for name in self.split.names:
            if name not in pos:
                raise SeriesError(f"variable {name} missing from target split")
            idx.append(pos[name])
        terms = {}
        for e, c in self.terms.items():
            ee = [0] * split.nvars
            for i, a in zip(idx, e):
                ee[i] = a
            terms[tuple(ee)] = c
        return Series(split, terms, self.order)

    def apply_linear_change(self, change: "LinearChange") -> "Series":
        """Substitute x -> L.x on the fiber variables; degrees are preserved."""
        m = self.split.m
        if change.dim != m:
            raise SeriesError("linear change dimension does not match fiber count")
        n = self.split.n
        nv = self.split.nvars
        # linear forms (L.x)_i as term dicts
        forms = []
        for i in range(m):
            f = {}
            for j in range(m):
                if change.matrix[i][j]:
                    e = [0] * nv
                    e[n + j] = 1
                    f[tuple(e)] = Fraction(change.matrix[i][j])
            forms.append(f)
        out: dict = {}
        for e, c in self.terms.items():
            prod = {tuple(list(e[:n]) + [0] * m): c}
            for i in range(m):
                for _ in range(e[n + i]):
                    prod = _mul_terms(prod, forms[i], None)
            for ee, cc in prod.items():
                s = out.get(ee, 0) + cc
                if s:
                    out[ee] = s
                elif ee in out:
                    del out[ee]
        return Series(self.split, out, self.order)

    def shift_base(self, point: Sequence[Coeff]) -> "Series":
        """Substitute y -> y + point (re-centering); exact input required."""
        if not self.exact:
            raise PrecisionError("base translation needs exact input: high-order "
                                 "terms of a jet feed every order of the translate")
        point = [Fraction(p) for p in point]
        n = self.split.n
        if len(point) != n:
            raise SeriesError("point dimension does not match base variable count")
        nv = self.split.nvars
        out: dict = {}
        # (y_i + p_i)^a expanded by the binomial theorem, term by term
        for e, c in self.terms.items():
            prod = {(0,) * nv: c}
            for i in range(n):
                a = e[i]
                if a == 0:
                    continue
                binom = {}
                for k in range(a + 1):
                    coeff = Fraction(_binomial(a, k)) * point[i] ** (a - k)
                    if coeff:
                        ee = [0] * nv
                        ee[i] = k
                        binom[tuple(ee)] = coeff
                prod = _mul_terms(prod, binom, None)
            fib = [0] * nv
            for j in range(n, nv):
                fib[j] = e[j]
            prod = _mul_terms(prod, {tuple(fib): Fraction(1)}, None)
            for ee, cc in prod.items():
                s = out.get(ee, 0) + cc
                if s:
                    out[ee] = s
                elif ee in out:
                    del out[ee]
        return Series(self.split, out, None)

    # -- printing ----------------------------------------------------------

    def __str__(self) -> str:
        return format_series(self)

    def __repr__(self) -> str:
        tag = "exact" if self.exact else f"O({self.order})"
        return f"Series({format_series(self)}, {tag})"


def _binomial(a: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (a - i) // (i + 1)
    return out


# ---------------------------------------------------------------------------
# literal syntax: rational coefficients, '*' products, '^' powers


def format_series(f: Series) -> str:
    if not f.terms:
        return "0"
    names = f.split.names
    pieces = []
    for e in sorted(f.terms, key=lambda t: (sum(t), t)):
        c = f.terms[e]
        factors = []
        for name, a in zip(names, e):
            if a == 1:
                factors.append(name)
            elif a > 1:
                factors.append(f"{name}^{a}")
        if not factors:
            body = str(abs(c))
        elif abs(c) == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(abs(c))] + factors)
        pieces.append(("- " if c < 0 else "+ ") + body)
    first = pieces[0]
    text = ("-" + first[2:]) if first.startswith("- ") else first[2:]
    for p in pieces[1:]:
        text += " " + p
    return text


_TOKEN_KINDS = ("number", "name", "op", "end")


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("number", text[i:j], i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
        elif ch in "+-*^/()":
            tokens.append(("op", ch, i))
            i += 1
        else:
            raise ParseError("unexpected character", text, i, ch)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser for the series literal grammar.

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ['^' integer]
    atom   := rational | variable | '(' expr ')'
    """

    def __init__(self, text: str, split: VarSplit):
        self.text = text
        self.split = split
        self.tokens = _tokenize(text)
        self.pos = 0
        self.index = {name: i for i, name in enumerate(split.names)}

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str):
        kind, value, where = self.peek()
        raise ParseError(message, self.text, where, value)

    def parse(self) -> Series:
        result = self.expr()
        if self.peek()[0] != "end":
            self.fail("trailing input")
        return result

    def expr(self) -> Series:
        sign = 1
        kind, value, _ = self.peek()
        if kind == "op" and value in "+-":
            self.take()
            sign = -1 if value == "-" else 1
        result = self.term().scale(sign)
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            nxt = self.term()
            result = result + (nxt if op == "+" else -nxt)
        return result

    def term(self) -> Series:
        result = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            result = result * self.factor()
        return result

    def factor(self) -> Series:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, value, _ = self.peek()
            if kind != "number":
                self.fail("exponent must be a nonnegative integer")
            self.take()
            return base ** int(value)
        return base

    def atom(self) -> Series:
        kind, value, where = self.peek()
        if kind == "number":
            self.take()
            num = int(value)
            if self.peek()[0] == "op" and self.peek()[1] == "/":
                self.take()
                k2, v2, _ = self.peek()
                if k2 != "number":
                    self.fail("denominator must be an integer")
                self.take()
                return Series.constant(self.split, Fraction(num, int(v2)))
            return Series.constant(self.split, num)
        if kind == "name":
            if value not in self.index:
                raise ParseError("unknown variable", self.text, where, value)
            self.take()
            return Series.variable(self.split, value)
        if kind == "op" and value == "(":
            self.take()
            inner = self.expr()
            k2, v2, _ = self.peek()
            if (k2, v2) != ("op", ")"):
                self.fail("expected ')'")
            self.take()
            return inner
        self.fail("expected a coefficient, variable or '('")


def parse_series(text: str, split: VarSplit, order: Optional[int] = None) -> Series:
    """Parse a series literal like ``"x1^2 - 3/2*y1*x1"``.

    The result is exact unless an explicit truncation order is requested.
    """
    f = _Parser(text, split).parse()
    return f.truncate(order) if order is not None else f


# ---------------------------------------------------------------------------
# linear changes of the fiber coordinates


@dataclass(frozen=True)
class LinearChange:
    """An invertible linear substitution on the fiber variables."""

    matrix: tuple[tuple[Fraction, ...], ...]
    seed: str = "none"

    def __post_init__(self):
        mat = tuple(tuple(Fraction(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", mat)
        if _det_rational(mat) == 0:
            raise SeriesError("linear change matrix is singular")

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @staticmethod
    def identity(m: int) -> "LinearChange":
        return LinearChange(tuple(tuple(Fraction(int(i == j)) for j in range(m))
                                  for i in range(m)))

    def is_identity(self) -> bool:
        return all(self.matrix[i][j] == (1 if i == j else 0)
                   for i in range(self.dim) for j in range(self.dim))


def _det_rational(mat) -> Fraction:
    mat = [list(row) for row in mat]
    size = len(mat)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if mat[r][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            mat[col], mat[pivot] = mat[pivot], mat[col]
            det = -det
        det *= mat[col][col]
        inv = 1 / mat[col][col]
        for r in range(col + 1, size):
            if mat[r][col]:
                factor = mat[r][col] * inv
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[col])]
    return det


def random_unimodular(m: int, rng: random.Random, shears: int = 4) -> tuple[tuple[int, ...], ...]:
    """A random integer matrix of determinant +-1 (products of shears/swaps)."""
    mat = [[int(i == j) for j in range(m)] for i in range(m)]
    for _ in range(shears):
        i, j = rng.randrange(m), rng.randrange(m)
        if i == j:
            continue
        c = rng.choice([-2, -1, 1, 2])
        for k in range(m):
            mat[i][k] += c * mat[j][k]
    if rng.random() < 0.5 and m > 1:
        i, j = rng.sample(range(m), 2)
        mat[i], mat[j] = mat[j], mat[i]
    return tuple(tuple(row) for row in mat)


# ---------------------------------------------------------------------------
# x_m-regularity and the division algorithms


def xm_order(f: Series) -> Optional[int]:
    """Least d with x_m^d appearing in f(0, .., 0, x_m), or None if not
    regular to the series' order (failure is a value, not an error)."""
    if f.split.m < 1:
        raise SeriesError("xm_order needs at least one fiber variable")
    nv = f.split.nvars
    best = None
    for e, _ in f.terms.items():
        if any(e[i] for i in range(nv - 1)):
            continue
        d = e[-1]
        best = d if best is None else min(best, d)
    return best


def regularize(g: Series, seed: int = 0, retries: int = 40) -> tuple[LinearChange, int]:
    """Find a linear fiber change making g regular in the last fiber variable.

    Tries the identity first, then seeded random unimodular integer changes.
    Deterministic for a given seed.  Requires g(0, x) != 0 (detectable on the
    stored terms); raises RegularityError otherwise or after the retry budget.
    """
    m = g.split.m
    if g.evaluate_base_origin().is_zero():
        raise RegularityError("g(0, x) = 0 to the working order; cannot regularize")
    d = xm_order(g)
    if d is not None:
        return LinearChange.identity(m), d
    rng = random.Random(seed)
    for attempt in range(retries):
        mat = random_unimodular(m, rng)
        change = LinearChange(tuple(tuple(Fraction(v) for v in row) for row in mat),
                              seed=f"{seed}:{attempt}")
        d = xm_order(g.apply_linear_change(change))
        if d is not None:
            return change, d
    raise RegularityError(
        f"no regularizing change found after {retries} tries (seed {seed}); "
        f"g(0,x) leading part: {g.evaluate_base_origin()}")


def _split_xm(terms: dict, d: int) -> tuple[dict, dict]:
    """Split into (upper, lower): upper has x_m-degree >= d, shifted down by d."""
    upper: dict = {}
    lower: dict = {}
    for e, c in terms.items():
        if e[-1] >= d:
            upper[e[:-1] + (e[-1] - d,)] = c
        else:
            lower[e] = c
    return upper, lower


def _cut(terms: dict, cutoff: int) -> dict:
    return {e: c for e, c in terms.items() if sum(e) <= cutoff}


def _invert_unit_terms(terms: dict, nvars: int, cutoff: int) -> tuple[dict, bool]:
    """Inverse of a series with nonzero constant term, mod degree > cutoff.

    Returns (inverse terms, exact flag); exact iff the input is a constant.
    """
    zero = (0,) * nvars
    c = terms.get(zero)
    if not c:
        raise SeriesError("cannot invert: constant term vanishes")
    w = {e: v / c for e, v in terms.items() if e != zero}
    if not w:
        return {zero: 1 / c}, True
    # Neumann series: 1/(c(1+w)) = (1/c) * sum (-w)^k, w has valuation >= 1
    acc = {zero: Fraction(1)}
    for _ in range(cutoff):
        acc = _mul_terms(w, acc, cutoff)
        for e in list(acc):
            acc[e] = -acc[e]
        acc[zero] = acc.get(zero, Fraction(0)) + 1
        if not acc[zero]:
            del acc[zero]
    return {e: v / c for e, v in acc.items()}, False


def weierstrass_divide(f: Series, g: Series, d: int, order: int) -> tuple[Series, "XmPolynomial"]:
    """Weierstrass division f = q*g + r with deg_{x_m} r < d.

    g must be x_m-regular of order d (coefficient of x_m^d nonzero at the
    origin).  The congruence is certified modulo total degree > order - d;
    the residual is checked termwise and a failure raises.  Results are
    exact when the computation provably stayed polynomial.
    """
    f._check_compatible(g)
    n_work = order
    if f.order is not None:
        n_work = min(n_work, f.order)
    if g.order is not None:
        n_work = min(n_work, g.order)
    n_eff = n_work - d
    if n_eff < 0:
        raise PrecisionError(f"order budget exhausted: working order {n_work} < d = {d}")
    nv = f.split.nvars
    e_terms, b_terms = _split_xm(g.terms, d)
    zero = (0,) * nv
    if not e_terms.get(zero):
        raise RegularityError(f"divisor is not x_m-regular of order {d}")
    einv, einv_exact = _invert_unit_terms(e_terms, nv, n_work)

    q_terms: dict = {}
    converged = False
    for _ in range(n_work + 2):
        work = dict(f.terms)
        if q_terms:
            qb = _mul_terms(q_terms, b_terms, n_work)
            for e, c in qb.items():
                s = work.get(e, 0) - c
                if s:
                    work[e] = s
                elif e in work:
                    del work[e]
        upper, _ = _split_xm(work, d)
        q_new = _mul_terms(einv, upper, n_work)
        if q_new == q_terms:
            converged = True
            break
        q_terms = q_new
    # remainder: the lower part of f - q*b
    work = dict(f.terms)
    qb = _mul_terms(q_terms, b_terms, n_work)
    for e, c in qb.items():
        s = work.get(e, 0) - c
        if s:
            work[e] = s
        elif e in work:
            del work[e]
    _, r_terms = _split_xm(work, d)

    # exactness: everything polynomial and honestly converged
    exact = (f.exact and g.exact and einv_exact and converged
             and _residual_is_zero(f.terms, q_terms, g.terms, r_terms, None))
    res_order = None if exact else n_eff
    q = Series(f.split, q_terms, res_order)
    r_series = Series(f.split, r_terms, res_order)
    if not exact and not _residual_is_zero(f.terms, q_terms, g.terms, r_terms, n_eff):
        raise PrecisionError("division residual check failed; internal invariant broken")
    return q, XmPolynomial.from_series(r_series)


def _residual_is_zero(f_terms, q_terms, g_terms, r_terms, upto: Optional[int]) -> bool:
    res = _mul_terms(q_terms, g_terms, None)
    for e, c in f_terms.items():
        s = res.get(e, 0) - c
        if s:
            res[e] = s
        elif e in res:
            del res[e]
    for e, c in r_terms.items():
        s = res.get(e, 0) + c
        if s:
            res[e] = s
        elif e in res:
            del res[e]
    if upto is None:
        return not res
    return all(sum(e) > upto for e in res)


@dataclass(frozen=True)
class WeierstrassData:
    """g = unit * P with P distinguished of degree d in the last fiber variable."""

    d: int
    unit: Series
    distinguished: "XmPolynomial"
    effective_order: Optional[int]

    def distinguished_series(self, split: VarSplit) -> Series:
        return self.distinguished.to_series(split)


def weierstrass_prepare(g: Series, d: int, order: int) -> WeierstrassData:
    """Factor g = u*P, u(0,0) != 0, P = x_m^d + sum p_i(y, x~) x_m^{d-i}.

    Obtained by Weierstrass-dividing x_m^d by g: the remainder gives -p_i and
    the quotient's inverse gives u.  Checks u*P == g to the effective order.
    """
    nv = g.split.nvars
    xmd = Series.monomial(g.split, (0,) * (nv - 1) + (d,), 1, g.order)
    q, rem = weierstrass_divide(xmd, g, d, order)
    p_poly = rem.scale_all(-1)
    for k, coeff in enumerate(p_poly.coeffs):
        if coeff.constant_term():
            raise RegularityError(
                f"preparation failed: coefficient of x_m^{k} does not vanish at the origin")
    dist = p_poly.with_monic_term(d)
    if q.constant_term() == 0:
        raise RegularityError("preparation failed: division quotient is not a unit")
    n_work = order if g.order is None else min(order, g.order)
    n_eff = n_work - d
    cutoff = n_work if q.exact else q.order
    u_terms, u_exact = _invert_unit_terms(q.terms, nv, cutoff)
    exact = q.exact and u_exact and g.exact and dist.is_exact()
    unit = Series(g.split, u_terms, None if exact else n_eff)
    check = unit * dist.to_series(g.split) - g
    if exact:
        if not check.is_zero():
            raise PrecisionError("preparation residual check failed")
        eff = None
    else:
        if not all(sum(e) > n_eff for e in check.terms):
            raise PrecisionError("preparation residual check failed")
        eff = n_eff
    return WeierstrassData(d=d, unit=unit, distinguished=dist, effective_order=eff)


class XmPolynomial:
    """A polynomial in the last fiber variable with Series coefficients.

    Coefficients live in the reduced split (base variables plus all fiber
    variables except the last); index k holds the coefficient of x_m^k.
    """

    __slots__ = ("split", "coeffs")

    def __init__(self, split: VarSplit, coeffs: Sequence[Series]):
        coeffs = list(coeffs)
        while coeffs and coeffs[-1].is_zero():
            coeffs.pop()
        self.split = split          # the reduced split of the coefficients
        self.coeffs = coeffs

    @staticmethod
    def zero(split: VarSplit) -> "XmPolynomial":
        return XmPolynomial(split, [])

    @staticmethod
    def from_series(f: Series) -> "XmPolynomial":
        """Read off x_m-coefficients; coefficient k is certified to order - k."""
        if f.split.m < 1:
            raise SeriesError("from_series needs a fiber variable to split off")
        red = f.split.drop_last_fiber()
        deg = max((e[-1] for e in f.terms), default=-1)
        coeffs = []
        for k in range(deg + 1):
            terms = {e[:-1]: c for e, c in f.terms.items() if e[-1] == k}
            order = None if f.order is None else f.order - k
            coeffs.append(Series(red, terms, order))
        return XmPolynomial(red, coeffs)

    def to_series(self, split: VarSplit) -> Series:
        """Assemble back into the full split (last fiber variable restored).

        A term with x_m-degree k is certified when its reduced degree is
        within coefficient k's order, so the weakest order + k wins.
        """
        terms: dict = {}
        order = None
        for k, coeff in enumerate(self.coeffs):
            if coeff.order is not None:
                cand = coeff.order + k
                order = cand if order is None else min(order, cand)
            for e, c in coeff.terms.items():
                terms[e + (k,)] = c
        return Series(split, terms, order)

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> Series:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Series.zero(self.split)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_exact(self) -> bool:
        return all(c.exact for c in self.coeffs)

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1].same_terms(Series.one(self.split))

    def scale_all(self, c: Coeff) -> "XmPolynomial":
        return XmPolynomial(self.split, [coeff.scale(c) for coeff in self.coeffs])

    def with_monic_term(self, d: int) -> "XmPolynomial":
        """Pad to degree d and set the leading coefficient to 1."""
        if self.degree() >= d:
            raise SeriesError("lower part already reaches the monic degree")
        coeffs = list(self.coeffs) + [Series.zero(self.split)] * (d - len(self.coeffs))
        coeffs.append(Series.one(self.split))
        return XmPolynomial(self.split, coeffs)

    def add(self, other: "XmPolynomial") -> "XmPolynomial":
        size = max(len(self.coeffs), len(other.coeffs))
        return XmPolynomial(self.split, [self.coefficient(k) + other.coefficient(k)
                                         for k in range(size)])

    def sub(self, other: "XmPolynomial") -> "XmPolynomial":
        return self.add(other.scale_all(-1))

    def mul_series(self, s: Series) -> "XmPolynomial":
        return XmPolynomial(self.split, [c * s for c in self.coeffs])

    def shift(self, k: int) -> "XmPolynomial":
        """Multiply by x_m^k."""
        if self.is_zero():
            return self
        return XmPolynomial(self.split, [Series.zero(self.split)] * k + self.coeffs)

    def mul(self, other: "XmPolynomial") -> "XmPolynomial":
        if self.is_zero() or other.is_zero():
            return XmPolynomial.zero(self.split)
        out = [Series.zero(self.split)
               for _ in range(self.degree() + other.degree() + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return XmPolynomial(self.split, out)

    def __eq__(self, other) -> bool:
        return (isinstance(other, XmPolynomial) and self.split == other.split
                and self.coeffs == other.coeffs)

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = [f"({coeff})*T^{k}" if k else f"({coeff})"
                 for k, coeff in enumerate(self.coeffs) if not coeff.is_zero()]
        return " + ".join(parts)


def euclid_divide(f: XmPolynomial, p: XmPolynomial) -> tuple[XmPolynomial, XmPolynomial]:
    """Long division by a monic polynomial in x_m: f = quot*p + rem.

    Exact in the x_m-grading; coefficients follow ordinary series arithmetic
    (truncated at the working order of the operands).
    """
    if not p.is_monic():
        raise SeriesError("Euclidean division requires a monic divisor")
    d = p.degree()
    rem_coeffs = list(f.coeffs)
    quot = [Series.zero(f.split) for _ in range(max(0, len(rem_coeffs) - d))]
    for k in range(len(rem_coeffs) - 1, d - 1, -1):
        lead = rem_coeffs[k]
        if lead.is_zero():
            continue
        quot[k - d] = quot[k - d] + lead
        for i, pc in enumerate(p.coeffs):
            rem_coeffs[k - d + i] = rem_coeffs[k - d + i] - lead * pc
    rem = XmPolynomial(f.split, rem_coeffs[:d] if len(rem_coeffs) >= d else rem_coeffs)
    return XmPolynomial(f.split, quot), rem


# ---------------------------------------------------------------------------
# seeded random data for property tests


def random_series(split: VarSplit, rng: random.Random, degree: int = 2,
                  terms: int = 4, order: Optional[int] = None,
                  coeff_bound: int = 3, nonzero: bool = False) -> Series:
    """A random polynomial series with small integer coefficients."""
    pool = monomials_upto(split.nvars, degree)
    out: dict = {}
    for _ in range(terms):
        e = pool[rng.randrange(len(pool))]
        c = rng.randint(-coeff_bound, coeff_bound)
        if c:
            s = out.get(e, 0) + c
            if s:
                out[e] = Fraction(s)
            elif e in out:
                del out[e]
    if nonzero and not out:
        e = pool[rng.randrange(len(pool))]
        out[e] = Fraction(rng.choice([1, -1, 2]))
    return Series(split, out, order)
