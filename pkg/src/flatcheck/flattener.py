"""The local flattener ideal and openness of flatness at rational points.

The flattener ideal I(F) is accumulated level by level along the same
recursion the flatness engine walks: each level contributes the coefficient
ideal of its reduced complement (the minimal J with ker(psi) inside J.A^l),
and the recursion proceeds on the multiplication matrix until g becomes a
unit.  Restricting to V(I(F)) is flat; dropping any generator that the rest
do not already contain must break flatness, which is probed generator by
generator (full universality over arbitrary subgerms is not decidable at
this scale and is reported as "probed").

Openness: re-centering the germ at a rational point eta of V(I(F)) and
recomputing the flattener must land inside the translated ideal.  The
translation is exact on polynomial data only, which is the regime checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .criterion import (EngineConfig, FlatnessVerdict, Presentation,
                        build_reduction, check_flat)
from .ringlinalg import (BlockDecomposition, Ideal, MembershipVerdict,
                         choose_block, coefficient_ideal, ideal_contains,
                         ideal_sum, make_ideal, reduced_complement)
from .series import PrecisionError, Series, SeriesError

__all__ = [
    "FlattenerResult",
    "BasePoint",
    "FlattenerReport",
    "OpennessReport",
    "level_ideal",
    "flattener_ideal",
    "verify_flattener",
    "translate_base",
    "openness_check",
]


@dataclass(frozen=True)
class BasePoint:
    """A rational point of the base space."""

    coordinates: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coordinates",
                           tuple(Fraction(c) for c in self.coordinates))

    def is_origin(self) -> bool:
        return all(c == 0 for c in self.coordinates)

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coordinates) + ")"


@dataclass
class FlattenerResult:
    """Level ideals and their sum I(F), with the certification order."""

    levels: list[tuple[int, Ideal]]
    total: Ideal
    effective_order: object            # int or "exact"

    def generators(self) -> tuple[Series, ...]:
        return self.total.generators


def level_ideal(dec: BlockDecomposition, order: int) -> Ideal:
    """The minimal ideal J with ker(psi) in J.A^l: the coefficient ideal of
    the reduced complement (both sandwich inclusions collapse to it after
    cancellation by g)."""
    return coefficient_ideal(reduced_complement(dec), order)


def flattener_ideal(pres: Presentation, config: EngineConfig) -> FlattenerResult:
    """Accumulate I(F) = sum of level ideals along the reduction recursion.

    Terminates at unit-g branches; raises PrecisionError/RegularityError
    like the flatness engine when the order budget dies first.
    """
    levels: list[tuple[int, Ideal]] = []
    total = make_ideal([])
    phi = pres.phi
    split = pres.split
    order = config.order
    exact = pres.phi.is_exact()
    level = 0
    while True:
        dec = choose_block(phi, order)
        ideal = level_ideal(dec, order)
        mcomplement = reduced_complement(dec)
        if not mcomplement.is_exact():
            exact = False
        levels.append((level, ideal))
        total = ideal_sum(total, ideal)
        if dec.g_is_unit():
            break
        if level + 1 >= config.depth_limit(pres.split.m):
            raise PrecisionError(f"recursion depth limit at level {level}")
        red = build_reduction(dec, config, order)
        next_order = order - red.d
        if next_order < 1:
            raise PrecisionError("order budget exhausted by division")
        if red.effective_order is not None:
            exact = False
            next_order = min(next_order, red.effective_order)
        split = split.drop_last_fiber()
        phi = red.g_matrix
        order = next_order
        level += 1
    return FlattenerResult(levels=levels, total=total,
                           effective_order="exact" if exact else order)


@dataclass
class FlattenerProbe:
    dropped_generator: str
    comparison_ideal: str
    skipped: bool                     # True when the rest already contain it
    verdict: Optional[str] = None     # expected "not_flat"

    @property
    def ok(self) -> bool:
        return self.skipped or self.verdict == "not_flat"


@dataclass
class FlattenerReport:
    """Restriction flatness plus per-generator universality probes."""

    restriction: FlatnessVerdict
    probes: list[FlattenerProbe]
    universality: str = "probed"

    @property
    def ok(self) -> bool:
        return self.restriction.is_flat and all(p.ok for p in self.probes)


def verify_flattener(pres: Presentation, result: FlattenerResult,
                     config: EngineConfig) -> FlattenerReport:
    """(a) restriction to V(I(F)) is flat; (b) dropping a generator the
    others do not span must break flatness (universality, probed on the
    finitely many single-generator comparisons)."""
    restriction = check_flat(pres, result.total, config)
    probes = []
    gens = result.total.generators
    for i, gen in enumerate(gens):
        rest = make_ideal([g for k, g in enumerate(gens) if k != i])
        inside = ideal_contains(rest, gen, config.order).is_member if rest.generators else gen.is_zero()
        if inside:
            probes.append(FlattenerProbe(dropped_generator=str(gen),
                                         comparison_ideal=str(rest), skipped=True))
            continue
        verdict = check_flat(pres, rest, config)
        probes.append(FlattenerProbe(dropped_generator=str(gen),
                                     comparison_ideal=str(rest), skipped=False,
                                     verdict=verdict.status))
    return FlattenerReport(restriction=restriction, probes=probes)


def translate_base(pres: Presentation, eta: BasePoint) -> Presentation:
    """Re-center the germ at eta: substitute y -> y + eta in every entry.

    Exact on polynomial data (jets cannot be translated soundly)."""
    if len(eta.coordinates) != pres.split.n:
        raise SeriesError("base point dimension does not match the split")
    if eta.is_origin():
        return pres
    phi = pres.phi.apply(lambda e: e.shift_base(eta.coordinates))
    label = f"{pres.label} @ {eta}" if pres.label else f"translate {eta}"
    return Presentation(pres.split, phi, label)


@dataclass
class OpennessReport:
    point: BasePoint
    in_zero_set: bool
    translated_ideal: Optional[str] = None
    local_ideal: Optional[str] = None
    verdicts: Optional[list[tuple[str, MembershipVerdict]]] = None

    @property
    def contained(self) -> Optional[bool]:
        if not self.in_zero_set or self.verdicts is None:
            return None
        return all(v.is_member for _, v in self.verdicts)


def openness_check(pres: Presentation, eta: BasePoint, config: EngineConfig) -> OpennessReport:
    """Theorem-of-openness check at one rational point: the flattener ideal
    recomputed at eta is contained in the ideal generated by the translated
    generators of I(F).  A point outside V(I(F)) is reported as a
    precondition violation, not raised."""
    base_result = flattener_ideal(pres, config)
    values = [g.evaluate_base_point(eta.coordinates).constant_term()
              for g in base_result.total.generators]
    if any(v != 0 for v in values):
        return OpennessReport(point=eta, in_zero_set=False,
                              local_ideal=str(base_result.total))
    translated = make_ideal([g.shift_base(eta.coordinates)
                             for g in base_result.total.generators])
    local = flattener_ideal(translate_base(pres, eta), config)
    verdicts = []
    for gen in local.total.generators:
        verdicts.append((str(gen), ideal_contains(translated, gen, config.order)))
    return OpennessReport(point=eta, in_zero_set=True,
                          translated_ideal=str(translated),
                          local_ideal=str(local.total), verdicts=verdicts)
