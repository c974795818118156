"""Local flattener ideals: level-by-level accumulation, verification of the
restriction, universality probes, and openness at rational base points.

Run:  python3 demos/03_flattener_and_openness.py
"""

from fractions import Fraction

from flatcheck import (BasePoint, EngineConfig, Presentation, SeriesMatrix,
                       VarSplit, flattener_ideal, openness_check, parse_series,
                       translate_base, verify_flattener)

config = EngineConfig(order=8, seed=0)
split2 = VarSplit(2, 1, ("y1", "y2"), ("x",))


def presentation(rows, sp, label):
    return Presentation(sp, SeriesMatrix(sp, [[parse_series(t, sp) for t in row]
                                              for row in rows]), label)


print("== the blow-up chart: flattener is the origin ==")
blow = presentation([["y1*x - y2"]], split2, "blow-up chart")
result = flattener_ideal(blow, config)
for level, ideal in result.levels:
    print(f"  level {level} contributes {ideal}")
print(f"  I(F) = {result.total}   [{result.effective_order}]")

report = verify_flattener(blow, result, config)
print(f"  restriction to V(I(F)) flat: {report.restriction.status}")
for probe in report.probes:
    print(f"  dropping {probe.dropped_generator}: restriction to {probe.comparison_ideal} "
          f"is {probe.verdict}")
print(f"  universality: {report.universality}")

print()
print("== a witness that appears only after reduction ==")
split1 = VarSplit(1, 1, ("y",), ("x",))
rowcase = presentation([["x", "y"], ["0", "0"]], split1, "A/(x,y) + A")
result = flattener_ideal(rowcase, config)
for level, ideal in result.levels:
    print(f"  level {level} contributes {ideal}")
print(f"  I(F) = {result.total}")

print()
print("== openness of flatness at rational points ==")
plane = presentation([["y1*x"]], split2, "A/(y1 x)")
result = flattener_ideal(plane, config)
print(f"  I(F) = {result.total}; its zero set is the y2-axis")
for pt in [(0, 0), (0, Fraction(1, 2)), (0, -1)]:
    eta = BasePoint((Fraction(pt[0]), Fraction(pt[1])))
    rep = openness_check(plane, eta, config)
    print(f"  at {eta}: recomputed ideal {rep.local_ideal} inside translated "
          f"{rep.translated_ideal}: {rep.contained}")

print()
print("== translation off the locus makes the germ flat ==")
moved = translate_base(blow, BasePoint((Fraction(1), Fraction(0))))
print(f"  entry at (1, 0): {moved.phi.entry(0, 0)}")
from flatcheck import check_flat, make_ideal
print(f"  flatness over the full base there: "
      f"{check_flat(moved, make_ideal([]), config).status}")
