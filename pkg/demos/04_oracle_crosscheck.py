"""The independent jet-kernel oracle: kernel computations, the direct
flatness test, and cross-validation against the inductive engine.

Run:  python3 demos/04_oracle_crosscheck.py
"""

import random

from flatcheck import (EngineConfig, Presentation, SeriesMatrix, VarSplit,
                       cross_validate, direct_flatness_test,
                       jet_kernel_at_origin, jet_kernel_mod_J, make_ideal,
                       parse_series)
from flatcheck.series import random_series

config = EngineConfig(order=8, seed=0)
split = VarSplit(1, 1, ("y",), ("x",))
base = split.base_only()


def matrix(rows, sp=split):
    return SeriesMatrix(sp, [[parse_series(t, sp) for t in row] for row in rows])


print("== jet kernels at the origin and modulo J ==")
phi = matrix([["x*y"]])
k0 = jet_kernel_at_origin(phi, 8)
print(f"phi = [x*y]: phi(0, x) = [0], so every jet is a kernel vector: "
      f"dim = {k0.dimension()}")
k1 = jet_kernel_mod_J(phi, make_ideal([parse_series("y", base)]), 8)
print(f"modulo J = (y): dim = {k1.dimension()} (the constant 1 lifts: "
      f"x*y * 1 lies in (y).A)")

print()
print("== the direct flatness test (kernel equality after evaluation) ==")
for label, rows, J in [
    ("A/(xy) over (0)", [["x*y"]], make_ideal([])),
    ("A/(xy) over (y)", [["x*y"]], make_ideal([parse_series("y", base)])),
    ("A/(x^2 - y) over (0)", [["x^2 - y"]], make_ideal([])),
]:
    verdict = direct_flatness_test(Presentation(split, matrix(rows)), J, config)
    extra = ""
    if verdict.witness:
        extra = "  witness zeta = (" + ", ".join(str(s) for s in verdict.witness) + ")"
    print(f"  {label}: {verdict.status} (window {verdict.window}){extra}")

print()
print("== engine and oracle cross-validated on seeded random modules ==")
rng = random.Random(12345)
agree = 0
for trial in range(6):
    q, p = rng.randint(1, 2), rng.randint(1, 2)
    phi = SeriesMatrix(split, [[random_series(split, rng, degree=2, terms=3)
                                for _ in range(p)] for _ in range(q)])
    cv = cross_validate(Presentation(split, phi, f"random {trial}"), make_ideal([]), config)
    print(f"  random {trial}: engine={cv.engine.status:12s} oracle={cv.oracle.status:14s} "
          f"agreement={cv.agreement} rank+kernel consistent={cv.proposition_consistent}")
    agree += bool(cv.ok)
print(f"  {agree}/6 consistent (mismatches would be hard failures)")
