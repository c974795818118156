"""Tour of the exact series layer: truncated arithmetic over Q and the three
division algorithms (Weierstrass division, Weierstrass preparation, Euclidean
division by a distinguished polynomial).

Run:  python3 demos/01_series_and_division.py
"""

from flatcheck import (Series, VarSplit, XmPolynomial, euclid_divide,
                       parse_series, regularize, weierstrass_divide,
                       weierstrass_prepare, xm_order)

split = VarSplit(1, 1, ("y",), ("x",))

print("== arithmetic keeps exactness as long as nothing is discarded ==")
f = parse_series("(x + y)*(x - y)", split)
print(f"(x + y)(x - y) = {f}   exact: {f.exact}")

g = parse_series("1 + x", split)
geo = parse_series("1 - x + x^2 - x^3", split).truncate(3)
prod = g * geo
print(f"(1 + x)(1 - x + x^2 - x^3) at order 3 = {prod}   exact: {prod.exact}, order: {prod.order}")

print()
print("== Weierstrass division: f = q*g + r with deg_x r < d ==")
f = parse_series("x^2", split)
g = parse_series("x - y", split)
q, r = weierstrass_divide(f, g, d=1, order=8)
print(f"x^2 divided by (x - y):  q = {q},  r = {r.to_series(split)}  (exact: {q.exact})")
# the divisor is regular of order 1: the quotient and remainder here are the
# plain polynomial long division in x, and the computation stays exact

print()
print("== division costs precision: results are certified to order N - d ==")
g = parse_series("x^2 - y - y^2*x", split)
d = xm_order(g)
print(f"g = {g} is x-regular of order d = {d}")
q, r = weierstrass_divide(parse_series("x^3 + y*x", split), g, d, order=8)
print(f"q = {q}")
print(f"r = {r.to_series(split)}   certified to order {r.to_series(split).order}")

print()
print("== preparation: g = unit * distinguished polynomial ==")
g = parse_series("(1 + y)*(x - y)", split)
wd = weierstrass_prepare(g, 1, order=8)
print(f"g = {g}")
print(f"unit u = {wd.unit}  (u(0,0) = {wd.unit.constant_term()})")
print(f"P = {wd.distinguished_series(split)}   certified to order {wd.effective_order}")

print()
print("== Euclidean division by a monic polynomial in the last variable ==")
wd = weierstrass_prepare(parse_series("x^2 - y*x", split), 2, order=8)
p = wd.distinguished
f_poly = XmPolynomial.from_series(parse_series("x^3 + y*x", split))
quot, rem = euclid_divide(f_poly, p)
print(f"x^3 + y*x = ({quot}) * ({p}) + ({rem})   [T stands for x]")

print()
print("== regularization by a seeded linear change ==")
split2 = VarSplit(0, 2)
g = parse_series("x1", split2)  # not regular in x2
change, d = regularize(g, seed=3)
print(f"g = x1 needs a change of coordinates; found d = {d} via seed tag {change.seed}")
print("matrix rows:", [[str(v) for v in row] for row in change.matrix])
