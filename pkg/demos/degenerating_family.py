"""Critical points of x(x + y)(x - y + t z) run off to infinity as t -> 0.

At t = 0 the arrangement stops being essential, the top Betti number of the
projective complement drops to 0 and no top-stage critical points are left.

Run:  python demos/degenerating_family.py
"""

from fractions import Fraction

from milnorcells import parse_arrangement
from milnorcells.analysis import family_scan

family = parse_arrangement("vars: x y z\nparam: t\nform: x\nform: x + y\nform: x - y + t z\n")
values = [Fraction(1), Fraction(1, 2), Fraction(1, 10), Fraction(1, 100), Fraction(0)]

print(f"{'t':>6} {'predicted':>9} {'found':>5} {'max |z_i|':>12} {'54^(1/3)/t':>12}")
for row in family_scan(family, values).rows:
    top = row.top
    expected = f"{54 ** (1 / 3) / float(row.t):12.4f}" if row.t else f"{'-':>12}"
    print(f"{str(row.t):>6} {top.predicted:9d} {top.found:5d} {row.max_solution_norm:12.4f} {expected}")
