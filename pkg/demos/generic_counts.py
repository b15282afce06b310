"""Generic plane arrangements in 3-space: n(n-1)(n-2)/2 top cells, n*C(n,2) paths at infinity.

Run:  python demos/generic_counts.py [seed]
"""

import random
import sys
from math import comb

from milnorcells import Arrangement, TrackerOptions, analyze
from milnorcells.lattice import build_lattice


def random_generic(rng, n):
    # Vandermonde-like rows (1, a, a^2) are in general position for distinct a
    while True:
        a = rng.sample(range(-5, 6), n)
        arr = Arrangement.from_rows([[1, v, v * v] for v in a])
        lat = build_lattice(arr)
        if all(len(f.members) == f.rank for f in lat.flats if f.rank < 3):
            return arr


rng = random.Random(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
print(f"{'n':>2} {'c_F':>14} {'top found':>9} {'expected':>8} {'at infinity':>11} {'expected':>8}")
for n in range(3, 7):
    arr = random_generic(rng, n)
    rep = analyze(arr, TrackerOptions(seed=n))
    top = rep.stage(3)
    print(f"{n:2d} {str(rep.found()):>14} {top.found:9d} {n * (n - 1) * (n - 2) // 2:8d} "
          f"{top.diverged:11d} {n * comb(n, 2):8d}")
