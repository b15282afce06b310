"""Cell counts for Q = x(x - y)(x + y - z), predicted and then found numerically.

Run:  python demos/worked_example.py
"""

import numpy as np

from milnorcells import Arrangement, TrackerOptions, analyze
from milnorcells.lattice import build_lattice, poincare, predict_cells

arr = Arrangement.from_rows([[1, 0, 0], [1, -1, 0], [1, 1, -1]], ("x", "y", "z"))

pd = poincare(build_lattice(arr))
cells = predict_cells(pd, arr.n)
print("P(M)  coefficients:", pd.p_M)
print("P(M*) coefficients:", pd.p_Mstar)
print("predicted cells of F :", cells.c_F)

rep = analyze(arr, TrackerOptions(seed=0))
print("found cells of F     :", rep.found())
for s in rep.stages:
    print(f"  stage {s.stage_dim}: {s.found} critical points out of {s.bezout} paths, "
          f"{s.diverged} at infinity, indices {sorted(set(s.indices))}")

# the top stage has a closed form: y = 3x, z = 6x with 4x^3 = 1
top = rep.stage(3).solutions
print("top-stage points (x, y/x, z/x):")
for z in top:
    print(f"  x = {z[0]:.10f}   y/x = {(z[1] / z[0]).real:.10f}   z/x = {(z[2] / z[0]).real:.10f}")
print("max |4x^3 - 1| =", float(np.max(np.abs(4 * top[:, 0] ** 3 - 1))))
print("PASS" if rep.passed else "FAIL")
