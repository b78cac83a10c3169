"""Independent oracle for the cutoff g(s) = exp(1 - 1/(1 - s^2)) and m_g.

Derivatives come from sympy (symbolic differentiation), the dense scan from numpy.
Point values are evaluated in 50-digit arithmetic. Writes tests/fixtures/cutoff_oracle.txt.
"""
import pathlib

import mpmath
import numpy as np
import sympy as sp

s = sp.symbols("s", real=True)
g = sp.exp(1 - 1 / (1 - s**2))
g1 = sp.diff(g, s)
g2 = sp.diff(g, s, 2)
f1 = sp.lambdify(s, g1, "numpy")
f2 = sp.lambdify(s, g2, "numpy")

grid = np.linspace(-1.0, 1.0, 1_000_001)
inner = grid[np.abs(grid) < 1.0]
with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
    expr = np.abs(f1(inner)) + 2.0 * np.abs(f2(inner)) * inner
expr = np.nan_to_num(expr, nan=0.0)
k = int(np.argmax(expr))
sup = float(expr[k])

# refine with a continuous maximizer to bound the grid error
h = sp.Abs(g1) + 2 * sp.Abs(g2) * s
hf = sp.lambdify(s, -h, "mpmath")
mpmath.mp.dps = 30
s_star = mpmath.findroot(lambda t: mpmath.diff(lambda u: hf(u), t), inner[k])
sup_cont = float(-hf(s_star))

mpmath.mp.dps = 50
lines = [f"sup_grid = {sup!r}", f"s_grid = {float(inner[k])!r}", f"sup_continuous = {sup_cont!r}",
         f"s_continuous = {float(s_star)!r}"]
for p in (1.2, 1.5, 1.8, 1.9, 1.95):
    lines.append(f"m_g[{p}] = {(1.0 + sup) / (p - 1.0) * 1.001!r}")
for t in ("0", "0.25", "0.5", "0.75", "0.9", "-0.6"):
    tv = mpmath.mpf(t)
    vals = [sp.N(e.subs(s, sp.Rational(t)), 40) for e in (g, g1, g2)]
    lines.append(f"g[{t}] = {float(vals[0])!r} {float(vals[1])!r} {float(vals[2])!r}")
out = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "cutoff_oracle.txt"
out.write_text("\n".join(lines) + "\n")
print("\n".join(lines))
