"""
Split-step evolution of the reduced E(2) equation
=================================================

Free, isotropic E(2) reduces to the cubic Schrodinger equation in one
variable.  We evolve a bright soliton on the line and measure the error
and the convergence order.  Run with ``python3 demos/soliton_evolution.py``.
"""

import numpy as np
import sympy as sp

from lienls import catalog
from lienls.solver import Grid1D, bright_soliton, split_step_evolve

e2 = catalog.load("e2")
red = e2.reduced("free", "isotropic")
print("reduced equation:", {k: str(v) for k, v in red.coefficients().items()})

binding = {"hbar": 1.0, "m": 1.0, "delta1": 1.0, "j": 1.0, "epsilon": 1.0, "a": 2.5, "v": 0.5}
fam = bright_soliton(red, x0=sp.Rational(-1, 4))
grid = Grid1D.box(10.0, 1024)
psi0 = fam(grid.x, binding, 0.0)
print("edge amplitude %.1e, norm %.6f" % (abs(psi0[0]), grid.norm(psi0)))

# %% One unit of time at dt = 1e-3
sol = split_step_evolve(red, psi0, grid, 1e-3, 1000, binding, save_every=250)
for t, frame in zip(sol.t, sol.psi):
    err = np.max(np.abs(frame - fam(grid.x, binding, t)))
    peak = grid.x[np.argmax(np.abs(frame))]
    print(f"t = {t:5.3f}  peak at {peak:+.3f}  Linf error {err:.2e}")
print("norm drift %.1e" % sol.norm_drift())

# %% Halving the step
print("\n   dt      error    ratio")
prev = None
for dt in (0.04, 0.02, 0.01, 0.005):
    steps = int(round(1.0 / dt))
    out = split_step_evolve(red, psi0, grid, dt, steps, binding)
    err = np.max(np.abs(out.final - fam(grid.x, binding, 1.0)))
    print(f"{dt:6.3f}  {err:.3e}  " + (f"{prev / err:.2f}" if prev else ""))
    prev = err
