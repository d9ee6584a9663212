"""
The motion group of the plane, step by step
===========================================

From the composition law of E(2) to a lifted soliton of the group
Schrodinger equation.  Run with ``python3 demos/e2_walkthrough.py``.
"""

import numpy as np
import sympy as sp

from lienls import catalog
from lienls.algebra import dual_symbols, index
from lienls.group import commutator_residual, haar_density
from lienls.orbit import casimir_scalar
from lienls.reduction import factorization_check, generator_transport_check

e2 = catalog.load("e2")
print(e2.title)
print("index:", index(e2.algebra))

# %% Invariant frames come from differentiating the composition law
print("\nleft-invariant fields")
for op in e2.xi.operators():
    print("  ", op)
print("right-invariant fields")
for op in e2.eta.operators():
    print("  ", op)
print("commutator residuals:", commutator_residual(e2.xi, e2.algebra), commutator_residual(e2.eta, e2.algebra))
print("Haar density:", haar_density(e2.chart))

# %% Right-invariant metric and its curvature
geo = e2.geometry()
print("\nscalar curvature:", sp.factor(geo.scalar_curvature))
d1, d2 = sp.Symbol("delta1", real=True), sp.Symbol("delta2", real=True)
print("isotropic case:", sp.simplify(geo.scalar_curvature.subs(d2, d1)))
L = geo.laplacian
print("Laplacian has", len(L.terms), "terms; d_x d_y coefficient:", sp.simplify(L.coefficient_by_name("x", "y")))

# %% Orbit through (j, 0, 0) and its lambda-representation
orbit = e2.orbit()
rep = e2.rep_in_q()
print("\norbit dimension:", orbit.dim, " reduced variables:", orbit.reduced_dim)
for a, op in enumerate(rep.ops, 1):
    print(f"  l{a} =", op)
f = dual_symbols(3)
print("K(-i hbar l) =", casimir_scalar(f[0] ** 2 + f[1] ** 2, rep))

# %% The D-kernel carries eta_a into l_a; reduce the equation
print("\ntransport residual:", generator_transport_check(e2.ansatz(), e2.rep(), e2.eta))
red = e2.reduced()
for k, v in red.coefficients().items():
    print(f"  {k} = {sp.simplify(v)}")
r = factorization_check(geo, e2.equation(), red, e2.ansatz())
print("factorization residual:", r)

# %% A soliton of the reduced equation, lifted back to the group
fam = catalog.solution_family(e2, "soliton")
print("\nsoliton family parameters:", fam.params)
res = catalog.solution_residuals(e2, "soliton", points=1000, seed=1)
print("reduced residual %.2e, lifted residual %.2e" % (res["reduced"], res["lifted"]))
binding = {"hbar": 1.0, "m": 1.0, "delta1": 1.0, "j": 1.0, "epsilon": 1.0, "a": 1.0, "v": 0.5}
xs = np.linspace(-4, 4, 9)
print("|psi(qp, t=0)|^2 on a coarse grid:")
print(np.round(np.abs(fam(xs, binding)) ** 2, 4))
