"""Orbit-method layer: orbit dimension, polarizations, lambda-representations,
Casimir quantization and the D-kernel data of the induced representation.

Reduced coordinates ``q`` come from a *polarized* chart in which every group
element is written ``g = h s(q)``: the leftmost exponential factors belong to
the polarization subgroup ``H`` and the trailing ones to ``q``.  The
lambda-representation is read off the left-invariant frame at ``h = e_H``::

    l_a = xi_a^{q}(q) d_q + (i/hbar) xi_a^{alpha}(q, e_H) (lambda_alpha + i hbar beta_alpha)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from . import expr as X
from .algebra import LieAlgebra, Subalgebra, beta_covector, dual_symbols, numeric_rank
from .errors import NonScalarError, PolarizationError, RankInstabilityError, SplitIncompatibleError
from .group import GroupChart, left_invariant_frame
from .operators import DifferentialOperator, symmetrized_product

__all__ = [
    "OrbitData",
    "LambdaRep",
    "DKernelSpec",
    "orbit_dim",
    "polarization_check",
    "lambda_rep",
    "quantize",
    "casimir_scalar",
    "rep_commutator_residual",
    "rep_symmetry_residual",
    "induced_rep_apply",
]


def _covector(lam) -> tuple[sp.Expr, ...]:
    return tuple(X.parse(v) if isinstance(v, str) else sp.sympify(v) for v in lam)


def orbit_dim(A: LieAlgebra, lam: Sequence, samples: int = 8, seed: int = 0) -> int:
    """Rank of ``C^c_ab lambda_c``; symbolic components are sampled and must agree."""
    lam = _covector(lam)
    M = A.poisson_tensor(lam)
    names = sorted(set().union(*(X.free_names(v) for v in lam)))
    if not names:
        return numeric_rank(np.array(M.evalf(), dtype=complex))
    rng = np.random.default_rng(seed)
    pts = X.sample_bindings(names, None, samples, rng)
    ranks = set()
    for k in range(samples):
        b = {X.sym(n): pts[n][k] for n in names}
        ranks.add(numeric_rank(np.array(M.subs(b).evalf(), dtype=complex)))
    if len(ranks) != 1:
        raise RankInstabilityError(f"orbit dimension differs between parameter samples: {sorted(ranks)}")
    return ranks.pop()


@dataclass(frozen=True)
class OrbitData:
    covector: tuple  # lambda_a as expressions
    polarization: Subalgebra
    dim: int
    beta: tuple  # on the polarization basis
    casimir_values: tuple = ()

    @property
    def reduced_dim(self) -> int:
        return self.dim // 2


def polarization_check(A: LieAlgebra, lam: Sequence, h: Subalgebra) -> OrbitData:
    """Validate a real polarization at ``lam`` and assemble the orbit data."""
    lam = _covector(lam)
    if not h.is_closed(A):
        raise PolarizationError("closure", "[h, h] is not contained in h")
    for u, v in itertools.combinations(h.basis, 2):
        w = A.bracket(u, v)
        pairing = sp.simplify(sum(lam[c] * sp.Rational(w[c]) for c in range(A.dim)))
        if pairing != 0:
            raise PolarizationError("isotropy", f"<lambda, [u, v]> = {pairing} for u={u}, v={v}")
    d = orbit_dim(A, lam)
    if h.dim != A.dim - d // 2:
        raise PolarizationError("dimension", f"dim h = {h.dim}, expected {A.dim - d // 2}")
    f = dual_symbols(A.dim)
    values = tuple(sp.simplify(K.xreplace(dict(zip(f, lam)))) for K in A.casimirs)
    return OrbitData(lam, h, d, beta_covector(A, h), values)


@dataclass(frozen=True)
class LambdaRep:
    """``l_a = A_a(q) d_q + B_a(q)`` on the reduced coordinates."""

    ops: tuple  # DifferentialOperator per generator
    coords: tuple  # reduced coordinate symbols
    rho: sp.Expr = sp.Integer(1)
    periodic: bool = False
    domain: tuple = (-np.inf, np.inf)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def A(self, a: int, k: int = 0) -> sp.Expr:
        alpha = [0] * self.dim
        alpha[k] = 1
        return self.ops[a].coefficient(alpha)

    def B(self, a: int) -> sp.Expr:
        return self.ops[a].coefficient((0,) * self.dim)

    def renamed(self, names: Sequence[str]) -> "LambdaRep":
        new = tuple(X.sym(n) for n in names)
        m = dict(zip(self.coords, new))
        return LambdaRep(
            tuple(op.rename(new) for op in self.ops), new, sp.sympify(self.rho).xreplace(m), self.periodic, self.domain
        )


def lambda_rep(chart: GroupChart, A: LieAlgebra, orbit: OrbitData, hbar: sp.Symbol = X.HBAR) -> LambdaRep:
    """lambda-representation from the left frame of a polarized chart."""
    gen_h = orbit.polarization.coordinate_indices()
    if gen_h is None:
        raise SplitIncompatibleError("polarization must be spanned by basis vectors of the chart")
    h_coords = [chart.coordinate_for(a) for a in gen_h]
    q_coords = [k for k in range(chart.dim) if k not in h_coords]
    if len(q_coords) != orbit.reduced_dim:
        raise SplitIncompatibleError(f"chart leaves {len(q_coords)} reduced coordinates, orbit needs {orbit.reduced_dim}")
    pos = {k: i for i, k in enumerate(chart.factors)}
    if q_coords and max(pos[k] for k in h_coords) > min(pos[k] for k in q_coords):
        raise SplitIncompatibleError("subgroup factors must precede the reduced coordinates (g = h s(q))")
    xi = left_invariant_frame(chart, A)
    at_eH = {chart.symbols[k]: chart.identity[k] for k in h_coords}
    qs = tuple(chart.symbols[k] for k in q_coords)
    beta = dict(zip(gen_h, orbit.beta))
    ops = []
    for a in range(A.dim):
        terms = {}
        for i, k in enumerate(q_coords):
            c = sp.simplify(xi.matrix[a, k].xreplace(at_eH))
            if c != 0:
                alpha = [0] * len(qs)
                alpha[i] = 1
                terms[tuple(alpha)] = c
        b = 0
        for k in h_coords:
            g = chart.coords[k].generator
            b += xi.matrix[a, k].xreplace(at_eH) * (orbit.covector[g] + sp.I * hbar * sp.Rational(beta[g]))
        b = sp.simplify(sp.I / hbar * b)
        if b != 0:
            terms[(0,) * len(qs)] = b
        ops.append(DifferentialOperator(qs, terms))
    if not q_coords:
        # zero-dimensional orbit: every l_a is a constant
        return LambdaRep(tuple(ops), qs, sp.Integer(1), False, ())
    periodic = len(q_coords) == 1 and chart.coords[q_coords[0]].periodic
    c = chart.coords[q_coords[0]]
    rep = LambdaRep(tuple(ops), qs, sp.Integer(1), periodic, (c.lo, c.hi))
    return LambdaRep(rep.ops, qs, _solve_rho(rep), periodic, (c.lo, c.hi))


def _solve_rho(rep: LambdaRep) -> sp.Expr:
    """Density making ``-i hbar l_a`` symmetric (one reduced variable).

    Symmetry requires ``(log rho)' = (2 Re B_a - A_a') / A_a`` for every ``a``
    with ``A_a != 0``.
    """
    if rep.dim != 1:
        return sp.Integer(1)
    q = rep.coords[0]
    for a in range(len(rep.ops)):
        Aa = rep.A(a)
        if Aa == 0:
            continue
        Ba = rep.B(a)
        reB = sp.simplify((Ba + sp.conjugate(Ba)) / 2)
        rhs = sp.simplify((2 * reB - sp.diff(Aa, q)) / Aa)
        return sp.simplify(sp.exp(sp.integrate(rhs, q)))
    return sp.Integer(1)


def rep_commutator_residual(rep: LambdaRep, A: LieAlgebra, box=None, seed: int = 0) -> float:
    """Max coefficient mismatch of ``[l_a, l_b] - C^c_ab l_c`` at sampled points."""
    n = len(rep.ops)
    worst = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            lhs = rep.ops[a].commutator(rep.ops[b])
            rhs = DifferentialOperator(rep.coords)
            for c in range(n):
                if A.C[c][a][b]:
                    rhs = rhs + rep.ops[c].scale(sp.Rational(A.C[c][a][b]))
            diff = (lhs - rhs).simplify()
            for coeff in diff.terms.values():
                worst = max(worst, X.equiv(coeff, 0, box=box or _rep_box(rep), seed=seed).max_error)
    return worst


def rep_symmetry_residual(rep: LambdaRep, binding: dict, n: int = 4096, seed: int = 0) -> float:
    """Max over generators of ``|<P u, v> - <u, P v>|`` for ``P = -i hbar l_a``.

    Quadrature on ``[0, 2 pi)`` for a periodic variable, otherwise on a wide
    interval with Gaussian test functions.
    """
    if rep.dim != 1:
        raise NotImplementedError("symmetry check implemented for one reduced variable")
    rng = np.random.default_rng(seed)
    q = rep.coords[0]
    hbar = complex(binding.get("hbar", 1.0))
    if rep.periodic:
        x = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        w = np.full(n, 2 * np.pi / n)
        k1, k2 = rng.integers(1, 4, 2)
        c1, c2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        u = np.exp(np.cos(x)) * np.exp(1j * k1 * x) * c1
        du = (-np.sin(x) + 1j * k1) * u
        v = np.exp(np.sin(2 * x)) * np.exp(-1j * k2 * x) * c2
        dv = (2 * np.cos(2 * x) - 1j * k2) * v
    else:
        x = np.linspace(-12.0, 12.0, n)
        w = np.full(n, x[1] - x[0])
        w[0] = w[-1] = w[0] / 2
        a1, a2 = rng.uniform(-1, 1, 2)
        k1, k2 = rng.uniform(-2, 2, 2)
        u = np.exp(-((x - a1) ** 2) + 1j * k1 * x)
        du = (-2 * (x - a1) + 1j * k1) * u
        v = np.exp(-0.5 * (x - a2) ** 2 - 1j * k2 * x)
        dv = (-(x - a2) - 1j * k2) * v
    names = sorted({q.name} | set().union(*(X.free_names(c) for op in rep.ops for c in op.terms.values())) | X.free_names(rep.rho))
    args = [x if nm == q.name else np.full_like(x, binding[nm]) for nm in names]
    rho = X.compile_expr(rep.rho, names)(*args)
    worst = 0.0
    for a in range(len(rep.ops)):
        Aa = X.compile_expr(rep.A(a), names)(*args)
        Ba = X.compile_expr(rep.B(a), names)(*args)
        Pu = -1j * hbar * (Aa * du + Ba * u)
        Pv = -1j * hbar * (Aa * dv + Ba * v)
        lhs = np.sum(np.conj(Pu) * v * rho * w)
        rhs = np.sum(np.conj(u) * Pv * rho * w)
        worst = max(worst, abs(lhs - rhs))
    return worst


def quantize(K: sp.Expr, ops: Sequence[DifferentialOperator], hbar: sp.Symbol = X.HBAR) -> DifferentialOperator:
    """``K(-i hbar l)`` with each monomial symmetrized over orderings."""
    f = dual_symbols(len(ops))
    poly = sp.Poly(sp.expand(K), *f)
    coords = ops[0].coords
    total = DifferentialOperator(coords)
    P = [op.scale(-sp.I * hbar) for op in ops]
    for monom, coeff in poly.terms():
        factors = [P[a] for a, k in enumerate(monom) for _ in range(k)]
        if not factors:
            total = total + DifferentialOperator.scalar(coords, coeff)
            continue
        total = total + symmetrized_product(factors).scale(coeff)
    return total.simplify()


def casimir_scalar(K: sp.Expr, rep: LambdaRep, hbar: sp.Symbol = X.HBAR, seed: int = 0) -> sp.Expr:
    """Constant to which ``K(-i hbar l)`` collapses; raises NonScalarError otherwise."""
    op = quantize(K, rep.ops, hbar)
    zero = (0,) * rep.dim
    for alpha, c in op.terms.items():
        if alpha != zero and not X.equiv(c, 0, seed=seed, box=_rep_box(rep)):
            raise NonScalarError(f"K(-i hbar l) keeps a derivative term {alpha}: {c}")
    c0 = sp.simplify(op.coefficient(zero))
    for s in rep.coords:
        if not X.equiv(sp.diff(c0, s), 0, seed=seed, box=_rep_box(rep)):
            raise NonScalarError(f"K(-i hbar l) depends on {s}: {c0}")
    return c0


def _rep_box(rep: LambdaRep) -> dict:
    return {s.name: (-2.0, 2.0) for s in rep.coords}


@dataclass(frozen=True)
class DKernelSpec:
    """Structural kernel ``D_{qq'}(g^{-1}) = phase(g, q) delta(q' - S(q, g))``.

    ``phase`` and ``point_map`` are expressions in the chart coordinates, the
    spectator ``q`` and the orbit parameters; ``fiber_point`` lists chart
    coordinates of a group element with ``S(q, g) = qp`` (used to seed fiber
    sampling).
    """

    chart: GroupChart
    phase: sp.Expr
    point_map: sp.Expr
    measure: sp.Expr
    spectator: str = "q"
    variable: str = "qp"
    fiber_point: tuple = ()
    periodic: bool = False
    params: tuple = field(default=())

    @property
    def q(self) -> sp.Symbol:
        return X.sym(self.spectator)

    @property
    def qp(self) -> sp.Symbol:
        return X.sym(self.variable)

    def with_phase(self, phase: sp.Expr) -> "DKernelSpec":
        return DKernelSpec(self.chart, sp.sympify(phase), self.point_map, self.measure, self.spectator,
                           self.variable, self.fiber_point, self.periodic, self.params)

    def names(self) -> list[str]:
        s = set(self.chart.names) | {self.spectator}
        s |= X.free_names(self.phase) | X.free_names(self.point_map)
        return sorted(s)

    def compiled(self) -> tuple[Callable, Callable, list[str]]:
        names = self.names()
        return X.compile_expr(self.phase, names), X.compile_expr(self.point_map, names), names


def induced_rep_apply(kernel: DKernelSpec, g, psi: Callable, q, binding: dict):
    """``(T_g psi)(q) = phase(g^{-1}, q) psi(S(q, g^{-1}))``.

    ``psi`` is a vectorized callable on the reduced variable; ``binding``
    supplies orbit parameters and ``hbar``.
    """
    chart = kernel.chart
    ginv = chart.invert(np.asarray(g, dtype=float), wrap=False)
    phase, S, names = kernel.compiled()
    q = np.asarray(q, dtype=float)
    vals = {}
    for k, nm in enumerate(chart.names):
        vals[nm] = ginv[..., k]
    vals[kernel.spectator] = q
    args = [vals[nm] if nm in vals else binding[nm] for nm in names]
    qp = S(*args).real
    if kernel.periodic:
        qp = np.mod(qp, 2 * np.pi)
    return phase(*args) * psi(qp)
