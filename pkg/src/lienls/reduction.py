"""Noncommutative ansatz and reduction of the group NLSE.

A reduced function ``psi(t, qp)`` is lifted to the group by

    Psi(t, g) = phase(g, q) * psi(t, S(q, g))

with the kernel data of :mod:`lienls.orbit`.  The right-invariant fields then
act on ``Psi`` through the lambda-representation in ``qp``, which turns the
group Laplacian into a one-dimensional operator.  The cubic term survives the
reduction only when ``w(g) |phase|^2`` is constant along the fibers of ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from . import expr as X
from .errors import NotReducibleError, WrongEquationError
from .geometry import GeometryCache
from .group import FrameField, GroupChart
from .operators import DifferentialOperator, symmetrized_product
from .orbit import DKernelSpec, LambdaRep

__all__ = [
    "AnsatzSpec",
    "GroupField",
    "GroupNLSE",
    "ReducedEquation",
    "lift",
    "generator_transport_check",
    "fiber_sample",
    "kappa_check",
    "reduce_equation",
    "factorization_check",
    "separation_eigencheck",
    "random_test_function",
]

T = X.sym("t")


@dataclass(frozen=True)
class AnsatzSpec:
    kernel: DKernelSpec

    @property
    def chart(self) -> GroupChart:
        return self.kernel.chart

    @property
    def phase(self) -> sp.Expr:
        return self.kernel.phase

    @property
    def point_map(self) -> sp.Expr:
        return self.kernel.point_map

    @property
    def var(self) -> sp.Symbol:
        return self.kernel.qp


@dataclass(frozen=True)
class GroupField:
    """Symbolic complex field on the chart (optionally time dependent)."""

    expr: sp.Expr
    coords: tuple
    time: sp.Symbol | None = None

    def names(self) -> list[str]:
        return sorted(X.free_names(self.expr) | {s.name for s in self.coords})

    def evaluate(self, points: dict) -> np.ndarray:
        names = self.names()
        return X.compile_expr(self.expr, names)(*(points[n] for n in names))


def lift(ansatz: AnsatzSpec, psi: sp.Expr) -> GroupField:
    """``Psi(t, g) = phase(g, q) psi(t, S(q, g))`` for a symbolic ``psi(t, qp)``."""
    psi = sp.sympify(psi)
    body = psi.xreplace({ansatz.var: ansatz.point_map})
    time = T if T in psi.free_symbols else None
    return GroupField(ansatz.phase * body, ansatz.chart.symbols, time)


# ---------------------------------------------------------------------------
# random smooth test functions


def random_test_function(rng: np.random.Generator, var: sp.Symbol, periodic: bool, time: bool = False) -> sp.Expr:
    """Random smooth complex function of ``var`` (and ``t``) for identity checks."""
    c = rng.normal(size=6) + 1j * rng.normal(size=6)
    cs = [sp.Rational(round(v.real, 3)).limit_denominator(1000) + sp.I * sp.Rational(round(v.imag, 3)).limit_denominator(1000) for v in c]
    if periodic:
        k1, k2 = (int(k) for k in rng.integers(1, 4, 2))
        f = cs[0] + cs[1] * sp.exp(sp.I * k1 * var) + cs[2] * sp.cos(k2 * var) + cs[3] * sp.sin(var) ** 2
    else:
        k = sp.Rational(int(rng.integers(-20, 20)), 10)
        f = (cs[0] + cs[1] * var + cs[2] * var**2 / 4) * sp.exp(sp.I * k * var) + cs[3] * sp.cos(var / 2)
    if time:
        w = sp.Rational(int(rng.integers(-20, 20)), 10)
        f = f * sp.exp(sp.I * w * T) + cs[4] * T * var
    return f


def _numeric_test_function(rng: np.random.Generator, periodic: bool):
    """Random smooth complex function and its derivative as numpy callables."""
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    if periodic:
        k1, k2 = rng.integers(1, 4, 2)

        def f(u):
            return c[0] + c[1] * np.exp(1j * k1 * u) + c[2] * np.cos(k2 * u) + c[3] * np.sin(u) ** 2

        def df(u):
            return 1j * k1 * c[1] * np.exp(1j * k1 * u) - k2 * c[2] * np.sin(k2 * u) + 2 * c[3] * np.sin(u) * np.cos(u)

    else:
        k = rng.uniform(-2, 2)

        def f(u):
            return (c[0] + c[1] * u + c[2] * u**2 / 4) * np.exp(1j * k * u) + c[3] * np.cos(u / 2)

        def df(u):
            return ((c[1] + c[2] * u / 2) + 1j * k * (c[0] + c[1] * u + c[2] * u**2 / 4)) * np.exp(1j * k * u) - c[3] * np.sin(u / 2) / 2

    return f, df


def _param_names(*exprs) -> list[str]:
    return sorted(set().union(*(X.free_names(e) for e in exprs)))


def _sample_points(chart: GroupChart, names: Sequence[str], n: int, rng, box=None) -> dict:
    b = {k: (-2.0, 2.0) for k in names}
    b.update(chart.sample_box())
    b.update(box or {})
    return X.sample_bindings(names, b, n, rng)


def generator_transport_check(
    ansatz: AnsatzSpec,
    rep: LambdaRep,
    eta: FrameField,
    trials: int = 50,
    samples: int = 64,
    seed: int = 0,
    box=None,
    witness: dict | None = None,
) -> float:
    """Max of ``|eta_a(lift psi) - lift(l_a psi)|`` over generators, random
    test functions and sample points.  If ``witness`` is a dict it receives
    the generator and chart point of the worst residual.

    Written out, the residual is ``R0_a psi(S) + R1_a psi'(S)`` with
    ``R0_a = eta_a(phase) - phase B_a(S)`` and ``R1_a = phase (eta_a(S) - A_a(S))``,
    so the two coefficient expressions are compiled once.
    """
    phase, S, qp = ansatz.phase, ansatz.point_map, ansatz.var
    qrep = rep.coords[0]
    R0, R1 = [], []
    for a in range(eta.dim):
        Aa = rep.A(a).xreplace({qrep: S})
        Ba = rep.B(a).xreplace({qrep: S})
        R0.append(eta.apply(a, phase) - phase * Ba)
        R1.append(phase * (eta.apply(a, S) - Aa))
    names = sorted(set(_param_names(*R0, *R1, S)) | set(ansatz.chart.names) | {ansatz.kernel.spectator})
    rng = np.random.default_rng(seed)
    pts = _sample_points(ansatz.chart, names, samples, rng, box)
    args = [pts[n] for n in names]
    Sv = X.compile_expr(S, names)(*args).real
    r0 = [X.compile_expr(e, names)(*args) for e in R0]
    r1 = [X.compile_expr(e, names)(*args) for e in R1]
    worst = 0.0
    for _ in range(trials):
        f, df = _numeric_test_function(rng, rep.periodic)
        fv, dfv = f(Sv), df(Sv)
        for a in range(eta.dim):
            err = np.abs(r0[a] * fv + r1[a] * dfv)
            i = int(np.argmax(err))
            if err[i] > worst:
                worst = float(err[i])
                if witness is not None:
                    witness.clear()
                    witness.update(generator=a + 1, point={n: float(pts[n][i]) for n in names}, residual=worst)
    return worst


# ---------------------------------------------------------------------------
# reducibility


def _pivot(chart: GroupChart, S: sp.Expr) -> int:
    """Chart coordinate used to move along a fiber: prefer one entering S linearly."""
    best = None
    for k, s in enumerate(chart.symbols):
        d = sp.diff(S, s)
        if d == 0:
            continue
        if sp.diff(d, s) == 0:
            return k
        best = k if best is None else best
    if best is None:
        raise ValueError("point map does not depend on the chart coordinates")
    return best


def fiber_sample(ansatz: AnsatzSpec, q: float, qp: float, n: int, binding: dict, rng, box=None) -> np.ndarray:
    """``n`` chart points with ``S(q, g) = qp`` (Newton along a pivot coordinate)."""
    chart, S = ansatz.chart, ansatz.point_map
    k = _pivot(chart, S)
    names = sorted(set(chart.names) | {ansatz.kernel.spectator} | set(binding))
    Sf = X.compile_expr(S, names)
    dSf = X.compile_expr(sp.diff(S, chart.symbols[k]), names)
    b = chart.sample_box()
    b.update(box or {})
    out = []
    for _ in range(50):
        if len(out) >= n:
            break
        g = np.array([rng.uniform(*b[c.name], 4 * n) for c in chart.coords])
        vals = {c.name: g[i] for i, c in enumerate(chart.coords)}
        vals[ansatz.kernel.spectator] = np.full(4 * n, q)
        vals.update({p: np.full(4 * n, v) for p, v in binding.items() if p not in vals})
        for _ in range(60):
            args = [vals[nm] for nm in names]
            r = Sf(*args).real - qp
            d = dSf(*args).real
            with np.errstate(all="ignore"):
                vals[chart.names[k]] = vals[chart.names[k]] - r / d
        args = [vals[nm] for nm in names]
        ok = np.isfinite(vals[chart.names[k]]) & (np.abs(Sf(*args).real - qp) < 1e-12 * (1 + abs(qp)))
        pts = np.stack([vals[c.name] for c in chart.coords], axis=-1)[ok]
        out.extend(pts[: n - len(out)])
    if len(out) < n:
        raise ValueError("could not sample the fiber")
    return np.array(out)


def kappa_check(
    ansatz: AnsatzSpec,
    weight: sp.Expr = sp.Integer(1),
    pairs: int = 8,
    per_fiber: int = 16,
    tol: float = 1e-9,
    seed: int = 0,
    box=None,
    param_box=None,
) -> sp.Expr:
    """Fiber-constant value ``kappa^2`` of ``w |phase|^2``, or NotReducibleError with a witness."""
    phase = ansatz.phase
    F = sp.sympify(weight) * phase * sp.conjugate(phase)
    chart = ansatz.chart
    params = sorted(set(_param_names(F, ansatz.point_map)) - set(chart.names) - {ansatz.kernel.spectator})
    names = sorted(set(chart.names) | {ansatz.kernel.spectator} | set(params))
    Ff = X.compile_expr(F, names)
    rng = np.random.default_rng(seed)
    pb = {p: X.DEFAULT_RANGE for p in params}
    pb.update(param_box or {})
    for _ in range(pairs):
        binding = {p: rng.uniform(*pb[p]) for p in params}
        q = rng.uniform(-1.0, 1.0)
        g0 = chart.sample_points(1, rng)[0]
        vals0 = dict(zip(chart.names, g0))
        vals0[ansatz.kernel.spectator] = q
        vals0.update(binding)
        qp = float(X.compile_expr(ansatz.point_map, names)(*(vals0[n] for n in names)).real)
        if not np.isfinite(qp):
            continue
        pts = fiber_sample(ansatz, q, qp, per_fiber, binding, rng, box)
        vals = {c.name: pts[:, i] for i, c in enumerate(chart.coords)}
        vals[ansatz.kernel.spectator] = q
        vals.update(binding)
        v = Ff(*(vals[n] for n in names)).real
        spread = np.abs(v - v[0]) / (1.0 + np.abs(v[0]))
        if np.max(spread) > tol:
            i = int(np.argmax(spread))
            witness = {
                "q": q,
                "qp": qp,
                "params": binding,
                "points": [dict(zip(chart.names, pts[0].tolist())), dict(zip(chart.names, pts[i].tolist()))],
                "values": [float(v[0]), float(v[i])],
            }
            raise NotReducibleError("w |phase|^2 is not constant along the fibers of the point map", witness)
    if ansatz.kernel.fiber_point:
        fp = dict(zip(chart.symbols, ansatz.kernel.fiber_point))
        return sp.simplify(F.xreplace(fp))
    return sp.simplify(F)


# ---------------------------------------------------------------------------
# equations


@dataclass(frozen=True)
class GroupNLSE:
    """``i hbar Psi_t + (hbar^2/2m) Delta_G Psi - (V + nu w |Psi|^2) Psi [+ E Psi] = 0``.

    ``kind`` is ``"time"`` or ``"stationary"`` (then the time term is absent
    and ``E Psi`` is added).
    """

    kind: str = "time"
    potential: sp.Expr = sp.Integer(0)
    coupling: sp.Expr = sp.Integer(-1) * X.sym("epsilon")
    weight: sp.Expr = sp.Integer(1)
    mass: sp.Symbol = X.sym("m")
    hbar: sp.Symbol = X.HBAR
    energy: sp.Symbol = X.sym("E")

    def __post_init__(self):
        if self.kind not in ("time", "stationary"):
            raise ValueError(f"unknown equation kind {self.kind!r}")
        for k in ("potential", "coupling", "weight"):
            object.__setattr__(self, k, sp.sympify(getattr(self, k)))

    def residual_expr(self, Psi: sp.Expr, laplacian: DifferentialOperator) -> sp.Expr:
        h, m = self.hbar, self.mass
        mod2 = Psi * sp.conjugate(Psi)
        out = h**2 / (2 * m) * laplacian.apply(Psi) - (self.potential + self.coupling * self.weight * mod2) * Psi
        if self.kind == "time":
            out += sp.I * h * sp.diff(Psi, T)
        else:
            out += self.energy * Psi
        return out


@dataclass(frozen=True)
class ReducedEquation:
    """``[i hbar psi_t] + c2 psi'' + c1 psi' + c0 psi + cn |psi|^2 psi [+ E psi] = 0`` in ``var``."""

    kind: str
    var: sp.Symbol
    c2: sp.Expr
    c1: sp.Expr
    c0: sp.Expr
    cn: sp.Expr
    hbar: sp.Symbol = X.HBAR
    energy: sp.Symbol = X.sym("E")
    periodic: bool = False
    domain: tuple = (-np.inf, np.inf)
    kappa2: sp.Expr = sp.Integer(1)
    linear_part: sp.Expr = sp.Integer(0)  # c0 from the kinetic operator alone

    def coefficients(self) -> dict[str, sp.Expr]:
        return {"c2": self.c2, "c1": self.c1, "c0": self.c0, "cn": self.cn}

    def residual_expr(self, psi: sp.Expr) -> sp.Expr:
        x = self.var
        out = self.c2 * sp.diff(psi, x, 2) + self.c1 * sp.diff(psi, x) + self.c0 * psi
        out += self.cn * psi * sp.conjugate(psi) * psi
        if self.kind == "time":
            out += sp.I * self.hbar * sp.diff(psi, T)
        else:
            out += self.energy * psi
        return out

    def subs(self, mapping: dict) -> "ReducedEquation":
        m = {X.sym(k) if isinstance(k, str) else k: sp.sympify(v) for k, v in mapping.items()}
        f = lambda e: sp.simplify(sp.sympify(e).subs(m))
        return ReducedEquation(self.kind, self.var, f(self.c2), f(self.c1), f(self.c0), f(self.cn), self.hbar,
                               self.energy, self.periodic, self.domain, f(self.kappa2), f(self.linear_part))

    def operator(self) -> DifferentialOperator:
        return DifferentialOperator((self.var,), {(2,): self.c2, (1,): self.c1, (0,): self.c0})


def _fiber_value(ansatz: AnsatzSpec, e: sp.Expr) -> sp.Expr:
    fp = dict(zip(ansatz.chart.symbols, ansatz.kernel.fiber_point))
    return sp.simplify(sp.sympify(e).xreplace(fp))


def reduce_equation(
    geometry: GeometryCache,
    rep: LambdaRep,
    ansatz: AnsatzSpec,
    equation: GroupNLSE,
    kappa2: sp.Expr | None = None,
    seed: int = 0,
    box=None,
) -> ReducedEquation:
    """Reduced equation obtained by replacing ``eta_a`` with ``l_a`` in ``Delta_G``.

    ``rep`` must be written in the kernel's reduced variable.  The potential
    must be fiber-constant; it is expressed through the kernel's fiber point.
    """
    if rep.coords != (ansatz.var,):
        raise ValueError(f"lambda-representation acts on {rep.coords}, kernel variable is {ansatz.var}")
    if kappa2 is None:
        kappa2 = kappa_check(ansatz, equation.weight, seed=seed, box=box)
    if equation.potential != 0:
        _check_fiber_constant(ansatz, equation.potential, seed, box)
    G = geometry.metric.upper
    n = G.shape[0]
    total = DifferentialOperator(rep.coords)
    for a in range(n):
        for b in range(n):
            if G[a, b] != 0:
                total = total + symmetrized_product([rep.ops[a], rep.ops[b]]).scale(G[a, b])
    L = total.scale(equation.hbar**2 / (2 * equation.mass)).simplify()
    V = _fiber_value(ansatz, equation.potential) if equation.potential != 0 else sp.Integer(0)
    c0_lin = sp.simplify(L.coefficient((0,)))
    return ReducedEquation(
        kind=equation.kind,
        var=ansatz.var,
        c2=sp.simplify(L.coefficient((2,))),
        c1=sp.simplify(L.coefficient((1,))),
        c0=sp.simplify(c0_lin - V),
        cn=sp.simplify(-equation.coupling * kappa2),
        hbar=equation.hbar,
        energy=equation.energy,
        periodic=rep.periodic,
        domain=rep.domain,
        kappa2=sp.sympify(kappa2),
        linear_part=c0_lin,
    )


def _check_fiber_constant(ansatz: AnsatzSpec, e: sp.Expr, seed: int, box) -> None:
    chart = ansatz.chart
    params = sorted(set(X.free_names(e)) - set(chart.names) - {ansatz.kernel.spectator})
    names = sorted(set(chart.names) | {ansatz.kernel.spectator} | set(params))
    f = X.compile_expr(e, names)
    rng = np.random.default_rng(seed)
    for _ in range(4):
        binding = {p: rng.uniform(*X.DEFAULT_RANGE) for p in params}
        q, qp = rng.uniform(-1, 1), rng.uniform(-1, 1)
        pts = fiber_sample(ansatz, q, qp, 8, binding, rng, box)
        vals = {c.name: pts[:, i] for i, c in enumerate(chart.coords)}
        vals[ansatz.kernel.spectator] = q
        vals.update(binding)
        v = f(*(vals[nm] for nm in names))
        if np.max(np.abs(v - v[0])) > 1e-9 * (1 + abs(v[0])):
            raise NotReducibleError("potential is not constant along the fibers of the point map",
                                    {"q": q, "qp": qp, "values": [complex(v[0]), complex(v[np.argmax(np.abs(v - v[0]))])]})


def factorization_check(
    geometry: GeometryCache,
    equation: GroupNLSE,
    reduced: ReducedEquation,
    ansatz: AnsatzSpec,
    points: int = 100,
    trials: int = 3,
    seed: int = 0,
    box=None,
) -> float:
    """Max of ``|full(lift psi) - phase * reduced(psi) o S|`` relative to ``1 + |full|``.

    Pointwise equality implies the modulus relation
    ``|full(lift psi)| = |phase| |reduced(psi)|``.
    """
    rng = np.random.default_rng(seed)
    lap = geometry.laplacian
    worst = 0.0
    for _ in range(trials):
        psi = random_test_function(rng, ansatz.var, reduced.periodic, time=equation.kind == "time")
        Psi = lift(ansatz, psi).expr
        full = equation.residual_expr(Psi, lap)
        red = ansatz.phase * reduced.residual_expr(psi).xreplace({ansatz.var: ansatz.point_map})
        names = sorted(X.free_names(full) | X.free_names(red) | set(ansatz.chart.names))
        pts = _sample_points(ansatz.chart, names, points, rng, {"t": (0.0, 1.0), **(box or {})})
        args = [pts[n] for n in names]
        a = X.compile_expr(full, names)(*args)
        b = X.compile_expr(red, names)(*args)
        worst = max(worst, float(np.max(np.abs(a - b) / (1 + np.abs(a)))))
    return worst


def separation_eigencheck(
    psi: sp.Expr,
    ops: Sequence[DifferentialOperator],
    values: Sequence[sp.Expr],
    box=None,
    samples: int = 64,
    seed: int = 0,
) -> list[float]:
    """``max |(op - value) psi| / (1 + |value psi|)`` for each operator/value pair."""
    rng = np.random.default_rng(seed)
    out = []
    for op, val in zip(ops, values):
        r = op.apply(psi) - sp.sympify(val) * psi
        ref = sp.sympify(val) * psi
        names = sorted(X.free_names(r) | X.free_names(ref))
        pts = X.sample_bindings(names, box, samples, rng)
        args = [pts[n] for n in names]
        rv = X.compile_expr(r, names)(*args)
        fv = X.compile_expr(ref, names)(*args)
        out.append(float(np.max(np.abs(rv) / (1 + np.abs(fv)))))
    return out
