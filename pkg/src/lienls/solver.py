"""Numerical engines for reduced equations and residual checks on the group.

Time-dependent reduced equations ``i hbar psi_t + c2 psi'' + c0 psi + cn |psi|^2 psi = 0``
are evolved by Strang splitting: an exact phase rotation for the local part
and an exact Fourier propagator for the kinetic part.  Stationary first-order
reductions are integrated with an adaptive Runge-Kutta method or solved in
closed form by the amplitude-phase ansatz ``psi = f exp(i Phi)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from . import expr as X
from .errors import (
    BoundaryContaminationError,
    DomainError,
    SingularityError,
    UnboundSymbolError,
    WrongEquationError,
)
from .operators import DifferentialOperator
from .reduction import T, GroupNLSE, ReducedEquation

__all__ = [
    "Grid1D",
    "GridSolution",
    "SolutionFamily",
    "split_step_evolve",
    "bright_soliton",
    "ode_integrate",
    "amplitude_phase_solve",
    "residual_full",
    "fd_apply",
    "residual_fd",
]

EDGE_TOLERANCE = 1e-8
TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid: ``periodic`` on ``[lo, hi)`` or a box ``[lo, hi)`` for decayed data."""

    lo: float
    hi: float
    n: int
    periodic: bool = False

    def __post_init__(self):
        if self.n < 64:
            raise ValueError("grid needs at least 64 points")
        if not self.hi > self.lo:
            raise ValueError("empty grid interval")

    @classmethod
    def circle(cls, n: int) -> "Grid1D":
        return cls(0.0, 2 * np.pi, n, True)

    @classmethod
    def box(cls, half_width: float, n: int) -> "Grid1D":
        return cls(-half_width, half_width, n, False)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.lo + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def norm(self, psi: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(psi) ** 2) * self.dx))


@dataclass
class GridSolution:
    x: np.ndarray
    t: np.ndarray
    psi: np.ndarray  # shape (len(t), len(x))
    dt: float | None = None
    norms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def final(self) -> np.ndarray:
        return self.psi[-1]

    def norm_drift(self) -> float:
        if self.norms.size == 0:
            return 0.0
        return float(np.max(np.abs(self.norms - self.norms[0])))


@dataclass(frozen=True)
class SolutionFamily:
    """Closed-form solution ``expr(var[, t])`` with named family parameters."""

    expr: sp.Expr
    var: sp.Symbol
    params: tuple = ()
    time: bool = False
    validity: str = ""

    def names(self) -> list[str]:
        return sorted(X.free_names(self.expr) | {self.var.name} | ({"t"} if self.time else set()))

    def __call__(self, x, binding: dict, t=0.0) -> np.ndarray:
        names = self.names()
        vals = dict(binding)
        vals[self.var.name] = np.asarray(x, dtype=float)
        vals["t"] = t
        missing = [n for n in names if n not in vals]
        if missing:
            raise UnboundSymbolError(missing)
        return X.compile_expr(self.expr, names)(*(vals[n] for n in names))

    def subs(self, mapping: dict) -> "SolutionFamily":
        m = {X.sym(k) if isinstance(k, str) else k: sp.sympify(v) for k, v in mapping.items()}
        return SolutionFamily(self.expr.subs(m), self.var, self.params, self.time, self.validity)

    def reflected(self) -> "SolutionFamily":
        """Same family with ``var`` replaced by ``-var`` (the ``|q'|`` branch on ``q' < 0``)."""
        return SolutionFamily(self.expr.xreplace({self.var: -self.var}), self.var, self.params, self.time,
                              self.validity + " (reflected branch)")


def _num(e, binding: dict, var: str | None = None, x=None):
    names = sorted(X.free_names(e))
    vals = dict(binding)
    if var is not None:
        vals[var] = x
    missing = [n for n in names if n not in vals]
    if missing:
        raise UnboundSymbolError(missing)
    out = X.compile_expr(e, names)(*(vals[n] for n in names))
    return out


def _require_real(v: np.ndarray, what: str) -> np.ndarray:
    if np.max(np.abs(np.imag(v))) > 1e-12 * (1 + np.max(np.abs(v))):
        raise WrongEquationError(f"{what} must be real for a norm-conserving split step")
    return np.real(v)


def split_step_evolve(
    eq: ReducedEquation,
    psi0: np.ndarray,
    grid: Grid1D,
    dt: float,
    steps: int,
    binding: dict,
    save_every: int | None = None,
) -> GridSolution:
    """Strang split-step integration of a time-dependent reduced equation."""
    if eq.kind != "time":
        raise WrongEquationError("split-step evolution needs a time-dependent equation")
    x = grid.x
    if sp.diff(eq.c2, eq.var) != 0:
        raise WrongEquationError("kinetic coefficient must not depend on the reduced variable")
    if eq.c1 != 0:
        raise WrongEquationError("first-order term not supported by the split-step scheme")
    psi = np.array(psi0, dtype=complex)
    if psi.shape != x.shape:
        raise ValueError("initial data does not match the grid")
    if not grid.periodic:
        edge = max(abs(psi[0]), abs(psi[-1]))
        if edge >= EDGE_TOLERANCE:
            raise BoundaryContaminationError(f"|psi| = {edge:.3e} at the box edge; need < {EDGE_TOLERANCE}")
    hbar = float(binding.get(eq.hbar.name, 1.0))
    c2 = float(_require_real(np.atleast_1d(_num(eq.c2, binding)), "c2")[0])
    c0 = _require_real(np.broadcast_to(_num(eq.c0, binding, eq.var.name, x), x.shape), "c0")
    cn = _require_real(np.broadcast_to(_num(eq.cn, binding, eq.var.name, x), x.shape), "cn")
    spec = np.abs(np.fft.fft(psi)) ** 2
    tail = np.sum(spec[np.abs(grid.k) > 0.75 * np.abs(grid.k).max()]) / max(np.sum(spec), 1e-300)
    if tail > TAIL_TOLERANCE:
        warnings.warn(f"spectral tail {tail:.2e} of the norm: data may be under-resolved", RuntimeWarning)
    kin = np.exp(-1j * c2 * grid.k**2 * dt / hbar)
    save_every = save_every or steps
    times, frames, norms = [0.0], [psi.copy()], [grid.norm(psi)]
    half = 0.5 * dt / hbar
    for n in range(1, steps + 1):
        psi = psi * np.exp(1j * (c0 + cn * np.abs(psi) ** 2) * half)
        psi = np.fft.ifft(kin * np.fft.fft(psi))
        psi = psi * np.exp(1j * (c0 + cn * np.abs(psi) ** 2) * half)
        norms.append(grid.norm(psi))
        if n % save_every == 0 or n == steps:
            times.append(n * dt)
            frames.append(psi.copy())
    return GridSolution(x, np.array(times), np.array(frames), dt, np.array(norms))


def bright_soliton(eq: ReducedEquation, kappa: sp.Expr | float | str = "a", v: sp.Expr | float | str = "v",
                   x0: sp.Expr | float = 0) -> SolutionFamily:
    """Travelling sech soliton of ``i hbar psi_t + c2 psi'' + c0 psi + cn |psi|^2 psi = 0``.

    With constant real ``c2, c0, cn`` and ``c2 cn > 0``::

        psi = A sech(kappa (x - x0 - v t)) exp(i (k x - omega t))
        k = hbar v / (2 c2),  A = kappa sqrt(2 c2 / cn),  hbar omega = c2 k^2 - c2 kappa^2 - c0
    """
    if eq.kind != "time":
        raise WrongEquationError("bright soliton needs a time-dependent equation")
    x = eq.var
    for name, c in (("c2", eq.c2), ("c0", eq.c0), ("cn", eq.cn)):
        if sp.diff(c, x) != 0:
            raise WrongEquationError(f"{name} depends on {x}; no travelling soliton")
    if eq.c1 != 0:
        raise WrongEquationError("first-order term present")
    kap = X.parse(kappa) if isinstance(kappa, str) else sp.sympify(kappa)
    vel = X.parse(v) if isinstance(v, str) else sp.sympify(v)
    h = eq.hbar
    k = h * vel / (2 * eq.c2)
    A = kap * sp.sqrt(2 * eq.c2 / eq.cn)
    omega = (eq.c2 * k**2 - eq.c2 * kap**2 - eq.c0) / h
    u = kap * (x - x0 - vel * T)
    sech = 2 / (sp.exp(u) + sp.exp(-u))
    expr = A * sech * sp.exp(sp.I * (k * x - omega * T))
    return SolutionFamily(expr, x, tuple(str(s) for s in (kap, vel)), True, "focusing: c2 * cn > 0")


def _c1_roots(c1: sp.Expr, var: sp.Symbol, binding: dict, span: tuple[float, float]) -> list[float]:
    m = {X.sym(k): v for k, v in binding.items() if k != var.name}
    e = sp.simplify(c1.subs(m))
    if e.free_symbols - {var}:
        raise DomainError(f"unbound symbols in c1: {e.free_symbols - {var}}")
    roots = []
    try:
        sol = sp.solveset(e, var, domain=sp.S.Reals)
        if isinstance(sol, sp.FiniteSet):
            roots = [float(r) for r in sol if span[0] <= float(r) <= span[1]]
    except (NotImplementedError, TypeError):
        pass
    xs = np.linspace(span[0], span[1], 2001)
    vals = np.abs(X.compile_expr(e, [var.name])(xs))
    scale = max(float(np.max(vals)), 1e-300)
    roots += [float(xs[i]) for i in np.flatnonzero(vals < 1e-12 * scale)]
    return roots


def ode_integrate(
    eq: ReducedEquation,
    psi0: complex,
    span: tuple[float, float],
    binding: dict,
    n_out: int = 400,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> GridSolution:
    """Integrate the first-order stationary reduced equation from ``span[0]``."""
    if eq.kind != "stationary":
        raise WrongEquationError("ode_integrate needs a stationary equation")
    if eq.c2 != 0:
        raise WrongEquationError("second-order stationary equations are not handled")
    var = eq.var
    lo, hi = sorted(span)
    roots = _c1_roots(eq.c1, var, binding, (lo, hi))
    if roots:
        raise SingularityError(f"coefficient of psi' vanishes at {var} = {roots[0]:.6g} inside the span")
    names = [var.name]
    sub = {X.sym(k): v for k, v in binding.items() if k != var.name}
    c1 = X.compile_expr(sp.sympify(eq.c1).subs(sub), names)
    c0 = X.compile_expr((eq.c0 + eq.energy).subs(sub), names)
    cn = X.compile_expr(sp.sympify(eq.cn).subs(sub), names)

    def rhs(x, y):
        psi = y[0]
        return [-(c0(x)[()] * psi + cn(x)[()] * abs(psi) ** 2 * psi) / c1(x)[()]]

    xs = np.linspace(span[0], span[1], n_out)
    sol = solve_ivp(rhs, span, [complex(psi0)], method="RK45", t_eval=xs, rtol=rtol, atol=atol)
    if not sol.success:
        raise SingularityError(sol.message)
    return GridSolution(sol.t, np.zeros(1), sol.y[0][None, :])


def amplitude_phase_solve(eq: ReducedEquation, c1_name: str = "c1", amplitude: str = "A") -> SolutionFamily:
    """Closed-form solution ``f exp(i Phi)`` of ``i a psi' + (i b + r) psi + cn |psi|^2 psi + E psi = 0``.

    The imaginary part gives ``a f' + b f = 0`` and the real part
    ``Phi' = (r + E + cn f^2) / a``.  When the ``f^2`` contribution to
    ``Phi`` is a constant multiple of ``1/var``, the amplitude is traded for
    that constant, named ``c1_name``.
    """
    if eq.kind != "stationary" or eq.c2 != 0:
        raise WrongEquationError("amplitude-phase ansatz applies to first-order stationary equations")
    x = eq.var
    a = sp.simplify(eq.c1 / sp.I)
    b = sp.simplify(sp.im(sp.expand_complex(eq.c0)))
    r = sp.simplify(sp.re(sp.expand_complex(eq.c0)))
    cn = sp.simplify(eq.cn)
    if a == 0 or sp.simplify(sp.im(sp.expand_complex(a))) != 0 or sp.simplify(sp.im(sp.expand_complex(cn))) != 0:
        raise WrongEquationError("psi' coefficient must be imaginary and the cubic coefficient real")
    xp = sp.Symbol(x.name, positive=True)
    to_pos = {x: xp}
    A = X.sym(amplitude)
    f = sp.simplify(A * sp.exp(-sp.integrate((b / a).xreplace(to_pos), xp)))
    dphi = sp.simplify(((r + eq.energy).xreplace(to_pos) + cn.xreplace(to_pos) * f**2) / a.xreplace(to_pos))
    phi = sp.expand(sp.integrate(dphi, xp))
    params = [amplitude]
    P = sp.simplify(sp.diff(phi, A, 2) / 2)  # coefficient of A^2 in Phi
    K = sp.simplify(xp * P)
    if P != 0 and not K.has(xp):
        c1 = X.sym(c1_name)
        A2 = c1 / K
        f = sp.simplify(f.subs(A, sp.sqrt(A2)))
        phi = sp.expand(phi.subs(A, sp.sqrt(A2)))
        params = [c1_name]
    phi = sp.Add(*(sp.factor(t) for t in sp.Add.make_args(sp.collect(sp.expand(phi), [sp.log(xp), 1 / xp]))))
    expr = (f * sp.exp(sp.I * phi)).xreplace({xp: x})
    return SolutionFamily(expr, x, tuple(params), False, f"{x.name} > 0; use the reflected branch for {x.name} < 0")


# ---------------------------------------------------------------------------
# residuals of the full group equation


def residual_full(
    Psi: sp.Expr,
    laplacian: DifferentialOperator,
    equation: GroupNLSE,
    points: dict,
    binding: dict | None = None,
) -> np.ndarray:
    """Pointwise residual of the full equation for a symbolic field (exact derivatives)."""
    res = equation.residual_expr(sp.sympify(Psi), laplacian)
    vals = dict(binding or {})
    vals.update(points)
    names = sorted(X.free_names(res))
    missing = [n for n in names if n not in vals]
    if missing:
        raise UnboundSymbolError(missing)
    return X.compile_expr(res, names)(*(vals[n] for n in names))


_FD1 = (np.array([1.0, -8.0, 8.0, -1.0]) / 12.0, np.array([-2, -1, 1, 2]))
_FD2 = (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, np.array([-2, -1, 0, 1, 2]))


def fd_apply(op: DifferentialOperator, f: Callable, point: np.ndarray, coeffs: dict, h: float) -> np.ndarray:
    """Apply a second-order operator to a callable by 4th-order central differences.

    ``f`` maps an array of shape (..., n) to values; ``coeffs`` maps multi-index
    to numeric coefficient arrays at ``point``.
    """
    point = np.asarray(point, dtype=float)
    n = point.shape[-1]
    out = 0.0
    for alpha in op.terms:
        c = coeffs[alpha]
        idx = [k for k, m in enumerate(alpha) for _ in range(m)]
        if not idx:
            out = out + c * f(point)
        elif len(idx) == 1:
            w, s = _FD1
            acc = 0.0
            for wi, si in zip(w, s):
                p = point.copy()
                p[..., idx[0]] += si * h
                acc = acc + wi * f(p)
            out = out + c * acc / h
        elif idx[0] == idx[1]:
            w, s = _FD2
            acc = 0.0
            for wi, si in zip(w, s):
                p = point.copy()
                p[..., idx[0]] += si * h
                acc = acc + wi * f(p)
            out = out + c * acc / h**2
        else:
            w, s = _FD1
            acc = 0.0
            for wi, si in zip(w, s):
                for wj, sj in zip(w, s):
                    p = point.copy()
                    p[..., idx[0]] += si * h
                    p[..., idx[1]] += sj * h
                    acc = acc + wi * wj * f(p)
            out = out + c * acc / h**2
    return out


def residual_fd(
    Psi: sp.Expr,
    laplacian: DifferentialOperator,
    equation: GroupNLSE,
    coords: Sequence[str],
    points: np.ndarray,
    binding: dict,
    h: float,
    t: float | None = None,
) -> np.ndarray:
    """Residual of the full equation with all derivatives replaced by 4th-order differences.

    The field is only sampled, never differentiated symbolically, which makes
    this an independent check of :func:`residual_full`.
    """
    coords = list(coords)
    names = sorted(set(X.free_names(Psi)) | set(coords))
    F = X.compile_expr(Psi, names)

    def field_at(p, tt=t):
        vals = dict(binding)
        vals.update({c: p[..., k] for k, c in enumerate(coords)})
        vals["t"] = tt if tt is not None else 0.0
        return F(*(vals[n] for n in names))

    coeffs = {}
    for alpha, c in laplacian.terms.items():
        cn = sorted(set(X.free_names(c)) | set(coords))
        vals = dict(binding)
        vals.update({cc: points[..., k] for k, cc in enumerate(coords)})
        coeffs[alpha] = X.compile_expr(c, cn)(*(vals[n] for n in cn))
    hb = binding[equation.hbar.name]
    m = binding[equation.mass.name]
    lap = fd_apply(laplacian, field_at, points, coeffs, h)
    psi = field_at(points)
    local = {}
    for key in ("potential", "coupling", "weight"):
        e = getattr(equation, key)
        en = sorted(set(X.free_names(e)) | set(coords))
        vals = dict(binding)
        vals.update({cc: points[..., k] for k, cc in enumerate(coords)})
        local[key] = X.compile_expr(e, en)(*(vals[n] for n in en))
    out = hb**2 / (2 * m) * lap - (local["potential"] + local["coupling"] * local["weight"] * np.abs(psi) ** 2) * psi
    if equation.kind == "time":
        w, s = _FD1
        dt = sum(wi * field_at(points, t + si * h) for wi, si in zip(w, s)) / h
        out = out + 1j * hb * dt
    else:
        out = out + binding[equation.energy.name] * psi
    return out
