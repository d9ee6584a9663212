"""Group charts in coordinates of the second kind and the invariant frames
derived from their composition law.

A chart stores the composition ``phi(g1, g2)`` symbolically, with the left
operand written in symbols ``<name>_a`` and the right operand in ``<name>_b``.
Frames are never transcribed: they are obtained by differentiating ``phi`` at
the identity,

    xi_a^mu(g)  =  d phi^mu(g, h) / d h^a  |_{h=e}
    eta_a^mu(g) = -d phi^mu(h, g) / d h^a  |_{h=e}

where ``h^a`` is the coordinate whose exponent multiplies ``e_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from . import expr as X
from .algebra import LieAlgebra
from .errors import (
    FrameDegenerateError,
    NonUnimodularError,
    OutOfChartError,
    SymbolicInversionError,
)
from .operators import DifferentialOperator

__all__ = [
    "Coordinate",
    "GroupChart",
    "FrameField",
    "CoframeField",
    "left_invariant_frame",
    "right_invariant_frame",
    "coframe",
    "vector_commutator",
    "commutator_residual",
    "mixed_commutator_residual",
    "structure_residual",
    "haar_density",
]

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Coordinate:
    name: str
    generator: int  # zero-based basis index of the exponent this coordinate multiplies
    lo: float = -math.inf
    hi: float = math.inf
    periodic: bool = False
    sample: tuple[float, float] | None = None

    @property
    def symbol(self) -> sp.Symbol:
        return X.sym(self.name)

    @property
    def sample_range(self) -> tuple[float, float]:
        if self.sample is not None:
            return self.sample
        if self.periodic or (math.isfinite(self.lo) and math.isfinite(self.hi)):
            return (self.lo, self.hi)
        return (-2.0, 2.0)


@dataclass(frozen=True)
class GroupChart:
    name: str
    coords: tuple[Coordinate, ...]
    composition: tuple  # expressions in <name>_a, <name>_b
    identity: tuple
    inverse: tuple  # expressions in <name>
    factors: tuple[int, ...] = ()  # coordinate indices, leftmost exponential first

    def __post_init__(self):
        n = len(self.coords)
        for label, seq in (("composition", self.composition), ("identity", self.identity), ("inverse", self.inverse)):
            if len(seq) != n:
                raise ValueError(f"{label} needs {n} entries, got {len(seq)}")
        if sorted(c.generator for c in self.coords) != list(range(n)):
            raise ValueError("chart generators must be a permutation of the algebra basis")
        object.__setattr__(self, "composition", tuple(sp.sympify(e) for e in self.composition))
        object.__setattr__(self, "identity", tuple(sp.sympify(e) for e in self.identity))
        object.__setattr__(self, "inverse", tuple(sp.sympify(e) for e in self.inverse))
        if not self.factors:
            object.__setattr__(self, "factors", tuple(range(n)))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(c.symbol for c in self.coords)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.coords)

    def left_symbols(self):
        return tuple(X.sym(c.name + "_a") for c in self.coords)

    def right_symbols(self):
        return tuple(X.sym(c.name + "_b") for c in self.coords)

    def sample_box(self) -> dict[str, tuple[float, float]]:
        return {c.name: c.sample_range for c in self.coords}

    def coordinate_for(self, generator: int) -> int:
        for k, c in enumerate(self.coords):
            if c.generator == generator:
                return k
        raise KeyError(generator)

    def phi(self, g: Sequence, h: Sequence) -> tuple[sp.Expr, ...]:
        """Composition law with arbitrary expressions substituted for both operands."""
        m = dict(zip(self.left_symbols(), g))
        m.update(zip(self.right_symbols(), h))
        return tuple(e.xreplace(m) for e in self.composition)

    def inverse_expr(self, g: Sequence) -> tuple[sp.Expr, ...]:
        m = dict(zip(self.symbols, g))
        return tuple(e.xreplace(m) for e in self.inverse)

    # numeric ------------------------------------------------------------
    def _check_point(self, g):
        g = np.asarray(g, dtype=float)
        if g.shape[-1] != self.dim:
            raise OutOfChartError(f"point must have {self.dim} coordinates")
        for k, c in enumerate(self.coords):
            v = g[..., k]
            if not c.periodic and (np.any(v < c.lo) or np.any(v > c.hi)):
                raise OutOfChartError(f"coordinate {c.name} outside [{c.lo}, {c.hi}]")
            if not np.all(np.isfinite(v)):
                raise OutOfChartError(f"coordinate {c.name} is not finite")
        return g

    def wrap(self, g):
        g = np.array(g, dtype=float)
        for k, c in enumerate(self.coords):
            if c.periodic:
                g[..., k] = c.lo + np.mod(g[..., k] - c.lo, c.hi - c.lo)
        return g

    def compose(self, g1, g2, wrap: bool = True) -> np.ndarray:
        """Coordinates of ``g1 g2``; periodic coordinates wrapped into range."""
        g1 = self._check_point(g1)
        g2 = self._check_point(g2)
        names = [s.name for s in self.left_symbols() + self.right_symbols()]
        args = [g1[..., k] for k in range(self.dim)] + [g2[..., k] for k in range(self.dim)]
        out = np.stack([X.compile_expr(e, names)(*args).real for e in self.composition], axis=-1)
        return self.wrap(out) if wrap else out

    def invert(self, g, wrap: bool = True) -> np.ndarray:
        g = self._check_point(g)
        args = [g[..., k] for k in range(self.dim)]
        out = np.stack([X.compile_expr(e, self.names)(*args).real for e in self.inverse], axis=-1)
        return self.wrap(out) if wrap else out

    def identity_point(self) -> np.ndarray:
        return np.array([float(e) for e in self.identity])

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.stack([rng.uniform(*c.sample_range, n) for c in self.coords], axis=-1)


@dataclass(frozen=True)
class FrameField:
    """``matrix[a, mu]`` is the ``d/dg^mu`` component of the a-th field."""

    matrix: sp.Matrix
    coords: tuple[sp.Symbol, ...]
    kind: str = "left"

    @property
    def dim(self) -> int:
        return len(self.coords)

    def field(self, a: int) -> tuple[sp.Expr, ...]:
        return tuple(self.matrix[a, m] for m in range(self.dim))

    def operator(self, a: int) -> DifferentialOperator:
        return DifferentialOperator.vector_field(self.coords, self.field(a))

    def operators(self) -> list[DifferentialOperator]:
        return [self.operator(a) for a in range(self.dim)]

    def apply(self, a: int, f: sp.Expr) -> sp.Expr:
        return sum(self.matrix[a, m] * sp.diff(f, self.coords[m]) for m in range(self.dim))

    def at(self, point: Mapping) -> sp.Matrix:
        return self.matrix.subs(point)


@dataclass(frozen=True)
class CoframeField:
    """``matrix[a, mu]`` is the ``dg^mu`` component of the a-th 1-form."""

    matrix: sp.Matrix
    coords: tuple[sp.Symbol, ...]
    kind: str = "left"

    @property
    def dim(self) -> int:
        return len(self.coords)


def _frame(chart: GroupChart, kind: str) -> FrameField:
    n = chart.dim
    g = chart.symbols
    hs = [X.sym(f"_h{k}") for k in range(n)]
    at_e = dict(zip(hs, chart.identity))
    if kind == "left":
        phi = chart.phi(g, hs)
        sign = 1
    else:
        phi = chart.phi(hs, g)
        sign = -1
    M = sp.zeros(n, n)
    for a in range(n):
        k = chart.coordinate_for(a)
        for mu in range(n):
            M[a, mu] = sp.simplify(sign * sp.diff(phi[mu], hs[k]).xreplace(at_e))
    det = sp.simplify(M.det())
    if det == 0:
        raise FrameDegenerateError(f"{kind}-invariant frame of {chart.name} is degenerate")
    return FrameField(M, g, kind)


def left_invariant_frame(chart: GroupChart, A: LieAlgebra | None = None) -> FrameField:
    """Left-invariant fields derived from the composition law."""
    return _frame(chart, "left")


def right_invariant_frame(chart: GroupChart, A: LieAlgebra | None = None) -> FrameField:
    """Right-invariant fields ``eta = -(R_g)_* e_a`` derived from the composition law."""
    return _frame(chart, "right")


def coframe(frame: FrameField) -> CoframeField:
    """Dual 1-forms: ``sigma^a(F_b) = delta^a_b``, i.e. ``S = (F^T)^{-1}``."""
    F = frame.matrix
    det = sp.simplify(F.det())
    if det == 0:
        raise SymbolicInversionError("frame determinant vanishes identically")
    try:
        S = (F.T).inv(method="LU")
    except (ValueError, ZeroDivisionError) as exc:  # pragma: no cover - sympy specific
        raise SymbolicInversionError(str(exc)) from exc
    S = S.applyfunc(sp.simplify)
    return CoframeField(S, frame.coords, frame.kind)


def vector_commutator(u: Sequence[sp.Expr], v: Sequence[sp.Expr], coords: Sequence[sp.Symbol]):
    """Components of ``[u, v]`` for vector fields given by components."""
    n = len(coords)
    return tuple(
        sum(u[k] * sp.diff(v[m], coords[k]) - v[k] * sp.diff(u[m], coords[k]) for k in range(n))
        for m in range(n)
    )


def _max_abs(exprs, names, box, samples, rng) -> float:
    pts = X.sample_bindings(names, box, samples, rng)
    worst = 0.0
    for e in exprs:
        e = sp.sympify(e)
        if e == 0:
            continue
        v = X.compile_expr(e, names)(*(pts[k] for k in names))
        worst = max(worst, float(np.max(np.abs(v))))
    return worst


def _box_for(chart_coords, extra_box=None):
    box = {}
    for s in chart_coords:
        box[s.name] = (-2.0, 2.0)
    box.update(extra_box or {})
    return box


def commutator_residual(frame: FrameField, A: LieAlgebra, box=None, samples: int = 64, seed: int = 0) -> float:
    """Max over pairs and samples of ``|[F_a, F_b] - C^c_ab F_c|``."""
    n = frame.dim
    exprs = []
    for a in range(n):
        for b in range(a + 1, n):
            lhs = vector_commutator(frame.field(a), frame.field(b), frame.coords)
            for m in range(n):
                rhs = sum(sp.Rational(A.C[c][a][b]) * frame.matrix[c, m] for c in range(n))
                exprs.append(lhs[m] - rhs)
    names = sorted(set().union(*(X.free_names(e) for e in exprs)) | {s.name for s in frame.coords})
    rng = np.random.default_rng(seed)
    return _max_abs(exprs, names, _box_for(frame.coords, box), samples, rng)


def mixed_commutator_residual(xi: FrameField, eta: FrameField, box=None, samples: int = 64, seed: int = 0) -> float:
    n = xi.dim
    exprs = []
    for a in range(n):
        for b in range(n):
            exprs.extend(vector_commutator(xi.field(a), eta.field(b), xi.coords))
    names = sorted({s.name for s in xi.coords})
    rng = np.random.default_rng(seed)
    return _max_abs(exprs, names, _box_for(xi.coords, box), samples, rng)


def structure_residual(cf: CoframeField, A: LieAlgebra, box=None, samples: int = 64, seed: int = 0) -> float:
    """Max of ``d theta^a + 1/2 C^a_bc theta^b ^ theta^c`` over components and samples."""
    n = cf.dim
    S, x = cf.matrix, cf.coords
    exprs = []
    for a in range(n):
        for mu in range(n):
            for nu in range(mu + 1, n):
                d = sp.diff(S[a, nu], x[mu]) - sp.diff(S[a, mu], x[nu])
                w = sum(
                    sp.Rational(A.C[a][b][c]) * S[b, mu] * S[c, nu]
                    for b in range(n)
                    for c in range(n)
                    if A.C[a][b][c]
                )
                exprs.append(d + w)
    names = sorted({s.name for s in x})
    rng = np.random.default_rng(seed)
    return _max_abs(exprs, names, _box_for(x, box), samples, rng)


def haar_density(chart: GroupChart, samples: int = 32, seed: int = 0) -> sp.Expr:
    """Density of the bi-invariant measure, normalized to 1 at the identity.

    Raises :class:`NonUnimodularError` unless ``|det Ad|`` is 1 at every sample.
    """
    xi = left_invariant_frame(chart)
    eta = right_invariant_frame(chart)
    det_xi = sp.simplify(xi.matrix.det())
    det_eta = sp.simplify(eta.matrix.det())
    ratio = sp.simplify(det_xi / det_eta)
    rng = np.random.default_rng(seed)
    pts = chart.sample_points(samples, rng)
    vals = X.compile_expr(ratio, chart.names)(*pts.T)
    if not np.allclose(np.abs(vals), 1.0, rtol=1e-10, atol=1e-12):
        raise NonUnimodularError(f"|det Ad| differs from 1 (range {np.abs(vals).min()}..{np.abs(vals).max()})")
    e = dict(zip(chart.symbols, chart.identity))
    dens = sp.simplify(sp.Abs(det_xi.xreplace(e)) / sp.Abs(det_xi))
    return dens
