"""Right-invariant metrics on a group chart.

The metric is fixed by a constant symmetric matrix in the right-invariant
moving frame::

    g_{mu nu} = G_ab sigma^a_mu sigma^b_nu,     g^{mu nu} = G^ab eta_a^mu eta_b^nu

Curvature sign convention
-------------------------
``R^r_{s m n} = d_n G^r_{m s} - d_m G^r_{n s} + G^r_{n l} G^l_{m s} - G^r_{m l} G^l_{n s}``
with ``Ric_{s n} = R^r_{s r n}`` and ``R = g^{s n} Ric_{s n}``.  This is the
negative of the Misner-Thorne-Wheeler convention (the round sphere has
negative scalar curvature here).  It is the convention under which the
published E(2) scalar curvature and the Ricci component of the solvable
example carry the signs they are printed with.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp

from . import expr as X
from .algebra import LieAlgebra
from .errors import SingularMetricError
from .group import CoframeField, FrameField, GroupChart, coframe, right_invariant_frame
from .operators import DifferentialOperator, symmetrized_product

__all__ = [
    "MetricSpec",
    "GeometryCache",
    "metric_tensor",
    "christoffels",
    "frame_christoffels",
    "curvature",
    "laplacian",
    "laplace_beltrami",
    "metric_compatibility_residual",
    "bianchi_residual",
    "numeric_christoffels",
    "numeric_ricci",
]


@dataclass(frozen=True)
class MetricSpec:
    upper: sp.Matrix  # G^{ab}
    lower: sp.Matrix  # G_{ab}

    def __post_init__(self):
        for M in (self.upper, self.lower):
            if M != M.T:
                raise ValueError("metric matrix must be symmetric")
        if (self.upper * self.lower - sp.eye(self.upper.shape[0])).applyfunc(sp.simplify) != sp.zeros(*self.upper.shape):
            raise ValueError("G^{ab} and G_{ab} are not mutually inverse")

    @classmethod
    def from_upper(cls, M) -> "MetricSpec":
        M = sp.Matrix(M)
        if sp.simplify(M.det()) == 0:
            raise SingularMetricError("G^{ab} is singular")
        return cls(M, M.inv().applyfunc(sp.simplify))

    @classmethod
    def from_lower(cls, M) -> "MetricSpec":
        M = sp.Matrix(M)
        if sp.simplify(M.det()) == 0:
            raise SingularMetricError("G_{ab} is singular")
        return cls(M.inv().applyfunc(sp.simplify), M)

    @classmethod
    def identity(cls, n: int) -> "MetricSpec":
        return cls(sp.eye(n), sp.eye(n))

    @property
    def dim(self) -> int:
        return self.upper.shape[0]


def metric_tensor(G: MetricSpec, sigma: CoframeField, eta: FrameField) -> tuple[sp.Matrix, sp.Matrix]:
    """Coordinate metric ``g_{mu nu}`` and its inverse ``g^{mu nu}``."""
    S, F = sigma.matrix, eta.matrix
    lower = (S.T * G.lower * S).applyfunc(sp.simplify)
    upper = (F.T * G.upper * F).applyfunc(sp.simplify)
    return lower, upper


def christoffels(lower: sp.Matrix, upper: sp.Matrix, coords) -> list:
    """``Gamma[rho][nu][mu]`` of the Levi-Civita connection."""
    n = len(coords)
    if sp.simplify(lower.det()) == 0:
        raise SingularMetricError("metric tensor is singular")
    dg = [[[sp.diff(lower[a, b], coords[c]) for c in range(n)] for b in range(n)] for a in range(n)]
    G = [[[None] * n for _ in range(n)] for _ in range(n)]
    for r in range(n):
        for nu in range(n):
            for mu in range(nu, n):
                val = sum(
                    upper[r, t] * (dg[t][mu][nu] + dg[t][nu][mu] - dg[nu][mu][t])
                    for t in range(n)
                    if upper[r, t] != 0
                ) / 2
                val = sp.simplify(val)
                G[r][nu][mu] = G[r][mu][nu] = val
    return G


def frame_christoffels(A: LieAlgebra, G: MetricSpec, eta: FrameField, sigma: CoframeField) -> list:
    """Christoffels assembled from the frame decomposition

    ``Gamma^r_{nu mu} = Gam^a_bd sigma^b_nu sigma^d_mu eta_a^r + eta_a^r d_mu sigma^a_nu``
    with constant ``Gam^a_bd = -C^a_bd/2 - G^ac (G_eb C^e_dc + G_ed C^e_bc)/2``.
    """
    n = A.dim
    C = [[[sp.Rational(A.C[a][b][c]) for c in range(n)] for b in range(n)] for a in range(n)]
    Gu, Gl = G.upper, G.lower
    gam = [[[-C[a][b][d] / 2 - sum(Gu[a, c] * (Gl[e, b] * C[e][d][c] + Gl[e, d] * C[e][b][c]) for c in range(n) for e in range(n)) / 2
             for d in range(n)] for b in range(n)] for a in range(n)]
    S, F, x = sigma.matrix, eta.matrix, eta.coords
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for r in range(n):
        for nu in range(n):
            for mu in range(n):
                val = sum(gam[a][b][d] * S[b, nu] * S[d, mu] * F[a, r] for a in range(n) for b in range(n) for d in range(n))
                val += sum(F[a, r] * sp.diff(S[a, nu], x[mu]) for a in range(n))
                out[r][nu][mu] = sp.simplify(val)
    return out


def curvature(Gam: list, upper: sp.Matrix, coords):
    """Riemann (unsimplified), Ricci and scalar curvature in the module's sign convention."""
    n = len(coords)
    dG = [[[[sp.diff(Gam[r][m][s], coords[k]) for k in range(n)] for s in range(n)] for m in range(n)] for r in range(n)]
    R = [[[[0] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for r, s, m, nn in itertools.product(range(n), repeat=4):
        if m == nn:
            continue
        v = dG[r][m][s][nn] - dG[r][nn][s][m]
        v += sum(Gam[r][nn][l] * Gam[l][m][s] - Gam[r][m][l] * Gam[l][nn][s] for l in range(n))
        R[r][s][m][nn] = v
    Ric = sp.Matrix(n, n, lambda s, nn: sp.simplify(sum(R[r][s][r][nn] for r in range(n))))
    scalar = sp.simplify(sum(upper[s, nn] * Ric[s, nn] for s in range(n) for nn in range(n)))
    return R, Ric, scalar


def laplacian(G: MetricSpec, eta: FrameField) -> DifferentialOperator:
    """``Delta_G = G^ab (eta_a eta_b + eta_b eta_a) / 2`` expanded into coordinates."""
    n = eta.dim
    ops = eta.operators()
    total = DifferentialOperator(eta.coords)
    for a in range(n):
        for b in range(n):
            if G.upper[a, b] != 0:
                total = total + symmetrized_product([ops[a], ops[b]]).scale(G.upper[a, b])
    return total.simplify()


def laplace_beltrami(lower: sp.Matrix, upper: sp.Matrix, coords) -> DifferentialOperator:
    """``|g|^{-1/2} d_mu (|g|^{1/2} g^{mu nu} d_nu)`` built directly from the metric."""
    n = len(coords)
    det = sp.simplify(lower.det())
    rootg = sp.sqrt(sp.Abs(det)) if det.free_symbols & set(coords) else sp.Integer(1)
    terms = {}
    for mu in range(n):
        for nu in range(n):
            c = upper[mu, nu]
            if c == 0:
                continue
            a2 = [0] * n
            a2[mu] += 1
            a2[nu] += 1
            terms[tuple(a2)] = terms.get(tuple(a2), 0) + c
            a1 = [0] * n
            a1[nu] = 1
            terms[tuple(a1)] = terms.get(tuple(a1), 0) + sp.diff(rootg * c, coords[mu]) / rootg
    return DifferentialOperator(coords, terms).simplify()


class GeometryCache:
    """All metric-derived objects for one (chart, algebra, metric) triple."""

    def __init__(self, chart: GroupChart, algebra: LieAlgebra, metric: MetricSpec):
        if metric.dim != chart.dim:
            raise ValueError("metric and chart dimensions differ")
        self.chart = chart
        self.algebra = algebra
        self.metric = metric
        self.eta = right_invariant_frame(chart)
        self.sigma = coframe(self.eta)

    @property
    def coords(self):
        return self.chart.symbols

    @cached_property
    def _g(self):
        return metric_tensor(self.metric, self.sigma, self.eta)

    @property
    def g_lower(self) -> sp.Matrix:
        return self._g[0]

    @property
    def g_upper(self) -> sp.Matrix:
        return self._g[1]

    @cached_property
    def christoffel(self) -> list:
        return christoffels(self.g_lower, self.g_upper, self.coords)

    @cached_property
    def _curv(self):
        return curvature(self.christoffel, self.g_upper, self.coords)

    @property
    def riemann(self):
        return self._curv[0]

    @property
    def ricci(self) -> sp.Matrix:
        return self._curv[1]

    @property
    def scalar_curvature(self) -> sp.Expr:
        return self._curv[2]

    @cached_property
    def laplacian(self) -> DifferentialOperator:
        return laplacian(self.metric, self.eta)

    def metric_function(self):
        """Numeric ``g_{mu nu}(x)`` for given parameter values (oracle input)."""
        names = list(self.chart.names)
        params = sorted(set().union(*(X.free_names(e) for e in self.g_lower)) - set(names))
        fns = [[X.compile_expr(self.g_lower[i, j], names + params) for j in range(self.chart.dim)] for i in range(self.chart.dim)]

        def g(x, binding):
            args = list(x) + [binding[p] for p in params]
            return np.array([[f(*args).real for f in row] for row in fns])

        return g


def _sampled_max(exprs, names, box, samples, seed) -> float:
    rng = np.random.default_rng(seed)
    names = sorted(set(names) | set().union(*(X.free_names(e) for e in exprs)))
    pts = X.sample_bindings(names, box, samples, rng)
    worst = 0.0
    for e in exprs:
        if e == 0:
            continue
        v = X.compile_expr(e, names)(*(pts[k] for k in names))
        worst = max(worst, float(np.max(np.abs(v))))
    return worst


def metric_compatibility_residual(cache: GeometryCache, box=None, samples: int = 64, seed: int = 0) -> float:
    """Max of ``nabla_l g_{mu nu}`` at sampled points."""
    g, Gam, x = cache.g_lower, cache.christoffel, cache.coords
    n = len(x)
    exprs = []
    for l, m, nu in itertools.product(range(n), repeat=3):
        e = sp.diff(g[m, nu], x[l]) - sum(Gam[r][l][m] * g[r, nu] + Gam[r][l][nu] * g[m, r] for r in range(n))
        exprs.append(e)
    b = cache.chart.sample_box()
    b.update(box or {})
    return _sampled_max(exprs, cache.chart.names, b, samples, seed)


def bianchi_residual(cache: GeometryCache, box=None, samples: int = 32, seed: int = 0) -> float:
    """Max of the cyclic sum ``R^r_{s m n} + R^r_{m n s} + R^r_{n s m}``."""
    R = cache.riemann
    n = cache.chart.dim
    exprs = []
    for r, s, m, nn in itertools.product(range(n), repeat=4):
        if s < m < nn:
            exprs.append(R[r][s][m][nn] + R[r][m][nn][s] + R[r][nn][s][m])
    b = cache.chart.sample_box()
    b.update(box or {})
    return _sampled_max(exprs, cache.chart.names, b, samples, seed)


# ---------------------------------------------------------------------------
# finite-difference oracle (independent of the symbolic pipeline)

_W1 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_S1 = np.array([-2, -1, 1, 2])


def _d1(f, x, k, h):
    out = 0.0
    for w, s in zip(_W1, _S1):
        xp = np.array(x, dtype=float)
        xp[k] += s * h
        out = out + w * f(xp)
    return out / h


def numeric_christoffels(gfun, x, h: float = 1e-3) -> np.ndarray:
    """``Gamma[r, nu, mu]`` from fourth-order central differences of ``gfun``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    ginv = np.linalg.inv(gfun(x))
    dg = np.stack([_d1(gfun, x, k, h) for k in range(n)], axis=-1)  # dg[a, b, c] = d_c g_ab
    # lower[t, nu, mu] = (d_nu g_{t mu} + d_mu g_{t nu} - d_t g_{nu mu}) / 2
    lower = 0.5 * (np.einsum("tmn->tnm", dg) + np.einsum("tnm->tnm", dg) - np.einsum("nmt->tnm", dg))
    return np.einsum("rt,tnm->rnm", ginv, lower)


def numeric_ricci(gfun, x, h: float = 1e-2, h_inner: float = 1e-3):
    """Ricci tensor and scalar by nested finite differences, same sign convention."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    Gam = numeric_christoffels(gfun, x, h_inner)
    dGam = np.stack([_d1(lambda y: numeric_christoffels(gfun, y, h_inner), x, k, h) for k in range(n)], axis=-1)
    # dGam[r, m, s, k] = d_k Gamma^r_{m s}
    R = (
        np.einsum("rmsn->rsmn", dGam)
        - np.einsum("rnsm->rsmn", dGam)
        + np.einsum("rnl,lms->rsmn", Gam, Gam)
        - np.einsum("rml,lns->rsmn", Gam, Gam)
    )
    Ric = np.einsum("rsrn->sn", R)
    scalar = float(np.einsum("sn,sn->", np.linalg.inv(gfun(x)), Ric))
    return Ric, scalar
