"""Invariant suites run by ``lienls check``.

Each suite returns a :class:`SuiteResult`; tolerances are multiplied by a
global scale so a whole run can be tightened or relaxed consistently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import expr as X
from .algebra import is_casimir, jacobi_residual
from .catalog import CatalogEntry
from .errors import LieNLSError, NonScalarError, NotReducibleError
from .geometry import bianchi_residual, metric_compatibility_residual, numeric_ricci
from .group import commutator_residual, mixed_commutator_residual
from .orbit import casimir_scalar, rep_commutator_residual
from .reduction import AnsatzSpec, factorization_check, generator_transport_check

__all__ = ["SuiteResult", "TOLERANCES", "run_suites", "SUITES"]

TOLERANCES = {
    "jacobi": 0.0,
    "commutators": 1e-10,
    "casimirs": 1e-10,
    "polarization": 0.0,
    "curvature": 1e-6,
    "transport": 1e-9,
    "factorization": 1e-9,
}

SUITES = tuple(TOLERANCES)


@dataclass
class SuiteResult:
    suite: str
    status: str  # pass | fail | skip
    residual: float | None = None
    tolerance: float | None = None
    detail: str = ""
    witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def _judge(name, residual, tol, detail="", witness=None) -> SuiteResult:
    ok = residual <= tol
    return SuiteResult(name, "pass" if ok else "fail", residual, tol, detail, witness or {})


def _jacobi(entry, tol, seed, corrupt):
    r = float(abs(jacobi_residual(entry.algebra)))
    return _judge("jacobi", r, tol)


def _commutators(entry, tol, seed, corrupt):
    A = entry.algebra
    rs = {
        "left": commutator_residual(entry.xi, A, seed=seed),
        "right": commutator_residual(entry.eta, A, seed=seed),
        "mixed": mixed_commutator_residual(entry.xi, entry.eta, seed=seed),
    }
    if entry.polarized_chart is not None and entry.orbits:
        rs["lambda"] = rep_commutator_residual(entry.rep_in_q(), A, seed=seed)
    worst = max(rs.values())
    return _judge("commutators", worst, tol, ", ".join(f"{k} {v:.2e}" for k, v in rs.items()))


def _casimirs(entry, tol, seed, corrupt):
    bad = [str(K) for K in entry.algebra.casimirs if not is_casimir(K, entry.algebra, seed=seed)]
    if bad:
        return SuiteResult("casimirs", "fail", None, tol, f"not invariant: {bad}")
    vals = []
    if entry.polarized_chart is not None and entry.orbits:
        rep = entry.rep_in_q()
        for K in entry.algebra.casimirs:
            try:
                vals.append(f"{K} -> {casimir_scalar(K, rep, seed=seed)}")
            except NonScalarError as exc:
                return SuiteResult("casimirs", "fail", None, tol, f"{K}: {exc}")
    return SuiteResult("casimirs", "pass", 0.0, tol, "; ".join(vals))


def _polarization(entry, tol, seed, corrupt):
    notes = []
    for name in entry.orbits:
        try:
            o = entry.orbit(name)
        except LieNLSError as exc:
            return SuiteResult("polarization", "fail", None, tol, f"orbit '{name}': {exc}")
        notes.append(f"{name}: dim O = {o.dim}, dim Q = {o.reduced_dim}")
    return SuiteResult("polarization", "pass" if notes else "skip", None, tol, "; ".join(notes) or "no orbit presets")


def _curvature(entry, tol, seed, corrupt):
    """Symbolic pipeline identities plus agreement with finite differences."""
    rng = np.random.default_rng(seed)
    worst, notes = 0.0, []
    for mname in entry.metrics:
        cache = entry.geometry(mname)
        mc = metric_compatibility_residual(cache, seed=seed)
        bi = bianchi_residual(cache, seed=seed)
        gfun = cache.metric_function()
        names = list(entry.chart.names)
        params = sorted(set().union(*(X.free_names(e) for e in cache.g_lower)) - set(names))
        Ric_names = sorted(set(names) | set(params) | set().union(*(X.free_names(e) for e in cache.ricci)))
        fd = 0.0
        box = {n: (-1.0, 1.0) for n in names}
        box.update(entry.chart.sample_box())
        for _ in range(2):
            binding = {p: rng.uniform(*X.DEFAULT_RANGE) for p in params}
            x = np.array([rng.uniform(*box[n]) for n in names])
            Ric_fd, _ = numeric_ricci(lambda y: gfun(y, binding), x)
            vals = dict(zip(names, x))
            vals.update(binding)
            Ric_sym = np.array([[complex(X.compile_expr(cache.ricci[i, j], Ric_names)(*(vals[n] for n in Ric_names))).real
                                 for j in range(entry.chart.dim)] for i in range(entry.chart.dim)])
            fd = max(fd, float(np.max(np.abs(Ric_sym - Ric_fd))))
        worst = max(worst, mc, bi, fd)
        notes.append(f"{mname}: compat {mc:.1e}, bianchi {bi:.1e}, fd-ricci {fd:.1e}")
    return _judge("curvature", worst, tol, "; ".join(notes))


def _ansatz(entry, corrupt) -> AnsatzSpec:
    a = entry.ansatz()
    if corrupt:
        bad = a.phase * sp.exp(sp.I * entry.chart.symbols[0])
        a = AnsatzSpec(a.kernel.with_phase(bad))
    return a


def _transport(entry, tol, seed, corrupt):
    if entry.kernel_data is None or entry.polarized_chart is None or not entry.orbits:
        return SuiteResult("transport", "skip", None, tol, "no D-kernel data")
    w = {}
    r = generator_transport_check(_ansatz(entry, corrupt), entry.rep(), entry.eta, seed=seed, witness=w)
    return _judge("transport", r, tol, "corrupted phase" if corrupt else "", w if r > tol else None)


def _factorization(entry, tol, seed, corrupt):
    if entry.kernel_data is None or entry.polarized_chart is None or not entry.orbits:
        return SuiteResult("factorization", "skip", None, tol, "no D-kernel data")
    worst, notes = 0.0, []
    for ename in entry.equations:
        try:
            red = entry.reduced(ename)
        except NotReducibleError as exc:
            notes.append(f"{ename}: not reducible ({exc})")
            continue
        r = factorization_check(entry.geometry(), entry.equation(ename), red, _ansatz(entry, corrupt), seed=seed)
        worst = max(worst, r)
        notes.append(f"{ename}: {r:.2e}")
    return _judge("factorization", worst, tol, "; ".join(notes))


_RUNNERS = {
    "jacobi": _jacobi,
    "commutators": _commutators,
    "casimirs": _casimirs,
    "polarization": _polarization,
    "curvature": _curvature,
    "transport": _transport,
    "factorization": _factorization,
}


def run_suites(entry: CatalogEntry, seed: int = 0, tolerance_scale: float = 1.0, corrupt_phase: bool = False,
               only=None) -> list[SuiteResult]:
    out = []
    for name in SUITES:
        if only and name not in only:
            continue
        tol = TOLERANCES[name] * tolerance_scale
        try:
            out.append(_RUNNERS[name](entry, tol, seed, corrupt_phase))
        except LieNLSError as exc:
            out.append(SuiteResult(name, "fail", None, tol, f"{type(exc).__name__}: {exc}",
                                   getattr(exc, "witness", None) or {}))
    return out
