"""Symbolic expressions for coefficient functions.

Every coefficient in the toolkit (frames, metrics, kernels, reduced equations)
is a sympy expression built from rational constants, the imaginary unit, real
symbols, ``+``, ``*``, powers and ``sin``/``cos``/``exp``/``log``.  This module
is the only place that knows how those expressions are created, serialized,
evaluated and compared.

Identity testing is randomized: two expressions are declared equal when they
agree at many sampled bindings.  Failures carry a witness binding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
import sympy as sp

from .errors import DomainError, SerializationError, UnboundSymbolError

__all__ = [
    "sym",
    "symbols",
    "I",
    "HBAR",
    "diff",
    "evaluate",
    "compile_expr",
    "equiv",
    "EquivResult",
    "normalize",
    "to_prefix",
    "parse",
    "free_names",
    "DEFAULT_RANGE",
]

I = sp.I

# sampling range for any symbol not mentioned in a box
DEFAULT_RANGE = (0.5, 2.0)
SINGULAR_THRESHOLD = 1e-3


def sym(name: str) -> sp.Symbol:
    """Return the (real) symbol used for ``name`` everywhere in the toolkit."""
    return sp.Symbol(name, real=True)


def symbols(names: str | Iterable[str]) -> tuple[sp.Symbol, ...]:
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    return tuple(sym(n) for n in names)


HBAR = sym("hbar")


def free_names(e: sp.Expr) -> set[str]:
    return {s.name for s in sp.sympify(e).free_symbols}


def diff(e: sp.Expr, var: sp.Symbol | str) -> sp.Expr:
    """Exact partial derivative.  Symbols other than ``var`` are constants."""
    if isinstance(var, str):
        var = sym(var)
    return sp.diff(e, var)


def normalize(e: sp.Expr) -> sp.Expr:
    """Flatten sums/products and fold constants (idempotent)."""
    return sp.expand(sp.sympify(e))


def _as_binding(binding: Mapping) -> dict[sp.Symbol, sp.Expr]:
    out = {}
    for k, v in binding.items():
        s = sym(k) if isinstance(k, str) else k
        out[s] = sp.sympify(v)
    return out


def evaluate(e: sp.Expr, binding: Mapping) -> complex:
    """Evaluate ``e`` at a full binding of its free symbols.

    Raises :class:`UnboundSymbolError` when a free symbol is missing and
    :class:`DomainError` when the value is infinite or undefined (``log(0)``).
    """
    e = sp.sympify(e)
    b = _as_binding(binding)
    bound = {s.name for s in b}
    missing = sorted(n for n in free_names(e) if n not in bound)
    if missing:
        raise UnboundSymbolError(missing)
    # match by name so differently-assumed symbols still bind
    by_name = {s.name: v for s, v in b.items()}
    val = e.xreplace({s: by_name[s.name] for s in e.free_symbols})
    if val.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise DomainError(f"expression is undefined at {dict(binding)}")
    out = complex(sp.N(val, 30))
    if not np.isfinite(out.real) or not np.isfinite(out.imag):
        raise DomainError(f"expression is not finite at {dict(binding)}")
    return out


_compile_cache: dict = {}


def compile_expr(e: sp.Expr, names: Iterable[str]) -> Callable[..., np.ndarray]:
    """Vectorized complex evaluator for ``e`` with positional ``names``.

    The returned function broadcasts its arguments and always returns a
    complex ndarray.
    """
    names = tuple(names)
    e = sp.sympify(e)
    missing = sorted(free_names(e) - set(names))
    if missing:
        raise UnboundSymbolError(missing)
    key = (e, names)
    fn = _compile_cache.get(key)
    if fn is None:
        args = [sym(n) for n in names]
        # replace any differently-assumed symbols by ours
        e2 = e.xreplace({s: sym(s.name) for s in e.free_symbols})
        raw = sp.lambdify(args, e2, modules="numpy", dummify=True, cse=True)

        def fn(*vals, _raw=raw):
            vals = [np.asarray(v, dtype=complex) for v in vals]
            with np.errstate(all="ignore"):
                out = _raw(*vals)
            shape = np.broadcast_shapes(*(np.shape(v) for v in vals)) if vals else ()
            return np.broadcast_to(np.asarray(out, dtype=complex), shape).copy()

        if len(_compile_cache) > 4096:
            _compile_cache.clear()
        _compile_cache[key] = fn
    return fn


def _singular_parts(e: sp.Expr) -> list[sp.Expr]:
    parts = []
    for node in sp.preorder_traversal(e):
        if isinstance(node, sp.Pow) and node.exp.is_number and node.exp.is_negative:
            parts.append(node.base)
        elif isinstance(node, sp.log):
            parts.append(node.args[0])
    return parts


@dataclass
class EquivResult:
    """Outcome of a randomized identity test.  Truthy iff the test passed."""

    equal: bool
    max_error: float
    trials: int
    witness: dict | None = field(default=None)

    def __bool__(self) -> bool:
        return self.equal


def sample_bindings(
    names: Iterable[str],
    box: Mapping[str, tuple[float, float]] | None,
    n: int,
    rng: np.random.Generator,
    avoid: Iterable[sp.Expr] = (),
) -> dict[str, np.ndarray]:
    """Draw ``n`` real bindings, rejecting points where any ``avoid``
    expression is smaller than the singularity threshold in modulus."""
    names = sorted(names)
    box = dict(box or {})
    avoid = list(avoid)
    checks = [compile_expr(a, names) for a in avoid]
    out = {k: np.empty(n) for k in names}
    filled = 0
    for _ in range(200):
        if filled >= n:
            break
        m = 2 * (n - filled) + 8
        cand = {}
        for k in names:
            lo, hi = box.get(k, DEFAULT_RANGE)
            cand[k] = rng.uniform(lo, hi, m)
        ok = np.ones(m, dtype=bool)
        for c in checks:
            v = c(*(cand[k] for k in names))
            ok &= np.isfinite(v) & (np.abs(v) >= SINGULAR_THRESHOLD)
        idx = np.flatnonzero(ok)[: n - filled]
        for k in names:
            out[k][filled : filled + len(idx)] = cand[k][idx]
        filled += len(idx)
    if filled < n:
        raise DomainError("could not find enough non-singular sample points")
    return out


def equiv(
    e1: sp.Expr,
    e2: sp.Expr,
    box: Mapping[str, tuple[float, float]] | None = None,
    trials: int = 64,
    tol: float = 1e-10,
    seed: int | np.random.Generator = 0,
) -> EquivResult:
    """Randomized identity test ``e1 == e2``.

    Passes iff ``|e1 - e2| <= tol * (1 + |e1|)`` at every sampled binding.
    Symbols absent from ``box`` are drawn from :data:`DEFAULT_RANGE`.
    """
    if trials < 32:
        raise ValueError("equiv needs at least 32 trials")
    e1, e2 = sp.sympify(e1), sp.sympify(e2)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    names = sorted(free_names(e1) | free_names(e2))
    pts = sample_bindings(names, box, trials, rng, _singular_parts(e1) + _singular_parts(e2))
    args = [pts[k] for k in names]
    v1 = compile_expr(e1, names)(*args) if names else np.full(trials, complex(e1))
    v2 = compile_expr(e2, names)(*args) if names else np.full(trials, complex(e2))
    v1 = np.broadcast_to(v1, (trials,))
    v2 = np.broadcast_to(v2, (trials,))
    err = np.abs(v1 - v2)
    scaled = err / (1.0 + np.abs(v1))
    bad = ~(scaled <= tol)
    max_err = float(np.nanmax(np.where(np.isfinite(scaled), scaled, np.inf)))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        witness = {n: float(pts[n][k]) for n in names}
        return EquivResult(False, max_err, trials, witness)
    return EquivResult(True, max_err, trials)


# ---------------------------------------------------------------------------
# prefix serialization

_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "log": sp.log}
_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")
_NUMBER = re.compile(r"^[+-]?\d+(/\d+)?$|^[+-]?\d*\.\d+$")


def to_prefix(e: sp.Expr) -> str:
    """Serialize to the parenthesized prefix format, e.g. ``(* 2 (sin x))``."""
    e = sp.sympify(e)
    if e is sp.I:
        return "I"
    if e is sp.pi:
        return "pi"
    if isinstance(e, sp.Symbol):
        return e.name
    if isinstance(e, (sp.Integer, sp.Rational)):
        return str(e)
    if isinstance(e, sp.Add):
        return "(+ " + " ".join(to_prefix(a) for a in e.args) + ")"
    if isinstance(e, sp.Mul):
        return "(* " + " ".join(to_prefix(a) for a in e.args) + ")"
    if isinstance(e, sp.Pow):
        return f"(^ {to_prefix(e.base)} {to_prefix(e.exp)})"
    for name, f in _FUNCS.items():
        if isinstance(e, f):
            return f"({name} {to_prefix(e.args[0])})"
    if e is sp.E:
        return "(exp 1)"
    if isinstance(e, (sp.sinh, sp.cosh, sp.tanh, sp.tan)):
        # hyperbolic forms appear when sympy evaluates sin/cos at imaginary arguments
        return to_prefix(e.rewrite(sp.exp))
    raise SerializationError(f"cannot serialize {type(e).__name__}: {e}")


def parse(text: str) -> sp.Expr:
    """Parse the prefix format.  Also accepts ``-`` and ``/`` as operators."""
    if isinstance(text, (int, float)):
        return sp.Rational(str(text)) if isinstance(text, float) else sp.Integer(text)
    tokens = _TOKEN.findall(str(text))
    if not tokens:
        raise SerializationError("empty expression")
    pos = 0

    def atom(tok: str) -> sp.Expr:
        if tok == "I":
            return sp.I
        if tok == "pi":
            return sp.pi
        if _NUMBER.match(tok):
            return sp.Rational(tok)
        if _NAME.match(tok):
            return sym(tok)
        raise SerializationError(f"bad token {tok!r}")

    def node() -> sp.Expr:
        nonlocal pos
        if pos >= len(tokens):
            raise SerializationError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise SerializationError("unexpected ')'")
        if tok != "(":
            return atom(tok)
        if pos >= len(tokens):
            raise SerializationError("unexpected end of expression")
        op = tokens[pos]
        pos += 1
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            args.append(node())
        if pos >= len(tokens):
            raise SerializationError("missing ')'")
        pos += 1
        return _apply(op, args)

    out = node()
    if pos != len(tokens):
        raise SerializationError(f"trailing tokens: {' '.join(tokens[pos:])}")
    return out


def _apply(op: str, args: list[sp.Expr]) -> sp.Expr:
    if op == "+":
        return sp.Add(*args)
    if op == "*":
        return sp.Mul(*args)
    if op == "-":
        if len(args) == 1:
            return -args[0]
        if len(args) == 2:
            return args[0] - args[1]
    elif op == "/":
        if len(args) == 2:
            return args[0] / args[1]
    elif op == "^":
        if len(args) == 2:
            return sp.Pow(args[0], args[1])
    elif op in _FUNCS:
        if len(args) == 1:
            return _FUNCS[op](args[0])
    else:
        raise SerializationError(f"unknown operator {op!r}")
    raise SerializationError(f"wrong number of arguments for {op!r}: {len(args)}")
