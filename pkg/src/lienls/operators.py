"""Linear differential operators with symbolic coefficients.

An operator is a map from multi-indices over a fixed tuple of coordinates to
coefficient expressions::

    L = sum_alpha  c_alpha(x) d^alpha

Composition uses the Leibniz rule, so products of first-order operators are
exact.
"""

from __future__ import annotations

import itertools
from math import comb
from typing import Iterable, Mapping, Sequence

import sympy as sp

__all__ = ["DifferentialOperator", "symmetrized_product"]


def _deriv(f: sp.Expr, coords: Sequence[sp.Symbol], alpha: tuple[int, ...]) -> sp.Expr:
    for s, k in zip(coords, alpha):
        if k:
            f = sp.diff(f, s, k)
    return f


class DifferentialOperator:
    __slots__ = ("coords", "terms")

    def __init__(self, coords: Sequence[sp.Symbol], terms: Mapping[tuple, sp.Expr] | None = None):
        self.coords = tuple(coords)
        n = len(self.coords)
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != n:
                raise ValueError(f"multi-index {alpha} does not match {n} coordinates")
            c = sp.sympify(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        self.terms = {a: c for a, c in clean.items() if c != 0}

    # construction -------------------------------------------------------
    @classmethod
    def scalar(cls, coords, c) -> "DifferentialOperator":
        return cls(coords, {(0,) * len(coords): c})

    @classmethod
    def vector_field(cls, coords, coeffs: Sequence[sp.Expr]) -> "DifferentialOperator":
        n = len(coords)
        terms = {}
        for k, c in enumerate(coeffs):
            alpha = [0] * n
            alpha[k] = 1
            terms[tuple(alpha)] = c
        return cls(coords, terms)

    @classmethod
    def partial(cls, coords, *which: int) -> "DifferentialOperator":
        alpha = [0] * len(coords)
        for k in which:
            alpha[k] += 1
        return cls(coords, {tuple(alpha): 1})

    # inspection ---------------------------------------------------------
    @property
    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def coefficient(self, alpha: Iterable[int]) -> sp.Expr:
        return self.terms.get(tuple(alpha), sp.Integer(0))

    def coefficient_by_name(self, *names: str) -> sp.Expr:
        alpha = [0] * len(self.coords)
        lookup = {s.name: k for k, s in enumerate(self.coords)}
        for nm in names:
            alpha[lookup[nm]] += 1
        return self.coefficient(alpha)

    def multi_indices(self, max_order: int | None = None):
        top = self.order if max_order is None else max_order
        n = len(self.coords)
        for total in range(top + 1):
            for alpha in itertools.product(range(total + 1), repeat=n):
                if sum(alpha) == total:
                    yield alpha

    # algebra ------------------------------------------------------------
    def _check(self, other: "DifferentialOperator"):
        if other.coords != self.coords:
            raise ValueError("operators act on different coordinates")

    def __add__(self, other):
        if not isinstance(other, DifferentialOperator):
            other = DifferentialOperator.scalar(self.coords, other)
        self._check(other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0) + c
        return DifferentialOperator(self.coords, terms)

    __radd__ = __add__

    def __neg__(self):
        return DifferentialOperator(self.coords, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "DifferentialOperator":
        return DifferentialOperator(self.coords, {a: c * v for a, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, other):
        """Composition ``self o other``; a scalar multiplies coefficients."""
        if not isinstance(other, DifferentialOperator):
            return self.scale(other)
        self._check(other)
        terms: dict[tuple, sp.Expr] = {}
        for alpha, A in self.terms.items():
            for beta, B in other.terms.items():
                for gamma in itertools.product(*(range(k + 1) for k in alpha)):
                    w = 1
                    for ak, gk in zip(alpha, gamma):
                        w *= comb(ak, gk)
                    dB = _deriv(B, self.coords, gamma)
                    if dB == 0:
                        continue
                    key = tuple(a - g + b for a, g, b in zip(alpha, gamma, beta))
                    terms[key] = terms.get(key, 0) + w * A * dB
        return DifferentialOperator(self.coords, terms)

    def commutator(self, other) -> "DifferentialOperator":
        return (self * other - other * self).simplify()

    def simplify(self, fn=sp.simplify) -> "DifferentialOperator":
        return DifferentialOperator(self.coords, {a: fn(c) for a, c in self.terms.items()})

    def expand(self) -> "DifferentialOperator":
        return self.simplify(sp.expand)

    def subs(self, mapping) -> "DifferentialOperator":
        return DifferentialOperator(self.coords, {a: sp.sympify(c).subs(mapping) for a, c in self.terms.items()})

    def rename(self, new_coords: Sequence[sp.Symbol]) -> "DifferentialOperator":
        """Same operator written in a new set of coordinate symbols."""
        m = dict(zip(self.coords, new_coords))
        return DifferentialOperator(tuple(new_coords), {a: sp.sympify(c).xreplace(m) for a, c in self.terms.items()})

    def apply(self, f: sp.Expr) -> sp.Expr:
        f = sp.sympify(f)
        return sp.Add(*[c * _deriv(f, self.coords, a) for a, c in self.terms.items()])

    __call__ = apply

    def formal_adjoint(self, density: sp.Expr = 1) -> "DifferentialOperator":
        """Formal adjoint w.r.t. ``density * dx`` (complex coefficients conjugated).

        ``L^+ u = (1/rho) sum_alpha (-1)^|alpha| d^alpha(rho conj(c_alpha) u)``.
        """
        u = sp.Function("_u")(*self.coords)
        total = 0
        for alpha, c in self.terms.items():
            total += (-1) ** sum(alpha) * _deriv(density * sp.conjugate(c) * u, self.coords, alpha)
        total = sp.expand(total / density)
        terms = {}
        for alpha in self.multi_indices():
            d = _deriv(u, self.coords, alpha) if any(alpha) else u
            coeff = total.coeff(d)
            if coeff != 0:
                terms[alpha] = coeff
                total = sp.expand(total - coeff * d)
        if sp.simplify(total) != 0:
            raise ArithmeticError("could not collect adjoint coefficients")
        return DifferentialOperator(self.coords, terms)

    def __repr__(self):
        parts = []
        for a, c in sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), kv[0])):
            d = "".join(f"d{s.name}" * k for s, k in zip(self.coords, a))
            parts.append(f"({c}){'*' + d if d else ''}")
        return " + ".join(parts) if parts else "0"


def symmetrized_product(ops: Sequence[DifferentialOperator]) -> DifferentialOperator:
    """Average of the products over all distinct orderings of ``ops``."""
    ops = list(ops)
    if not ops:
        raise ValueError("empty product")
    if len(ops) == 1:
        return ops[0]
    perms = set(itertools.permutations(range(len(ops))))
    total = None
    for p in perms:
        prod = ops[p[0]]
        for k in p[1:]:
            prod = prod * ops[k]
        total = prod if total is None else total + prod
    return total.scale(sp.Rational(1, len(perms)))
