"""Lie algebras given by structure constants.

Structure constants are exact rationals, ``C[a][b][c] = C^a_{bc}`` with
``[e_b, e_c] = C^a_{bc} e_a``.  Indices are zero-based internally; labels
``e1 .. en`` are used for display and in definition files.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy as sp

from . import expr as X
from .errors import AlgebraError, NotSubalgebraError, RankInstabilityError

__all__ = [
    "LieAlgebra",
    "Subalgebra",
    "dual_symbols",
    "jacobi_residual",
    "poisson_bracket",
    "numeric_rank",
    "index",
    "is_casimir",
    "beta_covector",
]

RANK_THRESHOLD = 1e-9


def dual_symbols(n: int) -> tuple[sp.Symbol, ...]:
    """Coordinates ``f1 .. fn`` on the dual space."""
    return tuple(X.sym(f"f{k + 1}") for k in range(n))


@dataclass(frozen=True)
class LieAlgebra:
    dim: int
    C: tuple  # C[a][b][c] as Fraction
    labels: tuple[str, ...] = ()
    casimirs: tuple = ()

    def __post_init__(self):
        n = self.dim
        if len(self.C) != n or any(len(r) != n or any(len(s) != n for s in r) for r in self.C):
            raise AlgebraError(f"structure constants must be {n}x{n}x{n}")
        for a, b, c in itertools.product(range(n), repeat=3):
            if self.C[a][b][c] != -self.C[a][c][b]:
                raise AlgebraError(
                    f"structure constants not antisymmetric at C^{a + 1}_{b + 1}{c + 1}"
                )
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"e{k + 1}" for k in range(n)))

    @classmethod
    def from_brackets(cls, dim: int, brackets: Iterable, labels=(), casimirs=()) -> "LieAlgebra":
        """Build from nonzero brackets ``(b, c, a, coef)`` meaning
        ``[e_b, e_c] += coef * e_a`` (one-based indices)."""
        C = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for b, c, a, coef in brackets:
            if not all(1 <= i <= dim for i in (a, b, c)):
                raise AlgebraError(f"bracket index out of range: {(b, c, a)}")
            if b == c:
                raise AlgebraError(f"bracket [e{b}, e{c}] must vanish")
            coef = Fraction(str(coef))
            C[a - 1][b - 1][c - 1] += coef
            C[a - 1][c - 1][b - 1] -= coef
        Ct = tuple(tuple(tuple(r) for r in m) for m in C)
        return cls(dim, Ct, tuple(labels), tuple(sp.sympify(k) for k in casimirs))

    @classmethod
    def abelian(cls, dim: int) -> "LieAlgebra":
        return cls.from_brackets(dim, [])

    @property
    def array(self) -> np.ndarray:
        return np.array(self.C, dtype=float)

    def bracket(self, u: Sequence, v: Sequence) -> tuple:
        """Bracket of two algebra elements given by coordinate vectors."""
        n = self.dim
        return tuple(
            sum(self.C[a][b][c] * u[b] * v[c] for b in range(n) for c in range(n))
            for a in range(n)
        )

    def nonzero_brackets(self):
        n = self.dim
        for b in range(n):
            for c in range(b + 1, n):
                for a in range(n):
                    if self.C[a][b][c]:
                        yield b, c, a, self.C[a][b][c]

    def poisson_tensor(self, f: Sequence) -> sp.Matrix:
        """``M_ab(f) = C^c_ab f_c``."""
        n = self.dim
        return sp.Matrix(
            n, n, lambda a, b: sum(sp.Rational(self.C[c][a][b]) * f[c] for c in range(n))
        )


def jacobi_residual(A: LieAlgebra) -> Fraction:
    """Exact max-norm of the Jacobi identity residual."""
    n, C = A.dim, A.C
    worst = Fraction(0)
    for a, b, c, d in itertools.product(range(n), repeat=4):
        s = sum(
            C[e][a][b] * C[d][e][c] + C[e][b][c] * C[d][e][a] + C[e][c][a] * C[d][e][b]
            for e in range(n)
        )
        worst = max(worst, abs(s))
    return worst


def poisson_bracket(phi: sp.Expr, psi: sp.Expr, A: LieAlgebra) -> sp.Expr:
    """Lie-Poisson bracket ``{phi, psi}(f) = C^c_ab f_c dphi/df_a dpsi/df_b``."""
    f = dual_symbols(A.dim)
    dphi = [sp.diff(phi, s) for s in f]
    dpsi = [sp.diff(psi, s) for s in f]
    out = 0
    for b, c, a, coef in A.nonzero_brackets():
        out += sp.Rational(coef) * f[a] * (dphi[b] * dpsi[c] - dphi[c] * dpsi[b])
    return X.normalize(out)


def numeric_rank(M: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    """Rank by Gaussian elimination with complete pivoting."""
    M = np.array(M, dtype=complex)
    if M.size == 0:
        return 0
    scale = max(1.0, float(np.abs(M).max()))
    M = M / scale
    rank = 0
    rows, cols = M.shape
    for _ in range(min(rows, cols)):
        sub = np.abs(M[rank:, rank:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= threshold:
            break
        i += rank
        j += rank
        M[[rank, i]] = M[[i, rank]]
        M[:, [rank, j]] = M[:, [j, rank]]
        M[rank + 1 :] -= np.outer(M[rank + 1 :, rank] / M[rank, rank], M[rank])
        rank += 1
    return rank


def index(A: LieAlgebra, samples: int = 8, seed: int = 0) -> int:
    """``n - rank C^c_ab f_c`` at generic functionals, agreed across samples."""
    rng = np.random.default_rng(seed)
    C = A.array
    ranks = set()
    for _ in range(samples):
        f = rng.uniform(-1.0, 1.0, A.dim)
        ranks.add(numeric_rank(np.einsum("cab,c->ab", C, f)))
    if len(ranks) != 1:
        raise RankInstabilityError(f"Poisson tensor rank differs between samples: {sorted(ranks)}")
    return A.dim - ranks.pop()


def is_casimir(K: sp.Expr, A: LieAlgebra, seed: int = 0) -> bool:
    f = dual_symbols(A.dim)
    box = {s.name: (-2.0, 2.0) for s in f}
    return all(bool(X.equiv(poisson_bracket(K, fa, A), 0, box=box, seed=seed)) for fa in f)


@dataclass(frozen=True)
class Subalgebra:
    """Span of rational row vectors inside an algebra."""

    basis: tuple  # tuple of tuples of Fraction
    labels: tuple[str, ...] = field(default=())

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence]) -> "Subalgebra":
        return cls(tuple(tuple(Fraction(str(x)) for x in r) for r in rows))

    @classmethod
    def spanned_by(cls, dim: int, indices: Iterable[int]) -> "Subalgebra":
        """Coordinate subalgebra from one-based basis indices."""
        rows = []
        for k in indices:
            r = [Fraction(0)] * dim
            r[k - 1] = Fraction(1)
            rows.append(tuple(r))
        return cls(tuple(rows))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> sp.Matrix:
        return sp.Matrix([[sp.Rational(x) for x in r] for r in self.basis])

    def coordinates(self, v: Sequence) -> tuple | None:
        """Coefficients of ``v`` in this basis, or None if ``v`` is outside."""
        B = self.matrix().T
        vv = sp.Matrix([sp.Rational(x) for x in v])
        try:
            sol, params = B.gauss_jordan_solve(vv)
        except ValueError:
            return None
        if params.shape[0]:
            sol = sol.subs({p: 0 for p in params})
        return tuple(Fraction(int(s.p), int(s.q)) for s in sol)

    def coordinate_indices(self) -> list[int] | None:
        """Zero-based indices if every basis row is a unit vector."""
        out = []
        for r in self.basis:
            nz = [k for k, x in enumerate(r) if x != 0]
            if len(nz) != 1 or r[nz[0]] != 1:
                return None
            out.append(nz[0])
        return out

    def is_closed(self, A: LieAlgebra) -> bool:
        return all(
            self.coordinates(A.bracket(u, v)) is not None
            for u, v in itertools.combinations(self.basis, 2)
        )


def beta_covector(A: LieAlgebra, h: Subalgebra) -> tuple[Fraction, ...]:
    """``beta_k = -1/2 Tr(ad_{h_k} restricted to h)`` on the basis of ``h``."""
    if not h.is_closed(A):
        raise NotSubalgebraError("basis is not closed under the bracket")
    beta = []
    for u in h.basis:
        tr = Fraction(0)
        for k, v in enumerate(h.basis):
            coords = h.coordinates(A.bracket(u, v))
            tr += coords[k]
        beta.append(-tr / 2)
    return tuple(beta)
