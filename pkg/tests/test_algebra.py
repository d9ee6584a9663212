from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from lienls import expr as X
from lienls.algebra import (
    LieAlgebra,
    Subalgebra,
    beta_covector,
    dual_symbols,
    index,
    is_casimir,
    jacobi_residual,
    poisson_bracket,
)
from lienls.errors import AlgebraError, NotSubalgebraError

E2 = LieAlgebra.from_brackets(3, [(1, 3, 2, -1), (2, 3, 1, 1)])
S4 = LieAlgebra.from_brackets(4, [(2, 3, 1, 1), (2, 4, 2, 1), (3, 4, 3, -1)])


def test_structure_constants_antisymmetric():
    for A in (E2, S4):
        C = A.array
        assert (C + C.transpose(0, 2, 1) == 0).all()
    assert E2.bracket((1, 0, 0), (0, 0, 1)) == (0, -1, 0)


def test_jacobi_examples():
    assert jacobi_residual(E2) == 0
    assert jacobi_residual(S4) == 0
    # [e1,e3] = +e2 consistently (both C^2_13 and C^2_31): still a Lie algebra,
    # since e3 acts by derivations on the abelian ideal span{e1, e2}
    flipped = LieAlgebra.from_brackets(3, [(1, 3, 2, 1), (2, 3, 1, 1)])
    assert jacobi_residual(flipped) == 0
    # flipping one entry only breaks antisymmetry and is rejected up front
    C = [[list(r) for r in m] for m in E2.C]
    C[1][0][2] = -C[1][0][2]
    with pytest.raises(AlgebraError):
        LieAlgebra(3, tuple(tuple(tuple(r) for r in m) for m in C))
    # [e1,e2] = e3, [e1,e3] = e1: J(e1,e2,e3) = [e1,e2] = e3
    bad = LieAlgebra.from_brackets(3, [(1, 2, 3, 1), (1, 3, 1, 1)])
    assert jacobi_residual(bad) == 1


def test_bad_bracket_input():
    with pytest.raises(AlgebraError):
        LieAlgebra.from_brackets(3, [(1, 1, 2, 1)])
    with pytest.raises(AlgebraError):
        LieAlgebra.from_brackets(3, [(1, 4, 2, 1)])


def test_poisson_bracket_examples():
    f1, f2, f3 = dual_symbols(3)
    assert sp.expand(poisson_bracket(f1, f3, E2) + f2) == 0
    K = f1**2 + f2**2
    for fa in (f1, f2, f3):
        assert poisson_bracket(K, fa, E2) == 0
    assert poisson_bracket(f1, f2, LieAlgebra.abelian(2)) == 0


def test_index_examples():
    assert index(E2) == 1
    assert index(S4) == 2
    for n in (1, 3, 5):
        assert index(LieAlgebra.abelian(n)) == n


def test_orbit_dimension_even():
    for A in (E2, S4):
        assert (A.dim - index(A)) % 2 == 0


def test_casimir_examples():
    f1, f2, f3, f4 = dual_symbols(4)
    assert is_casimir(f1 * f4 - f3 * f2, S4)
    assert is_casimir(f1, S4)
    assert is_casimir(f1**2 + f2**2, E2)
    assert not is_casimir(f3, E2)


def test_beta_examples():
    assert beta_covector(E2, Subalgebra.spanned_by(3, [1, 2])) == (0, 0)
    assert beta_covector(S4, Subalgebra.spanned_by(4, [1, 3, 4])) == (0, 0, Fraction(-1, 2))
    assert beta_covector(LieAlgebra.abelian(3), Subalgebra.spanned_by(3, [2])) == (0,)
    with pytest.raises(NotSubalgebraError):
        # span{e1, e3} is not closed on e(2): [e1, e3] = -e2
        beta_covector(E2, Subalgebra.spanned_by(3, [1, 3]))


def test_subalgebra_helpers():
    h = Subalgebra.from_rows([[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert h.dim == 3 and h.is_closed(S4)
    assert h.coordinate_indices() == [0, 2, 3]
    assert h.coordinates((2, 0, 3, 0)) == (2, 3, 0)
    assert h.coordinates((0, 1, 0, 0)) is None


_F = dual_symbols(4)


def _poly(coeffs):
    # quadratic polynomial in f1..f4 with small integer coefficients
    terms = [_F[i] * _F[k] for i in range(4) for k in range(i, 4)] + list(_F)
    return sum(c * t for c, t in zip(coeffs, terms))


polys = st.lists(st.integers(-3, 3), min_size=14, max_size=14).map(_poly)


@settings(max_examples=50, deadline=None)
@given(polys, polys, polys)
def test_poisson_bracket_antisymmetry_and_jacobi(a, b, c):
    for A in (S4,):
        ab = poisson_bracket(a, b, A)
        assert X.equiv(ab, -poisson_bracket(b, a, A))
        jac = (
            poisson_bracket(a, poisson_bracket(b, c, A), A)
            + poisson_bracket(b, poisson_bracket(c, a, A), A)
            + poisson_bracket(c, poisson_bracket(a, b, A), A)
        )
        assert X.equiv(jac, 0)
