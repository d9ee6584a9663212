import numpy as np
import pytest
import sympy as sp

from lienls import expr as X
from lienls.algebra import LieAlgebra, Subalgebra, dual_symbols
from lienls.errors import NonScalarError, PolarizationError, SplitIncompatibleError
from lienls.orbit import (
    casimir_scalar,
    induced_rep_apply,
    lambda_rep,
    orbit_dim,
    polarization_check,
    rep_commutator_residual,
    rep_symmetry_residual,
)

j, j1, j2, hbar, q = X.symbols("j j1 j2 hbar q")


def test_orbit_dims(e2, s4):
    assert orbit_dim(e2.algebra, [j, 0, 0]) == 2
    assert orbit_dim(s4.algebra, [j1, 0, 0, j2]) == 2
    assert orbit_dim(e2.algebra, [0, 0, 0]) == 0
    for entry in (e2, s4):
        o = entry.orbit()
        assert o.dim == entry.algebra.dim - 1 - (entry is s4)
        assert o.reduced_dim == 1


def test_polarizations(e2, s4):
    o = polarization_check(e2.algebra, [j, 0, 0], Subalgebra.spanned_by(3, [1, 2]))
    assert o.polarization.dim == 2
    o = polarization_check(s4.algebra, [j1, 0, 0, j2], Subalgebra.spanned_by(4, [1, 3, 4]))
    assert o.polarization.dim == 3


def test_polarization_failures(e2, s4):
    with pytest.raises(PolarizationError) as err:
        polarization_check(e2.algebra, [j, 0, 0], Subalgebra.spanned_by(3, [1, 3]))
    assert err.value.condition == "closure"
    # [e2, e3] = e1 pairs with lambda_1 = j1
    with pytest.raises(PolarizationError) as err:
        polarization_check(s4.algebra, [j1, 0, 0, j2], Subalgebra.spanned_by(4, [1, 2, 3]))
    assert err.value.condition == "isotropy"
    with pytest.raises(PolarizationError) as err:
        polarization_check(e2.algebra, [j, 0, 0], Subalgebra.spanned_by(3, [1]))
    assert err.value.condition == "dimension"


def test_e2_lambda_rep(e2):
    rep = e2.rep_in_q()
    assert rep.coords == (q,)
    assert X.equiv(rep.B(0), sp.I * j / hbar * sp.cos(q))
    assert X.equiv(rep.B(1), -sp.I * j / hbar * sp.sin(q))
    assert rep.A(0) == 0 and rep.A(1) == 0
    assert rep.A(2) == 1 and rep.B(2) == 0
    # [l1, l3] = -l2
    c = rep.ops[0].commutator(rep.ops[2])
    assert not (c + rep.ops[1]).simplify().terms


def test_s4_lambda_rep(s4):
    rep = s4.rep_in_q()
    assert X.equiv(rep.A(3), q)
    assert X.equiv(rep.B(3), sp.I / hbar * (j2 - sp.I * hbar / 2))


@pytest.mark.parametrize("name", ["e2", "s4"])
def test_rep_invariants(name, request):
    entry = request.getfixturevalue(name)
    rep = entry.rep_in_q()
    assert rep_commutator_residual(rep, entry.algebra) <= 1e-10
    assert rep.rho == 1
    binding = {"hbar": 0.8, "j": 1.3, "j1": 1.3, "j2": -0.4}
    assert rep_symmetry_residual(rep, binding) <= 1e-6


def test_split_incompatible(e2):
    # the plain chart puts the rotation factor first
    with pytest.raises(SplitIncompatibleError):
        lambda_rep(e2.chart, e2.algebra, e2.orbit())


def test_casimir_values(e2, s4):
    f = dual_symbols(3)
    assert sp.simplify(casimir_scalar(f[0] ** 2 + f[1] ** 2, e2.rep_in_q()) - j**2) == 0
    K1, K2 = s4.algebra.casimirs
    rep = s4.rep_in_q()
    assert sp.simplify(casimir_scalar(K1, rep) - j1) == 0
    assert sp.simplify(casimir_scalar(K2, rep) - j1 * j2) == 0
    for K in (K1, K2):
        assert sp.im(casimir_scalar(K, rep)) == 0


def test_casimir_non_scalar(e2):
    f = dual_symbols(3)
    with pytest.raises(NonScalarError):
        casimir_scalar(f[2], e2.rep_in_q())


def test_abelian_casimir(abelian2):
    chart, A = abelian2
    lam = X.symbols("l1 l2")
    o = polarization_check(A, lam, Subalgebra.spanned_by(2, [1, 2]))
    assert o.dim == 0
    rep = lambda_rep(chart, A, o)
    assert rep.dim == 0
    f = dual_symbols(2)
    assert sp.simplify(casimir_scalar(f[0], rep) - lam[0]) == 0


def test_kernel_data(e2, s4):
    x, y, alpha = X.symbols("x y alpha")
    k = e2.kernel()
    assert X.equiv(k.phase, sp.exp(sp.I * j / hbar * (y * sp.sin(q) - x * sp.cos(q))))
    assert X.equiv(k.point_map, q - alpha)
    assert X.equiv(k.measure, j / (2 * sp.pi) ** 2)
    x1, x2, x3, x4 = X.symbols("x1 x2 x3 x4")
    k = s4.kernel()
    want = sp.exp(-x4 / 2) * sp.exp(-sp.I * j1 / hbar * (x3 * (q - x2) + x1) - sp.I * j2 / hbar * x4)
    assert X.equiv(k.phase, want)
    assert X.equiv(k.point_map, sp.exp(-x4) * (q - x2))
    for entry in (e2, s4):
        k = entry.kernel()
        at_e = {s: 0 for s in entry.chart.symbols}
        assert sp.simplify(k.phase.xreplace(at_e)) == 1
        assert sp.simplify(k.point_map.xreplace(at_e)) == q


def _psi(x):
    return np.exp(-((x - 0.3) ** 2) + 0.7j * x) + 0.5 * np.exp(-2 * (x + 1) ** 2)


def _psi_periodic(x):
    return np.exp(np.cos(x)) * np.exp(2j * x) + 0.3 * np.exp(-1j * x)


@pytest.mark.parametrize("name", ["e2", "s4"])
def test_induced_rep_identity_and_homomorphism(name, request):
    entry = request.getfixturevalue(name)
    k = entry.kernel()
    psi = _psi_periodic if k.periodic else _psi
    binding = {"hbar": 0.9, "j": 1.2, "j1": 1.2, "j2": 0.5}
    rng = np.random.default_rng(8)
    qs = rng.uniform(0, 2 * np.pi, 50) if k.periodic else rng.uniform(-2, 2, 50)
    e = entry.chart.identity_point()
    assert np.allclose(induced_rep_apply(k, e, psi, qs, binding), psi(qs), atol=1e-14)
    c = entry.chart
    for i in range(50):
        g1, g2 = c.sample_points(2, rng)
        g12 = c.compose(g1, g2)
        lhs = induced_rep_apply(k, g12, psi, qs[i], binding)
        inner = lambda z, g2=g2: induced_rep_apply(k, g2, psi, z, binding)  # noqa: E731
        rhs = induced_rep_apply(k, g1, inner, qs[i], binding)
        assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


@pytest.mark.parametrize("name", ["e2", "s4"])
def test_induced_rep_unitary(name, request):
    entry = request.getfixturevalue(name)
    k = entry.kernel()
    binding = {"hbar": 0.9, "j": 1.2, "j1": 1.2, "j2": 0.5}
    if k.periodic:
        z = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        psi = _psi_periodic
    else:
        z = np.linspace(-40, 40, 80001)
        psi = _psi
    w = z[1] - z[0]
    norm = np.sum(np.abs(psi(z)) ** 2) * w
    rng = np.random.default_rng(9)
    for g in entry.chart.sample_points(5, rng):
        g = np.clip(g, -1, 1) if not k.periodic else g
        Tg = induced_rep_apply(k, g, psi, z, binding)
        assert abs(np.sum(np.abs(Tg) ** 2) * w - norm) <= 1e-6 * norm


def test_abelian_commutator_trivial():
    A = LieAlgebra.abelian(3)
    assert orbit_dim(A, [1, 2, 3]) == 0
