import pytest
import sympy as sp

from lienls import catalog
from lienls import expr as X
from lienls.errors import NotReducibleError
from lienls.reduction import (
    AnsatzSpec,
    GroupNLSE,
    factorization_check,
    generator_transport_check,
    kappa_check,
    lift,
    reduce_equation,
    separation_eigencheck,
)

x, y, alpha, q, qp, t = X.symbols("x y alpha q qp t")
x1, x2, x3, x4 = X.symbols("x1 x2 x3 x4")
j, hbar, m, eps, V0 = X.symbols("j hbar m epsilon V0")
d1, d2, d3 = X.symbols("delta1 delta2 delta3")


def test_e2_lift_form(e2):
    psi = sp.exp(sp.I * qp) * (qp**2 + t)
    Psi = lift(e2.ansatz(), psi).expr
    want = sp.exp(sp.I * j / hbar * (y * sp.sin(q) - x * sp.cos(q))) * psi.xreplace({qp: q - alpha})
    assert X.equiv(Psi, want)
    at_e = {x: 0, y: 0, alpha: 0}
    assert sp.simplify(Psi.xreplace(at_e) - psi.xreplace({qp: q})) == 0


def test_s4_lift_form(s4):
    psi = sp.cos(qp) + sp.I * qp
    Psi = lift(s4.ansatz(), psi).expr
    j1, j2 = X.symbols("j1 j2")
    S = sp.exp(-x4) * (q - x2)
    want = sp.exp(-x4 / 2 - sp.I * j1 / hbar * (x3 * (q - x2) + x1) - sp.I * j2 / hbar * x4) * psi.xreplace({qp: S})
    assert X.equiv(Psi, want)


def test_e2_lift_preserves_modulus(e2):
    psi = (1 + sp.I * qp) * sp.exp(sp.sin(qp))
    Psi = lift(e2.ansatz(), psi).expr
    mod_lift = Psi * sp.conjugate(Psi)
    mod_psi = (psi * sp.conjugate(psi)).xreplace({qp: q - alpha})
    assert X.equiv(mod_lift, mod_psi, box={"q": (-2, 2), "alpha": (0, 6)})


def test_lift_linear(s4):
    a, b = sp.cos(qp), qp**2 * sp.I
    an = s4.ansatz()
    lhs = lift(an, 2 * a + 3 * b).expr
    rhs = 2 * lift(an, a).expr + 3 * lift(an, b).expr
    assert X.equiv(lhs, rhs)


@pytest.mark.parametrize("name", ["e2", "s4"])
def test_transport(name, request):
    entry = request.getfixturevalue(name)
    assert generator_transport_check(entry.ansatz(), entry.rep(), entry.eta) < 1e-9


def test_transport_negative_control(s4):
    k = s4.kernel()
    bad = AnsatzSpec(k.with_phase(k.phase * sp.exp(x4 / 2)))
    w = {}
    r = generator_transport_check(bad, s4.rep(), s4.eta, witness=w)
    assert r > 0.1
    assert 1 <= w["generator"] <= 4 and set(w["point"]) >= set(s4.chart.names)


def test_transport_scales_linearly(e2):
    k = e2.kernel()

    def res(s):
        an = AnsatzSpec(k.with_phase(k.phase * sp.exp(sp.I * sp.Rational(s) * x)))
        return generator_transport_check(an, e2.rep(), e2.eta, trials=5, samples=32)

    r1, r2 = res("1/1000"), res("2/1000")
    assert r1 > 0
    assert abs(r2 / r1 - 2) < 0.05


def test_kappa(e2, s4):
    assert kappa_check(e2.ansatz(), 1) == 1
    assert kappa_check(s4.ansatz(), sp.exp(x4)) == 1
    with pytest.raises(NotReducibleError) as err:
        kappa_check(s4.ansatz(), 1)
    w = err.value.witness
    assert len(w["points"]) == 2 and w["values"][0] != w["values"][1]


def test_e2_reduced_coefficients(e2):
    red = e2.reduced()
    assert X.equiv(red.c2, d3 * hbar**2 / (2 * m))
    assert red.c1 == 0
    want = -(j**2) / (2 * m) * (d1 * sp.cos(qp) ** 2 + d2 * sp.sin(qp) ** 2) - V0 * sp.cos(q - qp)
    assert X.equiv(red.c0, want)
    assert X.equiv(red.cn, eps)
    assert red.kind == "time" and red.periodic


def test_e2_reduced_free_limit(e2):
    red = e2.reduced().subs({"epsilon": 0, "delta2": d1, "V0": 0})
    assert red.cn == 0 and red.c1 == 0
    assert sp.diff(red.c0, qp) == 0
    assert sp.simplify(red.c0 + j**2 * d1 / (2 * m)) == 0


def test_s4_reduced_is_first_order(s4):
    red = s4.reduced()
    assert red.kind == "stationary"
    assert red.c2 == 0
    # hbar^2/2m * G^ab l_a l_b with l1 = i j1/hbar, l2 = d, l3 = i j1 qp/hbar, l4 = qp d + i j2/hbar + 1/2
    j1, j2 = X.symbols("j1 j2")
    assert X.equiv(red.c1, 2 * sp.I * hbar * j1 * (d1 + d2) * qp / m)
    assert X.equiv(red.c0, sp.I * j1 * (d1 * (hbar + 2 * sp.I * j2) + d2 * hbar) / m)
    assert X.equiv(red.cn, -eps)


@pytest.mark.parametrize("name", ["e2", "s4"])
def test_factorization(name, request):
    entry = request.getfixturevalue(name)
    red = entry.reduced()
    r = factorization_check(entry.geometry(), entry.equation(), red, entry.ansatz())
    assert r < 1e-9


def test_reduce_rejects_unweighted(s4):
    with pytest.raises(NotReducibleError):
        reduce_equation(s4.geometry(), s4.rep(), s4.ansatz(), s4.equation("unweighted"))


def test_reduce_rejects_wrong_variable(e2):
    with pytest.raises(ValueError):
        reduce_equation(e2.geometry(), e2.rep_in_q(), e2.ansatz(), e2.equation())


def test_equation_kind_validation():
    with pytest.raises(ValueError):
        GroupNLSE(kind="elliptic")


def test_separation_eigenfunctions(s4):
    assert max(catalog.separation_residuals(s4)) < 1e-9
    p1 = X.sym("p1")
    wrong = catalog.separation_residuals(s4, values=[p1 + 1, X.sym("p2"), X.sym("j2")])
    assert wrong[0] > 1e-3
    assert max(wrong[1:]) < 1e-9


def test_separation_trivial(s4):
    op = s4.xi.operators()[0].scale(-sp.I * hbar)
    assert separation_eigencheck(sp.Integer(1), [op], [0]) == [0.0]


def test_separation_obstruction(s4):
    # the separated form does not meet the reducibility condition
    with pytest.raises(NotReducibleError):
        catalog.separation_kappa(s4, sp.exp(x4))
