"""End-to-end acceptance criteria.  Each test prints one PASS/FAIL line."""

import itertools

import numpy as np
import pytest
import sympy as sp

from lienls import catalog
from lienls import expr as X
from lienls.algebra import dual_symbols, index
from lienls.errors import NotReducibleError
from lienls.geometry import numeric_ricci
from lienls.group import commutator_residual, mixed_commutator_residual
from lienls.orbit import casimir_scalar, rep_commutator_residual
from lienls.reduction import AnsatzSpec, factorization_check, generator_transport_check, lift
from lienls.solver import Grid1D, bright_soliton, split_step_evolve

x, y, alpha, q, qp = X.symbols("x y alpha q qp")
x1, x2, x3, x4 = X.symbols("x1 x2 x3 x4")
d1, d2, d3, j, j1, j2, hbar = X.symbols("delta1 delta2 delta3 j j1 j2 hbar")


@pytest.fixture
def report(capsys):
    def emit(n, title, checks):
        ok = all(v for _, v in checks)
        bad = [name for name, v in checks if not v]
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  failing: {', '.join(bad)}" if bad else ""))
        assert ok, f"criterion {n}: {bad}"

    return emit


def _frame_equiv(matrix, printed, box):
    return all(
        X.equiv(matrix[a, k], printed[a][k], box=box, trials=64, tol=1e-10)
        for a in range(len(printed))
        for k in range(len(printed[a]))
    )


def test_c01_frames(report, e2, s4):
    c, s = sp.cos(alpha), sp.sin(alpha)
    xi = [[1, 0, 0], [0, 1, 0], [y, -x, 1]]
    eta = [[-c, s, 0], [-s, -c, 0], [0, 0, -1]]
    box = e2.chart.sample_box()
    checks = [("e2 left frame", _frame_equiv(e2.xi.matrix, xi, box)),
              ("e2 right frame", _frame_equiv(e2.eta.matrix, eta, box))]
    for entry in (e2, s4):
        A = entry.algebra
        checks.append((f"{entry.name} [xi,xi]", commutator_residual(entry.xi, A) <= 1e-10))
        checks.append((f"{entry.name} [eta,eta]", commutator_residual(entry.eta, A) <= 1e-10))
        checks.append((f"{entry.name} [xi,eta]", mixed_commutator_residual(entry.xi, entry.eta) <= 1e-10))
    report(1, "frame correctness", checks)


def test_c02_curvature(report, e2, s4):
    R = e2.geometry().scalar_curvature
    printed = d3 * (d1 - d2) ** 2 / (2 * d1 * d2)
    rng = np.random.default_rng(11)
    rel = 0.0
    for _ in range(10):
        b = {"delta1": rng.uniform(0.2, 3), "delta2": rng.uniform(0.2, 3), "delta3": rng.uniform(0.2, 3),
             "x": rng.normal(), "y": rng.normal(), "alpha": rng.uniform(0, 2 * np.pi)}
        want = complex(X.evaluate(printed, b)).real
        rel = max(rel, abs(complex(X.evaluate(R, b)).real - want) / abs(want))
    Ric = s4.geometry().ricci
    r44 = X.equiv(Ric[3, 3], (d2 / d1) ** 2 / 2, tol=1e-8)
    others = all(Ric[i, k] == 0 or X.equiv(Ric[i, k], 0) for i, k in itertools.product(range(4), repeat=2) if (i, k) != (3, 3))
    # symbolic vs finite-difference pipelines
    fd = 0.0
    for entry in (e2, s4):
        geo = entry.geometry()
        g = geo.metric_function()
        params = sorted(set().union(*(X.free_names(e) for e in geo.g_lower)) - set(entry.chart.names))
        for _ in range(3):
            b = {p: rng.uniform(0.6, 1.8) for p in params}
            pt = rng.uniform(-1, 1, entry.chart.dim)
            Ric_n, R_n = numeric_ricci(lambda z: g(z, b), pt)
            full = dict(zip(entry.chart.names, pt)) | b
            fd = max(fd, abs(R_n - complex(X.evaluate(geo.scalar_curvature, full)).real))
            for i, k in itertools.product(range(entry.chart.dim), repeat=2):
                fd = max(fd, abs(Ric_n[i, k] - complex(X.evaluate(geo.ricci[i, k], full)).real))
    report(2, f"curvature (E(2) rel err {rel:.1e}, FD vs symbolic {fd:.1e})", [
        ("E(2) scalar curvature", rel <= 1e-8),
        ("delta1 = delta2 gives R = 0", sp.simplify(R.subs(d2, d1)) == 0),
        ("4D R44 = (delta2/delta1)^2/2", bool(r44)),
        ("4D other Ricci components vanish", others),
        ("FD agrees with symbolic", fd <= 1e-6),
    ])


def test_c03_laplacians(report, e2, s4):
    c, s = sp.cos(alpha), sp.sin(alpha)
    want_e2 = {("x", "x"): d1 * c**2 + d2 * s**2, ("y", "y"): d1 * s**2 + d2 * c**2,
               ("x", "y"): (d2 - d1) * sp.sin(2 * alpha), ("alpha", "alpha"): d3}
    want_s4 = {("x1", "x4"): 4 * d1, ("x2", "x3"): 4 * d2, ("x1", "x3"): 4 * d2 * x3, ("x1",): 2 * d2}
    checks = []
    for entry, want in ((e2, want_e2), (s4, want_s4)):
        L = entry.geometry().laplacian
        ok = len(L.terms) == len(want) and all(X.equiv(L.coefficient_by_name(*k), v, tol=1e-10) for k, v in want.items())
        checks.append((entry.name, ok))
    report(3, "Laplacians", checks)


def test_c04_lambda_reps(report, e2, s4):
    r = e2.rep_in_q()
    e2_ok = (X.equiv(r.B(0), sp.I * j / hbar * sp.cos(q)) and X.equiv(r.B(1), -sp.I * j / hbar * sp.sin(q))
             and r.A(0) == 0 and r.A(1) == 0 and r.A(2) == 1 and r.B(2) == 0)
    r4 = s4.rep_in_q()
    printed = [(0, sp.I * j1 / hbar), (1, 0), (0, sp.I * j1 / hbar * q), (q, sp.I / hbar * (j2 - sp.I * hbar / 2))]
    s4_ok = all(X.equiv(r4.A(a), A) and X.equiv(r4.B(a), B) for a, (A, B) in enumerate(printed))
    f3, f4 = dual_symbols(3), dual_symbols(4)
    K1, K2 = s4.algebra.casimirs
    report(4, "lambda-representations", [
        ("E(2) operators", e2_ok),
        ("4D operators", s4_ok),
        ("E(2) commutators", rep_commutator_residual(r, e2.algebra) <= 1e-10),
        ("4D commutators", rep_commutator_residual(r4, s4.algebra) <= 1e-10),
        ("E(2) Casimir j^2", sp.simplify(casimir_scalar(f3[0] ** 2 + f3[1] ** 2, r) - j**2) == 0),
        ("4D K1 = j1", sp.simplify(casimir_scalar(K1, r4) - j1) == 0),
        ("4D K2 = j1 j2", sp.simplify(casimir_scalar(K2, r4) - j1 * j2) == 0),
        ("Casimir of e2 is f1^2 + f2^2", sp.expand(e2.algebra.casimirs[0] - f3[0] ** 2 - f3[1] ** 2) == 0),
        ("4D Casimirs", sp.expand(K2 - (f4[0] * f4[3] - f4[2] * f4[1])) == 0),
    ])


def test_c05_transport(report, e2, s4):
    res = {e.name: generator_transport_check(e.ansatz(), e.rep(), e.eta, trials=50) for e in (e2, s4)}
    k = s4.kernel()
    corrupt = AnsatzSpec(k.with_phase(k.phase * sp.exp(x4 / 2)))  # drops the e^{-x4/2} weight
    neg = generator_transport_check(corrupt, s4.rep(), s4.eta, trials=50)
    report(5, f"transport (e2 {res['e2']:.1e}, 4D {res['exp-solv-4']:.1e}, corrupted {neg:.2f})", [
        ("e2", res["e2"] < 1e-9),
        ("exp-solv-4", res["exp-solv-4"] < 1e-9),
        ("negative control", neg > 0.1),
    ])


def test_c06_factorization(report, e2, s4, capsys):
    checks = []
    for entry in (e2, s4):
        r = factorization_check(entry.geometry(), entry.equation(), entry.reduced(), entry.ansatz(), points=100)
        checks.append((f"{entry.name} ({r:.1e})", r < 1e-9))
        line = catalog.verify_entry(entry, keys=["reduced-equation"]).line("reduced-equation")
        # the printed reduced equations are recorded, coefficient by coefficient
        checks.append((f"{entry.name} printed form recorded", line.status in ("confirmed", "discrepancy")))
        with capsys.disabled():
            print(f"\n    {entry.name} reduced-equation vs printed: {line.status}; {line.detail[:300]}")
    report(6, "reduction factorization", checks)


def test_c07_e2_soliton(report, e2):
    r = catalog.solution_residuals(e2, "soliton", points=1000)
    report(7, f"E(2) soliton lift (full-PDE residual {r['lifted']:.1e})", [("lifted residual", r["lifted"] < 1e-7)])


def test_c08_s4_exact_solution(report, s4):
    r = catalog.solution_residuals(s4, "closed-form", points=1000)
    norm = catalog.verify_entry(s4, keys=["norm-identity"]).line("norm-identity")
    # modulus of the lift along x2 at fixed q: decays for |x2| large, blows up as x2 -> q
    red = s4.reduced()
    from lienls.solver import amplitude_phase_solve

    fam = amplitude_phase_solve(red)
    Psi = lift(s4.ansatz(), fam.expr).expr
    mod2 = sp.simplify(Psi * sp.conjugate(Psi))
    b = {"hbar": 1, "m": 1, "delta1": 0.7, "delta2": 1.3, "j1": 1.1, "j2": 0.4, "epsilon": 0.8, "E": 0.5, "c1": 0.9,
         "q": 0.5, "x1": 0.2, "x3": -0.3, "x4": 0.4}
    f = X.compile_expr(mod2, sorted(X.free_names(mod2)))
    names = sorted(X.free_names(mod2))

    def at(v):
        return float(f(*(v if n == "x2" else b[n] for n in names)).real)

    far = [at(0.5 - 10.0**k) for k in range(1, 6)]
    near = [at(0.5 - 10.0**-k) for k in range(1, 6)]
    report(8, f"4D exact solution (reduced {r['reduced']:.1e}, lifted {r['lifted']:.1e}, norm {norm.residual:.1e})", [
        ("reduced residual", r["reduced"] < 1e-9),
        ("lifted residual", r["lifted"] < 1e-7),
        ("norm identity", norm.status == "confirmed" and norm.residual <= 1e-9),
        ("decay as x2 -> -inf", all(a > c for a, c in zip(far, far[1:])) and far[-1] < 1e-4),
        ("blow-up as x2 -> q", all(a < c for a, c in zip(near, near[1:])) and near[-1] > 1e3),
    ])


def test_c09_separation(report, s4):
    res = catalog.separation_residuals(s4)
    try:
        catalog.separation_kappa(s4, sp.exp(x4))
        obstructed, witness = False, None
    except NotReducibleError as exc:
        obstructed, witness = True, exc.witness
    report(9, f"separation of variables (eigen {max(res):.1e})", [
        ("three eigenrelations", max(res) < 1e-9 and len(res) == 3),
        ("obstruction reproduced", obstructed and witness is not None and len(witness["points"]) == 2),
    ])


def test_c10_solver(report, e2):
    b = {"hbar": 1.0, "m": 1.0, "delta1": 1.0, "j": 1.0, "epsilon": 1.0, "a": 2.5, "v": 0.5}
    red = e2.reduced("free", "isotropic")
    fam = bright_soliton(red, x0=sp.Rational(-1, 4))
    grid = Grid1D.box(10, 1024)

    def err(dt, t_end):
        steps = int(round(t_end / dt))
        sol = split_step_evolve(red, fam(grid.x, b, 0.0), grid, dt, steps, b)
        return float(np.max(np.abs(sol.final - fam(grid.x, b, steps * dt)))), sol

    e1, _ = err(1e-3, 1.0)
    long = split_step_evolve(red, fam(grid.x, b, 0.0), grid, 1e-3, 10_000, b, save_every=10_000)
    drift = long.norm_drift()
    errs = [err(dt, 1.0)[0] for dt in (0.02, 0.01, 0.005)]
    ratios = [a / c for a, c in zip(errs, errs[1:])]
    report(10, f"solver (Linf {e1:.1e}, norm drift {drift:.1e}, ratios {ratios[0]:.2f} {ratios[1]:.2f})", [
        ("norm conserved over 1e4 steps", drift <= 1e-8),
        ("soliton Linf at t=1", e1 < 1e-4),
        ("second-order convergence", all(abs(r - 4) <= 0.8 for r in ratios)),
    ])


def test_c11_integers(report, e2, s4):
    report(11, "structural integers", [
        ("index e(2) = 1", index(e2.algebra) == 1),
        ("index 4D = 2", index(s4.algebra) == 2),
        ("dim O = 2", e2.orbit().dim == 2 and s4.orbit().dim == 2),
        ("dim Q = 1", e2.orbit().reduced_dim == 1 and s4.orbit().reduced_dim == 1),
    ])
