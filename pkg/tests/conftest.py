import pytest

from lienls import catalog


@pytest.fixture(scope="session")
def e2():
    return catalog.load("e2")


@pytest.fixture(scope="session")
def s4():
    return catalog.load("exp-solv-4")


@pytest.fixture(scope="session")
def abelian2():
    """Translations of the plane."""
    from lienls import expr as X
    from lienls.algebra import LieAlgebra
    from lienls.group import Coordinate, GroupChart

    P = X.parse
    chart = GroupChart(
        "plane",
        (Coordinate("x", 0), Coordinate("y", 1)),
        (P("(+ x_a x_b)"), P("(+ y_a y_b)")),
        (0, 0),
        (P("(* -1 x)"), P("(* -1 y)")),
    )
    return chart, LieAlgebra.abelian(2)


@pytest.fixture(scope="session")
def affine():
    """ax+b group, [e1, e2] = -e1; not unimodular."""
    from lienls import expr as X
    from lienls.algebra import LieAlgebra
    from lienls.group import Coordinate, GroupChart

    P = X.parse
    chart = GroupChart(
        "affine",
        (Coordinate("u", 0), Coordinate("s", 1)),
        (P("(+ u_b (* u_a (exp (* -1 s_b))))"), P("(+ s_a s_b)")),
        (0, 0),
        (P("(* -1 u (exp s))"), P("(* -1 s)")),
        (1, 0),
    )
    return chart, LieAlgebra.from_brackets(2, [(1, 2, 1, -1)])
