"""Shared fixtures: hand-transcribed tables for the A_{4,9}^0 pair used across
module tests (the catalog entries carry the same data as JSON; module tests
stay independent of the catalog loader)."""

from fractions import Fraction

import pytest

from bisymplectic.expr import Rat, Sym, Symbol, parse_expr
from bisymplectic.liealg import IsomorphismMatrix, LieBialgebra, MatrixRep, StructureConstants
from bisymplectic.rmatrix import RMatrix
from bisymplectic.symplectic import PoissonField

Z = Rat(0)


@pytest.fixture(scope="session")
def params_abcd():
    return {n: Symbol(n, "parameter") for n in "abcd"}


@pytest.fixture(scope="session")
def f_a49iv():
    # bracket side of the pair: [X1,X2]=X4, [X1,X3]=X3, [X1,X4]=X4, [X2,X3]=X4
    return StructureConstants.from_brackets(
        4,
        {(0, 1, 3): 1, (0, 2, 2): 1, (0, 3, 3): 1, (1, 2, 3): 1},
        variance="lower",
    )


@pytest.fixture(scope="session")
def ft_a490():
    # dual side: [Xt^1,Xt^4]=Xt^1, [Xt^2,Xt^3]=Xt^1, [Xt^2,Xt^4]=Xt^2
    return StructureConstants.from_brackets(
        4,
        {(0, 3, 0): 1, (1, 2, 0): 1, (1, 3, 1): 1},
        variance="upper",
    )


@pytest.fixture(scope="session")
def bialg1(f_a49iv, ft_a490):
    return LieBialgebra(f_a49iv, ft_a490)


@pytest.fixture(scope="session")
def rt1():
    # dual-side r: -1/2 Xt^1^Xt^2 - Xt^1^Xt^4 - Xt^2^Xt^3
    return RMatrix.from_wedge(
        4,
        {(0, 1): Fraction(-1, 2), (0, 3): -1, (1, 2): -1},
        variance="lower",
    )


@pytest.fixture(scope="session")
def rep1(params_abcd):
    a, b, c, d = (Sym(params_abcd[n]) for n in "abcd")
    one = Rat(1)
    m1 = [[Z, a, Z, Z], [Z, Z, Z, Z], [Z, Z, Z, Z], [Z, Z, Z, Z]]
    m2 = [[Z, Z, one, Z], [Z, Z, Z, Z], [Z, Z, Z, Z], [Z, Z, Z, Z]]
    m3 = [[Z, a * b, Z, c], [Z, Z, Z, Z], [Z, a, Z, Z], [Z, Z, Z, d]]
    m4 = [[Z, Z, b, Z], [Z, one, Z, Z], [Z, Z, one, Z], [Z, Z, Z, Z]]
    return MatrixRep.from_rows([m1, m2, m3, m4])


@pytest.fixture(scope="session")
def c1():
    return IsomorphismMatrix.from_rows(
        [[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 1], [-1, 0, 0, 0]]
    )


@pytest.fixture(scope="session")
def xcoords():
    return tuple(Symbol(f"x{i}") for i in range(1, 5))


@pytest.fixture(scope="session")
def ycoords():
    return tuple(Symbol(f"y{i}") for i in range(1, 5))


def field_from_strings(coords, upper):
    table = {s.name: s for s in coords}
    return PoissonField.from_upper(
        coords, {key: parse_expr(text, table) for key, text in upper.items()}
    )


def parse_all(strings, symbols):
    table = {s.name: s for s in symbols}
    return tuple(parse_expr(text, table) for text in strings)


@pytest.fixture(scope="session")
def px1(xcoords):
    # group-level brackets on the bracket-side group of the pair
    return field_from_strings(
        xcoords,
        {
            (0, 3): "1 - exp(-x1)",
            (1, 2): "1 - exp(-x1)",
            (1, 3): "x2 * exp(-x1)",
            (2, 3): "(1 + exp(-2*x1) - 2*exp(-x1)) / 2",
        },
    )


@pytest.fixture(scope="session")
def py1(ycoords):
    # group-level brackets on the dual-side group of the pair
    return field_from_strings(
        ycoords,
        {
            (0, 1): "(1 - exp(-2*y4)) / 2",
            (0, 2): "y3 * exp(-y4)",
            (0, 3): "1 - exp(-y4)",
            (1, 2): "1 - exp(-y4)",
        },
    )


@pytest.fixture(scope="session")
def zcoords():
    return tuple(Symbol(f"z{i}") for i in range(1, 5))


@pytest.fixture(scope="session")
def s_z1(zcoords):
    # dynamical functions on the bracket-side group, Darboux chart
    return parse_all(("-z3", "-z4", "-z2*z3", "-z1*z3 - z2*z4"), zcoords)


@pytest.fixture(scope="session")
def s_x1(xcoords):
    # the same functions pulled back to the group coordinates
    return parse_all(
        (
            "exp(2*x1) * (x2 + 2*x4) / (2*(-1 + exp(x1)))",
            "-x3 + exp(-x1)/2",
            "x2 * exp(3*x1) * (x2 + 2*x4) / (2*(-1 + exp(x1))^2)",
            "(x2*(1 + exp(x1)*(1 - 2*x3)) + 2*exp(x1)*x4) / (2*(-1 + exp(x1)))",
        ),
        xcoords,
    )


@pytest.fixture(scope="session")
def chart1x(xcoords):
    # Darboux chart on the bracket-side group: pairs (z1,z3), (z2,z4)
    return parse_all(
        (
            "exp(-x1)",
            "exp(x1)*x2 / (exp(x1) - 1)",
            "-exp(2*x1)*(x2 + 2*x4) / (2*(-1 + exp(x1)))",
            "x3 - exp(-x1)/2",
        ),
        xcoords,
    )


@pytest.fixture(scope="session")
def chart1y(ycoords):
    # Darboux chart on the dual-side group; the zt2 addend must be exp(-y4)
    # so that zt2 - zt4 matches the transported fourth dynamical function
    return parse_all(
        (
            "exp(-y4)/2 + y2 - y4",
            "exp(-y4) + exp(2*y4)*(-2*y1 + y3) / (2*(exp(y4) - 1))",
            "exp(y4)*y3 / (exp(y4) - 1)",
            "exp(-y4)",
        ),
        ycoords,
    )


@pytest.fixture(scope="session")
def st_y1(ycoords):
    # dual-side dynamical functions in dual group coordinates
    return parse_all(
        (
            "(-2*y1*exp(y4) + y3 + y3*exp(y4) - 2*exp(y4)*y3*(y4 - y2)) / (2 - 2*exp(y4))",
            "-exp(2*y4)*(1 + exp(y4)*(-1 + y3))*(-2*y1 + y3) / (2*(exp(y4) - 1)^2)",
            "exp(-y4)/2 + y2 - y4",
            "exp(2*y4)*(-2*y1 + y3) / (2*exp(y4) - 2)",
        ),
        ycoords,
    )
