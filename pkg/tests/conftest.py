"""Shared fixtures: the worked examples used as golden data throughout."""

from fractions import Fraction as F

import pytest

from barydd import HPolyhedron
from barydd.relaxation import DBPInstance


@pytest.fixture(scope="session")
def poly_51():
    """Simple 3-polytope with 8 vertices; rows ordered x >= 0 first so the
    natural order reproduces the printed coordinates."""
    return HPolyhedron.make(
        A=[[-1, 0, 0], [0, -1, 0], [0, 0, -1], [1, 4, 0], [2, 1, 0], [1, 1, 1]],
        b=[0, 0, 0, 2, 2, 3],
    )


@pytest.fixture(scope="session")
def poly_53():
    """x >= 0, x1+4x2+x3 <= 7, 2x1+x2+x3 <= 5, x1+x2+x3 <= 4."""
    return HPolyhedron.make(
        A=[[-1, 0, 0], [0, -1, 0], [0, 0, -1], [1, 4, 1], [2, 1, 1], [1, 1, 1]],
        b=[0, 0, 0, 7, 5, 4],
    )


@pytest.fixture(scope="session")
def poly_41():
    """3x1-x2>=0, -x1+4x2>=0, 1+10x1-10x2>=0, 1+x1-3x2>=0."""
    return HPolyhedron.make(
        A=[[-3, 1], [1, -4], [-10, 10], [-1, 3]],
        b=[0, 0, 1, 1],
    )


@pytest.fixture(scope="session")
def dbp_62():
    """The bilinear program with optimal value -360."""
    P = HPolyhedron.make([[-1, 1], [3, -2], [3, 4], [-1, 0]], [2, 6, 15, 0])
    Py = HPolyhedron.make(
        [[-1, 1], [3, -2], [3, 4], [-1, 0], [0, -1]], [2, 6, 15, 0, 0]
    )
    return DBPInstance.make(
        Q=[[-27, -108], [90, -32]],
        P=P,
        Py=Py,
        cx=[180, -180],
        cy=[-180, 204],
        c0=0,
    )


def box_polytope(n):
    """[0,1]^n with rows (-x_i <= 0) then (x_i <= 1)."""
    rows = []
    rhs = []
    for i in range(n):
        row = [F(0)] * n
        row[i] = F(-1)
        rows.append(row)
        rhs.append(F(0))
    for i in range(n):
        row = [F(0)] * n
        row[i] = F(1)
        rows.append(row)
        rhs.append(F(1))
    return HPolyhedron.make(rows, rhs)


@pytest.fixture(scope="session")
def unit_box():
    return box_polytope
