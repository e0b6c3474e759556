"""H-representations, homogenization, dehomogenization and a vertex oracle.

User-facing constraints are Ax <= b.  Internally every algorithm works on the
homogenized cone Abar (x0; x) >= 0, x0 >= 0 with Abar = (b, -A), so row i of
Abar is the constraint expression b_i*x0 - A_i.x as a linear form in
(x0, x1, ..., xn).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import linalg
from .exactmath import Poly, Rat, RatFun, rat_from_str, rat_to_str


class NotFullRank(ValueError):
    """The constraint matrix has no n linearly independent rows."""


@dataclass(frozen=True)
class HPolyhedron:
    """Polyhedron {x | Ax <= b} with exact rational data."""

    n: int
    A: tuple  # m rows, each a tuple of n Fractions
    b: tuple  # m Fractions
    var_names: tuple = ()

    @staticmethod
    def make(A, b, var_names: Optional[Sequence[str]] = None) -> "HPolyhedron":
        A = tuple(tuple(Fraction(x) for x in row) for row in A)
        b = tuple(Fraction(x) for x in b)
        if len(A) != len(b):
            raise ValueError("row count of A must equal length of b")
        n = len(A[0]) if A else 0
        names = tuple(var_names) if var_names else tuple(f"x{i+1}" for i in range(n))
        return HPolyhedron(n, A, b, names)

    @property
    def m(self) -> int:
        return len(self.A)

    def contains(self, point: Sequence) -> bool:
        pt = [Fraction(c) for c in point]
        return all(
            linalg.dot(row, pt) <= rhs for row, rhs in zip(self.A, self.b)
        )

    def row_expr(self, i: int, hom: bool = True) -> Poly:
        """Constraint expression b_i*x0 - A_i.x (>= 0 on the cone); with
        hom=False the dehomogenized form b_i - A_i.x over (x0,x) with x0 unused."""
        coeffs = [self.b[i] if hom else Fraction(0)] + [-a for a in self.A[i]]
        p = Poly.affine(self.n + 1, Fraction(0) if hom else self.b[i], coeffs)
        return p

    def to_json(self) -> dict:
        return {
            "variables": list(self.var_names),
            "constraints": [
                {
                    "coeffs": [rat_to_str(c) for c in row],
                    "sense": "<=",
                    "rhs": rat_to_str(rhs),
                }
                for row, rhs in zip(self.A, self.b)
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "HPolyhedron":
        names = data.get("variables")
        rows = []
        rhs = []
        for con in data["constraints"]:
            coeffs = [rat_from_str(c) for c in con["coeffs"]]
            r = rat_from_str(con["rhs"])
            sense = con.get("sense", "<=")
            if sense == "<=":
                rows.append(coeffs)
                rhs.append(r)
            elif sense == ">=":
                rows.append([-c for c in coeffs])
                rhs.append(-r)
            elif sense == "=":
                # equalities split into two inequalities at parse time
                rows.append(coeffs)
                rhs.append(r)
                rows.append([-c for c in coeffs])
                rhs.append(-r)
            else:
                raise ValueError(f"unknown sense {sense!r}")
        if names is None:
            n = len(rows[0]) if rows else 0
            names = [f"x{i+1}" for i in range(n)]
        return HPolyhedron.make(rows, rhs, names)


@dataclass(frozen=True)
class HomCone:
    """Cone {(x0;x) | Abar (x0;x) >= 0, x0 >= 0} with Abar = (b, -A)."""

    n: int
    Abar: tuple  # m rows, each of length n+1

    @property
    def m(self) -> int:
        return len(self.Abar)

    def row_poly(self, i: int) -> Poly:
        row = self.Abar[i]
        return Poly(self.n + 1, {tuple(int(j == k) for k in range(self.n + 1)): c
                                 for j, c in enumerate(row) if c})


def homogenize(P: HPolyhedron) -> HomCone:
    """Abar row i = [b_i, -A_i1, ..., -A_in]."""
    Abar = tuple(
        (P.b[i],) + tuple(-a for a in P.A[i]) for i in range(P.m)
    )
    return HomCone(P.n, Abar)


@dataclass(frozen=True)
class GeneratorRep:
    """Rays R and lineality directions L as column tuples of length n+1."""

    R: tuple  # p columns
    L: tuple  # q columns

    @staticmethod
    def make(R, L=()) -> "GeneratorRep":
        R = tuple(tuple(Fraction(x) for x in col) for col in R)
        L = tuple(tuple(Fraction(x) for x in col) for col in L)
        if any(all(x == 0 for x in col) for col in R):
            raise ValueError("zero ray column")
        return GeneratorRep(R, L)

    @property
    def p(self) -> int:
        return len(self.R)

    @property
    def q(self) -> int:
        return len(self.L)


def dehomogenize(R: Sequence, mu: Sequence[RatFun]) -> Tuple[tuple, list]:
    """Definition: columns with positive first entry are rescaled to first
    entry 1 and the coordinate scaled by that entry; every coordinate gets
    x0 := 1 substituted."""
    if len(mu) != len(R):
        raise ValueError("mu length must equal column count of R")
    cols = []
    lam = []
    for col, f in zip(R, mu):
        c0 = col[0]
        g = f.subs_one(0)
        if c0 > 0:
            cols.append(tuple(x / c0 for x in col))
            lam.append(g.scale(c0))
        else:
            cols.append(tuple(col))
            lam.append(g)
    return tuple(cols), lam


def enumerate_vertices_oracle(P: HPolyhedron) -> List[tuple]:
    """Exact vertex set by brute force: all n-subsets of rows, solve, filter
    feasible, dedupe.  Sorted for a canonical order."""
    n = P.n
    if n == 0:
        return [()]
    if linalg.rank([list(row) for row in P.A]) < n:
        raise NotFullRank("no n linearly independent rows")
    seen = set()
    for subset in itertools.combinations(range(P.m), n):
        sub = [list(P.A[i]) for i in subset]
        rhs = [P.b[i] for i in subset]
        x = linalg.solve(sub, rhs)
        if x is None:
            continue
        pt = tuple(x)
        if pt not in seen and P.contains(pt):
            seen.add(pt)
    return sorted(seen)


def recession_ray(P: HPolyhedron) -> Optional[tuple]:
    """A nonzero recession direction of P when one exists (else None).

    Checks each +-coordinate direction objective over {Ad <= 0, -1 <= d <= 1}
    by brute force over the vertex oracle of that box-capped cone.
    """
    n = P.n
    rows = [list(row) for row in P.A]
    rhs = [Fraction(0)] * P.m
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        rows.append(e[:])
        rhs.append(Fraction(1))
        rows.append([-c for c in e])
        rhs.append(Fraction(1))
    box = HPolyhedron.make(rows, rhs)
    for v in enumerate_vertices_oracle(box):
        if any(c != 0 for c in v):
            return v
    return None


def is_bounded(P: HPolyhedron) -> bool:
    return recession_ray(P) is None
