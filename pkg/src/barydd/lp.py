"""Exact-rational two-phase simplex with primal, dual and Farkas certificates.

Everything is a Fraction; there is no floating point anywhere.  Bland's rule
is the default pivot rule (termination guarantee), with Dantzig-plus-Bland
fallback as an option.  Every row of every problem gets an artificial
variable, so the basis inverse is always available under the artificial
columns and dual values are read off exactly.

Conventions for a reported optimal solution of min c.x + const:

  value = sum_i dual[i] * rhs[i] + shift-terms + const        (strong duality)
  c_v   = sum_i dual[i] * a[i][v] + reduced[v]  for every variable v
  reduced[v] >= 0 when v has a finite lower bound, = 0 when v is free
  dual[i] >= 0 for '>=' rows, <= 0 for '<=' rows, free for '=' rows

These identities are verified exactly on every optimal solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exactmath import rat_to_str

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class LPRow:
    coeffs: Dict[str, Fraction]
    sense: str  # '<=', '>=', '='
    rhs: Fraction
    name: str = ""
    tag: Optional[object] = None  # provenance, carried through to reports

    def __post_init__(self):
        self.coeffs = {v: Fraction(c) for v, c in self.coeffs.items() if Fraction(c) != 0}
        self.rhs = Fraction(self.rhs)
        if self.sense not in ("<=", ">=", "="):
            raise ValueError(f"bad sense {self.sense!r}")


@dataclass
class LPProblem:
    sense: str = "min"  # 'min' or 'max'
    objective: Dict[str, Fraction] = field(default_factory=dict)
    obj_const: Fraction = ZERO
    variables: List[str] = field(default_factory=list)
    rows: List[LPRow] = field(default_factory=list)
    lb: Dict[str, Optional[Fraction]] = field(default_factory=dict)
    name: str = ""

    def add_var(self, v: str, lb: Optional[Fraction] = None, obj: Fraction = ZERO):
        if v in self.lb:
            raise ValueError(f"duplicate variable {v}")
        self.variables.append(v)
        self.lb[v] = Fraction(lb) if lb is not None else None
        if obj:
            self.objective[v] = self.objective.get(v, ZERO) + Fraction(obj)

    def add_row(self, coeffs, sense, rhs, name="", tag=None) -> LPRow:
        row = LPRow(dict(coeffs), sense, rhs, name, tag)
        for v in row.coeffs:
            if v not in self.lb:
                raise ValueError(f"unknown variable {v} in row {name!r}")
        self.rows.append(row)
        return row


@dataclass
class LPSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    value: Optional[Fraction] = None
    primal: Dict[str, Fraction] = field(default_factory=dict)
    dual: List[Fraction] = field(default_factory=list)
    reduced: Dict[str, Fraction] = field(default_factory=dict)
    basis_rows: List[int] = field(default_factory=list)
    basis_vars: List[str] = field(default_factory=list)
    farkas: Optional[List[Fraction]] = None
    ray: Optional[Dict[str, Fraction]] = None


class _Tableau:
    """Dense simplex tableau over Fractions with explicit artificial columns."""

    def __init__(self, ncols: int, nrows: int):
        self.T: List[List[Fraction]] = [[ZERO] * (ncols + 1) for _ in range(nrows)]
        self.basis: List[int] = [-1] * nrows
        self.ncols = ncols

    def pivot(self, r: int, c: int):
        T = self.T
        piv = T[r][c]
        inv = 1 / piv
        T[r] = [x * inv for x in T[r]]
        rowr = T[r]
        for i in range(len(T)):
            if i != r and T[i][c] != 0:
                f = T[i][c]
                Ti = T[i]
                T[i] = [a - f * b for a, b in zip(Ti, rowr)]
        self.basis[r] = c


def _reduced_costs(tab: _Tableau, cost: List[Fraction]) -> List[Fraction]:
    """rc_j = c_j - c_basis . T[:, j], computed in one pass."""
    T = tab.T
    rc = list(cost)
    for i in range(len(T)):
        cb = cost[tab.basis[i]]
        if cb:
            row = T[i]
            for j in range(tab.ncols):
                if row[j]:
                    rc[j] -= cb * row[j]
    return rc


def _kernel(tab: _Tableau, cost: List[Fraction], allowed, pivot_rule: str) -> Tuple[str, Optional[int]]:
    """Run primal simplex to optimality.  Returns ('optimal', None) or
    ('unbounded', entering_col).  The reduced-cost row is maintained
    incrementally across pivots."""
    T = tab.T
    m = len(T)
    degenerate_streak = 0
    use_bland = pivot_rule == "bland"
    rc = _reduced_costs(tab, cost)
    while True:
        entering = -1
        best = ZERO
        for j in range(tab.ncols):
            if rc[j] < 0 and j in allowed:
                if use_bland:
                    entering = j
                    break
                if rc[j] < best:
                    best = rc[j]
                    entering = j
        if entering < 0:
            return "optimal", None
        # ratio test (Bland ties: smallest basis variable index)
        leave = -1
        best_ratio = None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and tab.basis[i] < tab.basis[leave]
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            return "unbounded", entering
        if best_ratio == 0:
            degenerate_streak += 1
            if not use_bland and degenerate_streak > 30:
                use_bland = True  # anti-cycling fallback
        else:
            degenerate_streak = 0
        tab.pivot(leave, entering)
        f = rc[entering]
        if f:
            row = T[leave]
            for j in range(tab.ncols):
                if row[j]:
                    rc[j] -= f * row[j]


def lp_solve(problem: LPProblem, pivot_rule: str = "bland", check: bool = True) -> LPSolution:
    """Exact optimum with exact duals, or a certified infeasibility /
    unboundedness certificate.  Never raises for those outcomes; the status
    field encodes them."""
    minimize = problem.sense == "min"
    # -- internal columns ---------------------------------------------------
    # free var v -> columns (v,+1),(v,-1); lb var -> column (v,+1) shifted.
    cols: List[Tuple[str, int]] = []
    col_of: Dict[Tuple[str, int], int] = {}
    shift: Dict[str, Fraction] = {}
    for v in problem.variables:
        lo = problem.lb.get(v)
        if lo is None:
            for sgn in (1, -1):
                col_of[(v, sgn)] = len(cols)
                cols.append((v, sgn))
        else:
            shift[v] = lo
            col_of[(v, 1)] = len(cols)
            cols.append((v, 1))
    nstruct = len(cols)
    nrows = len(problem.rows)
    nslack = sum(1 for r in problem.rows if r.sense != "=")
    ncols = nstruct + nslack + nrows  # artificial per row at the end
    tab = _Tableau(ncols, nrows)
    sign: List[Fraction] = [ONE] * nrows
    slack_col: List[Optional[int]] = [None] * nrows
    scol = nstruct
    for i, row in enumerate(problem.rows):
        rhs = row.rhs - sum(
            c * shift.get(v, ZERO) for v, c in row.coeffs.items() if v in shift
        )
        body = tab.T[i]
        for v, c in row.coeffs.items():
            body[col_of[(v, 1)]] += c
            if (v, -1) in col_of:
                body[col_of[(v, -1)]] -= c
        if row.sense != "=":
            slack_col[i] = scol
            body[scol] = ONE if row.sense == "<=" else -ONE
            scol += 1
        body[-1] = rhs
        if rhs < 0:
            sign[i] = -ONE
            tab.T[i] = [-x for x in body]
        acol = nstruct + nslack + i
        tab.T[i][acol] = ONE
        tab.basis[i] = acol

    art0 = nstruct + nslack
    # -- phase 1 -------------------------------------------------------------
    cost1 = [ZERO] * ncols
    for j in range(art0, ncols):
        cost1[j] = ONE
    allowed_all = set(range(ncols))
    status, _ = _kernel(tab, cost1, allowed_all, pivot_rule)
    assert status == "optimal"
    w = sum(tab.T[i][-1] for i in range(nrows) if tab.basis[i] >= art0)
    if w > 0:
        # infeasible: y from reduced costs under artificial columns
        cb = [cost1[tab.basis[i]] for i in range(nrows)]
        y = []
        for i in range(nrows):
            acol = art0 + i
            rc = cost1[acol] - sum(cb[r] * tab.T[r][acol] for r in range(nrows))
            y.append((ONE - rc) * sign[i])
        # Farkas in <=-normalized convention: u >= 0, u.A = 0 (free vars) /
        # <= 0 pattern per senses, u.b < 0.  For '>=' rows y_i >= 0 and the
        # row is negated; report per-row nonnegative multipliers.
        farkas = []
        for i, row in enumerate(problem.rows):
            yi = y[i]
            farkas.append(yi)
        return LPSolution(status="infeasible", farkas=farkas)

    # drive basic artificials out where possible (value is 0 here)
    for i in range(nrows):
        if tab.basis[i] >= art0:
            piv = next(
                (j for j in range(art0) if tab.T[i][j] != 0),
                None,
            )
            if piv is not None:
                tab.pivot(i, piv)

    # -- phase 2 -------------------------------------------------------------
    cost2 = [ZERO] * ncols
    const = problem.obj_const
    for v, c in problem.objective.items():
        c = Fraction(c) if minimize else -Fraction(c)
        cost2[col_of[(v, 1)]] += c
        if (v, -1) in col_of:
            cost2[col_of[(v, -1)]] -= c
        if v in shift:
            const += (Fraction(c) if minimize else -Fraction(c)) * shift[v] * (1 if minimize else 1)
    # shift constant: objective over shifted var v' = v - lb adds c*lb
    shift_const = sum(
        Fraction(problem.objective.get(v, ZERO)) * shift[v] for v in shift
    )
    allowed2 = set(range(art0))
    status, enter = _kernel(tab, cost2, allowed2, pivot_rule)
    if status == "unbounded":
        direction: Dict[str, Fraction] = {v: ZERO for v in problem.variables}
        vname, sgn = cols[enter] if enter < nstruct else (None, 0)
        if vname is not None:
            direction[vname] += Fraction(sgn)
        for i in range(nrows):
            b = tab.basis[i]
            if b < nstruct and tab.T[i][enter] != 0:
                bv, bsgn = cols[b]
                direction[bv] -= Fraction(bsgn) * tab.T[i][enter]
        if not minimize:
            pass  # same direction certifies +infinity for max
        return LPSolution(status="unbounded", ray=direction)

    # -- extract primal ------------------------------------------------------
    xint = [ZERO] * ncols
    for i in range(nrows):
        xint[tab.basis[i]] = tab.T[i][-1]
    primal: Dict[str, Fraction] = {}
    for v in problem.variables:
        val = xint[col_of[(v, 1)]]
        if (v, -1) in col_of:
            val -= xint[col_of[(v, -1)]]
        primal[v] = val + shift.get(v, ZERO)
    internal_value = sum(cost2[j] * xint[j] for j in range(ncols))
    value = internal_value + (shift_const if minimize else -shift_const) + (
        problem.obj_const if minimize else -problem.obj_const
    )
    # duals from reduced costs under artificial columns (phase-2 costs are 0)
    cb2 = [cost2[tab.basis[i]] for i in range(nrows)]
    yint = []
    for i in range(nrows):
        acol = art0 + i
        rc = -sum(cb2[r] * tab.T[r][acol] for r in range(nrows))
        yint.append(-rc)
    dual = [yint[i] * sign[i] for i in range(nrows)]
    reduced: Dict[str, Fraction] = {}
    for v in problem.variables:
        j = col_of[(v, 1)]
        rc = cost2[j] - sum(cb2[r] * tab.T[r][j] for r in range(nrows))
        reduced[v] = rc
    if not minimize:
        value = -value
        dual = [-d for d in dual]
        reduced = {v: -r for v, r in reduced.items()}

    sol = LPSolution(
        status="optimal",
        value=value,
        primal=primal,
        dual=dual,
        reduced=reduced,
        basis_rows=list(range(nrows)),
        basis_vars=[
            cols[b][0] if b < nstruct else f"_slack{b}" for b in tab.basis
        ],
    )
    if check:
        _verify_optimal(problem, sol)
    return sol


def _verify_optimal(problem: LPProblem, sol: LPSolution):
    """Exact strong duality + complementary slackness + dual feasibility."""
    sgn = 1 if problem.sense == "min" else -1
    # primal feasibility
    for row in problem.rows:
        lhs = sum(c * sol.primal[v] for v, c in row.coeffs.items())
        ok = lhs <= row.rhs if row.sense == "<=" else lhs >= row.rhs if row.sense == ">=" else lhs == row.rhs
        assert ok, f"primal infeasible on row {row.name!r}"
    # dual signs and complementary slackness
    for row, y in zip(problem.rows, sol.dual):
        if row.sense == "<=":
            assert sgn * y <= 0, "dual sign on <= row"
        elif row.sense == ">=":
            assert sgn * y >= 0, "dual sign on >= row"
        lhs = sum(c * sol.primal[v] for v, c in row.coeffs.items())
        assert y == 0 or lhs == row.rhs, "complementary slackness"
    # dual identity per variable + strong duality
    for v in problem.variables:
        c = Fraction(problem.objective.get(v, ZERO))
        acc = sum(y * row.coeffs.get(v, ZERO) for row, y in zip(problem.rows, sol.dual))
        rc = sol.reduced[v]
        assert c == acc + rc, f"dual identity on {v}"
        if problem.lb.get(v) is None:
            assert rc == 0, f"nonzero reduced cost on free var {v}"
        else:
            assert sgn * rc >= 0, f"reduced cost sign on {v}"
            assert rc == 0 or sol.primal[v] == problem.lb[v], "cs on bound"
    dual_value = sum(y * row.rhs for row, y in zip(problem.rows, sol.dual))
    dual_value += sum(
        sol.reduced[v] * problem.lb[v]
        for v in problem.variables
        if problem.lb.get(v) is not None
    )
    assert sol.value == dual_value + problem.obj_const, "strong duality"


def lp_feasible(rows: Sequence[LPRow], variables: Sequence[str]):
    """Exact feasibility of a row system over free variables.

    Returns (True, point_dict) or (False, farkas) where farkas is a list of
    multipliers u >= 0, one per input row in <=-normalized sense, with
    u.A = 0 and u.b < 0 exactly.
    """
    prob = LPProblem(sense="min")
    for v in variables:
        prob.add_var(v, lb=None)
    norm_rows: List[Tuple[int, Fraction]] = []  # (orig index, orient) for <= view
    for idx, row in enumerate(rows):
        if row.sense == "=":
            prob.add_row(row.coeffs, "<=", row.rhs, name=f"{row.name}+", tag=idx)
            prob.add_row({v: -c for v, c in row.coeffs.items()}, "<=", -row.rhs,
                         name=f"{row.name}-", tag=idx)
            norm_rows.extend([(idx, ONE), (idx, -ONE)])
        elif row.sense == ">=":
            prob.add_row({v: -c for v, c in row.coeffs.items()}, "<=", -row.rhs,
                         name=row.name, tag=idx)
            norm_rows.append((idx, -ONE))
        else:
            prob.add_row(row.coeffs, "<=", row.rhs, name=row.name, tag=idx)
            norm_rows.append((idx, ONE))
    sol = lp_solve(prob)
    if sol.status == "optimal":
        return True, sol.primal
    assert sol.status == "infeasible"
    # internal duals are per normalized <= row: u = -y >= 0 certifies
    # u.A = 0, u.b < 0
    u = [-y for y in sol.farkas]
    per_row = [ZERO] * len(rows)
    for (idx, orient), ui in zip(norm_rows, u):
        assert ui >= 0, "Farkas multiplier sign"
        per_row[idx] += ui  # aggregated magnitude per original row
    # exact verification in the normalized system
    acc: Dict[str, Fraction] = {}
    rhs_acc = ZERO
    for (idx, orient), ui in zip(norm_rows, u):
        row = rows[idx]
        for v, c in row.coeffs.items():
            acc[v] = acc.get(v, ZERO) + ui * orient * c
        rhs_acc += ui * orient * row.rhs
    assert all(c == 0 for c in acc.values()), "Farkas: u.A != 0"
    assert rhs_acc < 0, "Farkas: u.b not negative"
    return False, per_row


def export_lp_text(problem: LPProblem) -> str:
    """Plain LP-format text for cross-checking with external solvers.
    Values are exact decimals where terminating, otherwise fractions in
    comments next to a decimal rendering."""

    def num(x: Fraction) -> str:
        if x.denominator == 1:
            return str(x.numerator)
        f = x.numerator / x.denominator
        return f"{f!r}"

    lines = [f"\\ {problem.name}" if problem.name else "\\ barydd export"]
    lines.append("Minimize" if problem.sense == "min" else "Maximize")
    terms = " ".join(
        f"{'+' if c >= 0 else '-'} {num(abs(Fraction(c)))} {v}"
        for v, c in problem.objective.items()
    )
    lines.append(f" obj: {terms if terms else '0 ' + (problem.variables[0] if problem.variables else 'x')}")
    lines.append("Subject To")
    for i, row in enumerate(problem.rows):
        body = " ".join(
            f"{'+' if c >= 0 else '-'} {num(abs(c))} {v}" for v, c in row.coeffs.items()
        )
        frac_note = " ".join(
            f"{v}:{rat_to_str(c)}" for v, c in row.coeffs.items() if c.denominator != 1
        )
        comment = f"  \\ {frac_note}" if frac_note else ""
        lines.append(f" r{i}: {body} {row.sense.replace('=','=').replace('<=','<=').replace('>=','>=')} {num(row.rhs)}{comment}")
    lines.append("Bounds")
    for v in problem.variables:
        lo = problem.lb.get(v)
        if lo is None:
            lines.append(f" {v} free")
        elif lo != 0:
            lines.append(f" {v} >= {num(lo)}")
    lines.append("End")
    return "\n".join(lines)
