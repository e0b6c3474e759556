"""Hull LP, level hierarchy, algebraic hierarchy, RLT baselines, envelopes."""

import random
from fractions import Fraction as F

import pytest

from barydd import HPolyhedron, dd_run, enumerate_vertices_oracle
from barydd.exactmath import Poly
from barydd.lp import lp_solve
from barydd.relaxation import (
    ACInstance,
    DBPInstance,
    GFun,
    InfeasiblePoint,
    LevelTooLow,
    NotBox,
    UnboundedInput,
    barycentric_for_polytope,
    build_de_linear,
    build_hull_lp,
    build_level_lp,
    build_rlt_baseline,
    count_expanded_monomials,
    count_product_factors,
    envelope_eval,
    expanded_monomials_brute,
    gap_table,
    rlt_self_product_rows,
    solve_and_report,
)
from conftest import box_polytope


def box_bilinear():
    """min x*y over x in [0,1], y in [0,1] (1x1 bilinear)."""
    P = box_polytope(1)
    Py = box_polytope(1)
    return DBPInstance.make(Q=[[F(1)]], P=P, Py=Py)


def box2_bilinear():
    P = box_polytope(2)
    Py = box_polytope(2)
    return DBPInstance.make(Q=[[1, 2], [-3, 1]], P=P, Py=Py, cx=[1, 0], cy=[0, -1])


class TestHull:
    def test_62_value_and_duals(self, dbp_62):
        prob = build_hull_lp(dbp_62)
        sol = lp_solve(prob)
        assert sol.value == -360
        nonzero = sorted(
            y for row, y in zip(prob.rows, sol.dual) if y and row.tag[0] == "ymem"
        )
        assert nonzero == [42, 63, 140, 150]
        simplex_dual = next(
            y for row, y in zip(prob.rows, sol.dual) if row.tag[0] == "simplex"
        )
        assert simplex_dual == -360

    def test_brute_force_agreement(self, dbp_62):
        verts_x = enumerate_vertices_oracle(dbp_62.P)
        verts_y = enumerate_vertices_oracle(dbp_62.Py)
        brute = min(
            dbp_62.objective_value(v, w) for v in verts_x for w in verts_y
        )
        assert lp_solve(build_hull_lp(dbp_62)).value == brute

    def test_zero_Q_reduces_to_lp(self, dbp_62):
        inst = DBPInstance.make(
            Q=[[0, 0], [0, 0]], P=dbp_62.P, Py=dbp_62.Py, cx=[1, 1]
        )
        sol = lp_solve(build_hull_lp(inst))
        brute = min(v[0] + v[1] for v in enumerate_vertices_oracle(inst.P))
        assert sol.value == brute

    def test_unbounded_input(self):
        P = HPolyhedron.make([[-1, 0], [0, -1]], [0, 0])
        Py = box_polytope(1)
        inst = DBPInstance.make(Q=[[1], [1]], P=P, Py=Py)
        with pytest.raises(UnboundedInput):
            build_hull_lp(inst)

    def test_json_roundtrip(self, dbp_62):
        assert DBPInstance.from_json(dbp_62.to_json()).to_json() == dbp_62.to_json()


class TestEnvelope:
    def test_xy_vertex_values(self):
        inst = box_bilinear()
        for x in (0, 1):
            for y in (0, 1):
                assert envelope_eval(inst, [x], [y]) == x * y

    def test_xy_mccormick(self):
        inst = box_bilinear()
        assert envelope_eval(inst, [F(1, 2)], [F(1, 2)]) == 0
        assert envelope_eval(inst, [F(3, 4)], [F(3, 4)]) == F(1, 2)

    def test_62_point(self, dbp_62):
        assert envelope_eval(dbp_62, [0, 2], [0, 0]) == -360

    def test_infeasible_point(self, dbp_62):
        with pytest.raises(InfeasiblePoint):
            envelope_eval(dbp_62, [-5, 0], [0, 0])
        with pytest.raises(InfeasiblePoint):
            envelope_eval(dbp_62, [0, 2], [-1, 0])


class TestLevelHierarchy:
    def test_level_m_equals_hull(self, dbp_62):
        sol = lp_solve(build_level_lp(dbp_62, 4))
        assert sol.value == -360

    def test_monotone_chain(self, dbp_62):
        order = [1, 2, 3, 0]
        values = []
        for k in range(2, 5):
            sol = lp_solve(build_level_lp(dbp_62, k, order=order))
            values.append(None if sol.status == "unbounded" else sol.value)
        cleaned = [v for v in values if v is not None]
        assert cleaned == sorted(cleaned)
        assert values[-1] == -360
        assert values[1] == -675  # strictly below the hull at level 3

    def test_level_too_low_reports_kbar(self, dbp_62):
        with pytest.raises(LevelTooLow) as err:
            build_level_lp(dbp_62, 1)
        assert err.value.kbar == 2

    def test_box_terminal_level_matches_vertex_lp(self):
        inst = box2_bilinear()
        sol = lp_solve(build_level_lp(inst, inst.P.m))
        direct = min(
            inst.objective_value(v, w)
            for v in enumerate_vertices_oracle(inst.P)
            for w in enumerate_vertices_oracle(inst.Py)
        )
        assert sol.value == direct

    def test_gap_table(self, dbp_62):
        table = gap_table(dbp_62, order=[1, 2, 3, 0])
        vals = [F(r["value"]) for r in table if r["status"] == "optimal"]
        assert vals == sorted(vals) and vals[-1] == -360


class TestACHierarchy:
    def ac_instance(self):
        # P: -1 <= x1 <= 1, 0 <= x2 <= 1 with x2 >= 0 explicit; g2 = |y|
        P = HPolyhedron.make(
            [[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 0]
        )
        Py = HPolyhedron.make([[1], [-1]], [1, 1])
        g = [
            GFun.make_affine(0, [0]),
            GFun.make_affine(0, [1]),
            GFun.make_max([(0, [1]), (0, [-1])]),
        ]
        return ACInstance(P, Py, g, varrho=1)

    def test_monotone_and_exact(self):
        inst = self.ac_instance()
        values = []
        for k in range(0, 5):
            try:
                sol = lp_solve(build_level_lp(inst, k))
            except LevelTooLow:
                continue
            values.append(sol.value if sol.status == "optimal" else None)
        cleaned = [v for v in values if v is not None]
        assert cleaned == sorted(cleaned)
        # optimum: min over x vertices of min_y x1 y + x2 |y| = -1
        assert cleaned[-1] == -1


class TestDELinear:
    def test_linearization_golden_53(self, poly_53):
        # level-3 coordinate of (0,0,4): against the denominator
        # d(x)(-35+5x1+7x2+5x3) the numerator carries -1225 on x3 and +5 on
        # x3^4
        run = dd_run(poly_53)
        st = run.final
        from barydd.polyhedra import dehomogenize

        V, lam = dehomogenize(st.R, list(st.mu))
        i = [tuple(c[1:]) for c in V].index((F(0), F(0), F(4)))
        mu = lam[i]
        dx = Poly(4, {
            (0, 2, 0, 0): F(5), (0, 1, 1, 0): F(12), (0, 1, 0, 1): F(9),
            (0, 0, 2, 0): F(7), (0, 0, 1, 1): F(11), (0, 0, 0, 2): F(4),
            (0, 1, 0, 0): F(-55), (0, 0, 1, 0): F(-63), (0, 0, 0, 1): F(-48),
            (0, 0, 0, 0): F(140),
        })
        their_den = dx * Poly.affine(4, -35, [0, 5, 7, 5])
        scale = their_den.exact_div(mu.den)
        assert scale is not None and scale.is_constant()
        their_num = mu.num.scale(scale.constant_value())
        assert their_num.terms[(0, 0, 0, 1)] == -1225
        assert their_num.terms[(0, 0, 0, 4)] == 5

    def test_de_full_level_exact(self, dbp_62):
        model = build_de_linear(dbp_62, 4, [(1, 2, 3, 0)])
        sol = lp_solve(model.problem)
        assert sol.value == -360

    def test_de_dominates_level(self, dbp_62):
        model = build_de_linear(dbp_62, 3, [(1, 2, 3)])
        de = lp_solve(model.problem).value
        ddr = lp_solve(build_level_lp(dbp_62, 3, order=[1, 2, 3, 0])).value
        assert de >= ddr
        assert de <= -360  # still a relaxation

    def test_de_singletons_recover_rlt_strength(self, dbp_62):
        model = build_de_linear(dbp_62, 1, [(0,), (1,), (2,), (3,)])
        de = lp_solve(model.problem).value
        rlt = lp_solve(build_rlt_baseline(dbp_62, "level1_general")).value
        assert de >= rlt
        assert de == F(-12060, 23)  # equal on this instance

    def test_shared_w_variables_across_orders(self, dbp_62):
        m1 = build_de_linear(dbp_62, 2, [(1, 2)])
        m2 = build_de_linear(dbp_62, 2, [(1, 2), (2, 1)])
        # the same denominators must reuse keys rather than fork per order
        assert len(m2.wnames) < 2 * len(m1.wnames)


class TestRLT:
    def test_level1_62(self, dbp_62):
        sol = lp_solve(build_rlt_baseline(dbp_62, "level1_general"))
        assert sol.value == F(-12060, 23)
        primal = sol.primal
        want = {
            "x0": F(12, 23), "x1": F(30, 23),
            "y0": F(18, 23), "y1": F(12, 23),
            "xy0_0": F(12, 23), "xy0_1": F(36, 23),
            "xy1_0": F(-36, 23), "xy1_1": F(18, 23),
        }
        assert {k: primal[k] for k in want} == want

    def test_box_level_n_is_hull(self):
        inst = box2_bilinear()
        rlt = lp_solve(build_rlt_baseline(inst, "box_level_k", k=2)).value
        hull = lp_solve(build_hull_lp(inst)).value
        assert rlt == hull

    def test_box_levels_monotone(self):
        inst = box2_bilinear()
        v1 = lp_solve(build_rlt_baseline(inst, "box_level_k", k=1)).value
        v2 = lp_solve(build_rlt_baseline(inst, "box_level_k", k=2)).value
        assert v1 <= v2

    def test_not_box(self, dbp_62):
        with pytest.raises(NotBox):
            build_rlt_baseline(dbp_62, "box_level_k", k=1)

    def test_self_products_41_lifted_point(self, poly_41):
        rows, names = rlt_self_product_rows(poly_41)
        point = {
            "x0": F(-1), "x1": F(-1),
            "X0_0": F(40), "X0_1": F(13), "X1_1": F(4),
        }
        for coeffs, sense, rhs, tag in rows:
            lhs = sum(c * point[v] for v, c in coeffs.items())
            assert lhs >= rhs
        # yet the point is infeasible for the polytope itself
        assert not poly_41.contains([F(-1), F(-1)])


class TestCounting:
    @pytest.mark.parametrize("n,q,k", [(2, 2, 1), (2, 3, 2), (3, 2, 2), (3, 3, 1)])
    def test_identity(self, n, q, k):
        got = expanded_monomials_brute(n, q, k)
        assert got == count_expanded_monomials(n, q, k)
        assert got <= count_product_factors(n, q, k)


class TestReport:
    def test_62_report(self, dbp_62):
        prob = build_hull_lp(dbp_62)
        report = solve_and_report(prob)
        assert report["value"] == "-360"
        duals = {d["value"] for d in report["dual"]}
        assert {"150", "42", "63", "140"} <= duals

    def test_infeasible_report(self):
        from barydd.lp import LPProblem

        p = LPProblem(sense="min")
        p.add_var("x", lb=F(0))
        p.add_row({"x": F(1)}, "<=", F(-1))
        report = solve_and_report(p)
        assert report["status"] == "infeasible"
        assert "farkas" in report
