import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edrlab.hilbert import StateVector
from edrlab.inequalities import (
    EXACT_TOL,
    GRID_TOL,
    INEQUALITY_IDS,
    EDRReport,
    InequalityResult,
    evaluate_report,
)
from edrlab.measurement import Estimator, conditional_states, optimal_estimator, perturb_estimator
from edrlab.models import build_random_model

from conftest import PLUS, SY_PLUS

seeds = st.integers(min_value=0, max_value=2**63)
dims = st.integers(min_value=2, max_value=4)

REPORT_KEYS = {"model", "state", "estimator", "metrics", "inequalities", "non_informative"}
RESULT_KEYS = {"id", "lhs", "rhs", "slack", "holds", "premise_ok", "tol"}


def optimal(m, phi):
    return optimal_estimator(conditional_states(m, phi), m.x0)


class TestExamples:
    def test_identity_model_sigma_y(self, ident):
        rep = evaluate_report(ident, SY_PLUS, optimal(ident, SY_PLUS))
        eq2, eq3, eq4, eq19 = (rep.result(i) for i in ("EQ2", "EQ3", "EQ4", "EQ19"))
        assert abs(eq2.slack + 1) <= 1e-12 and not eq2.holds
        assert abs(eq3.slack) <= 1e-12 and eq3.holds
        assert abs(eq4.slack + 1) <= 1e-12 and not eq4.holds and not eq4.premise_ok
        # resolution = sigma(y_t) = 1 and half the commutator = 1: an equality
        assert abs(eq19.lhs - 1) <= 1e-12 and abs(eq19.rhs - 1) <= 1e-12 and eq19.holds
        assert rep.non_informative

    def test_cnot_plus(self, cnot):
        rep = evaluate_report(cnot, PLUS, optimal(cnot, PLUS))
        eq4 = rep.result("EQ4")
        assert eq4.lhs == 0 and eq4.rhs <= 1e-15 and eq4.holds and eq4.premise_ok
        assert rep.result("EQ3").holds
        assert not rep.non_informative
        assert rep.estimator["provenance"] == "optimal-for-state"

    def test_von_neumann_identity(self, vn, vn_phi):
        rep = evaluate_report(vn, vn_phi, Estimator.identity(vn.X0))
        eq18 = rep.result("EQ18")
        assert abs(eq18.slack) <= 1e-3 and eq18.premise_ok and eq18.tol == GRID_TOL
        assert eq18.rhs == 0.5

    def test_von_neumann_optimal(self, vn, vn_phi):
        rep = evaluate_report(vn, vn_phi, optimal(vn, vn_phi))
        eq18 = rep.result("EQ18")
        assert abs(eq18.slack - (0.5 / np.sqrt(2) - 0.5)) <= 5e-3
        assert not eq18.premise_ok and not eq18.holds

    def test_non_canonical_eq18_placeholder(self, cnot):
        r = evaluate_report(cnot, PLUS, optimal(cnot, PLUS)).result("EQ18")
        assert (r.lhs, r.rhs, r.slack, r.holds, r.note) == (0.0, 0.0, 0.0, True, "not-canonical")


class TestStructure:
    def test_one_result_per_id(self, cnot):
        rep = evaluate_report(cnot, [0.3, 0.4j], Estimator.identity(cnot.X0))
        assert tuple(r.id for r in rep.inequalities) == INEQUALITY_IDS
        with pytest.raises(KeyError):
            rep.result("EQ1")

    def test_json_fields(self, cnot):
        d = json.loads(evaluate_report(cnot, PLUS, optimal(cnot, PLUS), state_label="plus").to_json())
        assert REPORT_KEYS <= set(d)
        assert d["state"] == "plus" and d["model"] == "cnot"
        for r in d["inequalities"]:
            assert RESULT_KEYS <= set(r)

    @pytest.mark.parametrize("kind", ["optimal", "identity"])
    def test_json_round_trip(self, vn, vn_phi, cnot, kind):
        for m, phi in ((cnot, PLUS), (vn, vn_phi)):
            f = optimal(m, phi) if kind == "optimal" else Estimator.identity(m.X0)
            rep = evaluate_report(m, phi, f)
            back = EDRReport.from_json(rep.to_json())
            assert back == rep

    def test_deterministic(self):
        m = build_random_model(3, 4, 17)
        phi = StateVector([0.1, 0.5j, -0.7])
        a = evaluate_report(m, phi, optimal(m, phi)).to_json()
        b = evaluate_report(m, phi, optimal(m, phi)).to_json()
        assert a == b

    def test_tolerances(self, cnot):
        rep = evaluate_report(cnot, PLUS, Estimator.identity(cnot.X0))
        assert all(r.tol == EXACT_TOL for r in rep.inequalities)
        rep = evaluate_report(cnot, PLUS, Estimator.identity(cnot.X0), tol=0.25)
        assert all(r.tol == 0.25 for r in rep.inequalities)

    def test_holds_matches_slack(self):
        r = InequalityResult("EQ2", 1.0, 1.0 + 1e-10, -1e-10, True, True, 1e-9)
        assert r.holds == (r.slack >= -r.tol)


class TestProperties:
    @given(seeds, dims, dims, st.sampled_from(["optimal", "identity", "constant", "custom"]))
    @settings(max_examples=60, deadline=None)
    def test_universal_relations(self, seed, do, dp, kind):
        m = build_random_model(do, dp, seed)
        rng = np.random.default_rng(seed)
        phi = StateVector(rng.standard_normal(do) + 1j * rng.standard_normal(do))
        f = {
            "optimal": lambda: optimal(m, phi),
            "identity": lambda: Estimator.identity(m.X0),
            "constant": lambda: Estimator.constant(m.X0, -0.4),
            "custom": lambda: perturb_estimator(Estimator.identity(m.X0), seed, 1.0),
        }[kind]()
        rep = evaluate_report(m, phi, f)
        assert rep.result("EQ3").slack >= -1e-9
        assert rep.result("EQ19").slack >= -1e-9
        eq4 = rep.result("EQ4")
        if eq4.premise_ok:
            assert eq4.slack >= -1e-9
        for r in rep.inequalities:
            assert r.slack == r.lhs - r.rhs
            assert r.holds == (r.slack >= -r.tol)
            if r.id not in ("EQ4", "EQ18"):
                assert r.premise_ok

    def test_unbiased_instances_satisfy_eq4(self, cnot):
        # CNOT with the identity estimator has zero residual for every object state
        m = cnot
        rng = np.random.default_rng(0)
        for _ in range(20):
            phi = StateVector(rng.standard_normal(2) + 1j * rng.standard_normal(2))
            eq4 = evaluate_report(m, phi, Estimator.identity(m.X0)).result("EQ4")
            assert eq4.premise_ok and eq4.slack >= -1e-9
