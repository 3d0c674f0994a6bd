"""Signed-slack checks of the error-disturbance and uncertainty inequalities."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from edrlab.hilbert import StateVector
from edrlab.measurement import Estimator
from edrlab.metrics import (
    NON_INFORMATIVE_TOL,
    MetricsBundle,
    compute_metrics,
    default_probe_states,
    informativeness,
)
from edrlab.models import MeasurementModel

__all__ = [
    "INEQUALITY_IDS",
    "EXACT_TOL",
    "GRID_TOL",
    "PREMISE_TOL",
    "InequalityResult",
    "EDRReport",
    "default_tolerance",
    "evaluate_report",
]

INEQUALITY_IDS = ("EQ2", "EQ3", "EQ4", "EQ18", "EQ19")
EXACT_TOL = 1e-9
GRID_TOL = 1e-3
PREMISE_TOL = 1e-9


@dataclass(frozen=True)
class InequalityResult:
    """One inequality ``lhs >= rhs``; it holds when ``slack >= -tol``.

    ``premise_ok`` records whether the unbiasedness premise was met, for the
    relations whose proof needs it (EQ4, EQ18); it is always true otherwise.
    """

    id: str
    lhs: float
    rhs: float
    slack: float
    holds: bool
    premise_ok: bool
    tol: float
    note: str = ""


@dataclass(frozen=True)
class EDRReport:
    model: str
    state: str
    estimator: dict
    metrics: MetricsBundle
    inequalities: tuple
    non_informative: bool
    informativeness: float
    tolerances: dict = field(default_factory=dict)

    def result(self, ineq_id: str) -> InequalityResult:
        for r in self.inequalities:
            if r.id == ineq_id:
                return r
        raise KeyError(ineq_id)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "state": self.state,
            "estimator": self.estimator,
            "metrics": self.metrics.to_dict(),
            "inequalities": [asdict(r) for r in self.inequalities],
            "non_informative": self.non_informative,
            "informativeness": self.informativeness,
            "tolerances": dict(self.tolerances),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "EDRReport":
        return cls(
            model=d["model"],
            state=d["state"],
            estimator=d["estimator"],
            metrics=MetricsBundle.from_dict(d["metrics"]),
            inequalities=tuple(InequalityResult(**r) for r in d["inequalities"]),
            non_informative=d["non_informative"],
            informativeness=d["informativeness"],
            tolerances=d.get("tolerances", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "EDRReport":
        return cls.from_dict(json.loads(text))


def is_grid_model(m: MeasurementModel) -> bool:
    return "n_points" in m.params.get("params", {})


def default_tolerance(m: MeasurementModel) -> float:
    return GRID_TOL if is_grid_model(m) else EXACT_TOL


def _result(ineq_id, lhs, rhs, tol, premise_ok=True, note="") -> InequalityResult:
    lhs, rhs = float(lhs), float(rhs)
    slack = lhs - rhs
    return InequalityResult(ineq_id, lhs, rhs, slack, bool(slack >= -tol), bool(premise_ok), float(tol), note)


def evaluate_report(m: MeasurementModel, phi0, f: Estimator, tol: float | None = None,
                    premise_tol: float = PREMISE_TOL, state_label: str = "") -> EDRReport:
    """Evaluate all five inequalities for one model, state and estimator.

    EQ2   precision x disturbance against the initial commutator
    EQ3   the three-term relation with initial standard deviations
    EQ4   resolution x disturbance against the evolved commutator
    EQ18  EQ4 with ``hbar/2`` on the right, for canonical (q, p) models
    EQ19  resolution x evolved deviation of y against the evolved commutator
    """
    if tol is None:
        tol = default_tolerance(m)
    phi = phi0 if isinstance(phi0, StateVector) else StateVector(phi0)
    mb = compute_metrics(m, phi, f)
    ex0, ext, eta = mb.epsilon_x0, mb.epsilon_xt, mb.eta_y0
    premise = mb.unbias_residual <= premise_tol
    results = [
        _result("EQ2", ex0 * eta, mb.commutator_0, tol),
        _result("EQ3", ex0 * eta + ex0 * mb.sigma_y0 + mb.sigma_x0 * eta, mb.commutator_0, tol),
        _result("EQ4", ext * eta, mb.commutator_t, tol, premise),
    ]
    if m.canonical:
        results.append(_result("EQ18", ext * eta, m.hbar / 2.0, tol, premise))
    else:
        results.append(InequalityResult("EQ18", 0.0, 0.0, 0.0, True, premise, float(tol), "not-canonical"))
    results.append(_result("EQ19", ext * mb.sigma_yt, mb.commutator_t, tol))
    info = informativeness(m, default_probe_states(m, phi))
    return EDRReport(
        model=m.label,
        state=state_label,
        estimator=f.to_dict(),
        metrics=mb,
        inequalities=tuple(results),
        non_informative=bool(info < NON_INFORMATIVE_TOL),
        informativeness=info,
        tolerances={"slack": float(tol), "premise": float(premise_tol),
                    "non_informative": NON_INFORMATIVE_TOL},
    )
