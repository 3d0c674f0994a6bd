"""Parameter sweeps and derivative-free slack minimization."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from edrlab.hilbert import StateVector
from edrlab.inequalities import INEQUALITY_IDS, EDRReport, evaluate_report
from edrlab.measurement import Estimator, conditional_states, optimal_estimator
from edrlab.models import MeasurementModel, build_model, gaussian_state

__all__ = [
    "SweepSpec",
    "SearchSpec",
    "SweepRow",
    "SearchResult",
    "METRIC_COLUMNS",
    "make_estimator",
    "make_state",
    "angles_to_state",
    "run_sweep",
    "sweep_to_csv",
    "run_search",
]

METRIC_COLUMNS = ("epsilon_xt", "epsilon_x0", "eta_y0", "sigma_x0", "sigma_y0", "sigma_yt",
                  "unbias_residual", "commutator_t", "commutator_0")


def make_estimator(m: MeasurementModel, phi0, choice: str) -> Estimator:
    """Estimator from a choice string: ``optimal``, ``identity`` or ``constant:<c>``."""
    if choice == "optimal":
        return optimal_estimator(conditional_states(m, phi0), m.x0)
    if choice == "identity":
        return Estimator.identity(m.X0)
    if choice.startswith("constant:"):
        return Estimator.constant(m.X0, float(choice.split(":", 1)[1]))
    raise ValueError(f"unknown estimator choice {choice!r}")


_NAMED_STATES = {
    "zero": [1, 0],
    "one": [0, 1],
    "plus": [1, 1],
    "minus": [1, -1],
    "sy+": [1, 1j],
    "sy-": [1, -1j],
}


def make_state(m: MeasurementModel, spec) -> StateVector:
    """Object state from a descriptor.

    Accepts a :class:`StateVector`, a named qubit state (``zero``, ``one``,
    ``plus``, ``minus``, ``sy+``, ``sy-``), a list of amplitudes (numbers or
    ``[re, im]`` pairs), or ``{"center": c, "width": w}`` for a Gaussian on a
    grid model.  ``None`` picks a model-appropriate default.
    """
    if isinstance(spec, StateVector):
        return spec
    grid = m.params.get("params", {})
    if spec is None:
        if "n_points" in grid:
            spec = {"center": 0.0, "width": 1.0}
        else:
            spec = "plus" if m.d_obj == 2 else [1.0] * m.d_obj
    if isinstance(spec, str):
        if spec not in _NAMED_STATES:
            raise ValueError(f"unknown named state {spec!r}")
        if m.d_obj != 2:
            raise ValueError(f"named state {spec!r} needs a qubit object, model has d_obj={m.d_obj}")
        return StateVector(_NAMED_STATES[spec])
    if isinstance(spec, dict):
        if "n_points" not in grid:
            raise ValueError("Gaussian states need a grid model")
        x = -grid["half_width"] + 2 * grid["half_width"] / grid["n_points"] * np.arange(grid["n_points"])
        return gaussian_state(x, float(spec.get("center", 0.0)), float(spec.get("width", 1.0)),
                              float(spec.get("momentum", 0.0)), grid["hbar"])
    amps = [complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a) for a in spec]
    if len(amps) != m.d_obj:
        raise ValueError(f"state has {len(amps)} amplitudes, model expects {m.d_obj}")
    return StateVector(amps)


def _state_label(spec) -> str:
    if isinstance(spec, StateVector):
        return "explicit"
    return spec if isinstance(spec, str) else repr(spec)


# --------------------------------------------------------------------------- #
#                                   sweeps                                    #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class SweepSpec:
    family: str
    param: str
    start: float
    stop: float
    steps: int
    spacing: str = "linear"
    base_params: dict = field(default_factory=dict)
    state: object = None
    estimator: str = "identity"
    ids: tuple = INEQUALITY_IDS
    tol: Optional[float] = None

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"steps must be >= 2, got {self.steps}")
        if not self.start < self.stop:
            raise ValueError(f"need from < to, got {self.start} >= {self.stop}")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and self.start <= 0:
            raise ValueError("log spacing needs a positive range")
        unknown = set(self.ids) - set(INEQUALITY_IDS)
        if unknown:
            raise ValueError(f"unknown inequality ids {sorted(unknown)}")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.steps)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class SweepRow:
    param: float
    report: EDRReport


def _sweep_point(spec: SweepSpec, value: float) -> SweepRow:
    params = dict(spec.base_params)
    params[spec.param] = float(value)
    try:
        m = build_model(spec.family, params)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"sweep point {spec.param}={float(value)!r} failed: {exc}") from exc
    phi = make_state(m, spec.state)
    f = make_estimator(m, phi, spec.estimator)
    return SweepRow(float(value), evaluate_report(m, phi, f, tol=spec.tol, state_label=_state_label(spec.state)))


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[SweepRow]:
    """Evaluate one report per grid point; rows are sorted by the parameter value."""
    values = spec.values()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda v: _sweep_point(spec, v), values))
    else:
        rows = [_sweep_point(spec, v) for v in values]
    return sorted(rows, key=lambda r: r.param)


def sweep_to_csv(rows: Sequence[SweepRow], ids: Sequence[str] = INEQUALITY_IDS) -> str:
    """CSV with header ``param,<metrics>,<slacks>``; floats carry 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", *METRIC_COLUMNS, *(f"slack_{i}" for i in ids)])
    for row in rows:
        md = row.report.metrics
        vals = [row.param, *(getattr(md, c) for c in METRIC_COLUMNS),
                *(row.report.result(i).slack for i in ids)]
        w.writerow([format(float(v), ".17g") for v in vals])
    return buf.getvalue()


# --------------------------------------------------------------------------- #
#                                   search                                    #
# --------------------------------------------------------------------------- #

def angles_to_state(angles: np.ndarray, d: int) -> np.ndarray:
    """Map ``2d - 2`` unconstrained reals to a unit vector in ``C^d``.

    The first ``d - 1`` angles are hyperspherical coordinates of the moduli,
    the remaining ``d - 1`` are phases relative to the first amplitude.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (2 * d - 2,):
        raise ValueError(f"expected {2 * d - 2} angles for dimension {d}, got {angles.shape}")
    theta, phases = angles[: d - 1], angles[d - 1:]
    mod = np.ones(d)
    for k in range(d - 1):
        mod[k] *= math.cos(theta[k])
        mod[k + 1:] *= math.sin(theta[k])
    return mod * np.exp(1j * np.concatenate([[0.0], phases]))


@dataclass(frozen=True)
class SearchSpec:
    """Minimize the slack of one inequality.

    Variables are the object-state angles (``object_state``), the probe-state
    angles (``probe_state``) and any named builder parameters in ``params``
    (their initial values are taken from ``base_params``).
    """

    objective: str
    family: str = "random"
    base_params: dict = field(default_factory=dict)
    object_state: bool = True
    probe_state: bool = False
    params: tuple = ()
    estimator: str = "optimal"
    budget: int = 1000
    starts: int = 4
    seed: int = 0
    model: Optional[MeasurementModel] = None

    def __post_init__(self):
        if self.objective not in INEQUALITY_IDS:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.starts < 1:
            raise ValueError(f"starts must be >= 1, got {self.starts}")
        if not (self.object_state or self.probe_state or self.params):
            raise ValueError("search needs a nonempty variable space")
        if self.params and self.model is not None:
            raise ValueError("builder parameters cannot be searched on an explicit model")


@dataclass(frozen=True)
class SearchResult:
    best_point: dict
    best_slack: float
    trace: tuple
    evaluations: int


class _BudgetExhausted(Exception):
    pass


def _make_objective(spec: SearchSpec) -> tuple[Callable, Callable, int]:
    base = spec.model if spec.model is not None else build_model(spec.family, spec.base_params)
    d_obj, d_probe = base.d_obj, base.d_probe
    sizes = [2 * d_obj - 2 if spec.object_state else 0,
             2 * d_probe - 2 if spec.probe_state else 0,
             len(spec.params)]
    n_vars = sum(sizes)

    def decode(z):
        z = np.asarray(z, dtype=float)
        a, b = sizes[0], sizes[0] + sizes[1]
        point = {}
        if spec.object_state:
            point["object_state"] = angles_to_state(z[:a], d_obj)
        if spec.probe_state:
            point["probe_state"] = angles_to_state(z[a:b], d_probe)
        if spec.params:
            point["params"] = {name: float(v) for name, v in zip(spec.params, z[b:])}
        return point

    def build(point):
        if spec.params:
            m = build_model(spec.family, {**spec.base_params, **point["params"]})
        else:
            m = base
        if spec.probe_state:
            m = replace(m, xi0=StateVector(point["probe_state"]))
        return m

    def objective(z):
        point = decode(z)
        try:
            m = build(point)
        except ValueError:
            return math.inf, point
        phi = StateVector(point["object_state"]) if spec.object_state else make_state(m, None)
        f = make_estimator(m, phi, spec.estimator)
        return evaluate_report(m, phi, f).result(spec.objective).slack, point

    return objective, decode, n_vars


def run_search(spec: SearchSpec) -> SearchResult:
    """Seeded multi-start Nelder-Mead over the variable space.

    The evaluation budget is shared by all starts; hitting it ends the search
    and the best point seen so far is returned.
    """
    objective, decode, n_vars = _make_objective(spec)
    rng = np.random.default_rng(spec.seed)
    trace: list[float] = []
    best = {"slack": math.inf, "point": None, "z": None}
    initial_params = np.array([float(spec.base_params.get(p, 1.0)) for p in spec.params])

    def counted(z):
        if len(trace) >= spec.budget:
            raise _BudgetExhausted
        slack, point = objective(z)
        trace.append(float(slack))
        if slack < best["slack"]:
            best.update(slack=float(slack), point=point, z=np.array(z, dtype=float))
        return slack

    per_start = max(1, spec.budget // spec.starts)
    for _ in range(spec.starts):
        if len(trace) >= spec.budget:
            break
        z0 = rng.uniform(0.0, 2.0 * np.pi, n_vars)
        if spec.params:
            z0[n_vars - len(spec.params):] = initial_params * rng.uniform(0.8, 1.25, len(spec.params))
        try:
            minimize(counted, z0, method="Nelder-Mead",
                     options={"maxfev": per_start, "xatol": 1e-10, "fatol": 1e-13, "adaptive": n_vars > 4})
        except _BudgetExhausted:
            break
    # leftover budget goes to a polish run from the best point found
    if best["z"] is not None and len(trace) < spec.budget:
        try:
            minimize(counted, best["z"], method="Nelder-Mead",
                     options={"maxfev": spec.budget - len(trace), "xatol": 1e-12, "fatol": 1e-15})
        except _BudgetExhausted:
            pass
    return SearchResult(best["point"], best["slack"], tuple(trace), len(trace))
