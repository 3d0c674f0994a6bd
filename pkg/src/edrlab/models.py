"""Measurement models: object observables, probe readout, coupling and probe state."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from edrlab.hilbert import KronDiagonalUnitary, Operator, StateVector

__all__ = [
    "MeasurementModel",
    "GridConfig",
    "ModelParseError",
    "ModelValidationError",
    "PreconditionError",
    "BUILDERS",
    "build_cnot_model",
    "build_identity_model",
    "build_random_model",
    "build_von_neumann_model",
    "build_model",
    "gaussian_state",
    "momentum_operator",
    "load_model",
    "parse_model_document",
    "validate_model",
]

VALIDATION_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


class ModelParseError(ValueError):
    """Malformed model document."""


class ModelValidationError(ValueError):
    """A model breaks one or more structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class PreconditionError(ValueError):
    """Builder arguments outside the supported regime."""


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """An indirect measurement model.

    The object is coupled to a probe prepared in ``xi0`` by the unitary ``U``;
    the probe observable ``X0`` is then read out exactly.  ``x0`` is the
    measured object observable and ``y0`` the observable whose disturbance is
    tracked.  ``canonical`` declares that ``(x0, y0)`` is a position/momentum
    pair with ``[x0, y0] = i hbar``.
    """

    d_obj: int
    d_probe: int
    x0: Operator
    y0: Operator
    X0: Operator
    U: Union[Operator, KronDiagonalUnitary]
    xi0: StateVector
    hbar: float = 1.0
    label: str = ""
    description: str = ""
    canonical: bool = False
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.d_obj * self.d_probe


@dataclass(frozen=True)
class GridConfig:
    """Uniform periodic position grid on ``[-L, L)``.

    The object lives on ``n_points`` sites; the probe uses the same spacing on
    a doubled window ``[-2L, 2L)`` so that shifting a probe wavepacket by any
    object position keeps it inside the probe window.
    """

    n_points: int = 128
    half_width: float = 16.0
    hbar: float = 1.0

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 2, got {n!r}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width!r}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def positions(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n_points)

    @property
    def probe_positions(self) -> np.ndarray:
        return -2.0 * self.half_width + self.spacing * np.arange(2 * self.n_points)


def _dft(n: int) -> np.ndarray:
    return np.fft.fft(np.eye(n), norm="ortho")


def _momenta(n: int, spacing: float, hbar: float) -> np.ndarray:
    return 2.0 * np.pi * hbar * np.fft.fftfreq(n, spacing)


def momentum_operator(n: int, spacing: float, hbar: float = 1.0) -> Operator:
    """Spectral momentum ``-i hbar d/dx`` on a periodic grid."""
    F = _dft(n)
    m = F.conj().T @ (_momenta(n, spacing, hbar)[:, None] * F)
    return Operator(0.5 * (m + m.conj().T))


def gaussian_state(positions, center: float = 0.0, width: float = 1.0,
                   momentum: float = 0.0, hbar: float = 1.0) -> StateVector:
    """Gaussian wavepacket whose position density has standard deviation ``width``."""
    x = np.asarray(positions, dtype=float)
    amps = np.exp(-((x - center) ** 2) / (4.0 * width**2) + 1j * momentum * x / hbar)
    return StateVector(amps)


def build_cnot_model() -> MeasurementModel:
    """Qubit object and probe coupled by a CNOT (object is control)."""
    return MeasurementModel(
        d_obj=2, d_probe=2,
        x0=Operator(SIGMA_Z), y0=Operator(SIGMA_X), X0=Operator(SIGMA_Z),
        U=Operator(CNOT), xi0=StateVector([1, 0]),
        label="cnot", description="CNOT copy of sigma_z onto a |0> probe",
        params={"builder": "cnot"},
    )


def build_identity_model() -> MeasurementModel:
    """Uncoupled qubit probe: a readout that carries no information."""
    return MeasurementModel(
        d_obj=2, d_probe=2,
        x0=Operator(SIGMA_Z), y0=Operator(SIGMA_X), X0=Operator(SIGMA_Z),
        U=Operator(np.eye(4)), xi0=StateVector([1, 0]),
        label="identity", description="no object-probe interaction",
        params={"builder": "identity"},
    )


def _gue(rng: np.random.Generator, d: int) -> np.ndarray:
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    return 0.5 * (g + g.conj().T)


def _haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))[None, :]


def build_random_model(d_obj: int, d_probe: int, seed: int) -> MeasurementModel:
    """GUE observables, Haar coupling and a random probe state, reproducible from ``seed``."""
    for name, d in (("d_obj", d_obj), ("d_probe", d_probe)):
        if not isinstance(d, (int, np.integer)) or not 2 <= d <= 16:
            raise ValueError(f"{name} must be an integer in [2, 16], got {d!r}")
    if not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    rng = np.random.default_rng(int(seed))
    x0 = _gue(rng, d_obj)
    y0 = _gue(rng, d_obj)
    X0 = _gue(rng, d_probe)
    U = _haar_unitary(rng, d_obj * d_probe)
    xi = rng.standard_normal(d_probe) + 1j * rng.standard_normal(d_probe)
    return MeasurementModel(
        d_obj=d_obj, d_probe=d_probe,
        x0=Operator(x0), y0=Operator(y0), X0=Operator(X0),
        U=Operator(U), xi0=StateVector(xi),
        label=f"random-{d_obj}x{d_probe}-{seed}",
        params={"builder": "random", "params": {"d_obj": d_obj, "d_probe": d_probe, "seed": int(seed)}},
    )


def build_von_neumann_model(grid: GridConfig, probe_width: float,
                            probe_center: float = 0.0) -> MeasurementModel:
    """Position measurement with the impulsive meter coupling ``exp(-i/hbar q (x) P)``.

    The coupling translates the probe by the object position, so the joint
    wavefunction after the interaction is ``phi0(x) xi0(X - x)``.  Because
    object sites are integer multiples of the spacing, the translation is an
    exact cyclic shift of the probe grid.
    """
    s = float(probe_width)
    dx = grid.spacing
    if not s >= 2.0 * dx - 1e-12:
        raise PreconditionError(f"probe_width {s} is below twice the grid spacing ({2 * dx})")
    n = grid.n_points
    hbar = grid.hbar
    x = grid.positions
    X = grid.probe_positions
    xi = gaussian_state(X, probe_center, s, hbar=hbar)
    leakage = float(np.sum(np.abs(xi.amplitudes[np.abs(X) > grid.half_width]) ** 2))
    if leakage >= 1e-10:
        raise PreconditionError(
            f"probe wavepacket leaks past [-L, L]: mass {leakage:.3e} outside |X| <= {grid.half_width}"
        )
    p_probe = _momenta(2 * n, dx, hbar)
    coupling = KronDiagonalUnitary(
        left=np.eye(n),
        right=_dft(2 * n).conj().T,
        phases=-np.outer(x, p_probe) / hbar,
    )
    return MeasurementModel(
        d_obj=n, d_probe=2 * n,
        x0=Operator(np.diag(x)),
        y0=momentum_operator(n, dx, hbar),
        X0=Operator(np.diag(X)),
        U=coupling,
        xi0=xi,
        hbar=hbar,
        label="von_neumann",
        description=f"position meter, n={n}, L={grid.half_width}, s={s}, center={probe_center}",
        canonical=True,
        params={"builder": "von_neumann", "params": {
            "n_points": n, "half_width": grid.half_width, "hbar": hbar,
            "probe_width": s, "probe_center": float(probe_center)}},
    )


def _von_neumann_from_params(n_points=128, half_width=16.0, hbar=1.0,
                             probe_width=1.0, probe_center=0.0):
    return build_von_neumann_model(GridConfig(int(n_points), float(half_width), float(hbar)),
                                   probe_width, probe_center)


BUILDERS = {
    "cnot": build_cnot_model,
    "identity": build_identity_model,
    "random": lambda d_obj=2, d_probe=2, seed=0: build_random_model(int(d_obj), int(d_probe), int(seed)),
    "von_neumann": _von_neumann_from_params,
}


def build_model(name: str, params: dict | None = None) -> MeasurementModel:
    """Instantiate a built-in family by name."""
    if name not in BUILDERS:
        raise ValueError(f"unknown builder {name!r}; choose from {sorted(BUILDERS)}")
    try:
        return BUILDERS[name](**(params or {}))
    except TypeError as exc:
        raise ValueError(f"bad parameters for builder {name!r}: {exc}") from exc


# --------------------------------------------------------------------------- #
#                                 file format                                 #
# --------------------------------------------------------------------------- #

def _complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ModelParseError(f"field {where}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise ModelParseError(f"field {where}: expected a number or [re, im], got {value!r}")


def _matrix(value, dim: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise ModelParseError(f"field {where}: expected {dim} rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != dim:
            raise ModelParseError(f"field {where}[{i}]: expected {dim} entries")
        rows.append([_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex)


def _vector(value, dim: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise ModelParseError(f"field {where}: expected {dim} amplitudes")
    return np.array([_complex(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=complex)


def _positive_int(doc: dict, key: str, where: str) -> int:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ModelParseError(f"field {where}.{key}: expected a positive integer, got {v!r}")
    return v


def parse_model_document(doc: Any) -> MeasurementModel:
    """Build a model from a decoded JSON document (builder spec or explicit matrices)."""
    if not isinstance(doc, dict):
        raise ModelParseError("model document must be a JSON object")
    if "builder" in doc:
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ModelParseError("field params: expected an object")
        try:
            return build_model(doc["builder"], params)
        except PreconditionError:
            raise
        except ValueError as exc:
            raise ModelParseError(f"field builder: {exc}") from exc
    if "explicit" not in doc:
        raise ModelParseError("model document needs a 'builder' or an 'explicit' field")
    ex = doc["explicit"]
    if not isinstance(ex, dict):
        raise ModelParseError("field explicit: expected an object")
    for key in ("x0", "y0", "X0", "U", "xi0"):
        if key not in ex:
            raise ModelParseError(f"field explicit.{key}: missing")
    do = _positive_int(ex, "d_obj", "explicit")
    dp = _positive_int(ex, "d_probe", "explicit")
    hbar = ex.get("hbar", 1.0)
    if isinstance(hbar, bool) or not isinstance(hbar, (int, float)):
        raise ModelParseError(f"field explicit.hbar: expected a number, got {hbar!r}")
    xi = _vector(ex["xi0"], dp, "explicit.xi0")
    if np.linalg.norm(xi) == 0:
        raise ModelParseError("field explicit.xi0: zero vector")
    return MeasurementModel(
        d_obj=do, d_probe=dp,
        x0=Operator(_matrix(ex["x0"], do, "explicit.x0")),
        y0=Operator(_matrix(ex["y0"], do, "explicit.y0")),
        X0=Operator(_matrix(ex["X0"], dp, "explicit.X0")),
        U=Operator(_matrix(ex["U"], do * dp, "explicit.U")),
        xi0=StateVector(xi),
        hbar=float(hbar),
        label=str(ex.get("label", "explicit")),
        canonical=bool(ex.get("canonical", False)),
        params={"explicit": True},
    )


def load_model(path, validate: bool = True) -> MeasurementModel:
    """Read a model JSON file.

    Raises
    ------
    ModelParseError
        Syntax errors (with line and column) or schema errors (with field path).
    ModelValidationError
        When ``validate`` is set and the model breaks an invariant.
    """
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    model = parse_model_document(doc)
    if validate:
        violations = validate_model(model)
        if violations:
            raise ModelValidationError(violations)
    return model


def validate_model(m: MeasurementModel, tol: float = VALIDATION_TOL) -> list[str]:
    """Re-check the structural invariants; an empty list means the model is valid."""
    out = []
    for name, op, dim in (("x0", m.x0, m.d_obj), ("y0", m.y0, m.d_obj), ("X0", m.X0, m.d_probe)):
        if op.dim != dim:
            out.append(f"{name} has dimension {op.dim}, expected {dim}")
        dev = op.hermitian_deviation
        if dev > tol:
            out.append(f"{name} not Hermitian: max deviation {dev:.1e}")
    if m.U.dim != m.d_obj * m.d_probe:
        out.append(f"U has dimension {m.U.dim}, expected {m.d_obj * m.d_probe}")
    else:
        dev = m.U.unitary_deviation
        if dev > tol:
            out.append(f"U not unitary: max deviation {dev:.1e}")
    if m.xi0.dim != m.d_probe:
        out.append(f"xi0 has dimension {m.xi0.dim}, expected {m.d_probe}")
    norm_dev = abs(np.linalg.norm(m.xi0.amplitudes) - 1.0)
    if norm_dev > tol:
        out.append(f"xi0 not normalized: norm deviation {norm_dev:.1e}")
    if not m.hbar > 0:
        out.append(f"hbar must be positive, got {m.hbar}")
    return out
