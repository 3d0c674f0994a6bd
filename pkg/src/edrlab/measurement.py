"""Readout statistics, conditional post-measurement states and measurement-value estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from edrlab.hilbert import (
    Operator,
    StateVector,
    function_of_operator,
    heisenberg_evolve,
    tensor_product,
)
from edrlab.models import MeasurementModel

__all__ = [
    "ConditionalEnsemble",
    "Estimator",
    "PROBABILITY_CUTOFF",
    "evolved_joint",
    "readout_distribution",
    "conditional_states",
    "optimal_estimator",
    "measurement_value_operator",
    "perturb_estimator",
]

PROBABILITY_CUTOFF = 1e-12
LOOKUP_TOL = 1e-9
PROVENANCES = ("optimal-for-state", "identity", "constant", "custom")


def _as_state(phi0) -> StateVector:
    return phi0 if isinstance(phi0, StateVector) else StateVector(phi0)


def evolved_joint(m: MeasurementModel, phi0) -> np.ndarray:
    """``U |phi0, xi0>`` as a ``(d_obj, d_probe)`` array."""
    phi0 = _as_state(phi0)
    if phi0.dim != m.d_obj:
        raise ValueError(f"object state has dimension {phi0.dim}, model expects {m.d_obj}")
    psi0 = np.outer(phi0.amplitudes, m.xi0.amplitudes).reshape(-1)
    return m.U.apply(psi0).reshape(m.d_obj, m.d_probe)


def _fix_phase(a: np.ndarray) -> np.ndarray:
    flat = a.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    ph = flat[k] / abs(flat[k])
    return a * ph.conjugate()


@dataclass(frozen=True, eq=False)
class ConditionalEnsemble:
    """Readout values, their probabilities and the normalized conditional object states.

    ``conditional_states[j]`` is a ``(d_obj, multiplicity_j)`` array with unit
    Frobenius norm: the object amplitudes of the projected post-interaction
    state, one column per basis vector of the degenerate readout eigenspace.
    For a non-degenerate readout it is a single column, i.e. a pure object
    state.  Entries are ``None`` for readouts below ``cutoff`` or when only
    probabilities were requested.
    """

    readouts: np.ndarray
    probabilities: np.ndarray
    conditional_states: Optional[tuple] = None
    cutoff: float = PROBABILITY_CUTOFF

    @property
    def retained(self) -> np.ndarray:
        return self.probabilities >= self.cutoff

    @property
    def has_states(self) -> bool:
        return self.conditional_states is not None

    def state(self, j: int) -> StateVector:
        c = self._block(j)
        if c.shape[1] != 1:
            raise ValueError(f"readout {self.readouts[j]} is degenerate; use density({j})")
        return StateVector(c[:, 0])

    def density(self, j: int) -> np.ndarray:
        c = self._block(j)
        return c @ c.conj().T

    def expectation(self, j: int, op: Operator) -> complex:
        c = self._block(j)
        return complex(np.sum(c.conj() * (op.matrix @ c)))

    def _block(self, j: int) -> np.ndarray:
        if self.conditional_states is None:
            raise ValueError("ensemble carries no conditional states")
        c = self.conditional_states[j]
        if c is None:
            raise ValueError(f"readout {self.readouts[j]} is below the probability cutoff")
        return c


@dataclass(frozen=True, eq=False)
class Estimator:
    """Measurement value assigned to each distinct readout eigenvalue."""

    readouts: np.ndarray
    values: np.ndarray
    provenance: str = "custom"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if np.shape(self.readouts) != np.shape(self.values):
            raise ValueError("readouts and values must have the same length")

    @classmethod
    def identity(cls, X0: Operator) -> "Estimator":
        ev = X0.spectrum.eigenvalues
        return cls(ev.copy(), ev.copy(), "identity")

    @classmethod
    def constant(cls, X0: Operator, c: float) -> "Estimator":
        ev = X0.spectrum.eigenvalues
        return cls(ev.copy(), np.full(ev.shape, float(c)), "constant")

    def __call__(self, readout: float) -> float:
        i = int(np.argmin(np.abs(self.readouts - readout)))
        if abs(self.readouts[i] - readout) > LOOKUP_TOL:
            raise KeyError(f"estimator undefined at readout {readout!r}")
        return float(self.values[i])

    def values_on(self, readouts) -> np.ndarray:
        return np.array([self(x) for x in readouts])

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "readouts": [float(v) for v in self.readouts],
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Estimator":
        return cls(np.array(d["readouts"], dtype=float), np.array(d["values"], dtype=float),
                   d.get("provenance", "custom"))


def _split(m: MeasurementModel, phi0) -> tuple[np.ndarray, list[np.ndarray]]:
    psi_t = evolved_joint(m, phi0)
    spec = m.X0.spectrum
    blocks = [psi_t @ v.conj() for v in spec.eigenvectors]
    return spec.eigenvalues, blocks


def readout_distribution(m: MeasurementModel, phi0) -> ConditionalEnsemble:
    """Readout probabilities ``P_j = ||(I (x) Pi_j) U |phi0, xi0>||^2``."""
    readouts, blocks = _split(m, phi0)
    probs = np.array([np.vdot(b, b).real for b in blocks])
    return ConditionalEnsemble(readouts.copy(), probs)


def conditional_states(m: MeasurementModel, phi0,
                       cutoff: float = PROBABILITY_CUTOFF) -> ConditionalEnsemble:
    """Readout probabilities with the normalized post-measurement object states attached."""
    readouts, blocks = _split(m, phi0)
    probs = np.array([np.vdot(b, b).real for b in blocks])
    states = tuple(
        _fix_phase(b / np.sqrt(p)) if p >= cutoff else None
        for b, p in zip(blocks, probs)
    )
    return ConditionalEnsemble(readouts.copy(), probs, states, cutoff)


def optimal_estimator(ens: ConditionalEnsemble, x0: Operator) -> Estimator:
    """Posterior-mean estimator: ``f(X_j) = <x0>`` in the conditional state for readout ``X_j``.

    Readouts below the cutoff are assigned the overall mean, which keeps the
    estimator defined on the whole readout spectrum without affecting any
    expectation value.
    """
    if not ens.has_states:
        raise ValueError("optimal_estimator needs an ensemble with conditional states")
    keep = ens.retained
    means = np.zeros(len(ens.readouts))
    for j in np.flatnonzero(keep):
        means[j] = ens.expectation(j, x0).real
    p = ens.probabilities[keep]
    overall = float(np.dot(p, means[keep]) / p.sum())
    means[~keep] = overall
    return Estimator(ens.readouts.copy(), means, "optimal-for-state")


def probe_function(m: MeasurementModel, f: Estimator) -> Operator:
    """``f(X0)`` on the probe space."""
    return function_of_operator(m.X0, f)


def measurement_value_operator(m: MeasurementModel, f: Estimator) -> Operator:
    """Dense joint operator ``U^dagger (I (x) f(X0)) U``, i.e. ``f`` of the evolved readout."""
    F = probe_function(m, f)
    return heisenberg_evolve(tensor_product(Operator.identity(m.d_obj), F), m.U)


def perturb_estimator(f: Estimator, seed: int, scale: float) -> Estimator:
    """Add independent zero-mean Gaussian offsets of standard deviation ``scale`` to every value."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    rng = np.random.default_rng(seed)
    delta = rng.normal(0.0, scale, size=len(f.values))
    return Estimator(f.readouts.copy(), f.values + delta, "custom")
