"""Scalar error, disturbance and deviation functionals of a measurement model.

Operator-route quantities are evaluated in the Schroedinger picture: for a
Heisenberg operator ``A_t = U^dagger (A (x) I) U`` we apply ``U`` to the joint
state once and act with the local operator on the result.  This is exact and
never materializes a joint matrix, so grid models with joint dimension
~10^4 cost the same handful of matrix products as qubit models.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from edrlab.hilbert import (
    KronDiagonalUnitary,
    Operator,
    StateVector,
    commutator_expectation,
)
from edrlab.measurement import (
    ConditionalEnsemble,
    Estimator,
    conditional_states,
    evolved_joint,
    probe_function,
    readout_distribution,
)
from edrlab.models import MeasurementModel

__all__ = [
    "MetricsBundle",
    "ReadoutError",
    "NumericalInvariantError",
    "TWO_ROUTE_TOL",
    "NON_INFORMATIVE_TOL",
    "resolution",
    "resolution_routes",
    "per_readout_error",
    "precision",
    "disturbance",
    "unbiasedness_residual",
    "residual_operator",
    "state_deviations",
    "informativeness",
    "default_probe_states",
    "compute_metrics",
]

TWO_ROUTE_TOL = 1e-10
NON_INFORMATIVE_TOL = 1e-9


class NumericalInvariantError(ArithmeticError):
    """Two independent computations of the same quantity disagree."""


@dataclass(frozen=True)
class ReadoutError:
    readout: float
    probability: float
    error: float
    deviation: float
    mean: float
    value: float


@dataclass(frozen=True)
class MetricsBundle:
    epsilon_xt: float
    epsilon_xt_conditional: float
    epsilon_x0: float
    eta_y0: float
    sigma_x0: float
    sigma_y0: float
    sigma_yt: float
    per_readout: tuple
    unbias_residual: float
    commutator_t: float
    commutator_0: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_readout"] = [asdict(r) for r in self.per_readout]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsBundle":
        d = dict(d)
        d["per_readout"] = tuple(ReadoutError(**r) for r in d["per_readout"])
        return cls(**d)


def _state(phi0) -> StateVector:
    return phi0 if isinstance(phi0, StateVector) else StateVector(phi0)


def _fro(a: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(a, a).real))


def _joint0(m: MeasurementModel, phi: StateVector) -> np.ndarray:
    return np.outer(phi.amplitudes, m.xi0.amplitudes)


def _back(m: MeasurementModel, psi: np.ndarray) -> np.ndarray:
    return m.U.apply_adjoint(psi.reshape(-1)).reshape(m.d_obj, m.d_probe)


def _deviation(op: np.ndarray, psi: np.ndarray) -> float:
    """Standard deviation of ``op (x) I`` in the joint (or object) amplitudes ``psi``."""
    a = op @ psi
    mean = np.vdot(psi, a).real
    return _fro(a - mean * psi)


def per_readout_error(ens: ConditionalEnsemble, f: Estimator, x0: Operator) -> list[ReadoutError]:
    """Per-readout error, conditional deviation and conditional mean of ``x0``.

    Uses the eigen-decomposition of ``x0``: with weights ``w_i`` of eigenvalue
    ``x_i`` in the conditional state,
    ``err^2 = sum_i (f(X) - x_i)^2 w_i`` and ``dev^2 = sum_i (x_i - mean)^2 w_i``.
    Only readouts above the probability cutoff are listed.
    """
    if not ens.has_states:
        raise ValueError("per_readout_error needs an ensemble with conditional states")
    spec = x0.spectrum
    xs = spec.eigenvalues
    basis_h = np.concatenate(spec.eigenvectors, axis=1).conj().T
    starts = np.concatenate([[0], np.cumsum(spec.multiplicities)[:-1]])
    out = []
    for j in np.flatnonzero(ens.retained):
        c = ens.conditional_states[j]
        w = np.add.reduceat(np.sum(np.abs(basis_h @ c) ** 2, axis=1), starts)
        mean = float(np.dot(xs, w))
        fx = f(ens.readouts[j])
        err = float(np.sqrt(np.dot((fx - xs) ** 2, w)))
        dev = float(np.sqrt(np.dot((xs - mean) ** 2, w)))
        out.append(ReadoutError(float(ens.readouts[j]), float(ens.probabilities[j]),
                                err, dev, mean, fx))
    return out


def resolution_routes(m: MeasurementModel, phi0, f: Estimator,
                      ens: ConditionalEnsemble | None = None) -> tuple[float, float]:
    """Squared resolution by the operator route and by averaging per-readout errors."""
    phi = _state(phi0)
    psi_t = evolved_joint(m, phi)
    F = probe_function(m, f).matrix
    # (x_t)_m - x_t = U^dag (I(x)F - x0(x)I) U; U^dag leaves the norm unchanged
    noise = psi_t @ F.T - m.x0.matrix @ psi_t
    op_route = float(np.vdot(noise, noise).real)
    if ens is None:
        ens = conditional_states(m, phi)
    cond_route = sum(r.probability * r.error**2 for r in per_readout_error(ens, f, m.x0))
    # branches under the cutoff carry no normalized state; add their unnormalized weight
    cut = np.flatnonzero(~ens.retained)
    if cut.size:
        x0 = m.x0.matrix
        spec = m.X0.spectrum
        for j in cut:
            c = psi_t @ spec.eigenvectors[j].conj()
            fx = f(ens.readouts[j])
            cond_route += _fro(fx * c - x0 @ c) ** 2
    return op_route, float(cond_route)


def _check_routes(op_route: float, cond_route: float) -> None:
    if abs(op_route - cond_route) > TWO_ROUTE_TOL * max(1.0, abs(op_route)):
        raise NumericalInvariantError(
            f"resolution routes disagree: operator {op_route!r}, conditional {cond_route!r}"
        )


def resolution(m: MeasurementModel, phi0, f: Estimator) -> float:
    """RMS deviation of the measurement value from the post-measurement observable ``x_t``.

    Raises
    ------
    NumericalInvariantError
        If the operator and conditional routes differ by more than 1e-10.
    """
    op_route, cond_route = resolution_routes(m, phi0, f)
    _check_routes(op_route, cond_route)
    return float(np.sqrt(op_route))


def precision(m: MeasurementModel, phi0, f: Estimator) -> float:
    """RMS deviation of the measurement value from the pre-measurement observable ``x0``."""
    phi = _state(phi0)
    psi_t = evolved_joint(m, phi)
    F = probe_function(m, f).matrix
    mv = _back(m, psi_t @ F.T)
    return _fro(mv - m.x0.matrix @ _joint0(m, phi))


def disturbance(m: MeasurementModel, phi0) -> float:
    """RMS change ``y_t - y0`` of the disturbed observable.  Does not involve any estimator."""
    phi = _state(phi0)
    psi_t = evolved_joint(m, phi)
    yt = _back(m, m.y0.matrix @ psi_t)
    return _fro(yt - m.y0.matrix @ _joint0(m, phi))


def residual_operator(m: MeasurementModel, f: Estimator) -> Operator:
    """Probe-state partial inner product of ``(x_t)_m - x_t``, an object-space operator."""
    xi = m.xi0.amplitudes
    F = probe_function(m, f).matrix
    x0 = m.x0.matrix
    U = m.U
    if isinstance(U, KronDiagonalUnitary):
        # U = sum_k |a_k><a_k| (x) V_k, so only the vectors V_k xi are needed
        A = U.left
        images = U.probe_images(xi)
        gain = np.einsum("kb,kb->k", images.conj(), images @ F.T).real
        overlap = images.conj() @ images.T
        xa = A.conj().T @ x0 @ A
        inner = np.diag(gain) - xa * overlap
        r = A @ inner @ A.conj().T
    else:
        cols = np.kron(np.eye(m.d_obj), xi[:, None])
        k = U.apply(cols).reshape(m.d_obj, m.d_probe, m.d_obj)
        nk = np.einsum("cb,abn->acn", F, k) - np.einsum("ad,dbn->abn", x0, k)
        r = np.einsum("abm,abn->mn", k.conj(), nk)
    return Operator(0.5 * (r + r.conj().T))


def unbiasedness_residual(m: MeasurementModel, f: Estimator) -> float:
    """Largest singular value of :func:`residual_operator`."""
    return float(np.linalg.norm(residual_operator(m, f).matrix, 2))


def state_deviations(m: MeasurementModel, phi0) -> tuple[float, float, float]:
    """``(sigma(x0), sigma(y0), sigma(y_t))`` in the initial joint state."""
    phi = _state(phi0)
    v = phi.amplitudes
    psi_t = evolved_joint(m, phi)
    return (_deviation(m.x0.matrix, v), _deviation(m.y0.matrix, v),
            _deviation(m.y0.matrix, psi_t))


def _commutators(m: MeasurementModel, phi: StateVector, psi_t: np.ndarray) -> tuple[float, float]:
    x, y = m.x0.matrix, m.y0.matrix
    ct = np.vdot(psi_t, x @ (y @ psi_t)) - np.vdot(psi_t, y @ (x @ psi_t))
    c0 = commutator_expectation(m.x0, m.y0, phi)
    return 0.5 * abs(ct), 0.5 * abs(c0)


def informativeness(m: MeasurementModel, states: Sequence) -> float:
    """Largest total-variation distance between readout distributions of the given states.

    Values below ``NON_INFORMATIVE_TOL`` flag a model whose readouts say nothing
    about the object.
    """
    if len(states) < 2:
        raise ValueError("informativeness needs at least two object states")
    dists = [readout_distribution(m, s).probabilities for s in states]
    return float(max(0.5 * np.abs(p - q).sum() for p, q in combinations(dists, 2)))


def default_probe_states(m: MeasurementModel, phi0=None) -> list[StateVector]:
    """Object states used by reports to test informativeness.

    For ``d_obj <= 8`` the basis states plus all pairwise ``(|i> + |j>)`` and
    ``(|i> + i|j>)`` superpositions, which fix every matrix element of the
    effective readout POVM, so the diagnostic is exact.  Larger spaces use the
    first, middle and last basis states.
    """
    d = m.d_obj
    eye = np.eye(d, dtype=complex)
    if d <= 8:
        states = [StateVector(e) for e in eye]
        for i, j in combinations(range(d), 2):
            states.append(StateVector(eye[i] + eye[j]))
            states.append(StateVector(eye[i] + 1j * eye[j]))
    else:
        states = [StateVector(eye[k]) for k in (0, d // 2, d - 1)]
    if phi0 is not None:
        states.append(_state(phi0))
    return states


def compute_metrics(m: MeasurementModel, phi0, f: Estimator,
                    ens: ConditionalEnsemble | None = None) -> MetricsBundle:
    """Evaluate every functional for one (model, state, estimator) triple."""
    phi = _state(phi0)
    if ens is None:
        ens = conditional_states(m, phi)
    op_route, cond_route = resolution_routes(m, phi, f, ens)
    _check_routes(op_route, cond_route)
    sx, sy, syt = state_deviations(m, phi)
    ct, c0 = _commutators(m, phi, evolved_joint(m, phi))
    return MetricsBundle(
        epsilon_xt=float(np.sqrt(op_route)),
        epsilon_xt_conditional=float(np.sqrt(cond_route)),
        epsilon_x0=precision(m, phi, f),
        eta_y0=disturbance(m, phi),
        sigma_x0=sx, sigma_y0=sy, sigma_yt=syt,
        per_readout=tuple(per_readout_error(ens, f, m.x0)),
        unbias_residual=unbiasedness_residual(m, f),
        commutator_t=float(ct), commutator_0=float(c0),
    )
