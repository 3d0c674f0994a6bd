"""Monte Carlo measurement runs.

Random numbers come from NumPy's PCG64 bit generator.  A run of ``n`` draws
is cut into fixed-size chunks; chunk ``k`` uses the ``k``-th child of
``SeedSequence(seed)``.  Chunks can be processed by any number of worker
threads and the merged counts do not depend on the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from edrlab.measurement import ConditionalEnsemble, Estimator, readout_distribution
from edrlab.metrics import per_readout_error
from edrlab.hilbert import Operator
from edrlab.models import MeasurementModel

__all__ = ["SampleRun", "CHUNK_SIZE", "sample_readouts", "empirical_metrics", "default_threads"]

CHUNK_SIZE = 1 << 16


def default_threads() -> int:
    env = os.environ.get("EDRLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True, eq=False)
class SampleRun:
    n_samples: int
    seed: int
    readouts: np.ndarray
    counts: np.ndarray
    samples: np.ndarray
    empirical_eps_xt: Optional[float] = None
    empirical_eps2_xt: Optional[float] = None
    stderr_eps2_xt: Optional[float] = None
    stderr_eps_xt: Optional[float] = None
    empirical_f_mean: Optional[float] = None
    stderr_f_mean: Optional[float] = None

    @property
    def empirical_P(self) -> dict:
        return {float(x): c / self.n_samples for x, c in zip(self.readouts, self.counts)}

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_samples

    def frequency(self, readout: float) -> float:
        i = int(np.argmin(np.abs(self.readouts - readout)))
        return float(self.counts[i] / self.n_samples)

    def to_dict(self) -> dict:
        d = {
            "n_samples": self.n_samples,
            "seed": self.seed,
            "empirical_P": [[float(x), int(c) / self.n_samples] for x, c in zip(self.readouts, self.counts)],
        }
        for key in ("empirical_eps_xt", "empirical_eps2_xt", "stderr_eps2_xt", "stderr_eps_xt",
                    "empirical_f_mean", "stderr_f_mean"):
            d[key] = getattr(self, key)
        return d


def _draw_chunk(child: np.random.SeedSequence, size: int, cdf: np.ndarray) -> np.ndarray:
    u = np.random.Generator(np.random.PCG64(child)).random(size)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_readouts(m: MeasurementModel, phi0, n: int, seed: int = 0,
                    threads: int | None = None) -> SampleRun:
    """Draw ``n`` i.i.d. readout indices by inverse-CDF sampling over ascending readouts."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ens = readout_distribution(m, phi0)
    p = np.clip(ens.probabilities, 0.0, None)
    cdf = np.cumsum(p / p.sum())
    sizes = [CHUNK_SIZE] * (n // CHUNK_SIZE)
    if n % CHUNK_SIZE:
        sizes.append(n % CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    workers = min(threads or default_threads(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _draw_chunk(a[0], a[1], cdf), zip(children, sizes)))
    else:
        parts = [_draw_chunk(c, s, cdf) for c, s in zip(children, sizes)]
    samples = np.concatenate(parts)
    counts = np.bincount(samples, minlength=len(ens.readouts))
    return SampleRun(n, seed, ens.readouts.copy(), counts, samples)


def empirical_metrics(run: SampleRun, ens: ConditionalEnsemble, f: Estimator, x0: Operator) -> SampleRun:
    """Attach Monte Carlo estimates of the squared resolution and the mean measurement value.

    The empirical ``eps^2`` is the sample mean of the per-readout squared
    errors; standard errors are sample standard deviation over ``sqrt(n)``.
    The standard error of ``eps`` follows by the delta method.
    """
    if not ens.has_states:
        raise ValueError("ensemble carries no conditional states")
    if len(ens.readouts) != len(run.readouts) or not np.allclose(ens.readouts, run.readouts, rtol=0, atol=1e-9):
        raise ValueError("sample run and ensemble have different readouts")
    sq_err = np.zeros(len(ens.readouts))
    for r in per_readout_error(ens, f, x0):
        j = int(np.argmin(np.abs(ens.readouts - r.readout)))
        sq_err[j] = r.error**2
    drawn = run.samples
    if not np.all(ens.retained[drawn]):
        raise ValueError("sampled a readout below the ensemble cutoff")
    n = run.n_samples
    e2 = sq_err[drawn]
    fv = f.values_on(ens.readouts)[drawn]
    mean_e2 = float(e2.mean())
    se_e2 = float(e2.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    eps = float(np.sqrt(mean_e2))
    se_eps = se_e2 / (2 * eps) if eps > 0 else 0.0
    se_f = float(fv.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return replace(run, empirical_eps_xt=eps, empirical_eps2_xt=mean_e2, stderr_eps2_xt=se_e2,
                   stderr_eps_xt=se_eps, empirical_f_mean=float(fv.mean()), stderr_f_mean=se_f)
