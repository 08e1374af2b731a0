"""Monte Carlo estimate of the fusion-center error probability.

Every batch draws from its own PCG64 stream keyed by ``(seed, batch index)``,
so results do not depend on how batches are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ratebal.models import ObservationModel
from ratebal.network import EQUAL_PRIORS, NetworkDesign, Priors, map_decisions


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0
    batch: int = 65536

    def __post_init__(self):
        if self.trials < 1 or self.batch < 1:
            raise ValueError("trials and batch must be positive")


@dataclass(frozen=True)
class SimResult:
    pe_hat: float
    std_err: float
    trials: int

    def agrees_with(self, reference: float, sigmas: float = 4.0) -> bool:
        return abs(self.pe_hat - reference) <= sigmas * self.std_err


def batch_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def laplace_inverse_cdf(u, mean: float):
    """Unit-scale Laplace quantile function."""
    u = np.asarray(u, dtype=float)
    return mean - np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))


def sample(model: ObservationModel, h, rng: np.random.Generator, size=None):
    """Observations under hypothesis ``h`` (scalar or array broadcastable to ``size``)."""
    mean = np.where(np.asarray(h) == 1, model.m, -model.m)
    if model.kind == "laplacian":
        return laplace_inverse_cdf(rng.random(size), mean)
    return mean + rng.standard_normal(size)


def simulate_pe(design: NetworkDesign, priors: Priors = EQUAL_PRIORS,
                cfg: SimConfig = SimConfig(100_000)) -> SimResult:
    """Draw hypotheses and observations, quantize, fuse with the MAP rule, count errors."""
    decide = map_decisions(design, priors)
    cells = [q.cells for q in design.quantizers]
    # flat lattice index, sensor 1 most significant (matches joint_pmf)
    strides = np.cumprod([1] + cells[::-1])[:-1][::-1]
    errors = 0
    done = 0
    index = 0
    while done < cfg.trials:
        n = min(cfg.batch, cfg.trials - done)
        rng = batch_rng(cfg.seed, index)
        h = (rng.random(n) < priors.pi1).astype(np.int8)
        flat = np.zeros(n, dtype=np.int64)
        for q, stride in zip(design.quantizers, strides):
            x = sample(design.model, h, rng, n)
            flat += q.quantize(x) * stride
        errors += int(np.count_nonzero(decide[flat] != h))
        done += n
        index += 1
    pe = errors / cfg.trials
    return SimResult(pe, math.sqrt(pe * (1.0 - pe) / cfg.trials), cfg.trials)


def message_frequencies(model: ObservationModel, quantizer, h: int, trials: int, seed: int = 0) -> np.ndarray:
    """Empirical cell frequencies of one sensor under hypothesis ``h``."""
    x = sample(model, h, batch_rng(seed, 0), trials)
    return np.bincount(quantizer.quantize(x), minlength=quantizer.cells) / trials
