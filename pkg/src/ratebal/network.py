"""Sensor networks under a sum-rate constraint.

Covers the joint message pmf, the additive network Bhattacharyya distance,
the exact MAP error probability at the fusion center, majorization of rate
vectors and the pairwise rebalancing step that drives any allocation to a
balanced one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ratebal.models import ObservationModel
from ratebal.quantizer import (
    DesignConfig,
    MonotoneQuantizer,
    QuantizerPmf,
    SizeCapError,
    bhattacharyya,
    cell_pmf,
    optimal_design,
)

LATTICE_CAP = 2 ** 20


@dataclass(frozen=True)
class RateAllocation:
    rates: tuple[int, ...]
    sum_rate_cap: int

    def __post_init__(self):
        rates = tuple(int(r) for r in self.rates)
        if not rates:
            raise ValueError("allocation needs at least one sensor")
        if any(r < 0 for r in rates):
            raise ValueError("rates must be nonnegative")
        if sum(rates) > self.sum_rate_cap:
            raise ValueError(f"rates {rates} exceed the sum-rate cap {self.sum_rate_cap}")
        object.__setattr__(self, "rates", rates)

    @property
    def sensors(self) -> int:
        return len(self.rates)

    @property
    def total(self) -> int:
        return sum(self.rates)

    def label(self) -> str:
        return "-".join(str(r) for r in self.rates)


@dataclass(frozen=True)
class Priors:
    pi0: float = 0.5
    pi1: float = 0.5

    def __post_init__(self):
        if self.pi0 < 0 or self.pi1 < 0 or abs(self.pi0 + self.pi1 - 1.0) > 1e-12:
            raise ValueError("priors must be nonnegative and sum to one")


EQUAL_PRIORS = Priors()


@dataclass(frozen=True)
class NetworkDesign:
    model: ObservationModel
    allocation: RateAllocation
    quantizers: tuple[MonotoneQuantizer, ...]

    def __post_init__(self):
        qs = tuple(self.quantizers)
        if len(qs) != self.allocation.sensors:
            raise ValueError("one quantizer per sensor required")
        for r, q in zip(self.allocation.rates, qs):
            if q.rate != r:
                raise ValueError(f"quantizer rate {q.rate} does not match allocated rate {r}")
        object.__setattr__(self, "quantizers", qs)

    def sensor_pmfs(self) -> list[QuantizerPmf]:
        return [cell_pmf(self.model, q) for q in self.quantizers]


def designed_network(model: ObservationModel, allocation: RateAllocation,
                     cfg: DesignConfig = DesignConfig()) -> NetworkDesign:
    """Network of individually optimized sensors; each rate is designed once."""
    qs = tuple(optimal_design(model, r, cfg).quantizer for r in allocation.rates)
    return NetworkDesign(model, allocation, qs)


def joint_pmf(design: NetworkDesign, cap: int = LATTICE_CAP) -> QuantizerPmf:
    """``P(u_1, ..., u_N | h)`` over the message lattice, sensor 1 most significant."""
    size = 2 ** design.allocation.total
    if size > cap:
        raise SizeCapError(f"message lattice of {size} entries exceeds cap {cap}")
    rows = []
    for h in (0, 1):
        p = np.ones(1)
        for s in design.sensor_pmfs():
            p = np.outer(p, s.p[h]).ravel()
        rows.append(p)
    return QuantizerPmf(np.vstack(rows))


def network_bhattacharyya(design: NetworkDesign) -> float:
    """Network distance as the sum of per-sensor distances."""
    return math.fsum(bhattacharyya(p) for p in design.sensor_pmfs())


def analytic_pe(design: NetworkDesign, priors: Priors = EQUAL_PRIORS, cap: int = LATTICE_CAP) -> float:
    """Exact error probability of the MAP fusion rule.

    Uses ``sum_u min_h pi_h P(u|h)``, which equals
    ``1 - sum_u max_h pi_h P(u|h)`` but keeps full relative precision when
    the error probability is small.
    """
    p = joint_pmf(design, cap).p
    return math.fsum(np.minimum(priors.pi0 * p[0], priors.pi1 * p[1]).tolist())


def map_decisions(design: NetworkDesign, priors: Priors = EQUAL_PRIORS, cap: int = LATTICE_CAP) -> np.ndarray:
    """MAP decision per flat message index; ties go to H=0."""
    p = joint_pmf(design, cap).p
    return (priors.pi1 * p[1] > priors.pi0 * p[0]).astype(np.int8)


def pe_upper_bound(design: NetworkDesign, priors: Priors = EQUAL_PRIORS) -> float:
    return math.sqrt(priors.pi0 * priors.pi1) * math.exp(-network_bhattacharyya(design))


# -- rate vectors ----------------------------------------------------------

class Majorization(enum.Enum):
    A_MAJORIZED_BY_B = "a_majorized_by_b"
    B_MAJORIZED_BY_A = "b_majorized_by_a"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


class IncomparableDomainError(ValueError):
    """Majorization is only defined between vectors of equal length and sum."""


def _rates(x) -> list[int]:
    return list(x.rates) if isinstance(x, RateAllocation) else [int(v) for v in x]


def majorizes(ra, rb) -> Majorization:
    """Compare two rate vectors through their sorted prefix sums."""
    a = sorted(_rates(ra), reverse=True)
    b = sorted(_rates(rb), reverse=True)
    if len(a) != len(b) or sum(a) != sum(b):
        raise IncomparableDomainError("vectors must have equal length and equal sum")
    pa, pb = np.cumsum(a), np.cumsum(b)
    if np.array_equal(pa, pb):
        return Majorization.EQUAL
    if np.all(pa <= pb):
        return Majorization.A_MAJORIZED_BY_B
    if np.all(pb <= pa):
        return Majorization.B_MAJORIZED_BY_A
    return Majorization.INCOMPARABLE


def balanced_allocation(n: int, total: int) -> RateAllocation:
    """Rates differing by at most one bit and summing to ``total``, largest first."""
    if n < 1:
        raise ValueError("need at least one sensor")
    if total < 0:
        raise ValueError("sum rate must be nonnegative")
    q, r = divmod(total, n)
    return RateAllocation(tuple([q + 1] * r + [q] * (n - r)), total)


def rebalance_pair(r_lo: int, r_hi: int) -> tuple[int, int]:
    """Replace a rate pair by the balanced pair with the same sum."""
    if r_lo > r_hi:
        raise ValueError("expected r_lo <= r_hi")
    s = r_lo + r_hi
    return s // 2, s - s // 2


def rebalance(rates: Sequence[int]) -> list[list[int]]:
    """Repeatedly rebalance the lowest and highest rate; returns every intermediate vector."""
    current = sorted(int(r) for r in rates)
    history = [list(current)]
    while current and current[-1] - current[0] > 1:
        lo, hi = rebalance_pair(current[0], current[-1])
        current = sorted(current[1:-1] + [lo, hi])
        history.append(list(current))
    return history


def snr_to_m(kind: str, snr_db: float) -> float:
    """Signal half-separation ``m`` for a per-sensor SNR in dB.

    The SNR is ``m**2 / 2`` for the Laplacian model (noise variance 2) and
    ``m**2`` for the Gaussian model.
    """
    snr = 10.0 ** (snr_db / 10.0)
    if kind == "laplacian":
        return math.sqrt(2.0 * snr)
    if kind == "gaussian":
        return math.sqrt(snr)
    raise ValueError(f"unknown model kind {kind!r}")
