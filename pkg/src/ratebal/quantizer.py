"""Monotone scalar quantizers: cell pmfs, distances and threshold design."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from ratebal.models import ObservationModel, mass, q_tail_inv
from ratebal.search import golden_section

CELL_CAP = 2 ** 16


class SizeCapError(ValueError):
    """A message alphabet or lattice would exceed the configured size cap."""


@dataclass(frozen=True)
class MonotoneQuantizer:
    rate: int
    thresholds: tuple[float, ...] = ()

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if len(t) != 2 ** self.rate - 1:
            raise ValueError(f"rate {self.rate} needs {2 ** self.rate - 1} thresholds, got {len(t)}")
        if any(b < a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be sorted")
        object.__setattr__(self, "thresholds", t)

    @property
    def cells(self) -> int:
        return 2 ** self.rate

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(([-np.inf], self.thresholds, [np.inf]))

    def quantize(self, x):
        """Cell index (0-based) of each observation; a tie goes to the left cell."""
        return np.searchsorted(np.asarray(self.thresholds), x, side="left")


@dataclass(frozen=True)
class QuantizerPmf:
    """Conditional message probabilities, row ``h`` holds ``P(u | H=h)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != 2:
            raise ValueError("pmf table must have shape (2, K)")
        if np.any(p < 0.0):
            raise ValueError("negative probability in pmf")
        object.__setattr__(self, "p", p)

    @property
    def cells(self) -> int:
        return self.p.shape[1]


@dataclass(frozen=True)
class DesignConfig:
    init_mass: float = 0.999
    pass_tolerance: float = 1e-9
    inner_tolerance: float = 1e-10
    restarts: int = 8
    max_passes: int = 500
    seed: int = 0
    cell_cap: int = field(default=CELL_CAP, compare=True)

    def __post_init__(self):
        if not 0.0 < self.init_mass < 1.0:
            raise ValueError("init_mass must lie in (0, 1)")
        if self.pass_tolerance <= 0 or self.inner_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 1 or self.max_passes < 1:
            raise ValueError("restarts and max_passes must be at least 1")


class Design(NamedTuple):
    quantizer: MonotoneQuantizer
    distance: float


def threshold_pmf(model: ObservationModel, thresholds: Sequence[float]) -> QuantizerPmf:
    """Cell pmf for an arbitrary sorted threshold list."""
    edges = np.concatenate(([-np.inf], np.asarray(thresholds, dtype=float), [np.inf]))
    lo, hi = edges[:-1], edges[1:]
    return QuantizerPmf(np.vstack([mass(model, 0, lo, hi), mass(model, 1, lo, hi)]))


def cell_pmf(model: ObservationModel, q: MonotoneQuantizer) -> QuantizerPmf:
    return threshold_pmf(model, q.thresholds)


def bhattacharyya_coefficient(pmf: QuantizerPmf) -> float:
    # normalizing by the row totals absorbs their rounding; identical rows give exactly 1
    p0, p1 = pmf.p
    return float(np.sum(np.sqrt(p0 * p1)) / math.sqrt(np.sum(p0) * np.sum(p1)))


def bhattacharyya(pmf: QuantizerPmf) -> float:
    return max(0.0, -math.log(bhattacharyya_coefficient(pmf)))


def chernoff(pmf: QuantizerPmf, tol: float = 1e-10) -> float:
    """Chernoff information of a message pmf.

    ``alpha -> log sum p0**alpha * p1**(1-alpha)`` is convex, so a bracketed
    search suffices; the symmetric point is always evaluated, which keeps the
    result at or above the Bhattacharyya distance.
    """
    p0, p1 = pmf.p

    def log_sum(alpha: float) -> float:
        return math.log(float(np.sum(np.power(p0, alpha) * np.power(p1, 1.0 - alpha))))

    _, val = golden_section(log_sum, 0.0, 1.0, tol=tol)
    return max(0.0, -min(val, log_sum(0.5)))


# -- design ----------------------------------------------------------------

def init_halfwidth(model: ObservationModel, init_mass: float) -> float:
    """Half-width ``T`` such that ``[-T, T]`` carries ``init_mass`` of the mixture density."""
    def excess(t: float) -> float:
        both = mass(model, 0, -t, t) + mass(model, 1, -t, t)
        return 0.5 * both - init_mass

    hi = 1.0 + model.m
    while excess(hi) < 0.0:
        hi *= 2.0
    return optimize.brentq(excess, 0.0, hi, xtol=1e-13)


def _tail_function(model: ObservationModel):
    """Return ``x -> (F0, S0, F1, S1)``, the cdf and survival at ``x`` under each hypothesis."""
    mu0, mu1 = model.mean(0), model.mean(1)
    if model.kind == "gaussian":
        r = 1.0 / math.sqrt(2.0)
        erfc = math.erfc

        def tails(x: float):
            y0, y1 = (x - mu0) * r, (x - mu1) * r
            return 0.5 * erfc(-y0), 0.5 * erfc(y0), 0.5 * erfc(-y1), 0.5 * erfc(y1)
    else:
        exp = math.exp

        def half(y: float):
            if y < 0.0:
                e = 0.5 * exp(y)
                return e, 1.0 - e
            e = 0.5 * exp(-y)
            return 1.0 - e, e

        def tails(x: float):
            return half(x - mu0) + half(x - mu1)
    return tails


def _between(fa: float, sa: float, fc: float, sc: float) -> float:
    # mass of (a, c) from tail values, subtracting on the small side
    if fa >= 0.5:
        return sa - sc
    if sc >= 0.5:
        return fc - fa
    return 1.0 - (fa + sc)


_NEG = (0.0, 1.0, 0.0, 1.0)
_POS = (1.0, 0.0, 1.0, 0.0)


def _coordinate_descent(model: ObservationModel, t: list[float], bound: float,
                        cfg: DesignConfig) -> list[float]:
    tails = _tail_function(model)
    sqrt = math.sqrt
    n = len(t)

    def cell(ta, tc) -> float:
        return sqrt(_between(ta[0], ta[1], tc[0], tc[1]) * _between(ta[2], ta[3], tc[2], tc[3]))

    def coefficient(tv: list) -> float:
        e = [_NEG] + tv + [_POS]
        return math.fsum(cell(e[k], e[k + 1]) for k in range(n + 1))

    tv = [tails(x) for x in t]
    current = coefficient(tv)
    for _ in range(cfg.max_passes):
        for i in range(n):
            lo = t[i - 1] if i > 0 else -bound
            hi = t[i + 1] if i < n - 1 else bound
            if not hi > lo:
                continue
            left = tv[i - 1] if i > 0 else _NEG
            right = tv[i + 1] if i < n - 1 else _POS

            def local(x: float) -> float:
                tx = tails(x)
                return cell(left, tx) + cell(tx, right)

            x, fx = golden_section(local, lo, hi, tol=cfg.inner_tolerance)
            if fx <= local(t[i]):
                t[i] = x
                tv[i] = tails(x)
        updated = coefficient(tv)
        # B = -log(coef); the stopping rule is stated in distance units
        gain = math.log(current) - math.log(updated)
        current = updated
        if gain < cfg.pass_tolerance:
            break
    return t


def design_coordinate_descent(model: ObservationModel, rate: int,
                              cfg: DesignConfig = DesignConfig()) -> Design:
    """Maximize the Bhattacharyya distance over rate-``rate`` monotone quantizers.

    Each restart draws sorted uniform thresholds on the symmetric interval
    holding ``cfg.init_mass`` of the mixture, then sweeps the thresholds one at
    a time, each maximized between its neighbours, until a full pass gains
    less than ``cfg.pass_tolerance``. The best restart wins.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if 2 ** rate > cfg.cell_cap:
        raise SizeCapError(f"2**{rate} cells exceeds cap {cfg.cell_cap}")
    if rate == 0:
        return Design(MonotoneQuantizer(0), 0.0)

    bound = init_halfwidth(model, cfg.init_mass)
    best: Design | None = None
    for k in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, k])
        start = sorted(rng.uniform(-bound, bound, 2 ** rate - 1).tolist())
        t = _coordinate_descent(model, start, bound, cfg)
        q = MonotoneQuantizer(rate, tuple(t))
        b = bhattacharyya(cell_pmf(model, q))
        if best is None or b > best.distance:
            best = Design(q, b)
    return best


@lru_cache(maxsize=4096)
def optimal_design(model: ObservationModel, rate: int, cfg: DesignConfig = DesignConfig()) -> Design:
    """Memoized :func:`design_coordinate_descent`."""
    return design_coordinate_descent(model, rate, cfg)


def design_compander(model: ObservationModel, rate: int) -> MonotoneQuantizer:
    """Thresholds from the asymptotically optimal compander, ``t_i = q^-1(i / 2**rate)``."""
    if rate < 1:
        raise ValueError("compander design needs rate >= 1")
    k = 2 ** rate
    u = np.arange(1, k) / k
    if model.kind == "laplacian":
        t = model.m * (2.0 * u - 1.0)
    else:
        # q(x) = 1 - Q(x / sqrt 3)
        t = math.sqrt(3.0) * np.atleast_1d(q_tail_inv(1.0 - u))
    return MonotoneQuantizer(rate, tuple(np.sort(t) + 0.0))  # +0.0 drops negative zero


def beta_asymptotic(model: ObservationModel, rate: float) -> float:
    """High-rate Bhattacharyya distance of the compander design."""
    m = model.m
    scale = 2.0 ** (-2.0 * rate)
    if model.kind == "laplacian":
        return m - math.log(1.0 + m + m ** 3 / 6.0 * scale)
    return 0.5 * m * m - math.log1p(math.pi * math.sqrt(3.0) * m * m / 4.0 * scale)
