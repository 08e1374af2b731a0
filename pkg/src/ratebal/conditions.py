"""Per-interval split conditions and rate-concavity checks.

For an interval ``I`` and a split point ``eta`` two conditional Bhattacharyya
coefficients are compared: ``b_inf`` of the unquantized observation given
``X in I`` and ``b_1`` of the one-bit split of ``I`` at ``eta``. A split with
``b_1**2 <= b_inf`` keeps at least half of the conditional distance, and if
every interval of every optimal quantizer admits one, the optimal distance is
discretely concave in the rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from ratebal.models import ExtendedInterval, ObservationModel, mass, pdf, q_tail, q_tail_inv

ETA_RULES = ("likelihood", "compander", "midpoint")
_SQRT3 = math.sqrt(3.0)


class DegenerateIntervalError(ValueError):
    """The interval carries no probability under one of the hypotheses."""


@dataclass(frozen=True)
class SplitCondition:
    interval: ExtendedInterval
    eta: float
    b_inf_i: float
    b_1_i: float

    @property
    def margin(self) -> float:
        return self.b_inf_i - self.b_1_i ** 2

    @property
    def holds(self) -> bool:
        return self.margin >= 0.0


@dataclass
class ScanReport:
    kind: str
    m_values: tuple[float, ...]
    grid_n: int
    eta_rule: str
    min_margin: float
    argmin: tuple[float, float, float]  # (a_tilde, c_tilde, m)
    cells: dict[str, np.ndarray] | None = None


# -- conditional coefficients (array forms) --------------------------------

def _masses(model: ObservationModel, a, c):
    p0 = np.asarray(mass(model, 0, a, c))
    p1 = np.asarray(mass(model, 1, a, c))
    if np.any(p0 <= 0.0) or np.any(p1 <= 0.0):
        raise DegenerateIntervalError("interval has zero mass under a hypothesis")
    return p0, p1


def _overlap_integral(model: ObservationModel, a, c):
    """``integral_a^c sqrt(f(x|0) f(x|1)) dx`` in closed form."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    m = model.m
    if model.kind == "gaussian":
        # sqrt(f0 f1) = exp(-m^2/2) * phi(x)
        std = ObservationModel("gaussian", 0.0)
        return math.exp(-0.5 * m * m) * np.asarray(mass(std, 0, a, c))
    # sqrt(f0 f1) = exp(-max(|x|, m)) / 2
    with np.errstate(invalid="ignore", over="ignore"):
        lc = np.minimum(c, -m)
        left = np.where(a < lc, -0.5 * np.exp(lc) * np.expm1(a - lc), 0.0)
        ma, mc = np.maximum(a, -m), np.minimum(c, m)
        middle = np.where(ma < mc, 0.5 * math.exp(-m) * (mc - ma), 0.0)
        ra = np.maximum(a, m)
        right = np.where(ra < c, -0.5 * np.exp(-ra) * np.expm1(ra - c), 0.0)
    return left + middle + right


def b_inf_array(model: ObservationModel, a, c):
    p0, p1 = _masses(model, a, c)
    return _overlap_integral(model, a, c) / np.sqrt(p0 * p1)


def b_1_array(model: ObservationModel, a, c, eta):
    p0, p1 = _masses(model, a, c)
    lo = np.sqrt(mass(model, 0, a, eta) / p0 * (mass(model, 1, a, eta) / p1))
    hi = np.sqrt(mass(model, 0, eta, c) / p0 * (mass(model, 1, eta, c) / p1))
    return lo + hi


def b_inf_conditional(model: ObservationModel, iv: ExtendedInterval, method: str = "closed") -> float:
    """Bhattacharyya coefficient of the unquantized observation given ``X in iv``.

    ``method="quad"`` integrates numerically instead, splitting at the
    Laplacian kinks ``+-m``.
    """
    if method == "closed":
        return float(b_inf_array(model, iv.a, iv.c))
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    p0, p1 = _masses(model, iv.a, iv.c)
    pts = [iv.a] + [x for x in (-model.m, model.m) if iv.a < x < iv.c] + [iv.c]
    total = 0.0
    for lo, hi in zip(pts, pts[1:]):
        val, _ = integrate.quad(lambda x: math.sqrt(pdf(model, 0, x) * pdf(model, 1, x)), lo, hi,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return total / math.sqrt(float(p0) * float(p1))


def b_1_conditional(model: ObservationModel, iv: ExtendedInterval, eta: float) -> float:
    """Bhattacharyya coefficient of the split of ``iv`` at ``eta``, given ``X in iv``."""
    if not iv.a <= eta <= iv.c:
        raise ValueError(f"eta={eta} outside interval ({iv.a}, {iv.c})")
    return float(b_1_array(model, iv.a, iv.c, eta))


# -- split thresholds ------------------------------------------------------

def _bisect(g, lo, hi, tol: float = 1e-12):
    """Vectorized bisection for a nondecreasing ``g`` with ``g(lo) <= 0 <= g(hi)``."""
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        neg = g(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def _fallback_point(a, c, m):
    """Split point for intervals on which the likelihood ratio is constant."""
    a, c = np.asarray(a, dtype=float), np.asarray(c, dtype=float)
    with np.errstate(invalid="ignore"):
        mid = 0.5 * (a + c)
    near = np.where(np.abs(a) < np.abs(c), a, c)
    return np.where(np.isfinite(mid), mid, near)


def eta_likelihood_array(model: ObservationModel, a, c):
    a, c = np.asarray(a, dtype=float), np.asarray(c, dtype=float)
    p0, p1 = _masses(model, a, c)
    target = np.log(p1) - np.log(p0)
    m = model.m
    if m == 0.0:
        return np.clip(0.0, a, c)
    if model.kind == "gaussian":
        return np.clip(target / (2.0 * m), a, c)
    lo, hi = np.maximum(a, -m), np.minimum(c, m)
    sloped = lo < hi
    lo_s, hi_s = np.where(sloped, lo, 0.0), np.where(sloped, hi, 0.0)
    root = _bisect(lambda x: np.clip(2.0 * x, -2 * m, 2 * m) - target, lo_s, hi_s)
    return np.where(sloped, np.clip(root, lo_s, hi_s), _fallback_point(a, c, m))


def eta_compander_array(model: ObservationModel, a, c):
    a, c = np.asarray(a, dtype=float), np.asarray(c, dtype=float)
    if model.kind == "laplacian":
        m = model.m
        lo, hi = np.maximum(a, -m), np.minimum(c, m)
        return np.where(lo <= hi, 0.5 * (lo + hi), _fallback_point(a, c, m))
    up = 0.5 * (q_tail(a / _SQRT3) + q_tail(c / _SQRT3))
    down = 0.5 * (q_tail(-a / _SQRT3) + q_tail(-c / _SQRT3))
    # invert on whichever side of 1/2 keeps the tail probability small
    right = up <= 0.5
    p = np.where(right, up, down)
    p = np.clip(p, np.finfo(float).tiny, 0.5)
    x = _SQRT3 * np.asarray(q_tail_inv(p))
    return np.clip(np.where(right, x, -x), a, c)


def eta_likelihood(model: ObservationModel, iv: ExtendedInterval) -> float:
    """Point where the two conditional densities on ``iv`` are equal."""
    return float(eta_likelihood_array(model, iv.a, iv.c))


def eta_compander(model: ObservationModel, iv: ExtendedInterval) -> float:
    """Compander median of ``iv``: ``q^-1`` of the midpoint of ``q(iv)``."""
    return float(eta_compander_array(model, iv.a, iv.c))


def eta_for_rule(model: ObservationModel, a, c, rule: str):
    if rule == "likelihood":
        return eta_likelihood_array(model, a, c)
    if rule == "compander":
        return eta_compander_array(model, a, c)
    if rule == "midpoint":
        # the Laplacian midpoint of I intersected with [-m, m] is the compander median
        if model.kind != "laplacian":
            raise ValueError("the midpoint rule is defined for the laplacian model only")
        return eta_compander_array(model, a, c)
    raise ValueError(f"unknown eta rule {rule!r}")


def check_split(model: ObservationModel, iv: ExtendedInterval, eta: float) -> SplitCondition:
    return SplitCondition(iv, float(eta), b_inf_conditional(model, iv), b_1_conditional(model, iv, eta))


# -- grid scan -------------------------------------------------------------

def logit(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(u) - np.log1p(-u)


def scan_conjecture(kind: str, m_list: Sequence[float], grid_n: int, eta_rule: str = "likelihood",
                    keep_cells: bool = False) -> ScanReport:
    """Minimum split margin over all logit-grid intervals.

    Grid points ``u_k = k / (grid_n - 1)`` are mapped through the logit, so
    ``u = 0`` and ``u = 1`` give the infinite endpoints; every pair
    ``u_i < u_j`` is one interval.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    u = np.arange(grid_n) / (grid_n - 1)
    i, j = np.triu_indices(grid_n, k=1)
    ua, uc = u[i], u[j]
    a, c = logit(ua), logit(uc)

    best = (math.inf, (math.nan, math.nan, math.nan))
    rows = {"m": [], "a_tilde": [], "c_tilde": [], "margin": []}
    for m in m_list:
        model = ObservationModel(kind, m)
        eta = eta_for_rule(model, a, c, eta_rule)
        margin = b_inf_array(model, a, c) - b_1_array(model, a, c, eta) ** 2
        k = int(np.argmin(margin))
        if margin[k] < best[0]:
            best = (float(margin[k]), (float(ua[k]), float(uc[k]), float(m)))
        if keep_cells:
            rows["m"].append(np.full(margin.shape, float(m)))
            rows["a_tilde"].append(ua)
            rows["c_tilde"].append(uc)
            rows["margin"].append(margin)
    cells = {k: np.concatenate(v) for k, v in rows.items()} if keep_cells and m_list else None
    return ScanReport(kind, tuple(float(m) for m in m_list), grid_n, eta_rule, best[0], best[1], cells)


# -- concavity -------------------------------------------------------------

@dataclass(frozen=True)
class ConcavityResult:
    concave: bool
    violation: int | None
    lemma2: bool

    def __bool__(self) -> bool:
        return self.concave and self.lemma2


def concavity_check(seq: Sequence[float], tol: float = 0.0) -> ConcavityResult:
    """Discrete concavity ``g(r-1) + g(r+1) <= 2 g(r)`` at every interior ``r``.

    Also checks the two iterated forms for every valid ``(r, k)``:
    ``g(r+k) + g(r-k) <= 2 g(r)`` and ``g(r+k+1) + g(r-k) <= g(r+1) + g(r)``.
    Their slack grows as ``k**2 * tol`` and ``k*(k+1) * tol`` because each is a
    sum of that many basic inequalities.
    """
    g = [float(x) for x in seq]
    if len(g) < 3:
        raise ValueError("need at least three values")
    violation = None
    for r in range(1, len(g) - 1):
        if g[r - 1] + g[r + 1] > 2.0 * g[r] + tol:
            violation = r
            break
    lemma2 = True
    n = len(g)
    for r in range(n):
        for k in range(0, r + 1):
            if r + k < n and g[r + k] + g[r - k] > 2.0 * g[r] + k * k * tol:
                lemma2 = False
            if r + k + 1 < n and g[r + k + 1] + g[r - k] > g[r + 1] + g[r] + k * (k + 1) * tol:
                lemma2 = False
    return ConcavityResult(violation is None, violation, lemma2)


def lemma3_check(b_seq: Sequence[float], b_inf: float, tol: float = 0.0) -> bool:
    """``B_r + B_inf <= 2 B_{r+1}`` for consecutive rates: each added bit closes half the gap."""
    if len(b_seq) < 2:
        raise ValueError("need at least two values")
    return all(b_seq[r] + b_inf <= 2.0 * b_seq[r + 1] + tol for r in range(len(b_seq) - 1))


# -- laplacian certificate --------------------------------------------------

@dataclass
class CertificateReport:
    m: float
    grid_n: int
    inner_max: float        # max of (2-y)e^y + (2+y)e^-y - 4 over y in [0, m]
    tail_max: float         # max of lambda(y) - rho(y) over y in (0, 1]
    whole_line: float       # 1 - m - e^-m
    direct_min_margin: float

    @property
    def max_violation(self) -> float:
        return max(self.inner_max, self.tail_max, self.whole_line)

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_violation <= tol and self.direct_min_margin >= -tol


def laplacian_certificate(m: float, grid_n: int = 10_000) -> CertificateReport:
    """Check the three Laplacian split inequalities on uniform grids.

    Interior intervals ``[a, c]`` of ``[-m, m]`` split at the midpoint reduce to
    ``(2-y)e^y + (2+y)e^-y <= 4`` with ``y`` the half-width; tails ``[a, inf)``
    split at ``(a+m)/2`` reduce to ``(1-y+sqrt(2-y))^2 <= (1-2 ln y) sqrt(2-y^2)``
    with ``y = exp((a-m)/2)``; the whole line split at 0 reduces to
    ``1 - m - e^-m <= 0``. The margins themselves are also evaluated directly
    on the same families of intervals.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    y = np.linspace(0.0, m, grid_n)
    # (2-y)e^y + (2+y)e^-y - 4 == 8 sinh^2(y/2) - 2 y sinh(y), free of cancellation at 0
    inner = 8.0 * np.sinh(0.5 * y) ** 2 - 2.0 * y * np.sinh(y)

    z = np.arange(1, grid_n + 1) / grid_n
    lam = (1.0 - z + np.sqrt(2.0 - z)) ** 2
    rho = (1.0 - 2.0 * np.log(z)) * np.sqrt(2.0 - z * z)
    tail = lam - rho

    whole = 1.0 - m - math.exp(-m)

    direct = math.inf
    if m > 0.0:
        model = ObservationModel("laplacian", m)
        half = np.linspace(0.0, m, grid_n)[1:]
        a = np.full(half.shape, -m)
        c = -m + 2.0 * half
        d_inner = b_inf_array(model, a, c) - b_1_array(model, a, c, 0.5 * (a + c)) ** 2
        at = np.linspace(-m, m, grid_n)
        ct = np.full(at.shape, np.inf)
        d_tail = b_inf_array(model, at, ct) - b_1_array(model, at, ct, 0.5 * (at + m)) ** 2
        d_line = check_split(model, ExtendedInterval(-math.inf, math.inf), 0.0).margin
        direct = float(min(d_inner.min(), d_tail.min(), d_line))
    return CertificateReport(float(m), grid_n, float(inner.max()), float(tail.max()), whole, direct)
