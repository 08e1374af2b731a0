import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ratebal.models import KINDS, ObservationModel, q_tail
from ratebal.network import (
    EQUAL_PRIORS,
    IncomparableDomainError,
    Majorization,
    NetworkDesign,
    Priors,
    RateAllocation,
    analytic_pe,
    balanced_allocation,
    designed_network,
    joint_pmf,
    majorizes,
    map_decisions,
    network_bhattacharyya,
    pe_upper_bound,
    rebalance,
    rebalance_pair,
    snr_to_m,
)
from ratebal.quantizer import MonotoneQuantizer, QuantizerPmf, SizeCapError, bhattacharyya, cell_pmf, chernoff, optimal_design

GAUSS = ObservationModel("gaussian", 1.0)
ONE_BIT = MonotoneQuantizer(1, (0.0,))
B_GAUSS_ONE_BIT = 0.31374053145641


def network(model, qs):
    rates = tuple(q.rate for q in qs)
    return NetworkDesign(model, RateAllocation(rates, sum(rates)), tuple(qs))


def random_network(rng, max_total=12):
    kind = KINDS[int(rng.integers(2))]
    model = ObservationModel(kind, float(rng.uniform(0.1, 3.0)))
    n = int(rng.integers(1, 6))
    rates = []
    for _ in range(n):
        r = int(rng.integers(0, 4))
        if sum(rates) + r > max_total:
            r = 0
        rates.append(r)
    qs = tuple(MonotoneQuantizer(r, tuple(np.sort(rng.normal(0, 1.5, 2 ** r - 1)))) for r in rates)
    return network(model, qs)


def brute_force_pe(design, priors=EQUAL_PRIORS):
    """Enumerate every message vector and multiply sensor probabilities left to right."""
    pmfs = [cell_pmf(design.model, q).p for q in design.quantizers]
    terms = []
    for u in itertools.product(*(range(p.shape[1]) for p in pmfs)):
        joint = []
        for h in (0, 1):
            prob = 1.0
            for p, k in zip(pmfs, u):
                prob = prob * p[h, k]
            joint.append(prob)
        terms.append(min(priors.pi0 * joint[0], priors.pi1 * joint[1]))
    return math.fsum(terms)


class TestTypes:
    def test_allocation_cap(self):
        with pytest.raises(ValueError):
            RateAllocation((3, 3), 5)
        with pytest.raises(ValueError):
            RateAllocation((), 5)
        with pytest.raises(ValueError):
            RateAllocation((-1, 2), 5)
        assert RateAllocation((2, 1, 0), 4).label() == "2-1-0"

    def test_priors(self):
        with pytest.raises(ValueError):
            Priors(0.6, 0.6)
        with pytest.raises(ValueError):
            Priors(-0.1, 1.1)

    def test_design_rate_mismatch(self):
        with pytest.raises(ValueError):
            NetworkDesign(GAUSS, RateAllocation((2,), 2), (ONE_BIT,))
        with pytest.raises(ValueError):
            NetworkDesign(GAUSS, RateAllocation((1, 1), 2), (ONE_BIT,))


class TestJointPmf:
    def test_single_sensor(self):
        q = MonotoneQuantizer(2, (-1.0, 0.2, 0.9))
        assert np.array_equal(joint_pmf(network(GAUSS, [q])).p, cell_pmf(GAUSS, q).p)

    def test_two_one_bit_sensors(self):
        p = joint_pmf(network(GAUSS, [ONE_BIT, ONE_BIT])).p
        assert p.shape == (2, 4)
        # cell 0 of each sensor is x <= 0, so u = (0, 0) under H=1 has probability Q(1)**2
        assert p[1, 0] == pytest.approx(q_tail(1.0) ** 2, rel=1e-15)
        assert p[1, 0] == pytest.approx(0.0251715, abs=1e-7)
        assert p[1, 3] == pytest.approx((1 - q_tail(1.0)) ** 2, rel=1e-15)

    def test_all_zero_rates(self):
        p = joint_pmf(network(GAUSS, [MonotoneQuantizer(0)] * 4)).p
        assert np.array_equal(p, [[1.0], [1.0]])

    def test_rows_sum(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = joint_pmf(random_network(rng)).p
            assert np.abs(p.sum(axis=1) - 1).max() <= 1e-10

    def test_cap(self):
        d = network(GAUSS, [MonotoneQuantizer(2, (-1.0, 0.0, 1.0))] * 3)
        with pytest.raises(SizeCapError):
            joint_pmf(d, cap=32)
        with pytest.raises(SizeCapError):
            analytic_pe(d, cap=32)

    def test_sensor_one_most_significant(self):
        a = MonotoneQuantizer(1, (-0.5,))
        b = MonotoneQuantizer(2, (-1.0, 0.0, 1.0))
        p = joint_pmf(network(GAUSS, [a, b])).p
        pa, pb = cell_pmf(GAUSS, a).p, cell_pmf(GAUSS, b).p
        for i in range(2):
            for j in range(4):
                assert p[0, i * 4 + j] == pa[0, i] * pb[0, j]


class TestDistances:
    def test_three_one_bit_sensors(self):
        d = network(GAUSS, [ONE_BIT] * 3)
        assert network_bhattacharyya(d) == pytest.approx(3 * B_GAUSS_ONE_BIT, abs=1e-13)
        assert network_bhattacharyya(d) == pytest.approx(bhattacharyya(joint_pmf(d)), abs=1e-12)

    def test_zero_rates(self):
        assert network_bhattacharyya(network(GAUSS, [MonotoneQuantizer(0)] * 3)) == 0.0

    def test_mixed_designed(self):
        model = ObservationModel("laplacian", 1.0)
        d = network(model, [optimal_design(model, 1).quantizer, optimal_design(model, 2).quantizer])
        assert abs(network_bhattacharyya(d) - bhattacharyya(joint_pmf(d))) <= 1e-12

    def test_additivity_and_chernoff_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            d = random_network(rng)
            joint = joint_pmf(d)
            assert abs(network_bhattacharyya(d) - bhattacharyya(joint)) <= 1e-12
            per_sensor = math.fsum(chernoff(p) for p in d.sensor_pmfs())
            assert chernoff(joint) <= per_sensor + 1e-8


class TestErrorProbability:
    def test_single_one_bit_sensor(self):
        d = network(GAUSS, [ONE_BIT])
        assert analytic_pe(d) == pytest.approx(q_tail(1.0), rel=1e-15)
        assert analytic_pe(d) == brute_force_pe(d)

    def test_no_information(self):
        assert analytic_pe(network(GAUSS, [MonotoneQuantizer(0)] * 3)) == 0.5

    def test_bound_examples(self):
        d = network(GAUSS, [ONE_BIT])
        assert pe_upper_bound(d) == pytest.approx(0.5 * math.exp(-B_GAUSS_ONE_BIT), rel=1e-14)
        assert pe_upper_bound(d) >= analytic_pe(d)
        assert pe_upper_bound(network(GAUSS, [MonotoneQuantizer(0)])) == 0.5
        assert pe_upper_bound(d, Priors(1.0, 0.0)) == 0.0
        assert analytic_pe(d, Priors(1.0, 0.0)) == 0.0

    def test_high_rate_bound(self):
        model = ObservationModel("gaussian", 3.0)
        d = designed_network(model, RateAllocation((4, 4), 8))
        assert analytic_pe(d) <= pe_upper_bound(d)

    def test_brute_force_random(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            d = random_network(rng, max_total=10)
            pri = Priors(*(lambda x: (1 - x, x))(float(rng.uniform(0.05, 0.95))))
            for priors in (EQUAL_PRIORS, pri):
                pe = analytic_pe(d, priors)
                assert pe == brute_force_pe(d, priors)
                assert 0.0 <= pe <= min(priors.pi0, priors.pi1)
                assert pe <= pe_upper_bound(d, priors) + 1e-15

    def test_map_beats_random_rules(self):
        rng = np.random.default_rng(9)
        d = random_network(rng)
        while d.allocation.total < 3:
            d = random_network(rng)
        p = joint_pmf(d).p
        pe = analytic_pe(d)
        for _ in range(50):
            rule = rng.integers(0, 2, p.shape[1])
            other = 0.5 * (p[0][rule == 1].sum() + p[1][rule == 0].sum())
            assert pe <= other + 1e-15

    def test_map_tie_breaks_to_zero(self):
        d = network(GAUSS, [MonotoneQuantizer(0)])
        assert map_decisions(d).tolist() == [0]


class TestMajorization:
    def test_examples(self):
        assert majorizes([2] * 6, [3, 3, 2, 2, 1, 1]) is Majorization.A_MAJORIZED_BY_B
        assert majorizes([3, 3, 2, 2, 1, 1], [2] * 6) is Majorization.B_MAJORIZED_BY_A
        assert majorizes([5, 3, 1, 1, 1, 1], [3, 3, 3, 3, 0, 0]) is Majorization.INCOMPARABLE
        assert majorizes([1, 4, 2], [4, 2, 1]) is Majorization.EQUAL

    def test_accepts_allocations(self):
        a = RateAllocation((2, 2), 4)
        b = RateAllocation((4, 0), 4)
        assert majorizes(a, b) is Majorization.A_MAJORIZED_BY_B

    @pytest.mark.parametrize("a,b", [([1, 2], [1, 2, 0]), ([1, 2], [2, 2])])
    def test_domain(self, a, b):
        with pytest.raises(IncomparableDomainError):
            majorizes(a, b)

    @pytest.mark.parametrize("kind", KINDS)
    def test_schur_consequence(self, kind):
        model = ObservationModel(kind, 1.0)
        best = {r: optimal_design(model, r).distance for r in range(6)}
        vectors = [v for v in itertools.product(range(6), repeat=3) if sum(v) == 6 and list(v) == sorted(v, reverse=True)]
        for a, b in itertools.permutations(vectors, 2):
            if majorizes(a, b) is Majorization.A_MAJORIZED_BY_B:
                assert sum(best[r] for r in a) >= sum(best[r] for r in b) - 1e-6


class TestBalancing:
    @pytest.mark.parametrize("n,total,expected", [(6, 12, [2] * 6), (5, 12, [3, 3, 2, 2, 2]), (1, 7, [7]),
                                                  (5, 3, [1, 1, 1, 0, 0])])
    def test_balanced(self, n, total, expected):
        assert list(balanced_allocation(n, total).rates) == expected

    def test_balanced_invalid(self):
        with pytest.raises(ValueError):
            balanced_allocation(0, 3)

    @pytest.mark.parametrize("pair,expected", [((1, 5), (3, 3)), ((0, 3), (1, 2)), ((2, 2), (2, 2))])
    def test_pair(self, pair, expected):
        assert rebalance_pair(*pair) == expected

    def test_pair_order(self):
        with pytest.raises(ValueError):
            rebalance_pair(3, 1)

    @given(st.integers(0, 40), st.integers(0, 40))
    def test_pair_properties(self, x, y):
        lo, hi = min(x, y), max(x, y)
        a, b = rebalance_pair(lo, hi)
        assert a + b == lo + hi and 0 <= b - a <= 1

    @given(st.lists(st.integers(0, 10), min_size=1, max_size=8))
    def test_rebalance_reaches_balanced(self, rates):
        hist = rebalance(rates)
        final = hist[-1]
        assert sorted(final, reverse=True) == list(balanced_allocation(len(rates), sum(rates)).rates)
        for prev, nxt in zip(hist, hist[1:]):
            assert sum(nxt) == sum(prev)
            assert majorizes(nxt, prev) is Majorization.A_MAJORIZED_BY_B

    def test_snr(self):
        assert snr_to_m("gaussian", 0.0) == 1.0
        assert snr_to_m("laplacian", 0.0) == pytest.approx(math.sqrt(2), rel=1e-15)
        assert snr_to_m("gaussian", -400.0) < 1e-19
        assert snr_to_m("gaussian", 10.0) == pytest.approx(math.sqrt(10), rel=1e-15)
        with pytest.raises(ValueError):
            snr_to_m("rayleigh", 0.0)


def test_pmf_type_used():
    assert isinstance(joint_pmf(network(GAUSS, [ONE_BIT])), QuantizerPmf)
