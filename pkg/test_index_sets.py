import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

from modules import index_sets
from modules.errors import ConfigurationError, DegenerateRatesError, InadmissibleRatesError
from modules.index_sets import (IndexSet, RateSet, bias_proxy, boundary, build_index_set, check_lemma_optimality,
                                complexity_constants, compute_weights, empirical_index_set, empirical_profit,
                                find_dominating_set, isotropic_complexity, level_set, profit, profit_vectors,
                                work_proxy, work_proxy_isotropic)
from modules.mixed_difference import Hierarchy, MultiIndex

KURAMOTO = RateSet(b1=1, b2=1, w1=2, w2=2, s1=2, s2=Fraction(3, 2))


def test_kuramoto_weights_are_exact():
    weights = compute_weights(KURAMOTO)
    assert weights.admissible
    assert weights.delta_bar == (Fraction(2, 3), Fraction(1, 3))
    assert weights.delta_bbar == (Fraction(2, 5), Fraction(3, 5))


def test_float_rates_give_float_weights():
    weights = compute_weights(RateSet(b1=1.0, b2=1.0, w1=2.0, w2=2.0, s1=2.0, s2=1.5))
    assert weights.delta_bar[0] == pytest.approx(2 / 3)
    assert weights.delta_bbar[1] == pytest.approx(3 / 5)


def test_inadmissible_rates_report_violations():
    weights = compute_weights(RateSet(b1=Fraction(1, 10), b2=1, w1=2, w2=2, s1=2, s2=2))
    assert not weights.admissible
    assert len(weights.violations) == 1
    assert "b1" in weights.violations[0]


def test_zero_normaliser_is_degenerate():
    half = Fraction(1, 2)
    with pytest.raises(DegenerateRatesError):
        compute_weights(RateSet(b1=half, b2=half, w1=2, w2=3, s1=1, s2=1))


def test_rate_set_from_dict():
    rates = RateSet.from_dict({"b1": 1, "b2": 1, "w1": 2, "w2": 2, "s1": 2, "s2": Fraction(3, 2), "QB": 0.1})
    assert rates == RateSet(b1=1, b2=1, w1=2, w2=2, s1=2, s2=Fraction(3, 2), QB=0.1)
    assert rates.as_dict()["s2"] == 1.5
    with pytest.raises(ConfigurationError):
        RateSet.from_dict({"b1": 1, "bogus": 2})
    with pytest.raises(ConfigurationError):
        RateSet(b1=math.inf, b2=1, w1=2, w2=2, s1=2, s2=2)


def test_smallest_set_is_the_origin():
    weights = compute_weights(KURAMOTO)
    index_set = build_index_set(weights.delta_bar, weights.delta_bbar, 2.0)
    assert index_set.members == {MultiIndex(0, 0)}
    assert boundary(index_set) == {MultiIndex(0, 0)}


def test_sets_grow_monotonically_and_stay_downward_closed():
    weights = compute_weights(KURAMOTO)
    previous = frozenset()
    for L in np.geomspace(2.0, 60.0, 25):
        index_set = build_index_set(weights.delta_bar, weights.delta_bbar, L)
        assert previous <= index_set.members
        assert index_set.is_downward_closed()
        previous = index_set.members
    assert len(previous) > 10


def test_membership_follows_the_weight_inequality():
    weights = compute_weights(KURAMOTO)
    L = 6.0
    index_set = build_index_set(weights.delta_bar, weights.delta_bbar, L)
    for a1 in range(8):
        for a2 in range(8):
            value = math.exp(2 / 3 * a1 + 1 / 3 * a2) + math.exp(2 / 5 * a1 + 3 / 5 * a2)
            assert ((a1, a2) in index_set) == (value <= L)


def test_boundary_members_have_an_outside_neighbour():
    index_set = IndexSet.of([(0, 0), (1, 0), (0, 1), (2, 0)])
    assert boundary(index_set) == {MultiIndex(1, 0), MultiIndex(0, 1), MultiIndex(2, 0)}
    assert index_set.max_levels == (2, 1)
    assert not IndexSet.of([(0, 0), (0, 2)]).is_downward_closed()
    with pytest.raises(ConfigurationError):
        boundary(IndexSet.of([]))


def test_small_L_rejected():
    weights = compute_weights(KURAMOTO)
    with pytest.raises(ConfigurationError):
        build_index_set(weights.delta_bar, weights.delta_bbar, 1.5)
    with pytest.raises(InadmissibleRatesError):
        build_index_set((0.5, -0.1), (0.5, 0.5), 3.0)


def test_kuramoto_complexity():
    report = complexity_constants(KURAMOTO)
    assert report.degenerate is None
    assert report.varsigma == 0
    assert report.varrho == 1
    assert report.Psi == Fraction(2, 3)
    assert report.condition_holds
    assert report.predicted_exponent == 2
    assert report.predicted_log_power == 2
    assert (report.d1, report.d2) == (1, 0)
    assert report.as_dict()["Psi"] == pytest.approx(2 / 3)


def test_isotropic_regimes():
    assert isotropic_complexity(3.0, 1.0, 2.0) == (2, 0, True)
    assert isotropic_complexity(2.0, 1.0, 1.0) == (2, 2, True)
    fast_cost = isotropic_complexity(1.5, 1.0, 0.5)
    assert fast_cost.exponent == pytest.approx(3.0)
    assert not fast_cost.condition_holds
    multilevel = isotropic_complexity(2.0, 1.0, 1.0, multilevel=True)
    assert multilevel.exponent == pytest.approx(3.0)
    assert multilevel.condition_holds


def test_profit_and_proxies():
    assert profit((0, 0), KURAMOTO) == pytest.approx(0.5)
    assert profit((1, 0), KURAMOTO) == pytest.approx(0.5 / (1 + 2 ** -0.5))
    assert work_proxy([(0, 0)], KURAMOTO) == pytest.approx(2.0)
    assert work_proxy_isotropic([(0, 0), (1, 1)], KURAMOTO) == pytest.approx(1 + 2 ** 1.5)
    universe = [(a1, a2) for a1 in range(2) for a2 in range(2)]
    assert bias_proxy([(0, 0)], KURAMOTO, universe) == pytest.approx(1.25)


def test_kuramoto_level_set_is_optimal():
    rho, g_bar, g_bbar = profit_vectors(KURAMOTO)
    chosen = level_set(rho, g_bar, g_bbar, 3, 0.2)
    assert chosen == {MultiIndex(0, 0), MultiIndex(1, 0), MultiIndex(0, 1), MultiIndex(0, 2)}
    assert check_lemma_optimality(rho, g_bar, g_bbar, 3, 0.2)

    swapped = (chosen - {MultiIndex(0, 2)}) | {MultiIndex(2, 0)}
    witness = find_dominating_set(swapped, rho, g_bar, g_bbar, 3)
    assert witness is not None


def test_dominating_search_block_size_keeps_the_least_work_witness(monkeypatch):
    rho, g_bar, g_bbar = profit_vectors(KURAMOTO)
    chosen = level_set(rho, g_bar, g_bbar, 3, 0.2)
    swapped = (chosen - {MultiIndex(0, 2)}) | {MultiIndex(2, 0)}
    whole = find_dominating_set(swapped, rho, g_bar, g_bbar, 3)

    monkeypatch.setattr(index_sets, "SUBSET_BLOCK_BITS", 3)
    blocked = find_dominating_set(swapped, rho, g_bar, g_bbar, 3)
    assert blocked is not None and whole is not None

    def work(members):
        return sum(index_sets._work_weight(g_bar, g_bbar, a) for a in members)

    assert work(blocked) == pytest.approx(work(whole), rel=1e-12)
    assert work(blocked) < work(swapped)
    assert find_dominating_set(chosen, rho, g_bar, g_bbar, 3) is None


def test_largest_universe_is_searched_in_blocks():
    rho, g_bar, g_bbar = profit_vectors(KURAMOTO)
    assert check_lemma_optimality(rho, g_bar, g_bbar, 4, 0.2)


def test_level_sets_undominated_for_random_rates():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        rates = RateSet(
            b1=rng.uniform(0.5, 2.0), b2=rng.uniform(0.5, 2.0),
            w1=rng.uniform(0.5, 3.0), w2=rng.uniform(0.5, 3.0),
            s1=rng.uniform(0.5, 3.0), s2=rng.uniform(0.5, 3.0),
        )
        rho, g_bar, g_bbar = profit_vectors(rates)
        profits = sorted({profit((a1, a2), rates) for a1 in range(3) for a2 in range(3)})
        k = int(rng.integers(1, len(profits)))
        v = math.sqrt(profits[k - 1] * profits[k])
        assert check_lemma_optimality(rho, g_bar, g_bbar, 2, v)


def test_dominating_search_universe_is_bounded():
    rho, g_bar, g_bbar = profit_vectors(KURAMOTO)
    with pytest.raises(ConfigurationError):
        find_dominating_set([(0, 0)], rho, g_bar, g_bbar, 5)


def test_empirical_index_set():
    hierarchy = Hierarchy(P0=5, N0=4, tau=2)
    stats = {
        MultiIndex(0, 0): SimpleNamespace(mean=1.0, V1=1.0, V2=1.0),
        MultiIndex(1, 0): SimpleNamespace(mean=1e-4, V1=1.0, V2=1.0),
        MultiIndex(0, 1): SimpleNamespace(mean=0.5, V1=1e-4, V2=1e-4),
    }
    p00 = empirical_profit((0, 0), stats[MultiIndex(0, 0)], hierarchy)
    assert p00.value == pytest.approx(1.0 / (math.sqrt(25 * 4) + math.sqrt(5 * 4)))

    chosen = empirical_index_set(stats, hierarchy, 0.01)
    assert chosen.index_set.members == {MultiIndex(0, 0), MultiIndex(0, 1)}
    assert chosen.downward_closed

    flat = empirical_profit((0, 0), SimpleNamespace(mean=1.0, V1=0.0, V2=0.0), hierarchy)
    assert flat.degenerate and math.isinf(flat.value)
