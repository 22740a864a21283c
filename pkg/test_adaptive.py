import math
from fractions import Fraction

import numpy as np
import pytest

from modules.adaptive import (AdaptiveSettings, PilotSettings, extrapolate_variances, run_adaptive,
                              run_dlmc_single, run_multilevel, single_level_report)
from modules.control import GridSpec, control_from_value, solve_kbe
from modules.errors import InadmissibleRatesError, MimcError
from modules.index_sets import IndexSet, RateSet, boundary
from modules.mixed_difference import Hierarchy, MultiIndex, Quantity, variance_ratio
from modules.models import constant_observable, make_kuramoto, make_mollified_observable, mollified_indicator
from modules.particle_system import simulate_law
from modules.randomness import StreamKey, StreamRole, draw_bundle

MODEL = make_kuramoto(0.4, 1.0, 0.0, 0.2 ** 0.5, 0.2)
HIERARCHY = Hierarchy(P0=5, N0=4, tau=2)
KURAMOTO = RateSet(b1=1, b2=1, w1=2, w2=2, s1=2, s2=Fraction(3, 2))
SMALL_PILOT = PilotSettings(mean_samples=(4, 2), variance_samples=(2, 2))
ONE = constant_observable(1.0)


def _block(value=(1.0, 1.0)):
    return {MultiIndex(a1, a2): value for a1 in range(3) for a2 in range(3)}


# =============================================================================
# VARIANCE EXTRAPOLATION
# =============================================================================

def test_seeded_values_are_returned_unchanged():
    seed = {MultiIndex(a1, a2): (float(a1 + 1), float(a2 + 1)) for a1 in range(3) for a2 in range(3)}
    out = extrapolate_variances(seed, KURAMOTO, IndexSet.of([(0, 0), (1, 2), (2, 1)]))
    assert out == {MultiIndex(0, 0): (1.0, 1.0), MultiIndex(1, 2): (2.0, 3.0), MultiIndex(2, 1): (3.0, 2.0)}


def test_extrapolation_along_the_second_axis():
    rates = RateSet(b1=1, b2=1, w1=2, w2=2, s1=2, s2=1)
    target = IndexSet.of([(a1, a2) for a1 in range(3) for a2 in range(3)] + [(1, 3), (0, 3)])
    out = extrapolate_variances(_block(), rates, target)
    assert out[MultiIndex(1, 3)] == (pytest.approx(0.25), pytest.approx(0.5))


def test_extrapolation_mirrors_along_the_first_axis_and_fills_the_interior():
    rates = RateSet(b1=1, b2=1, w1=1, w2=2, s1=1, s2=2)
    members = [(a1, a2) for a1 in range(4) for a2 in range(4)]
    out = extrapolate_variances(_block(), rates, IndexSet.of(members))
    assert out[MultiIndex(3, 0)] == (pytest.approx(0.5), pytest.approx(0.5))
    assert out[MultiIndex(3, 1)] == (pytest.approx(0.5), pytest.approx(0.5))
    # (3, 2): max of (3, 1) / 4 and (2, 2) / 2
    assert out[MultiIndex(3, 2)][0] == pytest.approx(0.5)
    assert out[MultiIndex(2, 3)][0] == pytest.approx(0.25)
    assert out[MultiIndex(3, 3)][0] == pytest.approx(max(0.5 / 4, 0.25 / 2))


def test_cache_keeps_earlier_values():
    cache = {}
    first = extrapolate_variances(_block(), KURAMOTO, IndexSet.of([(0, 0), (0, 1), (0, 2), (0, 3)]), cache)
    sentinel = (123.0, 456.0)
    cache[MultiIndex(0, 3)] = sentinel
    again = extrapolate_variances(_block(), KURAMOTO, IndexSet.of([(0, 3)]), cache)
    assert first[MultiIndex(0, 3)] != sentinel
    assert again[MultiIndex(0, 3)] == sentinel


def test_incomplete_block_or_missing_predecessor_fails():
    partial = _block()
    del partial[MultiIndex(2, 2)]
    with pytest.raises(MimcError):
        extrapolate_variances(partial, KURAMOTO, IndexSet.of([(0, 0)]))
    with pytest.raises(MimcError):
        extrapolate_variances(_block(), KURAMOTO, IndexSet.of([(4, 4)]))


# =============================================================================
# ESTIMATORS
# =============================================================================

def test_constant_observable_converges_to_one():
    report = run_adaptive(MODEL, HIERARCHY, None, ONE, KURAMOTO, tol_r=0.05, pilot=SMALL_PILOT, master_seed=3)
    assert report.converged
    assert report.estimate == 1.0
    assert report.rel_bias_est == 0.0
    assert report.rel_stat_err_est == 0.0
    assert MultiIndex(0, 0) not in boundary(report.index_set)
    assert report.index_set.is_downward_closed()
    assert report.iterations == len(report.history)
    assert all(rec.M1 == 1 and rec.M2 == 1 for rec in report.allocation.records.values())


def test_history_tracks_growing_sets():
    report = run_adaptive(MODEL, HIERARCHY, None, ONE, KURAMOTO, tol_r=0.05, pilot=SMALL_PILOT, master_seed=3)
    sizes = [h.set_size for h in report.history]
    assert sizes == sorted(sizes)
    assert len(set(sizes)) == len(sizes)
    costs = [h.model_cost for h in report.history]
    assert costs == sorted(costs)


def test_same_seed_same_report():
    a = run_adaptive(MODEL, HIERARCHY, None, ONE, KURAMOTO, 0.05, pilot=SMALL_PILOT, master_seed=5)
    b = run_adaptive(MODEL, HIERARCHY, None, ONE, KURAMOTO, 0.05, pilot=SMALL_PILOT, master_seed=5, n_jobs=2)
    assert a.as_dict() == b.as_dict()


def test_budget_cap_stops_before_estimating():
    settings = AdaptiveSettings(max_model_cost=1.0)
    report = run_adaptive(MODEL, HIERARCHY, None, ONE, KURAMOTO, 0.05, pilot=SMALL_PILOT, settings=settings)
    assert not report.converged
    assert report.iterations == 0
    assert len(report.index_set) == 0
    assert math.isinf(report.rel_stat_err_est)
    assert report.as_dict()["max_levels"] == [0, 0]


def test_inadmissible_rates_rejected():
    rates = RateSet(b1=Fraction(1, 10), b2=1, w1=2, w2=2, s1=2, s2=2)
    with pytest.raises(InadmissibleRatesError):
        run_adaptive(MODEL, HIERARCHY, None, ONE, rates, 0.05, pilot=SMALL_PILOT)


def test_bad_sweep_settings_rejected():
    with pytest.raises(MimcError):
        run_adaptive(MODEL, HIERARCHY, None, ONE, KURAMOTO, 0.05, pilot=SMALL_PILOT,
                     settings=AdaptiveSettings(L0=1.0))


def test_multilevel_constant_observable():
    report = run_multilevel(MODEL, HIERARCHY, None, ONE, 0.05, pilot=SMALL_PILOT, master_seed=2)
    assert report.converged
    assert report.mode == "multilevel"
    assert report.estimate == 1.0
    assert report.index_set.members == {MultiIndex(0, 0), MultiIndex(1, 1), MultiIndex(2, 2)}


def test_single_level_deterministic_model():
    model = make_kuramoto(0.0, 1.0, 0.0, 0.0, 0.0, coupling=0.0)
    result = run_dlmc_single(model, 10, 8, 1, 1, None, make_mollified_observable(0.5), seed=0)
    assert result.estimate == pytest.approx(float(mollified_indicator(0.0, 0.5)))
    assert result.stat_err == 0.0


def test_single_level_report_fields():
    report = single_level_report(MODEL, 10, 8, 20, 4, None, make_mollified_observable(0.0), seed=1)
    assert report.mode == "single"
    assert report.index_set.members == {MultiIndex(0, 0)}
    stats = report.per_alpha_stats[MultiIndex(0, 0)]
    assert (stats.P, stats.N, stats.m1_used, stats.m2_used) == (10, 8, 20, 4)
    assert report.as_dict()["wall_time"] is None


# =============================================================================
# DESK-SCALE STUDIES
# =============================================================================

def _study_control(K=3.5):
    key = StreamKey(0, role=StreamRole.CONTROL_LAW)
    law = simulate_law(MODEL, draw_bundle(key, MODEL, 1000, 100), 1000, 100)
    observable = make_mollified_observable(K)
    value = solve_kbe(MODEL, law, GridSpec(), observable)
    return control_from_value(value, MODEL, law), observable


@pytest.mark.slow
def test_importance_sampling_cuts_variance_in_the_tail():
    control, observable = _study_control()
    for quantity in (Quantity.LEVEL, Quantity.DIFFERENCE):
        r = variance_ratio(MODEL, HIERARCHY, (1, 1), control, observable, 100, 100, StreamKey(1),
                           quantity=quantity)
        assert r.ratio <= 0.3


@pytest.mark.slow
def test_adaptive_agrees_with_single_level():
    observable = make_mollified_observable(0.0)
    report = run_adaptive(MODEL, HIERARCHY, None, observable, KURAMOTO, 0.1, master_seed=4)
    reference = run_dlmc_single(MODEL, 40, 32, 1000, 100, None, observable, seed=99)
    assert report.converged
    assert report.rel_stat_err_est <= 0.5 * 0.1 * (1 + 1e-9)
    assert abs(report.estimate - reference.estimate) <= 0.1 * abs(reference.estimate) + 3 * reference.stat_err


@pytest.fixture(scope="module")
def tail_study():
    control, observable = _study_control()
    runs = {}

    def run(tol_r, seed):
        if (tol_r, seed) not in runs:
            runs[tol_r, seed] = run_adaptive(MODEL, HIERARCHY, control, observable, KURAMOTO, tol_r,
                                             master_seed=seed)
        return runs[tol_r, seed]

    return control, observable, run


@pytest.mark.slow
def test_repeated_runs_meet_their_tolerance(tail_study):
    _, _, run = tail_study
    reference = run(0.02, 1000).estimate
    hits = 0
    for tol_r in (0.2, 0.1, 0.05):
        for seed in range(5):
            hits += abs(run(tol_r, seed).estimate - reference) <= tol_r * abs(reference)
    assert hits >= 13


@pytest.mark.slow
def test_multi_index_cost_grows_slower_than_multilevel(tail_study):
    control, observable, run = tail_study
    tols = np.array([0.2, 0.1, 0.05, 0.025])
    costs = np.array([run(tol_r, 0).total_model_cost for tol_r in tols])
    slope = np.polyfit(np.log(1.0 / tols), np.log(costs), 1)[0]
    assert slope <= 2.6

    multilevel = run_multilevel(MODEL, HIERARCHY, control, observable, 0.05, master_seed=0)
    assert multilevel.total_model_cost >= run(0.05, 0).total_model_cost
