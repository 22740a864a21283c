from types import SimpleNamespace

import pytest

from modules.control import GridSpec, control_from_value, solve_kbe
from modules.errors import RateFitError
from modules.mixed_difference import Hierarchy, MultiIndex, estimate_stats
from modules.models import make_kuramoto, make_mollified_observable
from modules.particle_system import simulate_law
from modules.randomness import StreamKey, StreamRole, draw_bundle
from modules.rates import fit_rates, pilot_grid


def _synthetic(axis_range=4, q=3.0, b=(1.0, 1.0), w=(2.0, 1.5), s=(2.5, 2.0)):
    stats = {}
    for alpha in pilot_grid(axis_range):
        a1, a2 = alpha
        stats[alpha] = SimpleNamespace(
            mean=-q * 2.0 ** (-b[0] * a1 - b[1] * a2),
            V1=0.5 * 2.0 ** (-w[0] * a1 - w[1] * a2),
            V2=2.0 * 2.0 ** (-s[0] * a1 - s[1] * a2),
        )
    return stats


def test_pilot_grid_covers_block_and_axes():
    grid = pilot_grid(4)
    assert grid == sorted(grid)
    for a1 in range(3):
        for a2 in range(3):
            assert MultiIndex(a1, a2) in grid
    assert MultiIndex(4, 1) in grid and MultiIndex(1, 4) in grid
    assert MultiIndex(4, 4) not in grid
    assert len(grid) == 9 + 4 + 4


def test_exact_power_laws_are_recovered():
    fit = fit_rates(_synthetic(), tau=2, axis_range=4)
    rates = fit.rates
    assert rates.b1 == pytest.approx(1.0, abs=1e-9)
    assert rates.b2 == pytest.approx(1.0, abs=1e-9)
    assert rates.w1 == pytest.approx(2.0, abs=1e-9)
    assert rates.w2 == pytest.approx(1.5, abs=1e-9)
    assert rates.s1 == pytest.approx(2.5, abs=1e-9)
    assert rates.s2 == pytest.approx(2.0, abs=1e-9)
    assert rates.QB == pytest.approx(3.0, rel=1e-9)
    assert fit.fits["w1"].residual == pytest.approx(0.0, abs=1e-9)
    assert fit.fits["b2"].levels == (1, 2, 3, 4)


def test_fit_document_has_rates_and_details():
    document = fit_rates(_synthetic()).as_dict()
    assert set(document) == {"rates", "fits"}
    assert set(document["fits"]) == {"b1", "b2", "w1", "w2", "s1", "s2"}
    assert document["rates"]["g1"] == 1.0


def test_non_positive_points_are_excluded():
    stats = _synthetic()
    old = stats[MultiIndex(3, 0)]
    stats[MultiIndex(3, 0)] = SimpleNamespace(mean=0.0, V1=old.V1, V2=old.V2)
    fit = fit_rates(stats)
    assert (3, 0) in fit.fits["b1"].excluded
    assert fit.rates.b1 == pytest.approx(1.0, abs=1e-9)


def test_too_few_points_fail():
    stats = {a: SimpleNamespace(mean=0.0, V1=0.0, V2=0.0) for a in pilot_grid(4)}
    stats[MultiIndex(0, 0)] = SimpleNamespace(mean=1.0, V1=1.0, V2=1.0)
    with pytest.raises(RateFitError):
        fit_rates(stats)


@pytest.mark.slow
def test_kuramoto_pilot_recovers_the_study_rates():
    model = make_kuramoto(0.4, 1.0, 0.0, 0.2 ** 0.5, 0.2)
    hierarchy = Hierarchy(P0=5, N0=4, tau=2)
    law_key = StreamKey(0, role=StreamRole.CONTROL_LAW)
    law = simulate_law(model, draw_bundle(law_key, model, 1000, 100), 1000, 100)
    observable = make_mollified_observable(3.5)
    control = control_from_value(solve_kbe(model, law, GridSpec(), observable), model, law)

    key = StreamKey(0, role=StreamRole.PILOT)
    stats = {alpha: estimate_stats(model, hierarchy, alpha, control, observable, 100, 1000, key)
             for alpha in pilot_grid(4)}
    rates = fit_rates(stats, hierarchy.tau, 4).rates

    for name in ("b1", "b2"):
        assert 0.6 <= float(getattr(rates, name)) <= 1.4, name
    for name in ("w1", "w2", "s1"):
        assert 1.5 <= float(getattr(rates, name)) <= 2.5, name
    assert 1.0 <= float(rates.s2) <= 2.0
