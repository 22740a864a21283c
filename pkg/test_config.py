import json
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from app import EXIT_OK, main
from components.config import (RunConfig, apply_overrides, build_adaptive_settings, build_hierarchy, build_model,
                               build_observable, build_pilot_settings, config_from_dict, config_hash,
                               config_to_dict, load_config)
from components.outputs import read_json, read_stats_csv, write_json, write_stats_csv
from components.provenance import ARTIFACT, provenance, provenance_line
from config_validation import RunConfigValidator, validate_run_config
from content.csv_columns import STATS_COLUMNS
from modules.errors import ConfigurationError
from modules.mixed_difference import Hierarchy, MultiIndex, stats_from_values


def test_defaults_are_the_kuramoto_study():
    config = load_config()
    assert config == RunConfig()
    assert config.model.sigma == 0.4
    assert config.model.K == 3.5
    assert config.hierarchy == replace(config.hierarchy, P0=5, N0=4, tau=2)
    assert config.adaptive.growth == pytest.approx(math.exp(0.25))
    assert config.pilot.variance_samples == (25, 100)


def test_partial_sections_keep_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": {"K": 2.0}, "pilot": {"rate_samples": [10, 20]}, "master_seed": 9}))
    config = load_config(path)
    assert config.model.K == 2.0
    assert config.model.sigma == 0.4
    assert config.pilot.rate_samples == (10, 20)
    assert config.master_seed == 9


@pytest.mark.parametrize("document", [
    {"model": {"kappa": 1.0}},
    {"extras": {}},
    {"adaptive": []},
])
def test_unknown_or_malformed_keys_rejected(document):
    with pytest.raises(ConfigurationError):
        config_from_dict(document)


def test_unreadable_files_are_configuration_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(bad)


def test_overrides_replace_only_given_flags():
    config = apply_overrides(RunConfig(), seed=7, tol=0.1, K=None, mode="multilevel")
    assert config.master_seed == 7
    assert config.adaptive.tol_r == 0.1
    assert config.adaptive.mode == "multilevel"
    assert config.model.K == 3.5
    with pytest.raises(ConfigurationError):
        apply_overrides(RunConfig(), bogus=1)


def test_config_hash_is_canonical():
    a = RunConfig()
    b = config_from_dict(json.loads(json.dumps(config_to_dict(a))))
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64
    assert config_hash(apply_overrides(a, seed=1)) != config_hash(a)


def test_builders():
    config = RunConfig()
    model = build_model(config)
    assert model.name == "kuramoto" and model.has_params
    assert build_hierarchy(config) == Hierarchy(5, 4, 2)
    assert build_pilot_settings(config).mean_samples == (1000, 100)
    assert build_adaptive_settings(config).max_iterations == 60
    one = build_observable(apply_overrides(config, observable="constant"))
    np.testing.assert_array_equal(one(np.zeros((2, 1))), [1.0, 1.0])


def test_default_config_validates():
    ok, report = validate_run_config(RunConfig(), "defaults")
    assert ok
    assert report["errors"] == []


def test_validator_collects_every_error():
    config = RunConfig()
    config = replace(config, adaptive=replace(config.adaptive, theta=1.5, tol_r=0.0, mode="fast"),
                     hierarchy=replace(config.hierarchy, tau=1))
    is_valid, errors, warnings = RunConfigValidator("broken").validate_all(config)
    assert not is_valid
    assert len(errors) == 4
    assert any("theta" in e for e in errors)
    assert any("tau" in e for e in errors)


def test_validator_warnings_do_not_invalidate():
    config = RunConfig()
    config = replace(config, model=replace(config.model, K=-1.0),
                     control_grid=replace(config.control_grid, n_cells=20))
    ok, report = validate_run_config(config)
    assert ok
    assert len(report["warnings"]) == 2


def test_short_fit_range_is_an_error():
    config = RunConfig()
    config = replace(config, pilot=replace(config.pilot, axis_range=2))
    ok, report = validate_run_config(config)
    assert not ok
    assert "rate fit" in report["errors"][0]


def test_provenance_stamp():
    stamp = provenance(RunConfig(), "plan", {"P": 4})
    assert stamp["artifact"] == ARTIFACT
    assert stamp["master_seed"] == 0
    assert stamp["config_hash"] == config_hash(RunConfig())
    assert stamp["P"] == 4
    assert provenance_line({"a": 1, "b": "x"}) == "# a=1 b=x"


def test_stats_csv_layout(tmp_path):
    hierarchy = Hierarchy()
    stats = {
        MultiIndex(0, 0): stats_from_values((0, 0), np.array([[1.0, 2.0], [3.0, 5.0]]), hierarchy, wall_time=0.5),
        MultiIndex(1, 0): stats_from_values((1, 0), np.array([[0.1]]), hierarchy),
    }
    path = write_stats_csv(stats, tmp_path / "stats.csv", {"artifact": ARTIFACT})
    assert path.read_text().splitlines()[0] == f"# artifact={ARTIFACT}"
    df = read_stats_csv(path)
    assert list(df.columns) == list(STATS_COLUMNS)
    assert df["wall_time"].isna().all()
    assert df["seed"].isna().all()
    assert df.loc[1, "flags"] == "single_inner|single_outer"
    assert df.loc[0, "V2"] == pytest.approx(np.mean([0.5, 2.0]))

    timed = read_stats_csv(write_stats_csv(stats, tmp_path / "timed.csv", {"master_seed": 11}, record_timing=True))
    assert timed.loc[0, "wall_time"] == 0.5
    assert list(timed["seed"]) == [11, 11]


def test_json_documents_are_plain_and_sorted(tmp_path):
    path = write_json({"b": Fraction(1, 4), "a": np.int64(3), "c": math.inf, "d": np.array([1.5])},
                      tmp_path / "doc.json", {"artifact": ARTIFACT})
    doc = read_json(path)
    assert doc == {"a": 3, "b": 0.25, "c": None, "d": [1.5], "provenance": {"artifact": ARTIFACT}}
    assert list(json.loads(path.read_text())) == ["a", "b", "c", "d", "provenance"]


def test_deterministic_model_passes_validation(tmp_path):
    document = {"model": {"sigma": 0.0, "init_variance": 0.0, "xi_halfwidth": 0.0, "observable": "constant"},
                "adaptive": {"single_P": 6, "single_N": 4, "single_M1": 2, "single_M2": 2}}
    ok, report = validate_run_config(config_from_dict(document))
    assert ok, report["errors"]

    path = tmp_path / "still.json"
    path.write_text(json.dumps(document))
    out = tmp_path / "still"
    assert main(["estimate", "--config", str(path), "--mode", "single", "--out", str(out), "--quiet"]) == EXIT_OK
    assert read_json(out / "report.json")["estimate"] == 1.0


def test_negative_sigma_is_rejected():
    ok, report = validate_run_config(config_from_dict({"model": {"sigma": -0.1}}))
    assert not ok
    assert "sigma" in report["errors"][0]
