"""Experiment registry, reports and config persistence."""

import json
from importlib.resources import files

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reidemeister.spectra import tomllib  # tomli on older interpreters
from reidemeister.spectra import (
    REGISTRY,
    InvalidParams,
    IoFailure,
    SchemaViolation,
    UnknownExperiment,
    checksum,
    config_from_mapping,
    dump_config,
    make_config,
    read_config,
    run_experiment,
    write_report,
)

REPORT_SCHEMA = json.loads(files("reidemeister").joinpath("schemas/report.schema.json").read_text())

FAST = ["sec51", "sec52", "sec53", "emid", "thm11-ingredients"]


def test_registry_is_closed():
    assert set(REGISTRY) == {"prop61", "prop63", "sec51", "sec52", "sec53", "emid", "levchuk-identities",
                             "thm11-ingredients"}


@pytest.mark.parametrize("name", FAST)
def test_fast_experiments_match(name):
    report = run_experiment(make_config(name))
    assert report.all_match, [c for c in report.checks if not c.match]
    jsonschema.validate(report.to_json(), REPORT_SCHEMA)


def test_truncated_counts_small_field():
    report = run_experiment(make_config("prop61", {"q": 2, "D": 1}))
    assert [c.computed for c in report.checks] == [1, 1, 1]


def test_truncated_counts_follow_q():
    report = run_experiment(make_config("prop61", {"q": 3, "D": 1}))
    assert [c.expected for c in report.checks] == [1, 2, 4]
    assert report.all_match


def test_laurent_class_counts():
    report = run_experiment(make_config("prop63", {"q": 5, "samples": 40}))
    assert report.all_match
    counts = [c.computed for c in report.checks if "number of representatives" in c.name]
    assert counts == [4, 2, 1]


def test_affine_family_example():
    report = run_experiment(make_config("sec51", {"p": 2, "i_max": 3}))
    pairs = [c for c in report.checks if c.name == "t -> 1t+1: certified distinct pairs"]
    assert pairs[0].computed == 3


def test_emid_even_and_odd():
    even = run_experiment(make_config("emid", {"n": 4}))
    odd = run_experiment(make_config("emid", {"n": 5}))
    assert even.all_match and odd.all_match
    assert even.checks[0].computed == 1 and odd.checks[0].computed == 2


def test_expected_values_are_not_compared_by_report():
    report = run_experiment(make_config("thm11-ingredients"))
    report.checks[1].computed = 99
    assert not report.all_match
    assert report.to_json()["result"]["all_match"] is False


def test_same_seed_byte_identical(tmp_path):
    a = run_experiment(make_config("emid", {"n": 5}, seed=3))
    b = run_experiment(make_config("emid", {"n": 5}, seed=3))
    pa, pb = write_report(a, tmp_path / "a.json"), write_report(b, tmp_path / "b.json")
    da, db = json.loads(pa.read_text()), json.loads(pb.read_text())
    assert da["checksum"] == db["checksum"] == checksum({"config": da["config"], "result": da["result"]})
    del da["timing"], db["timing"]
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)


def test_config_round_trip(tmp_path):
    cfg = make_config("prop63", {"q": 4, "samples": 10}, seed=7, out="r.json")
    path = tmp_path / "c.toml"
    path.write_text(dump_config(cfg))
    assert read_config(path) == cfg


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([4, 5, 7, 8, 9]), st.integers(1, 500), st.integers(0, 20), st.integers(0, 2**31))
def test_config_round_trip_property(q, samples, support, seed):
    cfg = make_config("prop63", {"q": q, "samples": samples, "support": support}, seed=seed)
    assert config_from_mapping(tomllib.loads(dump_config(cfg))) == cfg


def test_missing_name(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("seed = 1\n")
    with pytest.raises(SchemaViolation):
        read_config(path)


def test_extra_key():
    with pytest.raises(SchemaViolation):
        config_from_mapping({"name": "emid", "colour": "red"})


def test_bad_toml(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("name = \n")
    with pytest.raises(SchemaViolation):
        read_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        read_config(tmp_path / "absent.toml")


def test_unknown_experiment():
    with pytest.raises(UnknownExperiment):
        make_config("prop99")


@pytest.mark.parametrize(
    "name,params",
    [("prop61", {"q": 6}), ("prop61", {"D": 2}), ("prop63", {"q": 3}), ("sec51", {"p": 4}),
     ("emid", {"n": 2}), ("levchuk-identities", {"fields": [4]}), ("emid", {"colour": 1})],
)
def test_invalid_params(name, params):
    with pytest.raises(InvalidParams):
        make_config(name, params)


def test_write_report_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoFailure):
        write_report(run_experiment(make_config("sec53")), blocker / "sub" / "r.json")
