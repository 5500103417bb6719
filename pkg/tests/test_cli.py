"""Command-line surface: exit codes, JSON documents and determinism."""

import json
from importlib.resources import files

import jsonschema
import pytest

from reidemeister.cli import main

SCHEMAS = {
    name: json.loads(files("reidemeister").joinpath(f"schemas/{name}.schema.json").read_text())
    for name in ("report", "query")
}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def _without_timing(doc):
    return {k: v for k, v in doc.items() if k != "timing"}


def test_verify_laurent_classes(capsys):
    code, doc = run_json(capsys, "verify", "prop63", "--q", "5", "--samples", "20")
    assert code == 0
    jsonschema.validate(doc, SCHEMAS["report"])
    counts = [c["computed"] for c in doc["result"]["checks"] if "number of representatives" in c["name"]]
    assert counts == [4, 2, 1]


def test_classes_example(capsys):
    code, doc = run_json(capsys, "classes", "--ring", "poly:fq:2", "--aut", "ring:a=1,b=1", "--window", "1")
    assert code == 0 and doc["result"]["count"] == 2
    jsonschema.validate(doc, SCHEMAS["query"])


def test_twisted_distinct_is_success(capsys):
    code, doc = run_json(capsys, "twisted", "--ring", "laurent:fq:5", "--aut", "sec6:phiB:a=2",
                         "--b", "(1,0;0,1)", "--bprime", "(t,0;0,1)")
    assert code == 0
    assert doc["result"]["verdict"] == "distinct" and doc["result"]["obstruction"]["kind"] == "parity"
    jsonschema.validate(doc, SCHEMAS["query"])


def test_twisted_witness(capsys):
    code, doc = run_json(capsys, "twisted", "--ring", "laurent:fq:5", "--aut", "sec6:phiB:a=2",
                         "--b", "(t,t^2+1;0,1)", "--bprime", "(t,0;0,1)")
    assert code == 0 and doc["result"]["verdict"] == "witness"
    jsonschema.validate(doc, SCHEMAS["query"])


def test_twisted_norm_obstruction(capsys):
    code, doc = run_json(capsys, "twisted", "--ring", "poly:fq:2", "--aut", "ring:a=1,b=1",
                         "--b", "(1,t^3;0,1)", "--bprime", "(1,t;0,1)")
    assert code == 0 and doc["result"]["verdict"] == "distinct"
    jsonschema.validate(doc, SCHEMAS["query"])


def test_oracle(capsys):
    code, doc = run_json(capsys, "oracle", "--group", "Borel:2:1:fq:3", "--aut", "sec6:phiBP:P=t^2+1")
    assert code == 0 and doc["result"]["count"] == 4
    jsonschema.validate(doc, SCHEMAS["query"])


def test_text_output(capsys):
    code, out, _ = run(capsys, "oracle", "--group", "Borel:2:1:fq:3", "--aut", "sec6:phiBP:P=t^2+1")
    assert code == 0 and out.startswith("R = 4")


def test_mismatch_exits_one(capsys):
    code, doc = run_json(capsys, "verify", "levchuk-identities", "--n-max", "3", "--samples", "2")
    assert code == 1 and doc["result"]["all_match"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "nope"],
        ["verify", "emid", "--bogus"],
        ["classes", "--ring", "poly:fq:2"],
        ["classes", "--ring", "poly:fq:6", "--aut", "ring:a=1,b=1", "--window", "1"],
        ["classes", "--ring", "poly:fq:2", "--aut", "ring:a=1,b=1", "--window", "-1"],
        ["verify", "prop61", "--q", "6"],
        ["oracle", "--group", "Borel:2", "--aut", "sec6:phiBP"],
        ["twisted", "--ring", "laurent:fq:5", "--aut", "sec6:phiB", "--b", "(1,0", "--bprime", "(1,0;0,1)"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_identical_argv_identical_checksummed_bytes(capsys):
    argv = ("verify", "emid", "--n", "5", "--seed", "4")
    _, a = run_json(capsys, *argv)
    _, b = run_json(capsys, *argv)
    assert json.dumps(_without_timing(a), sort_keys=True) == json.dumps(_without_timing(b), sort_keys=True)


def test_config_and_flags(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('name = "emid"\nseed = 2\n[params]\nn = 4\n')
    _, doc = run_json(capsys, "verify", "emid", "--config", str(cfg), "--n", "5")
    assert doc["config"]["params"]["n"] == 5 and doc["config"]["seed"] == 2


def test_config_name_must_agree(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('name = "sec53"\n')
    assert run(capsys, "verify", "emid", "--config", str(cfg))[0] == 2


def test_report_writes_out(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    out = tmp_path / "r.json"
    cfg.write_text(f'name = "sec53"\nout = "{out}"\n')
    code, _, _ = run(capsys, "report", "--config", str(cfg))
    assert code == 0
    jsonschema.validate(json.loads(out.read_text()), SCHEMAS["report"])


def test_query_out(tmp_path, capsys):
    out = tmp_path / "q.json"
    run(capsys, "classes", "--ring", "laurent:fq:3", "--aut", "ring:eps=1", "--window", "1", "--out", str(out))
    jsonschema.validate(json.loads(out.read_text()), SCHEMAS["query"])
