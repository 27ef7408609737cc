import json
from importlib.resources import files

import pytest
from click.testing import CliRunner

from pqkilian.cli import kilian
from pqkilian.errors import InvalidParameter
from pqkilian.experiments import REGISTRY, make_config, recheck, run, write
from pqkilian.experiments.cli import main

DATA = files("pqkilian") / "data"
P6 = str(DATA / "planted6_coloring.json")
K4 = str(DATA / "k4_coloring.json")


@pytest.fixture
def cli():
    return CliRunner()


def test_prove_then_verify(cli, tmp_path):
    tau = tmp_path / "t.bin"
    r = cli.invoke(kilian, ["prove", "--instance", P6, "--seed", "4", "--out", str(tau)])
    assert r.exit_code == 0 and "accept=1" in r.output
    r = cli.invoke(kilian, ["verify", "--instance", P6, "--transcript", str(tau)])
    assert r.exit_code == 0 and "accept=1" in r.output
    raw = bytearray(tau.read_bytes())
    raw[-1] ^= 1
    tau.write_bytes(bytes(raw))
    r = cli.invoke(kilian, ["verify", "--instance", P6, "--transcript", str(tau)])
    assert r.exit_code == 1


def test_prove_json_and_xor_family(cli):
    r = cli.invoke(kilian, ["prove", "--instance", P6, "--hash", "xor-rotate", "--json"])
    assert r.exit_code == 0
    body = r.stdout[: r.stdout.rindex("}") + 1]
    doc = json.loads(body)
    assert doc["ck"]["length"] == 6 and doc["size"] > 0


def test_prove_without_witness_fails(cli):
    r = cli.invoke(kilian, ["prove", "--instance", K4])
    assert r.exit_code != 0


def test_extract_reports_json(cli):
    r = cli.invoke(kilian, ["extract", "--instance", P6, "--adversary", "honest",
                            "--epsilon", "0.5", "--seeds", "0..1"])
    assert r.exit_code == 0
    doc = json.loads(r.output)
    assert doc["runs"] == 2 and doc["success_rate"] == 1 and doc["false_witnesses"] == 0


def test_pqkilian_list_and_defaults(cli):
    r = cli.invoke(main, ["list"])
    assert r.exit_code == 0
    for name in REGISTRY:
        assert name in r.output
    r = cli.invoke(main, ["defaults", "jordan"])
    assert json.loads(r.output)["params"] == REGISTRY["jordan"].defaults
    assert cli.invoke(main, ["defaults", "nope"]).exit_code != 0


def test_pqkilian_run_small(cli, tmp_path):
    r = cli.invoke(main, ["run", "jordan", "--seeds", "0..4", "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    assert "PASS" in r.output
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] and summary["config"]["seeds"] == "0..4"
    assert len((tmp_path / "raw.jsonl").read_text().splitlines()) == 5


@pytest.mark.parametrize("cfg", [
    {"params": {"bogus": 1}},
    {"params": {"max_dim": "big"}},
    {"extra": 1},
    {"scenario": "fork"},
    {"seeds": "5..1"},
])
def test_config_validation(cli, tmp_path, cfg):
    with pytest.raises(InvalidParameter):
        make_config("jordan", cfg)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    r = cli.invoke(main, ["run", "jordan", "--config", str(p)])
    assert r.exit_code == 2


def test_runner_is_deterministic_and_rechecks(tmp_path):
    cfg = make_config("repair", {"params": {"qubit_trials": 5}}, "0..3")
    a, b = run(cfg), run(cfg)
    assert a["raw"] == b["raw"]
    assert recheck(a) == a["checks"]
    write(a, tmp_path)
    assert json.loads((tmp_path / "summary.json").read_text())["checks"] == a["checks"]
