import json

import pytest
from click.testing import CliRunner

from qlam.cli import SCENARIOS, main
from qlam.corpus import corpus_derivations, theta_xi_maps
from qlam.quant_deduction import derivation_to_json

runner = CliRunner()


def run(*args):
    return runner.invoke(main, args, catch_exceptions=False)


def test_parse_json_output():
    res = run("parse", "--expr", "\\x:o. x")
    assert res.exit_code == 0
    data = json.loads(res.output)
    assert data["sort"] == "o->o"


def test_typecheck_untyped():
    res = run("typecheck", "--expr", "--untyped", "S K K x")
    assert json.loads(res.output)["sort"] == "*"


def test_normalize_human_flag():
    res = run("normalize", "--expr", "(\\x:o. x)", "-H")
    assert res.exit_code == 0
    assert "printed" in res.output


def test_reduce_cl_trace():
    res = run("reduce-cl", "--expr", "--untyped", "S K K x")
    data = json.loads(res.output)
    assert data["result"] == "x" and data["step_count"] == 2


def test_dist_e_metric_matches_worked_pair():
    res = run(
        "dist",
        "--metric",
        "e",
        "--expr",
        "\\x1:o->o. \\x2:o->o. x1 (x2 y:o)",
        "\\x1:o->o. \\x2:o->o. x1 (x2 z:o)",
    )
    assert json.loads(res.output) == {"value": "1/4"}


def test_usage_error_is_exit_2():
    res = runner.invoke(main, ["dist", "--metric", "nonsense", "a", "b"])
    assert res.exit_code == 2


def test_domain_error_is_exit_1():
    res = runner.invoke(main, ["parse", "--expr", "(((("])
    assert res.exit_code == 1


def test_hom_dist_via_files(tmp_path):
    a, b, f, g = theta_xi_maps()
    pa = tmp_path / "a.json"
    pb = tmp_path / "b.json"
    pf = tmp_path / "f.json"
    pg = tmp_path / "g.json"
    pa.write_text(a.dumps())
    pb.write_text(b.dumps())
    pf.write_text(json.dumps(list(f.table)))
    pg.write_text(json.dumps(list(g.table)))
    res = run("hom-dist", "--kind", "theta", str(pa), str(pb), str(pf), str(pg))
    assert json.loads(res.output) == {"value": "2"}


def test_check_proof_valid_and_invalid(tmp_path):
    name, d = corpus_derivations()["U_CL"][0]
    p = tmp_path / "d.json"
    p.write_text(json.dumps(derivation_to_json(d)))
    res = run("check-proof", str(p), "--theory", "U_CL")
    assert res.exit_code == 0 and json.loads(res.output)["ok"]

    res = run("check-proof", str(p), "--theory", "U_CL", "--corpus")
    assert res.exit_code == 0

    bad = derivation_to_json(d)
    bad["rule"] = "Nonsense"
    p.write_text(json.dumps(bad))
    res = run("check-proof", str(p), "--theory", "U_CL")
    assert res.exit_code == 1
    assert not json.loads(res.output)["ok"]


def test_harness_emits_json_lines():
    res = run("harness")
    assert res.exit_code == 0
    lines = [json.loads(l) for l in res.output.strip().splitlines()]
    assert len(lines) >= 30
    assert all(r["status"] != "violated" for r in lines)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_repro_scenarios_match_goldens(name):
    res = run("repro", name)
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["status"] == "PASS"


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_repro_scenarios_deterministic(name):
    assert run("repro", name, "--update").output == run(
        "repro", name, "--update"
    ).output
