"""Command-line behaviour: dispatch, exit codes and deterministic output."""

from __future__ import annotations

import io
import json
import shutil
import subprocess
import sys

import pytest

from lq.cli import run
from lq.corpus import corpus_text

CAT_ENV = "bind z0 = 0.7071067811865476; bind z1 = 0.7071067811865476; md norm;\n"
STRICT_ENV = "bind z0 = 0.7071067811865476; bind z1 = 0.7071067811865476i; md strict;\n"


def lq(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def cat_env(tmp_path):
    path = tmp_path / "cat.env"
    path.write_text(CAT_ENV)
    return str(path)


@pytest.fixture
def strict_env(tmp_path):
    path = tmp_path / "strict.env"
    path.write_text(STRICT_ENV)
    return str(path)


def test_replay_qubit_theorem():
    code, out, err = lq("replay", "qubit_theorem")
    assert code == 0
    data = json.loads(out)
    assert data["verdict"] == "accepted"
    assert "accepted" in err


def test_replay_all_matches_expectations():
    code, out, _ = lq("replay", "all")
    assert code == 0
    assert all(r["matches"] for r in json.loads(out)["reports"])


def test_replay_unknown_name_is_a_usage_error():
    assert lq("replay", "no_such_proof")[0] == 2


def test_check_accepts_and_rejects(tmp_path):
    script = tmp_path / "at.lq"
    script.write_text(corpus_text("at_commutativity.lq"))
    code, out, _ = lq("check", str(script), "--proof", "at_commutativity_with_exchange")
    assert code == 0 and json.loads(out)["verdict"] == "accepted"
    code, out, _ = lq("check", str(script), "--proof", "at_noncommutativity_via_exchange")
    assert code == 1 and json.loads(out)["verdict"] == "rejected"
    code, _, _ = lq("check", str(script), "--proof", "at_noncommutativity_via_exchange",
                    "--ruleset", "L2q+exchange")
    assert code == 0


def test_check_unknown_ruleset_is_a_usage_error(tmp_path):
    script = tmp_path / "foo.lq"
    script.write_text("atom A; proof t in L2q { 1: A |- A by id-axiom(); }")
    assert lq("check", str(script), "--ruleset", "NoSuchLogic")[0] == 2


def test_check_parse_error_and_missing_file(tmp_path):
    script = tmp_path / "bad.lq"
    script.write_text("proof t in L2q { 1: A |- by id-axiom(); }")
    assert lq("check", str(script))[0] == 2
    assert lq("check", str(tmp_path / "missing.lq"))[0] == 2


def test_eval_prints_the_truth_value(cat_env):
    code, out, _ = lq("eval", "p0 |- p0", "--env", cat_env)
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.5, abs=1e-9)


def test_eval_full_list_under_strict_md(strict_env):
    code, out, _ = lq("eval", "p0, p1 |- p0, p1", "--env", strict_env)
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1.0, abs=1e-9)


def test_eval_numeric_failures_exit_three(tmp_path, cat_env):
    assert lq("eval", "p0, p1 |- p0, p1", "--env", cat_env)[0] == 3
    bad = tmp_path / "bad.env"
    bad.write_text("bind z0 = 0.7071067811865476; bind z1 = 0.7071067811865476; md strict;")
    code, out, _ = lq("eval", "p0 |- p0", "--env", str(bad))
    assert code == 3
    assert json.loads(out)["md"]["pass"] is False


def test_dual_kinds():
    code, out, _ = lq("dual", "|-{z0} p0", "--kind", "star")
    assert code == 0 and json.loads(out)["dual"] == "p0 |-{z0*}"
    code, out, _ = lq("dual", "|-{z0} p0", "--kind", "perpprime")
    assert json.loads(out)["dual"] == "p1 |-{z1*}"
    code, out, _ = lq("dual", "A & B |-", "--kind", "perp")
    assert json.loads(out)["dual"] == "|- A^ v B^"


def test_dual_usage_errors():
    assert lq("dual", "A |- A", "--kind", "star")[0] == 2
    assert lq("dual", "A |- A", "--kind", "sideways")[0] == 2


def test_lattice_laws_with_witness(cat_env):
    code, out, err = lq("lattice", "lm2", "--env", cat_env, "--laws")
    assert code == 0
    dist = json.loads(out)["laws"]["distributive"]
    assert dist["pass"] is False and dist["witness"] == ["P0", "O0", "O1"]
    assert "lm2 distributive: fail" in err


def test_lattice_expect_pass(cat_env):
    assert lq("lattice", "lm2", "--env", cat_env, "--expect", "pass")[0] == 1
    assert lq("lattice", "proj2", "--expect", "pass")[0] == 0


def test_lattice_dot_output(tmp_path):
    dot = tmp_path / "proj2.dot"
    assert lq("lattice", "proj2", "--dot", str(dot))[0] == 0
    assert dot.read_text().count("->") == 4


def test_lattice_needs_an_env():
    assert lq("lattice", "lq2")[0] == 2


def test_corpus_list():
    code, out, _ = lq("corpus-list")
    assert code == 0
    names = [e["name"] for e in json.loads(out)]
    assert names == sorted(names) and "qubit_theorem" in names


def test_usage_errors():
    assert lq()[0] == 2
    assert lq("prove", "A |- A")[0] == 2


def test_output_is_deterministic(cat_env):
    for argv in (("replay", "all"), ("lattice", "lm2", "--env", cat_env, "--laws"), ("corpus-list",)):
        assert lq(*argv) == lq(*argv)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lq", "replay", "qubit_theorem"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "accepted"


@pytest.mark.skipif(shutil.which("lq") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["lq", "replay", "all"], capture_output=True, text=True)
    assert proc.returncode == 0
