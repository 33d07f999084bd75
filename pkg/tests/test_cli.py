import csv
import io
import json
import subprocess
import sys

import pytest

from twtl_relax.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_TIME, EXIT_VERIFY, main
from twtl_relax.env import build_ts

RULES = "{D} -> {C} : 1\n"
SPEC = "[H^0 C . H^1 D]^[0,5]"


@pytest.fixture
def files(tmp_path):
    ts = build_ts([("a", ["C"]), ("b", ["D"]), ("c", [])],
                  [("a", "b"), ("b", "c"), ("c", "a", 2)], {"c": 2})
    env = tmp_path / "env.json"
    env.write_text(ts.serialize())
    prefs = tmp_path / "rules.txt"
    prefs.write_text(RULES)
    return tmp_path, str(env), str(prefs)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_writes_json_and_check_accepts_it(files, capsys):
    tmp, env, prefs = files
    out_path = tmp / "plan.json"
    code, _, _ = run(["plan", "--env", env, "--spec", SPEC, "--prefs", prefs, "--out", str(out_path)], capsys)
    assert code == EXIT_OK
    data = json.loads(out_path.read_text())
    assert set(data) >= {"trajectories", "output_word", "rewrites", "costs"}
    code, out, _ = run(["check", "--env", env, "--spec", SPEC, "--prefs", prefs, "--plan", str(out_path)], capsys)
    assert code == EXIT_OK
    assert "FAIL" not in out
    assert out.strip().endswith("checks passed")


def test_check_reports_tampered_plan(files, capsys):
    tmp, env, prefs = files
    out_path = tmp / "plan.json"
    run(["plan", "--env", env, "--spec", SPEC, "--prefs", prefs, "--out", str(out_path)], capsys)
    data = json.loads(out_path.read_text())
    data["costs"]["total"] = "0"
    out_path.write_text(json.dumps(data))
    code, out, _ = run(["check", "--env", env, "--spec", SPEC, "--prefs", prefs, "--plan", str(out_path)], capsys)
    assert code == EXIT_VERIFY
    assert "FAIL total cost mismatch" in out


def test_plan_stats_and_dot(files, capsys):
    tmp, env, prefs = files
    prefix = tmp / "viz"
    code, out, err = run(["plan", "--env", env, "--spec", SPEC, "--prefs", prefs, "--stats",
                          "--dot", str(prefix)], capsys)
    assert code == EXIT_OK
    stats = json.loads(err)
    assert stats["model"]["variables"] > 0
    assert (tmp / "viz.dfa.dot").read_text().startswith("digraph")
    assert (tmp / "viz.product.dot").read_text().startswith("digraph")
    json.loads(out)


def test_spec_from_file(files, capsys):
    tmp, env, prefs = files
    spec = tmp / "mission.twtl"
    spec.write_text(SPEC + "\n")
    code, _, _ = run(["plan", "--env", env, "--spec", str(spec), "--prefs", prefs], capsys)
    assert code == EXIT_OK


def test_infeasible_exit_code(files, capsys):
    _, env, _ = files
    code, _, err = run(["plan", "--env", env, "--spec", "[H^0 C . H^0 D . H^0 C]^[0,2]"], capsys)
    assert code == EXIT_INFEASIBLE
    assert "infeasible" in err


@pytest.mark.parametrize("argv", [
    ["plan", "--env", "missing.json", "--spec", "H^0 C"],
    ["plan", "--spec", "H^0 C"],
    ["plan", "--env", "{env}", "--spec", "[H^0 C"],
    ["plan", "--env", "{env}", "--spec", "H^0 C", "--lambda", "-1"],
    ["plan", "--env", "{env}", "--spec", "H^0 C", "--lambda", "abc"],
    ["plan", "--env", "{env}", "--spec", "H^0 C", "--prefs", "{bad_rules}"],
    ["bench", "--axis", "nope", "--range", "1:2"],
    ["bench", "--axis", "num-prefs", "--range", "0:2"],
    ["frobnicate"],
])
def test_input_errors_exit_3(files, capsys, argv):
    tmp, env, _ = files
    bad = tmp / "bad_rules.txt"
    bad.write_text("{C} -> : 1\n")
    argv = [a.format(env=env, bad_rules=bad) for a in argv]
    assert exit_code(argv) == EXIT_INPUT


def exit_code(argv):
    """Return code of main, whether returned or raised by argparse."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def test_malformed_environment_exit_3(files, capsys):
    tmp, _, _ = files
    env = tmp / "broken.json"
    env.write_text('{"nodes": [')
    code, _, err = run(["plan", "--env", str(env), "--spec", "H^0 C"], capsys)
    assert code == EXIT_INPUT
    assert "error:" in err


def test_time_limit_exit_code(files, capsys):
    _, env, prefs = files
    code, _, err = run(["plan", "--env", env, "--spec", SPEC, "--prefs", prefs, "--time-limit", "0"], capsys)
    assert code == EXIT_TIME
    assert "time limit" in err


def test_export_and_import_round_trip(files, capsys):
    pytest.importorskip("highspy")
    from twtl_relax.solver import solve_lp_file
    tmp, env, prefs = files
    lp = tmp / "model.lp"
    common = ["--env", env, "--spec", SPEC, "--prefs", prefs, "--lambda", "1/2"]
    assert run(["export-lp", *common, "--out", str(lp)], capsys)[0] == EXIT_OK
    status, text = solve_lp_file(str(lp))
    assert status == "Optimal"
    sol = tmp / "model.sol"
    sol.write_text(text)
    code, out, _ = run(["import-solution", *common, "--solution", str(sol)], capsys)
    assert code == EXIT_OK
    imported = json.loads(out)
    code, out, _ = run(["plan", *common], capsys)
    assert imported["costs"]["total"] == json.loads(out)["costs"]["total"]


def test_import_rejects_malformed_solution(files, capsys):
    tmp, env, prefs = files
    sol = tmp / "bad.sol"
    sol.write_text("not_a_variable 1\n")
    code, _, err = run(["import-solution", "--env", env, "--spec", SPEC, "--prefs", prefs,
                        "--solution", str(sol)], capsys)
    assert code == EXIT_INPUT
    assert "unknown variable" in err


def test_translate_single_hold(capsys):
    code, out, _ = run(["translate", "--spec", "H^0 A"], capsys)
    assert code == EXIT_OK
    stats = json.loads(out)
    assert stats["states"] == 2 and stats["accepting"] == 1


def test_translate_dot_to_stdout(capsys):
    code, out, _ = run(["translate", "--spec", "[H^1 A]^[0,3]", "--dot", "-"], capsys)
    assert code == EXIT_OK
    assert out.startswith("digraph")


def test_product_without_map(files, capsys):
    _, _, prefs = files
    code, out, _ = run(["product", "--spec", SPEC, "--prefs", prefs], capsys)
    assert code == EXIT_OK
    stats = json.loads(out)
    assert stats["states"] >= stats["dfa_states"]


def test_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code, _, _ = run(["bench", "--axis", "num-prefs", "--range", "1,2", "--nodes", "5",
                      "--window", "4", "--out", str(out)], capsys)
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["value"] for r in rows] == ["1", "2"]
    assert all(r["status"] == "Optimal" for r in rows)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "twtl_relax", "translate", "--spec", "H^0 A"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["states"] == 2
