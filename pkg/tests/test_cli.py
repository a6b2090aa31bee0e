import json
import subprocess
import sys
from pathlib import Path

import pytest

from lisrw.cli import main, parse_sizes
from lisrw.multiscale import certificate_bound

GOLDEN = Path(__file__).parent / "golden"
COMMANDS = ["lis", "certify", "dyadic", "chain", "scaling", "probe"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def seqfile(tmp_path):
    def make(text, name="seq.txt"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def test_lis_file_examples(capsys, seqfile):
    code, out, _ = run(capsys, "lis", seqfile("5 5 5 5"))
    assert code == 0 and json.loads(out)["lis"] == 4
    code, out, _ = run(capsys, "lis", seqfile("3 2 1"))
    assert json.loads(out)["lis"] == 1


def test_lis_strict_and_witness(capsys, seqfile):
    path = seqfile("1 3 3 2 4 4 5")
    _, out, _ = run(capsys, "lis", path, "--witness")
    weak = json.loads(out)
    assert weak["lis"] == 6 and len(weak["witness"]) == 6
    _, out, _ = run(capsys, "lis", path, "--strict", "--witness")
    strict = json.loads(out)
    assert strict["lis"] == 4
    vals = [1, 3, 3, 2, 4, 4, 5]
    picked = [vals[i] for i in strict["witness"]]
    assert all(a < b for a, b in zip(picked, picked[1:]))


@pytest.mark.parametrize("text", ["1 2 2 0 5 3 3 3 1 4 2 6", "0 -1 -2 -1 0 1 0 1 2 1 0 -1", "7"])
@pytest.mark.parametrize("strict", [False, True])
def test_lis_oracle(capsys, seqfile, text, strict):
    argv = ["lis", seqfile(text), "--oracle"] + (["--strict"] if strict else [])
    code, out, _ = run(capsys, *argv)
    res = json.loads(out)
    assert code == 0 and res["lis"] == res["oracle"]


def test_lis_two_dimensional_file(capsys, seqfile):
    code, out, _ = run(capsys, "lis", seqfile("0 0\n1 -1\n1 1\n2 2\n"), "--d", "2", "--oracle")
    res = json.loads(out)
    assert code == 0 and res["lis"] == res["oracle"] == 3


def test_malformed_input_reports_line(capsys, seqfile):
    code, _, err = run(capsys, "lis", seqfile("1 2\n3 oops\n"))
    assert code == 3 and "line 2" in err
    code, _, err = run(capsys, "lis", seqfile("1 2\n3\n4 5\n"), "--d", "2")
    assert code == 3 and "line 2" in err
    code, _, err = run(capsys, "lis", "/nonexistent/file")
    assert code == 3


def test_csv_output(capsys, seqfile):
    code, out, _ = run(capsys, "lis", seqfile("1 2 0 3"), "--format", "csv", "--witness")
    lines = out.splitlines()
    assert "lis" in lines and lines[lines.index("lis") + 1] == "3"
    assert "# format=csv" in lines


def test_bad_flags_exit_3(capsys):
    for argv in (["lis", "--bogus"], ["scaling", "--seed", "1", "--sizes", "2^5..2^x"],
                 ["scaling", "--seed", "1", "--trials", "0", "--sizes", "8,16"],
                 ["chain", "--seed", "1", "--law", "cauchy"], ["dyadic", "--seed", "1", "--format", "svg"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 3, argv
    capsys.readouterr()


def test_seed_is_required(capsys):
    for argv in (["dyadic", "--n", "3"], ["lis", "--n", "20"], ["scaling", "--sizes", "8,16,32"],
                 ["certify", "--m", "1", "--k", "1", "--gamma", "2"], ["probe", "max"]):
        code, _, err = run(capsys, *argv)
        assert code == 3 and "--seed" in err


def test_invalid_spec_values_exit_3(capsys):
    code, _, _ = run(capsys, "scaling", "--seed", "1", "--sizes", "16,8,32")
    assert code == 3
    code, _, _ = run(capsys, "certify", "--m", "1", "--k", "1", "--gamma", "1.5", "--seed", "1")
    assert code == 3


def test_sizes_syntax():
    assert parse_sizes("2^3..2^6") == [8, 16, 32, 64]
    assert parse_sizes("10,2^4,100") == [10, 16, 100]


def test_certify_bound_field(capsys):
    code, out, _ = run(capsys, "certify", "--m", "1", "--k", "1", "--gamma", "2", "--seed", "4")
    rep = json.loads(out)
    assert rep["report"]["bound"] == "64"
    assert rep["config"]["gamma"] == 2.0
    assert code == (0 if rep["applicable"] else 2)


def test_certify_reports_failed_assumption(capsys):
    # a generous gamma leaves only the range condition, which a long excursion breaks
    codes = {}
    for seed in range(30):
        code, out, _ = run(capsys, "certify", "--m", "1", "--k", "1", "--gamma", "64", "--seed", str(seed))
        rep = json.loads(out)
        codes[seed] = code
        if not rep["applicable"]:
            assert code == 2 and rep["failed_assumptions"] == ["max"]
    assert 2 in codes.values() and 0 in codes.values()


def test_certify_soundness_sweep(capsys):
    for seed in range(100):
        code, out, _ = run(capsys, "certify", "--m", "2", "--k", "1", "--gamma", "3", "--seed", str(seed))
        rep = json.loads(out)
        assert rep["sound"]
        assert code == (0 if rep["applicable"] else 2)
    assert certificate_bound(2, 1, 3) == 24**3


def test_dyadic_mean(capsys):
    code, out, _ = run(capsys, "dyadic", "--n", "4", "--trials", "3000", "--seed", "7")
    res = json.loads(out)
    assert code == 0
    assert abs(res["mean"] - 32) < 4 * (88 / res["completed"]) ** 0.5
    assert res["config"]["seed"] == 7 and res["expected_mean"] == 32


def test_chain_exit_fit(capsys):
    code, out, _ = run(capsys, "chain", "--trials", "20000", "--cap", "10000", "--seed", "3")
    res = json.loads(out)
    assert code == 0 and res["config"]["d"] == 2
    assert abs(res["fit"]["slope"] + 1 / 3) < 0.1
    code, out, _ = run(capsys, "chain", "--n", "1000", "--trials", "200", "--seed", "3", "--epsilon", "0.5", "1")
    res = json.loads(out)
    assert res["mean"] > 1 and len(res["tail"]["estimates"]) == 2


def test_scaling_formats_and_assertion(capsys, tmp_path):
    base = ["scaling", "--sizes", "2^6..2^9", "--trials", "20", "--seed", "5"]
    code, out, _ = run(capsys, *base, "--slope-range", "0.3", "0.9")
    rep = json.loads(out)
    assert code == 0 and rep["assertions"]["passed"]
    assert rep["config"]["sizes"] == [64, 128, 256, 512]
    code, _, _ = run(capsys, *base, "--slope-range", "0.9", "1.0")
    assert code == 2
    code, out, _ = run(capsys, *base, "--format", "csv")
    assert "statistic,law,n,trials,mean,var,q50,q90,q99,stderr" in out
    path = tmp_path / "plot.svg"
    code, out, _ = run(capsys, *base, "--format", "svg", "--out", str(path))
    assert code == 0 and out == "" and path.read_text().count('class="point"') == 4


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "dyadic", "--n", "2", "--trials", "5", "--seed", "1",
                       "--out", str(tmp_path / "no" / "x.json"))
    assert code == 3 and "cannot write" in err


def test_rerun_and_thread_equality(capsys):
    argv = ["scaling", "--stat", "greedy-chain", "--d", "2", "--sizes", "100,200,400", "--trials", "30",
            "--seed", "11"]
    outs = [run(capsys, *argv, "--threads", t)[1] for t in ("1", "1", "3")]
    strip = [json.loads(o) for o in outs]
    for s in strip:
        s["config"].pop("threads")
    assert outs[0] == outs[1]
    assert strip[0] == strip[2]


def test_probes(capsys):
    code, out, _ = run(capsys, "probe", "max", "--n", "2500", "--trials", "5000", "--seed", "2")
    res = json.loads(out)
    assert code == 0 and res["maximal_inequality_holds"]
    code, out, _ = run(capsys, "probe", "petrov", "--n", "100", "--trials", "2000", "--seed", "2", "--lam", "1")
    assert json.loads(out)["rows"][0]["sup"] > 0
    code, out, _ = run(capsys, "probe", "submult", "--m", "2", "--N", "8", "--trials", "500", "--seed", "2")
    assert code == (0 if json.loads(out)["holds"] else 2)
    code, _, _ = run(capsys, "probe", "submult", "--trials", "500", "--seed", "2")
    assert code == 3


@pytest.mark.parametrize("command", [""] + COMMANDS)
def test_help_golden(command, monkeypatch):
    argv = [sys.executable, "-m", "lisrw"] + ([command] if command else []) + ["--help"]
    env = {"COLUMNS": "100", "PATH": "/usr/bin:/bin"}
    out = subprocess.run(argv, capture_output=True, text=True, env=env, check=True).stdout
    assert out == (GOLDEN / f"help_{command or 'main'}.txt").read_text()


@pytest.mark.parametrize("command", COMMANDS)
def test_help_lists_defaults(command, capsys):
    with pytest.raises(SystemExit) as exc:
        main([command, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "--out" in out and "--format" in out and "(default:" in out
