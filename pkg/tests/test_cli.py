import json

import pytest

from shiftconv import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_kloosterman_text(capsys):
    code, out, _ = run(capsys, "kloosterman", "--m", "1", "--n", "1", "--c", "7")
    assert code == 0
    assert out.startswith("# config ")
    assert "S(1,1;7)" in out


def test_optimize_pipeline(capsys):
    code, out, _ = run(capsys, "optimize", "--paper-pipeline")
    assert code == 0
    assert "D = Q^(2/3)" in out and "Q = X^(6/11)" in out and "exponent 21/22" in out


def test_optimize_failing_constraint_exits_1(capsys):
    code, _, _ = run(capsys, "optimize", "--q-lower", "3/5")
    assert code == 1


def test_tau3_second_moment_fails_honestly(capsys):
    # sum tau3(n)^2 / N grows like log(N)^8, far past the fixed constant
    code, out, _ = run(capsys, "coeffs", "--kind", "gl3-tau3-proxy", "--N", "2000", "--ladder", "1000,2000")
    assert code == 1
    assert "[FAIL] second_moment" in out


@pytest.mark.parametrize("argv", [["bogus"], ["kloosterman", "--nope", "1"], ["kloosterman", "--c", "x"]])
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = cli.main(argv)
        raise SystemExit(code)
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["kloosterman", "--c", "0"],
    ["jutila", "--Q", "2"],
    ["voronoi", "--q", "4", "--a", "2", "--decay", "false"],
    ["kloosterman", "--format", "xml"],
])
def test_range_errors_exit_3(capsys, argv):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    # a bad --format is rejected by argparse before any range check
    assert code == (2 if "--format" in argv else 3)


def test_json_roundtrip(capsys, tmp_path):
    code, first, _ = run(capsys, "jutila", "--Q", "120", "--format", "json")
    assert code == 0
    path = tmp_path / "run.jsonl"
    path.write_text(first)
    code, second, _ = run(capsys, "jutila", "--config", str(path), "--format", "json")
    a, b = json_lines(first), json_lines(second)
    assert code == 0
    assert a[1:] == b[1:]
    assert a[0]["config"]["Q"] == b[0]["config"]["Q"] == 120.0


def test_csv_header_roundtrip(capsys, tmp_path):
    code, first, _ = run(capsys, "shifted-conv", "--X", "256", "--h-min", "-3", "--h-max", "3", "--format", "csv")
    assert code == 0
    lines = first.splitlines()
    assert lines[0].startswith("# config ")
    assert lines[1].split(",")[:4] == ["h", "re", "im", "abs"]
    path = tmp_path / "run.csv"
    path.write_text(first)
    _, second, _ = run(capsys, "shifted-conv", "--config", str(path), "--format", "csv")
    assert second == first


def test_config_key_value_and_flag_precedence(capsys, tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("c = 11\nm = 2\n")
    _, out, _ = run(capsys, "kloosterman", "--config", str(path), "--c", "13", "--format", "json")
    row = json_lines(out)[-1]["row"]
    assert (row["c"], row["m"]) == (13, 2)


def test_env_workers(capsys, monkeypatch):
    monkeypatch.setenv("SHIFTCONV_WORKERS", "2")
    _, out, _ = run(capsys, "kloosterman", "--format", "json")
    assert json_lines(out)[0]["config"]["workers"] == 2
    _, out, _ = run(capsys, "kloosterman", "--format", "json", "--workers", "1")
    assert json_lines(out)[0]["config"]["workers"] == 1


def test_workers_do_not_change_values(capsys):
    args = ["verify-identities", "--max-modulus", "60", "--samples", "20", "--format", "json"]
    _, one, _ = run(capsys, *args, "--workers", "1")
    _, two, _ = run(capsys, *args, "--workers", "2")
    assert json_lines(one)[1:] == json_lines(two)[1:]


def test_long_tables_are_summarized(capsys):
    _, out, _ = run(capsys, "shifted-conv", "--X", "128")
    assert "rows; use --format csv or json" in out


@pytest.mark.parametrize("argv", [
    ["baby-sums", "--kind", "T", "--c", "15"],
    ["baby-sums", "--kind", "S", "--c", "15", "--d", "3"],
    ["ft-modp", "--p", "31", "--functions", "3"],
    ["coeffs", "--kind", "gl2-holomorphic-delta", "--N", "2000", "--ladder", "1000,2000"],
    ["dstar", "--X", "400", "--h", "2"],
    ["parseval", "--X", "512"],
    ["wilton", "--X", "1000"],
    ["voronoi", "--q", "3", "--Y", "500", "--decay", "false"],
    ["correlation", "--p-min", "51", "--p-max", "120", "--tuples", "4"],
    ["exponent-pair", "--q", "1001", "--length", "100"],
])
def test_subcommands_run(capsys, argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    assert "config" in json_lines(out)[0]


def test_suite_quick(capsys):
    code, out, _ = run(capsys, "suite", "--quick")
    assert code == 0
    assert out.count("[PASS]") == 10
