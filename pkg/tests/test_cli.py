import json
import subprocess
import sys

import pytest

from affine_harmonic.cli import (
    EXIT_GROUP,
    EXIT_PRIME,
    EXIT_USAGE,
    EXIT_WORD,
    UsageError,
    main,
    parse_cli,
    run_experiment,
)

SUBCOMMANDS = ("walk", "f-estimate", "residual", "seminorm", "lemma", "hitting", "orbit", "extend", "check")


def test_parse_defaults():
    cfg = parse_cli(["f-estimate", "--group", "bs12", "--point", "a^-5 b", "--r", "64"])
    assert cfg.params["threshold"] == 3 and cfg.params["seed"] == 20240601
    assert cfg.params["samples"] == 100_000 and cfg.workers == 1
    assert "workers" not in cfg.to_dict()


def test_parse_lemma_config():
    cfg = parse_cli(["lemma", "green", "--dist", "unit", "--r", "8", "--y", "2"])
    assert cfg.sub == "green" and cfg.params["r"] == [8.0] and cfg.params["y"] == 2


@pytest.mark.parametrize(
    "argv, code",
    [
        (["walk", "--group", "lamplighter:4", "--r", "8"], EXIT_PRIME),
        (["walk", "--group", "bs13", "--r", "8"], EXIT_GROUP),
        (["walk", "--group", "bs12", "--point", "a^x", "--r", "8"], EXIT_WORD),
        (["walk", "--group", "bs12", "--r", "8", "--bogus"], EXIT_USAGE),
        (["walk", "--group", "bs12", "--r", "8", "--samples", "0"], EXIT_USAGE),
        (["nosuch"], EXIT_USAGE),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert capsys.readouterr().err


def test_usage_error_is_raised_not_exited():
    with pytest.raises(UsageError):
        parse_cli(["walk", "--group", "bs12"])


def test_hitting_exact_report(capsys):
    assert main(["hitting", "exact", "--group", "zline", "--labeling", "parity"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert set(body) == {"config", "passed", "report"}
    assert body["config"]["command"] == "hitting"


def test_reports_byte_identical_across_runs_and_workers():
    argv = ["f-estimate", "--group", "bs12", "--point", "a^-2 b", "--r", "16", "--samples", "4000"]
    a = run_experiment(parse_cli(argv))[1]
    b = run_experiment(parse_cli(argv))[1]
    c = run_experiment(parse_cli(argv + ["--workers", "3"]))[1]
    assert a == b == c


def test_csv_and_out_file(tmp_path):
    out = tmp_path / "r.csv"
    argv = ["lemma", "msep", "--r", "8", "--y", "-2", "--samples", "2000", "--format", "csv", "--out", str(out)]
    assert main(argv) in (0, 2)
    assert out.read_text().count("\n") >= 2


def test_help_lists_subcommands():
    res = subprocess.run([sys.executable, "-m", "affine_harmonic.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in SUBCOMMANDS:
        assert name in res.stdout
