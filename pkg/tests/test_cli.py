import csv

import pytest

from hyperlam import cli, experiments

SMALL = ["--max-paths", "2000", "--max-grid", "64"]


def read_summary(path):
    with open(path / "summary.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_shift_decay_summary(tmp_path, capsys):
    code = cli.main(["theorem2-decay", "--seed", "7", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    rows = read_summary(tmp_path)
    assert [r["criterion"] for r in rows] == ["I_40<I_5/2"]
    assert rows[0]["pass"] == "pass"
    assert "pass  I_40<I_5/2" in capsys.readouterr().out


def test_unknown_flag_is_a_config_error(tmp_path, capsys):
    assert cli.main(["theorem2-decay", "--bogus", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("hyperlam: error:")
    assert cli.main(["no-such-command"]) == cli.EXIT_CONFIG
    assert cli.main(["theorem2-decay", "--threads", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["theorem2-decay", "--tol", "nonsense=1"]) == cli.EXIT_CONFIG


def test_failing_criterion_exit_status(tmp_path):
    code = cli.main(["theorem2-decay", "--tol", "decay_ratio=1e-6", "--out", str(tmp_path)])
    assert code == cli.EXIT_FAIL
    assert read_summary(tmp_path)[0]["pass"] == "fail"


def test_numerical_error_exit_status(tmp_path, monkeypatch, capsys):
    from hyperlam.errors import QuadratureError

    def broken(ctx):
        raise QuadratureError("did not settle")

    monkeypatch.setitem(experiments.RECIPES, "theorem2-decay", broken)
    assert cli.main(["theorem2-decay", "--out", str(tmp_path)]) == cli.EXIT_NUMERICAL
    assert "numerical error" in capsys.readouterr().err


def test_single_order_has_no_trend_row(tmp_path):
    code = cli.main(["kb-invariance", "--n", "1", "--max-paths", "200", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    assert read_summary(tmp_path) == []
    gaps = (tmp_path / "kb_gaps.csv").read_text().splitlines()
    assert gaps[0] == "flow,s,f_id,n,gap" and len(gaps) > 1


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nseed = 11\nthreads = 2\nmax-paths = 500\ntol.decay_ratio = 0.4\n")
    args = cli.build_parser().parse_args(["theorem2-decay", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path)])
    ctx = cli.make_context(args)
    assert ctx.seed == 3 and ctx.threads == 2 and ctx.caps.max_paths == 500
    assert ctx.tol["decay_ratio"] == 0.4
    args = cli.build_parser().parse_args(["theorem2-decay", "--config", str(cfg), "--tol", "decay_ratio=0.3"])
    assert cli.make_context(args).tol["decay_ratio"] == 0.3


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert cli.main(["theorem2-decay", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "unknown key" in capsys.readouterr().err
    cfg.write_text("seed = -4\n")
    assert cli.main(["theorem2-decay", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["theorem2-decay", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERLAM_OUT", str(tmp_path / "env"))
    args = cli.build_parser().parse_args(["bound-terms"])
    assert cli.make_context(args).out == tmp_path / "env"
    args = cli.build_parser().parse_args(["bound-terms", "--out", str(tmp_path / "flag")])
    assert cli.make_context(args).out == tmp_path / "flag"
    monkeypatch.delenv("HYPERLAM_OUT")
    monkeypatch.chdir(tmp_path)
    assert str(cli.make_context(cli.build_parser().parse_args(["bound-terms"])).out) == "hyperlam-out"


@pytest.mark.parametrize("command", ["girsanov-bounds", "bound-terms", "oracle-agreement", "herglotz-recover"])
def test_outputs_are_identical_across_reruns_and_threads(tmp_path, command):
    runs = []
    for i, threads in enumerate(["1", "1", "3"]):
        out = tmp_path / f"run{i}"
        cli.main([command, "--seed", "5", "--threads", threads, "--out", str(out)] + SMALL)
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert runs[0] == runs[1] == runs[2]
    assert "summary.csv" in runs[0] and len(runs[0]) > 1


def test_kb_outputs_are_identical_across_threads(tmp_path):
    runs = []
    for threads in ("1", "2"):
        out = tmp_path / threads
        cli.main(["kb-invariance", "--n", "2,4", "--max-paths", "300", "--threads", threads, "--out", str(out)])
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert runs[0] == runs[1]


def test_seed_changes_monte_carlo_output(tmp_path):
    for seed in ("1", "2"):
        cli.main(["girsanov-bounds", "--seed", seed, "--out", str(tmp_path / seed)] + SMALL)
    files = sorted(p.name for p in (tmp_path / "1").iterdir() if p.name != "summary.csv")
    assert any((tmp_path / "1" / f).read_bytes() != (tmp_path / "2" / f).read_bytes() for f in files)
