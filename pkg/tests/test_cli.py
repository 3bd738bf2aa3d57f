import json

import pytest

from wte_reach.cli import build_parser, build_run_config, main
from wte_reach.errors import ConfigError
from wte_reach.io import load_field


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = {"scenario": 1, "solve": {"horizon": 3.0, "snapshot_stride": 50}}
    (out / "cfg.json").write_text(json.dumps(cfg))
    assert main(["solve", "--config", str(out / "cfg.json"), "--grid", "9", "--out", str(out),
                 "--quiet", "--threads", "1"]) == 0
    return out


def test_solve_outputs(run_dir, monkeypatch):
    f = load_field(run_dir / "value.hjvf")
    assert f.spec.counts == (9, 9, 9) and f.time_label == 0.0
    summary = (run_dir / "summary.txt").read_text()
    for key in ("dt:", "steps:", "runtime_s:", "brs_volume:"):
        assert key in summary
    meta = json.loads((run_dir / "run.json").read_text())
    assert meta["params"]["eta_min"] == 25.0 and meta["solve"]["horizon"] == 3.0
    assert len(list((run_dir / "snapshots").glob("*.hjvf"))) >= 2


def test_query_commands(run_dir, tmp_path, capsys):
    field = str(run_dir / "value.hjvf")
    assert main(["volume", "--field", field]) == 0
    assert "brs_volume" in capsys.readouterr().out
    assert main(["slice", "--field", field, "--axis", "E", "--level", "50", "--out", str(tmp_path / "s.csv")]) == 0
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 82
    assert main(["compare", "--a", field, "--b", field, "--out", str(tmp_path / "c.csv")]) == 0
    assert "dominance(a<=b): 1" in capsys.readouterr().out
    assert main(["simulate", "--run", str(run_dir), "--z0", "40", "10", "0", "--out", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "t.csv").exists()
    assert main(["entry-times", "--run", str(run_dir), "--out", str(tmp_path / "e.csv")]) == 0
    rows = (tmp_path / "e.csv").read_text().splitlines()
    assert rows[0].startswith("x0_tons") and len(rows) == 4


def test_simulate_profiles(run_dir, tmp_path):
    for prof in ("constant:22", "stepwise:27.5,25,22.5", "periodic", "adversarial"):
        assert main(["simulate", "--run", str(run_dir), "--z0", "5", "5", "5", "--profile", prof,
                     "--out", str(tmp_path / "t.csv")]) == 0
    assert main(["simulate", "--run", str(run_dir), "--z0", "5", "5", "5", "--profile", "wiggly",
                 "--out", str(tmp_path / "t.csv")]) == 2


def test_deterministic_outputs(tmp_path):
    for name, threads in (("a", "1"), ("b", "3")):
        assert main(["solve", "--scenario", "2", "--grid", "7", "--horizon", "2", "--quiet",
                     "--threads", threads, "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "value.hjvf").read_bytes() == (tmp_path / "b" / "value.hjvf").read_bytes()


def test_env_overrides_output(tmp_path, monkeypatch):
    monkeypatch.setenv("WTE_REACH_OUT", str(tmp_path / "env"))
    assert main(["solve", "--scenario", "1", "--grid", "5", "--horizon", "0.5", "--quiet",
                 "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "value.hjvf").exists()
    assert not (tmp_path / "flag").exists()


def test_target_outside_domain_is_config_error(tmp_path, capsys):
    cfg = {"params": {"Q": 80.0}}
    (tmp_path / "bad.json").write_text(json.dumps(cfg))
    assert main(["solve", "--config", str(tmp_path / "bad.json"), "--grid", "5",
                 "--out", str(tmp_path / "o")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_bad_configs(tmp_path):
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["solve", "--config", str(tmp_path / "junk.json"), "--out", str(tmp_path)]) == 2
    (tmp_path / "k.json").write_text(json.dumps({"colour": 1}))
    assert main(["solve", "--config", str(tmp_path / "k.json"), "--out", str(tmp_path)]) == 2
    assert main(["volume", "--field", str(tmp_path / "missing.hjvf")]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from wte_reach import cli
    from wte_reach.errors import NumericalInstabilityError

    def boom(*a, **k):
        raise NumericalInstabilityError("non-finite value at node (1, 2, 3)")
    monkeypatch.setattr(cli, "solve", boom)
    assert main(["solve", "--scenario", "1", "--grid", "5", "--out", str(tmp_path)]) == 3


def test_unknown_flag_fails_fast(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--bogus"])
    assert exc.value.code == 2


def test_help_lists_flags():
    text = build_parser().format_help()
    for cmd in ("solve", "slice", "simulate", "entry-times", "volume", "compare"):
        assert cmd in text
    sub = build_parser()._subparsers._group_actions[0].choices["solve"].format_help()
    for flag in ("--scenario", "--config", "--grid", "--threads", "--out", "--target"):
        assert flag in sub


def test_precedence():
    # preset fixes inflow bounds; explicit config keys win; flags win over the file
    cfg = build_run_config({"scenario": 2, "params": {"eta_max": 30.0, "beta": 0.1}, "grid": {"n": 21}},
                           grid_n=11)
    assert cfg.params.eta_min == 22.5 and cfg.params.eta_max == 30.0 and cfg.params.beta == 0.1
    assert cfg.grid.counts == (11, 11, 11)
    assert len(cfg.profiles) == 3
    assert build_run_config({"scenario": 1}, target="strict").params.Q == 5.0
    assert build_run_config({}).grid.counts == (51, 51, 51)
    with pytest.raises(ConfigError):
        build_run_config({"solve": {"speed": 1}})


def test_large_grid_warning(tmp_path, monkeypatch, caplog):
    from wte_reach import cli
    monkeypatch.setattr(cli, "solve", lambda *a, **k: (_ for _ in ()).throw(ConfigError("stop")))
    with caplog.at_level("WARNING"):
        assert main(["solve", "--grid", "101", "--out", str(tmp_path)]) == 2
    assert "large" in caplog.text
