import json
import math
from pathlib import Path

import numpy as np
import pytest

from agppo import config as cfgmod
from agppo.cli import main
from agppo.metrics import aggregate_report, read_report_json, write_report_json
from agppo.nets import NetConfig, init_params, save_checkpoint

from .fixtures import three_episode_fixture

TINY_TOML = """
[experiment]
shaping = "rsv1"

[train]
total_timesteps = 128
rollout_length = 64
n_envs = 4
n_minibatches = 2
n_epochs = 1
seed = 5
conv_channels = [4, 4, 8]
hidden = [16, 16]

[eval]
episodes = 6
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML)
    return path


def only_dir(root: Path, prefix: str) -> Path:
    (d,) = [p for p in root.iterdir() if p.name.startswith(prefix)]
    return d


def test_dump_defaults_round_trips(capsys):
    assert main(["dump-defaults"]) == 0
    text = capsys.readouterr().out
    import tomli

    assert cfgmod.from_dict(tomli.loads(text)).resolved() == cfgmod.ExperimentConfig().resolved()


def test_unknown_shaping_exit_2(tmp_path, capsys):
    assert main(["train", "--shaping", "rsv9", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "rsv9" in err and "rsv7b" in err and "baseline" in err


def test_bad_config_files_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[train]\nbogus = 1\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text("not = [valid toml")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["train", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 2
    bad.write_text("[train]\nrollout_length = 63\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_train_eval_pipeline_is_deterministic(tiny_config, tmp_path, monkeypatch):
    monkeypatch.setenv("APPRL_OUT_DIR", str(tmp_path / "env-root"))
    for tag in ("a", "b"):
        assert main(["train", "--config", str(tiny_config), "--out", str(tmp_path / tag)]) == 0
    runs = [only_dir(tmp_path / tag, "train-rsv1") for tag in ("a", "b")]
    for name in ("train_log.csv", "final.ckpt", "config.toml"):
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name

    # eval without --out lands under $APPRL_OUT_DIR
    for run in runs:
        assert main(["eval", str(run / "final.ckpt"), "--episodes", "5"]) == 0
    evals = sorted((tmp_path / "env-root").iterdir())
    assert len(evals) == 2
    for name in ("report.csv", "report.json", "episodes.csv", "roi.csv", "roi.pgm", "traces/episode-10000.csv"):
        assert (evals[0] / name).read_bytes() == (evals[1] / name).read_bytes(), name
    rep = read_report_json(evals[0] / "report.json")
    assert rep.name == "rsv1" and rep.env == "gw-a-test" and rep.n_plays == 5
    assert len(list((evals[0] / "traces").iterdir())) == 5
    snap = cfgmod.load(evals[0] / "config.toml")
    assert snap.shaping == "rsv1" and snap.eval.episodes == 5


def test_run_dirs_are_write_once(tiny_config, tmp_path):
    for _ in range(2):
        assert main(["train", "--config", str(tiny_config), "--out", str(tmp_path / "runs")]) == 0
    assert len(list((tmp_path / "runs").iterdir())) == 2


def test_eval_checkpoint_errors_exit_3(tmp_path):
    nets = init_params(0, NetConfig(conv_channels=(4, 4, 8), hidden=(16, 16)))
    ckpt = tmp_path / "base.ckpt"
    save_checkpoint(ckpt, nets)
    # a baseline critic has no appraisal inputs
    assert main(["eval", str(ckpt), "--shaping", "rsv1", "--episodes", "2", "--out", str(tmp_path)]) == 3
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"\x00" * 64)
    assert main(["eval", str(junk), "--out", str(tmp_path)]) == 3


def test_eval_of_random_policy_is_weak(tmp_path):
    nets = init_params(0)
    ckpt = tmp_path / "random.ckpt"
    save_checkpoint(ckpt, nets)
    assert main(["eval", str(ckpt), "--env", "gw-a-test", "--out", str(tmp_path)]) == 0
    rep = read_report_json(only_dir(tmp_path, "eval-") / "report.json")
    assert rep.n_plays == 100
    assert rep.wins_over_plays < 0.3


def test_stochastic_eval_flag(tmp_path):
    nets = init_params(0, NetConfig(conv_channels=(4, 4, 8), hidden=(16, 16)))
    ckpt = tmp_path / "c.ckpt"
    save_checkpoint(ckpt, nets)
    assert main(["eval", str(ckpt), "--episodes", "3", "--stochastic-eval", "--out", str(tmp_path / "s")]) == 0
    snap = cfgmod.load(only_dir(tmp_path / "s", "eval-") / "config.toml")
    assert snap.eval.stochastic


def make_report(tmp_path, name, reward):
    traces = three_episode_fixture()
    rep = aggregate_report(traces, 10, name=name, env="gw-a-test")
    rep.score = reward
    path = tmp_path / f"{name}.json"
    write_report_json(path, rep)
    return path


def test_compare_sorts_by_score(tmp_path, capsys):
    paths = [make_report(tmp_path, n, s) for n, s in [("low", -0.5), ("high", 0.9), ("mid", 0.1)]]
    assert main(["compare", *map(str, paths), "--out", str(tmp_path / "out")]) == 0
    run = only_dir(tmp_path / "out", "compare")
    lines = (run / "comparison.csv").read_text().splitlines()
    assert [l.split(",")[0] for l in lines[1:]] == ["high", "mid", "low"]
    text = (run / "comparison.txt").read_text().splitlines()
    assert len(text) == 4 and len({len(l) for l in text}) == 1


def test_compare_identical_reports(tmp_path):
    a = make_report(tmp_path, "same", 0.2)
    assert main(["compare", str(a), str(a), "--out", str(tmp_path / "o")]) == 0
    rows = (only_dir(tmp_path / "o", "compare") / "comparison.csv").read_text().splitlines()[1:]
    assert len(rows) == 2 and rows[0] == rows[1]


def test_compare_schema_mismatch_exit_4(tmp_path):
    good = make_report(tmp_path, "good", 0.2)
    bad = tmp_path / "bad.json"
    data = json.loads(good.read_text())
    data["schema_version"] = 99
    bad.write_text(json.dumps(data))
    assert main(["compare", str(good), str(bad), "--out", str(tmp_path)]) == 4
    assert main(["compare", str(good), "--out", str(tmp_path)]) == 2


def test_replay_verb(tmp_path, capsys):
    nets = init_params(2, NetConfig(conv_channels=(4, 4, 8), hidden=(16, 16)))
    ckpt = tmp_path / "c.ckpt"
    save_checkpoint(ckpt, nets)
    assert main(["eval", str(ckpt), "--env", "gw-b", "--episodes", "3", "--out", str(tmp_path / "e")]) == 0
    run = only_dir(tmp_path / "e", "eval-")
    trace = run / "traces" / "episode-10001.csv"
    capsys.readouterr()
    assert main(["replay", str(trace)]) == 0
    assert "replay ok" in capsys.readouterr().out
    # the wrong seed diverges from the recorded states
    assert main(["replay", str(trace), "--seed", "3", "--env", "gw-b"]) == 1
    assert main(["replay", str(tmp_path / "nameless.csv")]) == 2
