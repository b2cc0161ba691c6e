import json
import os
import subprocess
import sys

import numpy as np
import pytest

from softsnake.cli import main


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_usage_error_exit_code(capsys):
    assert main(["no-such-command"]) == 1
    assert main(["train", "--controller", "bogus"]) == 1


def test_demo_neuron_rows_and_determinism(tmp_path):
    out = tmp_path / "a"
    assert main(["demo-neuron", "--out-dir", str(out)]) == 0
    trace = out / "neuron_trace.csv"
    lines = trace.read_text().splitlines()
    assert lines[0] == "k,t,q,weighted_input,u,o,torque"
    assert len(lines) == 2001  # header + 2 s at 1 ms
    body = np.array([ln.split(",") for ln in lines[1:]], dtype=float)
    phase1 = body[:1000]
    assert (phase1[:, 5] > 0).sum() > 0 and (phase1[:, 5] < 0).sum() > 0

    out2 = tmp_path / "b"
    assert main(["demo-neuron", "--out-dir", str(out2)]) == 0
    assert read(trace) == read(out2 / "neuron_trace.csv")


def test_demo_oscillator_csv(tmp_path):
    out = tmp_path / "osc"
    args = ["demo-oscillator", "--un", "-0.1", "--up", "-0.025",
            "--q0", "0.4", "--qdot0", "0.0", "--steps", "5000",
            "--out-dir", str(out)]
    assert main(args) == 0
    lines = (out / "oscillator_trace.csv").read_text().splitlines()
    assert lines[0] == "t,q,q_dot,u,o"
    assert len(lines) == 5001
    assert main(args) == 0  # idempotent rerun over the same path


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("SOFTSNAKE_OUT_ROOT", str(tmp_path))
    assert main(["demo-neuron", "--out-dir", "nested/run"]) == 0
    assert (tmp_path / "nested" / "run" / "neuron_trace.csv").exists()


def test_divergence_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("dt = 0.05\ntau = 0.1\n")
    # unstable oscillator: stiffness far beyond the stable step limit
    code = main(["demo-oscillator", "--un", "-0.1", "--up", "0.1",
                 "--q0", "1.0", "--qdot0", "0.0", "--steps", "5000",
                 "--stiffness", "1e9", "--config", str(cfg),
                 "--out-dir", str(tmp_path / "div")])
    assert code == 2


def test_bad_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "typo.cfg"
    cfg.write_text("dtt = 0.001\n")
    assert main(["demo-neuron", "--config", str(cfg),
                 "--out-dir", str(tmp_path / "x")]) == 1


def test_train_eval_export_roundtrip(tmp_path):
    out = tmp_path / "run"
    args = ["train", "--controller", "spikingsoft", "--m", "1", "--n", "3",
            "--steps", "256", "--horizon", "128", "--epochs", "2",
            "--minibatch", "32", "--seed", "7", "--quiet",
            "--out-dir", str(out)]
    assert main(args) == 0
    curve = (out / "learning_curve.csv").read_text().splitlines()
    assert curve[0].startswith("iteration,env_steps,mean_ep_reward")
    assert len(curve) == 3  # header + 2 iterations
    ck = out / "checkpoint_final.json"
    meta = json.loads(ck.read_text())["meta"]
    assert meta["controller"] == "spikingsoft"
    assert (meta["m"], meta["n"]) == (1, 3)

    # byte-identical retrain
    out2 = tmp_path / "run2"
    args2 = args[:-1] + [str(out2)]
    assert main(args2) == 0
    assert read(out / "learning_curve.csv") == read(out2
                                                    / "learning_curve.csv")
    assert read(ck) == read(out2 / "checkpoint_final.json")

    ev = tmp_path / "eval"
    assert main(["eval", "--checkpoint", str(ck), "--episodes", "4",
                 "--seed", "3", "--out-dir", str(ev)]) == 0
    report = json.loads((ev / "report.json").read_text())
    assert report["n_episodes"] == 4
    assert set(report["means"]) == {"success_rate", "game_time",
                                    "total_reward", "silence_rate"}
    assert (ev / "report.txt").exists()
    episodes = (ev / "episodes.csv").read_text().splitlines()
    assert len(episodes) == 5

    ev2 = tmp_path / "eval2"
    assert main(["eval", "--checkpoint", str(ck), "--episodes", "4",
                 "--seed", "3", "--out-dir", str(ev2)]) == 0
    assert read(ev / "report.json") == read(ev2 / "report.json")
    assert read(ev / "episodes.csv") == read(ev2 / "episodes.csv")

    ex = tmp_path / "traj"
    assert main(["export-trajectory", "--checkpoint", str(ck),
                 "--seed", "11", "--out-dir", str(ex)]) == 0
    traj = (ex / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "t,node_index,x,y,z,vx,vy,vz"
    segs = (ex / "segments.csv").read_text().splitlines()
    assert segs[0] == "t,segment,d,gamma"
    jl = (ex / "episode.jsonl").read_text().splitlines()
    row = json.loads(jl[0])
    assert set(row) >= {"step", "action", "l", "r1", "r2", "r3", "r4",
                        "terminated"}
    ex2 = tmp_path / "traj2"
    assert main(["export-trajectory", "--checkpoint", str(ck),
                 "--seed", "11", "--out-dir", str(ex2)]) == 0
    assert read(ex / "trajectory.csv") == read(ex2 / "trajectory.csv")


def test_checkpoint_carries_its_physics(tmp_path):
    cfg_file = tmp_path / "soft.cfg"
    cfg_file.write_text("youngs_modulus = 60\nsegment_length = 0.8\n")
    out = tmp_path / "run"
    assert main(["train", "--controller", "spikingsoft", "--m", "1",
                 "--n", "3", "--steps", "128", "--horizon", "64",
                 "--epochs", "1", "--minibatch", "32", "--seed", "1",
                 "--quiet", "--config", str(cfg_file),
                 "--out-dir", str(out)]) == 0
    import argparse

    from softsnake.cli import _policy_fn_from_args
    from softsnake.config import DEFAULT_CONFIG
    args = argparse.Namespace(checkpoint=str(out / "checkpoint_final.json"),
                              config=None, seed=0)
    _, _, _, _, cfg, label = _policy_fn_from_args(args, DEFAULT_CONFIG)
    assert label == "checkpoint"
    assert cfg.youngs_modulus == 60.0
    assert cfg.segment_length == 0.8


def test_eval_random_policy(tmp_path):
    out = tmp_path / "rnd"
    assert main(["eval", "--controller", "vanilla", "--m", "1", "--n", "3",
                 "--episodes", "2", "--seed", "5",
                 "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["policy"] == "random"
    assert report["controller"] == "vanilla"


def test_sweep_emits_per_size_reports(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--sizes", "1x3,1x6", "--steps", "128",
                 "--horizon", "64", "--epochs", "1", "--minibatch", "32",
                 "--episodes", "2", "--seed", "1", "--quiet",
                 "--out-dir", str(out)]) == 0
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert [s["size"] for s in summary] == ["m1n3", "m1n6"]
    for tag in ("m1n3", "m1n6"):
        assert (out / tag / "report.json").exists()
        assert (out / tag / "checkpoint_final.json").exists()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "softsnake.cli",
                           "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
