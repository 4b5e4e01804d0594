import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tempograd.automata import isomorphic, parse_hoa, translate_fragment
from tempograd.cli import main
from tempograd.ltl import parse_ltl
from tempograd.trainer import load_snapshot

from conftest import PHI_CARTPOLE, PHI_P

ROOT = Path(__file__).resolve().parents[1]


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(path, **over):
    raw = {
        "env": {"name": "parking"},
        "formula": PHI_P,
        "policy": {"kind": "constant", "init": 1.0},
        "train": {"lr": 0.5, "first_noise": 0.5, "iterations": 0, "tau": 0.1},
        "output": {"dir": str(path.parent / "out"), "timing": False},
    }
    for k, v in over.items():
        if v is None:
            raw.pop(k, None)
        else:
            raw[k] = v
    path.write_text(json.dumps(raw))
    return path


def read_rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


# ---------------------------------------------------------------- translate

def test_translate_parking_round_trip(capsys, tmp_path):
    code, out, _ = cli(capsys, "translate", PHI_P, "--out", tmp_path)
    assert code == 0
    assert "states=2 (+1 rejecting sink)" in out and "eps_edges=1" in out
    a = parse_hoa((tmp_path / "automaton.hoa").read_text())
    assert isomorphic(a, translate_fragment(parse_ltl(PHI_P)))


def test_translate_always_stdout(capsys):
    code, out, err = cli(capsys, "translate", 'G"a>0"')
    assert code == 0
    assert "States: 2" in out
    assert "states=1 (+1 rejecting sink)" in err


def test_translate_cartpole_stats(capsys):
    code, _, err = cli(capsys, "translate", PHI_CARTPOLE)
    assert code == 0
    assert "states=3 (+1 rejecting sink)" in err and "labels_per_state=64" in err


def test_translate_dot(capsys, tmp_path):
    code, _, _ = cli(capsys, "translate", PHI_P, "--format", "dot", "--out", tmp_path)
    assert code == 0
    assert (tmp_path / "automaton.dot").read_text().startswith("digraph")


def test_translate_out_of_fragment(capsys):
    code, _, err = cli(capsys, "translate", 'G F G"a>0"')
    assert code == 2 and 'outside fragment: GFG"a>0"' in err


def test_translate_syntax_error(capsys):
    code, _, err = cli(capsys, "translate", 'G("a>0"')
    assert code == 2 and "invalid input" in err


def test_translate_needs_formula(capsys):
    code, _, _ = cli(capsys, "translate")
    assert code == 1


# ---------------------------------------------------------------- check

def _trace(path, header, rows, start):
    body = [f"# cycle-start: {start}", ",".join(header)] + [",".join(map(str, r)) for r in rows]
    path.write_text("\n".join(body) + "\n")
    return path


def test_check_always_satisfied(capsys, tmp_path):
    t = _trace(tmp_path / "t.csv", ["a>0"], [[1], [1]], 1)
    code, out, _ = cli(capsys, "check", 'G"a>0"', t)
    assert code == 0 and out.strip() == "satisfied"


def test_check_grass_violated(capsys, tmp_path):
    header = ["x>10", "x<20", "x>20", "x<30", "x>30", "x<40"]
    rows = [
        [0, 1, 0, 1, 0, 1],  # x = 5
        [1, 1, 0, 1, 0, 1],  # x = 15
        [1, 0, 1, 1, 0, 1],  # x = 25 (grass)
        [1, 0, 1, 0, 1, 1],  # x = 35, parked
    ]
    t = _trace(tmp_path / "t.csv", header, rows, 3)
    code, out, _ = cli(capsys, "check", PHI_P, t)
    assert code == 0 and out.strip() == "violated"


def test_check_random_agreement(capsys):
    code, out, _ = cli(capsys, "check", PHI_P, "--random", 100, "--seed", 4)
    assert code == 0 and out.startswith("agree on 100 traces")


def test_check_bad_trace(capsys, tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("a>0\n1\n")
    code, _, err = cli(capsys, "check", 'G"a>0"', t)
    assert code == 2 and "cycle-start" in err


def test_check_needs_trace(capsys):
    assert cli(capsys, "check", 'G"a>0"')[0] == 1


# ---------------------------------------------------------------- config errors

@pytest.mark.parametrize(
    "over,key",
    [
        ({"train": {"lr": "fast"}}, "train.lr"),
        ({"train": {"lrr": 0.1}}, "train"),
        ({"env": {"name": "hopper"}}, "env.name"),
        ({"env": {"name": "parking", "params": {"mass": 1}}}, "env.params.mass"),
        ({"env": {"name": "parking", "params": {"horizon": 10.5}}}, "env.params.horizon"),
        ({"hoa": "x.hoa"}, "formula/hoa"),
        ({"formula": None}, "formula/hoa"),
        ({"policy": {"kind": "tree"}}, "policy.kind"),
    ],
)
def test_config_errors_name_key(capsys, tmp_path, over, key):
    cfg = write_config(tmp_path / "c.json", **over)
    code, _, err = cli(capsys, "train", "--config", cfg)
    assert code == 2
    assert key in err


def test_config_not_json(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{nope")
    code, _, err = cli(capsys, "train", "--config", p)
    assert code == 2 and "JSON" in err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["fly"])
    assert e.value.code == 1
    assert cli(capsys, "train")[0] == 1


def test_missing_hoa_is_runtime(capsys, tmp_path):
    cfg = write_config(tmp_path / "c.json", formula=None, hoa="missing.hoa")
    assert cli(capsys, "train", "--config", cfg)[0] == 3


# ---------------------------------------------------------------- sweep

def _sweep_config(tmp_path, start, stop, step, n=2):
    return write_config(tmp_path / "s.json", sweep={"start": start, "stop": stop, "step": step, "n_rollouts": n})


def test_sweep_row_a4(capsys, tmp_path):
    cfg = _sweep_config(tmp_path, 3.5, 4.5, 0.5)
    code, out, _ = cli(capsys, "sweep", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0
    assert out.startswith("# tempograd-csv v1\na,psat,ret_discrete,ret_soft,grad,grad_std\n")
    row = {float(r["a"]): r for r in read_rows(out)}[4.0]
    assert float(row["psat"]) == 1.0
    assert (tmp_path / "o" / "sweep.csv").read_text() == out
    assert (tmp_path / "o" / "sweep.svg").read_text().startswith("<?xml")


def test_sweep_a0_row(capsys, tmp_path):
    cfg = _sweep_config(tmp_path, 0.0, 0.5, 0.5)
    code, out, _ = cli(capsys, "sweep", "--config", cfg, "--out", tmp_path / "o")
    row = {float(r["a"]): r for r in read_rows(out)}[0.0]
    assert float(row["psat"]) == 0.0
    assert float(row["ret_soft"]) < 0.05


def test_sweep_soft_smooth_across_five(capsys, tmp_path):
    cfg = _sweep_config(tmp_path, 4.8, 5.4, 0.05)
    code, out, _ = cli(capsys, "sweep", "--config", cfg, "--out", tmp_path / "o", "--format", "csv")
    rows = read_rows(out)
    soft = np.array([float(r["ret_soft"]) for r in rows])
    disc = np.array([float(r["ret_discrete"]) for r in rows])
    assert np.max(np.abs(np.diff(disc))) > 0.9
    assert np.max(np.abs(np.diff(soft))) < 0.5 * np.max(np.abs(np.diff(disc)))
    assert not (tmp_path / "o" / "sweep.svg").exists()


def test_sweep_byte_identical_rerun(capsys, tmp_path):
    cfg = _sweep_config(tmp_path, 2.0, 3.0, 0.5)
    out = tmp_path / "o"
    cli(capsys, "sweep", "--config", cfg, "--out", out)
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    cli(capsys, "sweep", "--config", cfg, "--out", out)
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second and set(first) == {"sweep.csv", "sweep.svg"}


def test_sweep_grid_outside_bounds(capsys, tmp_path):
    cfg = _sweep_config(tmp_path, 9.0, 11.0, 1.0)
    code, _, err = cli(capsys, "sweep", "--config", cfg)
    assert code == 2 and "sweep" in err


# ---------------------------------------------------------------- train / eval

def test_train_zero_iterations(capsys, tmp_path):
    cfg = write_config(tmp_path / "c.json")
    code, out, _ = cli(capsys, "train", "--config", cfg)
    assert code == 0 and "iterations=0" in out and "theta=1" in out
    _, params, header = load_snapshot(tmp_path / "out" / "snapshot.txt")
    assert params["theta"].tolist() == [1.0] and header["policy"]["kind"] == "constant"


def test_train_rerun_byte_identical(capsys, tmp_path):
    cfg = write_config(tmp_path / "c.json", train={"lr": 0.5, "first_noise": 0.5, "iterations": 3, "tau": 0.1})
    cli(capsys, "train", "--config", cfg)
    first = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    cli(capsys, "train", "--config", cfg)
    second = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    assert first == second and {"log.csv", "snapshot.txt", "train.svg"} <= set(first)


def test_eval_snapshot(capsys, tmp_path):
    cfg = write_config(tmp_path / "c.json", policy={"kind": "constant", "init": 4.0})
    cli(capsys, "train", "--config", cfg)
    code, out, _ = cli(capsys, "eval", "--config", cfg)
    assert code == 0 and out.startswith("psat=1 ")


@pytest.mark.slow
def test_parking_first_order_config_five_seeds(capsys, tmp_path):
    cfg = ROOT / "configs" / "parking_first.json"
    thetas = []
    for seed in range(5):
        out = tmp_path / f"seed{seed}"
        code, text, _ = cli(capsys, "train", "--config", cfg, "--seed", seed, "--out", out)
        assert code == 0
        thetas.append(float(text.split("theta=")[1]))
        if 2.5 <= thetas[-1] <= 5.0:
            code, text, _ = cli(capsys, "eval", "--config", cfg, "--out", out)
            assert text.startswith("psat=1 ")
    assert sum(2.5 <= t <= 5.0 for t in thetas) >= 4, thetas


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "tempograd.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "translate" in r.stdout
