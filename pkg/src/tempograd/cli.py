"""Command line entry point: ``tempograd translate|check|sweep|train|eval``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .automata import FragmentError, HoaError, emit_dot, emit_hoa, run_lasso, translate_fragment
from .envs import Parking
from .ltl import LassoTrace, LtlSyntaxError, atoms, eval_lasso, parse_ltl
from .report import PARKING_FORMULA, frange, plot_curves, plot_sweep, stop_positions, sweep, sweep_csv
from .trainer.evaluate import eval_satisfaction
from .trainer.rollout import RolloutError
from .trainer.train import DivergenceError, load_snapshot, log_csv, save_snapshot, train

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path: Path, text: str):
    """Write via a temporary file so readers never see a partial output."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _formats(args, default):
    return [args.format] if args.format else list(default)


# ------------------------------------------------------------------ translate

def cmd_translate(args) -> int:
    text = args.formula
    if text is None:
        if not args.config:
            raise UsageError("translate needs a formula or --config")
        text = cfgmod.load(args.config).formula
    a = translate_fragment(parse_ltl(text))
    st = a.stats()
    fmt = args.format or "hoa"
    if fmt not in ("hoa", "dot"):
        raise UsageError("translate supports --format hoa or dot")
    body = emit_hoa(a) if fmt == "hoa" else emit_dot(a)
    n_labels = 2 ** len(a.ap_set)
    summary = (
        f"states={st['non_sink_states']} (+{st['states'] - st['non_sink_states']} rejecting sink) "
        f"edges={st['edges']} eps_edges={st['eps_edges']} accepting={st['accepting']} "
        f"aps={st['aps']} labels_per_state={n_labels}"
    )
    if args.out:
        path = Path(args.out) / f"automaton.{fmt}"
        _write(path, body)
        print(summary)
        print(f"wrote {path}")
    else:
        sys.stdout.write(body)
        print(summary, file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------ check

def read_trace(path) -> LassoTrace:
    """CSV of 0/1 columns, one per AP, and a ``# cycle-start: k`` comment."""
    rows, start, header = [], None, None
    with open(path, newline="") as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip()
                if body.startswith("cycle-start:"):
                    start = int(body.split(":", 1)[1])
                continue
            cells = next(csv.reader([s]))
            if header is None:
                header = [c.strip() for c in cells]
                continue
            if len(cells) != len(header):
                raise ValueError(f"{path}: row {len(rows)} has {len(cells)} cells, expected {len(header)}")
            if any(c.strip() not in ("0", "1") for c in cells):
                raise ValueError(f"{path}: row {len(rows)} must contain only 0/1")
            rows.append(frozenset(h for h, c in zip(header, cells) if c.strip() == "1"))
    if header is None or not rows:
        raise ValueError(f"{path}: empty trace")
    if start is None:
        raise ValueError(f"{path}: missing '# cycle-start: k' line")
    if not 0 <= start < len(rows):
        raise ValueError(f"{path}: cycle start {start} outside 0..{len(rows) - 1}")
    return LassoTrace(rows[:start], rows[start:])


def write_trace(trace: LassoTrace, names) -> str:
    lines = ["# tempograd-csv v1", f"# cycle-start: {len(trace.prefix)}"]
    buf = [",".join(names)]
    for l in trace.prefix + trace.cycle:
        buf.append(",".join("1" if n in l else "0" for n in names))
    return "\n".join(lines + buf) + "\n"


def random_traces(names, n, rng, max_prefix=4, max_cycle=3):
    out = []
    for _ in range(n):
        p = int(rng.integers(0, max_prefix + 1))
        c = int(rng.integers(1, max_cycle + 1))
        word = [frozenset(x for x in names if rng.random() < 0.5) for _ in range(p + c)]
        out.append(LassoTrace(word[:p], word[p:]))
    return out


def cmd_check(args) -> int:
    f = parse_ltl(args.formula)
    a = translate_fragment(f)
    if args.trace:
        traces = [read_trace(args.trace)]
    elif args.random:
        names = [ap.name for ap in atoms(f)]
        traces = random_traces(names, args.random, np.random.default_rng(args.seed or 0))
    else:
        raise UsageError("check needs a trace file or --random N")
    n_sat = 0
    for i, t in enumerate(traces):
        sem, aut = eval_lasso(f, t), run_lasso(a, t)
        if sem != aut:
            print(f"disagreement on trace {i}: semantics={sem} automaton={aut}", file=sys.stderr)
            return EXIT_RUNTIME
        n_sat += sem
    if len(traces) == 1:
        print("satisfied" if n_sat else "violated")
    else:
        print(f"agree on {len(traces)} traces ({n_sat} satisfied, {len(traces) - n_sat} violated)")
    return EXIT_OK


# ------------------------------------------------------------------ sweep

def _default_sweep_config():
    return cfgmod.from_dict({"env": {"name": "parking"}, "formula": PARKING_FORMULA})


def cmd_sweep(args) -> int:
    rc = cfgmod.load(args.config, args.seed, args.out) if args.config else _default_sweep_config()
    out = Path(args.out or rc.out_dir)
    task = rc.make_task()
    if task.env.spec.action_dim != 1:
        raise cfgmod.ConfigError("env: sweep needs a one-dimensional action")
    sw = rc.sweep
    lo, hi = task.env.spec.action_low[0], task.env.spec.action_high[0]
    grid = frange(sw.get("start", 0.5), sw.get("stop", hi - 0.5 if hi > 1 else hi), sw.get("step", 0.5))
    if any(a < lo or a > hi for a in grid):
        raise cfgmod.ConfigError(f"sweep: grid must lie inside the action bounds [{lo}, {hi}]")
    seed = rc.train.seed if args.seed is None else args.seed
    rows = sweep(task, grid, rc.train, sw.get("n_rollouts", rc.train.n_rollouts), sw.get("noise", 0.3), seed)
    text = sweep_csv(rows)
    fmts = _formats(args, ("csv", "svg"))
    if "csv" in fmts:
        _write(out / "sweep.csv", text)
    if "svg" in fmts:
        stops = stop_positions(task, grid, rc.train) if isinstance(task.env, Parking) else None
        tmp = out / "sweep.svg.tmp"
        out.mkdir(parents=True, exist_ok=True)
        plot_sweep(rows, tmp, stops=stops)
        os.replace(tmp, out / "sweep.svg")
    sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------ train / eval

def cmd_train(args) -> int:
    if not args.config:
        raise UsageError("train needs --config")
    rc = cfgmod.load(args.config, args.seed, args.out)
    out = Path(rc.out_dir)
    task = rc.make_task()
    policy = rc.make_policy(task)
    res = train(task, policy, rc.train)
    _write(out / "log.csv", log_csv(res.log, timing=rc.timing))
    snap = out / "snapshot.txt"
    tmp = out / "snapshot.txt.tmp"
    save_snapshot(tmp, policy, res.params, rc.train.seed)
    os.replace(tmp, snap)
    fmts = _formats(args, ("csv", "svg"))
    if "svg" in fmts and res.log:
        its = [r["iteration"] for r in res.log]
        tmp = out / "train.svg.tmp"
        plot_curves({"mean return": (its, [r["mean_return"] for r in res.log])}, tmp)
        os.replace(tmp, out / "train.svg")
    last = res.log[-1]["mean_return"] if res.log else float("nan")
    print(f"iterations={len(res.log)} final_mean_return={last:.6g} snapshot={snap}")
    if policy.kind == "constant":
        print("theta=" + ",".join(f"{x:.6g}" for x in np.ravel(res.params["theta"])))
    return EXIT_OK


def cmd_eval(args) -> int:
    if not args.config:
        raise UsageError("eval needs --config")
    rc = cfgmod.load(args.config, args.seed, args.out)
    task = rc.make_task()
    snap = args.snapshot or rc.eval.get("snapshot") or str(Path(rc.out_dir) / "snapshot.txt")
    policy, params, _ = load_snapshot(snap)
    n = rc.eval.get("episodes", 10)
    rep = eval_satisfaction(task, policy, params, rc.train, n, rng=np.random.default_rng(rc.train.seed))
    note = " (approximate: no lasso found in some episodes)" if rep.approximate else ""
    print(f"psat={rep.psat:.6g} mean_return={rep.mean_return:.6g} episodes={n}{note}")
    return EXIT_OK


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tempograd", description="Differentiable LTL rewards for policy training.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, fmts):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override train.seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=fmts, help="restrict output format")

    t = sub.add_parser("translate", help="formula -> LDBA (HOA or DOT)")
    t.add_argument("formula", nargs="?")
    common(t, ["hoa", "dot"])
    c = sub.add_parser("check", help="check a lasso trace against a formula")
    c.add_argument("formula")
    c.add_argument("trace", nargs="?", help="trace CSV with a '# cycle-start: k' line")
    c.add_argument("--random", type=int, metavar="N", help="check N random lassos instead")
    common(c, ["csv"])
    s = sub.add_parser("sweep", help="constant-action sweep (CSV + SVG)")
    common(s, ["csv", "svg"])
    tr = sub.add_parser("train", help="train a policy from a config")
    common(tr, ["csv", "svg"])
    e = sub.add_parser("eval", help="evaluate a policy snapshot")
    e.add_argument("--snapshot")
    common(e, ["csv"])
    return p


COMMANDS = {"translate": cmd_translate, "check": cmd_check, "sweep": cmd_sweep, "train": cmd_train, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as e:
        print(f"tempograd: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (cfgmod.ConfigError, LtlSyntaxError, FragmentError, HoaError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"tempograd: invalid input: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RolloutError, DivergenceError, FloatingPointError, OSError) as e:
        print(f"tempograd: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
