"""Outer training loop, logs and policy snapshots."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .estimators import grad_first, grad_zeroth
from .optim import make_optimizer
from .policy import Policy, build_policy, flatten, n_params, unflatten
from .rollout import Task, TrainConfig

CSV_VERSION = "# tempograd-csv v1"
LOG_COLUMNS = ("iteration", "mean_return", "grad_norm", "wallclock_s")
MAX_GRAD_NORM = 1e6


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainResult:
    params: dict
    best_params: dict
    best_return: float
    log: list = field(default_factory=list)


def estimate(task: Task, policy: Policy, params: dict, cfg: TrainConfig, rng):
    if cfg.estimator == "first":
        return grad_first(task, policy, params, cfg, rng, sigma=cfg.first_noise)
    return grad_zeroth(task, policy, params, cfg, rng)


def train(task: Task, policy: Policy, cfg: TrainConfig, params: dict | None = None, clock=time.perf_counter,
          on_iteration=None) -> TrainResult:
    """Iterate rollout -> gradient -> ascent step.

    The log holds one row per iteration with the mean return of the rollouts
    used for that iteration's gradient.  ``best_params`` are the parameters
    whose rollouts had the highest mean return.
    """
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = policy.init_params(rng)
    params = {k: np.array(v, dtype=float) for k, v in params.items()}
    opt = make_optimizer(cfg.optimizer, cfg.lr)
    best, best_ret = dict(params), -math.inf
    log = []
    t0 = clock()
    for it in range(cfg.iterations):
        grads, returns = estimate(task, policy, params, cfg, rng)
        mean_ret = float(np.mean(returns))
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
        if not math.isfinite(mean_ret) or not math.isfinite(norm) or norm > MAX_GRAD_NORM:
            raise DivergenceError(
                f"training diverged at iteration {it}: mean return {mean_ret}, gradient norm {norm:.3e}"
            )
        if mean_ret > best_ret:
            best, best_ret = dict(params), mean_ret
        params = opt.step(params, grads)
        row = {"iteration": it, "mean_return": mean_ret, "grad_norm": norm, "wallclock_s": clock() - t0}
        log.append(row)
        if on_iteration is not None:
            on_iteration(row, params)
    if best_ret == -math.inf:
        best_ret = float("nan")
    return TrainResult(params=params, best_params=best, best_return=best_ret, log=log)


def log_csv(rows, timing: bool = True) -> str:
    """CSV text of a training log; ``timing=False`` zeroes wall-clock times."""
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for r in rows:
        w.writerow([r["iteration"], repr(float(r["mean_return"])), repr(float(r["grad_norm"])),
                    f"{r['wallclock_s'] if timing else 0.0:.6f}"])
    return buf.getvalue()


def save_snapshot(path, policy: Policy, params: dict, seed: int, extra: dict | None = None):
    header = {
        "format": "tempograd-snapshot v1",
        "policy": policy.describe(),
        "order": list(params),
        "shapes": {k: list(np.shape(v)) for k, v in params.items()},
        "n_params": n_params(params),
        "seed": seed,
    }
    if extra:
        header.update(extra)
    flat = flatten(params)
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for x in flat:
            fh.write(repr(float(x)) + "\n")


def load_snapshot(path):
    """Returns ``(policy, params, header)``."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        flat = [float(line) for line in fh if line.strip()]
    policy = build_policy(header["policy"])
    # the header is written with sorted keys, so the flat order is stored separately
    order = header.get("order", list(header["shapes"]))
    template = {k: np.zeros(header["shapes"][k]) for k in order}
    return policy, unflatten(template, flat), header
