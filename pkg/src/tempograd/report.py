"""Parameter sweeps, CSV tables and matplotlib figures."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .trainer.estimators import grad_first_per_rollout
from .trainer.evaluate import eval_satisfaction
from .trainer.policy import ConstantPolicy
from .trainer.rollout import Task, TrainConfig, rollout
from .trainer.train import CSV_VERSION

SWEEP_COLUMNS = ("a", "psat", "ret_discrete", "ret_soft", "grad", "grad_std")
PARKING_FORMULA = 'FG(("x>10" & "x<20") | ("x>30" & "x<40")) & G!("x>20" & "x<30")'


@dataclass
class SweepRow:
    a: float
    psat: float
    ret_discrete: float
    ret_soft: float
    grad: float
    grad_std: float

    def as_tuple(self):
        return (self.a, self.psat, self.ret_discrete, self.ret_soft, self.grad, self.grad_std)


def sweep(task: Task, grid, cfg: TrainConfig, n_rollouts: int = 10, noise: float = 0.3, seed: int = 0):
    """Evaluate a one-parameter constant policy at each grid value.

    psat and ret_discrete come from the hard-label product, ret_soft from the
    soft product (both with the noiseless action).  grad and grad_std are the
    mean and standard deviation of per-rollout first-order gradients under
    per-step Gaussian action noise of scale ``noise``.
    """
    grid = [float(a) for a in grid]
    rng = np.random.default_rng(seed)
    g = len(grid)
    thetas = np.array(grid)[:, None]
    pol = ConstantPolicy(0.0)
    soft, _ = rollout(task, pol, {"theta": thetas}, cfg, rng, g)
    n = n_rollouts
    grads, _ = grad_first_per_rollout(task, pol, {"theta": np.repeat(thetas, n, axis=0)}, cfg, rng, g * n, sigma=noise)
    per = grads["theta"][:, 0].reshape(g, n)
    rows = []
    for i, a in enumerate(grid):
        rep = eval_satisfaction(task, pol, {"theta": np.array([a])}, cfg, 1, rng=rng)
        rows.append(SweepRow(a, rep.psat, rep.mean_return, float(soft[i]), float(per[i].mean()), float(per[i].std())))
    return rows


def frange(start, stop, step):
    """Inclusive decimal range without accumulated rounding."""
    n = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(n + 1)]


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def sweep_csv(rows) -> str:
    return table_csv(SWEEP_COLUMNS, [r.as_tuple() for r in rows])


# ---------------------------------------------------------------- figures

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "tempograd"
    plt.rcParams["svg.fonttype"] = "path"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "tempograd"})


def plot_sweep(rows, path, regions=None, stops=None):
    """Three panels: the track, satisfaction and returns, return gradient."""
    plt = _pyplot()
    a = np.array([r.a for r in rows])
    fig, ax = plt.subplots(1, 3, figsize=(12, 3.4))
    regions = regions or {"park": [(10, 20), (30, 40)], "grass": [(20, 30)]}
    colours = {"park": "#9ecae1", "grass": "#a1d99b"}
    for name, spans in regions.items():
        for k, (lo, hi) in enumerate(spans):
            ax[0].axvspan(lo, hi, color=colours.get(name, "#dddddd"), label=name if k == 0 else None)
    if stops is not None:
        xs = [x for x, _ in stops]
        ds = [d for _, d in stops]
        ax[0].plot(xs, ds, "k.", markersize=4, label="resting x")
    ax[0].set_xlim(0, 60)
    ax[0].set_xlabel("x [m]")
    ax[0].set_ylabel("deceleration [m/s$^2$]")
    ax[0].legend(loc="upper right", fontsize=7)
    ax[0].set_title("track")

    ax[1].plot(a, [r.psat for r in rows], "k-", drawstyle="steps-mid", label="P(sat)")
    ax[1].plot(a, [r.ret_discrete for r in rows], "o-", color="#d62728", markersize=3, label="discrete return")
    ax[1].plot(a, [r.ret_soft for r in rows], "s-", color="#1f77b4", markersize=3, label="soft return")
    ax[1].set_xlabel("deceleration [m/s$^2$]")
    ax[1].set_ylim(-0.05, 1.05)
    ax[1].legend(fontsize=7)
    ax[1].set_title("satisfaction and return")

    g = np.array([r.grad for r in rows])
    s = np.array([r.grad_std for r in rows])
    ax[2].plot(a, g, "-", color="#1f77b4", label="dG/da")
    ax[2].fill_between(a, g - s, g + s, color="#1f77b4", alpha=0.25, linewidth=0, label="±1 std")
    ax[2].axhline(0.0, color="grey", linewidth=0.5)
    ax[2].set_xlabel("deceleration [m/s$^2$]")
    ax[2].legend(fontsize=7)
    ax[2].set_title("return gradient")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_curves(curves: dict, path, ylabel="mean return", band=None):
    """Line plot of ``{label: (x, y)}`` series (training curves)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for label in sorted(curves):
        x, y = curves[label]
        ax.plot(x, y, label=label, linewidth=1)
    if band is not None:
        lo, hi = band
        ax.axhspan(lo, hi, color="#dddddd", alpha=0.5, linewidth=0)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def stop_positions(task: Task, grid, cfg: TrainConfig):
    """(resting x, a) pairs of the noiseless parking runs."""
    env = task.env
    out = []
    for a in grid:
        s = env.initial(1, None)
        for _ in range(cfg.horizon or env.spec.horizon):
            s = env.step(s, [np.array([a])])
        out.append((float(s[0][0]), float(a)))
    return out
