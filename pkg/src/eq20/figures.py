"""Renders evaluation and training figures next to their data files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_eval_figures(reports, stem) -> list[str]:
    """Success-rate and mean-turns charts for a policy comparison.

    Files land at {stem}_success.png and {stem}_turns.png; returns the paths.
    """
    noises = sorted({r.noise_prob for r in reports})
    kinds = list(dict.fromkeys(r.policy_kind for r in reports))
    by_cell = {(r.policy_kind, r.noise_prob): r for r in reports}
    paths = []
    for metric, label, suffix in (("success_rate", "success rate", "success"),
                                  ("mean_turns", "mean questions", "turns")):
        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.8 / max(len(kinds), 1)
        xs = np.arange(len(noises))
        for k, kind in enumerate(kinds):
            values = [getattr(by_cell[(kind, n)], metric)
                      if (kind, n) in by_cell else 0.0 for n in noises]
            ax.bar(xs + k * width, values, width, label=kind)
        ax.set_xticks(xs + width * (len(kinds) - 1) / 2)
        ax.set_xticklabels([f"noise {n}" for n in noises])
        ax.set_ylabel(label)
        ax.set_title(f"Self-play {label} by policy")
        ax.legend()
        fig.tight_layout()
        path = f"{stem}_{suffix}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def _smooth(values, window: int):
    if len(values) < window:
        return np.asarray(values, dtype=float)
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def save_training_curves(records, path, window: int = 50) -> str:
    """Episode length and loss trajectories from the per-epoch log."""
    epochs = [r.epoch for r in records]
    turns = [r.turns for r in records]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    top.plot(epochs, turns, alpha=0.25, label="turns")
    smoothed = _smooth(turns, window)
    if len(smoothed) and len(smoothed) != len(turns):
        top.plot(range(window, window + len(smoothed)), smoothed,
                 label=f"turns ({window}-epoch mean)")
    top.set_ylabel("questions per episode")
    top.legend()
    for name in ("policy_loss", "value_loss", "reward_loss"):
        bottom.plot(epochs, [getattr(r, name) for r in records],
                    alpha=0.7, label=name)
    bottom.set_xlabel("epoch")
    bottom.set_ylabel("loss")
    bottom.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
