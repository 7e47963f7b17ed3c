"""Figure rendering for the report paths: every CSV a command emits gets a
PNG sibling. Figures are byte-reproducible for a fixed library version: the
Agg backend only, fixed sizes, and no embedded creation date.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

_SAVE_KW = dict(dpi=120, metadata={"Date": None})


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_rca_figure(rows: list[dict], path) -> None:
    """Accuracy-vs-SNR lines, one per model; conditions keep row order."""
    conditions: list[str] = []
    series: dict[str, dict[str, float]] = {}
    for r in rows:
        if r["snr_db"] not in conditions:
            conditions.append(r["snr_db"])
        series.setdefault(r["model"], {})[r["snr_db"]] = r["rca"]
    fig, ax = plt.subplots(figsize=(6, 4))
    x = range(len(conditions))
    for model in sorted(series):
        y = [series[model].get(c, float("nan")) for c in conditions]
        ax.plot(x, y, marker="o", label=model)
    ax.set_xticks(list(x), conditions)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("RCA (50 cents)")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    _finish(fig, path)


def save_histogram_figure(rows: list[dict], path, bin_hz: float = 10.0) -> None:
    """Voiced reference pitch counts per group, overlaid bars."""
    groups: dict[str, tuple[list, list]] = {}
    for r in rows:
        lows, counts = groups.setdefault(r["group"], ([], []))
        lows.append(r["bin_low_hz"])
        counts.append(r["count"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for group in sorted(groups):
        lows, counts = groups[group]
        ax.bar([v + bin_hz / 2 for v in lows], counts, width=bin_hz * 0.9,
               alpha=0.55, label=group)
    ax.set_xlabel("reference pitch (Hz)")
    ax.set_ylabel("voiced frames")
    ax.legend()
    _finish(fig, path)


def save_lag_error_figure(f0_hz, cents, path) -> None:
    """Worst-case integer-lag quantization error across the pitch range."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(f0_hz, cents)
    ax.axhline(50.0, color="red", linestyle="--", linewidth=1,
               label="50-cent accuracy threshold")
    ax.set_xlabel("f0 (Hz)")
    ax.set_ylabel("worst-case error (cents)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _finish(fig, path)


def save_training_figure(log_rows: list[dict], path) -> None:
    """Loss per step plus held-out accuracy per epoch (when logged)."""
    steps = [r["step"] for r in log_rows if r.get("heldout_rca", "") == ""]
    losses = [r["loss"] for r in log_rows if r.get("heldout_rca", "") == ""]
    epochs = [r["epoch"] for r in log_rows if r.get("heldout_rca", "") != ""]
    rcas = [r["heldout_rca"] for r in log_rows if r.get("heldout_rca", "") != ""]
    fig, axes = plt.subplots(1, 2 if rcas else 1, figsize=(9 if rcas else 6, 4))
    ax0 = axes[0] if rcas else axes
    ax0.plot(steps, losses)
    ax0.set_xlabel("step")
    ax0.set_ylabel("training loss")
    ax0.grid(True, alpha=0.3)
    if rcas:
        axes[1].plot(epochs, rcas, marker="o")
        axes[1].set_xlabel("epoch")
        axes[1].set_ylabel("held-out RCA")
        axes[1].set_ylim(0.0, 1.02)
        axes[1].grid(True, alpha=0.3)
    _finish(fig, path)
