"""Static SVG figures. Hash salt and date metadata are pinned so output bytes are reproducible."""
from __future__ import annotations

import io
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

LABELS = {"qop": "QOP", "lop": "LOP", "lop_clip": "LOP-Clip"}


def _to_svg(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "qop", "svg.fonttype": "path"}):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def figure2_svg(summary) -> str:
    """Mean empirical risk (+/- SE) against kappa, log-log."""
    curves = defaultdict(list)
    for s in summary:
        if not math.isnan(s.avg_risk):
            curves[s.mechanism].append((s.kappa, s.avg_risk, s.se_risk))
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for mech, pts in curves.items():
        pts.sort()
        k, mu, se = zip(*pts)
        ax.errorbar(k, mu, yerr=se, marker="o", ms=4, capsize=2, label=LABELS.get(mech, mech))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"box radius $\kappa$")
    ax.set_ylabel("empirical risk")
    ax.legend()
    ax.grid(True, which="major", alpha=0.3)
    fig.tight_layout()
    return _to_svg(fig)


def figure1_svg(points, title: str) -> str:
    """Optimised bound against epsilon, one line per delta."""
    by_delta = defaultdict(list)
    for p in points:
        if math.isfinite(p.bound):
            by_delta[p.delta].append((p.epsilon, p.bound))
    fig, ax = plt.subplots(figsize=(5, 4))
    for delta in sorted(by_delta):
        e, b = zip(*sorted(by_delta[delta]))
        ax.plot(e, b, marker="o", ms=4, label=rf"$\delta$={delta:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("optimal bound")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _to_svg(fig)
