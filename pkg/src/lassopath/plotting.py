"""Figure rendering for path reports.

Renders the coefficient components of a solution path against the
regularization parameter to an image file, next to the delimited output the
CLI already emits.  Import of matplotlib is deferred so plain solves never
pay for it.
"""

from __future__ import annotations

import numpy as np


def save_component_plot(ts, U, outfile, kink_ts=None, title=None) -> None:
    """Write a component plot u_i(t) to `outfile`.

    ts: sampled parameter values; U: matching rows of coefficients,
    shape (len(ts), n).  Kink parameters, when given, are marked with
    vertical lines.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ts = np.asarray(ts, dtype=float)
    U = np.asarray(U, dtype=float)
    order = np.argsort(ts)
    ts, U = ts[order], U[order]

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if kink_ts is not None:
        for tk in kink_ts:
            ax.axvline(tk, color="0.85", linewidth=0.8, zorder=0)
    n = U.shape[1]
    for i in range(n):
        ax.plot(ts, U[:, i], linewidth=1.4, label=f"u{i + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("coefficient")
    if title:
        ax.set_title(title)
    if n <= 12:
        ax.legend(loc="best", fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(outfile, dpi=150)
    plt.close(fig)
