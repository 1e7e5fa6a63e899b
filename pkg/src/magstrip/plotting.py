"""Figures for the command line report (written only on request)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["STYLE", "render"]

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.figsize": (4.8, 3.4),
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def _ground1d(rec, tables, ax):
    rows = [r for r in tables["ground1d"] if r["extrapolated"] is not None]
    n = np.array([r["n"] for r in rows], float)
    err = np.abs(np.array([r["e"] for r in rows]) - rec["e"])
    ax.loglog(n, np.maximum(err, 1e-16), "o-")
    ax.set_xlabel("subintervals n")
    ax.set_ylabel("|e(n) - e|")


def _spectrum(rec, tables, ax):
    rows = tables["spectrum"]
    L = [r["L"] for r in rows]
    ax.plot(L, [r["lambda_min"] for r in rows], "o-", label="lowest eigenvalue")
    ax.axhline(rec["e"], color="k", ls="--", label="threshold e")
    ax.axhspan(rec["e"] - rec["margin"], rec["e"], color="0.85", label="margin")
    ax.set_xlabel("box half-length L")
    ax.set_ylabel("energy")
    ax.legend()


def _weyl(rec, tables, ax):
    rows = tables["weyl"]
    k = np.array([r["k"] for r in rows])
    res = np.array([r["residual"] for r in rows])
    ax.loglog(k, res, "o-", label=f"slope {rec['slope']:.3f}")
    ax.loglog(k, res[0] * k[0] / k, "k:", label="1/k")
    ax.set_xlabel("cutoff index k")
    ax.set_ylabel("relative residual")
    ax.legend()


def _hardy(rec, tables, ax):
    rows = tables["hardy"]
    ax.semilogx([r["h"] for r in rows], [r["M"] for r in rows], "o-")
    ax.set_xlabel("spacing h")
    ax.set_ylabel("Hardy estimate M")


def _rotate(rec, tables, ax):
    rows = tables["rotate"]
    for idx in sorted({r["index"] for r in rows}):
        sel = [r for r in rows if r["index"] == idx]
        ax.loglog([r["h"] for r in sel], [r["discrepancy"] for r in sel], "o-", label=f"eigenvalue {idx + 1}")
    h = np.array(sorted({r["h"] for r in rows}))
    top = max(r["discrepancy"] for r in rows)
    ax.loglog(h, top * (h / h.max()) ** 2, "k:", label="h^2")
    ax.set_xlabel("spacing h")
    ax.set_ylabel("relative discrepancy")
    ax.legend()


def _scan(rec, tables, ax):
    rows = tables["scan"]
    eps = [r["eps"] for r in rows]
    ax.semilogx(eps, [r["lambda_no_field"] - r["e"] for r in rows], "o-", label="no field")
    if any(r["lambda_field"] is not None for r in rows):
        ax.semilogx(eps, [(r["lambda_field"] if r["lambda_field"] is not None else np.nan) - r["e"] for r in rows],
                    "s-", label="with field")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("eps")
    ax.set_ylabel("lowest eigenvalue - e")
    ax.legend()


def _certificate(rec, tables, ax):
    rows = tables["certificate"]
    ax.plot([r["r"] for r in rows], [r["flux"] for r in rows], "o-")
    ax.set_xlabel("radius r")
    ax.set_ylabel("flux / 2 pi")
    ax.set_title(f"verdict {rec['verdict']}: {rec['variation']:.3g} vs bound {rec['bound']:.3g}", fontsize=8)


_RENDERERS = {
    "ground1d": _ground1d,
    "spectrum": _spectrum,
    "weyl": _weyl,
    "hardy": _hardy,
    "rotate-check": _rotate,
    "scan": _scan,
    "certificate": _certificate,
}


def render(experiment: str, record: dict, tables: dict, path) -> str:
    """Draw the summary figure of one run into ``path`` (PNG)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[experiment](record, tables, ax)
            fig.savefig(path)
        finally:
            plt.close(fig)
    return str(path)
