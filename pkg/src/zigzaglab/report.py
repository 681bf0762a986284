"""Figure rendering for solve and study reports.

Figures are written to files next to the delimited output; nothing is shown
interactively (Agg backend).
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_solve_figure", "render_study_figure"]


def render_solve_figure(result: dict, path: str) -> str:
    """Two-panel spectrum figure: Laplacian levels and the Dirac axis."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))

    lam = [row["lambda_laplace"] for row in result.get("eigenvalues", [])]
    thr = result.get("threshold_laplacian")
    ax1.plot(range(1, len(lam) + 1), lam, "o", color="tab:blue", ms=5)
    if thr is not None and math.isfinite(thr):
        ax1.axhline(thr, color="tab:red", lw=1.0, ls="--", label="band edge")
        ax1.legend(loc="lower right", fontsize=8)
    ax1.set_xlabel("index")
    ax1.set_ylabel("Dirichlet eigenvalue")
    ax1.set_title("Laplacian spectrum")

    spec = result.get("dirac", {})
    e_t = spec.get("threshold_energy", None)
    if e_t is not None and math.isfinite(e_t):
        span = max([abs(d["energy"]) for d in spec.get("discrete", [])] + [e_t]) * 1.4
        ax2.axhspan(e_t, span, color="0.85")
        ax2.axhspan(-span, -e_t, color="0.85")
    else:
        energies = [d["energy"] for d in spec.get("discrete", [])] or [1.0]
        span = max(abs(e) for e in energies) * 1.4
    ax2.axhline(spec.get("essential_point", 0.0), color="tab:red", lw=1.2,
                label="flat point")
    for d in spec.get("discrete", []):
        ax2.hlines([d["energy"], -d["energy"]], 0.2, 0.8, color="tab:blue", lw=1.5)
    ax2.set_xlim(0, 1)
    ax2.set_xticks([])
    ax2.set_ylabel("energy")
    ax2.set_title("Dirac spectrum")
    ax2.legend(loc="lower right", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_study_figure(study: dict, path: str) -> str:
    """Log-log gap plot with the fitted power law and predictions."""
    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    pts = [p for p in study.get("points", []) if not p.get("censored")]
    cen = [p for p in study.get("points", []) if p.get("censored")]
    x = np.array([p["value"] for p in pts])
    g = np.array([p["gap"] for p in pts])
    ax.loglog(x, g, "o", color="tab:blue", label="measured gap")
    if cen:
        ax.plot([p["value"] for p in cen], [1e-300] * len(cen), "x", color="0.5")
    fit = study.get("fit")
    if fit and len(x):
        xx = np.linspace(x.min(), x.max(), 50)
        ax.loglog(xx, fit["coefficient"] * xx ** fit["exponent"], "-",
                  color="tab:orange",
                  label=f"fit: exponent {fit['exponent']:.2f} +- {fit['half_width']:.2f}")
    for key, style in (("prediction", "--"), ("prediction_alt", ":")):
        pr = study.get(key)
        if pr and len(x):
            yy = np.array([p.get(key) for p in pts], dtype=float)
            if np.all(np.isfinite(yy)) and np.all(yy > 0):
                ax.loglog(x, yy, style, color="tab:green", label=pr.get("label", key))
    ax.set_xlabel(study.get("parameter", "parameter"))
    ax.set_ylabel("threshold gap")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
