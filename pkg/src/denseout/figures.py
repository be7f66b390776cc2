"""Matplotlib rendering of sweep results next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .benchmark import SlopeFit

__all__ = ["render_fit", "render_fits"]


def render_fit(fit: SlopeFit, path: str, title: str = "") -> None:
    """Log-log scatter of the fitted points with the fitted power law."""
    xs = np.array([p[0] for p in fit.points], dtype=float)
    ys = np.array([p[1] for p in fit.points], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(xs, ys, "o", label="measured")
    grid = np.geomspace(xs.min(), xs.max(), 64)
    line = 10.0**fit.intercept * grid**fit.slope
    ax.loglog(
        grid, line, "-",
        label=f"slope {fit.slope:+.2f} (r$^2$={fit.r_squared:.3f})",
    )
    ax.set_xlabel(fit.x_name)
    ax.set_ylabel(fit.y_name)
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_fits(fits: dict[str, SlopeFit], prefix: str, title: str = "") -> list[str]:
    """Render every fit of a sweep; returns the written paths."""
    written = []
    for axis, fit in fits.items():
        path = f"{prefix}_{axis}.png"
        render_fit(fit, path, title=title)
        written.append(path)
    return written
