"""
Figures written straight to files.

Figures are built on :class:`matplotlib.figure.Figure` with the Agg canvas,
so nothing touches pyplot state or needs a display.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .fitting import gamma_model_of

STYLE = {
    "font.size": 8,
    "axes.linewidth": 0.6,
    "lines.linewidth": 1.0,
}

DEFAULT_BANDS = (-40.0, 0.0, 20.0, 40.0, 60.0)


def _figure(ncols, nrows=1, width=2.6, height=2.6):
    fig = Figure(figsize=(width * ncols, height * nrows), layout="constrained")
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path, dpi=150):
    fig.savefig(path, dpi=dpi)


def _grid_of(records, L0):
    """``(j, k) -> gamma_hat`` for one band as a masked 2-D array."""
    recs = [r for r in records if r.L0 == L0]
    if not recs:
        return None
    js = np.arange(min(r.j for r in recs), max(r.j for r in recs) + 1)
    ks = np.arange(min(r.k for r in recs), max(r.k for r in recs) + 1)
    G = np.full((js.size, ks.size), np.nan)
    for r in recs:
        G[r.j - js[0], r.k - ks[0]] = r.gamma_hat
    return js, ks, np.ma.masked_invalid(G)


@matplotlib.rc_context(STYLE)
def plot_variogram_contours(path, records, model=None, bands=None, n_levels=8):
    """Empirical (blue) and model (black) variogram contours per first-latitude band.

    Axes are the lon lag (x) and lat lag (y) at bin centers, first minus
    second. ``bands`` are band lower edges; by default those of
    ``DEFAULT_BANDS`` that occur in ``records``, else every band present.
    """
    present = sorted({r.L0 for r in records})
    if bands is None:
        bands = [b for b in DEFAULT_BANDS if b in present] or present
    bands = [b for b in bands if b in present]
    if not bands:
        raise ValueError("no records in the requested bands")
    fig = _figure(len(bands))
    axes = np.atleast_1d(fig.subplots(1, len(bands), squeeze=False)[0])
    for ax, L0 in zip(axes, bands):
        js, ks, G = _grid_of(records, L0)
        X, Y = np.meshgrid(ks + 0.5, js + 0.5)
        levels = np.linspace(0.0, float(G.max()), n_levels + 1)[1:]
        if levels[-1] > 0:
            ax.contour(X, Y, G, levels=levels, colors="tab:blue", linewidths=0.8)
        if model is not None:
            L1 = np.full(X.shape, L0 + 0.5)
            Gm = gamma_model_of(model, L1, np.clip(L1 - Y, -90, 90), X)
            cs = ax.contour(X, Y, Gm, levels=levels if levels[-1] > 0 else n_levels,
                            colors="k", linewidths=0.8)
            ax.clabel(cs, fontsize=6, fmt="%.2g")
        ax.set_title(f"first lat {L0:g} to {L0 + 1:g}")
        ax.set_xlabel("lon lag (deg)")
        ax.set_aspect(1.0 / max(np.cos(np.radians(L0 + 0.5)), 0.2))
    axes[0].set_ylabel("lat lag (deg)")
    _save(fig, path)


def _along_lat(records, L0, js=(-1, 0)):
    """Count-weighted gamma_hat per lon bin over ``j in js`` (second lat near the first)."""
    num, den = defaultdict(float), defaultdict(int)
    for r in records:
        if r.L0 == L0 and r.j in js:
            num[r.k] += r.gamma_hat * r.count
            den[r.k] += r.count
    ks = np.array(sorted(num))
    return ks + 0.5, np.array([num[k] / den[k] for k in ks])


@matplotlib.rc_context(STYLE)
def plot_cross_orbit(path, curves, bands=(0.0, 60.0)):
    """Variograms along a latitude band against lon lag, one curve per orbit lag.

    ``curves`` maps orbit lag ``t`` to its records. Lag 0 is a solid line,
    other lags markers only.
    """
    fig = _figure(1, width=4.5, height=3.0)
    ax = fig.subplots()
    markers = {-1: "o", 1: "+"}
    shades = ["k", "0.55", "tab:blue", "tab:red"]
    for color, L0 in zip(shades, bands):
        for t in sorted(curves):
            x, y = _along_lat(curves[t], L0)
            if not x.size:
                continue
            if t == 0:
                ax.plot(x, y, "-", color=color, label=f"band {L0:g}")
            else:
                ax.plot(x, y, markers.get(t, "x"), color=color, ms=4, mfc="none",
                        label=f"band {L0:g}, lag {t:+d}")
    ax.set_xlabel("lon lag (deg)")
    ax.set_ylabel("semivariance")
    ax.legend(fontsize=6, frameon=False)
    _save(fig, path)


@matplotlib.rc_context(STYLE)
def plot_level25(path, products, offset=0.15):
    """Predicted medians printed at grid points, one colour per orbit.

    Latitudes are shifted by ``offset`` per orbit so overlapping cells stay
    readable.
    """
    if not products:
        raise ValueError("no gridded predictions to plot")
    orbits = sorted({g.orbit_id for g in products})
    shades = ["k", "0.55", "tab:blue", "tab:red", "tab:green"]
    fig = _figure(1, width=7.0, height=2.8)
    ax = fig.subplots()
    for i, oid in enumerate(orbits):
        color = shades[i % len(shades)]
        dy = offset * (i - 0.5 * (len(orbits) - 1))
        for g in products:
            if g.orbit_id == oid:
                ax.text(g.lon, g.lat + dy, f"{g.predicted_median_du:.0f}", color=color,
                        ha="center", va="center", fontsize=6)
    lons = [g.lon for g in products]
    lats = [g.lat for g in products]
    ax.set_xlim(min(lons) - 5, max(lons) + 5)
    ax.set_ylim(min(lats) - 1, max(lats) + 1)
    ax.set_xlabel("longitude (deg)")
    ax.set_ylabel("latitude (deg)")
    ax.set_title("orbits " + ", ".join(str(o) for o in orbits))
    _save(fig, path)
