"""Static SVG figures: data series against their random-matrix references."""
from __future__ import annotations

import csv
import io

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .rmt import c_coefficient, f_coe, k_coe, wigner_surmise
from .spectral import band_edge, kesten_mckay_mu

__all__ = ["emit_plot", "read_csv_text", "PLOT_KINDS"]

PLOT_KINDS = ("spacing", "formfactor", "vtm", "collapse", "density")

# fixed ids and no timestamp so identical data gives identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "regwalks"


def read_csv_text(text: str) -> dict[str, np.ndarray]:
    """Columns of a CSV as float arrays; blank cells become NaN."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return {}
    header, body = rows[0], rows[1:]
    cols = {}
    for k, name in enumerate(header):
        vals = [r[k] if k < len(r) else "" for r in body]
        cols[name] = np.array([float(v) if v.strip() else np.nan for v in vals])
    return cols


def _svg(fig: Figure) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _require(table, *names):
    if not table:
        raise ValueError("empty table")
    for n in names:
        if n not in table:
            raise ValueError(f"table lacks column {n!r}")
    if len(table[names[0]]) == 0:
        raise ValueError("empty table")


def _marker_kw(n: int) -> dict:
    # isolated points need a visible marker
    return {"marker": "o", "ms": 4 if n < 50 else 1.5, "ls": "-" if n > 1 else "none", "lw": 0.6}


def _spacing(ax, table, d):
    _require(table, "s_lo", "s_hi", "density")
    lo, hi, dens = table["s_lo"], table["s_hi"], table["density"]
    ax.bar(lo, dens, width=hi - lo, align="edge", color="0.8", edgecolor="0.4", label="graphs")
    s = np.linspace(0, float(np.nanmax(hi)), 400)
    ax.plot(s, wigner_surmise(s), "k--", label="COE (Wigner surmise)")
    ax.set_xlabel("s")
    ax.set_ylabel("P(s)")


def _tau_grid(tau):
    tau = tau[np.isfinite(tau) & (tau > 0)]
    if tau.size == 0:
        return tau
    return np.linspace(tau.min(), tau.max(), 400) if tau.size > 1 else tau


def _formfactor(ax, table, d):
    _require(table, "tau", "K_unfolded")
    tau = table["tau"]
    n = tau.size
    ax.plot(tau, table["K_unfolded"], color="C0", label="K (unfolded)", **_marker_kw(n))
    if "K_raw" in table:
        ax.plot(tau, table["K_raw"], color="C1", label="K~ (raw phases)", **_marker_kw(n))
    grid = _tau_grid(tau)
    if grid.size:
        ax.plot(grid, k_coe(grid), "k--", label="K_COE")
        if d is not None:
            ax.plot(grid, [f_coe(x, d).f_coe / 2 for x in grid], "k:", label="F_COE / 2")
    ax.set_xlabel("tau")
    ax.set_ylabel("K(tau)")


def _vtm(ax, table, d):
    _require(table, "tau", "vtm")
    tau = table["tau"]
    ax.plot(tau, table["vtm"], color="C0", label="var(P_t) / (V E P_t)", **_marker_kw(tau.size))
    grid = _tau_grid(tau)
    if grid.size and d is not None:
        ax.plot(grid, [f_coe(x, d).f_coe for x in grid], "k:", label="F_COE")
    elif "F_COE_pred" in table:
        ax.plot(tau, table["F_COE_pred"], "k:", label="F_COE")
    ax.set_xlabel("tau")
    ax.set_ylabel("variance / mean")


def _collapse(ax, tables, d):
    if not tables:
        raise ValueError("empty table")
    all_tau = []
    for k, (deg, table) in enumerate(sorted(tables.items())):
        _require(table, "tau", "vtm")
        tau, vtm = table["tau"], table["vtm"]
        scaled = (vtm - 2 * tau) / (2 * c_coefficient(int(deg)))
        ok = np.isfinite(scaled) & (scaled > 0) & (tau > 0)
        ax.plot(tau[ok], scaled[ok], color=f"C{k}", label=f"d = {deg}", **_marker_kw(int(ok.sum())))
        all_tau.append(tau[ok])
    tau = np.concatenate(all_tau) if all_tau else np.array([])
    if tau.size:
        g = np.geomspace(tau.min(), tau.max(), 200) if tau.size > 1 else tau
        ax.plot(g, g**1.5, "k--", label="tau^(3/2)")
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("tau")
    ax.set_ylabel("(vtm - 2 tau) / (2 C(d))")


def _density(ax, table, d):
    _require(table, "mu_lo", "mu_hi", "density")
    lo, hi = table["mu_lo"], table["mu_hi"]
    ax.bar(lo, table["density"], width=hi - lo, align="edge", color="0.8", edgecolor="0.4",
           label="graphs")
    if d is not None:
        e = band_edge(d)
        mu = np.linspace(-e, e, 600)
        ax.plot(mu, kesten_mckay_mu(mu, d), "k--", label="Kesten-McKay")
    ax.set_xlabel("mu")
    ax.set_ylabel("density")


_DRAW = {
    "spacing": _spacing,
    "formfactor": _formfactor,
    "vtm": _vtm,
    "collapse": _collapse,
    "density": _density,
}


def emit_plot(table, kind: str, d: int | None = None, title: str | None = None) -> str:
    """Render ``table`` (column name -> array) as an SVG document.

    For ``kind="collapse"`` pass a mapping ``degree -> table`` instead.
    """
    if kind not in _DRAW:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.add_subplot()
    _DRAW[kind](ax, table, d)
    if title is None and d is not None and kind != "collapse":
        title = f"{kind} (d = {d})"
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _svg(fig)

