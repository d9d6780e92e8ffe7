"""Seeded ensemble experiments: config, trial pipeline, sharded execution, outputs.

Trial ``i`` uses seed ``base_seed + i`` (mod 2**64).  Trials are cut into
fixed-size shards independent of the worker count; each shard accumulates
its trials in id order and shards are merged in ascending order.  Because
every estimator reduces per-trial records in trial-id order, the CSV output
does not depend on ``workers``.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, GenerationError, RegwalksError, SpectralError
from .graphs import PAIRING_MAX_DEGREE, generate_regular
from .rmt import f_coe, k_coe, predictions_csv, predictions_table
from .spectral import spectral_data
from .statistics import (
    AccumulatorError,
    EnsembleAccumulator,
    EnsembleMeta,
    _vtm_all,
    eigenvalue_density,
    kesten_mckay_bin_average,
    merge,
    moving_average,
    poisson_check,
    spacing_histogram,
    variance_to_mean_exact,
    wigner_bin_average,
)
from .walks import build_hashimoto, count_periodic_exact

log = logging.getLogger(__name__)

TASKS = ("spacing", "formfactor", "vtm", "poisson", "predictions", "density")
SPECTRAL_TASKS = {"spacing", "formfactor", "vtm", "density"}
DEFAULT_TASKS = ("spacing", "formfactor", "vtm", "poisson", "predictions")
_SEED_MOD = 2**64


class TrialError(RegwalksError, RuntimeError):
    def __init__(self, trial_id: int, cause: BaseException):
        self.trial_id = trial_id
        super().__init__(f"trial {trial_id}: {type(cause).__name__}: {cause}")


@dataclass
class ExperimentConfig:
    V: int = 1000
    d: int = 3
    n_trials: int = 100
    t_max: int = 2000
    t_grid: list[int] | None = None
    base_seed: int = 1
    workers: int = 1
    outputs: str = "out"
    tasks: list[str] = field(default_factory=lambda: list(DEFAULT_TASKS))
    sampler: str = "auto"
    shard_size: int = 8
    exact_tmax: int | None = None
    spacing_bin_width: float = 0.1
    spacing_max: float = 4.0
    density_bins: int = 50
    smoothing_window: int = 1
    quad_tol: float = 1e-10
    pred_tau_min: float = 1e-3
    pred_tau_max: float = 10.0
    pred_points: int = 200
    plots: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.d < 3:
            raise ConfigError(f"d={self.d} must be >= 3")
        if self.V <= self.d:
            raise ConfigError(f"need V > d, got V={self.V}, d={self.d}")
        if (self.V * self.d) % 2:
            raise ConfigError(f"V*d = {self.V * self.d} must be even")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if self.t_max < 3:
            raise ConfigError("t_max must be >= 3")
        if not 0 <= self.base_seed < _SEED_MOD:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        if self.shard_size < 1:
            raise ConfigError("shard_size must be >= 1")
        bad = set(self.tasks) - set(TASKS)
        if bad:
            raise ConfigError(f"unknown tasks {sorted(bad)}; choose from {TASKS}")
        if self.t_grid is not None and any(int(t) < 0 for t in self.t_grid):
            raise ConfigError("t_grid entries must be nonnegative")
        if self.exact_tmax is not None and self.exact_tmax < 0:
            raise ConfigError("exact_tmax must be >= 0")
        if self.spacing_bin_width <= 0 or self.spacing_max <= 0 or self.density_bins < 1:
            raise ConfigError("histogram parameters must be positive")
        if self.smoothing_window < 1:
            raise ConfigError("smoothing_window must be >= 1")
        if self.sampler not in ("auto", "pairing", "steger_wormald"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")

    def trial_seed(self, i: int) -> int:
        return (self.base_seed + i) % _SEED_MOD

    def resolved_exact_tmax(self) -> int:
        if "poisson" not in self.tasks:
            return 0
        if self.exact_tmax is not None:
            return self.exact_tmax
        # largest t < log_{d-1} V, kept small so exact counting stays cheap
        limit = math.log(self.V) / math.log(self.d - 1)
        t = math.ceil(limit) - 1
        return int(min(max(t, 3), 8))

    def resolved_t_grid(self) -> tuple[int, ...]:
        if not {"formfactor", "vtm"} & set(self.tasks):
            return ()
        if self.t_grid is not None:
            return tuple(sorted({int(t) for t in self.t_grid}))
        return tuple(range(3, self.t_max + 1))

    def meta(self) -> EnsembleMeta:
        return EnsembleMeta(
            V=self.V,
            d=self.d,
            t_grid=self.resolved_t_grid(),
            exact_tmax=self.resolved_exact_tmax(),
            spacing_bin_width=self.spacing_bin_width,
            spacing_max=self.spacing_max,
            density_bins=self.density_bins,
        )


def run_shard(cfg: ExperimentConfig, meta: EnsembleMeta, trial_ids) -> EnsembleAccumulator:
    acc = EnsembleAccumulator(meta)
    need_spectrum = bool(SPECTRAL_TASKS & set(cfg.tasks))
    for i in trial_ids:
        seed = cfg.trial_seed(i)
        try:
            g = generate_regular(cfg.V, cfg.d, seed, sampler=cfg.sampler)
            counts = (
                count_periodic_exact(build_hashimoto(g), meta.exact_tmax)
                if meta.exact_tmax else None
            )
            s = spectral_data(g) if need_spectrum else None
        except (GenerationError, SpectralError) as exc:
            # dropped, never retried with another seed
            acc.failed.append((i, f"{type(exc).__name__}: {exc}"))
            continue
        except RegwalksError as exc:
            raise TrialError(i, exc) from exc
        acc.add_trial(i, seed, s, counts)
    return acc


def _shards(n_trials: int, size: int) -> list[list[int]]:
    return [list(range(a, min(a + size, n_trials))) for a in range(0, n_trials, size)]


def simulate(cfg: ExperimentConfig) -> EnsembleAccumulator:
    """Run all trials and return the merged accumulator."""
    cfg.validate()
    meta = cfg.meta()
    shards = _shards(cfg.n_trials, cfg.shard_size)
    workers = cfg.workers or os.cpu_count() or 1
    if workers == 1 or len(shards) == 1:
        parts = [run_shard(cfg, meta, ids) for ids in shards]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(shards))) as pool:
            parts = list(pool.map(run_shard, [cfg] * len(shards), [meta] * len(shards), shards))
    total = EnsembleAccumulator(meta)
    for part in parts:
        total = merge(total, part)
    return total


# ---------------------------------------------------------------- tables

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _csv(columns: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


FORMFACTOR_COLUMNS = [
    "t", "tau", "K_raw", "K_raw_stderr", "K_unfolded", "K_unfolded_stderr",
    "vtm", "vtm_stderr", "F_COE_pred", "K_COE_pred",
]
SPACING_COLUMNS = ["s_lo", "s_hi", "density", "wigner_ref"]
DENSITY_COLUMNS = ["mu_lo", "mu_hi", "density", "km_ref"]
POISSON_COLUMNS = [
    "t", "lambda", "mean_C", "var_C", "stderr_mean", "z_mean",
    "var_over_mean", "z_var", "vtm_exact", "two_tau",
]


def formfactor_rows(acc: EnsembleAccumulator, window: int = 1, quad_tol: float = 1e-10) -> list[dict]:
    ts = acc.t_grid
    n = acc.n_trials
    if ts.size == 0 or n == 0:
        return []
    tau = np.asarray(acc.tau(ts), dtype=float)

    def mean_se(name):
        x = acc._stack(name)
        m = x.mean(axis=0)
        se = x.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(ts.size, np.nan)
        return moving_average(m, window), moving_average(se, window)

    kr, kr_se = mean_se("k_raw")
    ku, ku_se = mean_se("k_unf")
    if n > 1:
        vtm, vtm_se = _vtm_all(acc)
        vtm, vtm_se = moving_average(vtm, window), moving_average(vtm_se, window)
    else:
        vtm = vtm_se = np.full(ts.size, np.nan)
    rows = []
    for i, t in enumerate(ts.tolist()):
        tt = float(tau[i])
        rows.append({
            "t": t,
            "tau": tt,
            "K_raw": kr[i], "K_raw_stderr": kr_se[i],
            "K_unfolded": ku[i], "K_unfolded_stderr": ku_se[i],
            "vtm": vtm[i], "vtm_stderr": vtm_se[i],
            "F_COE_pred": f_coe(tt, acc.meta.d, quad_tol).f_coe if tt > 0 else 0.0,
            "K_COE_pred": k_coe(tt) if tt > 0 else 0.0,
        })
    return rows


def spacing_rows(acc: EnsembleAccumulator) -> list[dict]:
    h = spacing_histogram(acc)
    ref = wigner_bin_average(h.bin_edges)
    return [
        {"s_lo": lo, "s_hi": hi, "density": dens, "wigner_ref": r}
        for lo, hi, dens, r in zip(h.bin_edges[:-1], h.bin_edges[1:], h.densities, ref)
    ]


def density_rows(acc: EnsembleAccumulator) -> list[dict]:
    h = eigenvalue_density(acc)
    ref = kesten_mckay_bin_average(h.bin_edges, acc.meta.d)
    return [
        {"mu_lo": lo, "mu_hi": hi, "density": dens, "km_ref": r}
        for lo, hi, dens, r in zip(h.bin_edges[:-1], h.bin_edges[1:], h.densities, ref)
    ]


def poisson_rows(acc: EnsembleAccumulator) -> list[dict]:
    rows = []
    V = acc.meta.V
    for t in range(3, acc.meta.exact_tmax + 1):
        with warnings.catch_warnings():
            # out-of-regime rows are still reported
            warnings.simplefilter("ignore")
            rep = poisson_check(acc, t)
        try:
            vtm = variance_to_mean_exact(acc, t)
        except AccumulatorError:
            vtm = None
        rows.append({
            "t": t, "lambda": rep.lam, "mean_C": rep.mean, "var_C": rep.variance,
            "stderr_mean": rep.stderr_mean, "z_mean": rep.z_mean,
            "var_over_mean": rep.var_over_mean, "z_var": rep.z_var,
            "vtm_exact": vtm, "two_tau": 2 * t / V,
        })
    return rows


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _versions() -> dict:
    import matplotlib
    import scipy
    return {
        "regwalks": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


def run(cfg: ExperimentConfig) -> dict:
    """Simulate, then write CSVs, SVGs and ``manifest.json`` under ``cfg.outputs``.

    Returns the manifest dictionary.
    """
    from .plotting import emit_plot, read_csv_text

    start = time.perf_counter()
    cfg.validate()
    out = Path(cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, bytes] = {}
    manifest = {
        "config": cfg.to_dict(),
        "seeds": {
            "base_seed": cfg.base_seed,
            "rule": "trial_seed = (base_seed + trial_index) mod 2**64",
            "rng": "numpy.random.default_rng (PCG64)",
            "sampler": cfg.sampler if cfg.sampler != "auto" else (
                "pairing" if cfg.d <= PAIRING_MAX_DEGREE else "steger_wormald"),
        },
        "versions": _versions(),
    }

    tasks = set(cfg.tasks)
    acc = None
    if tasks - {"predictions"}:
        acc = simulate(cfg)
        manifest["n_trials_requested"] = cfg.n_trials
        manifest["n_trials_ok"] = acc.n_trials
        manifest["failed_trials"] = [{"trial": i, "reason": r} for i, r in acc.failed]
        if acc.failed:
            log.warning("%d trial(s) dropped", len(acc.failed))

    if acc is not None and acc.n_trials:
        if {"formfactor", "vtm"} & tasks:
            rows = formfactor_rows(acc, cfg.smoothing_window, cfg.quad_tol)
            files["formfactor.csv"] = _csv(FORMFACTOR_COLUMNS, rows).encode()
        if "spacing" in tasks:
            files["spacing.csv"] = _csv(SPACING_COLUMNS, spacing_rows(acc)).encode()
        if "density" in tasks:
            files["density.csv"] = _csv(DENSITY_COLUMNS, density_rows(acc)).encode()
        if "poisson" in tasks and acc.meta.exact_tmax >= 3:
            files["poisson.csv"] = _csv(POISSON_COLUMNS, poisson_rows(acc)).encode()
    if "predictions" in tasks:
        taus = np.geomspace(cfg.pred_tau_min, cfg.pred_tau_max, cfg.pred_points)
        files["predictions.csv"] = predictions_csv(
            predictions_table(taus, cfg.d, cfg.quad_tol)).encode()

    if cfg.plots:
        plots = {
            "spacing.csv": [("spacing", "spacing.svg")],
            "formfactor.csv": [("formfactor", "formfactor.svg")],
            "density.csv": [("density", "density.svg")],
        }
        if "vtm" in tasks:
            plots["formfactor.csv"] += [("vtm", "vtm.svg"), ("collapse", "collapse.svg")]
        for src, kinds in plots.items():
            if src not in files:
                continue
            table = read_csv_text(files[src].decode())
            if not table or len(next(iter(table.values()))) == 0:
                continue
            for kind, name in kinds:
                data = {cfg.d: table} if kind == "collapse" else table
                files[name] = emit_plot(data, kind, d=cfg.d).encode()

    for name, data in files.items():
        (out / name).write_bytes(data)
    manifest["files"] = [
        {"name": name, "sha256": _sha256(data), "bytes": len(data)}
        for name, data in sorted(files.items())
    ]
    manifest["wall_time_s"] = time.perf_counter() - start
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
