"""Ensemble estimators over per-graph trials.

An :class:`EnsembleAccumulator` keeps one :class:`TrialRecord` per graph
(sorted by trial id) plus integer histograms.  Every estimator reduces the
records in trial-id order, so merging shards in any grouping gives results
that are identical to the bit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import AccumulatorError
from .rmt import wigner_cdf
from .spectral import SpectralData, band_edge, counting_function, unfold, y_values
from .walks import WalkCounts

__all__ = [
    "EnsembleMeta",
    "TrialRecord",
    "EnsembleAccumulator",
    "FormFactorEstimate",
    "SpacingHistogram",
    "DensityHistogram",
    "PoissonReport",
    "phase_sums",
    "cyclic_spacings",
    "raw_form_factor",
    "unfolded_form_factor",
    "spacing_histogram",
    "eigenvalue_density",
    "variance_to_mean",
    "variance_to_mean_stderr",
    "variance_to_mean_exact",
    "poisson_check",
    "per_graph_k_tilde",
    "moving_average",
    "merge",
]


@dataclass(frozen=True)
class EnsembleMeta:
    V: int
    d: int
    t_grid: tuple[int, ...] = ()
    exact_tmax: int = 0
    spacing_bin_width: float = 0.1
    spacing_max: float = 4.0
    density_bins: int = 50
    v_eff_policy: str = "V-1-r_c"

    @property
    def spacing_edges(self) -> np.ndarray:
        nb = int(round(self.spacing_max / self.spacing_bin_width))
        return np.linspace(0.0, nb * self.spacing_bin_width, nb + 1)

    @property
    def density_edges(self) -> np.ndarray:
        e = band_edge(self.d)
        return np.linspace(-e, e, self.density_bins + 1)


@dataclass
class TrialRecord:
    trial_id: int
    seed: int
    v_eff: int | None = None
    r_c: int | None = None
    y: np.ndarray | None = None
    k_raw: np.ndarray | None = None   # |sum_j exp(i t phi_j)|^2 / V_eff
    k_unf: np.ndarray | None = None   # |sum_j exp(i t theta_j)|^2 / V_eff
    spacing_mean: float | None = None
    P: tuple[int, ...] | None = None  # exact P_1 .. P_exact_tmax


@dataclass(frozen=True)
class FormFactorEstimate:
    t: int
    tau: float
    value: float
    stderr: float


@dataclass(frozen=True)
class SpacingHistogram:
    bin_edges: np.ndarray
    densities: np.ndarray
    n_samples: int
    n_overflow: int
    mean_spacing: float


@dataclass(frozen=True)
class DensityHistogram:
    bin_edges: np.ndarray
    densities: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class PoissonReport:
    t: int
    lam: float
    mean: float
    variance: float
    stderr_mean: float
    z_mean: float
    var_over_mean: float
    z_var: float
    n_trials: int
    in_regime: bool


def phase_sums(phases: np.ndarray, ts, chunk: int = 4_000_000) -> np.ndarray:
    """``sum_j exp(i t phase_j)`` for each t."""
    ts = np.asarray(ts, dtype=float)
    out = np.empty(ts.size, dtype=complex)
    step = max(1, chunk // max(1, phases.size))
    for a in range(0, ts.size, step):
        out[a:a + step] = np.exp(1j * np.outer(ts[a:a + step], phases)).sum(axis=1)
    return out


def cyclic_spacings(theta: np.ndarray, V_eff: int) -> np.ndarray:
    theta = np.sort(theta)
    prev = np.concatenate([[theta[-1] - 2 * math.pi], theta[:-1]])
    return (V_eff / (2 * math.pi)) * (theta - prev)


@dataclass
class EnsembleAccumulator:
    meta: EnsembleMeta
    records: list[TrialRecord] = field(default_factory=list)
    spacing_counts: np.ndarray | None = None
    spacing_overflow: int = 0
    density_counts: np.ndarray | None = None
    density_total: int = 0
    failed: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.spacing_counts is None:
            self.spacing_counts = np.zeros(self.meta.spacing_edges.size - 1, dtype=np.int64)
        if self.density_counts is None:
            self.density_counts = np.zeros(self.meta.density_bins, dtype=np.int64)

    @property
    def n_trials(self) -> int:
        return len(self.records)

    @property
    def t_grid(self) -> np.ndarray:
        return np.asarray(self.meta.t_grid, dtype=np.int64)

    def add_trial(
        self,
        trial_id: int,
        seed: int,
        spectrum: SpectralData | None = None,
        counts: WalkCounts | None = None,
    ) -> TrialRecord:
        if any(r.trial_id == trial_id for r in self.records):
            raise AccumulatorError(f"trial {trial_id} already accumulated")
        rec = TrialRecord(trial_id, seed)
        if counts is not None:
            rec.P = tuple(counts.P[t] for t in range(1, self.meta.exact_tmax + 1))
        if spectrum is not None:
            self._add_spectrum(rec, spectrum)
        self.records.append(rec)
        self.records.sort(key=lambda r: r.trial_id)
        return rec

    def _add_spectrum(self, rec: TrialRecord, s: SpectralData) -> None:
        meta = self.meta
        rec.v_eff = s.V_eff
        rec.r_c = s.r_c
        nontrivial = np.delete(s.mu, int(np.argmin(np.abs(s.mu - s.d))))
        self.density_counts += np.histogram(nontrivial, bins=meta.density_edges)[0]
        self.density_total += int(nontrivial.size)
        if s.V_eff < 2:
            return
        ts = self.t_grid
        theta = unfold(s)
        if ts.size:
            rec.y = y_values(s, ts, meta.V)
            rec.k_raw = np.abs(phase_sums(s.phi, ts)) ** 2 / s.V_eff
            rec.k_unf = np.abs(phase_sums(theta, ts)) ** 2 / s.V_eff
        sp = cyclic_spacings(theta, s.V_eff)
        rec.spacing_mean = float(sp.mean())
        counts, _ = np.histogram(sp, bins=meta.spacing_edges)
        self.spacing_counts += counts
        self.spacing_overflow += int(sp.size - counts.sum())

    # stacked per-trial arrays, trial-id order
    def _stack(self, name: str) -> np.ndarray:
        rows = [getattr(r, name) for r in self.records if getattr(r, name) is not None]
        if not rows:
            raise AccumulatorError(f"no trials carry {name!r}")
        return np.vstack(rows)

    def v_eff_mean(self) -> float:
        v = [r.v_eff for r in self.records if r.v_eff is not None]
        if not v:
            return float(self.meta.V - 1)
        return float(np.mean(v))

    def tau(self, t) -> np.ndarray | float:
        return np.asarray(t, dtype=float) / self.v_eff_mean()

    def exact_P(self, t: int) -> list[int]:
        if not 1 <= t <= self.meta.exact_tmax:
            raise AccumulatorError(f"exact counts only for t <= {self.meta.exact_tmax}")
        vals = [r.P[t - 1] for r in self.records if r.P is not None]
        if not vals:
            raise AccumulatorError("no exact counts accumulated")
        return vals


def _grid_index(acc: EnsembleAccumulator, t: int) -> int:
    hits = np.flatnonzero(acc.t_grid == t)
    if hits.size == 0:
        raise AccumulatorError(f"t={t} not on the accumulated t-grid")
    return int(hits[0])


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    n = x.shape[0]
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return m, se


def _require(acc: EnsembleAccumulator, minimum: int = 1) -> None:
    if acc.n_trials < minimum:
        if acc.n_trials == 0:
            raise AccumulatorError("empty accumulator")
        raise AccumulatorError(f"need at least {minimum} trials, have {acc.n_trials}")


def raw_form_factor(acc: EnsembleAccumulator, t: int) -> FormFactorEstimate:
    _require(acc)
    col = acc._stack("k_raw")[:, _grid_index(acc, t)]
    m, se = _mean_stderr(col)
    return FormFactorEstimate(t, float(acc.tau(t)), m, se)


def unfolded_form_factor(acc: EnsembleAccumulator, t: int) -> FormFactorEstimate:
    _require(acc)
    if t == 0 and 0 not in acc.meta.t_grid:
        col = np.array([r.v_eff for r in acc.records if r.v_eff is not None], dtype=float)
        if col.size == 0:
            raise AccumulatorError("no spectral trials")
    else:
        col = acc._stack("k_unf")[:, _grid_index(acc, t)]
    m, se = _mean_stderr(col)
    return FormFactorEstimate(t, float(acc.tau(t)), m, se)


def _vtm_columns(acc: EnsembleAccumulator) -> np.ndarray:
    _require(acc, 2)
    return acc._stack("y")


def variance_to_mean(acc: EnsembleAccumulator, t: int) -> float:
    """``V * var(y_t)`` with the unbiased sample variance."""
    y = _vtm_columns(acc)[:, _grid_index(acc, t)]
    return float(acc.meta.V * np.var(y, ddof=1))


def _vtm_all(acc: EnsembleAccumulator) -> tuple[np.ndarray, np.ndarray]:
    y = _vtm_columns(acc)
    n = y.shape[0]
    dev = y - y.mean(axis=0)
    s2 = (dev**2).sum(axis=0) / (n - 1)
    # standard error of the sample variance from the fourth central moment
    m4 = (dev**4).mean(axis=0)
    var_s2 = np.clip(m4 - s2**2 * (n - 3) / (n - 1), 0.0, None) / n
    V = acc.meta.V
    return V * s2, V * np.sqrt(var_s2)


def variance_to_mean_stderr(acc: EnsembleAccumulator, t: int) -> float:
    _, se = _vtm_all(acc)
    return float(se[_grid_index(acc, t)])


def variance_to_mean_exact(acc: EnsembleAccumulator, t: int) -> float:
    """``(1/V) var(P_t) / (d-1)^t`` from exact integer counts."""
    P = acc.exact_P(t)
    n = len(P)
    if n < 2:
        raise AccumulatorError("need at least 2 trials")
    s1 = sum(P)
    s2 = sum(p * p for p in P)
    var = Fraction(n * s2 - s1 * s1, n * (n - 1))
    return float(var / (acc.meta.V * (acc.meta.d - 1) ** t))


def poisson_check(acc: EnsembleAccumulator, t: int) -> PoissonReport:
    V, d = acc.meta.V, acc.meta.d
    in_regime = t < math.log(V) / math.log(d - 1)
    if not in_regime:
        warnings.warn(f"t={t} is outside the Poisson regime t < log_(d-1) V", stacklevel=2)
    P = acc.exact_P(t)
    n = len(P)
    C = np.array([Fraction(p, 2 * t) for p in P], dtype=object)
    lam = (d - 1) ** t / (2 * t)
    mean = float(sum(C) / n)
    if n > 1:
        var = float(sum((c - sum(C) / n) ** 2 for c in C) / (n - 1))
        se_mean = math.sqrt(var / n)
        z_mean = (mean - lam) / math.sqrt(lam / n)
        vom = var / mean if mean > 0 else math.nan
        # under Poisson(lam): var(s^2) ~ (lam + 2 lam^2) / n
        z_var = (var - lam) / math.sqrt((lam + 2 * lam * lam) / n)
    else:
        var = se_mean = z_mean = vom = z_var = math.nan
    return PoissonReport(t, lam, mean, var, se_mean, z_mean, vom, z_var, n, in_regime)


def spacing_histogram(acc: EnsembleAccumulator) -> SpacingHistogram:
    _require(acc)
    edges = acc.meta.spacing_edges
    counts = acc.spacing_counts
    n_in = int(counts.sum())
    if n_in == 0:
        raise AccumulatorError("no spacings accumulated")
    dens = counts / (n_in * np.diff(edges))
    means = [r.spacing_mean for r in acc.records if r.spacing_mean is not None]
    return SpacingHistogram(edges, dens, n_in + acc.spacing_overflow, acc.spacing_overflow,
                            float(np.mean(means)))


def eigenvalue_density(acc: EnsembleAccumulator) -> DensityHistogram:
    _require(acc)
    if acc.density_total == 0:
        raise AccumulatorError("no eigenvalues accumulated")
    edges = acc.meta.density_edges
    return DensityHistogram(edges, acc.density_counts / (acc.density_total * np.diff(edges)),
                            acc.density_total)


def kesten_mckay_bin_average(edges: np.ndarray, d: int) -> np.ndarray:
    """Mean Kesten-McKay density over each bin of ``mu`` edges inside the band."""
    e = band_edge(d)
    phi = np.arccos(np.clip(np.asarray(edges) / e, -1.0, 1.0))
    cdf = 1.0 - counting_function(phi, d, 1.0)
    return np.diff(cdf) / np.diff(edges)


def wigner_bin_average(edges: np.ndarray) -> np.ndarray:
    return np.diff(wigner_cdf(edges)) / np.diff(edges)


def per_graph_k_tilde(s: SpectralData, ts, V: int | None = None) -> np.ndarray:
    """Single-graph raw form factor over the symmetric phase set ``{+phi, -phi}``.

    Includes the non-phase terms of ``y_t`` so that it equals ``(V/2) y_t^2``
    algebraically; computed from complex exponentials, independently of the
    cosine route used by :func:`regwalks.spectral.y_values`.
    """
    ts = np.asarray(ts, dtype=np.int64)
    V = s.V if V is None else V
    d = s.d
    damp = (d - 1.0) ** (-ts / 2.0)
    parity = 1.0 + np.where(ts % 2 == 0, 1.0, -1.0)
    extra = damp + 0.5 * (d - 2) * V * damp * parity
    both = np.concatenate([s.phi, -s.phi])
    total = phase_sums(both, ts) + extra
    return np.abs(total) ** 2 / (2.0 * V)


def moving_average(x, w: int) -> np.ndarray:
    """Centered moving average over ``w`` points; windows shrink at the ends."""
    x = np.asarray(x, dtype=float)
    if w <= 1:
        return x.copy()
    half = w // 2
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(x.size)
    lo = np.clip(idx - half, 0, x.size)
    hi = np.clip(idx + half + 1, 0, x.size)
    return (c[hi] - c[lo]) / (hi - lo)


def merge(a: EnsembleAccumulator, b: EnsembleAccumulator) -> EnsembleAccumulator:
    if a.meta != b.meta:
        raise AccumulatorError(f"metadata mismatch: {a.meta} vs {b.meta}")
    ids_a = {r.trial_id for r in a.records}
    dup = ids_a.intersection(r.trial_id for r in b.records)
    if dup:
        raise AccumulatorError(f"trial ids present in both accumulators: {sorted(dup)[:5]}")
    records = sorted(a.records + b.records, key=lambda r: r.trial_id)
    return EnsembleAccumulator(
        a.meta,
        records,
        a.spacing_counts + b.spacing_counts,
        a.spacing_overflow + b.spacing_overflow,
        a.density_counts + b.density_counts,
        a.density_total + b.density_total,
        sorted(a.failed + b.failed),
    )
