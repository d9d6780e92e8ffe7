"""Adjacency spectra, Kesten-McKay reference density, unfolding, and the
trace-formula coefficients ``y_t``.

Phases follow the convention ``mu = 2 sqrt(d-1) cos(phi)`` with ``phi`` in
``[0, pi]``; eigenvalues outside the band ``|mu| <= 2 sqrt(d-1)`` carry
``psi = arccosh(|mu| / 2 sqrt(d-1))`` and the sign of ``mu`` instead.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SpectralError
from .graphs import RegularGraph

__all__ = [
    "SpectralData",
    "FluctuationSeries",
    "adjacency_eigenvalues",
    "split_spectrum",
    "spectral_data",
    "kesten_mckay_mu",
    "kesten_mckay_phi",
    "counting_function",
    "unfold",
    "chebyshev_T",
    "y_series",
    "y_values",
    "reconstruct_density",
    "spectrum_csv",
    "TRIVIAL_TOL",
    "BAND_TOL",
]

TRIVIAL_TOL = 1e-6
BAND_TOL = 1e-10
_CHEB_TOL = 1e-12


def band_edge(d: int) -> float:
    return 2.0 * math.sqrt(d - 1)


@dataclass(frozen=True, eq=False)
class SpectralData:
    mu: np.ndarray        # all V eigenvalues, ascending
    d: int
    trivial: float        # the eigenvalue removed as mu = d
    mu_R: np.ndarray      # in-band eigenvalues, ascending in mu
    phi: np.ndarray       # arccos(mu_R / 2 sqrt(d-1)), same order as mu_R
    mu_Rc: np.ndarray     # out-of-band nontrivial eigenvalues, ascending
    psi: np.ndarray
    rc_sign: np.ndarray   # +1 / -1 per out-of-band eigenvalue

    @property
    def V(self) -> int:
        return int(self.mu.size)

    @property
    def r_c(self) -> int:
        return int(self.mu_Rc.size)

    @property
    def V_eff(self) -> int:
        return self.V - 1 - self.r_c


@dataclass(frozen=True, eq=False)
class FluctuationSeries:
    t: np.ndarray
    y: np.ndarray
    V: int
    d: int

    def as_dict(self) -> dict[int, float]:
        return {int(t): float(v) for t, v in zip(self.t, self.y)}


def adjacency_eigenvalues(g: RegularGraph) -> np.ndarray:
    try:
        mu = np.linalg.eigvalsh(g.adjacency())
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"symmetric eigensolver did not converge: {exc}") from exc
    return np.sort(mu)


def split_spectrum(mu, d: int) -> SpectralData:
    mu = np.sort(np.asarray(mu, dtype=float))
    if mu.size == 0:
        raise SpectralError("empty spectrum")
    k = int(np.argmin(np.abs(mu - d)))
    if abs(mu[k] - d) > TRIVIAL_TOL:
        raise SpectralError(
            f"no eigenvalue within {TRIVIAL_TOL} of d={d} (closest {mu[k]!r})"
        )
    rest = np.delete(mu, k)
    if rest.size and np.any(np.abs(rest - d) <= TRIVIAL_TOL):
        raise SpectralError("eigenvalue d is repeated: graph is disconnected")

    edge = band_edge(d)
    in_band = np.abs(rest) <= edge + BAND_TOL
    mu_R = rest[in_band]
    mu_Rc = rest[~in_band]
    phi = np.arccos(np.clip(mu_R / edge, -1.0, 1.0))
    psi = np.arccosh(np.abs(mu_Rc) / edge)
    rc_sign = np.where(mu_Rc < 0, -1.0, 1.0)
    return SpectralData(mu, d, float(mu[k]), mu_R, phi, mu_Rc, psi, rc_sign)


def spectral_data(g: RegularGraph) -> SpectralData:
    return split_spectrum(adjacency_eigenvalues(g), g.d)


def kesten_mckay_mu(mu, d: int):
    mu = np.asarray(mu, dtype=float)
    edge = band_edge(d)
    if np.any(np.abs(mu) > edge + 1e-12):
        raise DomainError(f"mu outside the band [-{edge}, {edge}]")
    inside = np.clip(4.0 * (d - 1) - mu * mu, 0.0, None)
    out = (d / (2 * math.pi)) * np.sqrt(inside) / (d * d - mu * mu)
    return out if out.ndim else float(out)


def kesten_mckay_phi(phi, d: int):
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi)
    out = (2.0 * (d - 1) / (math.pi * d)) * np.sin(phi) ** 2 / (1.0 - 4.0 * (d - 1) / d**2 * c * c)
    return out if out.ndim else float(out)


def counting_function(phi, d: int, V: float):
    """Mean number of phases below ``phi``; 0 at 0, V/2 at pi/2, V at pi."""
    phi = np.asarray(phi, dtype=float)
    # arctan2(k sin, cos) is arctan(k tan) continued by +pi past pi/2
    branch = np.arctan2(d / (d - 2) * np.sin(phi), np.cos(phi))
    out = V * (d / (2 * math.pi)) * (phi - (d - 2) / d * branch)
    return out if out.ndim else float(out)


def unfold(s: SpectralData, V_eff: int | None = None) -> np.ndarray:
    """Unfolded phases ``theta`` in ``[0, 2 pi)``, ascending."""
    if V_eff is None:
        V_eff = s.V_eff
    theta = (2 * math.pi / V_eff) * counting_function(np.sort(s.phi), s.d, V_eff)
    return np.sort(np.mod(np.atleast_1d(theta), 2 * math.pi))


def chebyshev_T(t: int, x):
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise ValueError("order must be nonnegative")
    if np.any(np.abs(x) > 1 + _CHEB_TOL):
        raise DomainError("Chebyshev argument outside [-1, 1]")
    prev, cur = np.ones_like(x), x.copy()
    if t == 0:
        out = prev
    else:
        for _ in range(t - 1):
            prev, cur = cur, 2 * x * cur - prev
        out = cur
    return out if out.ndim else float(out)


def _phase_cos_sums(phi: np.ndarray, ts: np.ndarray, chunk: int = 4_000_000) -> np.ndarray:
    out = np.empty(ts.size)
    step = max(1, chunk // max(1, phi.size))
    for a in range(0, ts.size, step):
        tt = ts[a:a + step].astype(float)
        out[a:a + step] = np.cos(np.outer(tt, phi)).sum(axis=1)
    return out


def y_values(s: SpectralData, ts, V: int | None = None) -> np.ndarray:
    """``y_t`` on an arbitrary integer grid (Chebyshev form)."""
    ts = np.asarray(ts, dtype=np.int64)
    V = s.V if V is None else V
    d = s.d
    damp = (d - 1.0) ** (-ts / 2.0)
    parity = 1.0 + np.where(ts % 2 == 0, 1.0, -1.0)
    # T_t(cos phi) = cos(t phi)
    osc = _phase_cos_sums(s.phi, ts)
    return damp / V + 0.5 * (d - 2) * damp * parity + (2.0 / V) * osc


def y_series(s: SpectralData, t_max: int, V: int | None = None) -> FluctuationSeries:
    ts = np.arange(3, t_max + 1, dtype=np.int64)
    V = s.V if V is None else V
    return FluctuationSeries(ts, y_values(s, ts, V), V, s.d)


def reconstruct_density(ys: FluctuationSeries, t_cut: int, sigma: float, grid) -> np.ndarray:
    """Kesten-McKay plus the Gaussian-damped oscillatory series up to ``t_cut``."""
    d = ys.d
    mu = np.asarray(grid, dtype=float)
    edge = band_edge(d)
    if np.any(np.abs(mu) >= edge):
        raise DomainError("grid points must lie in the open band")
    out = np.asarray(kesten_mckay_mu(mu, d), dtype=float).copy()
    root = np.sqrt(4.0 * (d - 1) - mu * mu)
    phi = np.arccos(mu / edge)
    for t, y in zip(ys.t, ys.y):
        if t > t_cut:
            break
        w = math.exp(-0.5 * (t * sigma) ** 2)
        out += (y * w / math.pi) * np.cos(t * phi) / root
    return out


def spectrum_csv(s: SpectralData) -> str:
    """Rows ``k, mu_k, class, phi_k, psi_k, theta_k`` in ascending mu."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "mu_k", "class", "phi_k", "psi_k", "theta_k"])
    theta = unfold(s) if s.phi.size else np.array([])
    # unfold sorts by phi, i.e. descending mu
    theta_by_mu = theta[::-1]
    iR = iC = 0
    trivial_done = False
    for k, m in enumerate(s.mu.tolist()):
        if not trivial_done and m == s.trivial:
            w.writerow([k, repr(m), "trivial", "", "", ""])
            trivial_done = True
        elif iR < s.mu_R.size and m == s.mu_R[iR]:
            w.writerow([k, repr(m), "R", repr(float(s.phi[iR])), "", repr(float(theta_by_mu[iR]))])
            iR += 1
        else:
            w.writerow([k, repr(m), "Rc", "", repr(float(s.psi[iC])), ""])
            iC += 1
    return buf.getvalue()
