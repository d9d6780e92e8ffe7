"""Random-matrix reference curves for the orthogonal circular ensemble.

``f_coe`` is the variance-to-mean prediction obtained by averaging the COE
form factor over the Kesten-McKay phase density::

    F(tau) = 4 * int_0^{pi/2} rho(phi) K_COE(tau / (2 pi rho(phi))) dphi

where ``rho`` is the Kesten-McKay density in the phase variable.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParametersError
from .quadrature import adaptive_gauss_legendre
from .spectral import kesten_mckay_phi

__all__ = [
    "CoePrediction",
    "k_coe",
    "f_coe",
    "c_coefficient",
    "f_coe_small_tau",
    "predicted_k_tilde",
    "wigner_surmise",
    "wigner_cdf",
    "predictions_table",
    "predictions_csv",
]

_LN3 = math.log(3.0)


@dataclass(frozen=True)
class CoePrediction:
    tau: float
    k_coe: float
    f_coe: float
    quadrature_error: float


def _k_coe_unchecked(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    lo = x < 1.0
    hi = x > 1.0
    xl = x[lo]
    out[lo] = 2 * xl - xl * np.log1p(2 * xl)
    xh = x[hi]
    # tau * ln((2 tau + 1)/(2 tau - 1)) = 2 tau * artanh(1 / (2 tau))
    out[hi] = 2.0 - 2.0 * xh * np.arctanh(0.5 / xh)
    out[~(lo | hi)] = 2.0 - _LN3
    return out


def k_coe(tau):
    """COE form factor; continuous at ``tau = 1`` where it equals ``2 - ln 3``."""
    x = np.asarray(tau, dtype=float)
    if np.any(x <= 0):
        raise DomainError("tau must be positive")
    out = _k_coe_unchecked(np.atleast_1d(x)).reshape(x.shape)
    return out if out.ndim else float(out)


def _kink_phase(tau: float, d: int) -> float | None:
    # phase where tau / (2 pi rho(phi)) = 1; rho increases on [0, pi/2]
    q = tau * d / (4.0 * (d - 1))
    if q >= 1.0:
        return None
    b = 4.0 * (d - 1) / d**2
    u = (1.0 - q) / (1.0 - q * b)
    return math.acos(math.sqrt(u))


def _integrand(tau: float, d: int):
    def g(phi):
        rho = kesten_mckay_phi(phi, d)
        out = np.zeros_like(rho)
        pos = rho > 0
        out[pos] = rho[pos] * _k_coe_unchecked(tau / (2 * math.pi * rho[pos]))
        return out
    return g


def f_coe(tau: float, d: int, tol: float = 1e-10, *, nodes: int = 10) -> CoePrediction:
    if d < 3:
        raise InvalidParametersError("d must be >= 3")
    if tol < 1e-12:
        raise InvalidParametersError("tol must be >= 1e-12")
    tau = float(tau)
    if tau <= 0:
        raise DomainError("tau must be positive")
    kink = _kink_phase(tau, d)
    value, err = adaptive_gauss_legendre(
        _integrand(tau, d), 0.0, math.pi / 2, tol=tol / 4, n=nodes,
        breakpoints=() if kink is None else (kink,),
    )
    return CoePrediction(tau, float(k_coe(tau)), 4 * value, 4 * err)


def predicted_k_tilde(tau: float, d: int, tol: float = 1e-10) -> float:
    """Raw-phase form factor implied by COE statistics after unfolding."""
    return f_coe(tau, d, tol).f_coe / 2


def c_coefficient(d: int) -> float:
    if d < 2:
        raise InvalidParametersError("d must be >= 2")
    r2 = math.sqrt(2.0)
    arccoth_r2 = 0.5 * math.log((r2 + 1) / (r2 - 1))
    bracket = (2 / math.pi) * arccoth_r2 - 2 * r2 / (3 * math.pi) - 1
    return (d - 2) / math.sqrt(2.0 * d * (d - 1)) * bracket


def f_coe_small_tau(tau, d: int):
    if d < 3:
        raise InvalidParametersError("d must be >= 3")
    x = np.asarray(tau, dtype=float)
    out = 2 * x * (1 + c_coefficient(d) * np.sqrt(x))
    return out if out.ndim else float(out)


def wigner_surmise(s):
    s = np.asarray(s, dtype=float)
    out = (math.pi / 2) * s * np.exp(-math.pi * s * s / 4)
    return out if out.ndim else float(out)


def wigner_cdf(s):
    s = np.asarray(s, dtype=float)
    out = -np.expm1(-math.pi * s * s / 4)
    return out if out.ndim else float(out)


def predictions_table(taus, d: int, tol: float = 1e-10) -> list[dict]:
    rows = []
    for tau in taus:
        p = f_coe(float(tau), d, tol)
        rows.append({
            "tau": p.tau,
            "k_coe": p.k_coe,
            "f_coe": p.f_coe,
            "f_small_tau": float(f_coe_small_tau(p.tau, d)),
        })
    return rows


def predictions_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["tau", "k_coe", "f_coe", "f_small_tau"]
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(float(r[c])) for c in cols])
    return buf.getvalue()
