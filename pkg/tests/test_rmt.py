import csv
import io
import math

import numpy as np
import pytest
from scipy.integrate import quad

from regwalks.errors import DomainError, InvalidParametersError, QuadratureError
from regwalks.quadrature import adaptive_gauss_legendre
from regwalks.rmt import (
    c_coefficient,
    f_coe,
    f_coe_small_tau,
    k_coe,
    predicted_k_tilde,
    predictions_csv,
    predictions_table,
    wigner_cdf,
    wigner_surmise,
)
from regwalks.spectral import kesten_mckay_phi

# closed-form C(d), evaluated once in extended arithmetic
C_VALUES = {3: -0.21333253711452338, 5: -0.3505411284822975, 10: -0.44065779383931986}


def _k_ref(x):
    # direct textbook form, no log1p / artanh rewriting
    if x <= 1:
        return 2 * x - x * math.log(1 + 2 * x)
    return 2 - x * math.log((2 * x + 1) / (2 * x - 1))


def _f_ref(tau, d):
    """Full-interval scipy oracle: 2 * int_0^pi rho K(tau / (2 pi rho))."""
    def g(phi):
        rho = kesten_mckay_phi(phi, d)
        return rho * _k_ref(tau / (2 * math.pi * rho)) if rho > 0 else 0.0
    return 2 * quad(g, 0, math.pi, limit=400, epsabs=1e-13, epsrel=1e-13)[0]


def test_quadrature_polynomials_exact():
    for k in range(0, 19):
        val, err = adaptive_gauss_legendre(lambda x: x**k, -1.0, 2.0, tol=1e-13)
        assert val == pytest.approx((2.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1), rel=1e-13)


def test_quadrature_kink_and_failure():
    val, _ = adaptive_gauss_legendre(lambda x: np.abs(x - 0.3), 0, 1, breakpoints=(0.3,))
    assert val == pytest.approx(0.5 * 0.09 + 0.5 * 0.49, abs=1e-14)
    with pytest.raises(QuadratureError):
        adaptive_gauss_legendre(lambda x: 1 / np.sqrt(np.abs(x - 0.5)) , 0, 1, tol=1e-14, max_panels=50)


def test_k_coe_values():
    assert k_coe(1.0) == pytest.approx(2 - math.log(3), abs=1e-15)
    assert k_coe(1 - 1e-12) == pytest.approx(2 - math.log(3), abs=1e-10)
    assert k_coe(1 + 1e-12) == pytest.approx(2 - math.log(3), abs=1e-10)
    assert k_coe(0.5) == pytest.approx(1 - 0.5 * math.log(2), abs=1e-15)
    assert abs(k_coe(100.0) - 1) < 1e-4
    for x in (1e-6, 0.01, 0.3, 0.9, 1.5, 3.0, 40.0):
        assert k_coe(x) == pytest.approx(_k_ref(x), rel=1e-12)
    assert k_coe(1e-8) == pytest.approx(2e-8, rel=1e-7)
    with pytest.raises(DomainError):
        k_coe(0.0)


def test_k_coe_monotone():
    x = np.geomspace(1e-5, 1e3, 4000)
    assert np.all(np.diff(k_coe(x)) > 0)


@pytest.mark.parametrize("d", [3, 5, 10])
def test_f_coe_matches_scipy_oracle(d):
    for tau in (0.01, 0.2, 0.7, 1.0, 1.5, 3.0, 8.0):
        p = f_coe(tau, d)
        assert p.f_coe == pytest.approx(_f_ref(tau, d), abs=1e-9)
        assert p.quadrature_error <= 1e-10


@pytest.mark.parametrize("d", [3, 5, 10])
def test_f_coe_limits(d):
    assert f_coe(1000.0, d).f_coe == pytest.approx(2, abs=1e-5)
    tau = 1e-6
    assert f_coe(tau, d).f_coe / (2 * tau) == pytest.approx(1, abs=2e-3)


def test_f_coe_node_doubling():
    for tau in (0.05, 0.8, 2.5):
        a = f_coe(tau, 3, nodes=10).f_coe
        b = f_coe(tau, 3, nodes=20).f_coe
        assert abs(a - b) < 1e-10


def test_f_coe_arguments():
    with pytest.raises(InvalidParametersError):
        f_coe(1.0, 2)
    with pytest.raises(InvalidParametersError):
        f_coe(1.0, 3, tol=1e-14)
    with pytest.raises(DomainError):
        f_coe(-1.0, 3)


def test_predicted_k_tilde():
    assert predicted_k_tilde(0.6, 4) == pytest.approx(f_coe(0.6, 4).f_coe / 2, rel=1e-14)


def test_c_coefficient():
    for d, c in C_VALUES.items():
        assert c_coefficient(d) == pytest.approx(c, rel=1e-12)
    assert c_coefficient(2) == 0.0
    # d -> infinity limit of (d-2)/sqrt(2 d (d-1)) is 1/sqrt(2)
    lim = (2 / math.pi * math.atanh(1 / math.sqrt(2)) - 2 * math.sqrt(2) / (3 * math.pi) - 1) / math.sqrt(2)
    assert c_coefficient(10**8) == pytest.approx(lim, rel=1e-7)


@pytest.mark.parametrize("d", [3, 5, 10])
def test_small_tau_expansion(d):
    for tau in (1e-5, 1e-4, 1e-3):
        assert abs(f_coe(tau, d).f_coe - f_coe_small_tau(tau, d)) < 5 * tau**2
    t1, t2 = 1e-5, 1e-3
    g1 = f_coe(t1, d).f_coe - 2 * t1
    g2 = f_coe(t2, d).f_coe - 2 * t2
    assert math.log(g2 / g1) / math.log(t2 / t1) == pytest.approx(1.5, abs=0.015)


def test_wigner():
    assert quad(wigner_surmise, 0, np.inf)[0] == pytest.approx(1, abs=1e-12)
    assert quad(lambda s: s * wigner_surmise(s), 0, np.inf)[0] == pytest.approx(1, abs=1e-12)
    s = np.linspace(0, 3, 30001)
    assert s[np.argmax(wigner_surmise(s))] == pytest.approx(math.sqrt(2 / math.pi), abs=1e-4)
    for x in (0.3, 1.0, 2.2):
        assert wigner_cdf(x) == pytest.approx(quad(wigner_surmise, 0, x)[0], abs=1e-13)


def test_predictions_csv():
    rows = list(csv.DictReader(io.StringIO(predictions_csv(predictions_table([0.1, 1.0], 3)))))
    assert [float(r["tau"]) for r in rows] == [0.1, 1.0]
    assert float(rows[1]["k_coe"]) == pytest.approx(2 - math.log(3))
