"""Distribution primitives against independent high-precision oracles."""

import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp

from seqnorm.errors import DomainError
from seqnorm.special import (
    CriticalValueSpec,
    chi_square_cdf,
    chi_square_quantile,
    noncentral_t_cdf,
    std_normal_cdf,
    std_normal_critical,
    student_t_critical,
)


def normal_cdf_oracle(x: float) -> float:
    """High-precision erf evaluation, independent of scipy."""
    with mpmath.workdps(40):
        return float(0.5 * (1 + mpmath.erf(x / mpmath.sqrt(2))))


def bisect(f, lo, hi, tol=1e-13):
    flo = f(lo)
    assert flo * f(hi) <= 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            return mid
        if f(mid) * flo <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestNormal:
    def test_symmetry_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_tail_saturation(self):
        assert abs(std_normal_cdf(40.0) - 1.0) <= 1e-15
        assert std_normal_cdf(-40.0) <= 1e-15

    def test_against_erf_oracle(self):
        for x in (-6.0, -2.5, -0.3, 0.7, 1.6449, 3.2, 5.5):
            assert abs(std_normal_cdf(x) - normal_cdf_oracle(x)) <= 1e-15

    def test_against_trapezoid_integration(self):
        # 10^6-point trapezoid over [-12, 1.6449]
        x = 1.6449
        grid = np.linspace(-12.0, x, 10**6)
        dens = np.exp(-0.5 * grid * grid) / math.sqrt(2 * math.pi)
        est = float(np.trapezoid(dens, grid))
        assert abs(std_normal_cdf(x) - est) <= 1e-9

    def test_critical_median(self):
        assert std_normal_critical(0.5) == 0.0

    def test_critical_at_5_percent(self):
        ref = bisect(lambda z: std_normal_cdf(z) - 0.95, 0.0, 10.0)
        assert abs(std_normal_critical(0.05) - ref) <= 1e-12
        assert abs(std_normal_critical(0.05) - 1.6449) <= 1e-4

    def test_critical_antisymmetry(self):
        for d in (0.01, 0.2, 0.45):
            assert std_normal_critical(d) == pytest.approx(
                -std_normal_critical(1.0 - d), abs=1e-13
            )

    def test_critical_sign(self):
        assert std_normal_critical(0.4) > 0
        assert std_normal_critical(0.6) < 0

    def test_round_trip(self):
        for d in (1e-6, 1e-3, 0.05, 0.3, 0.5, 0.7, 0.95, 1 - 1e-3, 1 - 1e-6):
            z = std_normal_critical(d)
            assert abs(std_normal_cdf(z) - (1.0 - d)) <= 1e-10

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            std_normal_cdf(float("nan"))
        with pytest.raises(DomainError):
            std_normal_cdf(float("inf"))
        for bad in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(DomainError):
                std_normal_critical(bad)

    def test_monotone_on_grid(self):
        xs = np.linspace(-10, 10, 10**4)
        vals = [std_normal_cdf(x) for x in xs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestStudentT:
    def test_median_is_zero(self):
        for dof in (1, 5, 40):
            assert student_t_critical(dof, 0.5) == 0.0

    def test_cauchy_quarter(self):
        # one degree of freedom: tan(pi (1/2 - 1/4)) = 1
        assert abs(student_t_critical(1, 0.25) - 1.0) <= 1e-12

    def test_13_dof_at_5_percent(self):
        def upper_tail(t):
            # numerical integration of the t density
            with mpmath.workdps(30):
                dof = 13
                c = mpmath.gamma((dof + 1) / 2) / (
                    mpmath.sqrt(dof * mpmath.pi) * mpmath.gamma(dof / 2)
                )
                val = mpmath.quad(
                    lambda x: c * (1 + x * x / dof) ** (-(dof + 1) / 2), [t, mpmath.inf]
                )
            return float(val)

        ref = bisect(lambda t: upper_tail(t) - 0.05, 0.0, 10.0, tol=1e-12)
        got = student_t_critical(13, 0.05)
        assert abs(got - ref) <= 1e-10
        assert abs(got - 1.7709) <= 2e-4

    def test_tail_mass_contract(self):
        for dof in (1, 2, 7, 30):
            for d in (0.01, 0.1, 0.4):
                t = student_t_critical(dof, d)
                mass = 0.5 * float(sp.betainc(dof / 2, 0.5, dof / (dof + t * t)))
                assert abs(mass - d) <= 1e-10

    def test_limits_to_normal(self):
        assert abs(
            student_t_critical(10**6, 0.05) - std_normal_critical(0.05)
        ) <= 1e-4

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            student_t_critical(0, 0.1)
        with pytest.raises(DomainError):
            student_t_critical(5, 0.0)


class TestChiSquare:
    def test_at_zero(self):
        for dof in (1, 2, 9):
            assert chi_square_cdf(0.0, dof) == 0.0

    def test_two_dof_closed_form(self):
        assert abs(chi_square_cdf(2.0, 2) - (1.0 - math.exp(-1.0))) <= 1e-13

    def test_against_quadrature_oracle(self):
        with mpmath.workdps(30):
            ref = float(
                mpmath.quad(
                    lambda w: w ** 1.5 * mpmath.exp(-w / 2) / (2 ** 2.5 * mpmath.gamma(2.5)),
                    [0, 10],
                )
            )
        assert abs(chi_square_cdf(10.0, 5) - ref) <= 1e-12

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            chi_square_cdf(-0.1, 3)

    def test_quantile_round_trip(self):
        for dof in (1, 2, 7, 20):
            for x0 in (0.05, 0.8, 3.0, 12.0):
                p = chi_square_cdf(x0, dof)
                if 0.0 < p < 1.0:
                    assert abs(chi_square_quantile(p, dof) - x0) <= 1e-8 * max(1.0, x0)

    def test_quantile_closed_form(self):
        assert abs(chi_square_quantile(1.0 - math.exp(-1.0), 2) - 2.0) <= 1e-10

    def test_quantile_median_oracle(self):
        ref = bisect(lambda x: chi_square_cdf(x, 7) - 0.5, 0.0, 50.0, tol=1e-12)
        assert abs(chi_square_quantile(0.5, 7) - ref) <= 1e-10

    def test_quantile_increasing(self):
        ps = np.linspace(0.01, 0.99, 99)
        qs = [chi_square_quantile(p, 6) for p in ps]
        assert all(b > a for a, b in zip(qs, qs[1:]))

    def test_stochastic_dominance_in_dof(self):
        xs = np.linspace(0.01, 30.0, 200)
        for dof in (1, 3, 8):
            for x in xs:
                assert chi_square_cdf(x, dof) >= chi_square_cdf(x, dof + 2)


class TestNoncentralT:
    def test_central_symmetric(self):
        assert abs(noncentral_t_cdf(0.0, 5, 0.0) - 0.5) <= 1e-9

    def test_reduces_to_central_t(self):
        for dof in (1, 4, 17):
            for x in (-2.5, -0.4, 0.9, 3.1):
                central = float(sp.stdtr(dof, x))
                assert abs(noncentral_t_cdf(x, dof, 0.0) - central) <= 1e-9

    def test_against_monte_carlo(self):
        # 10^8 paired draws via antithetic normals would be slow here; the
        # acceptance suite covers the large-draw check.  4e6 draws give a
        # standard error ~2.4e-4.
        rng = np.random.default_rng(20240817)
        n = 4 * 10**6
        u = rng.standard_normal(n)
        w = rng.chisquare(5, n)
        t = (u + 0.8) / np.sqrt(w / 5)
        est = float(np.mean(t <= 1.0))
        se = math.sqrt(est * (1 - est) / n)
        assert abs(noncentral_t_cdf(1.0, 5, 0.8) - est) <= 4 * se

    def test_against_scipy(self):
        for x, dof, ncp in ((1.0, 5, 0.8), (-2.0, 3, -1.0), (0.3, 12, 2.5)):
            assert abs(noncentral_t_cdf(x, dof, ncp) - float(sp.nctdtr(dof, ncp, x))) <= 1e-9

    def test_infinite_arguments(self):
        assert noncentral_t_cdf(float("inf"), 4, 1.0) == 1.0
        assert noncentral_t_cdf(float("-inf"), 4, 1.0) == 0.0

    def test_monotone_in_x(self):
        xs = np.linspace(-6, 6, 61)
        vals = [noncentral_t_cdf(x, 6, 1.3) for x in xs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestCriticalValueSpec:
    def test_dispatch(self):
        assert CriticalValueSpec(0.05).value() == std_normal_critical(0.05)
        assert CriticalValueSpec(0.05, dof=13).value() == student_t_critical(13, 0.05)

    def test_validation(self):
        with pytest.raises(DomainError):
            CriticalValueSpec(0.0)
        with pytest.raises(DomainError):
            CriticalValueSpec(0.1, dof=0)
