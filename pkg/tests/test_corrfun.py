import math
import unittest

import numpy as np

from qcorr.corrfun import (
    DomainError,
    SignCheckError,
    _finish,
    b_eps_analytic,
    check_h2_coeff_signs,
    check_maj4_signs,
    check_mixed_signs,
    correlation_function,
    g_maj,
    h1_series,
    h_maj,
    h_maj_series,
    h_mixed,
    h_mixed_series,
    h_nocomm,
    h_ort,
    h_ort2_series,
    h_ort_derivative,
    mixing_p,
    series_max_error,
)
from qcorr.models import SignReport


class PointwiseCorrelationTests(unittest.TestCase):
    def test_no_communication_value(self):
        self.assertAlmostEqual(h_nocomm(0.5), 1.0 / 3.0, places=14)

    def test_majority_with_no_message_is_no_communication(self):
        self.assertAlmostEqual(g_maj(0, 0.3), 0.4, places=14)
        grid = np.linspace(-1.0, 1.0, 11)
        np.testing.assert_allclose(h_maj(0, grid), h_nocomm(grid), atol=1e-14)

    def test_majority_rejects_odd_k(self):
        with self.assertRaises(DomainError):
            h_maj(3, 0.2)

    def test_orthant_closed_forms(self):
        self.assertAlmostEqual(h_ort(0, 0.5), h_nocomm(0.5), places=14)
        self.assertAlmostEqual(h_ort(1, 0.5), 4.0 / math.pi * math.asin(0.5 / math.sqrt(2.0)), places=14)

    def test_two_bit_orthant_endpoint(self):
        self.assertAlmostEqual(h_ort(2, 1.0), 1.0, delta=1e-8)
        self.assertAlmostEqual(h_ort(2, -1.0), -1.0, delta=1e-8)
        self.assertEqual(h_ort(2, 0.0), 0.0)

    def test_two_bit_orthant_derivative_matches_finite_difference(self):
        step = 1e-5
        for rho in (-0.6, 0.1, 0.7):
            numeric = (h_ort(2, rho + step) - h_ort(2, rho - step)) / (2.0 * step)
            self.assertAlmostEqual(h_ort_derivative(2, rho), numeric, delta=1e-6)

    def test_orthant_dominates_majority_on_positive_rho(self):
        grid = np.linspace(0.05, 0.95, 19)
        self.assertTrue(np.all(h_ort(2, grid) > h_maj(2, grid)))

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            h_ort(2, 1.5)
        with self.assertRaises(DomainError):
            h_ort(3, 0.5)
        with self.assertRaises(DomainError):
            h_nocomm(float("nan"))

    def test_mixing_probability(self):
        p = mixing_p()
        self.assertAlmostEqual(p, (8.0 - 2.0 * math.pi) / (8.0 + (math.sqrt(6.0) - 2.0) * math.pi), places=12)
        self.assertAlmostEqual(p, 0.182405, delta=1e-5)
        self.assertAlmostEqual(h_mixed(0.4), p * h_ort(1, 0.4) + (1.0 - p) * h_ort(2, 0.4), places=14)

    def test_near_antipodal_gap(self):
        eps = 1e-3
        ratio = b_eps_analytic(eps) / (8.0 * eps / math.pi)
        self.assertGreaterEqual(ratio, 0.99)
        self.assertLessEqual(ratio, 1.01)
        self.assertAlmostEqual(b_eps_analytic(0.1, lambda rho: rho), 0.2, places=14)
        with self.assertRaises(DomainError):
            b_eps_analytic(0.0)


class CorrelationFunctionInvariantTests(unittest.TestCase):
    def test_every_family_is_odd_monotone_and_hits_the_endpoints(self):
        cases = [("nocomm", None), ("maj", 2), ("maj", 4), ("ort", 0), ("ort", 1), ("ort", 2), ("mixed", None)]
        for kind, k in cases:
            with self.subTest(kind=kind, k=k):
                self.assertEqual(correlation_function(kind, k).invariant_violations(points=201), [])

    def test_unknown_family(self):
        with self.assertRaises(DomainError):
            correlation_function("ort", 5)
        with self.assertRaises(DomainError):
            correlation_function("teleport")


class SeriesTests(unittest.TestCase):
    def test_series_match_pointwise_values(self):
        lo, hi = -0.5, 0.5
        self.assertLess(series_max_error(h_ort2_series(41), lambda x: h_ort(2, x), lo, hi), 1e-8)
        self.assertLess(series_max_error(h1_series(41), lambda x: h_ort(1, x), lo, hi), 1e-10)
        self.assertLess(series_max_error(h_mixed_series(41), h_mixed, lo, hi), 1e-8)
        self.assertLess(series_max_error(h_maj_series(2, 41), lambda x: h_maj(2, x), lo, hi), 1e-10)

    def test_linear_coefficients(self):
        self.assertAlmostEqual(h_ort2_series(61)[1], 2.0 * math.sqrt(3.0) / math.pi, delta=1e-9)
        self.assertAlmostEqual(h_maj_series(4, 61)[1], 15.0 / (4.0 * math.pi), delta=1e-9)

    def test_mixed_cubic_coefficient_vanishes(self):
        self.assertAlmostEqual(h_mixed_series(61)[3], 0.0, delta=1e-12)


class SignCheckTests(unittest.TestCase):
    def test_two_bit_orthant_signs(self):
        report = check_h2_coeff_signs(61)
        self.assertTrue(report.passed, report.violations)
        self.assertAlmostEqual(report.constants["H2(0)"], 3.0 - 3.0 * math.pi / 4.0, delta=1e-9)
        self.assertAlmostEqual(report.constants["H2'(0)"], (3.0 + math.pi) / 2.0, delta=1e-9)
        self.assertTrue(all(value < 0.0 for value in report.coefficients["c"][1:]))
        self.assertTrue(all(value >= -1e-13 for value in report.coefficients["H2"]))

    def test_mixed_signs(self):
        report = check_mixed_signs(61)
        self.assertTrue(report.passed, report.violations)
        for name in ("H3(0)", "H3'(0)", "H4(0)"):
            self.assertAlmostEqual(report.constants[name], report.expected[name], delta=1e-9)

    def test_four_bit_majority_signs(self):
        report = check_maj4_signs(41)
        self.assertTrue(report.passed, report.violations)
        self.assertAlmostEqual(report.constants["c3"], 15.0 / (24.0 * math.pi) - 10.0 / math.pi**3, delta=1e-9)

    def test_failed_report_raises_only_when_strict(self):
        report = SignReport(target="demo", order=3, passed=False, violations=["c_3 = 1 is positive"])
        self.assertIs(_finish(report, strict=False), report)
        with self.assertRaises(SignCheckError) as ctx:
            _finish(report, strict=True)
        self.assertIs(ctx.exception.report, report)


if __name__ == "__main__":
    unittest.main()
