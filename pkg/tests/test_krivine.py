import math
import unittest

import numpy as np

from qcorr.corrfun import h_ort, h_ort2_series
from qcorr.krivine import (
    CoefficientBoundViolation,
    Embedding,
    EmbeddingError,
    InverseSeries,
    as_unit_vector,
    build_embedding,
    default_truncation,
    embed,
    embedded_dimension,
    exact_corr_oracle,
    invert_h,
    standard_embedding,
    standard_inverse,
)
from qcorr.montecarlo import stream
from qcorr.powseries import Series, SeriesError
from qcorr.protocols import Transformed, estimate_correlation, sample_pair_with_rho


class InverseSeriesTests(unittest.TestCase):
    def test_coefficient_bounds_for_both_sources(self):
        for source in ("ort2", "mixed"):
            with self.subTest(source=source):
                inverse = standard_inverse(source, 61)
                self.assertEqual(inverse.violations(), [])
                for degree in range(1, 62, 2):
                    self.assertGreaterEqual(inverse.d[degree], -1e-15)
                    self.assertLessEqual(inverse.d[degree], 1.0 / degree + 1e-12)
                masses = [inverse.partial_mass(k) for k in range(1, 62, 2)]
                self.assertTrue(all(b >= a - 1e-15 for a, b in zip(masses, masses[1:])))
                self.assertLessEqual(masses[-1], 1.0 + 1e-9)

    def test_linear_coefficient_inverts_the_slope(self):
        inverse = standard_inverse("ort2", 61)
        self.assertAlmostEqual(inverse.d[1], math.pi / (2.0 * math.sqrt(3.0)), delta=1e-12)

    def test_inverse_undoes_the_correlation(self):
        inverse = standard_inverse("ort2", 61)
        for rho in (-0.5, 0.1, 0.6):
            self.assertAlmostEqual(h_ort(2, inverse.evaluate(rho)), rho, delta=1e-9)
        self.assertEqual(inverse.evaluate(1.0), 1.0)
        self.assertEqual(inverse.evaluate(-1.0), -1.0)

    def test_two_bit_inverse_tail_is_small(self):
        self.assertLessEqual(standard_inverse("ort2", 61).tail_mass(), 0.05)

    def test_inverse_undoes_the_correlation_on_a_wide_grid(self):
        inverse = standard_inverse("ort2", 61)
        tolerance = 1e-6 + 2.0 * inverse.tail_mass()
        for x in np.linspace(-0.9, 0.9, 19):
            self.assertAlmostEqual(h_ort(2, inverse.evaluate(float(x))), float(x), delta=tolerance)

    def test_positive_cubic_term_breaks_the_bounds(self):
        h = Series.of([0.0, 1.0, 0.0, 0.1])
        with self.assertRaises(CoefficientBoundViolation) as ctx:
            invert_h(h, 5)
        self.assertTrue(ctx.exception.violations)
        relaxed = invert_h(h, 5, strict=False)
        self.assertAlmostEqual(relaxed.d[3], -0.1, delta=1e-12)
        self.assertTrue(relaxed.violations())

    def test_invalid_series(self):
        with self.assertRaises(SeriesError):
            invert_h(Series.of([1.0, 0.0, 1.0]))
        with self.assertRaises(SeriesError):
            invert_h(Series.of([0.0, -1.0, 0.0, 0.1]))

    def test_order_is_respected(self):
        self.assertEqual(invert_h(h_ort2_series(21), 11).order, 11)


class EmbeddingTests(unittest.TestCase):
    def test_default_embedding_for_three_dimensions(self):
        embedding = standard_embedding("ort2", 3)
        self.assertLessEqual(embedding.embedded_dim, 4096)
        self.assertEqual(embedding.degrees, (1, 3, 5, 7))
        self.assertEqual(embedding.embedded_dim, 3 + 27 + 243 + 2187 + 1)
        self.assertEqual(embedding.embedded_dim, embedded_dimension(embedding.inverse, 3, embedding.truncation))
        self.assertAlmostEqual(embedding.bias_bound, 2.0 * embedding.tail_mass)

    def test_embedded_inner_product(self):
        embedding = standard_embedding("ort2", 3)
        for index, rho in enumerate((-0.7, 0.0, 0.6)):
            a, b = sample_pair_with_rho(3, rho, stream(4, index))
            ca, cb = embed(a, embedding), embed(b, embedding)
            self.assertAlmostEqual(np.linalg.norm(ca), 1.0, delta=1e-12)
            inner = float(np.dot(ca, cb))
            expected = embedding.inverse.evaluate(rho, embedding.truncation) + embedding.tail_mass
            self.assertAlmostEqual(inner, expected, delta=1e-12)
            self.assertLessEqual(abs(inner - embedding.inverse.evaluate(rho)), embedding.bias_bound + 1e-12)

    def test_cube_embedding_cubes_the_inner_product(self):
        embedding = Embedding(InverseSeries(Series.of([0.0, 0.0, 0.0, 1.0])), 3, 3)
        self.assertEqual(embedding.tail_mass, 0.0)
        rng = stream(12)
        for _ in range(3):
            a = rng.standard_normal(3)
            b = rng.standard_normal(3)
            a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
            inner = float(np.dot(embed(a, embedding), embed(b, embedding)))
            self.assertAlmostEqual(inner, float(np.dot(a, b)) ** 3, delta=1e-14)

    def test_identity_embedding_keeps_inner_products(self):
        embedding = Embedding(InverseSeries(Series.identity(1)), 4, 1)
        a, b = sample_pair_with_rho(4, -0.35, stream(13))
        self.assertEqual(embedding.embedded_dim, 5)
        self.assertAlmostEqual(float(np.dot(embed(a, embedding), embed(b, embedding))), -0.35, delta=1e-12)

    def test_unit_vector_validation(self):
        np.testing.assert_allclose(as_unit_vector([1.0 + 1e-9, 0.0]), [1.0, 0.0])
        with self.assertRaises(EmbeddingError):
            as_unit_vector([1.1, 0.0])
        with self.assertRaises(EmbeddingError):
            as_unit_vector([1.0, 0.0], dim=3)

    def test_dimension_budget(self):
        inverse = standard_inverse("ort2", 61)
        with self.assertRaises(EmbeddingError):
            build_embedding(inverse, 3, truncation=9, max_dim=4096)
        truncation = default_truncation(inverse, 2, max_dim=200)
        self.assertLessEqual(embedded_dimension(inverse, 2, truncation), 200)


class OracleTests(unittest.TestCase):
    def test_ideal_embedding_has_no_bias(self):
        inverse = standard_inverse("ort2", 61)
        estimate = exact_corr_oracle(0.6, inverse, trials=200_000, seed=5)
        self.assertTrue(estimate.within(0.6), estimate)

    def test_embedded_two_bit_protocol_matches_the_ideal_oracle(self):
        embedding = standard_embedding("ort2", 3)
        a, b = sample_pair_with_rho(3, 0.3, stream(21))
        embedded = estimate_correlation(Transformed(embedding=embedding), a, b, 100_000, seed=22)
        ideal = exact_corr_oracle(0.3, embedding.inverse, trials=100_000, seed=23)
        noise = math.hypot(embedded.stderr, ideal.stderr)
        self.assertLessEqual(abs(embedded.mean - ideal.mean), 4.0 * noise + embedding.bias_bound)

    def test_one_bit_protocol_on_ideal_inputs_follows_its_own_correlation(self):
        inverse = standard_inverse("ort2", 61)
        estimate = exact_corr_oracle(0.3, inverse, k=1, trials=100_000, seed=1)
        self.assertTrue(estimate.within(h_ort(1, inverse.evaluate(0.3))))


if __name__ == "__main__":
    unittest.main()
