import math
import unittest

import numpy as np

from qcorr.corrfun import DomainError, h_ort
from qcorr.geom import (
    DegenerateSimplexError,
    SphericalSimplex,
    cone_vertices,
    dihedral_angles,
    edge_lengths,
    girard_area,
    orthant_cone_area,
    orthant_covariance,
    orthant_model,
    orthant_prob_mc,
    schlafli_integrand,
    schlafli_rate,
    tetra_volume,
    wedge_ip,
    wedge_norm,
)

RHOS = (-0.8, -0.3, 0.0, 0.4, 0.9)


class WedgeAndSimplexTests(unittest.TestCase):
    def test_wedge_of_orthonormal_vectors(self):
        e = np.eye(4)
        self.assertAlmostEqual(wedge_ip(e[0], e[1], e[2], e[0], e[1], e[2]), 1.0)
        self.assertAlmostEqual(wedge_ip(e[0], e[1], e[2], e[0], e[1], e[3]), 0.0)
        self.assertAlmostEqual(wedge_norm(e[0], e[1], e[0]), 0.0)

    def test_coordinate_simplex_is_right_angled(self):
        simplex = SphericalSimplex(np.eye(4))
        for value in edge_lengths(simplex).values():
            self.assertAlmostEqual(value, math.pi / 2.0)
        for value in dihedral_angles(simplex).values():
            self.assertAlmostEqual(value, math.pi / 2.0)

    def test_invalid_vertices(self):
        with self.assertRaises(DegenerateSimplexError):
            SphericalSimplex(np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
        with self.assertRaises(DegenerateSimplexError):
            SphericalSimplex(np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
        with self.assertRaises(DegenerateSimplexError):
            dihedral_angles(SphericalSimplex(np.eye(3)))

    def test_girard_octant(self):
        self.assertAlmostEqual(girard_area(*np.eye(3)), math.pi / 2.0, places=12)


class OrthantGeometryTests(unittest.TestCase):
    def test_cholesky_reproduces_covariance(self):
        for rho in (-1.0, -0.5, 0.0, 0.7, 1.0):
            model = orthant_model(2, rho)
            np.testing.assert_allclose(model.cholesky.T @ model.cholesky, orthant_covariance(2, rho), atol=1e-12)
            self.assertEqual(model.dim, 4)

    def test_model_rejects_bad_inputs(self):
        with self.assertRaises(DomainError):
            orthant_model(2, 1.5)
        with self.assertRaises(DomainError):
            orthant_model(-1, 0.5)
        with self.assertRaises(DegenerateSimplexError):
            cone_vertices(2, 1.0)

    def test_cone_vertices_closed_form(self):
        for rho in RHOS:
            s = math.sqrt(3.0 - 3.0 * rho * rho)
            norm = math.sqrt(3.0 - 2.0 * rho * rho)
            expected = np.array(
                [
                    [s, 0.0, 0.0, -rho],
                    [0.0, s, 0.0, -rho],
                    [0.0, 0.0, s, -rho],
                    [0.0, 0.0, 0.0, norm],
                ]
            ) / norm
            np.testing.assert_allclose(cone_vertices(2, rho), expected, rtol=0.0, atol=1e-12)

    def test_dihedral_angles_of_the_orthant_tetrahedron(self):
        for rho in RHOS:
            angles = dihedral_angles(SphericalSimplex(cone_vertices(2, rho)))
            self.assertAlmostEqual(angles[(0, 1)], math.acos(-rho / math.sqrt(3.0)), delta=1e-9)
            self.assertAlmostEqual(angles[(0, 3)], math.pi / 2.0, delta=1e-9)

    def test_girard_area_gives_one_bit_correlation(self):
        for rho in RHOS:
            area = orthant_cone_area(rho)
            self.assertAlmostEqual(8.0 * area / (4.0 * math.pi) - 1.0, h_ort(1, rho), delta=1e-10)

    def test_tetrahedron_volume(self):
        self.assertAlmostEqual(tetra_volume(1.0), math.pi**2 / 4.0, delta=1e-9)
        self.assertAlmostEqual(tetra_volume(-1.0), 0.0, delta=1e-12)
        for rho in RHOS:
            self.assertAlmostEqual(8.0 * tetra_volume(rho) / math.pi**2 - 1.0, h_ort(2, rho), delta=1e-10)

    def test_volume_rate_matches_schlafli_integrand(self):
        step = 1e-5
        for rho in (-0.5, 0.2, 0.6):
            numeric = (tetra_volume(rho + step) - tetra_volume(rho - step)) / (2.0 * step)
            self.assertAlmostEqual(numeric, schlafli_integrand(rho), delta=1e-6)
            self.assertAlmostEqual(schlafli_rate(rho), schlafli_integrand(rho), delta=1e-6)


class OrthantMonteCarloTests(unittest.TestCase):
    def test_two_bit_probability_matches_quadrature(self):
        estimate = orthant_prob_mc(orthant_model(2, 0.5), trials=200_000, seed=3)
        self.assertEqual(estimate.trials, 200_000)
        self.assertLessEqual(abs(estimate.correlation - h_ort(2, 0.5)), 4.0 * estimate.correlation_stderr)

    def test_worker_count_does_not_change_the_estimate(self):
        model = orthant_model(1, -0.3)
        single = orthant_prob_mc(model, trials=300_000, seed=11, workers=1)
        pooled = orthant_prob_mc(model, trials=300_000, seed=11, workers=3)
        self.assertEqual(single, pooled)


if __name__ == "__main__":
    unittest.main()
