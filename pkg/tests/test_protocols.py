import math
import unittest

import numpy as np

from qcorr.constants import TRANSCRIPT_BOUND
from qcorr.corrfun import DomainError, b_eps_analytic, h_maj, h_mixed, h_nocomm, h_ort, mixing_p
from qcorr.krivine import standard_embedding
from qcorr.montecarlo import stream
from qcorr.protocols import (
    Majority,
    Mixed,
    MixedRaw,
    NoCommunication,
    Orthant,
    ProtocolError,
    Transformed,
    b_eps_mc,
    compress_to_span,
    estimate_correlation,
    make_protocol,
    run_majority,
    run_mixed,
    run_nocomm,
    run_orthant,
    run_transformed,
    sample_pair_with_rho,
    sample_unit_vector,
    simulate,
    transcript_stats,
)
from qcorr.quantum import CHSH_INPUTS, chsh_vectors

TRIALS = 200_000


def pair(rho, n=3, seed=0):
    return sample_pair_with_rho(n, rho, stream(seed, 99))


class SingleRunTests(unittest.TestCase):
    def test_no_communication_on_equal_and_opposite_inputs(self):
        a = sample_unit_vector(4, stream(1))
        minus_a = -a.components
        for index in range(20):
            same = run_nocomm(a, a, stream(2, index))
            opposite = run_nocomm(a, minus_a, stream(3, index))
            self.assertEqual(same.alpha, same.beta)
            self.assertEqual(opposite.alpha, -opposite.beta)
            self.assertEqual(same.message, "")

    def test_majority_and_orthant_send_exactly_k_bits(self):
        a, b = pair(0.2)
        for index in range(10):
            self.assertEqual(run_majority(2, a, b, stream(4, index)).message_bits, 2)
            self.assertEqual(run_majority(4, a, b, stream(4, index)).message_bits, 4)
            self.assertEqual(run_orthant(3, a, b, stream(5, index)).message_bits, 3)

    def test_equal_inputs_always_agree(self):
        a = sample_unit_vector(3, stream(6))
        for index in range(20):
            self.assertEqual(run_majority(2, a, a, stream(7, index)).alpha * run_majority(2, a, a, stream(7, index)).beta, 1)
            transcript = run_orthant(2, a, a, stream(8, index))
            self.assertEqual(transcript.alpha, transcript.beta)

    def test_transformed_run_on_full_embedding(self):
        embedding = standard_embedding("ort2", 3)
        a, b = pair(0.6)
        transcript = run_transformed(a, b, embedding, stream(9))
        self.assertEqual(transcript.protocol, "transformed")
        self.assertEqual(transcript.message_bits, 2)
        self.assertTrue(set(transcript.message) <= {"0", "1"})

    def test_mixed_run_sends_one_or_two_bits(self):
        a, b = pair(0.3)
        lengths = {run_mixed(a, b, stream(10, index)).message_bits for index in range(60)}
        self.assertTrue(lengths <= {1, 2})
        self.assertIn(2, lengths)

    def test_invalid_configurations(self):
        a, b = pair(0.1)
        with self.assertRaises(ProtocolError):
            run_majority(3, a, b, stream(0))
        with self.assertRaises(ProtocolError):
            run_nocomm(a, np.array([1.0, 0.0]), stream(0))
        with self.assertRaises(ProtocolError):
            run_nocomm([2.0, 0.0], [1.0, 0.0], stream(0))
        with self.assertRaises(ProtocolError):
            make_protocol("teleport")


class CorrelationEstimateTests(unittest.TestCase):
    def check(self, protocol, rho, target, slack=0.0, n=3):
        a, b = pair(rho, n)
        estimate = estimate_correlation(protocol, a, b, TRIALS, seed=17)
        self.assertTrue(estimate.within(target, 4.0, slack), f"{protocol.label} rho={rho}: {estimate} vs {target}")
        return estimate

    def test_no_communication(self):
        self.check(NoCommunication(), 0.5, 1.0 / 3.0)
        estimate = self.check(NoCommunication(), 0.0, 0.0)
        self.assertLessEqual(abs(estimate.mean), 4.0 / math.sqrt(TRIALS))

    def test_majority(self):
        self.check(Majority(k=2), 0.7, h_maj(2, 0.7))
        self.check(Majority(k=0), -0.4, h_nocomm(-0.4))

    def test_orthant(self):
        self.check(Orthant(k=0), 0.3, h_nocomm(0.3))
        self.check(Orthant(k=1), 0.5, 4.0 / math.pi * math.asin(0.5 / math.sqrt(2.0)))
        for rho in (-0.8, 0.25, 0.9):
            self.check(Orthant(k=2), rho, h_ort(2, rho))

    def test_transformed_protocol_reproduces_rho(self):
        protocol = Transformed()
        slack = 2.0 * protocol.tail_mass(3)
        for rho in (-0.5, 0.0, 0.6):
            self.check(protocol, rho, rho, slack)

    def test_transformed_protocol_at_the_endpoints(self):
        a, b = pair(1.0)
        self.assertEqual(estimate_correlation(Transformed(), a, b, 20_000, seed=2).mean, 1.0)
        a, b = pair(-1.0)
        estimate = estimate_correlation(Transformed(), a, b, 20_000, seed=2)
        self.assertTrue(estimate.within(-1.0, 4.0, 2.0 * Transformed().tail_mass(3)))

    def test_mixed_protocols(self):
        protocol = Mixed()
        self.check(protocol, 0.5, 0.5, 2.0 * protocol.tail_mass(3))
        self.check(protocol, 0.0, 0.0, 2.0 * protocol.tail_mass(3))
        self.check(MixedRaw(), 0.4, h_mixed(0.4))

    def test_single_trial_convention(self):
        a, b = pair(0.3)
        estimate = estimate_correlation(Orthant(k=2), a, b, 1, seed=0)
        self.assertIn(estimate.mean, (-1.0, 1.0))
        self.assertEqual(estimate.stderr, 0.0)


class SummaryTests(unittest.TestCase):
    def test_mixed_average_communication(self):
        p = mixing_p()
        a, b = pair(0.2)
        summary = simulate(Mixed(), a, b, TRIALS, seed=4)
        self.assertLessEqual(abs(summary.avg_message_bits - (2.0 - p)), 4.0 * math.sqrt(p * (1.0 - p) / TRIALS))
        self.assertEqual(summary.max_message_bits, 2)

    def test_transformed_worst_case_is_two_bits(self):
        a, b = pair(0.6)
        summary = simulate(Transformed(), a, b, 50_000, seed=8)
        self.assertEqual(summary.max_message_bits, 2)
        self.assertEqual(summary.avg_message_bits, 2.0)
        self.assertAlmostEqual(sum(summary.frequencies.values()), 1.0, places=12)
        self.assertAlmostEqual(summary.bias_bound, 2.0 * summary.tail_mass)

    def test_marginals_are_uniform(self):
        bound = 4.0 * math.sqrt(0.25 / TRIALS)
        for protocol in (NoCommunication(), Majority(k=2), Orthant(k=2), Transformed(), MixedRaw()):
            with self.subTest(protocol=protocol.label):
                a, b = pair(0.45)
                summary = simulate(protocol, a, b, TRIALS, seed=21)
                self.assertLessEqual(abs(summary.alice_plus_rate - 0.5), bound)
                self.assertLessEqual(abs(summary.bob_plus_rate - 0.5), bound)

    def test_rotation_invariance(self):
        rng = stream(30)
        rotation, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        a, b = pair(0.35)
        plain = estimate_correlation(Orthant(k=2), a, b, TRIALS, seed=5)
        rotated = estimate_correlation(Orthant(k=2), rotation @ a.components, rotation @ b.components, TRIALS, seed=6)
        self.assertLessEqual(abs(plain.mean - rotated.mean), 4.0 * math.hypot(plain.stderr, rotated.stderr))

    def test_results_do_not_depend_on_workers(self):
        a, b = pair(0.1)
        single = simulate(Orthant(k=2), a, b, 150_000, seed=12, workers=1)
        pooled = simulate(Orthant(k=2), a, b, 150_000, seed=12, workers=4)
        self.assertEqual(single, pooled)

    def test_no_communication_message_key(self):
        a, b = pair(0.1)
        summary = simulate(NoCommunication(), a, b, 1000, seed=0)
        self.assertEqual(summary.frequencies, {"-": 1.0})


class TranscriptTests(unittest.TestCase):
    def test_transformed_protocol_on_chsh_inputs(self):
        alice, bob = chsh_vectors("explicit")
        inputs = [(alice[i], bob[j]) for i, j in CHSH_INPUTS]
        stats = transcript_stats(Transformed(), inputs, TRIALS, seed=3, bound=TRANSCRIPT_BOUND)
        self.assertTrue(stats.passed)
        self.assertLessEqual(stats.max_frequency, TRANSCRIPT_BOUND + 4.0 * stats.max_frequency_stderr)
        self.assertTrue(all(len(key) == 2 for key in stats.frequencies))
        self.assertAlmostEqual(sum(stats.frequencies.values()), 1.0, places=12)

    def test_silent_protocol_has_a_single_transcript(self):
        alice, bob = chsh_vectors("explicit")
        inputs = [(alice[i], bob[j]) for i, j in CHSH_INPUTS]
        stats = transcript_stats(NoCommunication(), inputs, 4000, seed=3, bound=TRANSCRIPT_BOUND)
        self.assertEqual(stats.max_frequency, 1.0)
        self.assertFalse(stats.passed)


class InputSamplingTests(unittest.TestCase):
    def test_pairs_have_the_requested_inner_product(self):
        rng = stream(40)
        for rho in (-1.0, -0.3, 0.0, 0.8):
            a, b = sample_pair_with_rho(5, rho, rng)
            self.assertAlmostEqual(float(np.dot(a.components, b.components)), rho, delta=1e-12)
        a, b = sample_pair_with_rho(3, 1.0, rng)
        np.testing.assert_array_equal(a.components, b.components)

    def test_pair_sampling_errors(self):
        with self.assertRaises(DomainError):
            sample_pair_with_rho(3, 1.2, stream(0))
        with self.assertRaises(ProtocolError):
            sample_pair_with_rho(1, 0.5, stream(0))

    def test_unit_vectors_are_centred(self):
        rng = stream(41)
        draws = np.array([sample_unit_vector(3, rng).components for _ in range(20_000)])
        np.testing.assert_allclose(np.linalg.norm(draws, axis=1), 1.0, atol=1e-12)
        self.assertTrue(np.all(np.abs(draws.mean(axis=0)) <= 4.0 / math.sqrt(20_000)))

    def test_compression_keeps_inner_products(self):
        rng = stream(42)
        vectors = [sample_unit_vector(50, rng).components for _ in range(3)]
        compressed = compress_to_span(*vectors)
        self.assertEqual(compressed[0].size, 3)
        gram = np.array([[np.dot(u, v) for v in vectors] for u in vectors])
        small = np.array([[np.dot(u, v) for v in compressed] for u in compressed])
        np.testing.assert_allclose(small, gram, atol=1e-12)


class NearAntipodalGapTests(unittest.TestCase):
    def test_monte_carlo_gap_matches_analytic_value(self):
        value, stderr = b_eps_mc(Orthant(k=1), 3, 0.1, TRIALS, seed=9)
        self.assertLessEqual(abs(value - b_eps_analytic(0.1)), 4.0 * stderr)

    def test_gap_needs_positive_eps(self):
        with self.assertRaises(DomainError):
            b_eps_mc(Orthant(k=1), 3, 0.0, 10, seed=0)


if __name__ == "__main__":
    unittest.main()
