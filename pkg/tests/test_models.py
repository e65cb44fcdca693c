import math
import unittest

from pydantic import ValidationError

from qcorr.models import CorrEstimate, InstanceFile, Transcript
from qcorr.output import format_number, render_csv


class CorrEstimateTests(unittest.TestCase):
    def test_stderr_identity(self):
        estimate = CorrEstimate.from_sum(300, 1000)
        self.assertAlmostEqual(estimate.mean, 0.3)
        self.assertAlmostEqual(estimate.stderr, math.sqrt((1.0 - 0.09) / 1000))

    def test_single_trial_has_zero_stderr(self):
        self.assertEqual(CorrEstimate.from_sum(-1, 1).stderr, 0.0)

    def test_within(self):
        estimate = CorrEstimate(mean=0.5, stderr=0.01, trials=100)
        self.assertTrue(estimate.within(0.539))
        self.assertFalse(estimate.within(0.55))
        self.assertTrue(estimate.within(0.55, slack=0.02))


class TranscriptTests(unittest.TestCase):
    def test_valid_transcript(self):
        transcript = Transcript(protocol="ort2", alpha=1, beta=-1, message="01")
        self.assertEqual(transcript.message_bits, 2)

    def test_outputs_and_bits_are_validated(self):
        with self.assertRaises(ValidationError):
            Transcript(protocol="ort2", alpha=0, beta=1)
        with self.assertRaises(ValidationError):
            Transcript(protocol="ort2", alpha=1, beta=1, message="0x")


class InstanceFileTests(unittest.TestCase):
    def test_observable_shape_is_checked(self):
        pair = [0.0, 0.0]
        rho = [[pair] * 4 for _ in range(4)]
        with self.assertRaises(ValidationError):
            InstanceFile(d=2, rho=rho, A=[[pair] * 2], B=[[pair] * 2] * 2)
        with self.assertRaises(ValidationError):
            InstanceFile(d=2, rho=rho, A=[[[0.0]] * 2] * 2, B=[[pair] * 2] * 2)


class OutputFormatTests(unittest.TestCase):
    def test_full_precision_numbers(self):
        self.assertEqual(float(format_number(0.1)), 0.1)
        self.assertEqual(format_number(1.0 / 3.0), "0.33333333333333331")
        self.assertEqual(format_number(7), "7")
        self.assertEqual(format_number(None), "")

    def test_csv_uses_lf(self):
        self.assertEqual(render_csv(("a", "b"), [(1, 0.5)]), "a,b\n1,0.5\n")


if __name__ == "__main__":
    unittest.main()
