"""Tests for neural_channel_decoding.core.channel"""
import math
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from neural_channel_decoding.core.channel import (
    ChannelParams,
    InputMode,
    add_awgn,
    bpsk_modulate,
    decoder_input,
    ebn0_to_sigma2,
    make_rng,
    to_llr,
    transmit,
)


class TestEbn0ToSigma2(unittest.TestCase):
    def test_half_rate_at_zero_db(self):
        self.assertAlmostEqual(ebn0_to_sigma2(0.0, 0.5), 1.0)

    def test_ten_db_divides_by_ten(self):
        self.assertAlmostEqual(ebn0_to_sigma2(10.0, 0.5), 0.1)

    def test_rate_one_at_three_db(self):
        self.assertAlmostEqual(ebn0_to_sigma2(3.0, 1.0), 1.0 / (2.0 * 10 ** 0.3))

    def test_infinite_snr_is_noiseless(self):
        self.assertEqual(ebn0_to_sigma2(math.inf, 0.5), 0.0)

    def test_rejects_non_positive_rate(self):
        with self.assertRaises(ValueError):
            ebn0_to_sigma2(1.0, 0.0)

    def test_rejects_nan(self):
        with self.assertRaises(ValueError):
            ebn0_to_sigma2(math.nan, 0.5)

    def test_channel_params(self):
        params = ChannelParams(ebn0_db=0.0, rate=0.5, input_mode='llr')
        self.assertIs(params.input_mode, InputMode.LLR)
        self.assertAlmostEqual(params.noise_variance, 1.0)
        with self.assertRaises(ValueError):
            ChannelParams(ebn0_db=0.0, rate=1.5)


class TestBpsk(unittest.TestCase):
    def test_mapping(self):
        assert_array_equal(bpsk_modulate([0, 1, 1, 0]), [1.0, -1.0, -1.0, 1.0])

    def test_batch(self):
        self.assertEqual(bpsk_modulate(np.zeros((3, 8), dtype=np.uint8)).shape, (3, 8))

    def test_rejects_non_bits(self):
        with self.assertRaises(ValueError):
            bpsk_modulate([0, 2])


class TestAwgn(unittest.TestCase):
    def test_zero_variance_returns_symbols(self):
        symbols = bpsk_modulate([0, 1, 0])
        assert_array_equal(add_awgn(symbols, 0.0, make_rng(0)), symbols)

    def test_noise_statistics(self):
        noise = add_awgn(np.zeros(200_000), 0.25, make_rng(3))
        self.assertAlmostEqual(float(noise.mean()), 0.0, delta=0.01)
        self.assertAlmostEqual(float(noise.var()), 0.25, delta=0.01)

    def test_rejects_negative_variance(self):
        with self.assertRaises(ValueError):
            add_awgn(np.zeros(3), -1.0, make_rng(0))

    def test_same_stream_same_noise(self):
        a = transmit(np.zeros((4, 8), dtype=np.uint8), 1.0, make_rng(5, 1, 2))
        b = transmit(np.zeros((4, 8), dtype=np.uint8), 1.0, make_rng(5, 1, 2))
        assert_array_equal(a, b)

    def test_streams_are_distinct(self):
        a = make_rng(5, 1).standard_normal(4)
        b = make_rng(5, 2).standard_normal(4)
        c = make_rng(6, 1).standard_normal(4)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_noise_draw_count_independent_of_variance(self):
        rng_a, rng_b = make_rng(1), make_rng(1)
        add_awgn(np.zeros(5), 0.0, rng_a)
        add_awgn(np.zeros(5), 2.0, rng_b)
        self.assertEqual(rng_a.standard_normal(), rng_b.standard_normal())


class TestLlr(unittest.TestCase):
    def test_llr_formula(self):
        assert_allclose(to_llr([0.5, -1.0], 0.5), [2.0, -4.0])

    def test_llr_sign_follows_bit_zero(self):
        self.assertGreater(to_llr([1.0], 1.0)[0], 0)

    def test_llr_is_linear_in_received(self):
        received = make_rng(7).standard_normal((3, 8))
        for alpha in (-2.5, 0.0, 0.3, 4.0):
            with self.subTest(alpha=alpha):
                assert_allclose(to_llr(alpha * received, 0.8), alpha * to_llr(received, 0.8), rtol=1e-12)
        other = make_rng(8).standard_normal((3, 8))
        assert_allclose(to_llr(received + other, 0.8), to_llr(received, 0.8) + to_llr(other, 0.8),
                        rtol=1e-12, atol=1e-12)

    def test_llr_needs_positive_variance(self):
        with self.assertRaises(ValueError):
            to_llr([1.0], 0.0)

    def test_decoder_input_modes(self):
        received = np.array([[0.3, -0.7]])
        assert_array_equal(decoder_input(received, 0.5, 'channel'), received)
        assert_allclose(decoder_input(received, 0.5, InputMode.LLR), [[1.2, -2.8]])

    def test_unknown_input_mode(self):
        with self.assertRaises(ValueError):
            InputMode.parse('soft')


if __name__ == "__main__":
    unittest.main()
