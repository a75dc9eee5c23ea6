"""Tests for neural_channel_decoding.core.codebook"""
import unittest
from unittest import mock

import numpy as np
from numpy.testing import assert_array_equal

from neural_channel_decoding.core import codebook as codebook_module
from neural_channel_decoding.core.codebook import (
    CodeFamily,
    CodeParams,
    bhattacharyya_parameters,
    build_random_codebook,
    enumerate_codebook,
    hamming_bound_capacity,
    info_positions,
    is_linear,
    message_bits,
    min_distance,
    polar_encode,
    polar_frozen_set,
    polar_generator_matrix,
    split_codebook,
)
from neural_channel_decoding.core.validation import CapacityError, ConstructionInfeasibleError


def _naive_generator(n):
    g = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        zeros = np.zeros_like(g)
        g = np.block([[g, zeros], [g, g]])
    return g


# ---------------------------------------------------------------------------
# Polar construction
# ---------------------------------------------------------------------------

class TestPolarGeneratorMatrix(unittest.TestCase):
    def test_n1_is_the_kernel(self):
        assert_array_equal(polar_generator_matrix(1), [[1, 0], [1, 1]])

    def test_matches_block_recursion(self):
        for n in range(1, 7):
            with self.subTest(n=n):
                assert_array_equal(polar_generator_matrix(n), _naive_generator(n))

    def test_is_lower_triangular_with_unit_diagonal(self):
        g = polar_generator_matrix(4)
        self.assertTrue(np.all(np.triu(g, 1) == 0))
        self.assertTrue(np.all(np.diag(g) == 1))

    def test_rejects_zero_exponent(self):
        with self.assertRaises(ValueError):
            polar_generator_matrix(0)


class TestFrozenSet(unittest.TestCase):
    def test_bhattacharyya_n2(self):
        np.testing.assert_allclose(bhattacharyya_parameters(2), [0.75, 0.25])

    def test_n8_k4(self):
        self.assertEqual(polar_frozen_set(8, 4), (0, 1, 2, 4))
        assert_array_equal(info_positions(8, (0, 1, 2, 4)), [3, 5, 6, 7])

    def test_n2_k1_freezes_the_worse_channel(self):
        self.assertEqual(polar_frozen_set(2, 1), (0,))

    def test_n4_k2(self):
        np.testing.assert_allclose(bhattacharyya_parameters(4), [0.9375, 0.5625, 0.4375, 0.0625])
        self.assertEqual(polar_frozen_set(4, 2), (0, 1))

    def test_rate_one_freezes_nothing(self):
        self.assertEqual(polar_frozen_set(8, 8), ())

    def test_frozen_set_sizes(self):
        for k in range(0, 17):
            with self.subTest(k=k):
                frozen = polar_frozen_set(16, k)
                self.assertEqual(len(frozen), 16 - k)
                self.assertEqual(list(frozen), sorted(set(frozen)))

    def test_frozen_sets_are_nested(self):
        # Raising k only unfreezes channels.
        for k in range(1, 16):
            self.assertTrue(set(polar_frozen_set(16, k + 1)) <= set(polar_frozen_set(16, k)))


class TestPolarEncode(unittest.TestCase):
    def test_zero_message_encodes_to_zero(self):
        g = polar_generator_matrix(3)
        assert_array_equal(polar_encode(np.zeros(4), (0, 1, 2, 4), g), np.zeros(8))

    def test_single_info_bit_of_n2(self):
        g = polar_generator_matrix(1)
        assert_array_equal(polar_encode([1], (0,), g), [1, 1])

    def test_n4_k2_by_hand(self):
        g = polar_generator_matrix(2)
        assert_array_equal(g, [[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0], [1, 1, 1, 1]])
        assert_array_equal(polar_encode([1, 0], (0, 1), g), [1, 0, 1, 0])

    def test_no_frozen_positions(self):
        assert_array_equal(polar_encode([0, 1], (), polar_generator_matrix(1)), [1, 1])

    def test_batch_matches_rows(self):
        g = polar_generator_matrix(3)
        frozen = polar_frozen_set(8, 4)
        batch = message_bits(4)
        encoded = polar_encode(batch, frozen, g)
        for row, info in zip(encoded, batch):
            assert_array_equal(row, polar_encode(info, frozen, g))

    def test_wrong_info_length(self):
        with self.assertRaises(ValueError):
            polar_encode(np.zeros(3), (0, 1, 2, 4), polar_generator_matrix(3))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

class TestEnumerateCodebook(unittest.TestCase):
    def test_message_bits_are_big_endian(self):
        assert_array_equal(message_bits(3)[5], [1, 0, 1])
        self.assertEqual(message_bits(4).shape, (16, 4))

    def test_polar_16_8_is_linear_and_unique(self):
        codebook = enumerate_codebook(CodeParams(CodeFamily.POLAR, 16, 8))
        self.assertEqual(codebook.codewords.shape, (256, 16))
        self.assertEqual(len({row.tobytes() for row in codebook.codewords}), 256)
        self.assertTrue(is_linear(codebook))
        assert_array_equal(codebook.codewords[0], np.zeros(16))

    def test_polar_8_4_min_distance(self):
        self.assertEqual(min_distance(enumerate_codebook(CodeParams('polar', 8, 4))), 4)

    def test_polar_rate_one_is_all_words(self):
        codebook = enumerate_codebook(CodeParams('polar', 4, 4))
        self.assertEqual(len({row.tobytes() for row in codebook.codewords}), 16)
        self.assertEqual(min_distance(codebook), 1)

    def test_codebook_arrays_are_read_only(self):
        codebook = enumerate_codebook(CodeParams('polar', 8, 4))
        with self.assertRaises(ValueError):
            codebook.codewords[0, 0] = 1

    def test_random_codebook_distance_and_determinism(self):
        params = CodeParams('random', 16, 8, seed=7)
        first = enumerate_codebook(params)
        second = enumerate_codebook(params)
        assert_array_equal(first.codewords, second.codewords)
        self.assertGreaterEqual(min_distance(first), 3)
        self.assertEqual(first.size, 256)

    def test_random_codebooks_differ_by_seed(self):
        a = enumerate_codebook(CodeParams('random', 16, 4, seed=1))
        b = enumerate_codebook(CodeParams('random', 16, 4, seed=2))
        self.assertFalse(np.array_equal(a.codewords, b.codewords))

    def test_random_construction_gives_up(self):
        # Bound lifted; only two 4-bit words fit at distance >= 3.
        with mock.patch.object(codebook_module, 'hamming_bound_capacity', return_value=16), \
                self.assertRaises(ConstructionInfeasibleError) as ctx:
            build_random_codebook(CodeParams('random', 4, 2, seed=0), attempt_budget=200)
        self.assertEqual(ctx.exception.slot, 2)
        self.assertEqual(ctx.exception.budget, 200)

    def test_hamming_bound_capacity(self):
        self.assertEqual(hamming_bound_capacity(7, 3), 16)
        self.assertEqual(hamming_bound_capacity(16, 3), 3855)
        self.assertEqual(hamming_bound_capacity(8, 3), 28)
        self.assertEqual(hamming_bound_capacity(5, 1), 32)

    def test_codes_beyond_the_hamming_bound_fail_before_sampling(self):
        with mock.patch.object(codebook_module.np.random, 'PCG64') as pcg, \
                self.assertRaises(ConstructionInfeasibleError) as ctx:
            build_random_codebook(CodeParams('random', 16, 12, seed=0))
        pcg.assert_not_called()
        self.assertEqual(ctx.exception.slot, 3855)
        self.assertIn("Hamming bound", str(ctx.exception))

    def test_single_codeword_min_distance_sentinel(self):
        codebook = enumerate_codebook(CodeParams('random', 6, 0))
        self.assertEqual(codebook.size, 1)
        self.assertEqual(min_distance(codebook), 7)


class TestCodeParams(unittest.TestCase):
    def test_polar_needs_power_of_two(self):
        with self.assertRaises(ValueError):
            CodeParams('polar', 15, 4)

    def test_k_above_guard_is_capacity_error(self):
        with self.assertRaises(CapacityError):
            CodeParams('random', 32, 17)

    def test_n_above_guard_is_capacity_error(self):
        with self.assertRaises(CapacityError):
            CodeParams('polar', 128, 8)

    def test_k_above_n(self):
        with self.assertRaises(ValueError):
            CodeParams('polar', 8, 9)

    def test_unknown_family(self):
        with self.assertRaises(ValueError):
            CodeParams('ldpc', 8, 4)

    def test_dict_round_trip(self):
        params = CodeParams('random', 16, 8, seed=3)
        self.assertEqual(CodeParams.from_dict(params.to_dict()), params)
        self.assertEqual(params.rate, 0.5)


# ---------------------------------------------------------------------------
# Coverage splits
# ---------------------------------------------------------------------------

class TestSplitCodebook(unittest.TestCase):
    def setUp(self):
        self.codebook = enumerate_codebook(CodeParams('polar', 16, 8))

    def test_sizes_and_partition(self):
        split = split_codebook(self.codebook, 80, seed=0)
        self.assertEqual(len(split.seen), 205)
        self.assertEqual(len(split.unseen), 51)
        self.assertEqual(sorted(split.seen + split.unseen), list(range(256)))
        self.assertEqual(list(split.seen), sorted(split.seen))

    def test_full_coverage_has_no_unseen(self):
        split = split_codebook(self.codebook, 100, seed=0)
        self.assertEqual(len(split.seen), 256)
        self.assertEqual(split.unseen, ())

    def test_deterministic_per_seed(self):
        self.assertEqual(split_codebook(self.codebook, 40, 5), split_codebook(self.codebook, 40, 5))
        self.assertNotEqual(split_codebook(self.codebook, 40, 5).seen,
                            split_codebook(self.codebook, 40, 6).seen)

    def test_rejects_out_of_range_percent(self):
        for percent in (0, -5, 101):
            with self.subTest(percent=percent), self.assertRaises(ValueError):
                split_codebook(self.codebook, percent, 0)

    def test_tiny_percent_selecting_nothing(self):
        small = enumerate_codebook(CodeParams('polar', 4, 2))
        with self.assertRaises(ValueError):
            split_codebook(small, 1, 0)


if __name__ == "__main__":
    unittest.main()
