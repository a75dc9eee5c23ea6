"""Tests for neural_channel_decoding.core.utils and core.validation"""
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from neural_channel_decoding.core.utils import (
    atomic_output,
    derive_seed,
    format_grid,
    incomplete_directory,
    number_label,
    parse_snr_grid,
    snr_grid,
)
from neural_channel_decoding.core.validation import (
    validate_float,
    validate_int,
    validate_percent,
    validate_positive_dims,
    validate_seed,
    validate_sweep_values,
)


# ---------------------------------------------------------------------------
# SNR grids
# ---------------------------------------------------------------------------

class TestSnrGrid(unittest.TestCase):
    def test_inclusive_endpoints(self):
        grid = snr_grid(0.0, 5.0, 11)
        assert_allclose(grid, np.arange(11) * 0.5)

    def test_single_point(self):
        assert_array_equal(snr_grid(4.16, 4.16, 1), [4.16])
        with self.assertRaises(ValueError):
            snr_grid(0.0, 1.0, 1)

    def test_parse_range(self):
        self.assertEqual(len(parse_snr_grid("0:5:20")), 20)

    def test_parse_list(self):
        assert_array_equal(parse_snr_grid("0, 2,4"), [0.0, 2.0, 4.0])

    def test_parse_rejects_unsorted_and_junk(self):
        for text in ("2,1", "0:5", "a,b", "", "1,1"):
            with self.subTest(text=text), self.assertRaises(ValueError):
                parse_snr_grid(text)

    def test_format_grid_parses_back_exactly(self):
        grid = snr_grid(0.0, 5.0, 20)
        assert_array_equal(parse_snr_grid(format_grid(grid)), grid)


class TestLabelsAndSeeds(unittest.TestCase):
    def test_number_label(self):
        self.assertEqual(number_label(1.0), "1")
        self.assertEqual(number_label(4.16), "4p16")
        self.assertEqual(number_label(-2), "m2")

    def test_derive_seed_is_stable_and_keyed(self):
        self.assertEqual(derive_seed(7, 1, 0), derive_seed(7, 1, 0))
        self.assertNotEqual(derive_seed(7, 1, 0), derive_seed(7, 1, 1))
        self.assertNotEqual(derive_seed(7, 1, 0), derive_seed(8, 1, 0))
        self.assertTrue(0 <= derive_seed(7, 3) < 2 ** 64)


# ---------------------------------------------------------------------------
# Atomic outputs
# ---------------------------------------------------------------------------

class TestAtomicOutput(unittest.TestCase):
    def test_file_appears_only_on_success(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            target = Path(temp_dir) / "out.csv"
            with self.assertRaises(RuntimeError):
                with atomic_output(target) as temp_path:
                    temp_path.write_text("partial", encoding="utf-8")
                    raise RuntimeError("boom")
            self.assertFalse(target.exists())
            self.assertEqual(list(Path(temp_dir).iterdir()), [])

            with atomic_output(target) as temp_path:
                self.assertTrue(temp_path.name.endswith(".incomplete"))
                temp_path.write_text("done", encoding="utf-8")
            self.assertEqual(target.read_text(encoding="utf-8"), "done")

    def test_incomplete_directory_is_renamed(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            target = Path(temp_dir) / "run"
            with incomplete_directory(target) as work_dir:
                (work_dir / "a.csv").write_text("x", encoding="utf-8")
                self.assertFalse(target.exists())
            self.assertTrue((target / "a.csv").exists())
            self.assertFalse(Path(temp_dir, "run.incomplete").exists())

    def test_failed_run_leaves_incomplete_directory(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            target = Path(temp_dir) / "run"
            with self.assertRaises(ValueError):
                with incomplete_directory(target):
                    raise ValueError("bad")
            self.assertFalse(target.exists())
            self.assertTrue(Path(temp_dir, "run.incomplete").is_dir())


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------

class TestValidators(unittest.TestCase):
    def test_validate_int(self):
        self.assertEqual(validate_int("12", "x"), 12)
        self.assertEqual(validate_int(3.0, "x"), 3)
        for bad in (True, 2.5, "abc", None):
            with self.subTest(bad=bad), self.assertRaises(ValueError):
                validate_int(bad, "x")
        with self.assertRaises(ValueError):
            validate_int(0, "x", minimum=1)
        with self.assertRaises(ValueError):
            validate_int(9, "x", maximum=8)

    def test_validate_float(self):
        self.assertEqual(validate_float("1.5", "x"), 1.5)
        self.assertEqual(validate_float(math.inf, "x", allow_inf=True), math.inf)
        with self.assertRaises(ValueError):
            validate_float(math.inf, "x")
        with self.assertRaises(ValueError):
            validate_float(math.nan, "x", allow_inf=True)

    def test_validate_seed(self):
        self.assertEqual(validate_seed(2 ** 64 - 1), 2 ** 64 - 1)
        with self.assertRaises(ValueError):
            validate_seed(-1)

    def test_validate_percent(self):
        self.assertEqual(validate_percent(100), 100.0)
        with self.assertRaises(ValueError):
            validate_percent(0)

    def test_validate_positive_dims(self):
        self.assertEqual(validate_positive_dims(["4", 2]), (4, 2))
        with self.assertRaises(ValueError):
            validate_positive_dims([])
        with self.assertRaises(ValueError):
            validate_positive_dims([4, 0])

    def test_validate_sweep_values(self):
        self.assertEqual(validate_sweep_values([1, 2, 3]), (1, 2, 3))
        for bad in ([], [2, 1], [1, 1]):
            with self.subTest(bad=bad), self.assertRaises(ValueError):
                validate_sweep_values(bad)


if __name__ == "__main__":
    unittest.main()
