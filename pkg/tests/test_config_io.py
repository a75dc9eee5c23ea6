import argparse
import tempfile
import unittest
from pathlib import Path

from neural_channel_decoding.core.config_io import (
    apply_config_defaults,
    normalize_key,
    options_to_argv,
    read_config_file,
)


def _parser():
    parser = argparse.ArgumentParser()
    parser.add_argument("--train-ebn0", dest="train_ebn0", type=float, default=None)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--hidden", default=None)
    parser.add_argument("--nve", action="store_true")
    parser.add_argument("--output", default=None)
    return parser


class ConfigIoTests(unittest.TestCase):
    def test_read_config_file_normalizes_keys(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "run.ini"
            path.write_text(
                "# training run\n"
                "train-ebn0 = 1.5\n"
                "\n"
                "; more\n"
                "Epochs = 256\n",
                encoding="utf-8",
            )
            values = read_config_file(path)
        self.assertEqual(values, {'train_ebn0': '1.5', 'epochs': '256'})

    def test_repeated_key_is_rejected(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "dup.ini"
            path.write_text("epochs = 1\nepochs = 2\n", encoding="utf-8")
            with self.assertRaises(ValueError):
                read_config_file(path)

    def test_missing_file(self):
        with self.assertRaises(ValueError):
            read_config_file("/nonexistent/run.ini")

    def test_normalize_key(self):
        self.assertEqual(normalize_key(" Train-Ebn0 "), "train_ebn0")

    def test_config_values_are_defaults_and_flags_win(self):
        parser = _parser()
        applied = apply_config_defaults(parser, {'epochs': '256', 'train_ebn0': '2.5', 'nve': 'yes'})
        self.assertEqual(applied, ['epochs', 'nve', 'train_ebn0'])
        args = parser.parse_args([])
        self.assertEqual(args.epochs, 256)
        self.assertEqual(args.train_ebn0, 2.5)
        self.assertTrue(args.nve)
        self.assertEqual(parser.parse_args(["--epochs", "8"]).epochs, 8)

    def test_unknown_key(self):
        with self.assertRaises(ValueError):
            apply_config_defaults(_parser(), {'epoch': '5'})

    def test_ignored_keys_are_skipped(self):
        applied = apply_config_defaults(_parser(), {'jobs': '4', 'epochs': '3'}, ignore=('jobs',))
        self.assertEqual(applied, ['epochs'])

    def test_bad_boolean(self):
        with self.assertRaises(ValueError):
            apply_config_defaults(_parser(), {'nve': 'maybe'})

    def test_options_to_argv_replays(self):
        parser = _parser()
        options = {'train_ebn0': 0.1, 'epochs': 64, 'hidden': (128, 64), 'nve': True, 'output': None}
        argv = options_to_argv(parser, options)
        self.assertEqual(argv, ['--train-ebn0=0.1', '--epochs=64', '--hidden=128,64', '--nve'])
        args = parser.parse_args(argv)
        self.assertEqual(args.train_ebn0, 0.1)
        self.assertEqual(args.hidden, '128,64')

    def test_false_flag_is_left_out(self):
        self.assertEqual(options_to_argv(_parser(), {'nve': False}), [])


if __name__ == "__main__":
    unittest.main()
