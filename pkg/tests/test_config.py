import importlib
import os
import unittest
from unittest.mock import patch

import neural_channel_decoding.core.config as config


class ConfigEnvironmentTests(unittest.TestCase):
    def _reload_config(self):
        return importlib.reload(config)

    def tearDown(self):
        self._reload_config()

    def test_defaults_without_environment(self):
        with patch.dict(os.environ, {}, clear=True):
            cfg = self._reload_config()

        self.assertEqual(cfg.DEFAULT_SEED, 0)
        self.assertEqual(cfg.LOG_LEVEL, "INFO")
        self.assertEqual(cfg.CACHE_DIR, "")
        self.assertEqual(cfg.TRAINING_SETTINGS['hidden_dims'], (128, 64, 32))
        self.assertEqual(cfg.EVALUATION_SETTINGS['nve_words_per_snr'], 20_000)
        self.assertEqual(cfg.CONFIG['code']['max_info_bits'], 16)

    def test_seed_log_level_and_cache_from_environment(self):
        with patch.dict(
            os.environ,
            {"NND_SEED": "0x10", "NND_LOG_LEVEL": " debug ", "NND_CACHE_DIR": "/tmp/nnd-cache"},
            clear=True,
        ):
            cfg = self._reload_config()

        self.assertEqual(cfg.DEFAULT_SEED, 16)
        self.assertEqual(cfg.LOG_LEVEL, "DEBUG")
        self.assertEqual(cfg.CACHE_DIR, "/tmp/nnd-cache")

    def test_invalid_seed_falls_back_with_warning(self):
        with patch.dict(os.environ, {"NND_SEED": "lots"}, clear=True):
            with self.assertLogs("neural_channel_decoding.core.config", level="WARNING"):
                cfg = self._reload_config()
        self.assertEqual(cfg.DEFAULT_SEED, 0)

    def test_negative_seed_is_ignored(self):
        with patch.dict(os.environ, {"NND_SEED": "-3"}, clear=True):
            with self.assertLogs("neural_channel_decoding.core.config", level="WARNING"):
                cfg = self._reload_config()
        self.assertEqual(cfg.DEFAULT_SEED, 0)


if __name__ == "__main__":
    unittest.main()
