"""Tests for neural_channel_decoding.experiments"""
import math
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path
from unittest import mock

import numpy as np
from pandas.testing import assert_frame_equal

from neural_channel_decoding.core.codebook import CodeParams
from neural_channel_decoding.core.neural_net import TrainConfig
from neural_channel_decoding.core.utils import derive_seed
from neural_channel_decoding.core.validation import ConstructionInfeasibleError
from neural_channel_decoding.export.artifacts import load_checkpoint, read_manifest, read_table_csv
from neural_channel_decoding.experiments import runners
from neural_channel_decoding.experiments.runners import run_experiment
from neural_channel_decoding.experiments.specs import (
    CoverageReport,
    ExperimentId,
    ExperimentSpec,
    default_spec,
)


def _tiny_spec(experiment_id, output_dir, **overrides):
    """Small polar N=8, k=4 run that finishes in seconds."""
    spec = default_spec(
        experiment_id, family='polar', block_length=8, info_bits=4, seed=3,
        output_dir=str(output_dir),
        nve_grid_db=(0.0, 1.0),
        nve_words_per_snr=400,
        curve_grid_db=(0.0, 2.0),
        curve_words_per_snr=300,
        map_words_per_snr=300,
        checkpoints=(4, 8),
        histogram_trials=50,
    )
    spec = replace(spec, base=replace(spec.base, hidden_dims=(16,), epochs=8, learning_rate=0.01))
    return replace(spec, **overrides) if overrides else spec


class ExperimentSpecTests(unittest.TestCase):
    def test_defaults(self):
        spec = default_spec('train-snr-sweep')
        self.assertEqual(spec.base.hidden_dims, (128, 64, 32))
        self.assertEqual(spec.base.train_ebn0_db, 1.0)
        self.assertEqual(len(spec.nve_grid_db), 20)
        self.assertEqual(spec.nve_words_per_snr, 20_000)
        self.assertEqual(default_spec('train-snr-sweep', family='random').base.train_ebn0_db, 4.0)

    def test_per_experiment_defaults(self):
        self.assertEqual(default_spec('scalability').base.hidden_dims, (1024, 512, 256))
        self.assertEqual(default_spec('epoch-sweep').base.epochs, 2 ** 18)
        self.assertEqual(default_spec('coverage').sweep_values, (20.0, 40.0, 60.0, 80.0, 100.0))
        self.assertEqual(default_spec('coverage-histogram').sweep_values, (80.0,))

    def test_random_scalability_default_respects_hamming_bound(self):
        polar = default_spec('scalability').sweep_values
        random = default_spec('scalability', family='random').sweep_values
        self.assertIn((16, 12), polar)
        self.assertNotIn((16, 12), random)
        self.assertEqual(set(polar) - set(random), {(16, 12)})

    def test_histogram_needs_unseen_words(self):
        with self.assertRaises(ValueError):
            default_spec('coverage-histogram', sweep_values=(100.0,))
        with self.assertRaises(ValueError):
            default_spec('coverage-histogram', sweep_values=(40.0, 80.0))

    def test_sweep_must_be_sorted(self):
        with self.assertRaises(ValueError):
            default_spec('epoch-sweep', sweep_values=(1024, 256))

    def test_unknown_experiment(self):
        with self.assertRaises(ValueError):
            ExperimentId.parse('fig9')

    def test_dict_round_trip(self):
        spec = default_spec('architecture-sweep', sweep_values=((8,), (16, 8)))
        self.assertEqual(ExperimentSpec.from_dict(spec.to_dict()), spec)

    def test_coverage_report_range(self):
        with self.assertRaises(ValueError):
            CoverageReport(percent=80.0, bler_on_unseen=None, bler_on_all=None, per_word_bler=((3, 1.5),))


class ExperimentRunTests(unittest.TestCase):
    def setUp(self):
        self._temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self._temp_dir.name)

    def tearDown(self):
        self._temp_dir.cleanup()

    def test_train_snr_sweep(self):
        spec = _tiny_spec('train-snr-sweep', self.root, sweep_values=(1.0, 4.0))
        table = run_experiment(spec, argv=['experiment', 'train-snr-sweep'])
        out = self.root / 'train-snr-sweep'
        self.assertEqual(table['train_ebn0_db'].tolist(), [1.0, 4.0])
        self.assertTrue(all(value > 0 for value in table['nve']))
        self.assertTrue((out / 'nnd_train_1dB.csv').exists())
        self.assertTrue((out / 'nnd_train_4dB.csv').exists())
        assert_frame_equal(read_table_csv(out / 'nve_vs_train_snr.csv'), table, check_dtype=False)
        manifest = read_manifest(out / 'manifest.json')
        self.assertEqual(manifest['argv'], ['experiment', 'train-snr-sweep'])
        self.assertEqual(manifest['spec']['experiment_id'], 'train-snr-sweep')
        self.assertFalse((self.root / 'train-snr-sweep.incomplete').exists())

    def test_results_do_not_depend_on_jobs(self):
        serial = run_experiment(_tiny_spec('train-snr-sweep', self.root / 'a', sweep_values=(1.0, 2.0)), jobs=1)
        threaded = run_experiment(_tiny_spec('train-snr-sweep', self.root / 'b', sweep_values=(1.0, 2.0)), jobs=3)
        assert_frame_equal(serial, threaded)

    def test_sweep_points_train_on_seeds_derived_from_their_index(self):
        spec = _tiny_spec('train-snr-sweep', self.root, sweep_values=(1.0, 4.0))
        with mock.patch.object(runners, 'train', wraps=runners.train) as train:
            run_experiment(spec, jobs=2)
        configs = sorted((call.args[0] for call in train.call_args_list), key=lambda c: c.train_ebn0_db)
        self.assertEqual([(c.init_seed, c.noise_seed) for c in configs],
                         [(derive_seed(3, i, 0), derive_seed(3, i, 1)) for i in range(2)])

    def test_epoch_sweep_from_checkpoints(self):
        spec = _tiny_spec('epoch-sweep', self.root, sweep_values=(2, 8))
        curves = run_experiment(spec)
        out = self.root / 'epoch-sweep'
        self.assertEqual(sorted(curves), [2, 8])
        for name in ('ber_map.csv', 'ber_epochs_2.csv', 'ber_epochs_8.csv'):
            self.assertTrue((out / name).exists(), name)

    def test_epoch_sweep_retrain(self):
        spec = _tiny_spec('epoch-sweep', self.root, sweep_values=(2, 4), retrain=True)
        curves = run_experiment(spec, jobs=2)
        self.assertEqual(len(curves[2]), 2)
        self.assertTrue(np.all(curves[4].ber <= 1.0))

    def test_llr_loss_curves(self):
        spec = _tiny_spec('llr-loss-curves', self.root, sweep_values=(4, 8))
        table = run_experiment(spec)
        self.assertEqual(len(table), 8)
        self.assertEqual(set(zip(table['input_mode'], table['loss'])),
                         {('channel', 'mse'), ('channel', 'bce'), ('llr', 'mse'), ('llr', 'bce')})
        self.assertFalse(table['diverged'].any())
        self.assertTrue((self.root / 'llr-loss-curves' / 'learning_curves.csv').exists())

    def test_architecture_sweep(self):
        spec = _tiny_spec('architecture-sweep', self.root, sweep_values=((8,), (16, 8)))
        table = run_experiment(spec)
        self.assertEqual(table['architecture'].tolist(), ['8', '8', '16-8', '16-8'])
        self.assertEqual(table['epochs'].tolist(), [4, 8, 4, 8])

    def test_scalability(self):
        spec = _tiny_spec('scalability', self.root, sweep_values=((8, 2), (8, 4)))
        table = run_experiment(spec)
        self.assertEqual(table['info_bits'].tolist(), [2, 4])
        self.assertEqual(table['rate'].tolist(), [0.25, 0.5])
        self.assertTrue((self.root / 'scalability' / 'nve_vs_code.csv').exists())

    def test_scalability_rejects_invalid_code_up_front(self):
        spec = _tiny_spec('scalability', self.root, sweep_values=((8, 2), (12, 4)))
        with self.assertRaises(ValueError):
            run_experiment(spec)

    def test_scalability_builds_every_code_before_training(self):
        # 2^5 codewords exceed the 28 an 8-bit distance-3 code can hold.
        spec = _tiny_spec('scalability', self.root, sweep_values=((8, 2), (8, 5)))
        spec = replace(spec, base=replace(spec.base, code=CodeParams('random', 8, 4, seed=1)))
        with mock.patch.object(runners, 'train') as train:
            with self.assertRaises(ConstructionInfeasibleError):
                run_experiment(spec)
        train.assert_not_called()

    def test_coverage_with_full_coverage(self):
        spec = _tiny_spec('coverage', self.root, sweep_values=(50.0, 100.0))
        reports = run_experiment(spec)
        out = self.root / 'coverage'
        self.assertIsNotNone(reports[0].bler_on_unseen)
        self.assertIsNone(reports[1].bler_on_unseen)
        self.assertTrue(reports[1].unseen_omitted)
        self.assertTrue((out / 'bler_p50_unseen.csv').exists())
        self.assertFalse((out / 'bler_p100_unseen.csv').exists())
        self.assertTrue((out / 'bler_p100_all.csv').exists())
        summary = read_table_csv(out / 'coverage_summary.csv')
        self.assertEqual(summary['seen_codewords'].tolist(), [8, 16])
        self.assertEqual(summary['unseen_codewords'].tolist(), [8, 0])
        _, config, _, _ = load_checkpoint(out / 'model_p50.json')
        self.assertEqual(len(config.train_subset.seen), 8)
        self.assertEqual([index for index, _ in reports[0].per_word_bler], list(config.train_subset.unseen))
        self.assertTrue(all(0.0 <= value <= 1.0 for _, value in reports[0].per_word_bler))
        self.assertEqual(reports[1].per_word_bler, ())
        table = read_table_csv(out / 'single_word_bler_p50.csv')
        self.assertEqual(table['codeword_index'].tolist(), list(config.train_subset.unseen))
        self.assertFalse((out / 'single_word_bler_p100.csv').exists())

    def test_coverage_histogram_trains_and_reuses_model(self):
        spec = _tiny_spec('coverage-histogram', self.root / 'first', sweep_values=(50.0,))
        report = run_experiment(spec)
        out = self.root / 'first' / 'coverage-histogram'
        table = read_table_csv(out / 'single_word_bler_p50.csv')
        self.assertEqual(len(table), 8)
        self.assertTrue(table['bler'].between(0.0, 1.0).all())
        self.assertEqual(len(report.per_word_bler), 8)

        reuse = _tiny_spec('coverage-histogram', self.root / 'second', sweep_values=(50.0,),
                           model_path=str(out / 'model_p50.json'))
        again = run_experiment(reuse)
        self.assertEqual(again.per_word_bler, report.per_word_bler)
        self.assertFalse((self.root / 'second' / 'coverage-histogram' / 'model_p50.json').exists())

    def test_histogram_model_must_match_percent(self):
        first = _tiny_spec('coverage-histogram', self.root / 'first', sweep_values=(50.0,))
        run_experiment(first)
        model = self.root / 'first' / 'coverage-histogram' / 'model_p50.json'
        mismatch = _tiny_spec('coverage-histogram', self.root / 'second', sweep_values=(75.0,),
                              model_path=str(model))
        with self.assertRaises(ValueError):
            run_experiment(mismatch)
        self.assertTrue((self.root / 'second' / 'coverage-histogram.incomplete').exists())

    def test_rerun_is_identical(self):
        spec = _tiny_spec('coverage', self.root / 'a', sweep_values=(50.0,))
        run_experiment(spec)
        run_experiment(replace(spec, output_dir=str(self.root / 'b')))
        for name in ('bler_p50_all.csv', 'bler_p50_unseen.csv', 'single_word_bler_p50.csv', 'model_p50.json'):
            a = (self.root / 'a' / 'coverage' / name).read_bytes()
            b = (self.root / 'b' / 'coverage' / name).read_bytes()
            self.assertEqual(a, b, name)


class TrainConfigInSpecTests(unittest.TestCase):
    def test_training_seeds_follow_master_seed(self):
        spec = default_spec('train-snr-sweep', seed=11)
        self.assertIsInstance(spec.base, TrainConfig)
        self.assertEqual((spec.base.init_seed, spec.base.noise_seed, spec.split_seed), (11, 11, 11))
        self.assertFalse(math.isnan(spec.histogram_ebn0_db))


if __name__ == "__main__":
    unittest.main()
