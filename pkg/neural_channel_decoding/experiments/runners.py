"""
runners.py
End-to-end experiment runs: train decoders across a sweep, evaluate them
against the MAP oracle and write the results as CSV files.

Every run writes into ``<output_dir>/<experiment-id>.incomplete/`` and is
renamed to ``<output_dir>/<experiment-id>/`` only when it finishes.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd

from neural_channel_decoding.core.channel import InputMode
from neural_channel_decoding.core.codebook import Codebook, CodeParams, enumerate_codebook, split_codebook
from neural_channel_decoding.core.metrics import BerCurve, NveResult, nve, single_word_bler
from neural_channel_decoding.core.neural_net import LossKind, Mlp, TrainConfig, train
from neural_channel_decoding.core.result_cache import map_reference_curve
from neural_channel_decoding.core.simulation import nnd_ber_curve
from neural_channel_decoding.core.utils import derive_seed, incomplete_directory, number_label
from neural_channel_decoding.core.validation import TrainingDivergedError
from neural_channel_decoding.export.artifacts import (
    load_checkpoint,
    save_checkpoint,
    write_curve_csv,
    write_manifest,
    write_table_csv,
)
from neural_channel_decoding.experiments.specs import CoverageReport, ExperimentId, ExperimentSpec

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

# Input representation x loss combinations compared by the learning-curve run.
INPUT_LOSS_COMBINATIONS: Tuple[Tuple[InputMode, LossKind], ...] = (
    (InputMode.CHANNEL_VALUES, LossKind.MSE),
    (InputMode.CHANNEL_VALUES, LossKind.BCE),
    (InputMode.LLR, LossKind.MSE),
    (InputMode.LLR, LossKind.BCE),
)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _run_points(fn: Callable[[T, int], R], items: Sequence[T], jobs: int) -> List[R]:
    """
    Run ``fn(item, inner_jobs)`` for every sweep point, in parallel when jobs > 1.

    Results always come back in sweep order. When points run in parallel each
    one evaluates single-threaded.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item, jobs) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items)), thread_name_prefix="sweep") as executor:
        return list(executor.map(lambda item: fn(item, 1), items))


def _point_config(config: TrainConfig, master_seed: int, index: int, **changes) -> TrainConfig:
    """Training config of sweep point ``index``; its seeds come from the master seed and the index."""
    return replace(config, init_seed=derive_seed(master_seed, index, 0),
                   noise_seed=derive_seed(master_seed, index, 1), **changes)


def _unseen_word_blers(mlp: Mlp, codebook: Codebook, unseen: Sequence[int], spec: ExperimentSpec,
                       input_mode: InputMode, jobs: int) -> Tuple[Tuple[int, float], ...]:
    """Single-word BLER of every unseen codeword at the histogram SNR."""
    def point(index: int, inner_jobs: int) -> float:
        return single_word_bler(mlp, codebook, index, spec.histogram_ebn0_db, spec.histogram_trials,
                                spec.seed, input_mode=input_mode)

    return tuple(zip(unseen, _run_points(point, unseen, jobs)))


def _write_per_word_table(per_word: Sequence[Tuple[int, float]], path: Path) -> None:
    table = pd.DataFrame(list(per_word), columns=['codeword_index', 'bler'])
    write_table_csv(table, path)


def evaluate_nve(mlp: Mlp, config: TrainConfig, codebook: Codebook, spec: ExperimentSpec,
                 jobs: int = 1) -> Tuple[NveResult, BerCurve]:
    """NVE of a trained decoder on the spec's validation grid."""
    nnd_curve = nnd_ber_curve(mlp, codebook, spec.nve_grid_db, spec.nve_words_per_snr, spec.seed,
                              input_mode=config.input_mode, jobs=jobs)
    map_curve = map_reference_curve(codebook, spec.nve_grid_db, spec.nve_words_per_snr, spec.seed, jobs)
    return nve(nnd_curve, map_curve, config.train_ebn0_db), nnd_curve


def _learning_curve(config: TrainConfig, checkpoints: Sequence[int], codebook: Codebook,
                    spec: ExperimentSpec, jobs: int) -> List[Tuple[int, float]]:
    """NVE after each checkpoint of a single training run."""
    config = replace(config, epochs=max(checkpoints))
    result = train(config, checkpoint_epochs=checkpoints, codebook=codebook)
    points = []
    for epochs in checkpoints:
        outcome, _ = evaluate_nve(result.snapshots[epochs], config, codebook, spec, jobs)
        points.append((epochs, outcome.nve))
    return points


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def run_train_snr_sweep(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> pd.DataFrame:
    """One decoder per training SNR; NVE per decoder."""
    codebook = enumerate_codebook(spec.base.code)

    def point(item: Tuple[int, float], inner_jobs: int):
        index, train_snr = item
        config = _point_config(spec.base, spec.seed, index, train_ebn0_db=train_snr)
        mlp = train(config, codebook=codebook).mlp
        outcome, curve = evaluate_nve(mlp, config, codebook, spec, inner_jobs)
        write_curve_csv(curve, workdir / f"nnd_train_{number_label(train_snr)}dB.csv")
        return outcome

    outcomes = _run_points(point, list(enumerate(spec.sweep_values)), jobs)
    table = pd.DataFrame({
        'train_ebn0_db': [o.train_ebn0_db for o in outcomes],
        'nve': [o.nve for o in outcomes],
        'included_points': [len(o.ratios) for o in outcomes],
        'skipped_points': [len(o.skipped_points) for o in outcomes],
    })
    write_table_csv(table, workdir / 'nve_vs_train_snr.csv')
    return table


def run_epoch_sweep(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> Dict[int, BerCurve]:
    """
    BER curves after each epoch budget, plus the MAP reference curve.

    By default the budgets are checkpoints of one run. With ``spec.retrain``
    every budget is an independent run whose seeds are derived from the
    master seed and the sweep index.
    """
    codebook = enumerate_codebook(spec.base.code)
    budgets = spec.sweep_values
    map_curve = map_reference_curve(codebook, spec.curve_grid_db, spec.map_words_per_snr, spec.seed, jobs)
    write_curve_csv(map_curve, workdir / 'ber_map.csv')

    if spec.retrain:
        def point(item: Tuple[int, int], inner_jobs: int) -> Tuple[int, Mlp]:
            index, epochs = item
            config = _point_config(spec.base, spec.seed, index, epochs=epochs)
            return epochs, train(config, codebook=codebook).mlp

        models = dict(_run_points(point, list(enumerate(budgets)), jobs))
    else:
        config = replace(spec.base, epochs=max(budgets))
        models = train(config, checkpoint_epochs=budgets, codebook=codebook).snapshots

    def evaluate(epochs: int, inner_jobs: int) -> BerCurve:
        curve = nnd_ber_curve(models[epochs], codebook, spec.curve_grid_db, spec.curve_words_per_snr,
                              spec.seed, input_mode=spec.base.input_mode, jobs=inner_jobs)
        write_curve_csv(curve, workdir / f"ber_epochs_{epochs}.csv")
        return curve

    curves = _run_points(evaluate, budgets, jobs)
    return dict(zip(budgets, curves))


def run_llr_loss_curves(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> pd.DataFrame:
    """
    Learning curves for every input representation and loss.

    A run that diverges is reported with NaN NVEs and ``diverged`` set instead
    of aborting the comparison.
    """
    codebook = enumerate_codebook(spec.base.code)
    checkpoints = spec.sweep_values

    def point(item: Tuple[int, Tuple[InputMode, LossKind]], inner_jobs: int) -> List[dict]:
        index, (input_mode, loss) = item
        config = _point_config(spec.base, spec.seed, index, input_mode=input_mode, loss=loss)
        try:
            points = _learning_curve(config, checkpoints, codebook, spec, inner_jobs)
            diverged = False
        except TrainingDivergedError as exc:
            logger.warning(f"{input_mode.value}/{loss.value}: {exc}")
            points = [(epochs, float('nan')) for epochs in checkpoints]
            diverged = True
        return [{'input_mode': input_mode.value, 'loss': loss.value, 'epochs': epochs,
                 'nve': value, 'diverged': diverged} for epochs, value in points]

    rows = [row for rows in _run_points(point, list(enumerate(INPUT_LOSS_COMBINATIONS)), jobs) for row in rows]
    table = pd.DataFrame(rows, columns=['input_mode', 'loss', 'epochs', 'nve', 'diverged'])
    write_table_csv(table, workdir / 'learning_curves.csv')
    return table


def run_architecture_sweep(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> pd.DataFrame:
    codebook = enumerate_codebook(spec.base.code)

    def point(item: Tuple[int, Tuple[int, ...]], inner_jobs: int) -> List[dict]:
        index, hidden_dims = item
        config = _point_config(spec.base, spec.seed, index, hidden_dims=hidden_dims)
        points = _learning_curve(config, spec.checkpoints, codebook, spec, inner_jobs)
        return [{'architecture': config.architecture_label, 'epochs': epochs, 'nve': value}
                for epochs, value in points]

    rows = [row for rows in _run_points(point, list(enumerate(spec.sweep_values)), jobs) for row in rows]
    table = pd.DataFrame(rows, columns=['architecture', 'epochs', 'nve'])
    write_table_csv(table, workdir / 'learning_curves.csv')
    return table


def run_scalability(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> pd.DataFrame:
    """One decoder of the base architecture per (N, k) code; NVE per code."""
    # Every code is built before the first one trains.
    codes = [CodeParams(family=spec.base.code.family, block_length=n, info_bits=k, seed=spec.base.code.seed)
             for n, k in spec.sweep_values]
    codebooks = {code: enumerate_codebook(code) for code in codes}

    def point(item: Tuple[int, CodeParams], inner_jobs: int) -> NveResult:
        index, code = item
        codebook = codebooks[code]
        config = _point_config(spec.base, spec.seed, index, code=code)
        mlp = train(config, codebook=codebook).mlp
        outcome, _ = evaluate_nve(mlp, config, codebook, spec, inner_jobs)
        logger.info(f"N={code.block_length} k={code.info_bits}: NVE {outcome.nve:.4g}")
        return outcome

    outcomes = _run_points(point, list(enumerate(codes)), jobs)
    table = pd.DataFrame({
        'block_length': [c.block_length for c in codes],
        'info_bits': [c.info_bits for c in codes],
        'rate': [c.rate for c in codes],
        'nve': [o.nve for o in outcomes],
    })
    write_table_csv(table, workdir / 'nve_vs_code.csv')
    return table


def _train_on_subset(spec: ExperimentSpec, codebook: Codebook, percent: float,
                     index: int) -> Tuple[TrainConfig, Mlp, List[float]]:
    split = split_codebook(codebook, percent, spec.split_seed)
    config = _point_config(spec.base, spec.seed, index, train_subset=split)
    result = train(config, codebook=codebook)
    return config, result.mlp, result.loss_log


def run_coverage(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> List[CoverageReport]:
    """
    Train on p % of the codewords and measure the BLER on the unseen rest and
    on the whole codebook, plus the single-word BLER of every unseen codeword
    at the histogram SNR. The trained models are kept as ``model_p<p>.json``.
    """
    codebook = enumerate_codebook(spec.base.code)
    map_curve = map_reference_curve(codebook, spec.curve_grid_db, spec.map_words_per_snr, spec.seed, jobs)
    write_curve_csv(map_curve, workdir / 'bler_map.csv')

    def point(item: Tuple[int, float], inner_jobs: int) -> Tuple[CoverageReport, int, int]:
        index, percent = item
        label = number_label(percent)
        config, mlp, loss_log = _train_on_subset(spec, codebook, percent, index)
        save_checkpoint(workdir / f"model_p{label}.json", mlp, config, loss_log)
        unseen = config.train_subset.unseen
        unseen_curve = None
        per_word = ()
        if unseen:
            unseen_curve = nnd_ber_curve(mlp, codebook, spec.curve_grid_db, spec.curve_words_per_snr, spec.seed,
                                         input_mode=config.input_mode, message_indices=unseen, jobs=inner_jobs)
            write_curve_csv(unseen_curve, workdir / f"bler_p{label}_unseen.csv")
            per_word = _unseen_word_blers(mlp, codebook, unseen, spec, config.input_mode, inner_jobs)
            _write_per_word_table(per_word, workdir / f"single_word_bler_p{label}.csv")
        else:
            logger.warning(f"Coverage {percent}% leaves no unseen codewords; unseen curve omitted")
        all_curve = nnd_ber_curve(mlp, codebook, spec.curve_grid_db, spec.curve_words_per_snr, spec.seed,
                                  input_mode=config.input_mode, jobs=inner_jobs)
        write_curve_csv(all_curve, workdir / f"bler_p{label}_all.csv")
        report = CoverageReport(percent=percent, bler_on_unseen=unseen_curve, bler_on_all=all_curve,
                                per_word_bler=per_word, unseen_omitted=not unseen)
        return report, len(config.train_subset.seen), len(unseen)

    outcomes = _run_points(point, list(enumerate(spec.sweep_values)), jobs)
    summary = pd.DataFrame({
        'percent': [report.percent for report, _, _ in outcomes],
        'seen_codewords': [seen for _, seen, _ in outcomes],
        'unseen_codewords': [unseen for _, _, unseen in outcomes],
        'unseen_omitted': [report.unseen_omitted for report, _, _ in outcomes],
    })
    write_table_csv(summary, workdir / 'coverage_summary.csv')
    return [report for report, _, _ in outcomes]


def _histogram_model(spec: ExperimentSpec, codebook: Codebook, percent: float,
                     workdir: Path) -> Tuple[TrainConfig, Mlp]:
    if spec.model_path:
        mlp, config, _, _ = load_checkpoint(spec.model_path)
        if config is None or config.train_subset is None:
            raise ValueError(f"{spec.model_path} was not trained on a coverage subset")
        if config.code != spec.base.code:
            raise ValueError(f"{spec.model_path} was trained on a different code")
        if config.train_subset.coverage_percent != percent:
            raise ValueError(
                f"{spec.model_path} was trained at {config.train_subset.coverage_percent}% coverage, "
                f"not {percent}%"
            )
        logger.info(f"Using coverage model {spec.model_path}")
        return config, mlp
    config, mlp, loss_log = _train_on_subset(spec, codebook, percent, 0)
    save_checkpoint(workdir / f"model_p{number_label(percent)}.json", mlp, config, loss_log)
    return config, mlp


def run_coverage_histogram(spec: ExperimentSpec, workdir: Path, jobs: int = 1) -> CoverageReport:
    """Single-word BLER of every unseen codeword at one SNR."""
    codebook = enumerate_codebook(spec.base.code)
    percent = spec.sweep_values[0]
    config, mlp = _histogram_model(spec, codebook, percent, workdir)
    unseen = config.train_subset.unseen
    if not unseen:
        raise ValueError(f"coverage {percent}% leaves no unseen codewords")

    per_word = _unseen_word_blers(mlp, codebook, unseen, spec, config.input_mode, jobs)
    _write_per_word_table(per_word, workdir / f"single_word_bler_p{number_label(percent)}.csv")
    blers = [bler for _, bler in per_word]
    logger.info(
        f"Unseen codewords at {spec.histogram_ebn0_db} dB: median BLER {float(np.median(blers)):.4g}, "
        f"{int(np.sum(np.asarray(blers) > 0.99))}/{len(blers)} above 0.99"
    )
    all_curve = nnd_ber_curve(mlp, codebook, spec.curve_grid_db, spec.curve_words_per_snr, spec.seed,
                              input_mode=config.input_mode, jobs=jobs)
    return CoverageReport(percent=percent, bler_on_unseen=None, bler_on_all=all_curve,
                          per_word_bler=per_word)


_RUNNERS = {
    ExperimentId.TRAIN_SNR_SWEEP: run_train_snr_sweep,
    ExperimentId.EPOCH_SWEEP: run_epoch_sweep,
    ExperimentId.LLR_LOSS_CURVES: run_llr_loss_curves,
    ExperimentId.ARCHITECTURE_SWEEP: run_architecture_sweep,
    ExperimentId.SCALABILITY: run_scalability,
    ExperimentId.COVERAGE: run_coverage,
    ExperimentId.COVERAGE_HISTOGRAM: run_coverage_histogram,
}


def run_experiment(spec: ExperimentSpec, jobs: int = 1, argv: Optional[List[str]] = None):
    """
    Run one experiment into ``<output_dir>/<experiment-id>/`` and return its result.

    ``manifest.json`` records the full spec and, when given, the command line
    that reproduces the run.
    """
    runner = _RUNNERS[spec.experiment_id]
    final_dir = Path(spec.output_dir) / spec.experiment_id.value
    logger.info(f"--- Running {spec.experiment_id.value} ({spec.family.value} code) into {final_dir} ---")
    with incomplete_directory(final_dir) as workdir:
        result = runner(spec, workdir, jobs=jobs)
        manifest = {'command': 'experiment', 'spec': spec.to_dict()}
        if argv is not None:
            manifest['argv'] = list(argv)
        write_manifest(workdir / 'manifest.json', manifest)
    logger.info(f"--- {spec.experiment_id.value} finished: {final_dir} ---")
    return result
