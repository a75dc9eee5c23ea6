"""Experiment identifiers, specifications and result records."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

from neural_channel_decoding.core.codebook import CodeFamily, CodeParams, hamming_bound_capacity
from neural_channel_decoding.core.config import (
    CODE_SETTINGS,
    DEFAULT_SEED,
    EVALUATION_SETTINGS,
    EXPERIMENT_SETTINGS,
    TRAINING_SETTINGS,
)
from neural_channel_decoding.core.metrics import BerCurve, nve_grid
from neural_channel_decoding.core.neural_net import TrainConfig
from neural_channel_decoding.core.utils import snr_grid
from neural_channel_decoding.core.validation import (
    validate_float,
    validate_int,
    validate_percent,
    validate_seed,
    validate_sweep_values,
)


class ExperimentId(str, enum.Enum):
    TRAIN_SNR_SWEEP = 'train-snr-sweep'
    EPOCH_SWEEP = 'epoch-sweep'
    LLR_LOSS_CURVES = 'llr-loss-curves'
    ARCHITECTURE_SWEEP = 'architecture-sweep'
    SCALABILITY = 'scalability'
    COVERAGE = 'coverage'
    COVERAGE_HISTOGRAM = 'coverage-histogram'

    @classmethod
    def parse(cls, value) -> 'ExperimentId':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace('_', '-'))
        except ValueError:
            allowed = ', '.join(member.value for member in cls)
            raise ValueError(f"unknown experiment {value!r}; expected one of {allowed}")


# Sweep axes whose values are tuples rather than scalars.
_TUPLE_AXES = {ExperimentId.ARCHITECTURE_SWEEP, ExperimentId.SCALABILITY}


def _normalize_sweep(experiment_id: ExperimentId, values) -> tuple:
    if experiment_id in _TUPLE_AXES:
        values = tuple(tuple(validate_int(v, "sweep value", minimum=1) for v in item) for item in values)
    elif experiment_id in (ExperimentId.EPOCH_SWEEP,):
        values = tuple(validate_int(v, "epoch count", minimum=1) for v in values)
    elif experiment_id is ExperimentId.TRAIN_SNR_SWEEP:
        values = tuple(validate_float(v, "training SNR") for v in values)
    elif experiment_id in (ExperimentId.COVERAGE, ExperimentId.COVERAGE_HISTOGRAM):
        values = tuple(validate_percent(v, "coverage percent") for v in values)
    else:
        values = tuple(validate_int(v, "checkpoint epoch", minimum=1) for v in values)
    return validate_sweep_values(values, f"{experiment_id.value} sweep values")


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One experiment run: what to sweep, the base training configuration every
    sweep point starts from, and how to evaluate it.

    ``sweep_values`` holds, per experiment: training SNRs (train-snr-sweep),
    epoch counts (epoch-sweep), checkpoint epochs (llr-loss-curves), hidden-dim
    tuples (architecture-sweep), (N, k) pairs (scalability) or coverage
    percentages (coverage, coverage-histogram).
    """
    experiment_id: ExperimentId
    base: TrainConfig
    sweep_values: Tuple[Any, ...]
    output_dir: str = EXPERIMENT_SETTINGS['output_dir']
    seed: int = DEFAULT_SEED
    checkpoints: Tuple[int, ...] = EXPERIMENT_SETTINGS['learning_curve_checkpoints']
    nve_grid_db: Tuple[float, ...] = field(default_factory=lambda: tuple(float(x) for x in nve_grid()))
    nve_words_per_snr: int = EVALUATION_SETTINGS['nve_words_per_snr']
    curve_grid_db: Tuple[float, ...] = field(default_factory=lambda: tuple(float(x) for x in snr_grid(
        EVALUATION_SETTINGS['curve_snr_start_db'],
        EVALUATION_SETTINGS['curve_snr_stop_db'],
        EVALUATION_SETTINGS['curve_snr_points'],
    )))
    curve_words_per_snr: int = EVALUATION_SETTINGS['curve_words_per_snr']
    map_words_per_snr: int = EVALUATION_SETTINGS['map_words_per_snr']
    histogram_ebn0_db: float = EVALUATION_SETTINGS['histogram_ebn0_db']
    histogram_trials: int = EVALUATION_SETTINGS['histogram_trials']
    split_seed: int = 0
    retrain: bool = False
    model_path: Optional[str] = None

    def __post_init__(self):
        experiment_id = ExperimentId.parse(self.experiment_id)
        object.__setattr__(self, 'experiment_id', experiment_id)
        object.__setattr__(self, 'sweep_values', _normalize_sweep(experiment_id, self.sweep_values))
        object.__setattr__(self, 'seed', validate_seed(self.seed))
        object.__setattr__(self, 'split_seed', validate_seed(self.split_seed, "split_seed"))
        object.__setattr__(self, 'checkpoints', validate_sweep_values(
            tuple(validate_int(c, "checkpoint epoch", minimum=1) for c in self.checkpoints), "checkpoints"))
        for name in ('nve_grid_db', 'curve_grid_db'):
            grid = tuple(validate_float(x, name) for x in getattr(self, name))
            object.__setattr__(self, name, validate_sweep_values(grid, name))
        for name in ('nve_words_per_snr', 'curve_words_per_snr', 'map_words_per_snr', 'histogram_trials'):
            object.__setattr__(self, name, validate_int(getattr(self, name), name, minimum=1))
        object.__setattr__(self, 'histogram_ebn0_db',
                           validate_float(self.histogram_ebn0_db, "histogram_ebn0_db"))
        if experiment_id is ExperimentId.COVERAGE_HISTOGRAM and len(self.sweep_values) != 1:
            raise ValueError("coverage-histogram takes exactly one coverage percentage")
        if experiment_id is ExperimentId.COVERAGE_HISTOGRAM and self.sweep_values[0] >= 100.0:
            raise ValueError("coverage-histogram needs unseen codewords; use a percentage below 100")

    @property
    def family(self) -> CodeFamily:
        return self.base.code.family

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment_id': self.experiment_id.value,
            'base': self.base.to_dict(),
            'sweep_values': [list(v) if isinstance(v, tuple) else v for v in self.sweep_values],
            'output_dir': self.output_dir,
            'seed': self.seed,
            'checkpoints': list(self.checkpoints),
            'nve_grid_db': list(self.nve_grid_db),
            'nve_words_per_snr': self.nve_words_per_snr,
            'curve_grid_db': list(self.curve_grid_db),
            'curve_words_per_snr': self.curve_words_per_snr,
            'map_words_per_snr': self.map_words_per_snr,
            'histogram_ebn0_db': self.histogram_ebn0_db,
            'histogram_trials': self.histogram_trials,
            'split_seed': self.split_seed,
            'retrain': self.retrain,
            'model_path': self.model_path,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentSpec':
        if not isinstance(data, dict):
            raise ValueError("experiment spec must be a JSON object")
        values = dict(data)
        values['base'] = TrainConfig.from_dict(values['base'])
        values['sweep_values'] = tuple(tuple(v) if isinstance(v, list) else v for v in values['sweep_values'])
        for name in ('checkpoints', 'nve_grid_db', 'curve_grid_db'):
            if name in values:
                values[name] = tuple(values[name])
        return cls(**values)


def default_sweep(experiment_id: ExperimentId, family='polar') -> tuple:
    experiment_id = ExperimentId.parse(experiment_id)
    if experiment_id is ExperimentId.SCALABILITY and CodeFamily.parse(family) is CodeFamily.RANDOM:
        # Random codes must respect the sphere-packing limit.
        min_dist = CODE_SETTINGS['min_random_distance']
        return tuple((n, k) for n, k in EXPERIMENT_SETTINGS['scalability_codes']
                     if (1 << k) <= hamming_bound_capacity(n, min_dist))
    return {
        ExperimentId.TRAIN_SNR_SWEEP: EXPERIMENT_SETTINGS['train_snr_sweep_db'],
        ExperimentId.EPOCH_SWEEP: EXPERIMENT_SETTINGS['epoch_sweep'],
        ExperimentId.LLR_LOSS_CURVES: EXPERIMENT_SETTINGS['learning_curve_checkpoints'],
        ExperimentId.ARCHITECTURE_SWEEP: EXPERIMENT_SETTINGS['architectures'],
        ExperimentId.SCALABILITY: EXPERIMENT_SETTINGS['scalability_codes'],
        ExperimentId.COVERAGE: EXPERIMENT_SETTINGS['coverage_percents'],
        ExperimentId.COVERAGE_HISTOGRAM: (EXPERIMENT_SETTINGS['histogram_percent'],),
    }[experiment_id]


def default_spec(experiment_id, family='polar', block_length: int = 16, info_bits: int = 8,
                 code_seed: int = 0, seed: int = DEFAULT_SEED, **overrides) -> ExperimentSpec:
    """
    Default settings for one experiment: 128-64-32 network, MSE loss, channel
    inputs, 1 dB training SNR for polar and 4 dB for random codes.

    ``overrides`` replace ExperimentSpec fields after the defaults are filled in.
    """
    experiment_id = ExperimentId.parse(experiment_id)
    code = CodeParams(family=family, block_length=block_length, info_bits=info_bits, seed=code_seed)
    hidden_dims = TRAINING_SETTINGS['hidden_dims']
    epochs = TRAINING_SETTINGS['epochs']
    checkpoints = EXPERIMENT_SETTINGS['learning_curve_checkpoints']
    if experiment_id is ExperimentId.SCALABILITY:
        hidden_dims = EXPERIMENT_SETTINGS['scalability_hidden_dims']
    elif experiment_id is ExperimentId.EPOCH_SWEEP:
        epochs = max(EXPERIMENT_SETTINGS['epoch_sweep'])
    elif experiment_id in (ExperimentId.COVERAGE, ExperimentId.COVERAGE_HISTOGRAM):
        epochs = EXPERIMENT_SETTINGS['coverage_epochs']
    base = TrainConfig(
        code=code,
        hidden_dims=hidden_dims,
        loss=TRAINING_SETTINGS['loss'],
        train_ebn0_db=TRAINING_SETTINGS['train_ebn0_db'][code.family.value],
        epochs=epochs,
        init_seed=seed,
        noise_seed=seed,
    )
    spec = ExperimentSpec(
        experiment_id=experiment_id,
        base=base,
        sweep_values=default_sweep(experiment_id, code.family),
        seed=seed,
        checkpoints=checkpoints,
        split_seed=seed,
    )
    return replace(spec, **overrides) if overrides else spec


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """
    BLER curves of a decoder trained on a coverage subset.

    ``bler_on_unseen`` is None when the subset covers every codeword.
    """
    percent: float
    bler_on_unseen: Optional[BerCurve]
    bler_on_all: BerCurve
    per_word_bler: Tuple[Tuple[int, float], ...] = ()
    unseen_omitted: bool = False

    def __post_init__(self):
        for index, value in self.per_word_bler:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"per-word BLER of codeword {index} must lie in [0, 1], got {value}")
