"""nnd: command-line front end for neural channel decoding.

Usage examples::

    nnd codebook --family polar --n 16 --k 8 --output polar_16_8.txt
    nnd train --family polar --n 16 --k 8 --hidden 128,64,32 --train-ebn0 1.0 \\
        --epochs 65536 --loss mse --input channel --output model.json
    nnd evaluate --model model.json --snr 0:5:20 --words 20000 --nve --output nnd.csv
    nnd evaluate --model model.json --decoder map --snr 0:5:11 --output map.csv
    nnd experiment coverage --p 80 --family polar --outdir results
    nnd --config run.ini --jobs 4 experiment train-snr-sweep --family random

Every command writes its output to ``<path>.incomplete`` first and renames it
on success, then records a manifest whose ``argv`` replays the command.
``NND_SEED`` supplies the default master seed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from neural_channel_decoding import __version__
from neural_channel_decoding.core import config as nnd_config
from neural_channel_decoding.core.channel import InputMode
from neural_channel_decoding.core.codebook import (
    CodeFamily,
    CodeParams,
    enumerate_codebook,
    min_distance,
    split_codebook,
)
from neural_channel_decoding.core.config_io import apply_config_defaults, options_to_argv, read_config_file
from neural_channel_decoding.core.metrics import nve
from neural_channel_decoding.core.neural_net import LossKind, TrainConfig, train, validation_loss
from neural_channel_decoding.core.map_oracle import MapDecoder, map_ber_curve
from neural_channel_decoding.core.result_cache import map_reference_curve
from neural_channel_decoding.core.simulation import nnd_ber_curve
from neural_channel_decoding.core.utils import format_grid, parse_snr_grid
from neural_channel_decoding.export.artifacts import (
    load_checkpoint,
    load_codebook,
    read_curve_csv,
    save_checkpoint,
    save_codebook,
    write_curve_csv,
    write_manifest,
)
from neural_channel_decoding.experiments.runners import run_experiment
from neural_channel_decoding.experiments.specs import ExperimentId, default_spec

logger = logging.getLogger(__name__)

# Options that belong to the top-level parser rather than a subcommand.
_GLOBAL_OPTIONS = ('log_level', 'jobs')
# Bookkeeping attributes that never go into manifests.
_INTERNAL_OPTIONS = ('command', 'config', 'log_level', 'jobs')


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        value = int(str(text), 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(str(text), 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned value, got {value}")
    return value


def _dims(text: str) -> tuple:
    """``128,64,32`` (``-`` separators are accepted too)."""
    parts = [p for p in str(text).replace('-', ',').split(',') if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("expected at least one layer width")
    return tuple(_positive_int(p) for p in parts)


def _grid(text: str) -> tuple:
    try:
        return tuple(float(x) for x in parse_snr_grid(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_list(text: str) -> tuple:
    parts = [p for p in str(text).split(',') if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    return tuple(_positive_int(p) for p in parts)


def _parse_sweep(experiment_id: ExperimentId, text: str) -> tuple:
    """
    Sweep values as typed on the command line:

    train-snr-sweep     0:8:9 or 0,2,4
    epoch-sweep         1024,4096
    llr-loss-curves     256,1024 (checkpoint epochs)
    architecture-sweep  128-64-32,256-128-64
    scalability         16x4,16x8,32x8
    coverage(-histogram) 20,40,80
    """
    items = [item.strip() for item in str(text).split(',') if item.strip()]
    if not items:
        raise ValueError("sweep must not be empty")
    if experiment_id is ExperimentId.TRAIN_SNR_SWEEP:
        return tuple(float(x) for x in parse_snr_grid(text))
    if experiment_id is ExperimentId.ARCHITECTURE_SWEEP:
        return tuple(tuple(int(w) for w in item.split('-')) for item in items)
    if experiment_id is ExperimentId.SCALABILITY:
        pairs = []
        for item in items:
            n, sep, k = item.lower().partition('x')
            if not sep:
                raise ValueError(f"scalability points look like NxK, got {item!r}")
            pairs.append((int(n), int(k)))
        return tuple(pairs)
    if experiment_id in (ExperimentId.COVERAGE, ExperimentId.COVERAGE_HISTOGRAM):
        return tuple(float(item) for item in items)
    return tuple(int(item, 0) for item in items)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _manifest_path(output: Path) -> Path:
    return output.with_name(output.name + '.manifest.json')


def _options(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: value for key, value in vars(args).items()
            if key not in _INTERNAL_OPTIONS and not callable(value)}


def _replay_argv(args: argparse.Namespace, subparser: argparse.ArgumentParser,
                 positionals: Optional[List[str]] = None) -> List[str]:
    """Explicit flag list that repeats this run without a config file."""
    argv = [f"--log-level={args.log_level}", f"--jobs={args.jobs}", args.command]
    argv.extend(positionals or [])
    argv.extend(options_to_argv(subparser, _options(args)))
    return argv


def _code_from_flags(args: argparse.Namespace, parser: argparse.ArgumentParser) -> CodeParams:
    missing = [flag for flag, value in (('--family', args.family), ('--n', args.n), ('--k', args.k))
               if value is None]
    if missing:
        parser.error(f"the following arguments are required: {', '.join(missing)}")
    return CodeParams(family=args.family, block_length=args.n, info_bits=args.k, seed=args.code_seed)


def _require(parser: argparse.ArgumentParser, **values: Any) -> None:
    missing = [f"--{name.replace('_', '-')}" for name, value in values.items() if value is None]
    if missing:
        parser.error(f"the following arguments are required: {', '.join(missing)}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_codebook(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _require(parser, output=args.output)
    code = _code_from_flags(args, parser)
    codebook = enumerate_codebook(code)
    output = Path(args.output)
    save_codebook(codebook, output)
    distance = min_distance(codebook)
    write_manifest(_manifest_path(output), {
        'command': 'codebook',
        'options': _options(args),
        'argv': _replay_argv(args, parser),
        'min_distance': distance,
    })
    print(f"{code.family.value} N={code.block_length} k={code.info_bits} seed={code.seed}: "
          f"{codebook.size} codewords, min distance {distance} -> {output}")
    return 0


def _cmd_train(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _require(parser, output=args.output)
    if args.codebook:
        codebook = load_codebook(args.codebook)
    else:
        codebook = enumerate_codebook(_code_from_flags(args, parser))
    code = codebook.params
    split = None
    if args.coverage_p is not None:
        split = split_codebook(codebook, args.coverage_p, args.split_seed)
    train_ebn0 = args.train_ebn0
    if train_ebn0 is None:
        train_ebn0 = nnd_config.TRAINING_SETTINGS['train_ebn0_db'][code.family.value]
    config = TrainConfig(
        code=code,
        hidden_dims=args.hidden or nnd_config.TRAINING_SETTINGS['hidden_dims'],
        loss=args.loss,
        input_mode=args.input,
        train_ebn0_db=train_ebn0,
        epochs=args.epochs,
        learning_rate=args.lr,
        init_seed=args.seed,
        noise_seed=args.seed,
        train_subset=split,
    )
    result = train(config, codebook=codebook)
    # Held-out words at the training SNR, on a stream training never draws from.
    held_out = validation_loss(result.mlp, codebook, config.train_ebn0_db, config.input_mode, config.loss,
                               nnd_config.TRAINING_SETTINGS['validation_words'], args.seed)
    output = Path(args.output)
    save_checkpoint(output, result.mlp, config, result.loss_log)
    write_manifest(_manifest_path(output), {
        'command': 'train',
        'options': _options(args),
        'train_config': config.to_dict(),
        'final_loss': float(result.loss_log[-1]),
        'validation_loss': float(held_out),
        'argv': _replay_argv(args, parser),
    })
    print(f"Trained {config.architecture_label} for {config.epochs} epochs "
          f"(final loss {result.loss_log[-1]:.6g}, validation loss {held_out:.6g}) -> {output}")
    return 0


def _cmd_evaluate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _require(parser, output=args.output)
    if args.decoder == 'nnd':
        _require(parser, model=args.model)
    if args.map_curve and args.nve:
        parser.error("--map-curve and --nve are mutually exclusive")
    mlp = config = None
    if args.model:
        mlp, config, _, _ = load_checkpoint(args.model)
    if args.codebook:
        codebook = load_codebook(args.codebook)
    elif config is not None:
        codebook = enumerate_codebook(config.code)
    else:
        codebook = enumerate_codebook(_code_from_flags(args, parser))

    indices = None
    if args.subset != 'all':
        if config is None or config.train_subset is None:
            raise ValueError(f"--subset {args.subset} needs a model trained with --coverage-p")
        indices = config.train_subset.seen if args.subset == 'seen' else config.train_subset.unseen
        if not indices:
            raise ValueError(f"the model's {args.subset} subset is empty")

    grid = args.snr
    if args.decoder == 'map':
        curve = map_ber_curve(MapDecoder.from_codebook(codebook), grid, words_per_snr=args.words,
                              seed=args.seed, jobs=args.jobs, message_indices=indices)
    else:
        input_mode = config.input_mode if config is not None else InputMode.CHANNEL_VALUES
        curve = nnd_ber_curve(mlp, codebook, grid, args.words, args.seed, input_mode=input_mode,
                              message_indices=indices, jobs=args.jobs)

    output = Path(args.output)
    manifest: Dict[str, Any] = {
        'command': 'evaluate',
        'options': _options(args),
        'snr_grid': format_grid(grid),
        'argv': _replay_argv(args, parser),
    }
    # The NVE is settled before anything is written.
    outcome = None
    if args.decoder == 'nnd' and (args.map_curve or args.nve):
        if args.map_curve:
            map_curve = read_curve_csv(args.map_curve)
        else:
            map_curve = map_reference_curve(codebook, grid, args.words, args.seed, args.jobs,
                                            message_indices=indices)
        train_ebn0 = config.train_ebn0_db if config is not None else float('nan')
        outcome = nve(curve, map_curve, train_ebn0)
        manifest['nve'] = outcome.to_dict()
    write_curve_csv(curve, output)
    if outcome is not None:
        print(f"NVE = {outcome.nve:.6g} over {len(outcome.ratios)} point(s)"
              + (f", {len(outcome.skipped_points)} skipped" if outcome.skipped_points else ""))
    write_manifest(_manifest_path(output), manifest)
    print(f"{args.decoder.upper()} curve over {len(curve)} SNR point(s) -> {output}")
    return 0


def _cmd_experiment(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    experiment_id = ExperimentId.parse(args.experiment)
    code = CodeParams(family=args.family or 'polar', block_length=args.n or 16,
                      info_bits=args.k if args.k is not None else 8, seed=args.code_seed)
    overrides: Dict[str, Any] = {}
    if args.sweep is not None and args.p is not None:
        parser.error("--sweep and --p are mutually exclusive")
    sweep_text = args.sweep if args.sweep is not None else args.p
    if sweep_text is not None:
        overrides['sweep_values'] = _parse_sweep(experiment_id, sweep_text)
    for name in ('checkpoints', 'nve_words_per_snr', 'curve_words_per_snr', 'map_words_per_snr',
                 'histogram_ebn0_db', 'histogram_trials', 'model_path'):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.nve_snr is not None:
        overrides['nve_grid_db'] = args.nve_snr
    if args.curve_snr is not None:
        overrides['curve_grid_db'] = args.curve_snr
    if args.split_seed is not None:
        overrides['split_seed'] = args.split_seed
    if args.retrain:
        overrides['retrain'] = True
    overrides['output_dir'] = args.outdir

    spec = default_spec(experiment_id, family=code.family, block_length=code.block_length,
                        info_bits=code.info_bits, code_seed=code.seed, seed=args.seed, **overrides)
    base_changes: Dict[str, Any] = {}
    if args.hidden is not None:
        base_changes['hidden_dims'] = args.hidden
    if args.train_ebn0 is not None:
        base_changes['train_ebn0_db'] = args.train_ebn0
    if args.epochs is not None:
        base_changes['epochs'] = args.epochs
    if args.loss is not None:
        base_changes['loss'] = args.loss
    if args.input is not None:
        base_changes['input_mode'] = args.input
    if args.lr is not None:
        base_changes['learning_rate'] = args.lr
    if base_changes:
        spec = replace(spec, base=replace(spec.base, **base_changes))

    run_experiment(spec, jobs=args.jobs, argv=_replay_argv(args, parser, [experiment_id.value]))
    print(f"{experiment_id.value} finished -> {Path(spec.output_dir) / experiment_id.value}")
    return 0


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------

def _add_code_arguments(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--family", choices=[f.value for f in CodeFamily], default=None, help="Code family")
    sp.add_argument("--n", type=_positive_int, default=None, help="Block length N")
    sp.add_argument("--k", type=int, default=None, help="Information bits k")
    sp.add_argument("--code-seed", dest="code_seed", type=_seed, default=0,
                    help="Seed of the random-code construction (default: 0)")


def _add_training_arguments(sp: argparse.ArgumentParser, defaults: bool) -> None:
    training = nnd_config.TRAINING_SETTINGS
    sp.add_argument("--hidden", type=_dims, default=None,
                    help="Hidden layer widths, e.g. 128,64,32 (default: 128,64,32)")
    sp.add_argument("--train-ebn0", dest="train_ebn0", type=float, default=None,
                    help="Training Eb/N0 in dB (default: 1 for polar, 4 for random codes)")
    sp.add_argument("--epochs", type=_positive_int, default=training['epochs'] if defaults else None,
                    help=f"Training epochs (default: {training['epochs']})")
    sp.add_argument("--loss", choices=[l.value for l in LossKind],
                    default=training['loss'] if defaults else None, help="Loss function")
    sp.add_argument("--input", choices=[m.value for m in InputMode],
                    default=nnd_config.CHANNEL_SETTINGS['default_input_mode'] if defaults else None,
                    help="Decoder input: raw channel values or LLRs")
    sp.add_argument("--lr", type=float, default=training['learning_rate'] if defaults else None,
                    help=f"Adam learning rate (default: {training['learning_rate']})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnd",
        description="Train and evaluate neural network decoders for short block codes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None,
                        help="Flat key = value file of option defaults; explicit flags win")
    parser.add_argument("--log-level", dest="log_level", default=nnd_config.LOG_LEVEL,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        type=str.upper, help="Logging level (default: NND_LOG_LEVEL or INFO)")
    parser.add_argument("--jobs", type=_positive_int, default=1,
                        help="Worker threads for Monte Carlo evaluation and sweeps (default: 1)")

    sub = parser.add_subparsers(dest="command", required=True)
    seed_help = f"Master seed (default: NND_SEED or {nnd_config.DEFAULT_SEED})"

    # codebook
    cb = sub.add_parser("codebook", help="Build a codebook and write it as text")
    _add_code_arguments(cb)
    cb.add_argument("--output", default=None, help="Codebook file to write")

    # train
    tr = sub.add_parser("train", help="Train a decoder and write a JSON checkpoint")
    _add_code_arguments(tr)
    tr.add_argument("--codebook", default=None, help="Use this codebook file instead of --family/--n/--k")
    _add_training_arguments(tr, defaults=True)
    tr.add_argument("--seed", type=_seed, default=nnd_config.DEFAULT_SEED, help=seed_help)
    tr.add_argument("--coverage-p", dest="coverage_p", type=float, default=None,
                    help="Train on this percentage of the codewords only")
    tr.add_argument("--split-seed", dest="split_seed", type=_seed, default=0,
                    help="Seed of the coverage split (default: 0)")
    tr.add_argument("--output", default=None, help="Checkpoint file to write")

    # evaluate
    ev = sub.add_parser("evaluate", help="Simulate a BER/BLER curve")
    ev.add_argument("--model", default=None, help="Checkpoint written by 'train'")
    ev.add_argument("--decoder", choices=["nnd", "map"], default="nnd", help="Decoder to simulate")
    _add_code_arguments(ev)
    ev.add_argument("--codebook", default=None, help="Codebook file (default: rebuilt from the model's code)")
    ev.add_argument("--snr", type=_grid, default=_grid(
        f"{nnd_config.EVALUATION_SETTINGS['nve_snr_start_db']}:"
        f"{nnd_config.EVALUATION_SETTINGS['nve_snr_stop_db']}:"
        f"{nnd_config.EVALUATION_SETTINGS['nve_snr_points']}"),
        help="Eb/N0 grid: start:stop:count or a comma list (default: 0:5:20)")
    ev.add_argument("--words", type=_positive_int, default=nnd_config.EVALUATION_SETTINGS['nve_words_per_snr'],
                    help="Codewords per SNR point")
    ev.add_argument("--seed", type=_seed, default=nnd_config.DEFAULT_SEED, help=seed_help)
    ev.add_argument("--subset", choices=["all", "seen", "unseen"], default="all",
                    help="Draw messages from the model's coverage subset")
    ev.add_argument("--map-curve", dest="map_curve", default=None,
                    help="MAP curve CSV on the same grid; also report the NVE")
    ev.add_argument("--nve", action="store_true", help="Simulate the MAP curve too and report the NVE")
    ev.add_argument("--output", default=None, help="Curve CSV to write")

    # experiment
    ex = sub.add_parser("experiment", help="Run a complete experiment")
    ex.add_argument("experiment", choices=[e.value for e in ExperimentId], help="Experiment to run")
    _add_code_arguments(ex)
    _add_training_arguments(ex, defaults=False)
    ex.add_argument("--seed", type=_seed, default=nnd_config.DEFAULT_SEED, help=seed_help)
    ex.add_argument("--sweep", default=None, help="Sweep values (format depends on the experiment)")
    ex.add_argument("--p", default=None, help="Coverage percentages, e.g. 20,40,80")
    ex.add_argument("--checkpoints", type=_int_list, default=None,
                    help="Learning-curve checkpoint epochs for architecture-sweep")
    ex.add_argument("--nve-snr", dest="nve_snr", type=_grid, default=None, help="NVE grid (default: 0:5:20)")
    ex.add_argument("--nve-words", dest="nve_words_per_snr", type=_positive_int, default=None,
                    help="Validation words per NVE point (default: 20000)")
    ex.add_argument("--curve-snr", dest="curve_snr", type=_grid, default=None,
                    help="BER/BLER curve grid (default: 0:5:11)")
    ex.add_argument("--curve-words", dest="curve_words_per_snr", type=_positive_int, default=None,
                    help="Words per BER/BLER curve point (default: 100000)")
    ex.add_argument("--map-words", dest="map_words_per_snr", type=_positive_int, default=None,
                    help="Words per MAP reference curve point (default: 1000000)")
    ex.add_argument("--histogram-ebn0", dest="histogram_ebn0_db", type=float, default=None,
                    help="Eb/N0 of the single-word BLER histogram (default: 4.16)")
    ex.add_argument("--histogram-trials", dest="histogram_trials", type=_positive_int, default=None,
                    help="Noise realizations per codeword in the histogram (default: 10000)")
    ex.add_argument("--split-seed", dest="split_seed", type=_seed, default=None,
                    help="Seed of the coverage split (default: the master seed)")
    ex.add_argument("--retrain", action="store_true",
                    help="epoch-sweep: train each budget independently instead of checkpointing one run")
    ex.add_argument("--model-path", dest="model_path", default=None,
                    help="coverage-histogram: reuse a model saved by the coverage experiment")
    ex.add_argument("--outdir", default=nnd_config.EXPERIMENT_SETTINGS['output_dir'],
                    help="Output directory (default: results)")

    parser.subcommand_parsers = {"codebook": cb, "train": tr, "evaluate": ev, "experiment": ex}
    return parser


_HANDLERS: Dict[str, Callable[[argparse.Namespace, argparse.ArgumentParser], int]] = {
    "codebook": _cmd_codebook,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
}


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace,
                  argv: Optional[List[str]]) -> argparse.Namespace:
    """Re-parse with config-file values installed as defaults."""
    values = read_config_file(args.config)
    global_values = {k: v for k, v in values.items() if k in _GLOBAL_OPTIONS}
    command_values = {k: v for k, v in values.items() if k not in _GLOBAL_OPTIONS}
    apply_config_defaults(parser, global_values)
    apply_config_defaults(parser.subcommand_parsers[args.command], command_values)
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
    except ValueError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2

    logging.basicConfig(level=getattr(logging, args.log_level, logging.INFO), format=nnd_config.LOG_FORMAT)

    handler = _HANDLERS.get(args.command)
    if handler is None:
        print(f"Unknown subcommand: {args.command}", file=sys.stderr)
        return 2
    try:
        return handler(args, parser.subcommand_parsers[args.command])
    except ValueError as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
