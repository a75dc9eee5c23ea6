"""
artifacts.py
Reading and writing the toolkit's files: codebook text, model checkpoints,
BER curve and summary CSVs, and run manifests.

Every writer goes through ``atomic_output`` so an interrupted run never leaves
a complete-looking file behind.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from neural_channel_decoding import __version__
from neural_channel_decoding.core.codebook import (
    Codebook,
    CodeFamily,
    CodeParams,
    message_bits,
    polar_frozen_set,
)
from neural_channel_decoding.core.metrics import CURVE_COLUMNS, BerCurve
from neural_channel_decoding.core.neural_net import Mlp, TrainConfig
from neural_channel_decoding.core.utils import atomic_output

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.17g'
CHECKPOINT_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Codebooks
# ---------------------------------------------------------------------------

def save_codebook(codebook: Codebook, path) -> Path:
    """Header ``family N k seed``, then one 0/1 line per codeword in message order."""
    params = codebook.params
    lines = [f"{params.family.value} {params.block_length} {params.info_bits} {params.seed}"]
    lines.extend(''.join('1' if bit else '0' for bit in row) for row in codebook.codewords)
    with atomic_output(path) as temp_path:
        temp_path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    logger.info(f"Codebook written to {path} ({codebook.size} codewords)")
    return Path(path)


def load_codebook(path) -> Codebook:
    text = Path(path).read_text(encoding='utf-8')
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: codebook file is empty")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError(f"{path}: header must be 'family N k seed', got {lines[0]!r}")
    try:
        params = CodeParams(family=header[0], block_length=int(header[1]),
                            info_bits=int(header[2]), seed=int(header[3]))
    except ValueError as e:
        raise ValueError(f"{path}: invalid header: {e}")
    rows = lines[1:]
    if len(rows) != params.num_codewords:
        raise ValueError(f"{path}: expected {params.num_codewords} codewords, found {len(rows)}")
    for number, row in enumerate(rows, start=2):
        if len(row) != params.block_length or set(row) - {'0', '1'}:
            raise ValueError(f"{path}: line {number} must be {params.block_length} characters of 0/1")
    codewords = np.array([[int(c) for c in row] for row in rows], dtype=np.uint8).reshape(
        params.num_codewords, params.block_length)
    frozen = (polar_frozen_set(params.block_length, params.info_bits)
              if params.family is CodeFamily.POLAR else None)
    return Codebook(params=params, codewords=codewords,
                    messages=message_bits(params.info_bits), frozen_set=frozen)


# ---------------------------------------------------------------------------
# Model checkpoints
# ---------------------------------------------------------------------------

def checkpoint_document(mlp: Mlp, train_config: Optional[TrainConfig] = None,
                        loss_log: Optional[List[float]] = None,
                        extra: Optional[Dict[str, Any]] = None) -> dict:
    document = {
        'format_version': CHECKPOINT_FORMAT_VERSION,
        'toolkit_version': __version__,
        'layer_dims': list(mlp.layer_dims),
        'weights': [w.tolist() for w in mlp.weights],
        'biases': [b.tolist() for b in mlp.biases],
        'activations': mlp.activations,
        'train_config': train_config.to_dict() if train_config else None,
        'loss_log': [float(x) for x in (loss_log or [])],
    }
    if extra:
        document.update(extra)
    return document


def save_checkpoint(path, mlp: Mlp, train_config: Optional[TrainConfig] = None,
                    loss_log: Optional[List[float]] = None,
                    extra: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write a model as one JSON document.

    json serialises floats with their shortest round-trip repr, so weights
    load back bit for bit.
    """
    document = checkpoint_document(mlp, train_config, loss_log, extra)
    with atomic_output(path) as temp_path:
        with open(temp_path, 'w', encoding='utf-8') as f:
            json.dump(document, f)
            f.write('\n')
    logger.info(f"Checkpoint written to {path}")
    return Path(path)


def load_checkpoint(path):
    """Return (mlp, train_config or None, loss_log, document)."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not a valid checkpoint JSON document: {e}")
    for key in ('layer_dims', 'weights', 'biases'):
        if key not in document:
            raise ValueError(f"{path}: checkpoint is missing '{key}'")
    activations = document.get('activations') or []
    hidden = activations[0] if len(activations) > 1 else 'relu'
    output = activations[-1] if activations else 'sigmoid'
    mlp = Mlp(
        layer_dims=tuple(document['layer_dims']),
        weights=tuple(np.array(w, dtype=np.float64).reshape(d_out, d_in) for w, d_in, d_out in
                      zip(document['weights'], document['layer_dims'][:-1], document['layer_dims'][1:])),
        biases=tuple(np.array(b, dtype=np.float64) for b in document['biases']),
        hidden_activation=hidden,
        output_activation=output,
    )
    config_data = document.get('train_config')
    train_config = TrainConfig.from_dict(config_data) if config_data else None
    return mlp, train_config, list(document.get('loss_log') or []), document


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def write_table_csv(frame: pd.DataFrame, path) -> Path:
    with atomic_output(path) as temp_path:
        frame.to_csv(temp_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return Path(path)


def read_table_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision='round_trip')


def write_curve_csv(curve: BerCurve, path) -> Path:
    return write_table_csv(curve.frame, path)


def read_curve_csv(path) -> BerCurve:
    frame = read_table_csv(path)
    if list(frame.columns) != CURVE_COLUMNS:
        raise ValueError(f"{path}: BER curve header must be {','.join(CURVE_COLUMNS)}")
    return BerCurve(frame)


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def write_manifest(path, payload: Dict[str, Any]) -> Path:
    """JSON manifest; the toolkit version is always included."""
    document = {'toolkit_version': __version__}
    document.update(payload)
    with atomic_output(path) as temp_path:
        with open(temp_path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2, sort_keys=True)
            f.write('\n')
    return Path(path)


def read_manifest(path) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
