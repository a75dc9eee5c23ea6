"""
neural_net.py
A small feedforward decoder network written directly against numpy: forward
pass, MSE/BCE losses, backpropagation, Adam and the full-batch training loop.
"""
import enum
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import InputMode, decoder_input, ebn0_to_sigma2, make_rng, transmit
from .codebook import Codebook, CodebookSplit, CodeParams, enumerate_codebook
from .config import TRAINING_SETTINGS
from .validation import (
    TrainingDivergedError,
    validate_float,
    validate_int,
    validate_positive_dims,
    validate_seed,
)

logger = logging.getLogger(__name__)

# Stream ids under the init / noise seeds.
_INIT_STREAM = 0
_NOISE_STREAM = 1
_VALIDATION_STREAM = 2


class LossKind(str, enum.Enum):
    MSE = 'mse'
    BCE = 'bce'

    @classmethod
    def parse(cls, value) -> 'LossKind':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            allowed = ', '.join(member.value for member in cls)
            raise ValueError(f"loss must be one of {{{allowed}}}, got {value!r}")


# ---------------------------------------------------------------------------
# Activations and losses
# ---------------------------------------------------------------------------

def relu(z) -> np.ndarray:
    return np.maximum(0.0, np.asarray(z, dtype=np.float64))


def sigmoid(z) -> np.ndarray:
    """Logistic function evaluated through exp(-|z|), so it never overflows."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def mse_loss(bits, estimates) -> float:
    bits = np.asarray(bits, dtype=np.float64)
    estimates = np.asarray(estimates, dtype=np.float64)
    _check_same_shape(bits, estimates)
    return float(np.mean((bits - estimates) ** 2))


def bce_loss(bits, estimates) -> float:
    bits = np.asarray(bits, dtype=np.float64)
    estimates = np.asarray(estimates, dtype=np.float64)
    _check_same_shape(bits, estimates)
    clamp = TRAINING_SETTINGS['bce_clamp']
    clipped = np.clip(estimates, clamp, 1.0 - clamp)
    return float(-np.mean(bits * np.log(clipped) + (1.0 - bits) * np.log(1.0 - clipped)))


def _check_same_shape(bits: np.ndarray, estimates: np.ndarray) -> None:
    if bits.shape != estimates.shape:
        raise ValueError(f"label shape {bits.shape} does not match estimate shape {estimates.shape}")


def compute_loss(loss, bits, estimates) -> float:
    if LossKind.parse(loss) is LossKind.BCE:
        return bce_loss(bits, estimates)
    return mse_loss(bits, estimates)


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mlp:
    """
    Weights are stored fan_out x fan_in, so layer l maps a row vector a to
    a @ W[l].T + b[l]. Hidden layers use ReLU, the output layer a sigmoid.
    """
    layer_dims: Tuple[int, ...]
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    hidden_activation: str = 'relu'
    output_activation: str = 'sigmoid'

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, 'layer_dims', dims)
        if len(dims) < 2:
            raise ValueError(f"a network needs at least an input and an output layer, got {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and one bias vector are needed per layer")
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            expected = (dims[index + 1], dims[index])
            if weight.shape != expected:
                raise ValueError(f"weight {index} must have shape {expected}, got {weight.shape}")
            if bias.shape != (dims[index + 1],):
                raise ValueError(f"bias {index} must have length {dims[index + 1]}, got {bias.shape}")
        if self.hidden_activation != 'relu' or self.output_activation != 'sigmoid':
            raise ValueError("only ReLU hidden layers with a sigmoid output are supported")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def activations(self) -> List[str]:
        return [self.hidden_activation] * (self.num_layers - 1) + [self.output_activation]

    def parameters(self) -> List[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...]."""
        params = []
        for weight, bias in zip(self.weights, self.biases):
            params.extend((weight, bias))
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> 'Mlp':
        return replace(self, weights=tuple(params[0::2]), biases=tuple(params[1::2]))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())


@dataclass(frozen=True, eq=False)
class Gradients:
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    def as_list(self) -> List[np.ndarray]:
        grads = []
        for weight, bias in zip(self.weights, self.biases):
            grads.extend((weight, bias))
        return grads


def init_mlp(layer_dims: Sequence[int], seed: int) -> Mlp:
    """Glorot-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    dims = validate_positive_dims(layer_dims, "layer_dims")
    rng = make_rng(validate_seed(seed, "init_seed"), _INIT_STREAM)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(layer_dims=dims, weights=tuple(weights), biases=tuple(biases))


def _as_batch(mlp: Mlp, inputs) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != mlp.input_dim:
        raise ValueError(f"network expects inputs of length {mlp.input_dim}, got shape {np.shape(inputs)}")
    return x, single


def _forward_pass(mlp: Mlp, x: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Return pre-activations z[l] and activations a[l] (a[0] is the input)."""
    pre_activations, activations = [], [x]
    last = mlp.num_layers - 1
    for index, (weight, bias) in enumerate(zip(mlp.weights, mlp.biases)):
        z = activations[-1] @ weight.T + bias
        pre_activations.append(z)
        activations.append(sigmoid(z) if index == last else relu(z))
    return pre_activations, activations


def forward(mlp: Mlp, inputs) -> np.ndarray:
    """Soft estimates in (0, 1) of each information bit being a 1."""
    x, single = _as_batch(mlp, inputs)
    _, activations = _forward_pass(mlp, x)
    output = activations[-1]
    return output[0] if single else output


def loss_and_gradients(mlp: Mlp, inputs, targets, loss) -> Tuple[float, Gradients]:
    """Mean loss over the batch and its exact gradient."""
    loss = LossKind.parse(loss)
    x, single = _as_batch(mlp, inputs)
    targets = np.asarray(targets, dtype=np.float64)
    if single:
        targets = targets[None, :]
    if targets.shape != (x.shape[0], mlp.output_dim):
        raise ValueError(f"targets must have shape {(x.shape[0], mlp.output_dim)}, got {targets.shape}")

    pre_activations, activations = _forward_pass(mlp, x)
    estimates = activations[-1]
    batch, k = targets.shape

    if loss is LossKind.MSE:
        value = mse_loss(targets, estimates)
        delta = (2.0 / k) * (estimates - targets) * estimates * (1.0 - estimates)
    else:
        value = bce_loss(targets, estimates)
        clamp = TRAINING_SETTINGS['bce_clamp']
        inside = (estimates > clamp) & (estimates < 1.0 - clamp)
        delta = np.where(inside, (estimates - targets) / k, 0.0)
    delta = delta / batch

    weight_grads: List[np.ndarray] = [None] * mlp.num_layers
    bias_grads: List[np.ndarray] = [None] * mlp.num_layers
    for index in range(mlp.num_layers - 1, -1, -1):
        weight_grads[index] = delta.T @ activations[index]
        bias_grads[index] = delta.sum(axis=0)
        if index > 0:
            delta = (delta @ mlp.weights[index]) * (pre_activations[index - 1] > 0)
    return value, Gradients(weights=tuple(weight_grads), biases=tuple(bias_grads))


def backward(mlp: Mlp, inputs, targets, loss) -> Gradients:
    """Gradient of the (batch-mean) loss with respect to every weight and bias."""
    return loss_and_gradients(mlp, inputs, targets, loss)[1]


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdamState:
    m: Tuple[np.ndarray, ...]
    v: Tuple[np.ndarray, ...]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> 'AdamState':
        return cls(
            m=tuple(np.zeros_like(p, dtype=np.float64) for p in params),
            v=tuple(np.zeros_like(p, dtype=np.float64) for p in params),
            t=0,
        )


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
              lr: float, beta1: float, beta2: float, eps: float) -> Tuple[List[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns new parameters and state."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ValueError("parameters, gradients and optimizer state must have the same length")
    t = state.t + 1
    correction1 = 1.0 - beta1 ** t
    correction2 = 1.0 - beta2 ** t
    new_params, new_m, new_v = [], [], []
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if param.shape != grad.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match parameter shape {param.shape}")
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(param - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(m=tuple(new_m), v=tuple(new_v), t=t)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """Everything needed to reproduce one training run bit for bit."""
    code: CodeParams
    hidden_dims: Tuple[int, ...] = TRAINING_SETTINGS['hidden_dims']
    loss: LossKind = LossKind.MSE
    input_mode: InputMode = InputMode.CHANNEL_VALUES
    train_ebn0_db: float = 1.0
    epochs: int = TRAINING_SETTINGS['epochs']
    learning_rate: float = TRAINING_SETTINGS['learning_rate']
    adam_beta1: float = TRAINING_SETTINGS['adam_beta1']
    adam_beta2: float = TRAINING_SETTINGS['adam_beta2']
    adam_epsilon: float = TRAINING_SETTINGS['adam_epsilon']
    init_seed: int = 0
    noise_seed: int = 0
    train_subset: Optional[CodebookSplit] = None

    def __post_init__(self):
        object.__setattr__(self, 'hidden_dims', validate_positive_dims(self.hidden_dims))
        object.__setattr__(self, 'loss', LossKind.parse(self.loss))
        object.__setattr__(self, 'input_mode', InputMode.parse(self.input_mode))
        object.__setattr__(self, 'train_ebn0_db', validate_float(self.train_ebn0_db, "train_ebn0_db", allow_inf=True))
        object.__setattr__(self, 'epochs', validate_int(self.epochs, "epochs", minimum=1))
        lr = validate_float(self.learning_rate, "learning_rate")
        if lr <= 0:
            raise ValueError(f"learning_rate must be positive, got {lr}")
        object.__setattr__(self, 'learning_rate', lr)
        for name in ('adam_beta1', 'adam_beta2'):
            beta = validate_float(getattr(self, name), name)
            if not 0.0 <= beta < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {beta}")
            object.__setattr__(self, name, beta)
        eps = validate_float(self.adam_epsilon, "adam_epsilon")
        if eps <= 0:
            raise ValueError(f"adam_epsilon must be positive, got {eps}")
        object.__setattr__(self, 'adam_epsilon', eps)
        object.__setattr__(self, 'init_seed', validate_seed(self.init_seed, "init_seed"))
        object.__setattr__(self, 'noise_seed', validate_seed(self.noise_seed, "noise_seed"))
        if self.code.info_bits < 1:
            raise ValueError("a decoder needs at least one information bit")
        if self.train_subset is not None:
            total = self.code.num_codewords
            if any(not 0 <= i < total for i in self.train_subset.seen):
                raise ValueError(f"train_subset indices must lie in [0, {total})")

    @property
    def layer_dims(self) -> Tuple[int, ...]:
        return (self.code.block_length,) + self.hidden_dims + (self.code.info_bits,)

    @property
    def architecture_label(self) -> str:
        return '-'.join(str(d) for d in self.hidden_dims)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['code'] = self.code.to_dict()
        data['hidden_dims'] = list(self.hidden_dims)
        data['loss'] = self.loss.value
        data['input_mode'] = self.input_mode.value
        data['train_subset'] = self.train_subset.to_dict() if self.train_subset else None
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainConfig':
        values = dict(data)
        values['code'] = CodeParams.from_dict(values['code'])
        values['hidden_dims'] = tuple(values['hidden_dims'])
        subset = values.get('train_subset')
        values['train_subset'] = CodebookSplit.from_dict(subset) if subset else None
        return cls(**values)


@dataclass(eq=False)
class TrainingResult:
    mlp: Mlp
    loss_log: List[float]
    snapshots: Dict[int, Mlp] = field(default_factory=dict)


def training_set(config: TrainConfig, codebook: Codebook) -> Tuple[np.ndarray, np.ndarray]:
    """Codewords and labels the network is trained on (all of X, or X_p)."""
    if config.train_subset is None:
        return codebook.codewords, codebook.messages.astype(np.float64)
    indices = np.asarray(config.train_subset.seen, dtype=np.int64)
    return codebook.codewords[indices], codebook.messages[indices].astype(np.float64)


def train(config: TrainConfig, checkpoint_epochs: Sequence[int] = (),
          codebook: Optional[Codebook] = None) -> TrainingResult:
    """
    Train a decoder with one full-batch Adam step per epoch.

    Every epoch draws fresh noise for every training codeword, so the network
    never sees the same input twice. ``checkpoint_epochs`` requests copies of the
    network after those many epochs, which is how learning curves are sampled
    from a single run.
    """
    checkpoints = sorted({validate_int(e, "checkpoint epoch", minimum=1) for e in checkpoint_epochs})
    if checkpoints and checkpoints[-1] > config.epochs:
        raise ValueError(f"checkpoint {checkpoints[-1]} lies beyond the {config.epochs} training epochs")
    if codebook is None:
        codebook = enumerate_codebook(config.code)
    codewords, targets = training_set(config, codebook)
    sigma2 = ebn0_to_sigma2(config.train_ebn0_db, config.code.rate)
    rng = make_rng(config.noise_seed, _NOISE_STREAM)

    mlp = init_mlp(config.layer_dims, config.init_seed)
    params = mlp.parameters()
    state = AdamState.zeros_like(params)
    loss_log: List[float] = []
    snapshots: Dict[int, Mlp] = {}
    pending = set(checkpoints)
    log_every = TRAINING_SETTINGS['log_every']

    logger.info(
        f"Training {config.architecture_label} on {config.code.family.value} "
        f"N={config.code.block_length} k={config.code.info_bits} "
        f"({len(codewords)} codewords) at {config.train_ebn0_db} dB for {config.epochs} epochs"
    )
    for epoch in range(1, config.epochs + 1):
        received = transmit(codewords, sigma2, rng)
        inputs = decoder_input(received, sigma2, config.input_mode)
        loss, grads = loss_and_gradients(mlp, inputs, targets, config.loss)
        if not math.isfinite(loss):
            raise TrainingDivergedError(epoch, loss)
        loss_log.append(loss)
        params, state = adam_step(
            params, grads.as_list(), state,
            config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon,
        )
        mlp = mlp.with_parameters(params)
        if epoch in pending:
            if not mlp.is_finite():
                raise TrainingDivergedError(epoch, loss)
            snapshots[epoch] = mlp
        if epoch % log_every == 0:
            logger.info(f"  epoch {epoch}/{config.epochs}: loss={loss:.6g}")

    if not mlp.is_finite():
        raise TrainingDivergedError(config.epochs, loss_log[-1])
    return TrainingResult(mlp=mlp, loss_log=loss_log, snapshots=snapshots)


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def decode(mlp: Mlp, channel_output, input_mode=InputMode.CHANNEL_VALUES,
           sigma2: Optional[float] = None) -> np.ndarray:
    """Hard decisions from one forward pass; an estimate of exactly 0.5 decodes to 0."""
    input_mode = InputMode.parse(input_mode)
    if input_mode is InputMode.LLR and sigma2 is None:
        raise ValueError("LLR input mode needs the noise variance")
    estimates = forward(mlp, decoder_input(channel_output, sigma2, input_mode))
    return (estimates > 0.5).astype(np.uint8)


def validation_loss(mlp: Mlp, codebook: Codebook, ebn0_db: float, input_mode, loss,
                    words: int, seed: int) -> float:
    """Mean loss over ``words`` uniformly drawn, freshly noised codewords."""
    words = validate_int(words, "words", minimum=1)
    rng = make_rng(seed, _VALIDATION_STREAM)
    indices = rng.integers(0, codebook.size, size=words)
    sigma2 = ebn0_to_sigma2(ebn0_db, codebook.params.rate)
    received = transmit(codebook.codewords[indices], sigma2, rng)
    estimates = forward(mlp, decoder_input(received, sigma2, input_mode))
    return compute_loss(loss, codebook.messages[indices], estimates)
