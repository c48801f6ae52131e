"""Single-hidden-layer perceptron trained by backpropagation with momentum.

Used as the rescoring classifier: utterances are pooled into fixed-length
vectors, the network produces per-keyword posteriors, and training is
full-batch gradient descent with a momentum term and early stopping on a
held-out split. Everything is seeded and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, MissingClass

INIT_RANGE = 0.2


@dataclass
class Mlp:
    """Weights of a [D_in, H, C] network: sigmoid hidden, softmax output."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def copy(self) -> "Mlp":
        return Mlp(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


@dataclass
class Velocity:
    """Momentum state, one array per parameter tensor."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def zeros_like(cls, mlp: Mlp) -> "Velocity":
        return cls(
            np.zeros_like(mlp.w1),
            np.zeros_like(mlp.b1),
            np.zeros_like(mlp.w2),
            np.zeros_like(mlp.b2),
        )


@dataclass(frozen=True)
class AnnTrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 200
    seed: int = 0
    patience: int = 20
    hidden_units: int = 32

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


def init_mlp(d_in: int, hidden: int, n_classes: int, seed: int = 0) -> Mlp:
    """Seeded uniform(-0.2, 0.2) initialization of all parameters."""
    rng = np.random.default_rng(seed)
    return Mlp(
        w1=rng.uniform(-INIT_RANGE, INIT_RANGE, (hidden, d_in)),
        b1=rng.uniform(-INIT_RANGE, INIT_RANGE, hidden),
        w2=rng.uniform(-INIT_RANGE, INIT_RANGE, (n_classes, hidden)),
        b2=rng.uniform(-INIT_RANGE, INIT_RANGE, n_classes),
    )


def pool_utterance(features, segments: int = 8) -> np.ndarray:
    """Pool a T x D feature matrix into a fixed S*D vector of segment means.

    Frames are split into S contiguous segments as evenly as possible, the
    first T mod S segments getting one extra frame. With fewer frames than
    segments, segment i degenerates to the single frame at floor(i*T/S), so
    one frame fills all segments.
    """
    rows = np.asarray(getattr(features, "rows", features), dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise ValueError("need a T x D matrix with T >= 1")
    if segments < 1:
        raise ValueError("segments must be >= 1")
    n_frames = rows.shape[0]
    if n_frames >= segments:
        base, extra = divmod(n_frames, segments)
        sizes = [base + 1] * extra + [base] * (segments - extra)
        bounds = np.concatenate(([0], np.cumsum(sizes)))
        means = [rows[bounds[i]:bounds[i + 1]].mean(axis=0) for i in range(segments)]
    else:
        means = [rows[(i * n_frames) // segments] for i in range(segments)]
    return np.concatenate(means)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _forward_batch(mlp: Mlp, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hidden = _sigmoid(x @ mlp.w1.T + mlp.b1)
    log_probs = _log_softmax(hidden @ mlp.w2.T + mlp.b2)
    return hidden, log_probs


def mlp_forward(mlp: Mlp, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one input vector (softmax, max-subtracted)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (mlp.layer_sizes[0],):
        raise DimMismatch(f"input of shape {x.shape}, expected ({mlp.layer_sizes[0]},)")
    _, log_probs = _forward_batch(mlp, x[None, :])
    return np.exp(log_probs[0])


def cross_entropy_loss(mlp: Mlp, x: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy of integer labels under the network's posteriors."""
    _, log_probs = _forward_batch(mlp, np.asarray(x, dtype=np.float64))
    return float(-log_probs[np.arange(len(labels)), labels].mean())


def backprop_step(
    mlp: Mlp,
    x: np.ndarray,
    y_onehot: np.ndarray,
    config: AnnTrainConfig,
    velocity: Velocity,
) -> float:
    """One momentum gradient step on the mean cross-entropy of the batch.

    Updates mlp and velocity in place: v <- mu*v - eta*g, w <- w + v.
    Returns the batch loss at the pre-update parameters.
    """
    x = np.asarray(x, dtype=np.float64)
    y_onehot = np.asarray(y_onehot, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != mlp.layer_sizes[0]:
        raise DimMismatch(f"batch of dim {x.shape[-1]}, expected {mlp.layer_sizes[0]}")
    if y_onehot.shape != (x.shape[0], mlp.layer_sizes[2]):
        raise DimMismatch("one-hot labels do not match batch size / class count")
    if x.shape[0] == 0:
        raise ValueError("batch is empty")

    hidden, log_probs = _forward_batch(mlp, x)
    probs = np.exp(log_probs)
    loss = float(-(y_onehot * log_probs).sum(axis=1).mean())

    batch = x.shape[0]
    d_logits = (probs - y_onehot) / batch
    g_w2 = d_logits.T @ hidden
    g_b2 = d_logits.sum(axis=0)
    d_hidden = (d_logits @ mlp.w2) * hidden * (1.0 - hidden)
    g_w1 = d_hidden.T @ x
    g_b1 = d_hidden.sum(axis=0)

    mu, eta = config.momentum, config.learning_rate
    for param, vel, grad in (
        (mlp.w1, "w1", g_w1),
        (mlp.b1, "b1", g_b1),
        (mlp.w2, "w2", g_w2),
        (mlp.b2, "b2", g_b2),
    ):
        v = mu * getattr(velocity, vel) - eta * grad
        setattr(velocity, vel, v)
        param += v
    return loss


def train_ann(
    x: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    config: AnnTrainConfig | None = None,
) -> tuple[Mlp, list[tuple[float, float]]]:
    """Full-batch training with early stopping on a 90/10 held-out split.

    Returns the parameters of the epoch with the best held-out loss plus the
    per-epoch (train_loss, held_out_loss) history. Deterministic for a given
    config seed. When the dataset is too small to split, the training set
    doubles as the held-out set.
    """
    config = config or AnnTrainConfig()
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    counts = np.bincount(labels, minlength=n_classes)
    if np.any(counts == 0):
        missing = int(np.flatnonzero(counts == 0)[0])
        raise MissingClass(f"class {missing} has no training examples")

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(labels))
    n_val = len(labels) // 10
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if n_val == 0:
        val_idx = train_idx
    x_train, y_train = x[train_idx], labels[train_idx]
    x_val, y_val = x[val_idx], labels[val_idx]
    onehot = np.eye(n_classes)[y_train]

    mlp = init_mlp(x.shape[1], config.hidden_units, n_classes, config.seed)
    velocity = Velocity.zeros_like(mlp)
    best = mlp.copy()
    best_val = cross_entropy_loss(mlp, x_val, y_val)
    stale = 0
    history: list[tuple[float, float]] = []
    for _ in range(config.epochs):
        backprop_step(mlp, x_train, onehot, config, velocity)
        train_loss = cross_entropy_loss(mlp, x_train, y_train)
        val_loss = cross_entropy_loss(mlp, x_val, y_val)
        history.append((train_loss, val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best = mlp.copy()
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break
    return best, history
