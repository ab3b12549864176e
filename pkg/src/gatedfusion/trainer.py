"""Mini-batch training loop with SGD/Adam and exact-resume semantics.

Shuffle and dropout RNGs are derived from (seed, epoch), so a run resumed at
an epoch boundary from a float64 checkpoint (parameters + optimizer state)
reproduces an unbroken run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, NonFiniteError
from .model import FusionModel
from .sequence import MaskedSequence

SamplePair = tuple[MaskedSequence, MaskedSequence, int]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 16
    weight_decay: float = 0.0
    optimizer: str = "adam"
    use_class_weights: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


class SGD:
    def __init__(self, params: list[T.Parameter], lr: float, weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay

    def step(self) -> None:
        for p in self.params:
            g = p.grad + self.weight_decay * p.data
            p.data -= self.lr * g

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {"t": np.zeros((1, 1))}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        pass


class Adam:
    def __init__(self, params: list[T.Parameter], lr: float, weight_decay: float = 0.0,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.data) for p in params}
        self.v = {p.name: np.zeros_like(p.data) for p in params}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p in self.params:
            g = p.grad + self.weight_decay * p.data
            m = self.m[p.name] = b1 * self.m[p.name] + (1 - b1) * g
            v = self.v[p.name] = b2 * self.v[p.name] + (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"t": np.array([[float(self.t)]])}
        for name in self.m:
            out[f"m.{name}"] = self.m[name]
            out[f"v.{name}"] = self.v[name]
        return out

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.t = int(arrays["t"][0, 0])
        for name in self.m:
            self.m[name] = arrays[f"m.{name}"].copy()
            self.v[name] = arrays[f"v.{name}"].copy()


def make_optimizer(model: FusionModel, cfg: TrainConfig):
    cls = Adam if cfg.optimizer == "adam" else SGD
    return cls(model.parameters(), cfg.learning_rate, cfg.weight_decay)


def evaluate(model: FusionModel, pairs: list[SamplePair]) -> tuple[float, float, list[int]]:
    """Mean loss, accuracy, and predictions over a sample list (dropout off)."""
    total, correct, preds = 0.0, 0, []
    for a, t, label in pairs:
        loss, result = model.loss(a, t, label)
        total += loss.item()
        pred = int(np.argmax(result.logits.data[0]))
        preds.append(pred)
        correct += pred == label
    n = max(len(pairs), 1)
    return total / n, correct / n, preds


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)

    @property
    def final_train_loss(self) -> float:
        return self.history[-1]["train_loss"] if self.history else float("nan")


def train(
    model: FusionModel,
    train_pairs: list[SamplePair],
    cfg: TrainConfig,
    val_pairs: list[SamplePair] | None = None,
    start_epoch: int = 0,
    optimizer=None,
    epoch_callback=None,
) -> TrainResult:
    if not train_pairs:
        raise ConfigError("training set is empty")
    opt = optimizer or make_optimizer(model, cfg)
    weights = np.ones(model.cfg.n_classes)
    if cfg.use_class_weights:
        counts = np.bincount([l for _, _, l in train_pairs], minlength=model.cfg.n_classes).astype(float)
        counts[counts == 0] = 1.0
        weights = (1.0 / counts) * counts.sum() / model.cfg.n_classes

    result = TrainResult()
    n = len(train_pairs)
    for epoch in range(start_epoch, cfg.epochs):
        snapshot = [p.data.copy() for p in model.parameters()]
        shuffle_rng = np.random.default_rng([cfg.seed, 7, epoch])
        dropout_rng = np.random.default_rng([cfg.seed, 11, epoch])
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        try:
            for lo in range(0, n, cfg.batch_size):
                batch = order[lo : lo + cfg.batch_size]
                model.zero_grad()
                for idx in batch:
                    a, t, label = train_pairs[idx]
                    loss, _ = model.loss(a, t, label, training=True, dropout_rng=dropout_rng)
                    scaled = T.scale(loss, weights[label] / len(batch))
                    scaled.tape.backward(scaled)
                    epoch_loss += loss.item()
                opt.step()
        except NonFiniteError as e:
            for p, saved in zip(model.parameters(), snapshot):
                p.data[...] = saved
            raise NonFiniteError(
                f"training diverged in epoch {epoch}; parameters restored to start of epoch: {e}"
            ) from e
        entry = {"epoch": epoch, "train_loss": epoch_loss / n}
        if val_pairs is not None:
            val_loss, val_acc, _ = evaluate(model, val_pairs)
            entry["val_loss"] = val_loss
            entry["val_acc"] = val_acc
        result.history.append(entry)
        if epoch_callback is not None:
            epoch_callback(epoch, model, opt, entry)
    return result


def split_pairs(pairs: list[SamplePair], val_fraction: float, seed: int) -> tuple[list[SamplePair], list[SamplePair]]:
    """Deterministic disjoint train/validation split."""
    rng = np.random.default_rng([seed, 13])
    order = rng.permutation(len(pairs))
    n_val = int(round(len(pairs) * val_fraction))
    val_idx = set(order[:n_val].tolist())
    train = [p for i, p in enumerate(pairs) if i not in val_idx]
    val = [p for i, p in enumerate(pairs) if i in val_idx]
    return train, val
