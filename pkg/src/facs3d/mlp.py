"""One-hidden-layer sigmoid network trained by full-batch backpropagation.

Training minimises mean binary cross-entropy, halves the step whenever it
would raise the training loss, and stops once validation cross-entropy has
not improved for ``patience`` epochs, keeping the validation-best weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

CLAMP = 1e-12
MAX_HALVINGS = 40


@dataclass(frozen=True)
class MlpConfig:
    n_inputs: int
    n_hidden: int = 10
    learning_rate: float = 0.5
    max_epochs: int = 2000
    patience: int = 50
    seed: int = 0
    restarts: int = 3
    restart_threshold: float = 5.0  # percent test error that triggers retraining

    def __post_init__(self):
        if self.n_inputs < 1:
            raise ValueError("n_inputs must be >= 1")
        if self.n_hidden < 1:
            raise ValueError("n_hidden must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError(f"learning_rate must be finite and > 0, got {self.learning_rate}")


@dataclass(frozen=True, eq=False)
class MlpModel:
    w1: np.ndarray  # (n_hidden, n_inputs + 1), last column is the bias
    w2: np.ndarray  # (n_hidden + 1,), last entry is the bias

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return np.array_equal(self.w1, other.w1) and np.array_equal(self.w2, other.w2)

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1] - 1

    def to_dict(self, cfg: MlpConfig | None = None) -> dict:
        d = {
            "kind": "mlp",
            "n_inputs": self.n_inputs,
            "n_hidden": self.w1.shape[0],
            "w1": self.w1.tolist(),
            "w2": self.w2.tolist(),
        }
        if cfg is not None:
            d["config"] = asdict(cfg)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        w1 = np.asarray(d["w1"], dtype=float).reshape(d["n_hidden"], d["n_inputs"] + 1)
        return cls(w1, np.asarray(d["w2"], dtype=float))

    def to_json(self, cfg: MlpConfig | None = None) -> str:
        return json.dumps(self.to_dict(cfg), sort_keys=True)


@dataclass
class TrainHistory:
    train_ce: list[float] = field(default_factory=list)  # index 0 = initial weights
    val_ce: list[float] = field(default_factory=list)
    stop_epoch: int = 0
    best_epoch: int = 0
    restarts: int = 0
    seed_used: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,train_ce,val_ce"]
        lines += [f"{e},{t:.17g},{v:.17g}" for e, (t, v) in enumerate(zip(self.train_ce, self.val_ce))]
        return "\n".join(lines) + "\n"


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def init_weights(cfg: MlpConfig) -> MlpModel:
    rng = np.random.default_rng(cfg.seed)
    w1 = rng.uniform(-0.5, 0.5, size=(cfg.n_hidden, cfg.n_inputs + 1))
    w2 = rng.uniform(-0.5, 0.5, size=cfg.n_hidden + 1)
    return MlpModel(w1, w2)


def _check_inputs(model: MlpModel, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.shape[1] != model.n_inputs:
        raise ValueError(f"dimension mismatch: model takes {model.n_inputs} inputs, got {xs.shape[1]}")
    return xs


def _forward(w1, w2, xs):
    xb = np.hstack([xs, np.ones((len(xs), 1))])
    h = sigmoid(xb @ w1.T)
    hb = np.hstack([h, np.ones((len(xs), 1))])
    return xb, h, hb, sigmoid(hb @ w2)


def forward_batch(model: MlpModel, xs) -> np.ndarray:
    xs = _check_inputs(model, xs)
    return _forward(model.w1, model.w2, xs)[3]


def forward(model: MlpModel, x) -> float:
    return float(forward_batch(model, x)[0])


def _check_pair(preds, targets):
    p = np.asarray(preds, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if len(p) != len(t):
        raise ValueError(f"length mismatch: {len(p)} predictions vs {len(t)} targets")
    if len(p) == 0:
        raise ValueError("empty input")
    return p, t


def cross_entropy(preds, targets) -> float:
    p, t = _check_pair(preds, targets)
    p = np.clip(p, CLAMP, 1 - CLAMP)
    return float(np.mean(-(t * np.log(p) + (1 - t) * np.log(1 - p))))


def percent_error(preds, targets) -> float:
    p, t = _check_pair(preds, targets)
    wrong = np.count_nonzero((p >= 0.5).astype(float) != t)
    return 100.0 * wrong / len(p)


def _batch_gradients(w1, w2, xs, ts):
    """Gradient of the mean clamped cross-entropy over a batch."""
    xb, h, hb, p = _forward(w1, w2, xs)
    # p - 1 and h (1 - h) lose digits as the sigmoids saturate; use sigma(-z) instead
    z = hb @ w2
    err = np.where(ts == 1, -sigmoid(-z), p - ts)
    # clamped region is flat
    d_out = np.where((p < CLAMP) | (p > 1 - CLAMP), 0.0, err) / len(xs)
    g2 = hb.T @ d_out
    d_hidden = np.outer(d_out, w2[:-1]) * h * sigmoid(-(xb @ w1.T))
    g1 = d_hidden.T @ xb
    return g1, g2


def gradients(model: MlpModel, x, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Backprop gradients (shaped like w1, w2) of the per-sample clamped cross-entropy."""
    xs = _check_inputs(model, x)
    if len(xs) != 1:
        raise ValueError("gradients() takes a single sample")
    return _batch_gradients(model.w1, model.w2, xs, np.array([float(t)]))


def _loss(w1, w2, xs, ts):
    return cross_entropy(_forward(w1, w2, xs)[3], ts)


def _train_once(xs, ts, split, cfg: MlpConfig) -> tuple[MlpModel, TrainHistory]:
    tr, va, _ = split
    xtr, ttr, xva, tva = xs[tr], ts[tr], xs[va], ts[va]
    model = init_weights(cfg)
    w1, w2 = model.w1.copy(), model.w2.copy()
    hist = TrainHistory(seed_used=cfg.seed)
    loss = _loss(w1, w2, xtr, ttr)
    hist.train_ce.append(loss)
    hist.val_ce.append(_loss(w1, w2, xva, tva))
    best = (hist.val_ce[0], 0, w1.copy(), w2.copy())

    epoch = 0
    while epoch < cfg.max_epochs:
        epoch += 1
        g1, g2 = _batch_gradients(w1, w2, xtr, ttr)
        step = cfg.learning_rate
        for _ in range(MAX_HALVINGS):
            n1, n2 = w1 - step * g1, w2 - step * g2
            new_loss = _loss(n1, n2, xtr, ttr)
            if new_loss <= loss:
                w1, w2, loss = n1, n2, new_loss
                break
            step /= 2
        hist.train_ce.append(loss)
        val = _loss(w1, w2, xva, tva)
        hist.val_ce.append(val)
        if val < best[0]:
            best = (val, epoch, w1.copy(), w2.copy())
        elif epoch - best[1] >= cfg.patience:
            break
    hist.stop_epoch = epoch
    hist.best_epoch = best[1]
    return MlpModel(best[2], best[3]), hist


def _check_split(n, split):
    sets = [np.asarray(s, dtype=int) for s in split]
    if len(sets) != 3:
        raise ValueError("split must be (train, validation, test)")
    for name, s in zip(("train", "validation", "test"), sets):
        if len(s) == 0:
            raise ValueError(f"{name} split is empty")
        if s.min() < 0 or s.max() >= n:
            raise ValueError(f"{name} split has out-of-range indices")
    a, b, c = (set(s.tolist()) for s in sets)
    if a & b or a & c or b & c:
        raise ValueError("splits overlap")
    return sets


def train_mlp(xs, ts, split, cfg: MlpConfig) -> tuple[MlpModel, TrainHistory, float, float]:
    """Train with early stopping and up to ``cfg.restarts`` reinitialisations.

    A restart (next seed) happens while test percent error exceeds
    ``cfg.restart_threshold``; the run with the lowest best validation CE wins.
    Returns (model, history, test CE, test percent error).
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    ts = np.asarray(ts, dtype=float)
    if len(xs) != len(ts):
        raise ValueError("xs and ts differ in length")
    if xs.shape[1] != cfg.n_inputs:
        raise ValueError(f"dimension mismatch: config has {cfg.n_inputs} inputs, data has {xs.shape[1]}")
    split = _check_split(len(xs), split)
    if len(np.unique(ts[split[0]])) < 2:
        raise ValueError("training split contains a single class")

    best = None
    for r in range(cfg.restarts + 1):
        model, hist = _train_once(xs, ts, split, replace(cfg, seed=cfg.seed + r))
        te = split[2]
        p = forward_batch(model, xs[te])
        test_e = percent_error(p, ts[te])
        if best is None or hist.val_ce[hist.best_epoch] < best[1].val_ce[best[1].best_epoch]:
            best = (model, hist)
        if test_e <= cfg.restart_threshold:
            break
    model, hist = best
    hist.restarts = r
    p = forward_batch(model, xs[split[2]])
    return model, hist, cross_entropy(p, ts[split[2]]), percent_error(p, ts[split[2]])
