"""One binary part-detector network per weapon component.

All part networks share the same architecture: three conv blocks
(conv -> ReLU -> 2x2 max-pool) for feature extraction, then three dense
layers for binary classification, softmax on the 2-wide head, dropout on
the second-to-last dense layer. Images are HWC float arrays in [0, 1];
class 1 means "part present".
"""

import zlib
from dataclasses import dataclass, field

import numpy as np

from .nn import (Conv2D, Dense, Dropout, Flatten, MaxPool2D, Network, ReLU,
                 SGDMomentum, softmax_cross_entropy_batch)

# The four component parts of the default ensemble; user-defined part
# labels are equally valid anywhere a part id is accepted.
PARTS = ("stock", "magazine", "barrel", "receiver")

LABEL_ABSENT = 0
LABEL_PRESENT = 1

DETECTION_THRESHOLD = 0.5


def is_detection(p_present, threshold=DETECTION_THRESHOLD):
    """Positive classification iff p_present strictly exceeds the threshold."""
    return p_present > threshold


def part_seed(base_seed, part):
    """Seed material for one part, independent of training order."""
    return [int(base_seed), zlib.crc32(part.encode("utf-8"))]


@dataclass(frozen=True)
class PartNetworkSpec:
    """Architecture of one part network.

    ``conv_blocks`` is an ordered list of (filters, kernel_size); every
    block is conv -> ReLU -> 2x2 max-pool. ``dense_widths`` must end in 2
    (binary softmax head). Dropout applies after the second-to-last dense
    layer's activation.
    """

    input_size: tuple = (200, 200)
    channels: int = 3
    conv_blocks: tuple = ((32, 3), (64, 3), (64, 3))
    dense_widths: tuple = (128, 64, 2)
    dropout_rate: float = 0.5

    def validate(self):
        h, w = self.input_size
        if h < 1 or w < 1 or self.channels < 1:
            raise ValueError(f"bad input geometry {self.input_size} "
                             f"x{self.channels}")
        if not self.conv_blocks:
            raise ValueError("at least one conv block required")
        for filters, kernel in self.conv_blocks:
            if filters < 1 or kernel < 1:
                raise ValueError(f"bad conv block ({filters}, {kernel})")
        if not self.dense_widths or self.dense_widths[-1] != 2:
            raise ValueError(
                f"final dense width must be 2, got {self.dense_widths}")
        if any(d < 1 for d in self.dense_widths):
            raise ValueError(f"dense widths must be >= 1: {self.dense_widths}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout rate {self.dropout_rate} not in [0, 1)")

    def feature_shape(self):
        """(C, H, W) after the conv stack; raises if geometry collapses."""
        c, h, w = self.channels, *self.input_size
        for filters, kernel in self.conv_blocks:
            if kernel > h or kernel > w:
                raise ValueError(
                    f"kernel {kernel} exceeds feature map {h}x{w}")
            c, h, w = filters, h - kernel + 1, w - kernel + 1
            h, w = h // 2, w // 2
            if h < 1 or w < 1:
                raise ValueError("conv stack shrinks the input to nothing")
        return c, h, w

    def to_dict(self):
        return {
            "input_size": list(self.input_size),
            "channels": self.channels,
            "conv_blocks": [list(b) for b in self.conv_blocks],
            "dense_widths": list(self.dense_widths),
            "dropout_rate": self.dropout_rate,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            input_size=tuple(d["input_size"]),
            channels=int(d["channels"]),
            conv_blocks=tuple(tuple(b) for b in d["conv_blocks"]),
            dense_widths=tuple(d["dense_widths"]),
            dropout_rate=float(d["dropout_rate"]),
        )


@dataclass
class TrainedPartNetwork:
    """A part network plus everything needed to reproduce and query it."""

    part: str
    spec: PartNetworkSpec
    network: Network
    training_meta: dict = field(default_factory=dict)

    def predict_window(self, window):
        """Score one HWC window; returns (p_present, p_absent)."""
        x = self._to_batch([window])
        probs = self.network.predict_proba(x)[0]
        return float(probs[LABEL_PRESENT]), float(probs[LABEL_ABSENT])

    def predict_batch(self, images, chunk=16):
        """p_present for a sequence of HWC windows, chunked to bound memory."""
        out = np.empty(len(images), dtype=np.float64)
        for start in range(0, len(images), chunk):
            x = self._to_batch(images[start:start + chunk])
            probs = self.network.predict_proba(x)
            out[start:start + x.shape[0]] = probs[:, LABEL_PRESENT]
        return out

    def _to_batch(self, images):
        h, w = self.spec.input_size
        batch = np.empty((len(images), self.spec.channels, h, w),
                         dtype=np.float32)
        for i, img in enumerate(images):
            img = np.asarray(img)
            if img.shape != (h, w, self.spec.channels):
                raise ValueError(
                    f"window shape {img.shape} does not match network input "
                    f"{h}x{w}x{self.spec.channels}")
            batch[i] = img.transpose(2, 0, 1)
        return batch


def build_network(part, spec=None, seed=0):
    """Assemble an untrained part network with seeded deterministic init."""
    if not part:
        raise ValueError("part id must be nonempty")
    if spec is None:
        spec = PartNetworkSpec()
    spec.validate()
    spec.feature_shape()  # reject geometry that collapses
    rng = np.random.default_rng(seed)
    layers = []
    in_c = spec.channels
    for filters, kernel in spec.conv_blocks:
        layers.append(Conv2D(in_c, filters, kernel, rng=rng))
        layers.append(ReLU())
        layers.append(MaxPool2D())
        in_c = filters
    layers.append(Flatten())
    c, h, w = spec.feature_shape()
    in_dim = c * h * w
    n_dense = len(spec.dense_widths)
    for i, width in enumerate(spec.dense_widths):
        layers.append(Dense(in_dim, width, rng=rng))
        if i < n_dense - 1:
            layers.append(ReLU())
        # dropout regularizes the second-to-last dense layer only
        if i == n_dense - 2 and spec.dropout_rate > 0:
            layers.append(Dropout(spec.dropout_rate))
        in_dim = width
    meta = {"seed": _seed_repr(seed), "epochs_run": 0}
    return TrainedPartNetwork(part=part, spec=spec, network=Network(layers),
                              training_meta=meta)


def _seed_repr(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return int(seed)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    patience: int = 3  # early stop after this many epochs without val gain

    def validate(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")


@dataclass
class TrainReport:
    part: str
    epochs_run: int
    train_loss: list
    val_accuracy: list
    val_loss: list
    best_epoch: int  # 0-based; -1 when no epoch ran
    best_val_accuracy: float
    seed: int

    def to_dict(self):
        return {
            "part": self.part,
            "epochs_run": self.epochs_run,
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
            "best_val_accuracy": self.best_val_accuracy,
            "seed": self.seed,
        }


def _check_samples(samples, spec, what):
    for s in samples:
        if s.label not in (LABEL_ABSENT, LABEL_PRESENT):
            raise ValueError(f"{what} label {s.label!r} outside {{0, 1}}")
        h, w = spec.input_size
        if s.image.shape != (h, w, spec.channels):
            raise ValueError(
                f"{what} sample {s.origin!r} has shape {s.image.shape}, "
                f"expected {h}x{w}x{spec.channels}")


def _epoch_batches(samples, batch_size, rng):
    """Batch index lists for one epoch, 50/50 balanced when possible.

    When both classes are present, each batch draws half its samples from
    each class (epoch-shuffled, truncated to the smaller class). With a
    single class the epoch falls back to a plain shuffle.
    """
    pos = [i for i, s in enumerate(samples) if s.label == LABEL_PRESENT]
    neg = [i for i, s in enumerate(samples) if s.label == LABEL_ABSENT]
    if not pos or not neg:
        order = rng.permutation(len(samples))
        return [order[i:i + batch_size].tolist()
                for i in range(0, len(order), batch_size)]
    pos = list(rng.permutation(pos))
    neg = list(rng.permutation(neg))
    half = max(1, batch_size // 2)
    n_pairs = min(len(pos), len(neg))
    batches = []
    for i in range(0, n_pairs, half):
        batch = pos[i:i + half] + neg[i:i + half]
        if batch:
            batches.append([int(j) for j in batch])
    return batches


def _stack(samples, indices, spec):
    h, w = spec.input_size
    x = np.empty((len(indices), spec.channels, h, w), dtype=np.float32)
    y = np.empty(len(indices), dtype=np.int64)
    for row, i in enumerate(indices):
        x[row] = samples[i].image.transpose(2, 0, 1)
        y[row] = samples[i].label
    return x, y


def _evaluate(net, samples, batch_size=16):
    """(accuracy, mean loss) over a sample list, inference mode."""
    correct = 0
    total_loss = 0.0
    for start in range(0, len(samples), batch_size):
        chunk = list(range(start, min(start + batch_size, len(samples))))
        x, y = _stack(samples, chunk, net.spec)
        logits = net.network.forward(x, train=False)
        probs, loss, _ = softmax_cross_entropy_batch(logits, y)
        total_loss += loss * len(chunk)
        preds = probs[:, LABEL_PRESENT] > DETECTION_THRESHOLD
        correct += int((preds == (y == LABEL_PRESENT)).sum())
    return correct / len(samples), total_loss / len(samples)


def train_part_network(net, train_set, val_set, cfg=None):
    """Minibatch SGD on cross-entropy; keeps the best-validation parameters.

    Best epoch = highest validation accuracy, ties broken by lower
    validation loss. Stops early when validation accuracy reaches 1.0 or
    fails to improve for ``cfg.patience`` consecutive epochs. Returns
    (net, TrainReport); the network is updated in place.
    """
    if cfg is None:
        cfg = TrainConfig()
    cfg.validate()
    if not train_set:
        raise ValueError("training set is empty")
    _check_samples(train_set, net.spec, "train")
    _check_samples(val_set, net.spec, "val")

    rng = np.random.default_rng(cfg.seed)
    optimizer = SGDMomentum(lr=cfg.lr, momentum=cfg.momentum)
    best_state = net.network.get_state()
    best_acc, best_loss, best_epoch = -1.0, np.inf, -1
    train_losses, val_accs, val_losses = [], [], []
    stale = 0

    for epoch in range(cfg.epochs):
        epoch_loss, n_batches = 0.0, 0
        for batch in _epoch_batches(train_set, cfg.batch_size, rng):
            x, y = _stack(train_set, batch, net.spec)
            epoch_loss += net.network.train_step(x, y, rng)
            optimizer.step(net.network)
            n_batches += 1
        train_losses.append(epoch_loss / max(1, n_batches))

        if not val_set:
            # nothing to select on: keep the latest parameters
            best_state = net.network.get_state()
            best_epoch = epoch
            continue
        acc, vloss = _evaluate(net, val_set, cfg.batch_size)
        val_accs.append(acc)
        val_losses.append(vloss)

        if acc > best_acc or (acc == best_acc and vloss < best_loss):
            best_acc, best_loss, best_epoch = acc, vloss, epoch
            best_state = net.network.get_state()
            stale = 0
        else:
            stale += 1
        if acc >= 1.0 or stale >= cfg.patience:
            break

    net.network.set_state(best_state)
    report = TrainReport(
        part=net.part,
        epochs_run=len(train_losses),
        train_loss=[float(v) for v in train_losses],
        val_accuracy=[float(v) for v in val_accs],
        val_loss=[float(v) for v in val_losses],
        best_epoch=best_epoch,
        best_val_accuracy=float(best_acc) if best_epoch >= 0 else 0.0,
        seed=cfg.seed,
    )
    net.training_meta.update({
        "seed": cfg.seed,
        "epochs_run": report.epochs_run,
        "best_epoch": report.best_epoch,
        "best_val_accuracy": report.best_val_accuracy,
    })
    return net, report
