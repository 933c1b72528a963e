"""Small feed-forward networks trained with Adam.

Two configurations are used by the rest of the package: a regressor that maps
compensated gaze 6-vectors to screen coordinates (MSE loss) and a nine-way
block classifier over gaze 3-vectors (cross-entropy loss).  Hidden layers use
ReLU; the regressor has a linear head and the classifier a softmax head.

Classifier inputs are z-scored with constants taken from the training rows;
regressor inputs are used as they are unless ``TrainConfig.standardize_inputs``
asks otherwise.  Regression targets are min-max scaled to [0, 1] per axis.  Both sets of
constants live on the network so :func:`forward` works in raw units.
"""

from __future__ import annotations

import copy
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .calib import CalibrationDataset, split_dataset
from .errors import InvalidInput, InvalidSpec, MalformedRecord, TrainingDiverged, UndefinedStatistic

REGRESSION = "regression"
CLASSIFICATION = "classification"
MODEL_FORMAT = "gazebench-mlp"
MODEL_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_dims: tuple = (32, 16)
    output_dim: int = 2
    output_kind: str = REGRESSION

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) < 1 for d in dims):
            raise InvalidSpec(f"all layer sizes must be >= 1, got {dims}")
        if self.output_kind not in (REGRESSION, CLASSIFICATION):
            raise InvalidSpec(f"unknown output kind {self.output_kind!r}")
        if self.output_kind == CLASSIFICATION and self.output_dim < 2:
            raise InvalidSpec("a classifier needs at least two classes")

    @property
    def layer_dims(self) -> tuple:
        return (self.input_dim, *self.hidden_dims, self.output_dim)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    max_epochs: int = 5000
    batch_size: int = 32
    loss_threshold: float = 1e-3
    r2_target: float = 0.99
    accuracy_target: float = 0.90
    seed: int = 0
    # None picks per output kind: z-score for classifiers, raw for regressors.
    standardize_inputs: bool | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInput("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise InvalidInput("Adam betas must lie in [0, 1)")
        if not (0 <= self.r2_target <= 1 and 0 <= self.accuracy_target <= 1):
            raise InvalidInput("targets must lie in [0, 1]")
        if self.max_epochs < 0 or self.batch_size < 1:
            raise InvalidInput("max_epochs must be >= 0 and batch_size >= 1")


@dataclass
class TrainReport:
    rule: str  # "converged", "accuracy" or "epoch_cap"
    epochs: int
    loss: float
    r2: float | None = None
    accuracy: float | None = None
    val_accuracy: float | None = None
    wall_time_s: float = 0.0


@dataclass
class TrainedNet:
    spec: NetworkSpec
    weights: list
    biases: list
    x_mean: np.ndarray = None
    x_scale: np.ndarray = None
    y_offset: np.ndarray = None
    y_scale: np.ndarray = None
    trained: bool = False
    report: TrainReport | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.x_mean is None:
            self.x_mean = np.zeros(self.spec.input_dim)
        if self.x_scale is None:
            self.x_scale = np.ones(self.spec.input_dim)
        if self.y_offset is None:
            self.y_offset = np.zeros(self.spec.output_dim)
        if self.y_scale is None:
            self.y_scale = np.ones(self.spec.output_dim)

    def parameters(self) -> list:
        """Parameter arrays in layer order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def copy(self) -> "TrainedNet":
        return copy.deepcopy(self)


def init_network(spec: NetworkSpec, seed: int = 0) -> TrainedNet:
    """Glorot-uniform weights and zero biases, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    dims = spec.layer_dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return TrainedNet(spec, weights, biases)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_raw(net: TrainedNet, xs: np.ndarray):
    """Network output on already-standardised rows, plus per-layer caches."""
    acts = [xs]
    pre = []
    a = xs
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return a, acts, pre


def standardize(net: TrainedNet, x) -> np.ndarray:
    return (np.asarray(x, dtype=float) - net.x_mean) / net.x_scale


def forward(net: TrainedNet, x) -> np.ndarray:
    """Predict for one input vector or a batch of rows, in raw units.

    Regression nets return screen coordinates; classifiers return class
    probabilities.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != net.spec.input_dim:
        raise InvalidInput(f"expected input of size {net.spec.input_dim}, got {arr.shape[1]}")
    out, _, _ = _forward_raw(net, standardize(net, arr))
    if net.spec.output_kind == CLASSIFICATION:
        out = _softmax(out)
    else:
        out = out * net.y_scale + net.y_offset
    return out[0] if single else out


def loss_and_gradients(net: TrainedNet, xs: np.ndarray, ys: np.ndarray):
    """Loss and parameter gradients on standardised inputs ``xs``.

    ``ys`` holds normalised regression targets or integer class labels.
    Gradients come back in :meth:`TrainedNet.parameters` order.
    """
    out, acts, pre = _forward_raw(net, xs)
    n = xs.shape[0]
    if net.spec.output_kind == REGRESSION:
        diff = out - ys
        loss = float(np.mean(diff ** 2))
        dz = 2.0 * diff / diff.size
    else:
        z = out - out.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        loss = float(-np.mean(logp[np.arange(n), ys]))
        dz = np.exp(logp)
        dz[np.arange(n), ys] -= 1.0
        dz /= n
    grads = [None] * (2 * len(net.weights))
    for i in range(len(net.weights) - 1, -1, -1):
        grads[2 * i] = acts[i].T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        if i:
            dz = (dz @ net.weights[i].T) * (pre[i - 1] > 0)
    return loss, grads


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, cfg: TrainConfig) -> None:
    """In-place bias-corrected Adam update."""
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_epsilon)


def r_squared(preds, targets) -> float:
    """Coefficient of determination pooled over output components."""
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise InvalidInput(f"shape mismatch {p.shape} vs {t.shape}")
    if p.ndim == 1:
        p, t = p[:, None], t[:, None]
    if len(t) < 2:
        raise InvalidInput("r_squared needs at least two rows")
    ss_tot = float(np.sum((t - t.mean(axis=0)) ** 2))
    if ss_tot == 0.0:
        raise UndefinedStatistic("targets have zero variance")
    return 1.0 - float(np.sum((p - t) ** 2)) / ss_tot


def predict_labels(net: TrainedNet, x) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index."""
    return np.argmax(forward(net, np.atleast_2d(x)), axis=1)


def evaluate_classifier(net: TrainedNet, dataset: CalibrationDataset) -> float:
    if net.spec.output_kind != CLASSIFICATION:
        raise InvalidInput("evaluate_classifier needs a classification net")
    if len(dataset) == 0:
        raise InvalidInput("cannot evaluate on an empty dataset")
    return float(np.mean(predict_labels(net, dataset.inputs) == dataset.targets))


def _fit_normalisation(net: TrainedNet, ds: CalibrationDataset, zscore: bool) -> None:
    if zscore:
        net.x_mean = ds.inputs.mean(axis=0)
        scale = ds.inputs.std(axis=0)
        net.x_scale = np.where(scale > 0, scale, 1.0)
    else:
        # Unit gaze components are already O(1).  Centring them puts every
        # initial ReLU kink through the data and the 9-point fit then
        # interpolates poorly between markers.
        net.x_mean = np.zeros(ds.input_dim)
        net.x_scale = np.ones(ds.input_dim)
    if net.spec.output_kind == REGRESSION:
        lo = ds.targets.min(axis=0)
        span = ds.targets.max(axis=0) - lo
        net.y_offset = lo
        net.y_scale = np.where(span > 0, span, 1.0)


def train(net: TrainedNet, dataset: CalibrationDataset, cfg: TrainConfig | None = None,
          holdout: CalibrationDataset | None = None) -> TrainedNet:
    """Mini-batch Adam training with the package's termination rules.

    Regression stops once the full-batch training loss is below
    ``cfg.loss_threshold`` and R^2 has reached ``cfg.r2_target``.
    Classification stops once accuracy on the test rows reaches
    ``cfg.accuracy_target``; the test rows are ``holdout`` when given,
    otherwise a seeded 70/15/15 split of ``dataset`` is made.  Either way the
    run ends at ``cfg.max_epochs``.  The input net is left untouched.
    """
    cfg = cfg or TrainConfig()
    if len(dataset) == 0:
        raise InvalidInput("cannot train on an empty dataset")
    if dataset.input_dim != net.spec.input_dim:
        raise InvalidInput(f"dataset has {dataset.input_dim} inputs, net expects {net.spec.input_dim}")
    classify = net.spec.output_kind == CLASSIFICATION
    if classify != (dataset.kind == CLASSIFICATION):
        raise InvalidInput("dataset kind does not match the network output kind")

    started = time.perf_counter()
    net = net.copy()
    val = None
    if classify:
        if holdout is None:
            dataset, val, holdout = split_dataset(dataset, seed=cfg.seed)
        if dataset.targets.max() >= net.spec.output_dim:
            raise InvalidInput("class label outside the network's output range")
    elif dataset.targets.shape[1] != net.spec.output_dim:
        raise InvalidInput("target width does not match output_dim")

    zscore = cfg.standardize_inputs if cfg.standardize_inputs is not None else classify
    _fit_normalisation(net, dataset, zscore)
    xs = standardize(net, dataset.inputs)
    ys = dataset.targets if classify else (dataset.targets - net.y_offset) / net.y_scale
    params = net.parameters()
    state = AdamState.zeros_like(params)
    rng = np.random.default_rng(cfg.seed)
    n = len(xs)

    def status():
        loss, _ = loss_and_gradients(net, xs, ys)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss}")
        if classify:
            acc = evaluate_classifier(net, holdout) if len(holdout) else 0.0
            return loss, acc, acc >= cfg.accuracy_target
        out, _, _ = _forward_raw(net, xs)
        r2 = r_squared(out, ys) if n >= 2 and np.any(ys != ys[0]) else float("nan")
        return loss, r2, loss < cfg.loss_threshold and r2 >= cfg.r2_target

    rule, epoch = "epoch_cap", 0
    loss, score, done = status()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            batch_loss, grads = loss_and_gradients(net, xs[idx], ys[idx])
            if not math.isfinite(batch_loss):
                raise TrainingDiverged(f"loss became {batch_loss} in epoch {epoch}")
            adam_step(params, grads, state, cfg)
        loss, score, done = status()
        if done:
            rule = "accuracy" if classify else "converged"
            break

    report = TrainReport(rule=rule, epochs=epoch if cfg.max_epochs else 0, loss=loss,
                         wall_time_s=time.perf_counter() - started)
    if classify:
        report.accuracy = score
        if val is not None and len(val):
            report.val_accuracy = evaluate_classifier(net, val)
    else:
        report.r2 = score
    net.report = report
    net.trained = cfg.max_epochs > 0
    return net


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(values))


def dumps_model(net: TrainedNet) -> str:
    """Serialise ``net`` to the versioned plain-text model format."""
    s = net.spec
    lines = [
        f"format {MODEL_FORMAT} {MODEL_VERSION}",
        f"output_kind {s.output_kind}",
        f"input_dim {s.input_dim}",
        "hidden_dims " + " ".join(str(h) for h in s.hidden_dims),
        f"output_dim {s.output_dim}",
        f"trained {int(net.trained)}",
        "x_mean " + _fmt(net.x_mean),
        "x_scale " + _fmt(net.x_scale),
        "y_offset " + _fmt(net.y_offset),
        "y_scale " + _fmt(net.y_scale),
    ]
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        lines.append(f"weights {i} {w.shape[0]} {w.shape[1]}")
        lines.extend(_fmt(row) for row in w)
        lines.append(f"bias {i} {b.shape[0]}")
        lines.append(_fmt(b))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads_model(text: str, path=None) -> TrainedNet:
    lines = io.StringIO(text).read().splitlines()
    pos = 0

    def take(key):
        nonlocal pos
        if pos >= len(lines):
            raise MalformedRecord(f"unexpected end of model, wanted {key!r}", pos + 1, path)
        parts = lines[pos].split()
        if not parts or parts[0] != key:
            raise MalformedRecord(f"expected {key!r}", pos + 1, path)
        pos += 1
        return parts[1:]

    def floats(parts, n):
        try:
            arr = np.array([float(p) for p in parts])
        except ValueError as exc:
            raise MalformedRecord(str(exc), pos, path) from None
        if arr.size != n:
            raise MalformedRecord(f"expected {n} numbers, got {arr.size}", pos, path)
        return arr

    head = take("format")
    if head != [MODEL_FORMAT, str(MODEL_VERSION)]:
        raise MalformedRecord(f"unsupported model format {' '.join(head)!r}", 1, path)
    try:
        kind = take("output_kind")[0]
        input_dim = int(take("input_dim")[0])
        hidden = tuple(int(h) for h in take("hidden_dims"))
        output_dim = int(take("output_dim")[0])
        trained = bool(int(take("trained")[0]))
        spec = NetworkSpec(input_dim, hidden, output_dim, kind)
    except (IndexError, ValueError) as exc:
        raise MalformedRecord(f"bad header: {exc}", pos, path) from None
    x_mean = floats(take("x_mean"), input_dim)
    x_scale = floats(take("x_scale"), input_dim)
    y_offset = floats(take("y_offset"), output_dim)
    y_scale = floats(take("y_scale"), output_dim)
    weights, biases = [], []
    dims = spec.layer_dims
    for i, (fin, fout) in enumerate(zip(dims[:-1], dims[1:])):
        if take("weights") != [str(i), str(fin), str(fout)]:
            raise MalformedRecord(f"layer {i} shape mismatch", pos, path)
        rows = []
        for _ in range(fin):
            if pos >= len(lines):
                raise MalformedRecord("truncated weight matrix", pos, path)
            pos += 1
            rows.append(floats(lines[pos - 1].split(), fout))
        weights.append(np.array(rows))
        if take("bias") != [str(i), str(fout)]:
            raise MalformedRecord(f"bias {i} shape mismatch", pos, path)
        pos += 1
        biases.append(floats(lines[pos - 1].split() if pos <= len(lines) else [], fout))
    take("end")
    return TrainedNet(spec, weights, biases, x_mean, x_scale, y_offset, y_scale, trained=trained)
