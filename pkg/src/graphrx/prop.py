"""Message passing (GCN, GIN), readout and the molecular property task."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError, NumericError
from .graph import PackedGraph, pack
from .molecule import ATOM_FEATURE_DIM, Molecule, featurize_atoms, murcko_scaffold, to_smiles
from .tensor import Parameter, Tape, Tensor

ACTIVATIONS = ("relu", "identity", "sigmoid")
LAYER_KINDS = ("gcn", "gin")
READOUTS = ("sum", "mean")
TASKS = ("binary", "regression")


class EmptyMemberWarning(UserWarning):
    pass


def activate(kind: str, x: Tensor) -> Tensor:
    if kind == "relu":
        return T.relu(x)
    if kind == "sigmoid":
        return T.sigmoid(x)
    if kind == "identity":
        return x
    raise ConfigError(f"unknown activation {kind!r}; choose from {', '.join(ACTIVATIONS)}")


def _glorot(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-bound, bound, (d_in, d_out))


@dataclass
class Linear:
    weight: Parameter
    bias: Parameter

    @classmethod
    def init(cls, name: str, d_in: int, d_out: int, rng: np.random.Generator) -> "Linear":
        return cls(Parameter(_glorot(rng, d_in, d_out), f"{name}.weight"),
                   Parameter(np.zeros(d_out), f"{name}.bias"))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.weight.shape[0]:
            raise DimensionError(f"input width {x.shape[-1]} != layer width {self.weight.shape[0]}")
        return T.add(T.matmul(x, self.weight), self.bias)

    @property
    def params(self) -> list[Parameter]:
        return [self.weight, self.bias]


@dataclass
class GCNLayer:
    linear: Linear
    activation: str = "relu"

    @classmethod
    def init(cls, name: str, d_in: int, d_out: int, rng, activation: str = "relu") -> "GCNLayer":
        return cls(Linear.init(name, d_in, d_out, rng), activation)

    @property
    def weight(self) -> Parameter:
        return self.linear.weight

    @property
    def bias(self) -> Parameter:
        return self.linear.bias

    @property
    def params(self) -> list[Parameter]:
        return self.linear.params


@dataclass
class GINLayer:
    epsilon: Parameter
    mlp: tuple[Linear, Linear]
    learn_eps: bool = True
    activation: str = "relu"

    @classmethod
    def init(cls, name: str, d_in: int, d_hidden: int, d_out: int, rng, activation: str = "relu",
             learn_eps: bool = True, eps: float = 0.0) -> "GINLayer":
        mlp = (Linear.init(f"{name}.mlp0", d_in, d_hidden, rng), Linear.init(f"{name}.mlp1", d_hidden, d_out, rng))
        return cls(Parameter(np.array(eps), f"{name}.eps"), mlp, learn_eps, activation)

    @property
    def params(self) -> list[Parameter]:
        own = [self.epsilon] if self.learn_eps else []
        return own + self.mlp[0].params + self.mlp[1].params


@dataclass(frozen=True)
class Propagation:
    """Edge lists and GCN coefficients derived once per packed batch."""

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    edge_coef: np.ndarray
    self_coef: np.ndarray

    @classmethod
    def of(cls, pg: PackedGraph) -> "Propagation":
        n = pg.num_nodes
        src, dst = pg.edges[:, 0], pg.edges[:, 1]
        deg = np.bincount(dst, minlength=n).astype(np.float64) + 1.0  # one added self-loop
        inv = 1.0 / np.sqrt(deg)
        return cls(n, src, dst, inv[src] * inv[dst], 1.0 / deg)


def _prop(pg) -> Propagation:
    return pg if isinstance(pg, Propagation) else Propagation.of(pg)


def _check_rows(prop: Propagation, H: Tensor) -> None:
    if H.ndim != 2 or H.shape[0] != prop.num_nodes:
        raise DimensionError(f"node features {H.shape} do not match {prop.num_nodes} nodes")


def gcn_forward(layer: GCNLayer, pg, H) -> Tensor:
    prop = _prop(pg)
    H = T.as_tensor(H)
    _check_rows(prop, H)
    if H.shape[1] != layer.weight.shape[0]:
        raise DimensionError(f"input width {H.shape[1]} != layer width {layer.weight.shape[0]}")
    hw = T.matmul(H, layer.weight)
    msgs = T.scale_rows(T.gather_rows(hw, prop.src), Tensor(prop.edge_coef))
    agg = T.add(T.scatter_add_rows(msgs, prop.dst, prop.num_nodes), T.scale_rows(hw, Tensor(prop.self_coef)))
    return activate(layer.activation, T.add(agg, layer.bias))


def gin_forward(layer: GINLayer, pg, H) -> Tensor:
    prop = _prop(pg)
    H = T.as_tensor(H)
    _check_rows(prop, H)
    eps = layer.epsilon if layer.learn_eps else T.detach(layer.epsilon)
    neigh = T.scatter_add_rows(T.gather_rows(H, prop.src), prop.dst, prop.num_nodes)
    combined = T.add(T.mul(H, T.add(eps, 1.0)), neigh)
    hidden = T.relu(layer.mlp[0](combined))
    return activate(layer.activation, layer.mlp[1](hidden))


def readout(pg: PackedGraph, H, kind: str = "sum") -> Tensor:
    H = T.as_tensor(H)
    if H.ndim != 2 or H.shape[0] != pg.num_nodes:
        raise DimensionError(f"node features {H.shape} do not match {pg.num_nodes} nodes")
    gid = np.repeat(np.arange(pg.batch_size), pg.node_counts)
    total = T.scatter_add_rows(H, gid, pg.batch_size)
    if kind == "sum":
        return total
    if kind != "mean":
        raise ConfigError(f"unknown readout {kind!r}; choose from {', '.join(READOUTS)}")
    counts = pg.node_counts.astype(np.float64)
    if (counts == 0).any():
        warnings.warn(f"{int((counts == 0).sum())} empty member(s) read out as zero rows", EmptyMemberWarning,
                      stacklevel=2)
    return T.scale_rows(total, Tensor(1.0 / np.maximum(counts, 1.0)))


# ---------------------------------------------------------------- model

@dataclass
class PropertyConfig:
    layer: str = "gin"
    num_layers: int = 2
    width: int = 32
    activation: str = "relu"
    readout: str = "sum"
    task: str = "binary"
    learn_eps: bool = True
    in_dim: int = ATOM_FEATURE_DIM

    def validate(self) -> None:
        if self.layer not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind {self.layer!r}; choose from {', '.join(LAYER_KINDS)}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.readout not in READOUTS:
            raise ConfigError(f"unknown readout {self.readout!r}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if self.num_layers < 1 or self.width < 1 or self.in_dim < 1:
            raise ConfigError("num_layers, width and in_dim must be positive")


@dataclass
class PropertyModel:
    config: PropertyConfig
    layers: list
    head: Linear

    @property
    def params(self) -> list[Parameter]:
        out = []
        for layer in self.layers:
            out.extend(layer.params)
        return out + self.head.params

    def state(self) -> dict[str, np.ndarray]:
        """All parameters by name, including a frozen epsilon."""
        return {name: p.numpy() for name, p in self._all_params().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        own = self._all_params()
        if set(own) != set(state):
            missing = sorted(set(own) ^ set(state))
            raise ConfigError(f"state does not match model parameters: {', '.join(missing)}")
        for name, p in own.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise DimensionError(f"{name}: state shape {value.shape} != parameter shape {p.shape}")
            p.assign(value)

    def _all_params(self) -> dict[str, Parameter]:
        out = {}
        for layer in self.layers:
            if isinstance(layer, GINLayer):
                out[layer.epsilon.name] = layer.epsilon
                ps = layer.mlp[0].params + layer.mlp[1].params
            else:
                ps = layer.linear.params
            for p in ps:
                out[p.name] = p
        for p in self.head.params:
            out[p.name] = p
        return out


def build_model(config: PropertyConfig, seed: int | np.random.Generator = 0) -> PropertyModel:
    config.validate()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    d = config.in_dim
    for i in range(config.num_layers):
        if config.layer == "gcn":
            layers.append(GCNLayer.init(f"layer{i}", d, config.width, rng, config.activation))
        else:
            layers.append(GINLayer.init(f"layer{i}", d, config.width, config.width, rng, config.activation,
                                        config.learn_eps))
        d = config.width
    return PropertyModel(config, layers, Linear.init("head", d, 1, rng))


def node_embeddings(model: PropertyModel, pg, H) -> Tensor:
    prop = _prop(pg)
    h = T.as_tensor(H)
    for layer in model.layers:
        h = gcn_forward(layer, prop, h) if isinstance(layer, GCNLayer) else gin_forward(layer, prop, h)
    return h


def forward(model: PropertyModel, pg: PackedGraph, H) -> Tensor:
    """One output (logit or regression value) per batch member."""
    h = node_embeddings(model, pg, H)
    out = model.head(readout(pg, h, model.config.readout))
    return T.reshape(out, (pg.batch_size,))


def bce_with_logits(logits: Tensor, labels: np.ndarray) -> Tensor:
    # softplus(z) - y*z, stable for either sign
    y = Tensor(np.asarray(labels, dtype=np.float64))
    return T.mean(T.sub(T.softplus(logits), T.mul(y, logits)))


def mse(pred: Tensor, targets: np.ndarray) -> Tensor:
    diff = T.sub(pred, Tensor(np.asarray(targets, dtype=np.float64)))
    return T.mean(T.mul(diff, diff))


def task_loss(task: str, out: Tensor, labels: np.ndarray) -> Tensor:
    return bce_with_logits(out, labels) if task == "binary" else mse(out, labels)


# ---------------------------------------------------------------- data

@dataclass
class PropertyDataset:
    molecules: list[Molecule]
    labels: np.ndarray
    task: str = "binary"
    features: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if self.labels.shape[0] != len(self.molecules):
            raise ConfigError(f"{len(self.molecules)} molecules but {self.labels.shape[0]} labels")
        if not np.isfinite(self.labels).all():
            raise ConfigError("labels must be finite")
        if self.task == "binary" and not np.isin(self.labels, (0.0, 1.0)).all():
            bad = self.labels[~np.isin(self.labels, (0.0, 1.0))][0]
            raise ConfigError(f"binary labels must be 0 or 1, found {bad:g}")
        if not self.features:
            self.features = [featurize_atoms(m).numpy() for m in self.molecules]

    def __len__(self) -> int:
        return len(self.molecules)

    def batch(self, idx) -> tuple[PackedGraph, np.ndarray, np.ndarray]:
        idx = [int(i) for i in idx]
        pg = pack([self.molecules[i] for i in idx], member_type=Molecule)
        feats = [self.features[i] for i in idx]
        x = np.concatenate(feats) if feats else np.zeros((0, ATOM_FEATURE_DIM), dtype=np.float32)
        return pg, x, self.labels[idx]


@dataclass(frozen=True)
class SplitSpec:
    kind: str = "random"
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("random", "scaffold"):
            raise ConfigError(f"unknown split kind {self.kind!r}; choose random or scaffold")
        fr = tuple(float(f) for f in self.fractions)
        if len(fr) != 3 or min(fr) <= 0 or abs(sum(fr) - 1) > 1e-9:
            raise ConfigError(f"split fractions must be three positive numbers summing to 1, got {fr}")
        object.__setattr__(self, "fractions", fr)

    def to_record(self) -> dict:
        return {"kind": self.kind, "fractions": list(self.fractions), "seed": self.seed}


def split(dataset, spec: SplitSpec) -> tuple[list[int], list[int], list[int]]:
    """Train/valid/test index lists; scaffold groups never straddle splits."""
    molecules = dataset.molecules if isinstance(dataset, PropertyDataset) else list(dataset)
    n = len(molecules)
    if n == 0:
        raise ConfigError("cannot split an empty dataset")
    f_train, f_valid, _ = spec.fractions
    if spec.kind == "random":
        order = np.random.default_rng(spec.seed).permutation(n)
        n_train = int(round(f_train * n))
        n_valid = int(round(f_valid * n))
        parts = [order[:n_train], order[n_train:n_train + n_valid], order[n_train + n_valid:]]
        out = tuple(sorted(int(i) for i in p) for p in parts)
    else:
        groups: dict[str, list[int]] = {}
        for i, m in enumerate(molecules):
            groups.setdefault(to_smiles(murcko_scaffold(m)), []).append(i)
        ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        train, valid, test = [], [], []
        for _, members in ordered:
            if len(train) + len(members) <= f_train * n:
                train.extend(members)
            elif len(valid) + len(members) <= f_valid * n:
                valid.extend(members)
            else:
                test.extend(members)
        out = (sorted(train), sorted(valid), sorted(test))
    for name, part in zip(("train", "valid", "test"), out):
        if not part:
            raise ConfigError(f"{spec.kind} split with fractions {spec.fractions} leaves the {name} split empty "
                              f"for {n} molecules")
    return out


# ---------------------------------------------------------------- metrics

def auroc(scores, labels) -> float | None:
    """Area under the ROC curve; tied scores count half. None if a class is missing."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1).astype(bool)
    pos, neg = int(y.sum()), int((~y).sum())
    if pos == 0 or neg == 0:
        return None
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    midrank = ends - (counts - 1) / 2.0
    ranks = midrank[inverse]
    return float((ranks[y].sum() - pos * (pos + 1) / 2.0) / (pos * neg))


def predict(model: PropertyModel, dataset: PropertyDataset, indices=None, batch_size: int = 256) -> np.ndarray:
    idx = list(range(len(dataset))) if indices is None else [int(i) for i in indices]
    outs = []
    for start in range(0, len(idx), batch_size):
        pg, x, _ = dataset.batch(idx[start:start + batch_size])
        outs.append(forward(model, pg, x).numpy().astype(np.float64))
    return np.concatenate(outs) if outs else np.zeros(0)


def metrics_from_outputs(task: str, out: np.ndarray, labels: np.ndarray) -> dict:
    labels = np.asarray(labels, dtype=np.float64)
    if task == "binary":
        return {"count": int(labels.size), "auroc": auroc(out, labels),
                "accuracy": float(((out >= 0).astype(np.float64) == labels).mean())}
    err = out - labels
    return {"count": int(labels.size), "rmse": float(np.sqrt((err ** 2).mean())), "mae": float(np.abs(err).mean())}


def evaluate_property(model: PropertyModel, dataset: PropertyDataset, indices=None) -> dict:
    """AUROC and accuracy at probability 0.5 for binary tasks, RMSE and MAE otherwise."""
    idx = list(range(len(dataset))) if indices is None else [int(i) for i in indices]
    if not idx:
        raise ConfigError("cannot evaluate an empty subset")
    return metrics_from_outputs(model.config.task, predict(model, dataset, idx), dataset.labels[idx])


def _selection_value(task: str, metrics: dict) -> float:
    if task == "binary":
        return metrics["auroc"] if metrics["auroc"] is not None else metrics["accuracy"]
    return -metrics["rmse"]


# ---------------------------------------------------------------- training

@dataclass
class PropTrainConfig:
    epochs: int = 50
    batch_size: int = 32
    lr: float = 0.01
    seed: int = 0


@dataclass
class PropTrainResult:
    model: PropertyModel
    splits: tuple[list[int], list[int], list[int]]
    train_losses: list[float] = field(default_factory=list)
    valid_metrics: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_state: dict[str, np.ndarray] = field(default_factory=dict)
    best_metrics: dict = field(default_factory=dict)

    def restore_best(self) -> PropertyModel:
        self.model.load_state(self.best_state)
        return self.model


def train_property(dataset: PropertyDataset, config: PropertyConfig, spec: SplitSpec,
                   hyper: PropTrainConfig | None = None, model: PropertyModel | None = None) -> PropTrainResult:
    """Adam on BCE-with-logits or MSE; the best-valid state is kept.

    Epoch 0 in ``valid_metrics`` is the initialized model, so ``best_epoch``
    counts completed epochs.
    """
    hyper = hyper or PropTrainConfig()
    if config.task != dataset.task:
        raise ConfigError(f"model task {config.task!r} does not match dataset task {dataset.task!r}")
    if hyper.batch_size < 1 or hyper.epochs < 0:
        raise ConfigError("batch_size must be positive and epochs non-negative")
    parts = split(dataset, spec)
    train_idx = np.asarray(parts[0])
    rng = np.random.default_rng(hyper.seed)
    model = model or build_model(config, rng)
    opt = T.Optimizer("adam", model.params, lr=hyper.lr)
    result = PropTrainResult(model, parts)
    result.valid_metrics.append(evaluate_property(model, dataset, parts[1]))
    result.best_state, result.best_metrics = model.state(), result.valid_metrics[0]
    best = _selection_value(config.task, result.best_metrics)
    for epoch in range(hyper.epochs):
        order = train_idx[rng.permutation(train_idx.size)]
        total = 0.0
        count = 0
        for bi, start in enumerate(range(0, order.size, hyper.batch_size)):
            pg, x, y = dataset.batch(order[start:start + hyper.batch_size])
            opt.zero_grad()
            with Tape() as tape:
                value = task_loss(config.task, forward(model, pg, x), y)
                if not np.isfinite(value.item()):
                    raise NumericError(f"non-finite loss at epoch {epoch}, batch {bi}")
                tape.backward(value)
            opt.step()
            total += value.item() * y.size
            count += y.size
        result.train_losses.append(total / count)
        metrics = evaluate_property(model, dataset, parts[1])
        result.valid_metrics.append(metrics)
        value = _selection_value(config.task, metrics)
        if value > best:
            best = value
            result.best_epoch = epoch + 1
            result.best_state = model.state()
            result.best_metrics = metrics
    return result
