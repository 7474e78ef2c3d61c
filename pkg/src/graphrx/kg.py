"""Knowledge-graph embeddings: scoring, negative sampling, training and
filtered link-prediction evaluation."""

from __future__ import annotations

import difflib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import tensor as T
from .errors import ConfigError, GraphIndexError, NumericError, VocabularyError
from .graph import Graph
from .tensor import Parameter, Tape, Tensor

log = logging.getLogger(__name__)

MODEL_KINDS = ("transe", "distmult", "complex", "rotate", "simple")
LOSS_KINDS = ("margin", "logistic", "self_adversarial")
SPLITS = ("train", "valid", "test")


# ---------------------------------------------------------------- triplet store

class TripletStore:
    """Entity/relation vocabularies plus train/valid/test index triples."""

    def __init__(self, entities: Sequence[str], relations: Sequence[str], splits: dict[str, np.ndarray]):
        self.entities = list(entities)
        self.relations = list(relations)
        self.entity_index = {name: i for i, name in enumerate(self.entities)}
        self.relation_index = {name: i for i, name in enumerate(self.relations)}
        if len(self.entity_index) != len(self.entities) or len(self.relation_index) != len(self.relations):
            raise ValueError("vocabulary contains duplicate names")
        self.splits: dict[str, np.ndarray] = {}
        seen: dict[int, str] = {}
        for name in SPLITS:
            arr = np.asarray(splits.get(name, np.zeros((0, 3))), dtype=np.int64).reshape(-1, 3)
            if arr.size:
                if arr[:, [0, 2]].min() < 0 or arr[:, [0, 2]].max() >= self.num_entities:
                    raise GraphIndexError(f"{name} split has an entity index out of range")
                if arr[:, 1].min() < 0 or arr[:, 1].max() >= self.num_relations:
                    raise GraphIndexError(f"{name} split has a relation index out of range")
            keys = self.encode(arr)
            if np.unique(keys).size != keys.size:
                raise ValueError(f"duplicate triple within the {name} split")
            for key in keys.tolist():
                if key in seen:
                    raise ValueError(f"triple appears in both {seen[key]} and {name}")
                seen[key] = name
            arr.flags.writeable = False
            self.splits[name] = arr
        self.fact_keys = np.array(sorted(seen), dtype=np.int64)

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    def encode(self, triples: np.ndarray) -> np.ndarray:
        t = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        return (t[:, 0] * self.num_relations + t[:, 1]) * self.num_entities + t[:, 2]

    def is_fact(self, triples: np.ndarray) -> np.ndarray:
        return np.isin(self.encode(triples), self.fact_keys)

    @classmethod
    def from_named(cls, splits: dict[str, Iterable[tuple[str, str, str]]]) -> "TripletStore":
        """Build vocabularies in order of first appearance (train, valid, test)."""
        ents: dict[str, int] = {}
        rels: dict[str, int] = {}
        named = {name: [tuple(t) for t in splits.get(name, ())] for name in SPLITS}
        for name in SPLITS:
            for h, r, t in named[name]:
                ents.setdefault(h, len(ents))
                rels.setdefault(r, len(rels))
                ents.setdefault(t, len(ents))
        idx = {name: np.array([(ents[h], rels[r], ents[t]) for h, r, t in named[name]],
                              dtype=np.int64).reshape(-1, 3) for name in SPLITS}
        return cls(list(ents), list(rels), idx)

    @classmethod
    def with_vocab(cls, entities: Sequence[str], relations: Sequence[str],
                   splits: dict[str, Iterable[tuple[str, str, str]]]) -> "TripletStore":
        """Encode named triples against fixed vocabularies (e.g. a checkpoint's)."""
        probe = cls(entities, relations, {})
        idx = {name: np.array([(probe.entity_id(h), probe.relation_id(r), probe.entity_id(t))
                               for h, r, t in splits.get(name, ())], dtype=np.int64).reshape(-1, 3)
               for name in SPLITS}
        return cls(entities, relations, idx)

    @staticmethod
    def read_tsv_dir(path: str | Path) -> dict[str, list[tuple[str, str, str]]]:
        path = Path(path)
        if not (path / "train.tsv").exists():
            raise FileNotFoundError(f"{path / 'train.tsv'} not found")
        return {name: read_triples(path / f"{name}.tsv") if (path / f"{name}.tsv").exists() else []
                for name in SPLITS}

    @classmethod
    def from_tsv_dir(cls, path: str | Path) -> "TripletStore":
        return cls.from_named(cls.read_tsv_dir(path))

    def entity_id(self, name: str) -> int:
        return _lookup(self.entity_index, name, "entity")

    def relation_id(self, name: str) -> int:
        return _lookup(self.relation_index, name, "relation")

    def to_graph(self, split: str = "train") -> Graph:
        t = self.splits[split]
        return Graph(self.num_entities, t[:, [0, 2]], t[:, 1], self.num_relations)


def _lookup(index: dict[str, int], name: str, kind: str) -> int:
    try:
        return index[name]
    except KeyError:
        close = difflib.get_close_matches(name, list(index), n=1, cutoff=0.0)
        raise VocabularyError(kind, name, close[0] if close else None) from None


def read_triples(path: str | Path) -> list[tuple[str, str, str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ValueError(f"{path}:{lineno}: expected head<TAB>relation<TAB>tail")
            out.append((fields[0], fields[1], fields[2]))
    return out


def write_triples(path: str | Path, triples: Iterable[tuple[str, str, str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in triples:
            fh.write(f"{h}\t{r}\t{t}\n")


# ---------------------------------------------------------------- models

@dataclass
class EmbeddingModel:
    """Entity and relation tables for one scoring function.

    Layouts: complex and rotate entities interleave real/imaginary parts
    (width 2d); rotate relations are d phases; simple entities hold a head
    half then a tail half (width 2d) and relations have 2|R| rows, the
    second block being the inverse relations.
    """

    kind: str
    dim: int
    entity: Parameter
    relation: Parameter

    @property
    def params(self) -> list[Parameter]:
        return [self.entity, self.relation]

    def config(self) -> dict:
        return {"kind": self.kind, "dim": self.dim,
                "num_entities": int(self.entity.shape[0]),
                "num_relations": int(self.relation.shape[0] // (2 if self.kind == "simple" else 1))}

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.kind, self.dim, Parameter(self.entity.numpy(), "entity"),
                              Parameter(self.relation.numpy(), "relation"))


def table_shapes(kind: str, dim: int, num_entities: int, num_relations: int):
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; choose from {', '.join(MODEL_KINDS)}")
    ent_w = 2 * dim if kind in ("complex", "rotate", "simple") else dim
    rel_rows = 2 * num_relations if kind == "simple" else num_relations
    rel_w = 2 * dim if kind == "complex" else dim
    return (num_entities, ent_w), (rel_rows, rel_w)


def init_model(kind: str, dim: int, num_entities: int, num_relations: int,
               rng: np.random.Generator | int = 0, scale: float = 1.0) -> EmbeddingModel:
    """Uniform init in [-6/sqrt(d), 6/sqrt(d)] times ``scale``; rotate phases
    are always uniform over (-pi, pi]."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    ent_shape, rel_shape = table_shapes(kind, dim, num_entities, num_relations)
    bound = scale * 6 / math.sqrt(dim)
    ent = rng.uniform(-bound, bound, ent_shape)
    if kind == "rotate":
        rel = -rng.uniform(-math.pi, math.pi, rel_shape)  # (-pi, pi]
    else:
        rel = rng.uniform(-bound, bound, rel_shape)
    return EmbeddingModel(kind, dim, Parameter(ent, "entity"), Parameter(rel, "relation"))


def _check_indices(idx, n: int, what: str) -> np.ndarray:
    arr = np.asarray(idx, dtype=np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        bad = arr[(arr < 0) | (arr >= n)][0]
        raise GraphIndexError(f"{what} index {int(bad)} out of range for {n}")
    return arr


def score(model: EmbeddingModel, h, r, t) -> Tensor:
    """Plausibility of each (h, r, t); higher is more plausible."""
    n_ent = model.entity.shape[0]
    n_rel = model.relation.shape[0] // (2 if model.kind == "simple" else 1)
    h = _check_indices(h, n_ent, "head")
    r = _check_indices(r, n_rel, "relation")
    t = _check_indices(t, n_ent, "tail")
    if not (h.size == r.size == t.size):
        raise GraphIndexError("head, relation and tail batches differ in length")
    E, R = model.entity, model.relation
    eh, et = T.gather_rows(E, h), T.gather_rows(E, t)
    kind = model.kind
    if kind == "transe":
        wr = T.gather_rows(R, r)
        return T.neg(T.sum_(T.abs_(eh + wr - et), axis=1))
    if kind == "distmult":
        wr = T.gather_rows(R, r)
        return T.sum_(eh * wr * et, axis=1)
    if kind == "complex":
        wr = T.gather_rows(R, r)
        hr, hi = T.slice_cols(eh, 0, None, 2), T.slice_cols(eh, 1, None, 2)
        rr, ri = T.slice_cols(wr, 0, None, 2), T.slice_cols(wr, 1, None, 2)
        tr, ti = T.slice_cols(et, 0, None, 2), T.slice_cols(et, 1, None, 2)
        re = hr * rr * tr + hr * ri * ti + hi * rr * ti - hi * ri * tr
        return T.sum_(re, axis=1)
    if kind == "rotate":
        theta = T.gather_rows(R, r)
        c, s = T.cos(theta), T.sin(theta)
        hr, hi = T.slice_cols(eh, 0, None, 2), T.slice_cols(eh, 1, None, 2)
        tr, ti = T.slice_cols(et, 0, None, 2), T.slice_cols(et, 1, None, 2)
        dr = hr * c - hi * s - tr
        di = hr * s + hi * c - ti
        return T.neg(T.sqrt(T.sum_(dr * dr + di * di, axis=1)))
    if kind == "simple":
        d = model.dim
        fwd = T.gather_rows(R, r)
        inv = T.gather_rows(R, r + n_rel)
        h_head, h_tail = T.slice_cols(eh, 0, d), T.slice_cols(eh, d, 2 * d)
        t_head, t_tail = T.slice_cols(et, 0, d), T.slice_cols(et, d, 2 * d)
        both = T.sum_(h_head * fwd * t_tail, axis=1) + T.sum_(t_head * inv * h_tail, axis=1)
        return both * 0.5
    raise ConfigError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------- negatives and losses

@dataclass
class NegativeBatch:
    triples: np.ndarray       # (B, k, 3)
    corrupted_tail: np.ndarray  # (B, k) bool; False means the head was replaced
    unresolved: int = 0       # filtered-mode draws accepted after the retry bound

    @property
    def labels(self) -> np.ndarray:
        return np.zeros(self.triples.shape[:2], dtype=np.int64)


MAX_RETRIES = 100


def negative_sample(store: TripletStore, positives: np.ndarray, k: int, mode: str = "uniform",
                    rng: np.random.Generator | int = 0) -> NegativeBatch:
    """Corrupt each positive k times, replacing head or tail by a fair coin.

    ``filtered`` redraws (side and entity) any corruption that is a known
    fact, at most ``MAX_RETRIES`` times; survivors are counted in
    ``unresolved``.
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    if mode not in ("uniform", "filtered"):
        raise ConfigError(f"unknown negative sampling mode {mode!r}")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    pos = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
    b = pos.shape[0]
    n = store.num_entities
    trip = np.repeat(pos[:, None, :], k, axis=1)
    tail_side = rng.random((b, k)) < 0.5
    ents = rng.integers(0, n, (b, k))

    def apply(mask):
        trip[..., 2] = np.where(mask & tail_side, ents, trip[..., 2])
        trip[..., 0] = np.where(mask & ~tail_side, ents, trip[..., 0])

    apply(np.ones((b, k), dtype=bool))
    unresolved = 0
    if mode == "filtered" and b:
        for _ in range(MAX_RETRIES):
            bad = store.is_fact(trip.reshape(-1, 3)).reshape(b, k)
            if not bad.any():
                break
            count = int(bad.sum())
            trip[bad] = np.repeat(pos[:, None, :], k, axis=1)[bad]
            tail_side[bad] = rng.random(count) < 0.5
            ents[bad] = rng.integers(0, n, count)
            apply(bad)
        else:
            unresolved = int(store.is_fact(trip.reshape(-1, 3)).sum())
            if unresolved:
                log.warning("%d negatives still collide with known facts after %d retries",
                            unresolved, MAX_RETRIES)
    return NegativeBatch(trip, tail_side, unresolved)


def loss(kind: str, pos: Tensor, neg: Tensor, margin: float = 1.0, temperature: float = 1.0) -> Tensor:
    """Scalar objective from positive scores (B,) and negative scores (B, k) or (B*k,)."""
    b = pos.shape[0]
    kneg = neg.size // max(b, 1)
    neg = T.reshape(neg, (b * kneg,))
    if kind == "margin":
        rep = T.gather_rows(pos, np.repeat(np.arange(b), kneg))
        return T.mean(T.relu(T.add(T.sub(neg, rep), margin)))
    if kind == "logistic":
        return T.mean(T.softplus(T.neg(pos))) + T.mean(T.softplus(neg))
    if kind == "self_adversarial":
        z = temperature * neg.data.reshape(b, kneg).astype(np.float64)
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        w /= w.sum(axis=1, keepdims=True)
        pos_term = T.mean(T.softplus(T.neg(T.add(pos, margin))))
        neg_term = T.sum_(T.mul(Tensor(w.reshape(-1)), T.softplus(T.add(neg, margin)))) * (1.0 / b)
        return pos_term + neg_term
    raise ConfigError(f"unknown loss kind {kind!r}; choose from {', '.join(LOSS_KINDS)}")


# ---------------------------------------------------------------- training

@dataclass
class KGTrainConfig:
    epochs: int = 1000
    batch_size: int = 32
    lr: float = 0.003
    negatives: int = 4
    loss: str = "margin"
    margin: float = 2.0
    adv_temperature: float = 1.0
    negative_mode: str = "filtered"
    optimizer: str = "adam"
    init_scale: float = 0.1
    seed: int = 0


@dataclass
class KGTrainResult:
    model: EmbeddingModel
    losses: list[float] = field(default_factory=list)
    unresolved_negatives: int = 0


def _postprocess(model: EmbeddingModel) -> None:
    if model.kind == "transe":
        e = model.entity.data.astype(np.float64)
        norm = np.linalg.norm(e, axis=1, keepdims=True)
        model.entity.assign(e / np.where(norm > 0, norm, 1))
    elif model.kind == "rotate":
        # wrap into (-pi, pi]
        th = model.relation.data.astype(np.float64)
        model.relation.assign(math.pi - np.mod(math.pi - th, 2 * math.pi))


def train(store: TripletStore, kind: str, dim: int, cfg: KGTrainConfig,
          model: EmbeddingModel | None = None) -> KGTrainResult:
    """Mini-batch training with seeded shuffling and Adam/SGD updates.

    Returns the per-epoch mean loss. A provided ``model`` is trained in
    place (resume); otherwise one is initialized from ``cfg.seed``.
    """
    data = store.splits["train"]
    if data.shape[0] == 0:
        raise ConfigError("train split is empty")
    if cfg.loss not in LOSS_KINDS:
        raise ConfigError(f"unknown loss kind {cfg.loss!r}")
    rng = np.random.default_rng(cfg.seed)
    if model is None:
        model = init_model(kind, dim, store.num_entities, store.num_relations, rng, cfg.init_scale)
    opt = T.Optimizer(cfg.optimizer, model.params, lr=cfg.lr)
    result = KGTrainResult(model)
    for epoch in range(cfg.epochs):
        order = rng.permutation(data.shape[0])
        total = 0.0
        batches = 0
        for bi, start in enumerate(range(0, order.size, cfg.batch_size)):
            pos = data[order[start:start + cfg.batch_size]]
            negs = negative_sample(store, pos, cfg.negatives, cfg.negative_mode, rng)
            result.unresolved_negatives += negs.unresolved
            nt = negs.triples.reshape(-1, 3)
            opt.zero_grad()
            with Tape() as tape:
                ps = score(model, pos[:, 0], pos[:, 1], pos[:, 2])
                ns = score(model, nt[:, 0], nt[:, 1], nt[:, 2])
                value = loss(cfg.loss, ps, ns, cfg.margin, cfg.adv_temperature)
                if not np.isfinite(value.item()):
                    raise NumericError(f"non-finite loss at epoch {epoch}, batch {bi}")
                tape.backward(value)
            opt.step()
            _postprocess(model)
            total += value.item()
            batches += 1
        result.losses.append(total / batches)
    return result


# ---------------------------------------------------------------- evaluation

def filtered_ranks(scores: np.ndarray, true_idx: np.ndarray, exclude: np.ndarray | None) -> np.ndarray:
    """Pessimistic rank of ``true_idx`` in each row of ``scores``.

    ``exclude`` marks candidates to ignore (known facts); the true column is
    never excluded. Candidates tying with the true score rank ahead of it.
    """
    b, n = scores.shape
    rows = np.arange(b)
    true_scores = scores[rows, true_idx][:, None]
    beats = scores >= true_scores
    beats[rows, true_idx] = False
    if exclude is not None:
        beats &= ~exclude
    return 1 + beats.sum(axis=1)


@dataclass
class RankStats:
    """Exact accumulator: integer sums and a rational reciprocal-rank sum."""

    count: int = 0
    rank_sum: int = 0
    rr_sum: Fraction = Fraction(0)
    hits: dict[int, int] = field(default_factory=lambda: {1: 0, 3: 0, 10: 0})

    def add(self, ranks: Iterable[int]) -> None:
        for r in ranks:
            r = int(r)
            self.count += 1
            self.rank_sum += r
            self.rr_sum += Fraction(1, r)
            for k in self.hits:
                if r <= k:
                    self.hits[k] += 1

    def merge(self, other: "RankStats") -> "RankStats":
        out = RankStats(self.count + other.count, self.rank_sum + other.rank_sum, self.rr_sum + other.rr_sum,
                        {k: self.hits[k] + other.hits[k] for k in self.hits})
        return out

    def metrics(self) -> dict[str, float]:
        if not self.count:
            return {"mr": float("nan"), "mrr": float("nan"), "hits@1": float("nan"),
                    "hits@3": float("nan"), "hits@10": float("nan")}
        out = {"mr": self.rank_sum / self.count, "mrr": float(self.rr_sum / self.count)}
        for k, v in self.hits.items():
            out[f"hits@{k}"] = v / self.count
        return out


@dataclass
class EvalReport:
    split: str
    filtered: bool
    count: int
    head: dict[str, float]
    tail: dict[str, float]
    both: dict[str, float]

    @property
    def mrr(self) -> float:
        return self.both["mrr"]

    @property
    def mr(self) -> float:
        return self.both["mr"]

    def hits(self, k: int) -> float:
        return self.both[f"hits@{k}"]

    def to_record(self) -> dict:
        return {"split": self.split, "ranking": "filtered" if self.filtered else "raw", "count": self.count,
                "head": self.head, "tail": self.tail, "both": self.both}


def candidate_scores(model: EmbeddingModel, h: np.ndarray, r: np.ndarray, t: np.ndarray,
                     replace_tail: bool, chunk: int = 65536) -> np.ndarray:
    """Scores of every entity substituted on one side, shape (B, |E|)."""
    n = model.entity.shape[0]
    b = h.size
    out = np.empty((b, n), dtype=np.float32)
    cand = np.arange(n)
    rows_per = max(1, chunk // max(n, 1))
    for s in range(0, b, rows_per):
        hh, rr, tt = h[s:s + rows_per], r[s:s + rows_per], t[s:s + rows_per]
        m = hh.size
        if replace_tail:
            args = (np.repeat(hh, n), np.repeat(rr, n), np.tile(cand, m))
        else:
            args = (np.tile(cand, m), np.repeat(rr, n), np.repeat(tt, n))
        out[s:s + m] = score(model, *args).data.reshape(m, n)
    return out


def _known_mask(store: TripletStore, h, r, t, replace_tail: bool) -> np.ndarray:
    n = store.num_entities
    m = h.size
    cand = np.tile(np.arange(n), m)
    if replace_tail:
        trip = np.stack([np.repeat(h, n), np.repeat(r, n), cand], axis=1)
    else:
        trip = np.stack([cand, np.repeat(r, n), np.repeat(t, n)], axis=1)
    return store.is_fact(trip).reshape(m, n)


def _shard_stats(store, model, triples, filtered) -> tuple[RankStats, RankStats]:
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    heads, tails = RankStats(), RankStats()
    if not triples.size:
        return heads, tails
    ts = candidate_scores(model, h, r, t, replace_tail=True)
    tails.add(filtered_ranks(ts, t, _known_mask(store, h, r, t, True) if filtered else None))
    hs = candidate_scores(model, h, r, t, replace_tail=False)
    heads.add(filtered_ranks(hs, h, _known_mask(store, h, r, t, False) if filtered else None))
    return heads, tails


def evaluate_filtered(store: TripletStore, model: EmbeddingModel, split: str = "test", filtered: bool = True,
                      workers: int = 1) -> EvalReport:
    """Rank each triple's true head and tail among all entities.

    With ``filtered`` (default) other known facts are removed from the
    candidate list. ``workers`` > 1 shards the triples across threads; the
    exact accumulators make the result independent of sharding.
    """
    triples = store.splits[split]
    if triples.shape[0] == 0:
        raise ConfigError(f"{split} split is empty")
    shards = np.array_split(triples, max(1, min(workers, triples.shape[0])))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _shard_stats(store, model, s, filtered), shards))
    else:
        parts = [_shard_stats(store, model, s, filtered) for s in shards]
    heads, tails = RankStats(), RankStats()
    for hs, ts in parts:
        heads = heads.merge(hs)
        tails = tails.merge(ts)
    return EvalReport(split, filtered, int(triples.shape[0]), heads.metrics(), tails.metrics(),
                      heads.merge(tails).metrics())


def query_topk(store: TripletStore, model: EmbeddingModel, head: str, relation: str, k: int,
               include_known: bool = False) -> list[tuple[str, float]]:
    """Top-k tails for (head, relation, ?), best first, ties by entity index."""
    if k < 1:
        raise ConfigError("k must be at least 1")
    h = store.entity_id(head)
    r = store.relation_id(relation)
    scores = candidate_scores(model, np.array([h]), np.array([r]), np.array([0]), replace_tail=True)[0]
    cand = np.arange(store.num_entities)
    if not include_known:
        known = _known_mask(store, np.array([h]), np.array([r]), np.array([0]), True)[0]
        cand = cand[~known]
    order = cand[np.argsort(-scores[cand], kind="stable")]
    return [(store.entities[i], float(scores[i])) for i in order[:k]]
