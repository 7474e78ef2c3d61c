"""Independent oracles and gradient-check instances shared by the test modules."""

from __future__ import annotations

import contextlib
import itertools
from collections import Counter, deque

import numpy as np

from graphrx import kg
from graphrx import prop
from graphrx import tensor as T
from graphrx.graph import Graph, build
from graphrx.molecule import Molecule, from_smiles
from graphrx.tensor import Parameter, Tensor

EXAMPLE_SMILES = ["CCSCCSP(=S)(OC)OC", "CCOC(=O)N", "N(Nc1ccccc1)c2ccccc2", "NC(=O)c1cccnc1"]

# hand walk of the grammar: (heavy atoms, bonds) per example molecule
EXAMPLE_COUNTS = [(12, 11), (6, 5), (14, 15), (9, 9)]


# ---------------------------------------------------------------- graph oracles

def bfs_components(num_nodes: int, edges) -> tuple[list[int], int]:
    adj = [[] for _ in range(num_nodes)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    comp = [-1] * num_nodes
    count = 0
    for s in range(num_nodes):
        if comp[s] != -1:
            continue
        comp[s] = count
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if comp[v] == -1:
                    comp[v] = count
                    queue.append(v)
        count += 1
    return comp, count


def random_graph(rng: np.random.Generator, max_nodes: int = 32, p: float | None = None, sentinels: bool = True,
                 offset: float = 0.0) -> Graph:
    """Random multigraph with unique sentinel values tagging every row."""
    n = int(rng.integers(0, max_nodes + 1))
    p = p if p is not None else float(rng.choice([0.02, 0.1, 0.3]))
    mask = rng.random((n, n)) < p
    edges = np.argwhere(mask)
    if sentinels:
        attrs = {
            "node": {"tag": offset + np.arange(n, dtype=np.float64),
                     "vec": np.stack([offset + np.arange(n), -np.arange(n)], axis=1).astype(np.float32)},
            "edge": {"etag": offset + 1000.0 + np.arange(len(edges), dtype=np.float64)},
            "graph": {"gtag": np.array([offset], dtype=np.float64)},
        }
    else:
        attrs = None
    return build(n, edges, attrs)


# ---------------------------------------------------------------- molecule oracles

def _atom_key(m: Molecule, i: int) -> tuple:
    a = m.node_attrs
    return (int(a["atomic_number"][i]), int(a["formal_charge"][i]), bool(a["aromatic"][i]),
            int(a["implicit_hydrogens"][i]), int(a["isotope"][i]))


def _bond_map(m: Molecule) -> dict[tuple[int, int], int]:
    out = {}
    for u, v, t in m.bonds():
        out[(u, v)] = t
        out[(v, u)] = t
    return out


def isomorphic(a: Molecule, b: Molecule) -> bool:
    """Attribute-preserving isomorphism by backtracking over label-compatible atoms."""
    if a.num_atoms != b.num_atoms or a.num_bonds != b.num_bonds:
        return False
    n = a.num_atoms
    ka = [_atom_key(a, i) for i in range(n)]
    kb = [_atom_key(b, i) for i in range(n)]
    if Counter(ka) != Counter(kb):
        return False
    ba, bb = _bond_map(a), _bond_map(b)
    na = [sorted(v for (u, v) in ba if u == i) for i in range(n)]
    nb = [sorted(v for (u, v) in bb if u == i) for i in range(n)]
    order = sorted(range(n), key=lambda i: -len(na[i]))
    mapping: dict[int, int] = {}
    used = [False] * n

    def extend(k: int) -> bool:
        if k == n:
            return True
        i = order[k]
        for j in range(n):
            if used[j] or kb[j] != ka[i] or len(nb[j]) != len(na[i]):
                continue
            ok = True
            for u in na[i]:
                if u in mapping and bb.get((j, mapping[u])) != ba[(i, u)]:
                    ok = False
                    break
            if not ok:
                continue
            mapping[i] = j
            used[j] = True
            if extend(k + 1):
                return True
            del mapping[i]
            used[j] = False
        return False

    return extend(0)


def invariant_multiset(m: Molecule) -> Counter:
    bonds = _bond_map(m)
    out = Counter()
    for i in range(m.num_atoms):
        types = tuple(sorted(t for (u, _), t in bonds.items() if u == i))
        key = _atom_key(m, i)
        out[(key[0], key[1], len(types), types)] += 1
    return out


def roundtrip_ok(smiles: str) -> bool:
    first = from_smiles(smiles)
    second = from_smiles(first.to_smiles())
    if first.num_atoms <= 20:
        return isomorphic(first, second)
    return invariant_multiset(first) == invariant_multiset(second) and first.num_bonds == second.num_bonds


# ---------------------------------------------------------------- ranking oracle

def brute_force_ranks(store: kg.TripletStore, model: kg.EmbeddingModel, split: str) -> list[int]:
    """Filtered pessimistic ranks by scoring every candidate one triple at a time."""
    facts = {tuple(t) for s in kg.SPLITS for t in store.splits[s].tolist()}
    ranks = []
    for h, r, t in store.splits[split].tolist():
        for side in ("head", "tail"):
            true = kg.score(model, [h], [r], [t]).numpy()[0]
            rank = 1
            for e in range(store.num_entities):
                cand = (e, r, t) if side == "head" else (h, r, e)
                if cand == (h, r, t) or cand in facts:
                    continue
                if kg.score(model, [cand[0]], [cand[1]], [cand[2]]).numpy()[0] >= true:
                    rank += 1
            ranks.append(rank)
    return ranks


# ---------------------------------------------------------------- gradient-check instances

KINK = 0.02


@contextlib.contextmanager
def kink_monitor():
    """Record the smallest |input| seen by relu and abs while active."""
    seen = [np.inf]
    relu, abs_ = T.relu, T.abs_

    def watch(fn):
        def wrapped(x):
            x = T.as_tensor(x)
            if x.size:
                seen[0] = min(seen[0], float(np.abs(x.data).min()))
            return fn(x)
        return wrapped

    T.relu, T.abs_ = watch(relu), watch(abs_)
    try:
        yield seen
    finally:
        T.relu, T.abs_ = relu, abs_


def _weights(rng, shape) -> Tensor:
    return Tensor(rng.uniform(-1, 1, shape))


def _weighted(out: Tensor, w: Tensor) -> Tensor:
    return T.sum_(T.mul(out, w))


def _shape(rng, ndim=2):
    return tuple(int(s) for s in rng.integers(1, 7, ndim))


def _far_from(values: np.ndarray, points=(0.0,), margin=KINK) -> bool:
    return all(np.abs(values - p).min() > margin for p in points) if values.size else True


def _unary_case(op, low=-2.0, high=2.0, kinks=()):
    def make(rng):
        shape = _shape(rng)
        while True:
            x = rng.uniform(low, high, shape)
            if _far_from(x, kinks):
                break
        p = Parameter(x, "x")
        w = _weights(rng, shape)
        return (lambda: _weighted(op(p), w)), [p]
    return make


def _binary_case(op, broadcast: str):
    def make(rng):
        shape = _shape(rng)
        a = Parameter(rng.uniform(-2, 2, shape), "a")
        bshape = {"same": shape, "scalar": (), "row": (shape[1],)}[broadcast]
        b = Parameter(rng.uniform(-2, 2, bshape), "b")
        w = _weights(rng, shape)
        return (lambda: _weighted(op(a, b), w)), [a, b]
    return make


def _matmul_case(rng):
    m, k, n = (int(s) for s in rng.integers(1, 7, 3))
    a = Parameter(rng.uniform(-2, 2, (m, k)), "a")
    b = Parameter(rng.uniform(-2, 2, (k, n)), "b")
    w = _weights(rng, (m, n))
    return (lambda: _weighted(T.matmul(a, b), w)), [a, b]


def _reduce_case(op):
    def make(rng):
        shape = _shape(rng)
        axis = [None, 0, 1][int(rng.integers(0, 3))]
        while True:
            x = rng.uniform(-2, 2, shape)
            if op != "max":
                break
            srt = np.sort(x.reshape(-1) if axis is None else np.moveaxis(x, axis, -1), axis=-1)
            if srt.shape[-1] < 2 or (srt[..., -1] - srt[..., -2]).min() > KINK:
                break
        p = Parameter(x, "x")
        out_shape = () if axis is None else tuple(s for i, s in enumerate(shape) if i != axis)
        w = _weights(rng, out_shape)
        return (lambda: _weighted(T.reduce(op, p, axis), w)), [p]
    return make


def _gather_case(rng):
    n, d = _shape(rng)
    idx = rng.integers(0, n, int(rng.integers(0, 8)))
    p = Parameter(rng.uniform(-2, 2, (n, d)), "x")
    w = _weights(rng, (idx.size, d))
    return (lambda: T.add(_weighted(T.gather_rows(p, idx), w), T.sum_(p))), [p]


def _scatter_case(rng):
    m, d = _shape(rng)
    n = int(rng.integers(1, 7))
    idx = rng.integers(0, n, m)
    p = Parameter(rng.uniform(-2, 2, (m, d)), "src")
    w = _weights(rng, (n, d))
    return (lambda: _weighted(T.scatter_add_rows(p, idx, n), w)), [p]


def _scale_rows_case(rng):
    n, d = _shape(rng)
    x = Parameter(rng.uniform(-2, 2, (n, d)), "x")
    s = Parameter(rng.uniform(-2, 2, (n,)), "s")
    w = _weights(rng, (n, d))
    return (lambda: _weighted(T.scale_rows(x, s), w)), [x, s]


def _reshape_case(rng):
    n, d = _shape(rng)
    x = Parameter(rng.uniform(-2, 2, (n, d)), "x")
    w = _weights(rng, (d, n))
    return (lambda: _weighted(T.reshape(x, (d, n)), w)), [x]


def _slice_case(rng):
    n, d = _shape(rng)
    start = int(rng.integers(0, d))
    step = int(rng.integers(1, 3))
    x = Parameter(rng.uniform(-2, 2, (n, d)), "x")
    width = len(range(start, d, step))
    w = _weights(rng, (n, width))
    return (lambda: _weighted(T.slice_cols(x, start, d, step), w)), [x]


def _composite_case(rng):
    """A two-layer message-passing style chain through most ops."""
    n, d = _shape(rng)
    while True:
        x = rng.uniform(-2, 2, (n, d))
        wm = rng.uniform(-2, 2, (d, d))
        idx = rng.integers(0, n, 2 * n)
        with kink_monitor() as seen:
            _composite(Tensor(x), Tensor(wm), idx, n)
        if seen[0] > KINK:
            break
    px, pw = Parameter(x, "x"), Parameter(wm, "w")
    return (lambda: _composite(px, pw, idx, n)), [px, pw]


def _composite(x, w, idx, n):
    h = T.relu(T.matmul(x, w))
    msg = T.gather_rows(h, idx[: idx.size // 2])
    agg = T.scatter_add_rows(msg, idx[idx.size // 2:], n)
    out = T.sigmoid(T.add(agg, T.mean(x, axis=0)))
    return T.sum_(T.log(T.add(T.exp(T.mul(out, out)), 1.0)))


def _kg_case(kind: str):
    def make(rng):
        ne, nr, dim, b = int(rng.integers(2, 6)), int(rng.integers(1, 4)), int(rng.integers(1, 5)), 6
        while True:
            model = kg.init_model(kind, dim, ne, nr, rng)
            h, r, t = rng.integers(0, ne, b), rng.integers(0, nr, b), rng.integers(0, ne, b)
            with kink_monitor() as seen:
                kg.score(model, h, r, t)
            if kind != "transe" or seen[0] > KINK:
                break
        w = _weights(rng, (b,))
        return (lambda: _weighted(kg.score(model, h, r, t), w)), model.params
    return make


_MOL_PAIRS = [("CCO", "c1ccncc1"), ("CC(=O)N", "C1CC1"), ("O=C=O", "Cc1ccccc1"), ("N#CC", "CCS")]


def _prop_case(layer: str):
    def make(rng):
        pair = _MOL_PAIRS[int(rng.integers(0, len(_MOL_PAIRS)))]
        mols = [from_smiles(s) for s in pair]
        labels = np.array([1.0, 0.0]) if layer == "gin" else rng.uniform(-1, 1, 2)
        task = "binary" if layer == "gin" else "regression"
        ds = prop.PropertyDataset(mols, labels, task)
        pg, x, y = ds.batch([0, 1])
        cfg = prop.PropertyConfig(layer=layer, num_layers=2, width=4, task=task)
        while True:
            model = prop.build_model(cfg, rng)
            if layer == "gin":
                for lay in model.layers:
                    lay.epsilon.assign(np.array(rng.uniform(-0.5, 0.5)))
            with kink_monitor() as seen:
                prop.forward(model, pg, x)
            if seen[0] > KINK:
                break
        return (lambda: prop.task_loss(task, prop.forward(model, pg, x), y)), model.params
    return make


GRAD_CASES = {
    "add": _binary_case(T.add, "same"),
    "add_scalar": _binary_case(T.add, "scalar"),
    "add_row": _binary_case(T.add, "row"),
    "sub_row": _binary_case(T.sub, "row"),
    "mul": _binary_case(T.mul, "same"),
    "mul_scalar": _binary_case(T.mul, "scalar"),
    "neg": _unary_case(T.neg),
    "relu": _unary_case(T.relu, kinks=(0.0,)),
    "sigmoid": _unary_case(T.sigmoid),
    "exp": _unary_case(T.exp),
    "log": _unary_case(T.log, low=0.1, high=2.0),
    "softplus": _unary_case(T.softplus),
    "abs": _unary_case(T.abs_, kinks=(0.0,)),
    "sqrt": _unary_case(T.sqrt, low=0.1, high=2.0),
    "cos": _unary_case(T.cos),
    "sin": _unary_case(T.sin),
    "matmul": _matmul_case,
    "sum": _reduce_case("sum"),
    "mean": _reduce_case("mean"),
    "max": _reduce_case("max"),
    "gather_rows": _gather_case,
    "scatter_add_rows": _scatter_case,
    "scale_rows": _scale_rows_case,
    "reshape": _reshape_case,
    "slice_cols": _slice_case,
    "composite": _composite_case,
    **{f"kg_{kind}": _kg_case(kind) for kind in kg.MODEL_KINDS},
    "prop_gin": _prop_case("gin"),
    "prop_gcn": _prop_case("gcn"),
}


def grad_case(name: str, seed: int):
    return GRAD_CASES[name](np.random.default_rng([hash_name(name), seed]))


def hash_name(name: str) -> int:
    return sum((i + 1) * ord(c) for i, c in enumerate(name))


def all_orders(n: int):
    return itertools.permutations(range(n))


# ---------------------------------------------------------------- attribute-maintenance sequences

def member_ref(g: Graph) -> dict:
    """Reference view of a sentinel-tagged graph, keyed by tags not positions."""
    tag = g.node_attrs["tag"]
    return {
        "nodes": [(float(t), float(v)) for t, v in zip(tag, g.node_attrs["vec"][:, 1])],
        "edges": [(float(tag[u]), float(tag[v]), float(e)) for (u, v), e in zip(g.edges.tolist(), g.edge_attrs["etag"])],
        "graph": float(g.graph_attrs["gtag"][0]),
    }


def _ref_node_filter(ref: dict, keep_tags: list[float]) -> dict:
    kept = set(keep_tags)
    lookup = dict(ref["nodes"])
    return {"nodes": [(t, lookup[t]) for t in keep_tags],
            "edges": [e for e in ref["edges"] if e[0] in kept and e[1] in kept],
            "graph": ref["graph"]}


def check_pack(pg, refs: list[dict]) -> None:
    assert pg.batch_size == len(refs), f"batch size {pg.batch_size} != {len(refs)}"
    assert pg.node_offsets[0] == 0 and np.all(np.diff(pg.node_offsets) >= 0)
    owner = np.repeat(np.arange(pg.batch_size), pg.node_counts)
    eo = pg.edge_graph_ids()
    assert np.array_equal(owner[pg.edges[:, 0]], eo) and np.array_equal(owner[pg.edges[:, 1]], eo)
    members = pg.unpack()
    for i, (g, ref) in enumerate(zip(members, refs)):
        got = member_ref(g)
        assert got == ref, f"member {i} attributes out of alignment"
        assert np.array_equal(g.node_attrs["vec"][:, 0], g.node_attrs["tag"].astype(np.float32))


def run_maintenance_sequence(seed: int, steps: int = 8, max_nodes: int = 32) -> list[str]:
    """Apply random structure ops to a sentinel-tagged pack and check every
    row after each op. Returns the op trail for failure messages."""
    from graphrx.graph import pack, subgraph

    rng = np.random.default_rng(seed)
    offset = [0.0]

    def fresh() -> Graph:
        offset[0] += 10000.0
        return random_graph(rng, max_nodes, offset=offset[0])

    gs = [fresh() for _ in range(int(rng.integers(1, 4)))]
    pg = pack(gs)
    refs = [member_ref(g) for g in gs]
    trail = ["pack"]
    for _ in range(steps):
        op = ["node_mask", "edge_mask", "subgraph", "pack", "unpack", "repeat", "select"][int(rng.integers(0, 7))]
        trail.append(op)
        if op == "node_mask":
            keep = rng.random(pg.num_nodes) < 0.7
            tags = pg.node_attrs["tag"]
            new_refs = []
            for i, ref in enumerate(refs):
                a, b = int(pg.node_offsets[i]), int(pg.node_offsets[i + 1])
                new_refs.append(_ref_node_filter(ref, [float(t) for t, k in zip(tags[a:b], keep[a:b]) if k]))
            pg, refs = pg.node_mask(keep), new_refs
        elif op == "edge_mask":
            keep = rng.random(pg.num_edges) < 0.7
            new_refs = []
            for i, ref in enumerate(refs):
                a, b = int(pg.edge_offsets[i]), int(pg.edge_offsets[i + 1])
                new_refs.append({**ref, "edges": [e for e, k in zip(ref["edges"], keep[a:b]) if k]})
            pg, refs = pg.edge_mask(keep), new_refs
        elif op == "subgraph":
            members = pg.unpack()
            j = int(rng.integers(0, len(members))) if members else None
            if j is not None:
                g = members[j]
                order = rng.permutation(g.num_nodes)[: int(rng.integers(0, g.num_nodes + 1))]
                members[j] = subgraph(g, order)
                tags = g.node_attrs["tag"]
                refs[j] = _ref_node_filter(refs[j], [float(tags[i]) for i in order])
                pg = pack(members, registry=pg.registry, member_type=pg.member_type)
        elif op == "pack":
            g = fresh()
            pg = pack(pg.unpack() + [g])
            refs = refs + [member_ref(g)]
        elif op == "unpack":
            pg = pack(pg.unpack(), registry=pg.registry, member_type=pg.member_type)
        elif op == "repeat":
            k = int(rng.integers(0, 3))
            pg, refs = pg.repeat(k), refs * k
        else:
            idx = rng.integers(0, pg.batch_size, int(rng.integers(0, 4))) if pg.batch_size else []
            pg, refs = pg.select(idx), [refs[i] for i in idx]
        if pg.num_nodes > 400:
            keep = list(range(min(pg.batch_size, 3)))
            pg, refs = pg.select(keep), [refs[i] for i in keep]
            trail.append("select(trim)")
        try:
            check_pack(pg, refs)
        except AssertionError as exc:
            raise AssertionError(f"seed {seed}, ops {' -> '.join(trail)}: {exc}") from None
    return trail


# ---------------------------------------------------------------- CLI pipeline

CLI_STEPS = [
    ["mol-parse", "--out", "parse", "input=mols.smi"],
    ["mol-viz", "--out", "viz", "input=mols.smi"],
    ["gen-kg", "--out", "kg", "n_entities=10"],
    ["kg-train", "--out", "kgm", "data=kg", "model=rotate", "dim=8", "epochs=20"],
    ["kg-eval", "--out", "kge", "checkpoint=kgm/model.ckpt", "data=kg"],
    ["kg-query", "--out", "kgq", "checkpoint=kgm/model.ckpt", "data=kg", "head=e0", "relation=succ", "k=3"],
    ["prop-train", "--out", "pm", "epochs=3", "width=8"],
    ["prop-eval", "--out", "pe", "checkpoint=pm/model.ckpt"],
]


@contextlib.contextmanager
def working_dir(path):
    import os

    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    import io

    from graphrx.cli import main

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            rc = main(argv)
        except SystemExit as exc:
            rc = exc.code
    return rc, out.getvalue(), err.getvalue()


def run_cli_pipeline(root, seed: int = 0) -> tuple[dict[str, int], dict[str, bytes]]:
    """Run every command once under ``root`` with relative paths; return exit
    codes and the bytes of every file written."""
    from pathlib import Path

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / "mols.smi").write_text("\n".join(EXAMPLE_SMILES + ["[Na+].[Cl-]"]) + "\n")
    codes = {}
    with working_dir(root):
        for step in CLI_STEPS:
            codes[step[0]], _, _ = run_cli(step[:1] + ["--seed", str(seed)] + step[1:])
    files = {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    return codes, files


# ---------------------------------------------------------------- acceptance lines

ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
