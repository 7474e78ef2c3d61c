"""Deterministic synthetic data and the bundled sample files."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

RELATIONS = ("succ", "plus2", "inv_succ")


def entity_name(i: int) -> str:
    return f"e{i}"


def compositional_facts(n: int) -> list[tuple[int, str, int]]:
    """All 3n facts of the cyclic KG: succ, plus2 and inv_succ."""
    facts = []
    for i in range(n):
        facts.append((i, "succ", (i + 1) % n))
        facts.append((i, "plus2", (i + 2) % n))
        facts.append(((i + 1) % n, "inv_succ", i))
    return facts


def _inferable(fact, train: set, n: int) -> bool:
    h, r, t = fact
    if r == "succ":
        return (t, "inv_succ", h) in train
    if r == "inv_succ":
        return (t, "succ", h) in train
    mid = (h + 1) % n

    def step(a, b):
        return (a, "succ", b) in train or (b, "inv_succ", a) in train

    return step(h, mid) and step(mid, t)


def generate_kg(n: int, seed: int = 0) -> dict[str, list[tuple[str, str, str]]]:
    """Split the cyclic KG 80/10/10 by a seeded shuffle.

    A fact is held out only while every held-out fact stays derivable from
    the remaining training facts by one inverse or a two-step succ chain.
    """
    if n < 8:
        raise ValueError("n_entities must be at least 8")
    facts = compositional_facts(n)
    rng = np.random.default_rng(seed)
    order = [facts[i] for i in rng.permutation(len(facts))]
    n_valid = n_test = len(facts) // 10
    want = n_valid + n_test
    train = set(order)
    held: list = []
    for fact in order:
        if len(held) == want:
            break
        train.discard(fact)
        trial = held + [fact]
        if all(_inferable(f, train, n) for f in trial):
            held = trial
        else:
            train.add(fact)
    if len(held) < want:
        raise ValueError(f"could not hold out {want} inferable facts for n={n}")
    held_set = set(held)
    named = lambda fs: [(entity_name(h), r, entity_name(t)) for h, r, t in fs]  # noqa: E731
    return {
        "train": named([f for f in order if f not in held_set]),
        "valid": named(held[:n_valid]),
        "test": named(held[n_valid:]),
    }


def data_path(name: str) -> Path:
    return Path(str(resources.files("graphrx") / "data" / name))
