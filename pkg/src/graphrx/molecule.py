"""Molecules as attributed graphs: SMILES in and out, ions, features, scaffolds."""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np

from . import smiles as _smiles
from .chem import (
    AROMATIC_BOND, BOND_ORDER, SYMBOL, VALENCES, valence_ok,
)
from .errors import SmilesError
from .graph import Graph, PackedGraph, connected_components, node_mask, pack, to_undirected
from .tensor import Tensor

NODE_FIELDS = ("atomic_number", "formal_charge", "aromatic", "implicit_hydrogens", "isotope", "nonstandard")

ELEMENT_PALETTE = ("B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I", "Na", "K", "Li", "Ca")
_PALETTE_Z = {z: i for i, z in enumerate(
    [{"B": 5, "C": 6, "N": 7, "O": 8, "F": 9, "Si": 14, "P": 15, "S": 16, "Cl": 17, "Br": 35, "I": 53,
      "Na": 11, "K": 19, "Li": 3, "Ca": 20}[s] for s in ELEMENT_PALETTE])}
ATOM_FEATURE_DIM = 33
BOND_FEATURE_DIM = 4
FEATURE_SCHEME = "atom33-bond4-v1"


class Molecule(Graph):
    """Graph whose edges are bonds stored once per direction.

    Node attributes: ``atomic_number``, ``formal_charge``, ``aromatic``,
    ``implicit_hydrogens``, ``isotope``, ``nonstandard``. Edge attribute:
    ``bond_type`` (0 single, 1 double, 2 triple, 3 aromatic).
    """

    @classmethod
    def from_smiles(cls, s: str) -> "Molecule":
        return from_smiles(s)

    @property
    def num_atoms(self) -> int:
        return self.num_nodes

    @property
    def num_bonds(self) -> int:
        return len(self.bonds())

    def bonds(self) -> list[tuple[int, int, int]]:
        """Undirected bonds ``(u, v, bond_type)`` with ``u < v``, first occurrence order."""
        seen = set()
        out = []
        types = self.edge_attrs["bond_type"]
        for (u, v), t in zip(self.edges.tolist(), types.tolist()):
            key = (min(u, v), max(u, v))
            if key not in seen:
                seen.add(key)
                out.append((key[0], key[1], int(t)))
        return out

    def atom(self, i: int) -> dict[str, int]:
        return {k: int(self.node_attrs[k][i]) for k in NODE_FIELDS}

    def to_smiles(self) -> str:
        return to_smiles(self)

    def ion_to_molecule(self) -> tuple["Molecule", list[str]]:
        return ion_to_molecule(self)

    def featurize_atoms(self, scheme: str = "default") -> Tensor:
        return featurize_atoms(self, scheme)

    def featurize_bonds(self) -> Tensor:
        return featurize_bonds(self)

    def murcko_scaffold(self) -> "Molecule":
        return murcko_scaffold(self)

    def formula(self) -> str:
        return formula(self)

    @property
    def num_components(self) -> int:
        return connected_components(self)[1]


def _orders(num_atoms: int, bonds: Sequence[tuple[int, int, int]]) -> list[list[int]]:
    orders: list[list[int]] = [[] for _ in range(num_atoms)]
    for u, v, t in bonds:
        orders[u].append(BOND_ORDER[t])
        orders[v].append(BOND_ORDER[t])
    return orders


def _nonstandard(z, charge, aromatic, hydrogens, orders) -> np.ndarray:
    return np.array([not valence_ok(int(z[i]), int(charge[i]), bool(aromatic[i]), orders[i], int(hydrogens[i]))
                     for i in range(len(z))], dtype=bool)


def molecule_from_parts(z, charge, aromatic, hydrogens, isotope, bonds) -> Molecule:
    """Assemble a Molecule from per-atom arrays and undirected bonds."""
    n = len(z)
    z = np.asarray(z, dtype=np.int64).reshape(n)
    charge = np.asarray(charge, dtype=np.int64).reshape(n)
    aromatic = np.asarray(aromatic, dtype=bool).reshape(n)
    hydrogens = np.asarray(hydrogens, dtype=np.int64).reshape(n)
    isotope = np.asarray(isotope, dtype=np.int64).reshape(n)
    flags = _nonstandard(z, charge, aromatic, hydrogens, _orders(n, bonds))
    directed = Graph(
        n,
        np.array([(u, v) for u, v, _ in bonds], dtype=np.int64).reshape(-1, 2),
        edge_attrs={"bond_type": np.array([t for *_, t in bonds], dtype=np.int64)},
    )
    both = to_undirected(directed)
    return Molecule(
        n, both.edges,
        node_attrs={"atomic_number": z, "formal_charge": charge, "aromatic": aromatic,
                    "implicit_hydrogens": hydrogens, "isotope": isotope, "nonstandard": flags},
        edge_attrs=both.edge_attrs,
    )


def from_smiles(s: str) -> Molecule:
    parsed = _smiles.parse(s)
    atoms = parsed.atoms
    return molecule_from_parts(
        [a.atomic_number for a in atoms], [a.charge for a in atoms], [a.aromatic for a in atoms],
        parsed.hydrogens, [a.isotope for a in atoms], parsed.bonds,
    )


class BatchSmilesError(SmilesError):
    def __init__(self, line: int, cause: Exception):
        self.line = line
        self.cause = cause
        super().__init__(f"line {line}: {cause}")


def from_smiles_batch(lines: Sequence[str]) -> PackedGraph:
    """Pack one molecule per line; the first bad line (1-based) aborts the batch."""
    mols = []
    for i, line in enumerate(lines, start=1):
        try:
            mols.append(from_smiles(line.strip()))
        except SmilesError as exc:
            raise BatchSmilesError(i, exc) from exc
    if not mols:
        return pack([], registry=from_smiles("").registry, member_type=Molecule)
    return pack(mols)


def _atom_rows(m: Molecule) -> list[tuple[int, bool, int, int, int]]:
    a = m.node_attrs
    return [(int(a["atomic_number"][i]), bool(a["aromatic"][i]), int(a["formal_charge"][i]),
             int(a["isotope"][i]), int(a["implicit_hydrogens"][i])) for i in range(m.num_atoms)]


def to_smiles(m: Molecule) -> str:
    return _smiles.write(_atom_rows(m), m.bonds())


def formula(m: Molecule) -> str:
    """Hill-order molecular formula including implicit hydrogens."""
    counts: Counter[str] = Counter()
    for z, h in zip(m.node_attrs["atomic_number"].tolist(), m.node_attrs["implicit_hydrogens"].tolist()):
        counts[SYMBOL[z]] += 1
        if h:
            counts["H"] += h
    if "C" in counts:
        order = ["C"] + (["H"] if "H" in counts else []) + sorted(k for k in counts if k not in ("C", "H"))
    else:
        order = sorted(counts)
    return "".join(f"{k}{counts[k] if counts[k] > 1 else ''}" for k in order)


def ion_to_molecule(m: Molecule) -> tuple[Molecule, list[str]]:
    """Neutralize charged atoms by adding or removing hydrogens.

    Each atom is reported as ``"neutral"`` (no charge), ``"neutralized"`` or
    ``"not_neutralizable"`` (no hydrogen change yields a standard valence,
    e.g. metal cations or quaternary nitrogen).
    """
    a = m.node_attrs
    z = a["atomic_number"]
    charge = a["formal_charge"].copy()
    hyd = a["implicit_hydrogens"].copy()
    arom = a["aromatic"]
    orders = _orders(m.num_atoms, m.bonds())
    report = []
    for i in range(m.num_atoms):
        c = int(charge[i])
        if c == 0:
            report.append("neutral")
            continue
        new_h = int(hyd[i]) - c  # negative charge gains H, positive loses H
        zi = int(z[i])
        if zi in VALENCES and new_h >= 0 and valence_ok(zi, 0, bool(arom[i]), orders[i], new_h):
            hyd[i] = new_h
            charge[i] = 0
            report.append("neutralized")
        else:
            report.append("not_neutralizable")
    out = molecule_from_parts(z, charge, arom, hyd, a["isotope"], m.bonds())
    return out, report


def _one_hot(values: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((values.shape[0], size), dtype=np.float32)
    out[np.arange(values.shape[0]), values] = 1
    return out


def featurize_atoms(m: Molecule, scheme: str = "default") -> Tensor:
    """33 columns: element (16, last = other), charge -2..2 (5), aromatic (1),
    implicit H 0..4 (5), degree 0..5 (6)."""
    if scheme != "default":
        raise ValueError(f"unknown atom feature scheme {scheme!r}")
    a = m.node_attrs
    n = m.num_atoms
    elem = np.array([_PALETTE_Z.get(int(z), len(ELEMENT_PALETTE)) for z in a["atomic_number"]], dtype=np.int64)
    charge = np.clip(a["formal_charge"], -2, 2) + 2
    hyd = np.clip(a["implicit_hydrogens"], 0, 4)
    deg = np.zeros(n, dtype=np.int64)
    for u, v, _ in m.bonds():
        deg[u] += 1
        deg[v] += 1
    deg = np.clip(deg, 0, 5)
    feats = np.concatenate([
        _one_hot(elem, 16), _one_hot(charge, 5), a["aromatic"].astype(np.float32).reshape(n, 1),
        _one_hot(hyd, 5), _one_hot(deg, 6),
    ], axis=1) if n else np.zeros((0, ATOM_FEATURE_DIM), dtype=np.float32)
    return Tensor(feats)


def featurize_bonds(m: Molecule) -> Tensor:
    return Tensor(_one_hot(m.edge_attrs["bond_type"], BOND_FEATURE_DIM) if m.num_edges
                  else np.zeros((0, BOND_FEATURE_DIM), dtype=np.float32))


def ring_atoms(m: Molecule) -> np.ndarray:
    """Atoms lying on at least one cycle, i.e. incident to a non-bridge bond."""
    n = m.num_atoms
    bonds = m.bonds()
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (u, v, _) in enumerate(bonds):
        adj[u].append((v, k))
        adj[v].append((u, k))
    disc = [-1] * n
    low = [0] * n
    bridge = [False] * len(bonds)
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            advanced = False
            for u, k in it:
                if k == via:
                    continue
                if disc[u] < 0:
                    disc[u] = low[u] = timer
                    timer += 1
                    stack.append((u, k, iter(adj[u])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[u])
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    bridge[via] = True
    in_ring = np.zeros(n, dtype=bool)
    for k, (u, v, _) in enumerate(bonds):
        if not bridge[k]:
            in_ring[u] = in_ring[v] = True
    return in_ring


def murcko_scaffold(m: Molecule) -> Molecule:
    """Strip non-ring atoms of degree <= 1 until nothing changes.

    Atoms that lose a neighbour get the lost bond order back as implicit
    hydrogens, so the scaffold keeps standard valences.
    """
    in_ring = ring_atoms(m)
    bonds = m.bonds()
    alive = np.ones(m.num_atoms, dtype=bool)
    deg = np.zeros(m.num_atoms, dtype=np.int64)
    for u, v, _ in bonds:
        deg[u] += 1
        deg[v] += 1
    changed = True
    while changed:
        changed = False
        drop = np.flatnonzero(alive & ~in_ring & (deg <= 1))
        if drop.size:
            changed = True
            alive[drop] = False
            deg[:] = 0
            for u, v, _ in bonds:
                if alive[u] and alive[v]:
                    deg[u] += 1
                    deg[v] += 1
    gained = np.zeros(m.num_atoms, dtype=np.int64)
    for u, v, t in bonds:
        if alive[u] != alive[v]:
            gained[u if alive[u] else v] += BOND_ORDER[t] if t != AROMATIC_BOND else 1
    kept = node_mask(m, alive)
    hyd = kept.node_attrs["implicit_hydrogens"] + gained[alive]
    return kept.with_attr("node", "implicit_hydrogens", hyd)
