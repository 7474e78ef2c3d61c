"""Molecule CSV ingestion and DOT structure export."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .chem import AROMATIC_BOND, DOUBLE, SYMBOL, TRIPLE
from .errors import ConfigError, SmilesError
from .molecule import Molecule, from_smiles


class SkippedRowWarning(UserWarning):
    pass


@dataclass
class MoleculeTable:
    smiles: list[str]
    molecules: list[Molecule]
    labels: list[float]
    skipped: list[tuple[int, str]] = field(default_factory=list)  # (line, reason)


def read_molecule_csv(path: str | Path, label: str, task: str = "binary") -> MoleculeTable:
    """Rows with an unparsable SMILES or a missing label are skipped with a
    warning; a non-binary label in a binary task is an error."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    out = MoleculeTable([], [], [])
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ("smiles", label) if c not in header]
        if missing:
            raise ConfigError(f"{path}: header lacks column(s) {', '.join(missing)}; found {', '.join(header)}")
        for line, row in enumerate(reader, start=2):
            raw = (row.get(label) or "").strip()
            if not raw:
                out.skipped.append((line, "missing label"))
                continue
            try:
                value = float(raw)
            except ValueError:
                raise ConfigError(f"{path}:{line}: label {raw!r} is not a number") from None
            if task == "binary" and value not in (0.0, 1.0):
                raise ConfigError(f"{path}:{line}: binary label must be 0 or 1, got {raw!r}")
            smi = (row.get("smiles") or "").strip()
            try:
                mol = from_smiles(smi)
            except SmilesError as exc:
                out.skipped.append((line, str(exc)))
                continue
            out.smiles.append(smi)
            out.molecules.append(mol)
            out.labels.append(value)
    for line, reason in out.skipped:
        warnings.warn(f"{path}:{line}: skipped ({reason})", SkippedRowWarning, stacklevel=2)
    return out


def atom_label(z: int, charge: int) -> str:
    sym = SYMBOL.get(int(z), "*")
    if charge == 0:
        return sym
    sign = "+" if charge > 0 else "-"
    return sym + (sign if abs(charge) == 1 else f"{sign}{abs(charge)}")


_BOND_STYLE = {
    DOUBLE: ' [label="="]',
    TRIPLE: ' [label="#"]',
    AROMATIC_BOND: " [style=dashed]",
}


def to_dot(m: Molecule, name: str = "mol") -> str:
    """Undirected DOT graph: one node per atom, one edge per bond."""
    lines = [f'graph "{name}" {{']
    a = m.node_attrs
    for i in range(m.num_atoms):
        label = atom_label(a["atomic_number"][i], int(a["formal_charge"][i]))
        lines.append(f'  a{i} [label="{label}"];')
    for u, v, bt in m.bonds():
        lines.append(f"  a{u} -- a{v}{_BOND_STYLE.get(bt, '')};")
    lines.append("}")
    return "\n".join(lines) + "\n"
