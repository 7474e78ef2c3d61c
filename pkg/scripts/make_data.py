"""Regenerate the bundled SMILES corpus and the contains-nitrogen CSV.

Molecules are assembled from prefix/core/suffix fragments and kept only if
they parse and survive a write/parse round trip. Run from the repo root:

    python3 scripts/make_data.py
"""

from __future__ import annotations

import csv
import itertools
from pathlib import Path

import numpy as np

from graphrx.molecule import from_smiles, to_smiles

OUT = Path(__file__).resolve().parents[1] / "src" / "graphrx" / "data"

PREFIXES = ["", "C", "CC", "N", "O", "Cl", "F", "OC", "NC", "C(=O)", "CC(C)", "N#C", "[NH3+]C", "BrC"]
CORES = [
    "c1ccccc1", "C1CCCCC1", "c1ccncc1", "c1ccoc1", "c1ccsc1", "C1CCNCC1", "C1CCOC1",
    "c1ccc2ccccc2c1", "CC", "CCC", "C=C", "C1CC1", "c1cc[nH]c1", "C1CCC2CCCCC2C1", "c1ccc(cc1)",
]
SUFFIXES = ["", "C", "O", "N", "C(=O)O", "C(=O)N", "Cl", "[O-]", "S", "C#N", "OC", "P(=O)(O)O", "I"]
EXTRA = [
    "CCSCCSP(=S)(OC)OC", "CCOC(=O)N", "N(Nc1ccccc1)c2ccccc2", "NC(=O)c1cccnc1",
    "[Na+].[Cl-]", "[13CH4]", "C%10CCCCC%10", "[NH4+]", "OS(=O)(=O)O", "B(O)(O)O",
    "CC(C)(C)C", "C1CC2CCC1C2", "O=C=O", "c1ccc2c(c1)ccc1ccccc12", "[2H]C", "CC(=O)[O-].[K+]",
]
# above the 20-atom limit of the brute-force isomorphism check
LARGE = [
    "CCCCCCCCCCCCCCCCCCCCCCCC", "CC(C)CCCC(C)C1CCC2C1(CCC3C2CC=C4C3(CCC(C4)O)C)C",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)Oc1ccc(cc1)C(=O)OCCCCCC", "CCCCCCCCCCCCCCCCCC(=O)OCC",
    "O=C1CC2OCC=C3CN4CCC56C4CC3C2C6N1c1ccccc15", "OCC1OC(OC2(CO)OC(CO)C(O)C2O)C(O)C(O)C1O",
    "CCCCCCCCCCCCCCCC[N+](C)(C)C.[Br-]", "c1cc2ccc3ccc4ccc5ccc6ccc1c7c2c3c4c5c67",
    "Nc1ccc(cc1)S(=O)(=O)Nc1ccc(cc1)S(=O)(=O)Nc1ncccn1",
]


def candidates() -> list[str]:
    out = []
    for p, c, s in itertools.product(PREFIXES, CORES, SUFFIXES):
        out.append(p + c + s)
    return out


def usable(s: str) -> bool:
    try:
        m = from_smiles(s)
        back = from_smiles(to_smiles(m))
    except Exception:
        return False
    return m.num_atoms <= 24 and back.num_atoms == m.num_atoms


def main() -> None:
    rng = np.random.default_rng(20240601)
    pool = sorted({s for s in candidates() if usable(s)})
    rng.shuffle(pool)
    corpus = EXTRA + LARGE + [s for s in pool if s not in EXTRA][:240]
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "corpus.smi").write_text("\n".join(corpus) + "\n")

    def has_n(s: str) -> int:
        return int(7 in from_smiles(s).node_attrs["atomic_number"])

    rest = [s for s in pool if s not in corpus]
    pos = [s for s in rest if has_n(s)][:100]
    neg = [s for s in rest if not has_n(s)][:100]
    rows = pos + neg
    rng.shuffle(rows)
    with open(OUT / "contains_nitrogen.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["smiles", "contains_nitrogen"])
        for s in rows:
            w.writerow([s, has_n(s)])
    print(f"corpus {len(corpus)}, pool {len(pool)}, dataset {len(rows)} ({len(pos)} with N)")


if __name__ == "__main__":
    main()
