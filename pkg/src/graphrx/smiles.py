"""SMILES tokenizer, parser and writer for the supported subset.

Supported: organic-subset atoms ``B C N O P S F Cl Br I`` and aromatic
``b c n o p s``; bracket atoms with isotope, symbol, H count and charge;
bonds ``- = # :``; branches; ring bonds ``1``-``9`` and ``%nn``; ``.``
fragments. Stereo marks (``/ \\ @ @@``) are read and dropped with a
:class:`StereoIgnoredWarning`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .chem import (
    AROMATIC, AROMATIC_BOND, ATOMIC_NUMBER, BOND_ORDER, DOUBLE, ORGANIC, SINGLE, SYMBOL, TRIPLE,
    implicit_hydrogens,
)
from .errors import (
    AromaticityError, SmilesError, SmilesLexicalError, UnclosedRingError, UnmatchedBranchError, ValenceError,
)


class StereoIgnoredWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SmilesToken:
    kind: str  # atom | bracket | bond | open | close | ring | dot
    pos: int
    text: str
    element: str | None = None
    aromatic: bool = False
    charge: int = 0
    hcount: int | None = None
    isotope: int = 0
    bond: str | None = None
    digit: int | None = None


_BOND_CHARS = {"-": "-", "=": "=", "#": "#", ":": ":", "/": "/", "\\": "\\"}


def _bracket(s: str, start: int) -> tuple[SmilesToken, int]:
    end = s.find("]", start)
    if end < 0:
        raise SmilesLexicalError("unterminated bracket atom '['", start)
    body = s[start + 1:end]
    i = 0
    j = i
    while j < len(body) and body[j].isdigit():
        j += 1
    isotope = int(body[i:j]) if j > i else 0
    i = j
    if i >= len(body):
        raise SmilesLexicalError("bracket atom without element symbol", start)
    aromatic = False
    if body[i].islower():
        sym = body[i]
        if sym not in AROMATIC:
            raise SmilesLexicalError(f"unsupported aromatic symbol {sym!r}", start + 1 + i)
        element = sym.upper()
        aromatic = True
        i += 1
    elif body[i].isupper():
        two = body[i:i + 2]
        if len(two) == 2 and two[1].islower() and two in ATOMIC_NUMBER:
            element = two
            i += 2
        elif body[i] in ATOMIC_NUMBER:
            element = body[i]
            i += 1
        else:
            raise SmilesLexicalError(f"unknown element in bracket atom {body!r}", start + 1 + i)
    else:
        raise SmilesLexicalError(f"unexpected character {body[i]!r} in bracket atom", start + 1 + i)
    if i < len(body) and body[i] == "@":
        i += 2 if body[i:i + 2] == "@@" else 1
        warnings.warn(f"chirality mark at position {start} discarded", StereoIgnoredWarning, stacklevel=4)
    hcount = 0
    if i < len(body) and body[i] == "H":
        i += 1
        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        hcount = int(body[i:j]) if j > i else 1
        i = j
    charge = 0
    if i < len(body) and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        j = i + 1
        if j < len(body) and body[j].isdigit():
            k = j
            while k < len(body) and body[k].isdigit():
                k += 1
            charge = sign * int(body[j:k])
            i = k
        else:
            while j < len(body) and body[j] == body[i]:
                j += 1
            charge = sign * (j - i)
            i = j
    if i != len(body):
        raise SmilesLexicalError(f"unexpected character {body[i]!r} in bracket atom", start + 1 + i)
    tok = SmilesToken("bracket", start, s[start:end + 1], element=element, aromatic=aromatic,
                      charge=charge, hcount=hcount, isotope=isotope)
    return tok, end + 1


def tokenize(s: str) -> list[SmilesToken]:
    tokens: list[SmilesToken] = []
    i = 0
    n = len(s)
    while i < n:
        c = s[i]
        if c == "[":
            tok, i = _bracket(s, i)
            tokens.append(tok)
            continue
        two = s[i:i + 2]
        if two in ("Cl", "Br"):
            tokens.append(SmilesToken("atom", i, two, element=two))
            i += 2
        elif c in ORGANIC:
            tokens.append(SmilesToken("atom", i, c, element=c))
            i += 1
        elif c in AROMATIC:
            tokens.append(SmilesToken("atom", i, c, element=c.upper(), aromatic=True))
            i += 1
        elif c in _BOND_CHARS:
            tokens.append(SmilesToken("bond", i, c, bond=c))
            i += 1
        elif c == "(":
            tokens.append(SmilesToken("open", i, c))
            i += 1
        elif c == ")":
            tokens.append(SmilesToken("close", i, c))
            i += 1
        elif c == ".":
            tokens.append(SmilesToken("dot", i, c))
            i += 1
        elif c in "123456789":
            tokens.append(SmilesToken("ring", i, c, digit=int(c)))
            i += 1
        elif c == "%":
            digits = s[i + 1:i + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise SmilesLexicalError("'%' must be followed by two digits", i)
            tokens.append(SmilesToken("ring", i, s[i:i + 3], digit=int(digits)))
            i += 3
        else:
            raise SmilesLexicalError(f"unexpected character {c!r}", i)
    return tokens


@dataclass
class ParsedAtom:
    atomic_number: int
    aromatic: bool
    charge: int = 0
    isotope: int = 0
    hcount: int | None = None  # None for organic-subset atoms (filled by the valence model)
    pos: int = 0


@dataclass
class ParsedSmiles:
    atoms: list[ParsedAtom] = field(default_factory=list)
    bonds: list[tuple[int, int, int]] = field(default_factory=list)
    hydrogens: list[int] = field(default_factory=list)


def _bond_type(symbol: str | None, a: ParsedAtom, b: ParsedAtom) -> int:
    if symbol is None:
        return AROMATIC_BOND if a.aromatic and b.aromatic else SINGLE
    return {"-": SINGLE, "/": SINGLE, "\\": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC_BOND}[symbol]


def parse(s: str) -> ParsedSmiles:
    """Parse into atoms (token order) and bonds, then assign hydrogens."""
    out = ParsedSmiles()
    prev: int | None = None
    pending: SmilesToken | None = None
    stack: list[int | None] = []
    rings: dict[int, tuple[int, str | None, int]] = {}
    seen_bonds: set[tuple[int, int]] = set()
    last_kind = None

    def add_bond(a: int, b: int, symbol: str | None, pos: int) -> None:
        key = (min(a, b), max(a, b))
        if a == b or key in seen_bonds:
            raise SmilesError("ring bond duplicates an existing bond or closes on itself", pos)
        seen_bonds.add(key)
        out.bonds.append((a, b, _bond_type(symbol, out.atoms[a], out.atoms[b])))

    for tok in tokenize(s):
        if tok.kind in ("atom", "bracket"):
            z = ATOMIC_NUMBER[tok.element]
            atom = ParsedAtom(z, tok.aromatic, tok.charge, tok.isotope,
                              tok.hcount if tok.kind == "bracket" else None, tok.pos)
            out.atoms.append(atom)
            idx = len(out.atoms) - 1
            if prev is not None:
                add_bond(prev, idx, pending.bond if pending else None, tok.pos)
            elif pending is not None:
                raise SmilesError("bond without a preceding atom", pending.pos)
            pending = None
            prev = idx
        elif tok.kind == "bond":
            if pending is not None:
                raise SmilesError("two consecutive bond symbols", tok.pos)
            if prev is None:
                raise SmilesError("bond without a preceding atom", tok.pos)
            if tok.bond in ("/", "\\"):
                warnings.warn(f"directional bond at position {tok.pos} discarded",
                              StereoIgnoredWarning, stacklevel=2)
            pending = tok
        elif tok.kind == "open":
            if prev is None:
                raise UnmatchedBranchError("branch opened without a preceding atom", tok.pos)
            if pending is not None:
                raise SmilesError("bond symbol before '('", tok.pos)
            stack.append(prev)
        elif tok.kind == "close":
            if not stack:
                raise UnmatchedBranchError("unmatched ')'", tok.pos)
            if pending is not None:
                raise SmilesError("bond symbol before ')'", tok.pos)
            if last_kind == "open":
                raise UnmatchedBranchError("empty branch '()'", tok.pos)
            prev = stack.pop()
        elif tok.kind == "ring":
            if prev is None:
                raise SmilesError("ring bond without a preceding atom", tok.pos)
            symbol = pending.bond if pending else None
            pending = None
            if tok.digit in rings:
                other, other_symbol, _ = rings.pop(tok.digit)
                if symbol and other_symbol and _bond_type(symbol, out.atoms[other], out.atoms[prev]) != \
                        _bond_type(other_symbol, out.atoms[other], out.atoms[prev]):
                    raise SmilesError(f"conflicting bond symbols on ring bond {tok.digit}", tok.pos)
                add_bond(other, prev, symbol or other_symbol, tok.pos)
            else:
                rings[tok.digit] = (prev, symbol, tok.pos)
        elif tok.kind == "dot":
            if pending is not None:
                raise SmilesError("bond symbol before '.'", tok.pos)
            prev = None
        last_kind = tok.kind
    if pending is not None:
        raise SmilesError("SMILES ends with a bond symbol", pending.pos)
    if stack:
        raise UnmatchedBranchError("unclosed branch '('", len(s))
    if rings:
        digit, (_, _, pos) = min(rings.items(), key=lambda kv: kv[1][2])
        raise UnclosedRingError(f"ring bond {digit} is never closed", pos)

    orders: list[list[int]] = [[] for _ in out.atoms]
    arom_count = [0] * len(out.atoms)
    for a, b, t in out.bonds:
        orders[a].append(BOND_ORDER[t])
        orders[b].append(BOND_ORDER[t])
        if t == AROMATIC_BOND:
            arom_count[a] += 1
            arom_count[b] += 1
    for i, atom in enumerate(out.atoms):
        if atom.aromatic and arom_count[i] < 2:
            raise AromaticityError(
                f"aromatic atom {SYMBOL[atom.atomic_number].lower()} is not in an aromatic ring", atom.pos)
        if atom.hcount is not None:
            out.hydrogens.append(atom.hcount)
            continue
        h = implicit_hydrogens(atom.atomic_number, atom.aromatic, orders[i])
        if h is None:
            raise ValenceError(
                f"{SYMBOL[atom.atomic_number]} has bond order sum {sum(orders[i])}, above any allowed valence",
                atom.pos)
        out.hydrogens.append(h)
    return out


# ---------------------------------------------------------------- writer

_AROMATIC_WRITABLE = {5, 6, 7, 8, 15, 16}
_ORGANIC_Z = {ATOMIC_NUMBER[s] for s in ORGANIC}


def _atom_text(z: int, aromatic: bool, charge: int, isotope: int, hydrogens: int, orders: list[int]) -> str:
    if charge == 0 and isotope == 0 and z in _ORGANIC_Z and (not aromatic or z in _AROMATIC_WRITABLE):
        if implicit_hydrogens(z, aromatic, orders) == hydrogens:
            sym = SYMBOL[z]
            return sym.lower() if aromatic else sym
    sym = SYMBOL[z].lower() if aromatic else SYMBOL[z]
    parts = ["[", str(isotope) if isotope else "", sym]
    if hydrogens:
        parts.append("H" if hydrogens == 1 else f"H{hydrogens}")
    if charge:
        sign = "+" if charge > 0 else "-"
        parts.append(sign if abs(charge) == 1 else f"{sign}{abs(charge)}")
    parts.append("]")
    return "".join(parts)


def _bond_text(t: int, a_arom: bool, b_arom: bool) -> str:
    both = a_arom and b_arom
    if t == SINGLE:
        return "-" if both else ""
    if t == DOUBLE:
        return "="
    if t == TRIPLE:
        return "#"
    return "" if both else ":"


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d:02d}"


def write(atoms: list[tuple[int, bool, int, int, int]], bonds: list[tuple[int, int, int]]) -> str:
    """SMILES for atoms ``(z, aromatic, charge, isotope, hydrogens)`` and
    undirected bonds ``(u, v, type)``.

    Each component is walked depth-first from its lowest-index atom, visiting
    neighbours in ascending index order. Not canonical.
    """
    n = len(atoms)
    adj: list[dict[int, int]] = [{} for _ in range(n)]
    for u, v, t in bonds:
        adj[u][v] = t
        adj[v][u] = t
    orders = [[BOND_ORDER[t] for t in adj[i].values()] for i in range(n)]
    arom = [a[1] for a in atoms]

    visited = [False] * n
    on_stack = [False] * n
    children: list[list[int]] = [[] for _ in range(n)]
    opens: list[list[int]] = [[] for _ in range(n)]   # ring bonds opened here, to later atoms
    closes: list[list[int]] = [[] for _ in range(n)]  # ring bonds closed here, to earlier atoms
    preorder: list[int] = []
    roots: list[int] = []

    def walk(v: int, parent: int) -> None:
        visited[v] = on_stack[v] = True
        preorder.append(v)
        for u in sorted(adj[v]):
            if u == parent:
                continue
            if not visited[u]:
                children[v].append(u)
                walk(u, v)
            elif on_stack[u]:
                opens[u].append(v)
                closes[v].append(u)
        on_stack[v] = False

    for v in range(n):
        if not visited[v]:
            roots.append(v)
            walk(v, -1)
    rank = {v: i for i, v in enumerate(preorder)}

    free = list(range(1, 100))
    label: dict[tuple[int, int], int] = {}
    out: list[str] = []

    def emit(v: int) -> None:
        z, aromatic, charge, isotope, hyd = atoms[v]
        out.append(_atom_text(z, aromatic, charge, isotope, hyd, orders[v]))
        for u in sorted(closes[v], key=rank.__getitem__):
            d = label.pop((u, v))
            out.append(_ring_label(d))
            free.append(d)
            free.sort()
        for w in sorted(opens[v], key=rank.__getitem__):
            d = free.pop(0)
            label[(v, w)] = d
            out.append(_bond_text(adj[v][w], arom[v], arom[w]) + _ring_label(d))
        kids = children[v]
        for i, c in enumerate(kids):
            last = i == len(kids) - 1
            if not last:
                out.append("(")
            out.append(_bond_text(adj[v][c], arom[v], arom[c]))
            emit(c)
            if not last:
                out.append(")")

    for i, r in enumerate(roots):
        if i:
            out.append(".")
        emit(r)
    return "".join(out)
