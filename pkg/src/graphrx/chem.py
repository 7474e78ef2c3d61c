"""Element table and the valence model shared by the parser, writer and
ion neutralization."""

from __future__ import annotations

_SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn Ga Ge As Se Br Kr "
    "Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm "
    "Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No "
    "Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()

SYMBOL = {z: s for z, s in enumerate(_SYMBOLS, start=1)}
ATOMIC_NUMBER = {s: z for z, s in SYMBOL.items()}

ORGANIC = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC = ("b", "c", "n", "o", "p", "s")

# neutral valences; atoms outside this table are never checked
VALENCES: dict[int, tuple[int, ...]] = {
    5: (3,), 6: (4,), 7: (3,), 8: (2,), 15: (3, 5), 16: (2, 4, 6),
    9: (1,), 17: (1,), 35: (1,), 53: (1,),
}

SINGLE, DOUBLE, TRIPLE, AROMATIC_BOND = 0, 1, 2, 3
BOND_NAMES = ("single", "double", "triple", "aromatic")
BOND_ORDER = {SINGLE: 1, DOUBLE: 2, TRIPLE: 3, AROMATIC_BOND: 1}


def allowed_valences(z: int, charge: int) -> tuple[int, ...]:
    """Valences permitted for element ``z`` carrying ``charge``.

    Boron gains a bond per negative charge, carbon loses one per unit of
    either sign, and the N/O/P/S/halogen block shifts with the charge
    (N+ behaves like C, O- like F).
    """
    base = VALENCES.get(z)
    if base is None:
        return ()
    if charge == 0:
        return base
    if z == 5:
        vals = tuple(v - charge for v in base)
    elif z == 6:
        vals = tuple(v - abs(charge) for v in base)
    else:
        vals = tuple(v + charge for v in base)
    return tuple(v for v in vals if v >= 0)


def bond_sum(orders: list[int], aromatic: bool, charge: int = 0, z: int | None = None) -> int:
    """Bond-order sum, counting aromatic bonds as 1 and adding the extra
    pi-bond contribution an aromatic atom can take.

    An aromatic atom gets +1 when its lowest allowed valence leaves room for
    it; this yields 3 for a ring carbon with two ring bonds and leaves furan
    oxygen or thiophene sulfur at 2.
    """
    total = sum(orders)
    if aromatic and z is not None:
        vals = allowed_valences(z, charge)
        if vals and min(vals) >= total + 1:
            total += 1
    return total


def implicit_hydrogens(z: int, aromatic: bool, orders: list[int]) -> int | None:
    """Implicit H count for an unbracketed atom, or None if no valence fits."""
    total = bond_sum(orders, aromatic, 0, z)
    for v in VALENCES[z]:
        if v >= total:
            return v - total
    return None


def valence_ok(z: int, charge: int, aromatic: bool, orders: list[int], hydrogens: int) -> bool:
    """True if the atom matches an allowed valence or has no valence model."""
    vals = allowed_valences(z, charge)
    if z not in VALENCES:
        return True
    plain = sum(orders) + hydrogens
    if plain in vals:
        return True
    return aromatic and plain + 1 in vals
