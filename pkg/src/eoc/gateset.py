"""Cipher gate sets: linear inflationary gates and super-nonlinear gates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gates import AffineGate3, Gate3, _gf2_apply, affine_from_lut

INFLATIONARY_COUNT = 144
SUPER_NONLINEAR_TARGET = 10752
PREDICATES = ("strict", "coordinatewise", "external-list")

# Orbit representatives of the inflationary matrices under relabelling the
# three bitlines; the representative is the lexicographically smallest
# column tuple of the orbit. The two 3-element orbits are the symmetric
# order-4 matrices (4 CNOTs), the two 6-element orbits the order-7 ones
# (3 CNOTs).
_TOPOLOGY_BY_REP = {(3, 7, 6): "A", (6, 5, 7): "B", (3, 5, 7): "C", (3, 6, 7): "D"}


@dataclass(frozen=True)
class GateSet:
    name: str
    members: tuple[tuple[int, ...], ...]
    predicate: str

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise ValidationError(f"gate set {self.name!r} has repeated members")
        for lut in self.members:
            if sorted(lut) != list(range(8)):
                raise ValidationError(f"gate set {self.name!r}: {lut} is not a permutation")

    def __len__(self) -> int:
        return len(self.members)


def _weight(v: int) -> int:
    return bin(v).count("1")


def is_inflationary(gate: Gate3 | AffineGate3 | tuple) -> bool:
    """Affine and every single-bit input flip changes at least two output bits."""
    lut = gate if isinstance(gate, tuple) else gate.lut
    aff = affine_from_lut(lut)
    if aff is None:
        return False
    return all(_weight(c) >= 2 for c in aff[0])


def _relabel(v: int, p: tuple[int, ...]) -> int:
    r = 0
    for i in range(3):
        if v >> i & 1:
            r |= 1 << p[i]
    return r


def conjugate_matrix(cols: tuple[int, int, int], p: tuple[int, ...]) -> tuple[int, int, int]:
    """Matrix of the same map after moving local line ``i`` to ``p[i]``."""
    out = [0, 0, 0]
    for j in range(3):
        out[p[j]] = _relabel(cols[j], p)
    return tuple(out)


@lru_cache(maxsize=None)
def inflationary_matrices() -> tuple[tuple[int, int, int], ...]:
    mats = []
    for cols in itertools.product(range(8), repeat=3):
        if any(_weight(c) < 2 for c in cols):
            continue
        if len({_gf2_apply(cols, x) for x in range(8)}) == 8:
            mats.append(cols)
    return tuple(mats)


@lru_cache(maxsize=None)
def enumerate_inflationary() -> GateSet:
    members = tuple(
        AffineGate3(cols, c).lut for cols in inflationary_matrices() for c in range(8)
    )
    if len(members) != INFLATIONARY_COUNT:
        raise AssertionError(f"inflationary enumeration gave {len(members)}, expected 144")
    return GateSet("inflationary", members, "affine, all columns of weight >= 2")


def classify_topology(gate: Gate3 | AffineGate3 | tuple) -> str:
    """CNOT-decomposition class A/B/C/D; ignores the shift and bitline labels."""
    lut = gate if isinstance(gate, tuple) else gate.lut
    if not is_inflationary(lut):
        raise ValidationError("classify_topology needs an inflationary gate")
    cols = affine_from_lut(lut)[0]
    rep = min(conjugate_matrix(cols, p) for p in itertools.permutations(range(3)))
    return _TOPOLOGY_BY_REP[rep]


def topology_histogram(gs: GateSet | None = None) -> dict[str, int]:
    gs = gs or enumerate_inflationary()
    hist = {k: 0 for k in "ABCD"}
    for lut in gs.members:
        hist[classify_topology(lut)] += 1
    return hist


# -- nonlinear gates ----------------------------------------------------------

@lru_cache(maxsize=None)
def _all_perms() -> np.ndarray:
    return np.array(list(itertools.permutations(range(8))), dtype=np.int64)


@lru_cache(maxsize=None)
def _affine_tables() -> frozenset[int]:
    """Truth tables (bit x = f(x)) of the 16 affine Boolean functions of 3 bits."""
    out = set()
    for a in range(8):
        for c in range(2):
            out.add(sum((bin(a & x).count("1") & 1 ^ c) << x for x in range(8)))
    return frozenset(out)


def _coordinate_tables(perms: np.ndarray) -> list[np.ndarray]:
    weights = (1 << np.arange(8, dtype=np.int64))
    return [(((perms >> k) & 1) * weights).sum(axis=1) for k in range(3)]


def _nonaffine_mask(tables: np.ndarray) -> np.ndarray:
    return ~np.isin(tables, np.fromiter(_affine_tables(), dtype=np.int64))


@lru_cache(maxsize=None)
def _scan(predicate: str) -> tuple[tuple[int, ...], ...]:
    perms = _all_perms()
    f = _coordinate_tables(perms)
    if predicate == "strict":
        combos = [c for c in range(1, 8)]
    else:
        combos = [1, 2, 4]
    keep = np.ones(len(perms), dtype=bool)
    for c in combos:
        t = np.zeros(len(perms), dtype=np.int64)
        for k in range(3):
            if c >> k & 1:
                t ^= f[k]
        keep &= _nonaffine_mask(t)
    return tuple(tuple(int(v) for v in row) for row in perms[keep])


def enumerate_super_nonlinear(predicate: str = "strict", path: str | Path | None = None) -> GateSet:
    """Filter S8 by a nonlinearity predicate, or load an explicit list.

    ``strict``: every nonzero XOR of output bits has algebraic degree >= 2.
    ``coordinatewise``: each output bit alone has degree >= 2.
    ``external-list``: read luts from ``path``.
    """
    if predicate == "external-list":
        if path is None:
            raise ValidationError("external-list predicate needs a file path")
        return load_gateset(path, name="super-nonlinear")
    if predicate not in ("strict", "coordinatewise"):
        raise ValidationError(f"unknown predicate {predicate!r}")
    return GateSet("super-nonlinear", _scan(predicate), predicate)


def predicate_report() -> dict[str, int]:
    return {p: len(_scan(p)) for p in ("strict", "coordinatewise")}


@lru_cache(maxsize=None)
def default_nonlinear() -> GateSet:
    gs = enumerate_super_nonlinear("strict")
    if len(gs) != SUPER_NONLINEAR_TARGET:
        raise ValidationError(
            f"strict predicate gives {len(gs)} gates, not {SUPER_NONLINEAR_TARGET}; supply an external list"
        )
    return gs


def degree(table: int) -> int:
    """Algebraic degree of a 3-input Boolean function given as an 8-bit truth table."""
    coeffs = [table >> x & 1 for x in range(8)]
    # Moebius transform
    for i in range(3):
        for x in range(8):
            if x >> i & 1:
                coeffs[x] ^= coeffs[x ^ (1 << i)]
    return max((_weight(x) for x in range(8) if coeffs[x]), default=-1)


# -- file IO ------------------------------------------------------------------

def format_gateset(gs: GateSet) -> str:
    return "".join(" ".join(str(v) for v in lut) + "\n" for lut in gs.members)


def parse_gateset(text: str, name: str = "external") -> GateSet:
    members = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            lut = tuple(int(v) for v in line.split())
        except ValueError:
            raise ValidationError(f"line {lineno}: non-integer entry") from None
        if len(lut) != 8 or sorted(lut) != list(range(8)):
            raise ValidationError(f"line {lineno}: not a permutation of 0..7")
        members.append(lut)
    if not members:
        raise ValidationError("gate set file is empty")
    return GateSet(name, tuple(members), "external-list")


def load_gateset(path: str | Path, name: str = "external") -> GateSet:
    return parse_gateset(Path(path).read_text(), name)
