"""Reversible gates, circuits and their exact simulation.

Bit conventions used throughout the package:

* a register state is a Python ``int`` (or a numpy ``uint64`` array of
  them); bit ``i`` of the integer is bitline ``i``;
* bit strings such as ``"110"`` list bitline 0 first;
* a 3-bit gate reads its local value as ``x[j1] | x[j2] << 1 | x[j3] << 2``
  for its sorted bitlines ``j1 < j2 < j3``;
* circuit gate lists are in execution order: ``gates[0]`` touches the
  state first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import OracleLimitError, ValidationError

ORACLE_LIMIT = 20


def bits_to_int(bits: str) -> int:
    """``"110"`` -> 0b011 (bitline 0 is the first character)."""
    value = 0
    for i, ch in enumerate(bits):
        if ch not in "01":
            raise ValidationError(f"not a bit string: {bits!r}")
        if ch == "1":
            value |= 1 << i
    return value


def int_to_bits(value: int, width: int) -> str:
    return "".join("1" if value >> i & 1 else "0" for i in range(width))


@dataclass(frozen=True)
class ControlledGate:
    """Flip ``target`` when every control literal is true.

    ``controls`` holds ``(bit, positive)`` pairs, kept sorted by bit index;
    a negative control fires when its bit is 0.
    """

    target: int
    controls: tuple[tuple[int, bool], ...] = ()

    def __post_init__(self):
        ctrl = tuple(sorted((int(b), bool(p)) for b, p in self.controls))
        bits = [b for b, _ in ctrl]
        if len(set(bits)) != len(bits):
            raise ValidationError(f"repeated control bit in {ctrl}")
        if self.target in bits:
            raise ValidationError(f"target {self.target} is also a control")
        if self.target < 0 or any(b < 0 for b in bits):
            raise ValidationError("negative bit index")
        object.__setattr__(self, "controls", ctrl)

    @property
    def control_bits(self) -> frozenset[int]:
        return frozenset(b for b, _ in self.controls)

    @property
    def bits(self) -> frozenset[int]:
        return self.control_bits | {self.target}

    @property
    def kind(self) -> str:
        return {0: "NOT", 1: "CNOT", 2: "TOFFOLI"}.get(len(self.controls), "MCX")

    @property
    def masks(self) -> tuple[int, int]:
        pos = neg = 0
        for b, p in self.controls:
            if p:
                pos |= 1 << b
            else:
                neg |= 1 << b
        return pos, neg

    def inverse(self) -> "ControlledGate":
        return self

    def max_bit(self) -> int:
        return max(self.bits)

    def fires(self, state: int) -> bool:
        pos, neg = self.masks
        return (state & pos) == pos and (state & neg) == 0


def NOT(t: int) -> ControlledGate:
    return ControlledGate(t)


def CNOT(c: int, t: int, positive: bool = True) -> ControlledGate:
    return ControlledGate(t, ((c, positive),))


def TOFFOLI(c1: int, c2: int, t: int, p1: bool = True, p2: bool = True) -> ControlledGate:
    return ControlledGate(t, ((c1, p1), (c2, p2)))


@dataclass(frozen=True)
class Gate3:
    """A 3-bit permutation gate given by its lookup table."""

    bitlines: tuple[int, int, int]
    lut: tuple[int, ...]

    def __post_init__(self):
        bl = tuple(int(b) for b in self.bitlines)
        if len(bl) != 3 or not (bl[0] < bl[1] < bl[2]) or bl[0] < 0:
            raise ValidationError(f"Gate3 bitlines must be increasing: {bl}")
        lut = tuple(int(v) for v in self.lut)
        if sorted(lut) != list(range(8)):
            raise ValidationError(f"Gate3 lut is not a permutation of 0..7: {lut}")
        object.__setattr__(self, "bitlines", bl)
        object.__setattr__(self, "lut", lut)

    @property
    def bits(self) -> frozenset[int]:
        return frozenset(self.bitlines)

    def max_bit(self) -> int:
        return self.bitlines[2]

    def inverse(self) -> "Gate3":
        return Gate3(self.bitlines, invert_lut(self.lut))

    def output_table(self, k: int) -> tuple[int, ...]:
        """Truth table of local output coordinate ``k`` over the 8 local inputs."""
        return tuple(self.lut[x] >> k & 1 for x in range(8))


def invert_lut(lut: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * 8
    for x, y in enumerate(lut):
        inv[y] = x
    return tuple(inv)


def _gf2_apply(cols: Sequence[int], x: int) -> int:
    y = 0
    for j, c in enumerate(cols):
        if x >> j & 1:
            y ^= c
    return y


@dataclass(frozen=True)
class AffineGate3:
    """``y = M x xor c`` on three bitlines; ``matrix`` lists the columns of M.

    Column ``j`` is the local 3-bit image of the basis vector ``e_j``.
    """

    matrix: tuple[int, int, int]
    shift: int = 0
    bitlines: tuple[int, int, int] = (0, 1, 2)

    def __post_init__(self):
        cols = tuple(int(c) & 7 for c in self.matrix)
        if len(cols) != 3:
            raise ValidationError("matrix needs three columns")
        if len({_gf2_apply(cols, x) for x in range(8)}) != 8:
            raise ValidationError(f"matrix {cols} is singular over GF(2)")
        if not 0 <= self.shift < 8:
            raise ValidationError(f"shift out of range: {self.shift}")
        object.__setattr__(self, "matrix", cols)
        Gate3(self.bitlines, tuple(range(8)))  # validates bitlines

    def apply_local(self, x: int) -> int:
        return _gf2_apply(self.matrix, x) ^ self.shift

    @property
    def lut(self) -> tuple[int, ...]:
        return tuple(self.apply_local(x) for x in range(8))

    def to_gate3(self) -> Gate3:
        return Gate3(self.bitlines, self.lut)

    @property
    def bits(self) -> frozenset[int]:
        return frozenset(self.bitlines)

    def max_bit(self) -> int:
        return max(self.bitlines)

    def inverse_matrix(self) -> tuple[int, int, int]:
        inv = invert_lut(tuple(_gf2_apply(self.matrix, x) for x in range(8)))
        return (inv[1], inv[2], inv[4])

    def inverse(self) -> "AffineGate3":
        minv = self.inverse_matrix()
        return AffineGate3(minv, _gf2_apply(minv, self.shift), self.bitlines)

    def with_bitlines(self, bitlines: tuple[int, int, int]) -> "AffineGate3":
        return AffineGate3(self.matrix, self.shift, bitlines)


def affine_from_lut(lut: Sequence[int]) -> tuple[tuple[int, int, int], int] | None:
    """Return ``(columns, shift)`` if the lut is affine over GF(2), else None."""
    c = lut[0]
    cols = (lut[1] ^ c, lut[2] ^ c, lut[4] ^ c)
    for x in range(8):
        for y in range(8):
            if lut[x ^ y] ^ c != (lut[x] ^ c) ^ (lut[y] ^ c):
                return None
    if any(_gf2_apply(cols, x) ^ c != lut[x] for x in range(8)):
        return None
    return cols, c


Gate = Union[ControlledGate, Gate3, AffineGate3]


def _check_state(state: int, width: int | None, gate) -> None:
    if width is not None and gate.max_bit() >= width:
        raise ValidationError(f"gate touches bit {gate.max_bit()} outside width {width}")
    if state < 0:
        raise ValidationError("negative state")


def apply_gate(gate: ControlledGate, state: int, width: int | None = None) -> int:
    _check_state(state, width, gate)
    if gate.fires(state):
        return state ^ (1 << gate.target)
    return state


def _local_value(bitlines, state: int) -> int:
    j1, j2, j3 = bitlines
    return (state >> j1 & 1) | (state >> j2 & 1) << 1 | (state >> j3 & 1) << 2


def apply_gate3(gate: Gate3 | AffineGate3, state: int, width: int | None = None) -> int:
    _check_state(state, width, gate)
    j1, j2, j3 = gate.bitlines
    y = gate.lut[_local_value(gate.bitlines, state)]
    state &= ~((1 << j1) | (1 << j2) | (1 << j3))
    return state | (y & 1) << j1 | (y >> 1 & 1) << j2 | (y >> 2 & 1) << j3


def apply_any(gate: Gate, state: int) -> int:
    if isinstance(gate, ControlledGate):
        return apply_gate(gate, state)
    return apply_gate3(gate, state)


def apply_many(gate: Gate, states: np.ndarray) -> np.ndarray:
    """Vectorised gate application over a uint64 array of states."""
    if isinstance(gate, ControlledGate):
        pos, neg = gate.masks
        pos, neg = np.uint64(pos), np.uint64(neg)
        fire = ((states & pos) == pos) & ((states & neg) == 0)
        return states ^ (fire.astype(np.uint64) << np.uint64(gate.target))
    j = [np.uint64(b) for b in gate.bitlines]
    one = np.uint64(1)
    local = ((states >> j[0]) & one) | (((states >> j[1]) & one) << one) | (((states >> j[2]) & one) << np.uint64(2))
    lut = np.asarray(gate.lut, dtype=np.uint64)
    y = lut[local.astype(np.intp)]
    clear = ~np.uint64((1 << gate.bitlines[0]) | (1 << gate.bitlines[1]) | (1 << gate.bitlines[2]))
    out = states & clear
    out |= (y & one) << j[0]
    out |= ((y >> one) & one) << j[1]
    out |= ((y >> np.uint64(2)) & one) << j[2]
    return out


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple = ()
    registers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 1:
            raise ValidationError("circuit width must be positive")
        if self.registers not in (1, 2):
            raise ValidationError("registers must be 1 or 2")
        for g in self.gates:
            if g.max_bit() >= self.width:
                raise ValidationError(f"{g} exceeds circuit width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.width != self.width:
            raise ValidationError("cannot concatenate circuits of different width")
        return Circuit(self.width, self.gates + other.gates, self.registers)

    def with_gates(self, gates: Iterable) -> "Circuit":
        return Circuit(self.width, tuple(gates), self.registers)

    def apply(self, state: int) -> int:
        for g in self.gates:
            state = apply_any(g, state)
        return state

    def apply_many(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.uint64)
        for g in self.gates:
            states = apply_many(g, states)
        return states


def apply_circuit(circuit: Circuit, state: int) -> int:
    return circuit.apply(state)


def truth_table(circuit: Circuit, limit: int = ORACLE_LIMIT) -> np.ndarray:
    """Brute-force permutation table: ``table[x]`` is the circuit applied to x."""
    if circuit.width > limit:
        raise OracleLimitError(f"width {circuit.width} exceeds oracle limit {limit}")
    states = np.arange(1 << circuit.width, dtype=np.uint64)
    return circuit.apply_many(states).astype(np.int64)


def invert_circuit(circuit: Circuit) -> Circuit:
    return circuit.with_gates(g.inverse() for g in reversed(circuit.gates))


def compose_tables(first: np.ndarray, then: np.ndarray) -> np.ndarray:
    """Table of "apply ``first`` then ``then``"."""
    return then[first]


def inverse_table(table: np.ndarray) -> np.ndarray:
    inv = np.empty_like(table)
    inv[table] = np.arange(len(table), dtype=table.dtype)
    return inv


def random_controlled_gate(width: int, rng: np.random.Generator, max_controls: int = 2) -> ControlledGate:
    k = int(rng.integers(0, min(max_controls, width - 1) + 1))
    bits = rng.permutation(width)[: k + 1]
    controls = tuple((int(b), bool(rng.integers(2))) for b in bits[1:])
    return ControlledGate(int(bits[0]), controls)


def random_circuit(width: int, n_gates: int, rng: np.random.Generator, max_controls: int = 2) -> Circuit:
    return Circuit(width, tuple(random_controlled_gate(width, rng, max_controls) for _ in range(n_gates)))


# -- text format --------------------------------------------------------------

_KIND_BY_COUNT = {0: "NOT", 1: "CNOT", 2: "TOFFOLI"}


def format_gate(gate: Gate) -> str:
    if isinstance(gate, ControlledGate):
        name = _KIND_BY_COUNT.get(len(gate.controls), "MCX")
        parts = [name] + [f"c={'+' if p else '-'}{b}" for b, p in gate.controls] + [f"t={gate.target}"]
        return " ".join(parts)
    j = ",".join(str(b) for b in gate.bitlines)
    return f"G3 j={j} lut={''.join(str(v) for v in gate.lut)}"


def format_circuit(circuit: Circuit) -> str:
    lines = [f"n {circuit.width}"]
    if circuit.registers != 1:
        lines.append(f"registers {circuit.registers}")
    lines.extend(format_gate(g) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def _parse_fields(tokens: list[str], lineno: int) -> tuple[list[tuple[int, bool]], int | None, str | None, str | None]:
    controls, target, j, lut = [], None, None, None
    for tok in tokens:
        key, _, val = tok.partition("=")
        if not val:
            raise ValidationError(f"line {lineno}: expected key=value, got {tok!r}")
        try:
            if key == "c":
                if val[0] not in "+-":
                    raise ValidationError(f"line {lineno}: control needs a +/- polarity: {tok!r}")
                controls.append((int(val[1:]), val[0] == "+"))
            elif key == "t":
                target = int(val)
            elif key == "j":
                j = val
            elif key == "lut":
                lut = val
            else:
                raise ValidationError(f"line {lineno}: unknown field {key!r}")
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"line {lineno}: bad number in {tok!r}") from None
    return controls, target, j, lut


def parse_gate(line: str, lineno: int = 0) -> Gate:
    tokens = line.split()
    name, rest = tokens[0].upper(), tokens[1:]
    controls, target, j, lut = _parse_fields(rest, lineno)
    if name == "G3":
        if j is None or lut is None:
            raise ValidationError(f"line {lineno}: G3 needs j= and lut=")
        bl = tuple(int(b) for b in j.split(","))
        entries = [int(v) for v in (lut.split(",") if "," in lut else lut)]
        return Gate3(bl, tuple(entries))
    expected = {"NOT": 0, "CNOT": 1, "TOFFOLI": 2}
    if name not in expected and name != "MCX":
        raise ValidationError(f"line {lineno}: unknown gate {name!r}")
    if target is None:
        raise ValidationError(f"line {lineno}: missing t=")
    if name in expected and len(controls) != expected[name]:
        raise ValidationError(f"line {lineno}: {name} takes {expected[name]} controls")
    if name == "MCX" and len(controls) < 3:
        raise ValidationError(f"line {lineno}: MCX needs at least 3 controls")
    return ControlledGate(target, tuple(controls))


def parse_circuit(text: str) -> Circuit:
    width, registers, gates = None, 1, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        if head == "n":
            width = int(line.split()[1])
        elif head == "registers":
            registers = int(line.split()[1])
        else:
            gates.append(parse_gate(line, lineno))
    if width is None:
        raise ValidationError("circuit text is missing the 'n <width>' header")
    return Circuit(width, tuple(gates), registers)
