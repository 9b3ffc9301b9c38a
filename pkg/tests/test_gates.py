import numpy as np
import pytest
from hypothesis import given, strategies as st

from eoc.errors import OracleLimitError, ValidationError
from eoc.gates import (CNOT, NOT, TOFFOLI, AffineGate3, Circuit, ControlledGate, Gate3,
                       affine_from_lut, apply_gate, apply_gate3, bits_to_int, compose_tables,
                       format_circuit, int_to_bits, inverse_table, invert_circuit, parse_circuit,
                       random_circuit, truth_table)


# independent oracle: states as lists of bits
def bitlist_apply(gate, bits):
    bits = list(bits)
    if isinstance(gate, ControlledGate):
        if all(bits[b] == int(p) for b, p in gate.controls):
            bits[gate.target] ^= 1
        return bits
    j = gate.bitlines
    x = bits[j[0]] + 2 * bits[j[1]] + 4 * bits[j[2]]
    y = gate.lut[x]
    for i, b in enumerate(j):
        bits[b] = (y >> i) & 1
    return bits


def to_list(x, n):
    return [(x >> i) & 1 for i in range(n)]


def from_list(bits):
    return sum(b << i for i, b in enumerate(bits))


gate_st = st.builds(
    lambda t, c, pols: ControlledGate(t, tuple((b, p) for b, p in zip(c, pols) if b != t)),
    st.integers(0, 7), st.lists(st.integers(0, 7), max_size=3, unique=True),
    st.lists(st.booleans(), min_size=3, max_size=3))
circuit_st = st.lists(gate_st, max_size=12).map(lambda gs: Circuit(8, tuple(gs)))


def test_bit_string_convention():
    assert bits_to_int("110") == 0b011
    assert int_to_bits(0b011, 3) == "110"
    with pytest.raises(ValidationError):
        bits_to_int("12")


def test_basic_gates_match_oracle():
    assert apply_gate(NOT(2), 0) == 4
    assert apply_gate(CNOT(0, 1), 0b01) == 0b11
    assert apply_gate(CNOT(0, 1, positive=False), 0b00) == 0b10
    assert apply_gate(TOFFOLI(0, 1, 2), 0b011) == 0b111
    assert apply_gate(TOFFOLI(0, 1, 2), 0b001) == 0b001


def test_gate_validation():
    with pytest.raises(ValidationError):
        ControlledGate(1, ((1, True),))
    with pytest.raises(ValidationError):
        ControlledGate(0, ((1, True), (1, False)))
    with pytest.raises(ValidationError):
        Gate3((2, 1, 0), tuple(range(8)))
    with pytest.raises(ValidationError):
        Gate3((0, 1, 2), (0,) * 8)
    with pytest.raises(ValidationError):
        AffineGate3((1, 1, 4))


def test_gate3_local_value_convention():
    g = Gate3((1, 4, 6), (1, 0, 2, 3, 4, 5, 6, 7))  # swaps local 0 and 1
    assert apply_gate3(g, 0) == 1 << 1
    assert apply_gate3(g, 1 << 1) == 0


@given(gate_st, st.integers(0, 255))
def test_apply_matches_bitlist_oracle(g, x):
    assert apply_gate(g, x) == from_list(bitlist_apply(g, to_list(x, 8)))


@given(circuit_st)
def test_vectorised_equals_scalar(c):
    xs = np.arange(256, dtype=np.uint64)
    fast = c.apply_many(xs)
    slow = [from_list(_run_oracle(c, to_list(int(x), 8))) for x in xs]
    assert fast.tolist() == slow


def _run_oracle(c, bits):
    for g in c.gates:
        bits = bitlist_apply(g, bits)
    return bits


@given(circuit_st)
def test_inverse_circuit_is_identity(c):
    t = truth_table(c + invert_circuit(c))
    assert (t == np.arange(256)).all()


@given(circuit_st)
def test_truth_table_is_permutation(c):
    t = truth_table(c)
    assert sorted(t.tolist()) == list(range(256))
    assert (compose_tables(t, inverse_table(t)) == np.arange(256)).all()


@given(circuit_st)
def test_circuit_text_round_trip(c):
    assert parse_circuit(format_circuit(c)) == c


def test_gate3_parse_round_trip():
    c = Circuit(5, (Gate3((0, 2, 4), (3, 1, 0, 2, 7, 6, 5, 4)), NOT(1)))
    assert parse_circuit(format_circuit(c)) == c


def test_parse_errors():
    with pytest.raises(ValidationError):
        parse_circuit("n 3\nCNOT c=0 t=1\n")
    with pytest.raises(ValidationError):
        parse_circuit("n 3\nFOO t=1\n")
    with pytest.raises(ValidationError):
        parse_circuit("n 3\nTOFFOLI c=+0 t=1\n")
    with pytest.raises(ValidationError):
        parse_circuit("n 2\nNOT t=5\n")


def test_oracle_limit():
    with pytest.raises(OracleLimitError):
        truth_table(Circuit(21, ()))


@given(st.permutations(range(8)))
def test_affine_detection(lut):
    lut = tuple(lut)
    found = affine_from_lut(lut)
    # brute-force check of affinity
    c = lut[0]
    affine = all(lut[x ^ y] ^ c == lut[x] ^ lut[y] for x in range(8) for y in range(8))
    assert (found is not None) == affine
    if found:
        assert AffineGate3(*found).lut == lut


def test_affine_inverse():
    g = AffineGate3((3, 6, 7), 5, (0, 3, 7))
    inv = g.inverse()
    for x in range(8):
        assert inv.apply_local(g.apply_local(x)) == x


def test_random_circuit_respects_width(rng):
    c = random_circuit(5, 40, rng)
    assert len(c) == 40
    assert all(g.max_bit() < 5 and len(g.controls) <= 2 for g in c.gates)
