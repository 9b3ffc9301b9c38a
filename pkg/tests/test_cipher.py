import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eoc.cipher import (Ciphertext, JointRegister, RegisterLayout, decrypt, encrypt, format_key,
                        identity_key, keygen, layer_triplets, log3_exact, parse_key)
from eoc.errors import ValidationError
from eoc.gates import truth_table
from eoc.gateset import enumerate_inflationary, enumerate_super_nonlinear, is_inflationary


def trit(i, pos):
    return (i // 3 ** pos) % 3


def test_log3():
    assert [log3_exact(n) for n in (3, 9, 27, 81)] == [1, 2, 3, 4]
    for bad in (1, 2, 10, 18):
        with pytest.raises(ValidationError):
            log3_exact(bad)


def test_layout_padding_fraction():
    lay = RegisterLayout.from_counts(9, 2, 1)
    assert lay.ng == 6 and lay.k == 3
    assert lay.linear_depth == 4  # ceil(log2 9)
    with pytest.raises(ValidationError):
        RegisterLayout.from_counts(9, 3, 1)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_layer_triplets_tree_structure(q):
    n = 3 ** q
    for layer in range(1, 2 * q + 2):
        trips = layer_triplets(q, layer)
        assert sorted(b for t in trips for b in t) == list(range(n))
        pos = (layer - 1) % q
        for a, b, c in trips:
            # members differ in exactly one trit, at position pos
            for x, y in ((a, b), (a, c), (b, c)):
                diff = [p for p in range(q) if trit(x, p) != trit(y, p)]
                assert diff == [pos]


def test_full_mixing_after_q_layers():
    # after q consecutive layers every line is connected to every other
    q = 3
    n = 27
    reach = [{i} for i in range(n)]
    for layer in range(1, q + 1):
        for trip in layer_triplets(q, layer):
            merged = set().union(*(reach[b] for b in trip))
            for b in trip:
                reach[b] = set(merged)
    assert all(r == set(range(n)) for r in reach)


def test_key_gates_come_from_gate_sets(key9):
    inf = set(enumerate_inflationary().members)
    strict = set(enumerate_super_nonlinear("strict").members)
    for layer in key9.linear_layers:
        for g in layer:
            assert g.lut in inf and is_inflationary(g)
    for layer in key9.nonlinear_layers:
        for g in layer:
            assert g.lut in strict


def test_special_lines_in_distinct_first_triplets(layout9):
    for seed in range(20):
        key = keygen(layout9, seed=seed)
        first = key.linear_layers[0]
        for g in first:
            assert sum(1 for b in g.bitlines if b < layout9.k) <= 1


def test_round_trip_and_bijection_exhaustive(key9):
    t = truth_table(key9.circuit())
    assert sorted(t.tolist()) == list(range(512))
    lay = key9.layout
    for x in range(512):
        d, a, r = lay.split(x)
        ct = encrypt(key9, d, a, padding=r)
        assert ct.bits == t[x]
        assert decrypt(key9, ct) == (d, a, r)


def test_identity_key_is_identity(layout9):
    t = truth_table(identity_key(layout9).circuit())
    assert (t == np.arange(512)).all()


def test_keygen_is_reproducible(layout9):
    assert format_key(keygen(layout9, seed=7)) == format_key(keygen(layout9, seed=7))
    assert format_key(keygen(layout9, seed=7)) != format_key(keygen(layout9, seed=8))


@settings(max_examples=15)
@given(st.integers(0, 2 ** 256 - 1), st.booleans())
def test_key_file_round_trip(seed, stage):
    key = keygen(RegisterLayout.from_counts(9, 2, 1), seed=seed, stage_permutations=stage)
    back = parse_key(format_key(key))
    assert back == key
    assert format_key(back) == format_key(key)


def test_key_parse_errors(key9):
    with pytest.raises(ValidationError):
        parse_key("garbage\n")
    text = format_key(key9).replace("N 1", "Q 1", 1)
    with pytest.raises(ValidationError):
        parse_key(text)


def test_ciphertext_validation(key9):
    with pytest.raises(ValidationError):
        Ciphertext(1 << 9, 9)
    with pytest.raises(ValidationError):
        decrypt(key9, Ciphertext(0, 27))


def test_joint_register(key9, key9b):
    joint = JointRegister((key9, key9b))
    assert joint.n == 18 and joint.k == 6
    assert [joint.plaintext_line(i) for i in range(6)] == [0, 1, 2, 9, 10, 11]
    rng = np.random.default_rng(0)
    for _ in range(50):
        plain = int(rng.integers(64))
        pads = [int(rng.integers(64)), int(rng.integers(64))]
        state = joint.assemble(plain, pads)
        assert joint.split(state) == (plain, pads)
        ct = joint.circuit().apply(state)
        a = key9.apply(state & 511)
        b = key9b.apply(state >> 9)
        assert ct == a | b << 9
