import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calab.cli import plain_alphabet
from calab.symbolic import (
    Alphabet,
    CyclicConfiguration,
    Cylinder,
    SymbolicError,
    WindowConfiguration,
    cylinder_of,
    distance,
    shift,
)


def test_alphabet_basics():
    a = Alphabet.from_letters("abc")
    assert a.arity == 3
    assert a.index("b") == 1
    assert a.decode(a.encode("cab")) == "cab"
    with pytest.raises(SymbolicError):
        Alphabet.from_letters("aa")


def test_product_alphabet_pack_unpack_roundtrip():
    prod = Alphabet.product(Alphabet.from_letters("01"), Alphabet.from_letters("xyz"))
    assert prod.arity == 6
    for code in range(prod.arity):
        assert prod.pack(prod.unpack(code)) == code
    row = np.array([0, 5, 3, 2], np.int8)
    assert list(prod.component_codes(row, 0)) == [0, 1, 1, 0]
    assert list(prod.component_codes(row, 1)) == [0, 2, 0, 2]


def test_cyclic_rotation_aware_equality():
    a = plain_alphabet(2)
    x = CyclicConfiguration.from_text(a, "01", phase=0)
    y = CyclicConfiguration.from_text(a, "10", phase=1)
    assert x == y
    assert x != CyclicConfiguration.from_text(a, "10", phase=0)
    # non-minimal periods describing the same configuration compare equal
    assert CyclicConfiguration.from_text(a, "0101") == x
    assert CyclicConfiguration.from_text(a, "011011") == CyclicConfiguration.from_text(a, "011")


def test_shift_identity_and_cells():
    a = plain_alphabet(2)
    x = CyclicConfiguration.from_text(a, "01")
    assert shift(x, 0) == x
    assert x.cell(0) == 0
    assert shift(x, 1).cell(0) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 1000))
def test_shift_composition(period, a, b, cfg_seed):
    alpha = plain_alphabet(3)
    rng = np.random.default_rng(cfg_seed)
    x = CyclicConfiguration(alpha, rng.integers(0, 3, period).astype(np.int8))
    assert shift(shift(x, a), b) == shift(x, a + b)


def test_shift_is_bijection_on_fixed_period():
    alpha = plain_alphabet(2)
    configs = [
        CyclicConfiguration(alpha, np.array([(i >> j) & 1 for j in range(4)], np.int8))
        for i in range(16)
    ]
    shifted = {shift(x, 1).cells.tobytes() for x in configs}
    assert len(shifted) == 16


def test_window_validity_enforced():
    a = plain_alphabet(2)
    w = WindowConfiguration(a, np.zeros(11, np.int8), origin=-5)
    assert w.cell(-5) == 0
    with pytest.raises(SymbolicError):
        w.cell(6)
    with pytest.raises(SymbolicError):
        WindowConfiguration(a, np.zeros(3, np.int8), 0, valid=(0, 5))
    shifted = shift(w, 2)
    assert shifted.valid == (-7, 3)
    assert shifted.cell(-7) == 0


def test_distance_examples():
    a = plain_alphabet(2)
    base = np.zeros(21, np.int8)
    x = WindowConfiguration(a, base.copy(), -10)
    d0 = distance(x, WindowConfiguration(a, base.copy(), -10))
    assert float(d0.value) == 0 and d0.lower_bound
    cells = base.copy()
    cells[10 - 3] = 1   # differ at -3
    cells[10 + 5] = 1   # and at +5
    d = distance(x, WindowConfiguration(a, cells, -10))
    assert float(d.value) == 2 ** -3 and not d.lower_bound


def test_distance_incomparable_windows():
    a = plain_alphabet(2)
    x = WindowConfiguration(a, np.zeros(4, np.int8), 2)
    y = WindowConfiguration(a, np.zeros(4, np.int8), -5)
    with pytest.raises(SymbolicError):
        distance(x, y)


def test_distance_matches_block_agreement():
    # distance <= 2^-n iff the central 2n+1 blocks agree
    a = plain_alphabet(2)
    rng = np.random.default_rng(5)
    for _ in range(50):
        xs = rng.integers(0, 2, 17).astype(np.int8)
        ys = rng.integers(0, 2, 17).astype(np.int8)
        x = WindowConfiguration(a, xs, -8)
        y = WindowConfiguration(a, ys, -8)
        d = float(distance(x, y).value)
        # under the 2^-min|j| metric, agreement on [-n, n] is the strict ball
        for n in range(0, 8):
            agrees = bool(np.array_equal(xs[8 - n: 9 + n], ys[8 - n: 9 + n]))
            assert (d < 2 ** -n) == agrees
            if n >= 1:
                inner = bool(np.array_equal(xs[9 - n: 8 + n], ys[9 - n: 8 + n]))
                assert (d <= 2 ** -n) == inner


def test_cylinder_of_membership_and_nesting():
    a = plain_alphabet(2)
    rng = np.random.default_rng(6)
    for _ in range(30):
        x = CyclicConfiguration(a, rng.integers(0, 2, 9).astype(np.int8))
        y = CyclicConfiguration(a, rng.integers(0, 2, 9).astype(np.int8))
        for n in (0, 1, 2, 3):
            member = cylinder_of(x, n).contains(y)
            xs = WindowConfiguration(a, x.segment(-4, 4), -4)
            ys = WindowConfiguration(a, y.segment(-4, 4), -4)
            assert member == (float(distance(xs, ys).value) < 2 ** -n)
            if n and cylinder_of(x, n).contains(y):
                assert cylinder_of(x, n - 1).contains(y)


def test_cylinder_of_trivial():
    a = plain_alphabet(3)
    x = CyclicConfiguration.from_text(a, "1")
    c = cylinder_of(x, 0)
    assert c.position == 0 and c.patterns == (1,)
    assert c.contains(x)


def test_component_cylinder_describe_and_match():
    flag = Alphabet.from_letters("01")
    tape = Alphabet.from_letters("0RLABCD")
    prod = Alphabet.product(flag, tape)
    cyl = Cylinder.component(prod, 1, 0, tape.encode("A"))
    row = np.array([prod.pack((1, 3))], np.int8)
    assert cyl.matches_row(row, 0)
    row2 = np.array([prod.pack((1, 2))], np.int8)
    assert not cyl.matches_row(row2, 0)
    assert "A" in cyl.describe()


def test_rotation_class_key():
    a = plain_alphabet(2)
    x = CyclicConfiguration.from_text(a, "0011")
    assert x.rotation_class_key() == shift(x, 3).rotation_class_key()
    assert x.rotation_class_key() != CyclicConfiguration.from_text(a, "0101").rotation_class_key()


def test_word_type():
    from calab.symbolic import Word
    a = plain_alphabet(3)
    w = Word(a, a.encode("0210"))
    assert len(w) == 4 and w.text() == "0210"
    assert w == Word(a, np.array([0, 2, 1, 0], np.int8))
    assert hash(w) == hash(Word(a, a.encode("0210")))
    with pytest.raises(SymbolicError):
        Word(a, np.array([0, 9], np.int8))
