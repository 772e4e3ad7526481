import numpy as np
import pytest

from calab.engine import (
    BlockMapAutomaton,
    CompositeAutomaton,
    EngineError,
    check_locality,
    check_shift_commutation,
    compose,
    find_locality_witness,
    identity_automaton,
    iterate,
    permutation_automaton,
    shift_automaton,
    step,
    step_window,
)
from calab.rng import stream
from calab.symbolic import CyclicConfiguration, WindowConfiguration


def random_cyclic(alpha, period, seed):
    rng = stream(seed, "test-cyclic", 0)
    return CyclicConfiguration(alpha, rng.integers(0, alpha.arity, period).astype(np.int8))


def test_identity_step(alpha2):
    x = random_cyclic(alpha2, 17, 1)
    assert step(identity_automaton(alpha2), x) == x


def test_shift_step_matches_shift(alpha2):
    x = random_cyclic(alpha2, 23, 2)
    assert step(shift_automaton(alpha2), x) == x.shift(1)


def test_permutation_step(alpha3):
    sw = permutation_automaton(alpha3)
    x = CyclicConfiguration.from_text(alpha3, "0120")
    assert step(sw, x) == CyclicConfiguration.from_text(alpha3, "1021")
    assert step(sw, step(sw, x)) == x


def test_alphabet_mismatch(alpha2, alpha3):
    with pytest.raises(EngineError):
        step(identity_automaton(alpha2), random_cyclic(alpha3, 8, 3))


def test_step_preserves_period_and_small_periods(alpha2):
    sh = shift_automaton(alpha2)
    for period in (1, 2, 3, 5):
        x = random_cyclic(alpha2, period, period)
        assert step(sh, x).period_length == period


def test_step_window_shrinks(alpha2):
    w = WindowConfiguration(alpha2, np.zeros(21, np.int8), -10)
    out = step_window(identity_automaton(alpha2), w)
    assert out.valid == (-10, 10)
    f3 = CompositeAutomaton([shift_automaton(alpha2)] * 3, "sh3")
    out = step_window(f3, w)
    assert out.valid == (-7, 7)


def test_step_window_exhaustion(alpha2):
    w = WindowConfiguration(alpha2, np.zeros(3, np.int8), -1)
    sh = shift_automaton(alpha2)
    out = step_window(sh, w)
    assert out.valid == (0, 0)
    with pytest.raises(EngineError):
        step_window(sh, out)


def test_step_window_agrees_with_cyclic_oracle(machine):
    # embed a random window into a large cyclic configuration and compare
    rng = stream(7, "window-oracle", 0)
    for automaton in (machine, machine.settled):
        r = automaton.radius
        cells = rng.integers(0, 28, 2 * r + 41).astype(np.int8)
        period = cells.size + 97
        full = np.concatenate([cells, rng.integers(0, 28, 97).astype(np.int8)])
        x = CyclicConfiguration(machine.alphabet, full)
        w = WindowConfiguration(machine.alphabet, cells, -r - 20)
        stepped = step_window(automaton, w)
        ref = step(automaton, x.shift(r + 20))
        lo, hi = stepped.valid
        assert np.array_equal(stepped.segment(lo, hi), ref.segment(lo, hi))


def test_compose_behaves_and_associates(alpha2):
    ident = identity_automaton(alpha2)
    sh = shift_automaton(alpha2)
    sw = permutation_automaton(alpha2)
    x = random_cyclic(alpha2, 19, 9)
    assert step(compose(ident, sh), x) == step(sh, x)
    assert step(compose(sh, sw), x) == step(sh, step(sw, x))
    left = compose(compose(sh, sw), sh)
    right = compose(sh, compose(sw, sh))
    oracle = step(sh, step(sw, step(sh, x)))
    assert step(left, x) == oracle
    assert step(right, x) == oracle
    assert left.radius == 2


def test_sustained_emitter_yields_train(machine):
    # emission after erosion with a pinned A-emitter: after steps i = 0..n the
    # pulse train has length n+3
    from calab import counter as C
    stages = {s.name: s for s in machine.stages()}
    two = CompositeAutomaton([stages["erosion"], stages["emission"]], "erode-emit")
    tape = np.zeros(64, np.int8)
    tape[5] = C.EMIT_A
    x = C.from_planes(np.zeros(64, np.int8), tape, np.zeros(64, np.int8))
    for n in (0, 1, 5, 11):
        y = iterate(two, x, n + 1)
        pulse = C.unpack_planes(y.cells)[2]
        runs = C.pulse_runs(pulse)
        assert runs == [(5, 5 + n + 2)], f"n={n} runs={runs}"


def test_axiom_checks_pass_for_real_automata(alpha2):
    for a in (identity_automaton(alpha2), shift_automaton(alpha2)):
        assert check_shift_commutation(a, trials=25, period_lengths=(48,), seed=3).ok
        assert check_locality(a, trials=25, seed=3, period=48).ok


class BrokenAutomaton(BlockMapAutomaton):
    """Reads the absolute coordinate: not a block map, must fail the checks."""

    name = "broken"

    def __init__(self, alphabet):
        super().__init__(alphabet, 1)

    def apply_padded(self, ext):
        n = ext.size - 2
        out = ext[1: 1 + n].copy()
        out[::2] = 0  # depends on absolute parity, so it cannot commute with the shift
        return out


def test_broken_rule_reported(alpha2):
    rep = check_shift_commutation(BrokenAutomaton(alpha2), trials=10, period_lengths=(9,), seed=0)
    assert not rep.ok and rep.to_dict()["failure_count"] > 0


def test_locality_witness_exists_inside_radius(machine):
    stages = {s.name: s for s in machine.stages()}
    assert find_locality_witness(stages["erosion"], trials=50, seed=1) is not None


def test_partitioned_evaluation_matches_full_row(machine):
    # disjoint cell ranges evaluated separately agree with one full-row pass
    rng = stream(8, "partition", 0)
    r = machine.settled.radius
    ext = rng.integers(0, 28, 400 + 2 * r).astype(np.int8)
    full = machine.settled.apply_padded(ext)
    cut = 173
    left = machine.settled.apply_padded(ext[: cut + 2 * r])
    right = machine.settled.apply_padded(ext[cut:])
    assert np.array_equal(np.concatenate([left, right]), full)
