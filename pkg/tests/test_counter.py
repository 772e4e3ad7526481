"""Counter-machine stage semantics and structural analyzers, anchored on the
worked examples and quantitative claims the stages were built to satisfy."""

import math

import numpy as np
import pytest

from calab import counter as C
from calab.engine import EngineError, evolve, step
from calab.rng import stream
from calab.symbolic import CyclicConfiguration


def pulse_text(config, lo, n):
    pulse = C.unpack_planes(config.segment(lo, lo + n - 1))[2]
    return "".join(str(v) for v in pulse)


def test_erosion_worked_example(machine):
    stages = {s.name: s for s in machine.stages()}
    pulse = C._pulse_alphabet.encode("01111110000" + "0" * 16)
    x = C.from_planes(np.zeros_like(pulse), np.zeros_like(pulse), pulse)
    expected = ["00001111000", "00000001100", "00000000000"]
    for want in expected:
        x = step(stages["erosion"], x)
        assert pulse_text(x, 0, 11) == want


def test_erosion_short_train_dies(machine):
    stages = {s.name: s for s in machine.stages()}
    pulse = np.zeros(16, np.int8)
    pulse[4:6] = 1  # length-2 train: no cell has three lit left neighbours
    x = C.from_planes(np.zeros(16, np.int8), np.zeros(16, np.int8), pulse)
    y = step(stages["erosion"], x)
    assert not C.unpack_planes(y.cells)[2].any()


def test_emission_example(machine):
    stages = {s.name: s for s in machine.stages()}
    tape = np.zeros(16, np.int8)
    tape[0] = C.EMIT_A
    x = C.from_planes(np.zeros(16, np.int8), tape, np.zeros(16, np.int8))
    y = step(stages["emission"], x)
    assert C.pulse_runs(C.unpack_planes(y.cells)[2]) == [(0, 2)]
    # no A anywhere: pulse unchanged
    tape2 = np.zeros(16, np.int8)
    tape2[3] = C.EMIT_B
    pulse2 = np.zeros(16, np.int8)
    pulse2[8] = 1
    x2 = C.from_planes(np.zeros(16, np.int8), tape2, pulse2)
    y2 = step(stages["emission"], x2)
    assert np.array_equal(C.unpack_planes(y2.cells)[2], pulse2)


def test_rotation_lone_carrier_moves_ten(machine):
    stages = {s.name: s for s in machine.stages()}
    tape = np.zeros(64, np.int8)
    tape[20] = C.CAR_R
    x = C.tape_config(tape)
    y = step(stages["rotation"], x)
    t2 = C.unpack_planes(y.cells)[1]
    assert t2[30] == C.CAR_R and np.count_nonzero(t2) == 1
    tape[20] = C.CAR_L
    y = step(stages["rotation"], C.tape_config(tape))
    t2 = C.unpack_planes(y.cells)[1]
    assert t2[10] == C.CAR_L and np.count_nonzero(t2) == 1


def test_rotation_reflection_and_stepping(machine):
    stages = {s.name: s for s in machine.stages()}
    # R adjacent to a D-state right emitter: emitter wraps to A, L lands 10 left
    tape = np.zeros(64, np.int8)
    tape[30] = C.EMIT_D
    tape[29] = C.CAR_R
    y = step(stages["rotation"], C.tape_config(tape))
    t2 = C.unpack_planes(y.cells)[1]
    assert t2[30] == C.EMIT_A
    assert t2[20] == C.CAR_L and np.count_nonzero(t2) == 2
    # L reaching a left emitter reflects without changing the emitter state
    tape = np.zeros(64, np.int8)
    tape[10] = C.EMIT_C
    tape[13] = C.CAR_L
    y = step(stages["rotation"], C.tape_config(tape))
    t2 = C.unpack_planes(y.cells)[1]
    assert t2[10] == C.EMIT_C
    assert t2[11] == C.CAR_R and np.count_nonzero(t2) == 2


def test_rotation_emitters_persist(machine):
    stages = {s.name: s for s in machine.stages()}
    rng = stream(3, "emitter-persist", 0)
    for _ in range(40):
        tape = rng.integers(0, 7, 128).astype(np.int8)
        x = C.tape_config(tape)
        t2 = C.unpack_planes(step(stages["rotation"], x).cells)[1]
        before = tape >= C.EMIT_A
        assert np.array_equal(before, t2 >= C.EMIT_A)


def test_isolation_examples(machine):
    stages = {s.name: s for s in machine.stages()}
    tape = np.zeros(512, np.int8)
    tape[10] = C.EMIT_C          # isolated: nearest emitter 200 away
    tape[210] = C.EMIT_A
    tape[310] = C.EMIT_B         # 100 apart: both dissolve
    y = step(stages["isolation"], C.tape_config(tape))
    t2 = C.unpack_planes(y.cells)[1]
    assert t2[10] == C.EMIT_C
    assert t2[210] == 0 and t2[310] == 0


def test_stage_identity_contracts(machine):
    """Each stage only writes its own plane(s), on random rows."""
    stages = {s.name: s for s in machine.stages()}
    touched = {
        "isolation": {C.TAPE},
        "freeze": {C.FLAG, C.TAPE},
        "erosion": {C.PULSE},
        "emission": {C.PULSE},
        "rotation": {C.TAPE},
    }
    rng = stream(4, "identity-contracts", 0)
    for _ in range(1000):
        codes = rng.integers(0, 28, 80).astype(np.int8)
        x = CyclicConfiguration(C.cell_alphabet(), codes)
        before = C.unpack_planes(codes)
        for name, stage in stages.items():
            after = C.unpack_planes(step(stage, x).cells)
            for plane in (C.FLAG, C.TAPE, C.PULSE):
                if plane not in touched[name]:
                    assert np.array_equal(before[plane], after[plane]), (name, plane)


def test_machine_radius_and_order(machine):
    assert machine.radius == 178
    assert [s.name for s in machine.stages()] == [
        "isolation", "freeze", "erosion", "emission", "rotation",
    ]
    assert machine.settled.radius == 26


def test_zero_is_fixed(machine):
    z = C.zero_config(400)
    assert step(machine, z) == z


def test_counter_cycle_regression(machine):
    rep = C.measure_counter_cycle(152, revolutions=4)
    assert rep.periods and set(rep.periods) == {31}
    assert rep.emitting_dwell == 31
    assert rep.max_train_length == 33
    assert C.expected_cycle_period(152) == 31


def test_emitter_state_cycle_order(machine):
    rep = C.measure_counter_cycle(160, revolutions=5)
    period = rep.increment_times[1] - rep.increment_times[0]
    sim_period = C.simulation_period(162, 6 * period, headroom=3 * period + 256)
    x = C.lone_counter(160, sim_period)
    states = []
    for y in evolve(machine, x, 5 * period + 2):
        states.append(C.unpack_planes(y.cells)[1][161])
    distinct = [s for s, prev in zip(states, [None] + states) if s != prev]
    # starting from B the emitter must walk B -> C -> D -> A -> B
    assert distinct[:5] == [C.EMIT_B, C.EMIT_C, C.EMIT_D, C.EMIT_A, C.EMIT_B]


def test_void_counter_death_exact(machine):
    assert C.void_counter_death(160) == 33


def test_reach_bound_values():
    assert C.reach_bound(152) == pytest.approx(50.1)
    assert C.reach_bound(2100) == pytest.approx(634.5)
    with pytest.raises(EngineError):
        C.reach_bound(0)


def test_parse_counters_and_kinds(machine):
    tape = np.zeros(700, np.int8)
    tape[0] = C.EMIT_B
    tape[161] = C.EMIT_A          # void gap of 160
    tape[460] = C.EMIT_C          # gap 298 with one carrier
    tape[300] = C.CAR_R
    x = C.tape_config(tape, 1400)
    descs = C.parse_counters(x)
    by_left = {d.left_pos: d for d in descs}
    assert by_left[0].kind == "void" and by_left[0].size == 160 and by_left[0].right_state == C.EMIT_A
    assert by_left[161].kind == "counter" and by_left[161].carrier == (C.CAR_R, 300)
    # wrap pair: 460 back around to 0
    assert by_left[460].kind == "void" and by_left[460].size == 1400 - 460 - 1


def test_parse_counters_empty_and_precounter(machine):
    assert C.parse_counters(C.zero_config(64)) == []
    tape = np.zeros(400, np.int8)
    tape[0] = C.EMIT_B
    tape[201] = C.EMIT_B
    tape[50] = C.CAR_R
    tape[90] = C.CAR_L
    descs = C.parse_counters(C.tape_config(tape))
    inner = [d for d in descs if d.left_pos == 0]
    assert inner and inner[0].kind == "precounter"


def test_min_gap_violations(machine):
    tape = np.zeros(400, np.int8)
    tape[0] = C.EMIT_A
    tape[100] = C.EMIT_A
    x = C.tape_config(tape)
    assert C.min_gap_violations(x)
    y = step(machine, x)
    assert not C.min_gap_violations(y)


def test_track_trains_kinematics(machine):
    # free train: advances 1 and loses 2 per step
    pulse = np.zeros(64, np.int8)
    pulse[10:20] = 1
    x = C.from_planes(np.zeros(64, np.int8), np.zeros(64, np.int8), pulse)
    rows = [C.unpack_planes(x.cells)[2]]
    for y in evolve(machine, x, 4):
        rows.append(C.unpack_planes(y.cells)[2])
    paths = C.track_trains(np.array(rows))
    assert len(paths) == 1
    steps = paths[0].steps
    for (t0, l0, r0), (t1, l1, r1) in zip(steps, steps[1:]):
        assert r1 == r0 + 1 and (r1 - l1) == (r0 - l0) - 2


def test_gap_analyzer_validation():
    with pytest.raises(EngineError):
        C.gap_analyzer([100, 100])
    with pytest.raises(EngineError):
        C.gap_analyzer([152, 304])


def test_soup_cylinder_probabilities(soup):
    from calab.measures import cylinder_probability
    from calab.symbolic import Cylinder
    alpha = C.cell_alphabet()
    tape = alpha.factors[C.TAPE]
    one_letter = Cylinder.component(alpha, C.TAPE, 0, tape.encode("A"))
    assert cylinder_probability(soup, one_letter) == pytest.approx(1 / 7)
    emitters = Cylinder(alpha, 0, ((None, None, None),))
    assert cylinder_probability(soup, emitters) == pytest.approx(1.0)
    nonzero_flag = Cylinder.component(alpha, C.FLAG, 3, [1])
    assert cylinder_probability(soup, nonzero_flag) == 0.0
    # emitter-letter probability 4/7 via summed component patterns
    p = sum(
        cylinder_probability(soup, Cylinder.component(alpha, C.TAPE, 0, [code]))
        for code in C.EMITTER_CODES
    )
    assert p == pytest.approx(4 / 7)
    # joint component constraint: tape A and flag 0 at position 0
    joint = Cylinder(alpha, 0, ((0, C.EMIT_A, None),))
    assert cylinder_probability(soup, joint) == pytest.approx(1 / 7)


def test_precounter_probability_product_form(soup):
    """Probability of an emitter / l passive letters / emitter pattern equals
    (4/7)^2 * (3/7)^l; closed form cross-checked by sampling."""
    from calab.measures import cylinder_probability
    from calab.rng import stream
    from calab.symbolic import Cylinder
    alpha = C.cell_alphabet()
    for l in (1, 2, 4):
        pats = [(None, "emitter", None)] + [(None, "passive", None)] * l + [(None, "emitter", None)]
        # expand letter classes into sums of exact-cylinder probabilities
        total = 0.0
        import itertools
        emit = list(C.EMITTER_CODES)
        passive = [C.BLANK, C.CAR_R, C.CAR_L]
        for combo in itertools.product(emit, *([passive] * l), emit):
            cyl = Cylinder(alpha, 0, tuple((None, c, None) for c in combo))
            total += cylinder_probability(soup, cyl)
        exact = (4 / 7) ** 2 * (3 / 7) ** l
        assert total == pytest.approx(exact, rel=1e-12)
        # sampling cross-check
        rng = stream(31, f"precounter-{l}", 0)
        rows = soup.sample_row(0, (l + 2) * 40_000 - 1, rng).reshape(40_000, l + 2)
        tape = C.cell_alphabet().component_codes(rows, C.TAPE)
        hits = (
            (tape[:, 0] >= C.EMIT_A)
            & (tape[:, -1] >= C.EMIT_A)
            & np.all(tape[:, 1:-1] < C.EMIT_A, axis=1)
        ).mean()
        se = math.sqrt(exact * (1 - exact) / 40_000)
        assert abs(hits - exact) <= 4 * se
