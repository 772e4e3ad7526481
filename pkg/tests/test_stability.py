import math

import numpy as np
import pytest

from calab import counter as C
from calab import measures as M
from calab import stability as S
from calab.engine import identity_automaton, shift_automaton
from calab.rng import stream
from calab.symbolic import CyclicConfiguration, WindowConfiguration


def test_column_trace_identity(alpha2):
    x = CyclicConfiguration.from_text(alpha2, "0110")
    tr = S.column_trace(identity_automaton(alpha2), x, 1, 6)
    assert tr.horizon == 6
    assert all(np.array_equal(tr.rows[i], tr.rows[0]) for i in range(6))


def test_column_trace_shift_slides(alpha2):
    x = CyclicConfiguration.from_text(alpha2, "0100110")
    tr = S.column_trace(shift_automaton(alpha2), x, 2, 5)
    for i in range(5):
        assert np.array_equal(tr.rows[i], x.segment(-2 + i, 2 + i))


def test_column_trace_zero_machine(machine):
    tr = S.column_trace(machine, C.zero_config(64), 3, 8)
    assert not tr.rows.any()


def test_column_trace_window_needs_room(machine):
    w = WindowConfiguration(machine.alphabet, np.zeros(100, np.int8), -50)
    from calab.engine import EngineError
    with pytest.raises(EngineError):
        S.column_trace(machine, w, 2, 5)


def test_trace_ball_identity_equals_cylinder(alpha2):
    mu = M.Bernoulli(alpha2, [0.3, 0.7])
    anchor = CyclicConfiguration.from_text(alpha2, "0")
    reps = S.trace_ball_estimates(identity_automaton(alpha2), mu, anchor, 1, [1, 4, 16],
                                  samples=2500, seed=1)
    exact = 0.3 ** 3
    for r in reps:
        assert abs(r.value - exact) <= 3 * max(r.stderr, 1 / 2500)
    assert reps[0].value == reps[1].value == reps[2].value


def test_trace_ball_shift_closed_form(alpha2):
    mu = M.uniform_measure(alpha2)
    anchor = CyclicConfiguration.from_text(alpha2, "0")
    horizons = [1, 2, 4, 8]
    reps = S.trace_ball_estimates(shift_automaton(alpha2), mu, anchor, 1, horizons,
                                  samples=4000, seed=2)
    for r in reps:
        exact = 2.0 ** -(2 + r.horizon)  # y must agree with the anchor on 2n+T cells
        tol = 3 * max(math.sqrt(exact * (1 - exact) / 4000), 1 / 4000)
        assert abs(r.value - exact) <= tol
    values = [r.value for r in reps]
    assert values == sorted(values, reverse=True)


def test_trace_ball_monotone_in_horizon_and_width(machine, soup):
    anchor = C.zero_config(1)
    by_T = S.trace_ball_estimates(machine, soup, anchor, 1, [4, 16, 64], samples=600, seed=3)
    assert by_T[0].value >= by_T[1].value >= by_T[2].value
    n1 = S.trace_ball_estimates(machine, soup, anchor, 1, [16], samples=600, seed=4)[0]
    n2 = S.trace_ball_estimates(machine, soup, anchor, 2, [16], samples=600, seed=4)[0]
    assert n2.value <= n1.value


def test_trace_ball_subset_of_time_zero_cylinder(machine, soup):
    # every trace-matching sample matches the time-0 cylinder: estimate at T=1
    # equals the empirical C_n frequency exactly on shared samples
    anchor = C.zero_config(1)
    rep = S.trace_ball_estimates(machine, soup, anchor, 1, [1], samples=800, seed=5)[0]
    lo, hi = rep.window
    hits = 0
    for s in range(800):
        rng = stream(5, "trace-ball", s)
        w = soup.sample_window(lo, hi, rng)
        hits += not w.segment(-1, 1).any()
    assert rep.value == pytest.approx(hits / 800)


def test_conditional_ratio_nondecreasing_identity(alpha2):
    """mu(C_k and B_m) / mu(C_k) is non-decreasing in k (identity: B_m = C_m)."""
    mu = M.Bernoulli(alpha2, [0.4, 0.6])
    ident = identity_automaton(alpha2)
    anchor = CyclicConfiguration.from_text(alpha2, "0")
    m = 3
    ball = S.column_trace(ident, anchor, m, 4).rows
    rng = stream(6, "condratio", 0)
    rows = mu.sample_row(0, 9 * 4000 - 1, rng).reshape(4000, 9)
    ratios = []
    for k in (0, 1, 2, 3):
        in_ck = np.all(rows[:, 4 - k: 5 + k] == 0, axis=1)
        in_ball = np.all(rows[:, 4 - m: 5 + m] == 0, axis=1)
        ratios.append(in_ball[in_ck].mean())
    assert all(a <= b + 1e-12 for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == 1.0


def test_classify_three_ways(machine, soup, alpha2):
    mu = M.uniform_measure(alpha2)
    anchors = [mu.sample_window(-40, 40, stream(7, "anchors", i)) for i in range(3)]
    v_id = S.classify(identity_automaton(alpha2), mu, anchors, 1, [2, 8, 32], 1200, seed=8)
    assert v_id.verdict == S.VERDICT_EQUICONTINUOUS
    v_sh = S.classify(shift_automaton(alpha2), mu, anchors, 1, [1, 2, 4, 8], 1200, seed=9)
    assert v_sh.verdict == S.VERDICT_EXPANSIVE
    assert all(e["profile"] == "decaying" for e in v_sh.evidence)
    # counter machine at the zero anchor: positive plateau
    v_cm = S.classify(machine, soup, [C.zero_config(1)], 1, [16, 64, 128], 4000, seed=10)
    assert v_cm.verdict == S.VERDICT_EQUICONTINUOUS


def test_blocking_word_identity(alpha2):
    rep = S.find_blocking_word(identity_automaton(alpha2), max_len=1, horizon=8)
    assert rep.found and rep.certificate == "exhaustive"
    assert rep.word.size == 1


def test_blocking_word_shift_absent(alpha2):
    rep = S.find_blocking_word(shift_automaton(alpha2), max_len=3, horizon=5)
    assert not rep.found
    assert rep.lengths_searched == [1, 2, 3]


def test_blocking_word_counter_sampled_absent(machine):
    rep = S.find_blocking_word(machine, max_len=2, horizon=2, fill_budget=2,
                               candidates_per_length=1, seed=11)
    assert not rep.found
    assert rep.fillings_tested > 0


def _evolved_sampler(machine, soup, horizon, seed):
    span = machine.radius + 178 + 26 * (horizon - 1) + 40

    def sample(idx):
        return M.evolved_window(machine, soup, 1, -span, span, seed, idx)
    return sample


def test_sensitivity_probe_controls(machine, soup, alpha2):
    mu = M.uniform_measure(alpha2)

    def ident_sampler(idx):
        return mu.sample_window(-64, 64, stream(12, "sens-id", idx))

    rep = S.sensitivity_probe(identity_automaton(alpha2), ident_sampler, m=4, horizon=16,
                              samples=12, seed=13)
    assert rep.fraction == 0.0

    def shift_sampler(idx):
        return mu.sample_window(-80, 80, stream(14, "sens-sh", idx))

    rep = S.sensitivity_probe(shift_automaton(alpha2), shift_sampler, m=4, horizon=32,
                              samples=12, seed=15)
    assert rep.fraction == 1.0
    assert all(w["time"] >= 1 for w in rep.witnesses)


def test_sensitivity_probe_counter_machine(machine, soup):
    rep = S.sensitivity_probe(machine, _evolved_sampler(machine, soup, 64, 16), m=8,
                              horizon=64, samples=10, seed=17)
    assert rep.fraction == 1.0
    assert all(abs(w["position"]) > machine.radius and w["time"] >= 1 for w in rep.witnesses)


def test_conditional_ratio_counter_machine(machine, soup):
    """On shared samples, the trace-ball fraction conditioned on deeper central
    agreement with the anchor is non-decreasing in the conditioning width."""
    anchor = C.zero_config(1)
    m, T = 1, 32
    rep = S.trace_ball_estimates(machine, soup, anchor, m, [T], samples=6000, seed=30)[0]
    lo, hi = rep.window
    ratios = []
    for k in (0, 1):
        in_ck = in_ball = 0
        for s in range(6000):
            rng = stream(30, "trace-ball", s)
            w = soup.sample_window(lo, hi, rng)
            if not w.segment(-k, k).any():
                in_ck += 1
                in_ball += S._trace_survival(machine, S.column_trace(machine, anchor, m, T).rows, w, m) >= T
        ratios.append(in_ball / in_ck)
    assert ratios[0] <= ratios[1] + 0.02
