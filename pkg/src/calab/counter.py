"""The counter machine: a five-stage product automaton whose tape holds bouncing
carriers between emitters, plus its structural analyzers.

Cells are triples (flag, tape, pulse) packed into one code:

* flag plane {0,1}: a slow rightward flow seeded by emitters; when it touches
  the cell left of an emitter, the emitter is pinned to state B.
* tape plane {0,R,L,A,B,C,D}: emitters A..D and carriers R/L.  A carrier
  shuttles at speed 10 between the two emitters bounding its gap; each arrival
  from the left advances the right emitter one state (A->B->C->D->A).
* pulse plane {0,1}: runs of 1s ("trains") emitted while an emitter is in
  state A; a free train advances 1 cell and loses 2 cells per step.

Stage order per step: isolation, freeze, erosion, emission, rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .engine import BlockMapAutomaton, CompositeAutomaton, EngineError, evolve
from .measures import Atomic, Bernoulli, ProductMeasure
from .symbolic import Alphabet, CyclicConfiguration, WindowConfiguration

FLAG, TAPE, PULSE = 0, 1, 2

BLANK, CAR_R, CAR_L, EMIT_A, EMIT_B, EMIT_C, EMIT_D = range(7)
EMITTER_CODES = (EMIT_A, EMIT_B, EMIT_C, EMIT_D)
TAPE_LETTERS = "0RLABCD"

MIN_GAP = 152          # isolation kills emitter pairs closer than this
CARRIER_SPEED = 10
FLOW_SPEED = 5

_flag_alphabet = Alphabet.from_letters("01")
_tape_alphabet = Alphabet.from_letters(TAPE_LETTERS)
_pulse_alphabet = Alphabet.from_letters("01")
_cell_alphabet = Alphabet.product(_flag_alphabet, _tape_alphabet, _pulse_alphabet)


def cell_alphabet() -> Alphabet:
    """The 28-letter product alphabet (flag x tape x pulse)."""
    return _cell_alphabet


def tape_alphabet() -> Alphabet:
    return _tape_alphabet


def pack_planes(flag, tape, pulse) -> np.ndarray:
    flag = np.asarray(flag, np.int16)
    tape = np.asarray(tape, np.int16)
    pulse = np.asarray(pulse, np.int16)
    return (flag * 14 + tape * 2 + pulse).astype(np.int8)


def unpack_planes(codes):
    codes = np.asarray(codes, np.int16)
    return (
        (codes // 14).astype(np.int8),
        ((codes % 14) // 2).astype(np.int8),
        (codes % 2).astype(np.int8),
    )


def is_emitter(tape_code) -> bool:
    return tape_code >= EMIT_A


class _Stage(BlockMapAutomaton):
    version = "1"

    def __init__(self, radius):
        super().__init__(_cell_alphabet, radius)

    def local(self, window) -> int:
        f, t, p = unpack_planes(np.asarray(window, np.int8))
        return int(self._local_planes(f, t, p))

    def _local_planes(self, f, t, p) -> int:
        raise NotImplementedError


class IsolationStage(_Stage):
    """Tape: an emitter dissolves unless it is the only emitter within 152."""

    name = "isolation"

    def __init__(self):
        super().__init__(MIN_GAP)

    def _local_planes(self, f, t, p):
        r = self.radius
        c = t[r]
        if is_emitter(c) and any(is_emitter(t[j]) for j in range(2 * r + 1) if j != r):
            c = BLANK
        return pack_planes(f[r], c, p[r])

    def apply_padded(self, ext):
        f, t, p = unpack_planes(ext)
        t2 = kernels.isolation_row(t)
        r = self.radius
        n = t2.size
        return pack_planes(f[r: r + n], t2, p[r: r + n])


class FreezeStage(_Stage):
    """Flag flow (speed 5, wiped near carriers) and emitter pinning to B."""

    name = "freeze"

    def __init__(self):
        super().__init__(10)

    def _local_planes(self, f, t, p):
        r = self.radius
        c = t[r]
        t_out = EMIT_B if (f[r - 1] == 1 and is_emitter(c)) else c
        if is_emitter(t[r - 1]):
            f_out = 1
        elif is_emitter(c):
            f_out = 0
        else:
            dl = next((k for k in range(1, 11) if is_emitter(t[r - k])), 0)
            dr = next((k for k in range(1, 11) if is_emitter(t[r + k])), 0)
            a = dl - 1 if dl else 10
            b = dr - 1 if dr else 10
            clear = all(t[q] == BLANK for q in range(r - a, r + b + 1))
            trig = (0 < dl <= FLOW_SPEED) or any(f[r - l] == 1 for l in range(0, FLOW_SPEED + 1))
            f_out = 1 if (clear and trig) else 0
        return pack_planes(f_out, t_out, p[r])

    def apply_padded(self, ext):
        f, t, p = unpack_planes(ext)
        f2, t2 = kernels.freeze_rows(f, t)
        r = self.radius
        n = f2.size
        return pack_planes(f2, t2, p[r: r + n])


class ErosionStage(_Stage):
    """Pulse: a cell lights up iff the three cells to its left are lit."""

    name = "erosion"

    def __init__(self):
        super().__init__(3)

    def _local_planes(self, f, t, p):
        r = self.radius
        return pack_planes(f[r], t[r], p[r - 3] & p[r - 2] & p[r - 1])

    def apply_padded(self, ext):
        f, t, p = unpack_planes(ext)
        p2 = kernels.erosion_row(p)
        r = self.radius
        n = p2.size
        return pack_planes(f[r: r + n], t[r: r + n], p2)


class EmissionStage(_Stage):
    """Pulse: an A-state emitter lights its own cell and the two to its right."""

    name = "emission"

    def __init__(self):
        super().__init__(2)

    def _local_planes(self, f, t, p):
        r = self.radius
        lit = p[r] == 1 or any(t[r - j] == EMIT_A for j in range(3))
        return pack_planes(f[r], t[r], 1 if lit else 0)

    def apply_padded(self, ext):
        f, t, p = unpack_planes(ext)
        p2 = kernels.emission_row(t, p)
        r = self.radius
        n = p2.size
        return pack_planes(f[r: r + n], t[r: r + n], p2)


class RotationStage(_Stage):
    """Tape: carrier motion, reflection at emitters, emitter stepping."""

    name = "rotation"

    def __init__(self):
        super().__init__(11)

    def _local_planes(self, f, t, p):
        r = self.radius
        c = t[r]
        if is_emitter(c):
            out = c
            for k in range(1, 11):
                v = t[r - k]
                if v != BLANK:
                    if v == CAR_R:
                        out = EMIT_A + ((c - EMIT_A + 1) % 4)
                    break
            return pack_planes(f[r], out, p[r])
        out = BLANK
        carriers = sum(1 for q in range(r - 11, r + 12) if t[q] in (CAR_R, CAR_L))
        if carriers < 2:
            if t[r - 10] == CAR_R:
                ok = True
                for off in range(-9, 11):
                    if t[r + off] != BLANK:
                        ok = is_emitter(t[r + off]) and off >= 1
                        break
                if ok:
                    out = CAR_R
            if out == BLANK and t[r + 10] == CAR_L:
                ok = True
                for off in range(9, -11, -1):
                    if t[r + off] != BLANK:
                        ok = is_emitter(t[r + off]) and off <= -1
                        break
                if ok:
                    out = CAR_L
            if out == BLANK and is_emitter(t[r + 10]):
                strip = [t[q] for q in range(r, r + 10) if t[q] != BLANK]
                if strip == [CAR_R]:
                    out = CAR_L
            if out == BLANK and is_emitter(t[r - 1]):
                strip = [t[q] for q in range(r, r + 10) if t[q] != BLANK]
                if strip == [CAR_L]:
                    out = CAR_R
        return pack_planes(f[r], out, p[r])

    def apply_padded(self, ext):
        f, t, p = unpack_planes(ext)
        t2 = kernels.rotation_row(t)
        r = self.radius
        n = t2.size
        return pack_planes(f[r: r + n], t2, p[r: r + n])


class SettledStep(BlockMapAutomaton):
    """Freeze+erosion+emission+rotation as one fused radius-26 update.

    Exactly the counter machine without its isolation stage; valid whenever no
    two emitters sit within 152 of each other, which one full machine step
    enforces forever.
    """

    name = "counter-machine-settled"
    version = "1"

    def __init__(self, tail_stages):
        super().__init__(_cell_alphabet, sum(s.radius for s in tail_stages))
        self._composite = CompositeAutomaton(tail_stages, name=self.name, version=self.version)

    def local(self, window) -> int:
        return self._composite.local(window)

    def apply_padded(self, ext):
        f, t, p = unpack_planes(ext)
        f2, t2, p2 = kernels.settled_planes(f, t, p)
        return pack_planes(f2, t2, p2)


class CounterMachine(CompositeAutomaton):
    """The full five-stage machine, with a settled fast path.

    The isolation stage is the identity on any configuration with no two
    emitters within 152, and one application enforces that property forever
    (emitters are never created or moved afterwards).  ``step_plan`` therefore
    applies the full composite once and the fused settled step afterwards,
    which is exact and shrinks the light cone per step from 178 to 26.
    """

    def __init__(self):
        stages = [IsolationStage(), FreezeStage(), ErosionStage(), EmissionStage(), RotationStage()]
        super().__init__(stages, name="counter-machine", version="1")
        self.settled = SettledStep(stages[1:])

    def step_plan(self, steps: int):
        if steps <= 0:
            return []
        return [self] + [self.settled] * (steps - 1)


_machine = None


def counter_machine() -> CounterMachine:
    global _machine
    if _machine is None:
        _machine = CounterMachine()
    return _machine


def stage_registry() -> dict:
    m = counter_machine()
    return {s.name: s for s in m.stages()}


def tape_soup() -> ProductMeasure:
    """Zero flag and pulse planes, uniform i.i.d. tape letters."""
    zero_flag = Atomic(CyclicConfiguration(_flag_alphabet, [0]))
    zero_pulse = Atomic(CyclicConfiguration(_pulse_alphabet, [0]))
    uniform_tape = Bernoulli(_tape_alphabet, np.full(7, 1.0 / 7.0))
    return ProductMeasure(_cell_alphabet, [zero_flag, uniform_tape, zero_pulse], name="tape-soup")


# ---------------------------------------------------------------------------
# configuration builders


def zero_config(period: int) -> CyclicConfiguration:
    return CyclicConfiguration(_cell_alphabet, np.zeros(period, np.int8))


def from_planes(flag, tape, pulse) -> CyclicConfiguration:
    return CyclicConfiguration(_cell_alphabet, pack_planes(flag, tape, pulse))


def tape_config(tape, period: int | None = None) -> CyclicConfiguration:
    """Cyclic configuration with the given tape letters and zero flag/pulse."""
    tape = np.asarray(tape, np.int8)
    if period is not None and period > tape.size:
        tape = np.concatenate([tape, np.zeros(period - tape.size, np.int8)])
    return from_planes(np.zeros_like(tape), tape, np.zeros_like(tape))


def counter_tape(gap: int, left_state=EMIT_B, right_state=EMIT_B, carrier=CAR_R, carrier_offset: int = 1):
    """Tape for one counter: left emitter at 0, right emitter at gap+1."""
    t = np.zeros(gap + 2, np.int8)
    t[0] = left_state
    t[gap + 1] = right_state
    if carrier is not None:
        if not 1 <= carrier_offset <= gap:
            raise EngineError("carrier must sit strictly inside the gap")
        t[carrier_offset] = carrier
    return t


def lone_counter(gap: int, period: int, **kw) -> CyclicConfiguration:
    return tape_config(counter_tape(gap, **kw), period)


def void_counter(gap: int, period: int, left_state=EMIT_B, right_state=EMIT_A) -> CyclicConfiguration:
    return tape_config(counter_tape(gap, left_state, right_state, carrier=None), period)


def counter_chain_tape(gaps, void=(), states=None, carrier_offset: int = 1):
    """Emitter chain with the given gap sizes; gaps listed left to right.

    ``void`` holds indices of gaps that carry no carrier.  ``states`` gives
    the emitter states left to right (len(gaps) + 1 of them, default all B).
    """
    gaps = list(gaps)
    n_emit = len(gaps) + 1
    states = list(states) if states is not None else [EMIT_B] * n_emit
    if len(states) != n_emit:
        raise EngineError("need one emitter state per emitter")
    span = sum(g + 1 for g in gaps) + 1
    t = np.zeros(span, np.int8)
    pos = 0
    t[0] = states[0]
    for idx, g in enumerate(gaps):
        if idx not in void:
            t[pos + carrier_offset] = CAR_R
        pos += g + 1
        t[pos] = states[idx + 1]
    return t


def figure_chain_tape():
    """The five-counter demonstration chain (2100, 304, 152, 152, 152); the
    first 152 gap is void."""
    return counter_chain_tape([2100, 304, 152, 152, 152], void={2})


# ---------------------------------------------------------------------------
# structural analyzers


@dataclass
class CounterDescriptor:
    left_pos: int
    right_pos: int
    size: int
    kind: str                      # "counter" | "void" | "precounter"
    right_state: int
    carrier: tuple | None = None   # (letter code, position)

    def to_dict(self):
        return {
            "left": self.left_pos,
            "right": self.right_pos,
            "size": self.size,
            "kind": self.kind,
            "right_state": TAPE_LETTERS[self.right_state],
            "carrier": None if self.carrier is None else
            {"letter": TAPE_LETTERS[self.carrier[0]], "position": self.carrier[1]},
        }


def parse_counters(x) -> list[CounterDescriptor]:
    """Classify every maximal emitter-to-emitter gap, left to right.

    Cyclic configurations wrap (the last emitter pairs with the first); for
    windows only gaps fully inside the valid interval are reported.
    """
    if isinstance(x, CyclicConfiguration):
        tape = _cell_alphabet.component_codes(x.cells, TAPE)
        origin = 0
        wrap = x.period_length
    elif isinstance(x, WindowConfiguration):
        lo, hi = x.valid
        tape = _cell_alphabet.component_codes(x.segment(lo, hi), TAPE)
        origin = lo
        wrap = None
    else:
        tape = _cell_alphabet.component_codes(np.asarray(x, np.int8), TAPE)
        origin = 0
        wrap = None
    positions = np.nonzero(tape >= EMIT_A)[0]
    if positions.size < 2 and wrap is None:
        return []
    pairs = list(zip(positions[:-1], positions[1:]))
    if wrap is not None and positions.size >= 1:
        pairs.append((positions[-1], positions[0] + wrap))
    out = []
    for a, b in pairs:
        if b - a - 1 < 1:
            continue
        if wrap is not None:
            inner = tape[(np.arange(a + 1, b)) % wrap]
        else:
            inner = tape[a + 1: b]
        carriers = [(int(inner[q]), int(origin + a + 1 + q)) for q in np.nonzero(inner != BLANK)[0]]
        if len(carriers) == 0:
            kind, carrier = "void", None
        elif len(carriers) == 1 and carriers[0][0] in (CAR_R, CAR_L):
            kind, carrier = "counter", carriers[0]
        else:
            kind, carrier = "precounter", None
        out.append(CounterDescriptor(
            left_pos=int(origin + a),
            right_pos=int(origin + b),
            size=int(b - a - 1),
            kind=kind,
            right_state=int(tape[b % wrap] if wrap is not None else tape[b]),
            carrier=carrier,
        ))
    return out


def min_gap_violations(x) -> list[tuple[int, int]]:
    """Emitter pairs closer than MIN_GAP + 1 cells apart (there should be none
    after one machine step)."""
    if isinstance(x, CyclicConfiguration):
        tape = _cell_alphabet.component_codes(x.cells, TAPE)
        positions = np.nonzero(tape >= EMIT_A)[0]
        period = x.period_length
        bad = []
        for i in range(positions.size):
            j = (i + 1) % positions.size
            d = (positions[j] - positions[i]) % period
            if positions.size > 1 and d <= MIN_GAP:
                bad.append((int(positions[i]), int(positions[j])))
        return bad
    lo, hi = x.valid
    tape = _cell_alphabet.component_codes(x.segment(lo, hi), TAPE)
    positions = np.nonzero(tape >= EMIT_A)[0]
    return [
        (int(lo + a), int(lo + b))
        for a, b in zip(positions[:-1], positions[1:])
        if b - a <= MIN_GAP
    ]


def reach_bound(size: int) -> float:
    """How far (cells) a lone counter's trains can reach past its right emitter."""
    if size < 1:
        raise EngineError("counter size must be positive")
    return 0.3 * size + 4.5


@dataclass
class TrainPath:
    born: int
    steps: list = field(default_factory=list)  # (t, left, right) inclusive edges

    @property
    def max_length(self) -> int:
        return max(r - l + 1 for _, l, r in self.steps)

    @property
    def max_right(self) -> int:
        return max(r for _, l, r in self.steps)


def pulse_runs(pulse_row: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of 1s as (left, right) inclusive index pairs."""
    row = np.asarray(pulse_row, np.int8)
    if row.size == 0:
        return []
    edges = np.diff(np.concatenate([[0], row, [0]]))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0] - 1
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def track_trains(pulse_spacetime: np.ndarray) -> list[TrainPath]:
    """Link per-row pulse runs into trajectories by interval overlap.

    A free train [l, r] maps to [l+3, r+1]; an emitter-fed one keeps its left
    edge, so linking run X(t+1) to run Y(t) when X overlaps Y widened by 3
    covers both regimes.
    """
    paths: list[TrainPath] = []
    live: list[TrainPath] = []
    for t in range(pulse_spacetime.shape[0]):
        runs = pulse_runs(pulse_spacetime[t])
        next_live = []
        used = [False] * len(runs)
        for path in live:
            _, pl, pr = path.steps[-1]
            for k, (l, r) in enumerate(runs):
                if not used[k] and l <= pr + 3 and r >= pl:
                    path.steps.append((t, l, r))
                    used[k] = True
                    next_live.append(path)
                    break
        for k, (l, r) in enumerate(runs):
            if not used[k]:
                path = TrainPath(born=t, steps=[(t, l, r)])
                paths.append(path)
                next_live.append(path)
        live = next_live
    return paths


def render_text(x, lo: int, hi: int) -> str:
    """Three-line diagnostic view of a configuration slice (flag/tape/pulse),
    one character per component letter."""
    f, t, p = unpack_planes(x.segment(lo, hi))
    return "\n".join(
        "".join(alpha.letters[int(v)] for v in plane)
        for alpha, plane in ((_flag_alphabet, f), (_tape_alphabet, t), (_pulse_alphabet, p))
    )


def simulation_period(span: int, steps: int, headroom: int = 256) -> int:
    """Cyclic period so that nothing physical wraps into the structure.

    Pulse trains die within ~1.5x their length; the flag flow wraps but is
    inert when it reaches the chain's leftmost emitter (pinning it to B has no
    dynamical effect since leftmost emitters never step).  Headroom covers the
    train excursion right of the chain.
    """
    return span + max(headroom, steps // 2 + 64)


def run_planes(x: CyclicConfiguration, steps: int, machine=None):
    """Evolve and return per-plane space-time arrays of shape (steps+1, P)."""
    machine = machine or counter_machine()
    P = x.period_length
    flag = np.empty((steps + 1, P), np.int8)
    tape = np.empty((steps + 1, P), np.int8)
    pulse = np.empty((steps + 1, P), np.int8)
    flag[0], tape[0], pulse[0] = unpack_planes(x.cells)
    for t, y in enumerate(evolve(machine, x, steps), start=1):
        flag[t], tape[t], pulse[t] = unpack_planes(y.cells)
    return flag, tape, pulse


@dataclass
class CounterCycleReport:
    size: int
    increment_times: list
    periods: list
    emitting_dwell: int | None
    max_train_length: int | None
    max_train_reach: int | None
    right_emitter: int

    def to_dict(self):
        return {
            "size": self.size,
            "increment_times": self.increment_times,
            "periods": self.periods,
            "emitting_dwell": self.emitting_dwell,
            "max_train_length": self.max_train_length,
            "max_train_reach": self.max_train_reach,
        }


def expected_cycle_period(gap: int) -> int:
    """Steady-state carrier round-trip time for a gap of the given size."""
    return (gap - 1) // 10 + (gap - 10) // 10 + 2


def measure_counter_cycle(gap: int, revolutions: int = 6, machine=None) -> CounterCycleReport:
    """Simulate a lone counter and measure emitter stepping and train output.

    Starts in the canonical phase (carrier R adjacent to the left emitter,
    right emitter in state B) so the first revolution is already steady.
    """
    machine = machine or counter_machine()
    approx = expected_cycle_period(gap)
    steps = revolutions * (approx + 2) + 8
    period = simulation_period(gap + 2, steps, headroom=3 * approx + 256)
    x = lone_counter(gap, period)
    right = gap + 1
    flag, tape, pulse = run_planes(x, steps, machine)
    states = tape[:, right]
    changes = [int(t) for t in range(1, steps + 1) if states[t] != states[t - 1]]
    periods = [b - a for a, b in zip(changes[:-1], changes[1:])]
    dwell_a = None
    a_steps = np.nonzero(states == EMIT_A)[0]
    if a_steps.size:
        runs = pulse_runs((states == EMIT_A).astype(np.int8))
        dwell_a = max(r - l + 1 for l, r in runs if l > 0 and r < steps)
    paths = track_trains(pulse[:, right:])
    max_len = max((p.max_length for p in paths), default=None)
    max_reach = max((p.max_right for p in paths), default=None)
    return CounterCycleReport(
        size=gap,
        increment_times=changes,
        periods=periods,
        emitting_dwell=dwell_a,
        max_train_length=max_len,
        max_train_reach=max_reach,
        right_emitter=right,
    )


def void_counter_death(gap: int, machine=None) -> int:
    """Steps until a void counter's trailing A-emitter leaves state A."""
    machine = machine or counter_machine()
    budget = gap // FLOW_SPEED + 16
    period = simulation_period(gap + 2, budget)
    x = void_counter(gap, period)
    right = gap + 1
    for t, y in enumerate(evolve(machine, x, budget), start=1):
        tape = _cell_alphabet.component_codes(y.cells, TAPE)
        if tape[right] != EMIT_A:
            return t
    raise EngineError(f"void counter of gap {gap} still emitting after {budget} steps")


@dataclass
class GapWindow:
    start: int
    end: int
    zeros: int


@dataclass
class GapReport:
    sizes: list
    base_period: int
    observe_column: int
    windows: list
    transient: int

    @property
    def ok(self) -> bool:
        return all(w.zeros > 0 for w in self.windows)

    def to_dict(self):
        return {
            "sizes": self.sizes,
            "base_period": self.base_period,
            "observe_column": self.observe_column,
            "transient": self.transient,
            "windows": [{"start": w.start, "end": w.end, "zeros": w.zeros} for w in self.windows],
            "ok": self.ok,
        }


def gap_analyzer(sizes, repeats: int = 10, void=None, validate: bool = True, machine=None) -> GapReport:
    """Simulate a counter chain and look for pulse-free holes at the column just
    right of the chain.

    For every window (a + P, a + 4P] with anchors a stepping by P over
    ``repeats`` full emitter cycles (P = cycle of the largest counter), count
    the zeros in the observed pulse column; a chain that never silences the
    column would show a window with none.
    """
    sizes = [int(s) for s in sizes]
    if validate:
        if any(s < MIN_GAP for s in sizes):
            raise EngineError(f"chain sizes must be at least {MIN_GAP}")
        if any(a < b for a, b in zip(sizes[:-1], sizes[1:])):
            raise EngineError("chain sizes must be non-increasing left to right")
    machine = machine or counter_machine()
    P = expected_cycle_period(max(sizes))
    transient = P
    anchors = range(0, 4 * P * repeats, P)
    steps = transient + anchors[-1] + 4 * P + 1
    tape = counter_chain_tape(sizes, void=set(void) if void else set())
    span = tape.size
    period = simulation_period(span, steps, headroom=3 * P + 512)
    x = tape_config(tape, period)
    col = span  # first cell right of the last emitter
    column = np.empty(steps + 1, np.int8)
    _, _, p0 = unpack_planes(x.cells)
    column[0] = p0[col]
    for t, y in enumerate(evolve(machine, x, steps), start=1):
        column[t] = unpack_planes(y.cells)[2][col]
    windows = []
    for a in anchors:
        lo = transient + a + P + 1
        hi = transient + a + 4 * P
        zeros = int(np.sum(column[lo: hi + 1] == 0))
        windows.append(GapWindow(start=lo, end=hi, zeros=zeros))
    return GapReport(sizes=sizes, base_period=P, observe_column=col, windows=windows, transient=transient)
