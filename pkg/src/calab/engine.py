"""Radius-r block maps: exact application to cyclic and windowed configurations,
composition, and the CA axiom checks (shift commutation, locality)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import stream
from .symbolic import Alphabet, CyclicConfiguration, WindowConfiguration

TABLE_LIMIT = 2 ** 24


class EngineError(ValueError):
    pass


class BlockMapAutomaton:
    """A local rule of radius r over a fixed alphabet.

    ``local`` is the reference semantics (one window in, one letter out);
    ``apply_padded`` maps a whole extended row and must agree with ``local``
    cell by cell.  Subclasses override ``apply_padded`` with fast kernels.
    """

    name = "automaton"
    version = "1"

    def __init__(self, alphabet: Alphabet, radius: int):
        self.alphabet = alphabet
        self.radius = int(radius)

    @property
    def provenance(self) -> str:
        return f"{self.name}/{self.version}"

    def local(self, window: np.ndarray) -> int:
        raise NotImplementedError

    def apply_padded(self, ext: np.ndarray) -> np.ndarray:
        r = self.radius
        n = ext.size - 2 * r
        out = np.empty(n, np.int8)
        w = 2 * r + 1
        for i in range(n):
            out[i] = self.local(ext[i: i + w])
        return out

    def step_plan(self, steps: int) -> list["BlockMapAutomaton"]:
        """Automaton to apply at each time step; hook for settled fast paths."""
        return [self] * steps

    def stages(self) -> list["BlockMapAutomaton"]:
        return [self]


class TableAutomaton(BlockMapAutomaton):
    """Rule realized as a lookup table over the full neighborhood space."""

    def __init__(self, alphabet: Alphabet, radius: int, rule, name: str, version: str = "1"):
        super().__init__(alphabet, radius)
        self.name = name
        self.version = version
        space = alphabet.arity ** (2 * radius + 1)
        if space > TABLE_LIMIT:
            raise EngineError(f"neighborhood space {space} too large for a table")
        if callable(rule):
            table = np.empty(space, np.int8)
            width = 2 * radius + 1
            for code in range(space):
                window = np.array(
                    [(code // alphabet.arity ** (width - 1 - j)) % alphabet.arity for j in range(width)],
                    dtype=np.int8,
                )
                table[code] = rule(window)
        else:
            table = np.asarray(rule, dtype=np.int8)
            if table.size != space:
                raise EngineError("table size does not match neighborhood space")
        self.table = table

    def local(self, window) -> int:
        code = 0
        for v in window:
            code = code * self.alphabet.arity + int(v)
        return int(self.table[code])

    def apply_padded(self, ext: np.ndarray) -> np.ndarray:
        return kernels.table_row(np.ascontiguousarray(ext, np.int8), self.radius, self.alphabet.arity, self.table)


def identity_automaton(alphabet: Alphabet) -> TableAutomaton:
    return TableAutomaton(alphabet, 0, lambda w: int(w[0]), name="identity")


def shift_automaton(alphabet: Alphabet) -> TableAutomaton:
    """The shift itself as a radius-1 block map (f = right neighbor)."""
    return TableAutomaton(alphabet, 1, lambda w: int(w[2]), name="pure-shift")


def permutation_automaton(alphabet: Alphabet, mapping: dict[int, int] | None = None) -> TableAutomaton:
    """Radius-0 letter permutation; default swaps the first two letters."""
    if mapping is None:
        mapping = {0: 1, 1: 0}
    perm = {c: mapping.get(c, c) for c in range(alphabet.arity)}
    return TableAutomaton(alphabet, 0, lambda w: perm[int(w[0])], name="letter-swap")


class CompositeAutomaton(BlockMapAutomaton):
    """Stages applied in list order; effective radius is the sum of stage radii."""

    def __init__(self, stages, name: str, version: str = "1"):
        if not stages:
            raise EngineError("composite needs at least one stage")
        alphabet = stages[0].alphabet
        for s in stages:
            if s.alphabet.letters != alphabet.letters:
                raise EngineError("composite stages must share an alphabet")
        super().__init__(alphabet, sum(s.radius for s in stages))
        self._stages = list(stages)
        self.name = name
        self.version = version

    def stages(self):
        return list(self._stages)

    def local(self, window) -> int:
        row = np.asarray(window, np.int8)
        for s in self._stages:
            row = s.apply_padded(row)
        assert row.size == 1
        return int(row[0])

    def apply_padded(self, ext: np.ndarray) -> np.ndarray:
        row = np.ascontiguousarray(ext, np.int8)
        for s in self._stages:
            row = s.apply_padded(row)
        return row


def compose(outer: BlockMapAutomaton, inner: BlockMapAutomaton, name: str | None = None) -> CompositeAutomaton:
    """step(compose(F, G), x) == step(F, step(G, x)); the inner map runs first."""
    stages = inner.stages() + outer.stages()
    return CompositeAutomaton(stages, name or f"{outer.name}*{inner.name}")


def _check_alphabet(automaton: BlockMapAutomaton, x):
    if automaton.alphabet.letters != x.alphabet.letters:
        raise EngineError("alphabet mismatch between automaton and configuration")


def _cyclic_extended(cells: np.ndarray, r: int) -> np.ndarray:
    p = cells.size
    if r == 0:
        return cells.copy()
    reps = -(-r // p)  # ceil
    left = np.tile(cells, reps)[-r:] if r else cells[:0]
    right = np.tile(cells, reps)[:r]
    return np.concatenate([left, cells, right])


def step(automaton: BlockMapAutomaton, x: CyclicConfiguration) -> CyclicConfiguration:
    """One exact synchronous update of a spatially periodic configuration."""
    _check_alphabet(automaton, x)
    ext = _cyclic_extended(x.cells, automaton.radius)
    return CyclicConfiguration(x.alphabet, automaton.apply_padded(ext))


def step_window(automaton: BlockMapAutomaton, x: WindowConfiguration) -> WindowConfiguration:
    """One update of a finite window; validity shrinks by the radius per side."""
    _check_alphabet(automaton, x)
    lo, hi = x.valid
    r = automaton.radius
    if hi - lo + 1 < 2 * r + 1:
        raise EngineError("window exhausted: valid interval narrower than neighborhood")
    out = automaton.apply_padded(x.segment(lo, hi))
    return WindowConfiguration(x.alphabet, out, lo + r)


def evolve(automaton: BlockMapAutomaton, x, steps: int):
    """Iterate ``steps`` times (plan-aware), yielding the state after each step."""
    plan = automaton.step_plan(steps)
    for stage in plan:
        x = step(stage, x) if isinstance(x, CyclicConfiguration) else step_window(stage, x)
        yield x


def iterate(automaton: BlockMapAutomaton, x, steps: int):
    """State after ``steps`` applications."""
    for x in evolve(automaton, x, steps):
        pass
    return x


@dataclass
class AxiomReport:
    check: str
    automaton: str
    trials: int
    failures: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "automaton": self.automaton,
            "trials": self.trials,
            "failures": self.failures[:32],
            "failure_count": len(self.failures),
            "ok": self.ok,
            "params": self.params,
        }


def _random_cyclic(alphabet: Alphabet, period: int, rng) -> CyclicConfiguration:
    return CyclicConfiguration(alphabet, rng.integers(0, alphabet.arity, period).astype(np.int8))


def check_shift_commutation(
    automaton: BlockMapAutomaton,
    trials: int = 1000,
    period_lengths=(512,),
    seed: int = 0,
    shifts=(-2, -1, 1, 2),
) -> AxiomReport:
    """step(F, shift(x, k)) must equal shift(step(F, x), k) on sampled cyclic points."""
    report = AxiomReport(
        "shift-commutation", automaton.provenance, trials,
        params={"period_lengths": list(period_lengths), "seed": seed, "shifts": list(shifts)},
    )
    for i in range(trials):
        rng = stream(seed, f"shift-commutation/{automaton.name}", i)
        period = int(period_lengths[i % len(period_lengths)])
        x = _random_cyclic(automaton.alphabet, period, rng)
        fx = step(automaton, x)
        for k in shifts:
            lhs = step(automaton, x.shift(k))
            rhs = fx.shift(k)
            if lhs != rhs:
                bad = int(np.nonzero(lhs.cells != rhs.cells)[0][0])
                report.failures.append({"trial": i, "period": period, "k": int(k), "cell": bad})
    return report


def check_locality(
    automaton: BlockMapAutomaton,
    trials: int = 1000,
    seed: int = 0,
    period: int | None = None,
) -> AxiomReport:
    """Perturbations outside the declared radius must not change cell 0."""
    r = automaton.radius
    period = int(period) if period else max(512, 2 * r + 2)
    if period < 2 * r + 2:
        raise EngineError("period too small to place a perturbation outside the radius")
    report = AxiomReport(
        "locality", automaton.provenance, trials,
        params={"period": period, "seed": seed, "radius": r},
    )
    for i in range(trials):
        rng = stream(seed, f"locality/{automaton.name}", i)
        x = _random_cyclic(automaton.alphabet, period, rng)
        pos = int(rng.integers(r + 1, period - r))
        old = x.cell(pos)
        new = int(rng.integers(0, automaton.alphabet.arity - 1))
        if new >= old:
            new += 1
        cells = x.cells.copy()
        cells[pos] = new
        y = CyclicConfiguration(automaton.alphabet, cells)
        if step(automaton, x).cell(0) != step(automaton, y).cell(0):
            report.failures.append({"trial": i, "perturbed": pos})
    return report


def find_locality_witness(automaton: BlockMapAutomaton, trials: int = 200, seed: int = 0):
    """A perturbation inside the radius that does change cell 0, if one exists."""
    r = automaton.radius
    period = max(64, 2 * r + 2)
    for i in range(trials):
        rng = stream(seed, f"locality-witness/{automaton.name}", i)
        x = _random_cyclic(automaton.alphabet, period, rng)
        base = step(automaton, x).cell(0)
        for pos in range(-r, r + 1):
            for letter in range(automaton.alphabet.arity):
                if letter == x.cell(pos):
                    continue
                cells = x.cells.copy()
                cells[pos % period] = letter
                y = CyclicConfiguration(automaton.alphabet, cells)
                if step(automaton, y).cell(0) != base:
                    return {"trial": i, "position": pos, "letter": letter}
    return None
