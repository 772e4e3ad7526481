"""Exact orbit analysis on cyclic configurations: temporal cycle detection, the
splice construction for periodic points, the periodic-density probe, and
plug-in block entropy of column traces."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .engine import BlockMapAutomaton, EngineError, step
from .measures import MeasureSpec, plan_window
from .rng import stream
from .stability import column_trace
from .symbolic import CyclicConfiguration


@dataclass
class OrbitResult:
    found: bool
    preperiod: int | None = None
    period: int | None = None
    entry: CyclicConfiguration | None = None
    steps_checked: int = 0

    def to_dict(self):
        return {
            "found": self.found,
            "preperiod": self.preperiod,
            "period": self.period,
            "steps_checked": self.steps_checked,
        }


def detect_orbit(automaton: BlockMapAutomaton, x: CyclicConfiguration, max_steps: int = 4096) -> OrbitResult:
    """Exact preperiod and minimal period of the forward orbit of x.

    States live in the finite space of period-P rows, keyed by their primitive
    expansion; the first repeated state closes the cycle, which makes the
    reported period minimal.  A cycle not closed within ``max_steps`` is
    reported as a timeout (found=False), never silently.
    """
    plan = automaton.step_plan(max_steps)
    seen = {x.state_key(): 0}
    cur = x
    for t in range(1, max_steps + 1):
        cur = step(plan[t - 1], cur)
        key = cur.state_key()
        if key in seen:
            pre = seen[key]
            entry = x
            for i in range(pre):
                entry = step(plan[i], entry)
            return OrbitResult(True, pre, t - pre, entry, steps_checked=t)
        seen[key] = t
    return OrbitResult(False, steps_checked=max_steps)


@dataclass
class SpliceResult:
    accepted: bool
    candidate: CyclicConfiguration
    matched_rows: int
    horizon: int
    orbit: OrbitResult | None
    diagnostics: str = ""

    def to_dict(self):
        return {
            "accepted": self.accepted,
            "matched_rows": self.matched_rows,
            "horizon": self.horizon,
            "orbit": None if self.orbit is None else self.orbit.to_dict(),
            "diagnostics": self.diagnostics,
            "candidate_period": self.candidate.period_length,
        }


def splice_periodic_point(
    automaton: BlockMapAutomaton,
    witness,
    halfwidth: int,
    shift_amount: int,
    horizon: int,
    max_steps: int = 4096,
) -> SpliceResult:
    """Build the periodic candidate repeating w = x(-n, -n+m-1) from a witness
    whose trace class meets its own shift by m, then verify it.

    Acceptance requires the candidate's central column trace to match the
    witness's through ``horizon`` and its orbit to close within ``max_steps``.
    """
    n, m = int(halfwidth), int(shift_amount)
    if m <= 0:
        raise EngineError("shift amount must be positive")
    w = witness.segment(-n, -n + m - 1)
    # anchor the repetition so candidate.cell(-n + j) == w[j mod m]
    candidate = CyclicConfiguration.from_period(automaton.alphabet, w, phase=n % m)
    witness_trace = column_trace(automaton, witness, n, horizon)
    candidate_trace = column_trace(automaton, candidate, n, horizon)
    matched = witness_trace.prefix_match(candidate_trace)
    if matched < horizon:
        return SpliceResult(
            False, candidate, matched, horizon, None,
            diagnostics=f"trace mismatch at row {matched}",
        )
    orbit = detect_orbit(automaton, candidate, max_steps)
    if not orbit.found:
        return SpliceResult(
            False, candidate, matched, horizon, orbit,
            diagnostics=f"orbit not closed within {max_steps} steps",
        )
    return SpliceResult(True, candidate, matched, horizon, orbit)


@dataclass
class WordOutcome:
    word: bytes
    count: int
    covered: bool
    attempts: int
    orbit: dict | None = None
    cycle_text: str | None = None  # text encoding of a cycle state exhibiting the word


@dataclass
class DensityReport:
    coverage: float
    outcomes: list
    params: dict = field(default_factory=dict)

    @property
    def shortfalls(self):
        return [o for o in self.outcomes if not o.covered]

    def to_dict(self):
        return {
            "coverage": self.coverage,
            "words": [
                {"word": [int(b) for b in o.word], "count": o.count,
                 "covered": o.covered, "attempts": o.attempts, "orbit": o.orbit,
                 "cycle_text": o.cycle_text}
                for o in self.outcomes
            ],
            "params": self.params,
        }


def _plane_row(alphabet, row: np.ndarray, plane: int | None) -> np.ndarray:
    if plane is None:
        return np.asarray(row, np.int8)
    return alphabet.component_codes(row, plane).astype(np.int8)


def _contains_word(hay: np.ndarray, word: bytes, cyclic: bool) -> bool:
    data = np.asarray(hay, np.int8)
    if cyclic and data.size >= 2:
        data = np.concatenate([data, data[: len(word) - 1]])
    return data.tobytes().find(word) >= 0


def _embed_word_cells(alphabet, word_codes: np.ndarray, plane: int | None, period: int) -> np.ndarray:
    cells = np.zeros(period, np.int8)
    if plane is None:
        cells[: word_codes.size] = word_codes
    else:
        arities = [f.arity for f in alphabet.factors]
        mult = 1
        for a in arities[plane + 1:]:
            mult *= a
        cells[: word_codes.size] = (word_codes.astype(np.int16) * mult).astype(np.int8)
    return cells


def periodic_density_probe(
    automaton: BlockMapAutomaton,
    windows,
    word_len: int,
    plane: int | None = None,
    wrap_periods=(256, 512, 1024),
    freq_floor: int = 3,
    max_words: int = 40,
    max_steps: int = 2048,
    repair_budget: int = 8,
    seed: int = 0,
) -> DensityReport:
    """For frequent length-L factors of the sampled support, hunt for a periodic
    orbit whose cycle exhibits the factor.

    Candidates are (a) the factor embedded in a zero background and (b) sampled
    windows wrapped to a cycle with a zero guard seam at the junction, plus
    ``repair_budget`` random seam variants.  Any accepted orbit is verified
    exactly (cycle closure plus factor search over the cycle's states).
    """
    counts: Counter = Counter()
    occurrences: dict[bytes, tuple] = {}
    for widx, w in enumerate(windows):
        lo, hi = w.valid
        row = _plane_row(automaton.alphabet, w.segment(lo, hi), plane)
        for i in range(0, row.size - word_len + 1):
            word = row[i: i + word_len].tobytes()
            counts[word] += 1
            occurrences.setdefault(word, (widx, lo + i))
    frequent = [w for w, c in counts.most_common(max_words) if c >= freq_floor]
    outcomes = []
    covered = 0
    for word in frequent:
        word_codes = np.frombuffer(word, np.int8).copy()
        attempts = 0
        hit = None
        hit_text = None
        for period in wrap_periods:
            if period < word_len:
                continue
            candidates = [_embed_word_cells(automaton.alphabet, word_codes, plane, period)]
            widx, pos = occurrences[word]
            w = windows[widx]
            lo, hi = w.valid
            if hi - lo + 1 >= period:
                start = min(max(pos - period // 4, lo), hi - period + 1)
                seg = w.segment(start, start + period - 1).copy()
                seam = min(2 * automaton.radius, max(period - word_len - 1, 0))
                if seam:
                    seg[-seam:] = 0
                candidates.append(seg)
                for b in range(repair_budget):
                    rng = stream(seed, "seam-repair", b)
                    var = seg.copy()
                    if seam:
                        var[-seam:] = rng.integers(0, automaton.alphabet.arity, seam).astype(np.int8)
                    candidates.append(var)
            for cells in candidates:
                x = CyclicConfiguration(automaton.alphabet, cells)
                if not _contains_word(_plane_row(automaton.alphabet, x.cells, plane), word, cyclic=True):
                    continue
                attempts += 1
                orbit = detect_orbit(automaton, x, max_steps)
                if not orbit.found:
                    continue
                cyc = orbit.entry
                for _ in range(orbit.period):
                    row = _plane_row(automaton.alphabet, cyc.cells, plane)
                    if _contains_word(row, word, cyclic=True):
                        hit = orbit
                        codec = automaton.alphabet.factors[plane] if plane is not None else automaton.alphabet
                        hit_text = codec.decode(row)
                        break
                    cyc = step(automaton.step_plan(1)[0], cyc)
                if hit:
                    break
            if hit:
                break
        outcomes.append(WordOutcome(word, counts[word], hit is not None, attempts,
                                    orbit=hit.to_dict() if hit else None, cycle_text=hit_text))
        covered += hit is not None
    coverage = covered / len(frequent) if frequent else float("nan")
    return DensityReport(
        coverage=coverage,
        outcomes=outcomes,
        params={
            "word_len": word_len, "plane": plane, "wrap_periods": list(wrap_periods),
            "freq_floor": freq_floor, "max_words": max_words, "max_steps": max_steps,
            "automaton": automaton.provenance, "words_considered": len(frequent),
        },
    )


@dataclass
class EntropyEstimate:
    block_entropies: list
    rate: float
    halfwidth: int
    horizon: int
    samples: int
    correction: str = "miller-madow"
    undersampled: bool = False
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "block_entropies": self.block_entropies,
            "rate": self.rate,
            "halfwidth": self.halfwidth,
            "horizon": self.horizon,
            "samples": self.samples,
            "correction": self.correction,
            "undersampled": self.undersampled,
            "params": self.params,
        }


def estimate_column_entropy(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    halfwidth: int,
    horizon: int,
    samples: int,
    seed: int,
    k_max: int = 8,
    tag: str = "entropy",
) -> EntropyEstimate:
    """Plug-in entropies (nats) of k-row trace blocks, pooled over samples and
    time offsets, with Miller-Madow correction; the rate is the OLS slope of
    h_k against k."""
    n = halfwidth
    k_max = min(k_max, horizon)
    lo, hi = plan_window(automaton, -n, n, max(horizon - 1, 0))
    traces = []
    for s in range(samples):
        rng = stream(seed, tag, s)
        w = mu.sample_window(lo, hi, rng)
        traces.append(column_trace(automaton, w, n, horizon).rows)
    hs = []
    undersampled = False
    offsets = horizon - k_max + 1  # same block count for every k, so the
    for k in range(1, k_max + 1):  # small-sample correction cancels in slopes
        c: Counter = Counter()
        for rows in traces:
            for i in range(offsets):
                c[rows[i: i + k].tobytes()] += 1
        total = sum(c.values())
        probs = np.array(list(c.values()), np.float64) / total
        h = float(-np.sum(probs * np.log(probs)))
        h += (len(c) - 1) / (2.0 * total)
        hs.append(h)
        if len(c) > 0.8 * total:
            undersampled = True
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    slope = float(np.polyfit(ks, np.array(hs), 1)[0]) if k_max >= 2 else hs[0]
    return EntropyEstimate(
        block_entropies=hs,
        rate=slope,
        halfwidth=n,
        horizon=horizon,
        samples=samples,
        undersampled=undersampled,
        params={"k_max": k_max, "seed": seed, "automaton": automaton.provenance, "measure": mu.describe()},
    )
