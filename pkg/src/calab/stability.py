"""Column traces and what they witness: trace-ball measure estimation, the
equicontinuity-vs-expansivity classifier, blocking-word search, and the
sensitivity probe.

The trace ball of a point x at half-width n is the set of y whose central
2n+1 cells agree with x's after every iterate; membership is only ever
decided through a finite horizon here, so every estimate is an
over-approximation that is exactly non-increasing in the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import BlockMapAutomaton, EngineError, step, step_window
from .measures import EstimateReport, MeasureSpec, indicator_stderr, plan_window
from .rng import stream
from .symbolic import CyclicConfiguration, SymbolicError, WindowConfiguration


@dataclass
class ColumnTrace:
    halfwidth: int
    rows: np.ndarray  # (horizon, 2*halfwidth+1) int8

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, np.int8)

    @property
    def horizon(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, ColumnTrace)
            and self.halfwidth == other.halfwidth
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
        )

    def prefix_match(self, other: "ColumnTrace") -> int:
        """Number of leading rows on which the traces agree."""
        m = min(self.horizon, other.horizon)
        neq = np.any(self.rows[:m] != other.rows[:m], axis=1)
        hits = np.nonzero(neq)[0]
        return int(hits[0]) if hits.size else m


def column_trace(automaton: BlockMapAutomaton, x, halfwidth: int, horizon: int) -> ColumnTrace:
    """Rows i = F^i(x)(-n..n) for i < horizon, computed exactly."""
    n = halfwidth
    rows = np.empty((horizon, 2 * n + 1), np.int8)
    plan = automaton.step_plan(max(horizon - 1, 0))
    cur = x
    for i in range(horizon):
        try:
            rows[i] = cur.segment(-n, n)
        except SymbolicError as exc:
            raise EngineError(f"window too small for trace row {i}: {exc}") from exc
        if i + 1 < horizon:
            cur = step(plan[i], cur) if isinstance(cur, CyclicConfiguration) else step_window(plan[i], cur)
    return ColumnTrace(n, rows)


def _trace_survival(automaton, anchor_rows: np.ndarray, w: WindowConfiguration, halfwidth: int) -> int:
    """Leading rows of w's trace equal to the anchor's, with early exit."""
    n = halfwidth
    horizon = anchor_rows.shape[0]
    plan = automaton.step_plan(max(horizon - 1, 0))
    for i in range(horizon):
        if not np.array_equal(w.segment(-n, n), anchor_rows[i]):
            return i
        if i + 1 < horizon:
            w = step_window(plan[i], w)
    return horizon


def trace_ball_estimates(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    anchor,
    halfwidth: int,
    horizons,
    samples: int,
    seed: int,
    tag: str = "trace-ball",
) -> list[EstimateReport]:
    """Estimates of mu{y : y shares the anchor's column trace through T} for
    each T in ``horizons``, all from the same samples (so the values are
    exactly non-increasing in T)."""
    horizons = sorted(int(t) for t in horizons)
    t_max = horizons[-1]
    n = halfwidth
    anchor_rows = column_trace(automaton, anchor, n, t_max).rows
    lo, hi = plan_window(automaton, -n, n, max(t_max - 1, 0))
    survive = np.empty(samples, np.int64)
    for s in range(samples):
        rng = stream(seed, tag, s)
        survive[s] = _trace_survival(automaton, anchor_rows, mu.sample_window(lo, hi, rng), n)
    reports = []
    for t in horizons:
        p = float(np.mean(survive >= t))
        reports.append(EstimateReport(
            value=p,
            stderr=indicator_stderr(p, samples),
            samples=samples,
            horizon=t,
            window=(lo, hi),
            seed=seed,
            method="trace-ball-indicator",
            automaton=automaton.provenance,
            measure=mu.describe(),
            params={"halfwidth": n},
        ))
    return reports


VERDICT_EQUICONTINUOUS = "mu-almost-equicontinuous"
VERDICT_EXPANSIVE = "almost-expansive-indicated"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass
class ClassificationVerdict:
    verdict: str
    evidence: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"verdict": self.verdict, "evidence": self.evidence, "params": self.params}


def _pooled(a: EstimateReport, b: EstimateReport) -> float:
    return math.sqrt(a.stderr ** 2 + b.stderr ** 2)


def _anchor_profile(reports: list[EstimateReport]) -> str:
    """plateau-positive / decaying / flat per the fixed thresholds.

    Plateau: last two estimates within 2 pooled stderr of each other and the
    last one 3 stderr above zero.  Decay: at least three schedule points with
    every successive drop larger than 2 pooled stderr.
    """
    if len(reports) >= 2:
        a, b = reports[-2], reports[-1]
        if abs(a.value - b.value) <= 2 * _pooled(a, b) and b.value - 3 * b.stderr > 0:
            return "plateau-positive"
    if len(reports) >= 3:
        drops = [
            reports[i].value - reports[i + 1].value > 2 * _pooled(reports[i], reports[i + 1])
            for i in range(len(reports) - 1)
        ]
        if all(drops):
            return "decaying"
    return "flat"


def classify(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    anchors,
    halfwidth: int,
    horizons,
    samples: int,
    seed: int,
) -> ClassificationVerdict:
    """Dichotomy probe: some anchor with a positive trace-ball plateau indicates
    mu-almost equicontinuity; a decay on every anchor indicates almost
    expansivity; anything else stays inconclusive."""
    evidence = []
    profiles = []
    for idx, anchor in enumerate(anchors):
        reports = trace_ball_estimates(
            automaton, mu, anchor, halfwidth, horizons, samples, seed, tag=f"classify-{idx}",
        )
        profile = _anchor_profile(reports)
        profiles.append(profile)
        evidence.append({
            "anchor": idx,
            "profile": profile,
            "estimates": [(r.horizon, r.value, r.stderr) for r in reports],
        })
    if any(p == "plateau-positive" for p in profiles):
        verdict = VERDICT_EQUICONTINUOUS
    elif profiles and all(p == "decaying" for p in profiles):
        verdict = VERDICT_EXPANSIVE
    else:
        verdict = VERDICT_INCONCLUSIVE
    return ClassificationVerdict(
        verdict,
        evidence,
        params={
            "halfwidth": halfwidth, "horizons": sorted(int(t) for t in horizons),
            "samples": samples, "seed": seed,
            "automaton": automaton.provenance, "measure": mu.describe(),
            "thresholds": "plateau: last two within 2 pooled stderr and last 3 stderr above 0; "
                          "decay: every successive drop above 2 pooled stderr over >= 3 points",
        },
    )


@dataclass
class BlockingWordReport:
    found: bool
    word: np.ndarray | None
    offset: int | None
    certificate: str | None   # "exhaustive" | "sampled"
    fillings_tested: int
    lengths_searched: list
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "found": self.found,
            "word": None if self.word is None else [int(v) for v in self.word],
            "offset": self.offset,
            "certificate": self.certificate,
            "fillings_tested": self.fillings_tested,
            "lengths_searched": self.lengths_searched,
            "params": self.params,
        }


EXHAUSTIVE_COLLAR_LIMIT = 2 ** 20


def find_blocking_word(
    automaton: BlockMapAutomaton,
    max_len: int,
    horizon: int,
    fill_budget: int = 64,
    seed: int = 0,
    candidates_per_length: int = 4,
) -> BlockingWordReport:
    """Search for a central word that pins the central column trace regardless
    of what surrounds it.

    The trace (half-width = the automaton radius, through ``horizon``) depends
    on a collar of cells around the candidate word; when the collar's filling
    space is small enough every filling is tried (exhaustive certificate),
    otherwise ``fill_budget`` random fillings are tried (sampled certificate).
    """
    arity = automaton.alphabet.arity
    n = automaton.radius
    cone = sum(a.radius for a in automaton.step_plan(max(horizon - 1, 0)))
    lo, hi = -n - cone, n + cone
    fillings_tested = 0
    lengths = []
    for length in range(1, max_len + 1):
        lengths.append(length)
        offset = -(length // 2)
        word_cells = set(range(offset, offset + length))
        collar = [c for c in range(lo, hi + 1) if c not in word_cells]
        space = arity ** len(collar) if len(collar) * math.log(arity) < 64 * math.log(2) else float("inf")
        exhaustive = space <= EXHAUSTIVE_COLLAR_LIMIT
        if length == 1:
            candidates = [np.array([a], np.int8) for a in range(arity)]
        else:
            candidates = []
            for c in range(candidates_per_length):
                rng = stream(seed, f"blocking-cand-{length}", c)
                candidates.append(rng.integers(0, arity, length).astype(np.int8))
        for cand in candidates:
            if exhaustive:
                fillings = _all_fillings(arity, len(collar))
            else:
                fillings = _random_fillings(arity, len(collar), fill_budget, seed, length)
            reference = None
            blocked = True
            for filling in fillings:
                fillings_tested += 1
                cells = np.zeros(hi - lo + 1, np.int8)
                cells[np.array(collar, np.int64) - lo] = filling
                cells[np.array(sorted(word_cells), np.int64) - lo] = cand
                w = WindowConfiguration(automaton.alphabet, cells, lo)
                trace = column_trace(automaton, w, n, horizon)
                if reference is None:
                    reference = trace
                elif trace != reference:
                    blocked = False
                    break
            if blocked and reference is not None:
                return BlockingWordReport(
                    True, cand, offset,
                    "exhaustive" if exhaustive else "sampled",
                    fillings_tested, lengths,
                    params={"horizon": horizon, "automaton": automaton.provenance},
                )
    return BlockingWordReport(
        False, None, None, None, fillings_tested, lengths,
        params={"horizon": horizon, "automaton": automaton.provenance},
    )


def _all_fillings(arity: int, size: int):
    if size == 0:
        yield np.zeros(0, np.int8)
        return
    for code in range(arity ** size):
        out = np.empty(size, np.int8)
        c = code
        for j in range(size - 1, -1, -1):
            out[j] = c % arity
            c //= arity
        yield out


def _random_fillings(arity: int, size: int, budget: int, seed: int, tag: int):
    for b in range(budget):
        rng = stream(seed, f"blocking-fill-{tag}", b)
        yield rng.integers(0, arity, size).astype(np.int8)


@dataclass
class SensitivityReport:
    fraction: float
    samples: int
    witnesses: list
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "fraction": self.fraction,
            "samples": self.samples,
            "witnesses": self.witnesses[:32],
            "params": self.params,
        }


def sensitivity_probe(
    automaton: BlockMapAutomaton,
    sample_fn,
    m: int,
    horizon: int,
    samples: int,
    probe_halfwidth: int | None = None,
    max_strategies: int = 32,
    seed: int = 0,
) -> SensitivityReport:
    """Fraction of sampled points x for which some y agreeing with x on
    [-m, m] produces a different central trace within ``horizon`` steps.

    ``sample_fn(index) -> WindowConfiguration`` supplies the support samples;
    its windows must cover the probe light cone.  Perturbations touch single
    cells or short blocks strictly outside [-m, m].
    """
    p_hw = automaton.radius if probe_halfwidth is None else int(probe_halfwidth)
    plan = automaton.step_plan(max(horizon - 1, 0))
    found = 0
    witnesses = []
    arity = automaton.alphabet.arity
    # Perturbations sit outside both [-m, m] and the probe window, so a found
    # divergence is dynamical (time >= 1), never a trivial time-0 mismatch.
    exclusion = max(m, p_hw)
    # candidates that never diverge would otherwise burn the full horizon each;
    # deepening keeps the common fast witnesses cheap
    budgets = sorted({min(16, horizon), min(128, horizon), horizon})
    for s in range(samples):
        x = sample_fn(s)
        rng = stream(seed, "sensitivity-strategy", s)
        witness = None
        strategies = _perturbations(x, exclusion, arity, rng, max_strategies)
        for budget in budgets:
            for pos, letters in strategies:
                y_cells = x.cells.copy()
                changed = False
                for p, letter in zip(range(pos, pos + len(letters)), letters):
                    j = p - x.origin
                    if x.valid[0] <= p <= x.valid[1] and y_cells[j] != letter:
                        y_cells[j] = letter
                        changed = True
                if not changed:
                    continue
                y = WindowConfiguration(x.alphabet, y_cells, x.origin, x.valid)
                t = _divergence_time(plan, x, y, p_hw, budget)
                if t is not None:
                    witness = {"sample": s, "position": int(pos), "time": int(t)}
                    break
            if witness:
                break
        if witness:
            found += 1
            witnesses.append(witness)
    return SensitivityReport(
        fraction=found / samples if samples else float("nan"),
        samples=samples,
        witnesses=witnesses,
        params={
            "m": m, "horizon": horizon, "probe_halfwidth": p_hw,
            "automaton": automaton.provenance, "seed": seed,
        },
    )


def _perturbations(x: WindowConfiguration, m: int, arity: int, rng, budget: int):
    """Candidate (position, letters) edits strictly outside [-m, m]."""
    spread = []
    for letter in (2, 4, 1, 3, arity // 2, arity - 1):
        if 0 < letter < arity and letter not in spread:
            spread.append(letter)
    out = []
    for d in (m + 1, m + 2, m + 6, m + 12):
        for side in (1, -1):
            for letter in spread[:3]:
                out.append((side * d, [letter]))
    for side in (1, -1):
        start = side * (m + 1) - (0 if side == 1 else 15)
        out.append((start, [int(v) for v in rng.integers(0, arity, 16)]))
    return out[:budget]


def _divergence_time(plan, x: WindowConfiguration, y: WindowConfiguration, halfwidth: int, horizon: int):
    for t in range(horizon):
        try:
            if not np.array_equal(x.segment(-halfwidth, halfwidth), y.segment(-halfwidth, halfwidth)):
                return t
        except SymbolicError:
            return None   # window exhausted before horizon
        if t + 1 < horizon:
            x = step_window(plan[t], x)
            y = step_window(plan[t], y)
    return None
