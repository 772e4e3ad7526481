"""Measure specifications with exact sampling and exact cylinder probabilities,
plus the Monte Carlo estimators for image measures, Cesaro means, and the
mixing (correlation factorization) gap.

All estimates come from exact finite-window simulation: the sample window is
sized so the light cone of the observed cells never leaves it, so indicator
values are exact and sampling error is the only error.  Sample index i always
draws from its own named stream, so results are byte-identical for any worker
count or chunking.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import BlockMapAutomaton, step_window
from .rng import stream
from .symbolic import Alphabet, CyclicConfiguration, Cylinder, SymbolicError, WindowConfiguration

MAX_WINDOW_CELLS = 8_000_000


class BudgetError(RuntimeError):
    """Requested run exceeds the configured window budget."""


class MeasureSpec:
    name = "measure"

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet

    def sample_row(self, lo: int, hi: int, rng) -> np.ndarray:
        raise NotImplementedError

    def pattern_probability(self, position: int, pattern) -> float:
        raise NotImplementedError

    def sample_window(self, lo: int, hi: int, rng) -> WindowConfiguration:
        return WindowConfiguration(self.alphabet, self.sample_row(lo, hi, rng), lo)

    def describe(self) -> str:
        return self.name


class Bernoulli(MeasureSpec):
    """i.i.d. letters with fixed weights."""

    def __init__(self, alphabet: Alphabet, weights, name: str = "bernoulli"):
        super().__init__(alphabet)
        w = np.asarray(weights, np.float64)
        if w.size != alphabet.arity or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise SymbolicError("bernoulli weights must be non-negative and sum to 1")
        self.weights = w
        self.cum = np.cumsum(w)
        self.name = name

    def sample_row(self, lo, hi, rng):
        u = rng.random(hi - lo + 1)
        return np.searchsorted(self.cum, u, side="right").astype(np.int8)

    def pattern_probability(self, position, pattern):
        if isinstance(pattern, tuple):
            total = 0.0
            for code in range(self.alphabet.arity):
                comps = self.alphabet.unpack(code)
                if all(p is None or p == c for p, c in zip(pattern, comps)):
                    total += self.weights[code]
            return total
        return float(self.weights[int(pattern)])


def uniform_measure(alphabet: Alphabet) -> Bernoulli:
    return Bernoulli(alphabet, np.full(alphabet.arity, 1.0 / alphabet.arity), name="uniform")


class Atomic(MeasureSpec):
    """Point mass on one spatially periodic configuration."""

    def __init__(self, point: CyclicConfiguration, name: str = "atomic"):
        super().__init__(point.alphabet)
        self.point = point
        self.name = name

    def sample_row(self, lo, hi, rng):
        return self.point.segment(lo, hi).copy()

    def pattern_probability(self, position, pattern):
        code = self.point.cell(position)
        if isinstance(pattern, tuple):
            comps = self.alphabet.unpack(code)
            return 1.0 if all(p is None or p == c for p, c in zip(pattern, comps)) else 0.0
        return 1.0 if code == int(pattern) else 0.0


class ProductMeasure(MeasureSpec):
    """Independent per-component measures over a product alphabet."""

    def __init__(self, alphabet: Alphabet, components, name: str = "product"):
        super().__init__(alphabet)
        if not alphabet.is_product or len(components) != len(alphabet.factors):
            raise SymbolicError("need one component measure per alphabet factor")
        for comp, fac in zip(components, alphabet.factors):
            if comp.alphabet.letters != fac.letters:
                raise SymbolicError("component measure alphabet mismatch")
        self.components = list(components)
        self.name = name

    def sample_row(self, lo, hi, rng):
        arities = [f.arity for f in self.alphabet.factors]
        codes = np.zeros(hi - lo + 1, np.int16)
        for comp, a in zip(self.components, arities):
            codes = codes * a + comp.sample_row(lo, hi, rng).astype(np.int16)
        return codes.astype(np.int8)

    def pattern_probability(self, position, pattern):
        if not isinstance(pattern, tuple):
            pattern = self.alphabet.unpack(int(pattern))
        prob = 1.0
        for comp, p in zip(self.components, pattern):
            if p is not None:
                prob *= comp.pattern_probability(position, p)
        return prob


def cylinder_probability(mu: MeasureSpec, cyl: Cylinder) -> float:
    """Exact probability of a cylinder under i.i.d./atomic/product specs."""
    prob = 1.0
    for j, pat in enumerate(cyl.patterns):
        prob *= mu.pattern_probability(cyl.position + j, pat)
    return prob


@dataclass
class EstimateReport:
    value: float
    stderr: float
    samples: int
    horizon: int
    window: tuple
    seed: int
    method: str
    automaton: str = ""
    measure: str = ""
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "horizon": self.horizon,
            "window": list(self.window),
            "seed": self.seed,
            "method": self.method,
            "automaton": self.automaton,
            "measure": self.measure,
            "params": self.params,
        }


def indicator_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else float("nan")


def plan_window(automaton: BlockMapAutomaton, span_lo: int, span_hi: int, steps: int) -> tuple[int, int]:
    """Sample interval so the span is exact after ``steps`` applications."""
    cone = sum(a.radius for a in automaton.step_plan(steps))
    lo, hi = span_lo - cone, span_hi + cone
    if hi - lo + 1 > MAX_WINDOW_CELLS:
        raise BudgetError(f"window of {hi - lo + 1} cells exceeds budget {MAX_WINDOW_CELLS}")
    return lo, hi


def _spans(cylinders) -> tuple[int, int]:
    los, his = zip(*(c.span for c in cylinders))
    return min(los), max(his)


def evolved_window(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    burn_in: int,
    span_lo: int,
    span_hi: int,
    seed: int,
    index: int,
    tag: str = "support",
) -> WindowConfiguration:
    """A mu-sample pushed forward ``burn_in`` steps, exact on [span_lo, span_hi];
    approximates sampling from the evolved support."""
    lo, hi = plan_window(automaton, span_lo, span_hi, burn_in)
    w = mu.sample_window(lo, hi, stream(seed, tag, index))
    for stage in automaton.step_plan(burn_in):
        w = step_window(stage, w)
    return w


def hit_matrix(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    cylinders,
    horizon: int,
    samples: int,
    seed: int,
    tag: str,
    workers: int = 1,
) -> np.ndarray:
    """uint8 array [cylinder, sample, time]: time-t image-membership indicators.

    Entry [c, s, t] is 1 iff the s-th sample lies in F^-t(cylinder c), for
    t = 0..horizon-1.  All cylinders share one trajectory per sample.
    """
    cylinders = list(cylinders)
    span_lo, span_hi = _spans(cylinders)
    lo, hi = plan_window(automaton, span_lo, span_hi, max(horizon - 1, 0))
    plan = automaton.step_plan(max(horizon - 1, 0))
    hits = np.zeros((len(cylinders), samples, horizon), np.uint8)

    def run_chunk(chunk):
        for s in chunk:
            rng = stream(seed, tag, s)
            w = mu.sample_window(lo, hi, rng)
            for t in range(horizon):
                row_lo, row_hi = w.valid
                row = w.segment(row_lo, row_hi)
                for c, cyl in enumerate(cylinders):
                    hits[c, s, t] = cyl.matches_row(row, row_lo)
                if t + 1 < horizon:
                    w = step_window(plan[t], w)

    _run_chunks(run_chunk, samples, workers)
    return hits


def _run_chunks(fn, samples: int, workers: int):
    if workers <= 1:
        fn(range(samples))
        return
    chunks = np.array_split(np.arange(samples), workers * 4)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(fn, [c for c in chunks if c.size]))


def estimate_image_cylinder(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    cyl: Cylinder,
    t: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> EstimateReport:
    """Unbiased estimate of mu(F^-t(cyl))."""
    lo, hi = plan_window(automaton, *cyl.span, t)
    plan = automaton.step_plan(t)
    counts = np.zeros(samples, np.uint8)

    def run_chunk(chunk):
        for s in chunk:
            rng = stream(seed, "image", s)
            w = mu.sample_window(lo, hi, rng)
            for stage in plan:
                w = step_window(stage, w)
            counts[s] = cyl.contains(w)

    _run_chunks(run_chunk, samples, workers)
    p = float(counts.mean()) if samples else float("nan")
    return EstimateReport(
        value=p,
        stderr=indicator_stderr(p, samples),
        samples=samples,
        horizon=t,
        window=(lo, hi),
        seed=seed,
        method="image-cylinder-indicator",
        automaton=automaton.provenance,
        measure=mu.describe(),
        params={"cylinder": cyl.describe()},
    )


@dataclass
class CesaroReport:
    report: EstimateReport
    partial_means: np.ndarray
    partial_stderr: np.ndarray
    hits_per_time: np.ndarray

    def partial(self, n: int) -> tuple[float, float]:
        return float(self.partial_means[n - 1]), float(self.partial_stderr[n - 1])

    def to_dict(self):
        d = self.report.to_dict()
        d["partial_means"] = self.partial_means.tolist()
        d["partial_stderr"] = self.partial_stderr.tolist()
        d["hits_per_time"] = self.hits_per_time.tolist()
        return d


def cesaro_panel(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    cylinders,
    horizon: int,
    samples: int,
    seed: int,
    workers: int = 1,
    tag: str = "cesaro",
) -> list[CesaroReport]:
    """Cesaro averages (1/n) sum_{i<n} mu(F^-i(cyl)) for a panel of cylinders
    sharing one trajectory per sample, with partial-mean series."""
    cylinders = list(cylinders)
    hits_all = hit_matrix(automaton, mu, cylinders, horizon, samples, seed, tag, workers)
    ns = np.arange(1, horizon + 1, dtype=np.float64)
    out = []
    for cyl, hits in zip(cylinders, hits_all):
        per_sample = np.cumsum(hits, axis=1, dtype=np.float64) / ns
        partial_means = per_sample.mean(axis=0)
        partial_stderr = (
            per_sample.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros(horizon)
        )
        report = EstimateReport(
            value=float(partial_means[-1]),
            stderr=float(partial_stderr[-1]),
            samples=samples,
            horizon=horizon,
            window=plan_window(automaton, *cyl.span, horizon - 1),
            seed=seed,
            method="cesaro-partial-means",
            automaton=automaton.provenance,
            measure=mu.describe(),
            params={"cylinder": cyl.describe()},
        )
        out.append(CesaroReport(report, partial_means, partial_stderr, hits.sum(axis=0)))
    return out


def cesaro_mean(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    cyl: Cylinder,
    horizon: int,
    samples: int,
    seed: int,
    workers: int = 1,
    tag: str = "cesaro",
) -> CesaroReport:
    return cesaro_panel(automaton, mu, [cyl], horizon, samples, seed, workers, tag)[0]


def _jackknife_series_product(p_mat: np.ndarray, q_mat: np.ndarray) -> tuple[float, float]:
    """Mean over time of p_t * q_t with p, q estimated from independent sample
    batches; returns (value, jackknife stderr)."""
    sp, sq = p_mat.shape[0], q_mat.shape[0]
    p_t = p_mat.mean(axis=0)
    q_t = q_mat.mean(axis=0)
    value = float(np.mean(p_t * q_t))
    var = 0.0
    for mat, other_t in ((p_mat, q_t), (q_mat, p_t)):
        s = mat.shape[0]
        if s < 2:
            continue
        tot = mat.sum(axis=0, dtype=np.float64)
        loo = (tot[None, :] - mat) / (s - 1)          # leave-one-out series
        vals = (loo * other_t[None, :]).mean(axis=1)  # leave-one-out products
        var += (s - 1) / s * float(np.sum((vals - vals.mean()) ** 2))
    return value, math.sqrt(var)


@dataclass
class MixingReport:
    gap: float
    stderr: float
    joint: float
    product: float
    separation: int
    horizon: int
    samples: int
    seed: int
    automaton: str
    measure: str
    cylinders: tuple

    def to_dict(self):
        return {
            "gap": self.gap,
            "stderr": self.stderr,
            "joint": self.joint,
            "product": self.product,
            "separation": self.separation,
            "horizon": self.horizon,
            "samples": self.samples,
            "seed": self.seed,
            "automaton": self.automaton,
            "measure": self.measure,
            "cylinders": list(self.cylinders),
            "method": "mixing-gap-paired-cesaro",
        }


def mixing_gap(
    automaton: BlockMapAutomaton,
    mu: MeasureSpec,
    c1: Cylinder,
    c2: Cylinder,
    separation: int,
    horizon: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> MixingReport:
    """|Cesaro(joint) - Cesaro of per-step marginal products| at spatial
    separation t.

    The joint term averages mu(F^-i(c1 and sigma^-t c2)); the product term
    averages mu(F^-i c1) * mu(F^-i c2), the two marginal series coming from
    independent sample batches so their product is unbiased.  For a mixing
    limit both sides agree as t grows; a persistent gap flags correlation.
    """
    c2s = c2.shifted(separation)
    lo1, hi1 = c1.span
    lo2, hi2 = c2s.span
    if not (hi1 < lo2 or hi2 < lo1):
        raise SymbolicError("cylinder supports overlap after shifting; increase separation")
    joint_hits = hit_matrix(automaton, mu, [c1, c2s], horizon, samples, seed, f"mix-joint-{separation}", workers)
    joint_mat = (joint_hits[0] & joint_hits[1]).astype(np.float64)
    p_mat = hit_matrix(automaton, mu, [c1], horizon, samples, seed, "mix-left", workers)[0].astype(np.float64)
    q_mat = hit_matrix(automaton, mu, [c2], horizon, samples, seed, "mix-right", workers)[0].astype(np.float64)
    joint_per_sample = joint_mat.mean(axis=1)
    joint = float(joint_per_sample.mean())
    se_joint = float(joint_per_sample.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    product, se_prod = _jackknife_series_product(p_mat, q_mat)
    return MixingReport(
        gap=abs(joint - product),
        stderr=math.sqrt(se_joint ** 2 + se_prod ** 2),
        joint=joint,
        product=product,
        separation=separation,
        horizon=horizon,
        samples=samples,
        seed=seed,
        automaton=automaton.provenance,
        measure=mu.describe(),
        cylinders=(c1.describe(), c2.describe()),
    )
