"""Command-line surface: simulate, render, classify, cesaro, mixing, periodic,
entropy.

Exit codes: 0 success, 2 invalid configuration, 3 budget or timeout.
"""

from __future__ import annotations

import argparse
import json
import string
import sys
from pathlib import Path

import numpy as np

from . import counter, engine, measures, orbits, reports, stability
from .measures import BudgetError
from .symbolic import Alphabet, CyclicConfiguration, Cylinder


class ConfigError(ValueError):
    pass


_PLAIN_LETTERS = string.digits + string.ascii_lowercase


def plain_alphabet(arity: int) -> Alphabet:
    if not 2 <= arity <= len(_PLAIN_LETTERS):
        raise ConfigError(f"arity must be in [2, {len(_PLAIN_LETTERS)}]")
    return Alphabet.from_letters(_PLAIN_LETTERS[:arity])


def build_automaton(spec: str, arity: int):
    """identity | shift | swap (over --arity letters) or the counter machine and
    its stages."""
    if spec == "counter":
        return counter.counter_machine()
    stages = counter.stage_registry()
    if spec in stages:
        return stages[spec]
    alphabet = plain_alphabet(arity)
    if spec == "identity":
        return engine.identity_automaton(alphabet)
    if spec == "shift":
        return engine.shift_automaton(alphabet)
    if spec == "swap":
        return engine.permutation_automaton(alphabet)
    raise ConfigError(f"unknown automaton {spec!r}")


def build_measure(spec: str, automaton) -> measures.MeasureSpec:
    if spec == "soup":
        if automaton.alphabet.letters != counter.cell_alphabet().letters:
            raise ConfigError("the soup measure needs a counter-alphabet automaton")
        return counter.tape_soup()
    if spec == "uniform":
        return measures.uniform_measure(automaton.alphabet)
    if spec.startswith("bernoulli:"):
        weights = [float(v) for v in spec.split(":", 1)[1].split(",")]
        return measures.Bernoulli(automaton.alphabet, weights)
    if spec.startswith("atomic:"):
        text = spec.split(":", 1)[1]
        return measures.Atomic(CyclicConfiguration.from_text(automaton.alphabet, text))
    raise ConfigError(f"unknown measure {spec!r}")


def build_cylinder(spec: str, automaton) -> Cylinder:
    """word:TEXT@POS over the automaton alphabet, or flag|tape|pulse:TEXT@POS on
    one plane of the counter alphabet."""
    try:
        head, rest = spec.split(":", 1)
        text, pos = rest.rsplit("@", 1)
        pos = int(pos)
    except ValueError as exc:
        raise ConfigError(f"bad cylinder spec {spec!r}") from exc
    alphabet = automaton.alphabet
    if head == "word":
        return Cylinder.from_text(alphabet, pos, text)
    planes = {"flag": counter.FLAG, "tape": counter.TAPE, "pulse": counter.PULSE}
    if head in planes:
        if not alphabet.is_product:
            raise ConfigError("plane cylinders need the counter alphabet")
        plane = planes[head]
        comp = alphabet.factors[plane].encode(text)
        return Cylinder.component(alphabet, plane, pos, comp)
    raise ConfigError(f"unknown cylinder kind {head!r}")


def build_initial(spec: str, alphabet: Alphabet | None = None) -> CyclicConfiguration:
    """zero:P | soup:P:SEED | counter:GAP[:P] | void:GAP[:P] |
    chain:G1,G2,..[:void=I,J][:P=N] | word:TEXT[:P] (plain alphabets)"""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "word":
        if alphabet is None or alphabet.is_product:
            raise ConfigError("word: initial conditions need a plain alphabet")
        cells = alphabet.encode(parts[1])
        if len(parts) > 2 and int(parts[2]) > cells.size:
            cells = np.concatenate([cells, np.zeros(int(parts[2]) - cells.size, np.int8)])
        return CyclicConfiguration(alphabet, cells)
    if kind == "zero":
        return counter.zero_config(int(parts[1]))
    if kind == "soup":
        period = int(parts[1])
        seed = int(parts[2]) if len(parts) > 2 else 0
        from .rng import stream
        row = counter.tape_soup().sample_row(0, period - 1, stream(seed, "cli-soup", 0))
        return CyclicConfiguration(counter.cell_alphabet(), row)
    if kind == "counter":
        gap = int(parts[1])
        period = int(parts[2]) if len(parts) > 2 else counter.simulation_period(gap + 2, 4 * gap // 5)
        return counter.lone_counter(gap, period)
    if kind == "void":
        gap = int(parts[1])
        period = int(parts[2]) if len(parts) > 2 else counter.simulation_period(gap + 2, gap // 5 + 16)
        return counter.void_counter(gap, period)
    if kind == "chain":
        gaps = [int(v) for v in parts[1].split(",")]
        void = set()
        period = None
        for extra in parts[2:]:
            if extra.startswith("void="):
                void = {int(v) for v in extra[5:].split(",")}
            elif extra.startswith("P="):
                period = int(extra[2:])
        tape = counter.counter_chain_tape(gaps, void=void)
        period = period or counter.simulation_period(tape.size, 8 * max(gaps))
        return counter.tape_config(tape, period)
    raise ConfigError(f"unknown initial condition {spec!r}")


def _common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--horizon", type=int, default=256)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--automaton", default="counter")
    parser.add_argument("--arity", type=int, default=2, help="alphabet size for identity/shift/swap")
    parser.add_argument("--measure", default="soup")
    parser.add_argument("--out", required=True)


def _config_of(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


def cmd_simulate(args) -> int:
    machine = build_automaton(args.automaton, args.arity)
    x = build_initial(args.init, machine.alphabet)
    if machine.alphabet.letters != x.alphabet.letters:
        raise ConfigError("initial condition alphabet does not match the automaton")
    flag, tape, pulse = counter.run_planes(x, args.steps, machine) if machine.alphabet.is_product else (None,) * 3
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _config_of(args, ["init", "steps", "automaton"])
    if flag is None:
        rows = np.empty((args.steps + 1, x.period_length), np.int8)
        rows[0] = x.cells
        for t, y in enumerate(engine.evolve(machine, x, args.steps), start=1):
            rows[t] = y.cells
        np.save(out / "cells.npy", rows)
        planes = {"cells": rows}
    else:
        np.save(out / "flag.npy", flag)
        np.save(out / "tape.npy", tape)
        np.save(out / "pulse.npy", pulse)
        planes = {"flag": flag, "tape": tape, "pulse": pulse}
    manifest = reports.envelope(
        {
            "automaton": machine.provenance,
            "planes": {k: list(v.shape) for k, v in planes.items()},
            "plane_sha256": {k: reports.config_digest({"data": v.tobytes().hex()}) for k, v in planes.items()},
        },
        config,
    )
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
    print(f"wrote {', '.join(planes)} to {out}")
    return 0


def cmd_render(args) -> int:
    rows = np.load(args.array)
    if args.decimate > 1:
        rows = rows[:: args.decimate]
    if args.plane == "tape":
        reports.write_ppm(args.out, rows)
    else:
        reports.write_pgm(args.out, rows)
    print(f"wrote {args.out}")
    return 0


def cmd_classify(args) -> int:
    automaton = build_automaton(args.automaton, args.arity)
    mu = build_measure(args.measure, automaton)
    horizons = [int(v) for v in args.horizons.split(",")]
    anchors = []
    lo, hi = measures.plan_window(automaton, -args.halfwidth, args.halfwidth, max(horizons) - 1)
    from .rng import stream
    for a in range(args.anchors):
        anchors.append(mu.sample_window(lo, hi, stream(args.seed, "classify-anchor", a)))
    verdict = stability.classify(
        automaton, mu, anchors, args.halfwidth, horizons, args.samples, args.seed,
    )
    config = _config_of(args, ["automaton", "measure", "halfwidth", "horizons", "samples", "seed", "anchors"])
    reports.write_jsonl(args.out, [reports.envelope(verdict.to_dict(), config)])
    print(f"verdict: {verdict.verdict} -> {args.out}")
    return 0


def cmd_cesaro(args) -> int:
    automaton = build_automaton(args.automaton, args.arity)
    mu = build_measure(args.measure, automaton)
    cyl = build_cylinder(args.cylinder, automaton)
    rep = measures.cesaro_mean(automaton, mu, cyl, args.horizon, args.samples, args.seed, args.workers)
    config = _config_of(args, ["automaton", "measure", "cylinder", "horizon", "samples", "seed"])
    reports.write_jsonl(args.out, [reports.envelope(rep.to_dict(), config)])
    if args.csv:
        series = [
            {"n": i + 1, "partial_mean": float(m), "stderr": float(s)}
            for i, (m, s) in enumerate(zip(rep.partial_means, rep.partial_stderr))
        ]
        reports.write_csv(args.csv, series)
    print(f"cesaro mean at n={args.horizon}: {rep.report.value:.6g} +- {rep.report.stderr:.2g}")
    return 0


def cmd_mixing(args) -> int:
    automaton = build_automaton(args.automaton, args.arity)
    mu = build_measure(args.measure, automaton)
    c1 = build_cylinder(args.cylinder, automaton)
    c2 = build_cylinder(args.cylinder2 or args.cylinder, automaton)
    recs = []
    for t in (int(v) for v in args.separations.split(",")):
        rep = measures.mixing_gap(automaton, mu, c1, c2, t, args.horizon, args.samples, args.seed, args.workers)
        recs.append(rep.to_dict())
        print(f"t={t}: gap={rep.gap:.6g} stderr={rep.stderr:.2g}")
    config = _config_of(args, ["automaton", "measure", "cylinder", "cylinder2", "separations",
                               "horizon", "samples", "seed"])
    reports.write_jsonl(args.out, [reports.envelope(r, config) for r in recs])
    return 0


def cmd_periodic(args) -> int:
    automaton = build_automaton(args.automaton, args.arity)
    mu = build_measure(args.measure, automaton)
    windows = [
        measures.evolved_window(automaton, mu, args.burn_in, -args.span, args.span, args.seed, i)
        for i in range(args.windows)
    ]
    plane = counter.TAPE if automaton.alphabet.is_product else None
    rep = orbits.periodic_density_probe(
        automaton, windows, args.word_len, plane=plane,
        max_steps=args.max_steps, seed=args.seed,
    )
    config = _config_of(args, ["automaton", "measure", "word_len", "burn_in", "span", "windows", "seed"])
    reports.write_jsonl(args.out, [reports.envelope(rep.to_dict(), config)])
    print(f"coverage: {rep.coverage:.3f} over {len(rep.outcomes)} words -> {args.out}")
    return 0


def cmd_entropy(args) -> int:
    automaton = build_automaton(args.automaton, args.arity)
    mu = build_measure(args.measure, automaton)
    rep = orbits.estimate_column_entropy(
        automaton, mu, args.halfwidth, args.horizon, args.samples, args.seed, k_max=args.k_max,
    )
    config = _config_of(args, ["automaton", "measure", "halfwidth", "horizon", "samples", "seed", "k_max"])
    reports.write_jsonl(args.out, [reports.envelope(rep.to_dict(), config)])
    print(f"entropy rate: {rep.rate:.4f} nats/step -> {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a simulation and dump space-time planes")
    p.add_argument("--init", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--automaton", default="counter")
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("render", help="render a space-time .npy as pgm/ppm")
    p.add_argument("--array", required=True)
    p.add_argument("--plane", default="pulse", choices=["flag", "tape", "pulse", "cells"])
    p.add_argument("--decimate", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("classify", help="equicontinuity-vs-expansivity verdict")
    _common(p)
    p.add_argument("--halfwidth", type=int, default=1)
    p.add_argument("--horizons", default="16,64,256")
    p.add_argument("--anchors", type=int, default=4)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("cesaro", help="Cesaro mean of image measures of a cylinder")
    _common(p)
    p.add_argument("--cylinder", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(fn=cmd_cesaro)

    p = sub.add_parser("mixing", help="correlation factorization gap")
    _common(p)
    p.add_argument("--cylinder", required=True)
    p.add_argument("--cylinder2", default=None)
    p.add_argument("--separations", default="400,800,1600")
    p.set_defaults(fn=cmd_mixing)

    p = sub.add_parser("periodic", help="periodic-point density probe")
    _common(p)
    p.add_argument("--word-len", type=int, default=8, dest="word_len")
    p.add_argument("--burn-in", type=int, default=2, dest="burn_in")
    p.add_argument("--span", type=int, default=512)
    p.add_argument("--windows", type=int, default=32)
    p.add_argument("--max-steps", type=int, default=2048, dest="max_steps")
    p.set_defaults(fn=cmd_periodic)

    p = sub.add_parser("entropy", help="column block-entropy rate")
    _common(p)
    p.add_argument("--halfwidth", type=int, default=0)
    p.add_argument("--k-max", type=int, default=8, dest="k_max")
    p.set_defaults(fn=cmd_entropy)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, engine.EngineError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
