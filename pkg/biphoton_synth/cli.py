"""
## Command line

`biphoton-synth <command> [flags]`; commands:

- `chsh`: CHSH value of a settings variant (and state).
- `bound`: the 16 deterministic strategies and the classical maximum.
- `exact`: exact quality of any strategy spec.
- `simulate`: Monte Carlo assembly, written as JSON (report) or CSV (per step rows).
- `timeline`: one timed run of a control mode, optionally with the per-step event log.
- `compare`: classical vs quantum vs feedback, quality and makespan.
- `sweep`: quality along the site-2 rotation angle; plot-ready CSV.
- `overlay`: overlay two chain dumps written by `simulate --chains-out`.

Exit codes: 0 success, 2 usage/validation problem, 3 I/O problem.
Every number is printed with `SynthSettings.decimals` decimals (9 by default), and nothing
time or host dependent is ever written, so identical flags give identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from logging import getLogger
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
from xsentinels import Default

from . import quantum
from .assembly import Chain, criticalities, overlay
from .distsim import (
    EVENT_FIELDS, ControlMode, ModeKind, TimelineConfig, closed_form_makespan, compare_modes,
    run_timeline
)
from .errors import BiphotonSynthError
from .quantum import BiphotonState, MeasurementSettings, SettingsVariant
from .record import SimulationRecord
from .settings import SynthSettings, resolve
from .strategy import (
    ALWAYS_FORWARD, MonteCarloEstimate, QuantumStrategy, binomial_stderr,
    enumerate_deterministic, estimate_mc, parse_strategy, pool, replication_seeds, run_assembly
)
from .sweep import sweep

log = getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

SIMULATE_CSV_FIELDS = ('step', 'type1', 'type2', 's1', 's2', 'cr')


class OutputError(Exception):
    """ Wraps an `OSError` hit while reading inputs or writing outputs (exit code 3). """
    pass


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "undefined"
    decimals = SynthSettings.grab().decimals
    return f"{value:.{decimals}f}"


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f"Can't write ({out}): {e}") from e
    log.info(f"Wrote ({out}).")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise OutputError(f"Can't read ({path}): {e}") from e


def _seed(args) -> int:
    return resolve(args.seed, 'default_seed')


def cmd_chsh(args) -> int:
    variant = resolve(args.settings, 'settings_variant')
    try:
        variant = SettingsVariant(variant)
    except ValueError:
        raise BiphotonSynthError(f"unknown settings variant ({variant!r})")
    settings = MeasurementSettings.for_variant(variant)
    state = BiphotonState.singlet() if args.state == 'singlet' else BiphotonState.phi_plus()
    _emit(_fmt(quantum.chsh(state, settings)) + "\n", None)
    return EXIT_OK


def cmd_bound(args) -> int:
    table = enumerate_deterministic()
    values = [v.exact_noncr for _, v in table]
    text = _csv(
        ('strategy', 'exact_noncr', 'chsh_S'),
        [(s.spec, _fmt(v.exact_noncr), _fmt(v.chsh_S)) for s, v in table],
    )
    text += f"max,{_fmt(max(values))}\nmin,{_fmt(min(values))}\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_exact(args) -> int:
    strategy = parse_strategy(args.strategy)
    value = strategy.value()
    _emit(
        _csv(('strategy', 'exact_noncr', 'chsh_S'),
             [(strategy.spec, _fmt(value.exact_noncr), _fmt(value.chsh_S))]),
        None
    )
    return EXIT_OK


def _check_steps(steps: int):
    if steps < 1:
        raise BiphotonSynthError("steps must be ≥ 1")


def cmd_simulate(args) -> int:
    strategy = parse_strategy(args.strategy)
    _check_steps(args.steps)
    if args.replications < 1:
        raise BiphotonSynthError("replications must be ≥ 1")
    seed = _seed(args)
    config = TimelineConfig(d1=args.d1, d2=args.d2, cadence=args.cadence, steps=args.steps)

    # Replication 0 is kept in full (chains, per step rows); the rest only as estimates.
    chains = run_assembly(strategy, args.steps, np.random.default_rng(seed))
    report = overlay(*chains)
    estimates: List[MonteCarloEstimate] = [MonteCarloEstimate(
        mean=report.noncr_fraction,
        stderr=binomial_stderr(report.noncr_fraction, args.steps),
        steps=args.steps,
    )]
    estimates.extend(
        estimate_mc(strategy, args.steps, np.random.default_rng(s))
        for s in replication_seeds(seed, args.replications)[1:]
    )
    pooled = pool(estimates)

    if args.chains_out:
        _emit(chains[0].dumps(), f"{args.chains_out}.site1.txt")
        _emit(chains[1].dumps(), f"{args.chains_out}.site2.txt")

    if args.format == 'csv':
        crs = criticalities(*chains)
        rows = (
            (step, t1, t2, s1, s2, cr)
            for step, ((t1, s1), (t2, s2), cr) in enumerate(
                zip(_letters(chains[0]), _letters(chains[1]), crs.tolist())
            )
        )
        _emit(_csv(SIMULATE_CSV_FIELDS, rows), args.out)
        return EXIT_OK

    kind = (
        ModeKind.ONE_WAY_QUANTUM if isinstance(strategy, QuantumStrategy)
        else ModeKind.ONE_WAY_CLASSICAL
    )
    decimals = SynthSettings.grab().decimals
    record = SimulationRecord(
        strategy=strategy.spec,
        steps=args.steps,
        seed=seed,
        noncr_fraction=round(pooled.mean, decimals),
        stderr=round(pooled.stderr, decimals),
        chsh_S=round(strategy.value().chsh_S, decimals),
        makespan_s=round(closed_form_makespan(config, kind), decimals),
    )
    rounded = [
        MonteCarloEstimate(round(e.mean, decimals), round(e.stderr, decimals), e.steps)
        for e in estimates
    ]
    _emit(record.to_json(rounded), args.out)
    return EXIT_OK


def _letters(chain: Chain):
    return (
        ('a' if t == 0 else 'b', s)
        for t, s in zip(chain.types.tolist(), chain.signs.tolist())
    )


def _timeline_config(args, steps: int) -> TimelineConfig:
    return TimelineConfig(
        d1=args.d1,
        d2=args.d2,
        d12=args.d12,
        signal_speed=Default if args.signal_speed is None else args.signal_speed,
        cadence=args.cadence,
        steps=steps,
    )


def _mode(args) -> ControlMode:
    kind = ModeKind(args.mode)
    if kind is ModeKind.TWO_WAY_FEEDBACK:
        if args.strategy:
            raise BiphotonSynthError("feedback mode doesn't take a --strategy")
        return ControlMode.two_way_feedback()

    if not args.strategy:
        if kind is ModeKind.ONE_WAY_QUANTUM:
            return ControlMode.one_way_quantum()
        return ControlMode.one_way_classical(ALWAYS_FORWARD)

    strategy = parse_strategy(args.strategy)
    if isinstance(strategy, QuantumStrategy) != (kind is ModeKind.ONE_WAY_QUANTUM):
        raise BiphotonSynthError(
            f"strategy ({strategy.spec}) doesn't match mode ({kind.value})"
        )
    return ControlMode(kind, strategy)


def cmd_timeline(args) -> int:
    mode = _mode(args)
    config = _timeline_config(args, resolve(args.steps, 'timeline_steps'))
    result = run_timeline(
        config, mode, np.random.default_rng(_seed(args)), record_events=bool(args.events_out)
    )

    if args.events_out:
        _emit(
            _csv(EVENT_FIELDS, (
                tuple(_fmt(v) if isinstance(v, float) else v for v in e.as_row())
                for e in result.events
            )),
            args.events_out,
        )

    _emit(
        f"mode,{mode.name}\n"
        f"steps,{config.steps}\n"
        f"noncr_fraction,{_fmt(result.report.noncr_fraction if result.report else None)}\n"
        f"makespan_s,{_fmt(result.makespan)}\n"
        f"per_step_latency_s,{_fmt(result.per_step_latency)}\n",
        None,
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _timeline_config(args, resolve(args.steps, 'timeline_steps'))
    comparison = compare_modes(config, _seed(args))
    text = _csv(
        ('mode', 'exact_noncr', 'noncr_fraction', 'makespan_s'),
        [
            (r.mode, _fmt(r.exact_noncr), _fmt(r.noncr_fraction), _fmt(r.makespan))
            for r in comparison.rows
        ],
    )
    text += f"quality_ratio,{_fmt(comparison.quality_ratio)}\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    points = sweep(args.start, args.stop, args.points)
    _emit(
        _csv(('theta', 'chsh_S', 'noncr'),
             [(_fmt(p.theta), _fmt(p.chsh_S), _fmt(p.noncr)) for p in points]),
        args.out,
    )
    return EXIT_OK


def cmd_overlay(args) -> int:
    report = overlay(Chain.loads(_read(args.chain1)), Chain.loads(_read(args.chain2)))
    _emit(
        f"length,{report.length}\n"
        f"noncritical_count,{report.noncritical_count}\n"
        f"cr_sum,{report.cr_sum}\n"
        f"noncr_fraction,{_fmt(report.noncr_fraction)}\n",
        args.out,
    )
    return EXIT_OK


def _add_geometry(parser: argparse.ArgumentParser):
    parser.add_argument('--d1', type=float, default=0.0, help="CPU to site 1 distance, meters")
    parser.add_argument('--d2', type=float, default=0.0, help="CPU to site 2 distance, meters")
    parser.add_argument('--d12', type=float, default=0.0, help="site 1 to site 2, meters")
    parser.add_argument('--cadence', type=float, default=0.0, help="seconds between emissions")
    parser.add_argument('--signal-speed', type=float, default=None, help="meters per second")
    parser.add_argument('--steps', type=int, default=Default)
    parser.add_argument('--seed', type=int, default=Default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='biphoton-synth',
        description="Two-site chain synthesis under one-way classical or biphoton control.",
    )
    parser.add_argument('-v', '--verbose', action='count', default=0)
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('chsh', help="CHSH value of a settings variant")
    p.add_argument('--settings', choices=[v.value for v in SettingsVariant], default=Default)
    p.add_argument('--state', choices=['phi-plus', 'singlet'], default='phi-plus')
    p.set_defaults(handler=cmd_chsh)

    p = commands.add_parser('bound', help="enumerate the 16 deterministic strategies")
    p.add_argument('--out')
    p.set_defaults(handler=cmd_bound)

    p = commands.add_parser('exact', help="exact quality of a strategy")
    p.add_argument('--strategy', required=True)
    p.set_defaults(handler=cmd_exact)

    p = commands.add_parser('simulate', help="Monte Carlo assembly run")
    p.add_argument('--strategy', required=True)
    p.add_argument('--steps', type=int, required=True)
    p.add_argument('--seed', type=int, default=Default)
    p.add_argument('--replications', type=int, default=1)
    p.add_argument('--format', choices=['csv', 'json'], default='json')
    p.add_argument('--out')
    p.add_argument('--chains-out', help="write PREFIX.site1.txt and PREFIX.site2.txt dumps")
    p.add_argument('--d1', type=float, default=0.0)
    p.add_argument('--d2', type=float, default=0.0)
    p.add_argument('--cadence', type=float, default=0.0)
    p.set_defaults(handler=cmd_simulate)

    p = commands.add_parser('timeline', help="timed run of one control mode")
    p.add_argument('--mode', choices=[k.value for k in ModeKind], default='quantum')
    p.add_argument('--strategy')
    p.add_argument('--events-out', help="per step event log, CSV")
    _add_geometry(p)
    p.set_defaults(handler=cmd_timeline)

    p = commands.add_parser('compare', help="classical vs quantum vs feedback")
    p.add_argument('--out')
    _add_geometry(p)
    p.set_defaults(handler=cmd_compare)

    p = commands.add_parser('sweep', help="quality along the site-2 rotation angle")
    p.add_argument('--from', dest='start', type=float, default=0.0)
    p.add_argument('--to', dest='stop', type=float, default=math.pi / 2)
    p.add_argument('--points', type=int, default=91)
    p.add_argument('--out')
    p.set_defaults(handler=cmd_sweep)

    p = commands.add_parser('overlay', help="overlay two chain dumps")
    p.add_argument('--chain1', required=True)
    p.add_argument('--chain2', required=True)
    p.add_argument('--out')
    p.set_defaults(handler=cmd_overlay)

    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on a bad flag, and 0 for `--help`.
        return e.code

    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except BiphotonSynthError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OutputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
