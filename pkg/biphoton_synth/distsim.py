"""
## One-way control timeline

Discrete-event model of the CPU driving two distant growth points.

- The CPU emits one order per step, every `cadence` seconds; each order reaches site `i` after
  `d_i / signal_speed`.
- The growth points work in lockstep: a step starts once the farther site has its order, and
  the attachment itself takes `cadence`.
- One-way modes (classical or quantum) never wait on each other, so `d12` doesn't matter.
- `TWO_WAY_FEEDBACK` lets site 1 attach with `+` and message its `(type, shift)` to site 2,
  which picks the shift that glues well.  Every position glues well, but each step costs an
  extra `d12 / signal_speed`, and the CPU can't emit the next order until then.

The event list is run with `simpy`; its makespan always equals `closed_form_makespan`:

    makespan = max(d1, d2) / signal_speed + steps · (cadence + extra)

with `extra = d12 / signal_speed` for feedback and 0 otherwise.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from logging import getLogger
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
import simpy
from xloop import xloop
from xsentinels import Default

from .assembly import Chain, MonoblockType, OverlayReport, Shift, criticalities, overlay
from .errors import InvalidConfig
from .settings import resolve
from .strategy import ALWAYS_FORWARD, QuantumStrategy, Strategy, draw_types, run_assembly

log = getLogger(__name__)


class ModeKind(enum.Enum):
    ONE_WAY_CLASSICAL = "classical"
    ONE_WAY_QUANTUM = "quantum"
    TWO_WAY_FEEDBACK = "feedback"


@dataclass(frozen=True)
class ControlMode:
    """ How the CPU controls the two sites; build via the class methods. """
    kind: ModeKind
    strategy: Optional[Strategy] = None

    def __post_init__(self):
        if self.kind is ModeKind.TWO_WAY_FEEDBACK and self.strategy is not None:
            raise InvalidConfig("Two-way feedback doesn't take a strategy.")
        if self.kind is not ModeKind.TWO_WAY_FEEDBACK and self.strategy is None:
            raise InvalidConfig(f"Mode ({self.kind.value}) needs a strategy.")

    @classmethod
    def one_way_classical(cls, strategy: Strategy = ALWAYS_FORWARD) -> "ControlMode":
        return cls(ModeKind.ONE_WAY_CLASSICAL, strategy)

    @classmethod
    def one_way_quantum(cls, strategy: Strategy = None) -> "ControlMode":
        return cls(ModeKind.ONE_WAY_QUANTUM, strategy or QuantumStrategy.for_variant())

    @classmethod
    def two_way_feedback(cls) -> "ControlMode":
        return cls(ModeKind.TWO_WAY_FEEDBACK)

    @property
    def is_one_way(self) -> bool:
        return self.kind is not ModeKind.TWO_WAY_FEEDBACK

    @property
    def name(self) -> str:
        if self.strategy is None:
            return self.kind.value
        return f"{self.kind.value}({self.strategy.spec})"


def default_modes() -> Tuple[ControlMode, ...]:
    return (
        ControlMode.one_way_classical(),
        ControlMode.one_way_quantum(),
        ControlMode.two_way_feedback(),
    )


@dataclass(frozen=True)
class TimelineConfig:
    """
    Geometry and pacing of a run.  Distances in meters, times in seconds.

    `signal_speed` and `steps` default to `biphoton_synth.settings.SynthSettings` values
    (`signal_speed`, `timeline_steps`) when left as `xsentinels.Default`.
    """
    d1: float = 0.0
    d2: float = 0.0
    d12: float = 0.0
    signal_speed: float = Default
    cadence: float = 0.0
    steps: int = Default

    def __post_init__(self):
        object.__setattr__(self, 'signal_speed', float(resolve(self.signal_speed, 'signal_speed')))
        object.__setattr__(self, 'steps', resolve(self.steps, 'timeline_steps'))

        for name in ('d1', 'd2', 'd12', 'cadence'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidConfig(f"({name}) must be finite and >= 0, got ({value}).")
        if not math.isfinite(self.signal_speed) or self.signal_speed <= 0:
            raise InvalidConfig(f"signal_speed must be > 0, got ({self.signal_speed}).")
        if not math.isfinite(self.steps) or int(self.steps) != self.steps or self.steps < 0:
            raise InvalidConfig(f"steps must be an integer >= 0, got ({self.steps}).")
        object.__setattr__(self, 'steps', int(self.steps))

    def latency(self, distance: float) -> float:
        return distance / self.signal_speed

    def extra_latency(self, kind: ModeKind) -> float:
        """ Additional per-step wait a mode imposes beyond the cadence. """
        if kind is ModeKind.TWO_WAY_FEEDBACK:
            return self.latency(self.d12)
        return 0.0


def closed_form_makespan(config: TimelineConfig, kind: ModeKind) -> float:
    return (
        max(config.latency(config.d1), config.latency(config.d2))
        + config.steps * (config.cadence + config.extra_latency(kind))
    )


EVENT_FIELDS = (
    'step', 'emit_time', 'arrive1_time', 'arrive2_time', 'type1', 'type2', 's1', 's2', 'cr'
)


@dataclass(frozen=True)
class StepEvent:
    """ One row of the per-step event log. """
    step: int
    emit_time: float
    arrive1_time: float
    arrive2_time: float
    type1: str
    type2: str
    s1: int
    s2: int
    cr: int

    def as_row(self) -> Tuple:
        return tuple(getattr(self, name) for name in EVENT_FIELDS)


@dataclass(frozen=True)
class SimulationResult:
    chains: Tuple[Chain, Chain]
    report: Optional[OverlayReport]
    """ None when no steps were run; quality is undefined then. """
    makespan: float
    per_step_latency: float
    events: Tuple[StepEvent, ...] = field(default=(), repr=False)


class _Timeline:
    """ The simpy side of `run_timeline`; only deals with time, never with outcomes. """

    def __init__(self, config: TimelineConfig, extra: float):
        self.config = config
        self.extra = extra
        self.env = simpy.Environment()
        self.latency1 = config.latency(config.d1)
        self.latency2 = config.latency(config.d2)
        self.emit_times = np.zeros(config.steps)
        self.arrive_times = np.zeros((config.steps, 2))
        self.completed_at = 0.0

    def run(self) -> float:
        self.env.process(self._cpu())
        self.env.run()
        # An idle run still reports the link latency to the farther site.
        return max(self.completed_at, self.latency1, self.latency2)

    def _cpu(self):
        slot = self.config.cadence + self.extra
        for step in range(self.config.steps):
            self.env.process(self._step(step))
            # Two-way feedback keeps the CPU waiting on the site-to-site hop.
            yield self.env.timeout(slot)

    def _signal(self, latency: float):
        yield self.env.timeout(latency)
        return self.env.now

    def _step(self, step: int):
        self.emit_times[step] = self.env.now
        arrive1 = self.env.process(self._signal(self.latency1))
        arrive2 = self.env.process(self._signal(self.latency2))
        yield arrive1 & arrive2
        self.arrive_times[step] = (arrive1.value, arrive2.value)

        if self.extra:
            yield self.env.timeout(self.extra)
        yield self.env.timeout(self.config.cadence)
        self.completed_at = max(self.completed_at, self.env.now)


def feedback_reply(types1: np.ndarray, types2: np.ndarray, signs1: np.ndarray) -> np.ndarray:
    """ Site 2's choice once it knows site 1's `(type, shift)`: glue well, every time. """
    flip = (types1 == MonoblockType.B) & (types2 == MonoblockType.A)
    return np.where(flip, -signs1, signs1).astype(np.int8)


def _outcomes(config: TimelineConfig, mode: ControlMode, rng: np.random.Generator):
    if mode.is_one_way:
        return run_assembly(mode.strategy, config.steps, rng)

    types1, types2 = draw_types(config.steps, rng)
    signs1 = np.full(config.steps, Shift.FORWARD, dtype=np.int8)
    return Chain(types1, signs1), Chain(types2, feedback_reply(types1, types2, signs1))


def _events(timeline: _Timeline, chains: Tuple[Chain, Chain]) -> Tuple[StepEvent, ...]:
    chain1, chain2 = chains
    crs = criticalities(chain1, chain2)
    return tuple(
        StepEvent(
            step=step,
            emit_time=float(timeline.emit_times[step]),
            arrive1_time=float(timeline.arrive_times[step, 0]),
            arrive2_time=float(timeline.arrive_times[step, 1]),
            type1=MonoblockType(int(chain1.types[step])).letter,
            type2=MonoblockType(int(chain2.types[step])).letter,
            s1=int(chain1.signs[step]),
            s2=int(chain2.signs[step]),
            cr=int(crs[step]),
        )
        for step in range(chain1.length)
    )


def run_timeline(
        config: TimelineConfig,
        mode: ControlMode,
        rng: np.random.Generator,
        record_events: bool = False
) -> SimulationResult:
    """
    Simulate `config.steps` attachments under `mode`.

    Outcomes come from the same code path as `biphoton_synth.strategy.run_assembly`, so for a
    given seed a one-way run produces exactly the chains `run_assembly` would; the timeline only
    adds timing.
    """
    chains = _outcomes(config, mode, rng)
    extra = config.extra_latency(mode.kind)
    timeline = _Timeline(config, extra)
    makespan = timeline.run()

    report = overlay(*chains) if config.steps else None
    log.info(
        f"Timeline ({mode.name}): ({config.steps}) steps, makespan ({makespan:.6g}s), "
        f"quality ({report.noncr_fraction if report else 'undefined'})."
    )
    return SimulationResult(
        chains=chains,
        report=report,
        makespan=makespan,
        per_step_latency=config.cadence + extra,
        events=_events(timeline, chains) if record_events else (),
    )


def exact_quality(mode: ControlMode) -> float:
    if mode.kind is ModeKind.TWO_WAY_FEEDBACK:
        return 1.0
    return mode.strategy.value().exact_noncr


@dataclass(frozen=True)
class ModeRow:
    mode: str
    kind: ModeKind
    exact_noncr: Optional[float]
    noncr_fraction: Optional[float]
    """ Empirical quality of the run.  Both qualities are None when `steps` is 0. """
    makespan: float


@dataclass(frozen=True)
class ModeComparison:
    rows: Tuple[ModeRow, ...]
    quality_ratio: Optional[float]
    """ Exact quantum quality over exact classical quality; None when `steps` is 0. """

    def row(self, kind: ModeKind) -> Optional[ModeRow]:
        return next((r for r in self.rows if r.kind is kind), None)


def compare_modes(
        config: TimelineConfig,
        seed: int,
        modes: Union[ControlMode, Iterable[ControlMode]] = Default
) -> ModeComparison:
    """
    Run every mode (by default: best deterministic classical, corrected quantum, feedback).

    Each mode gets a fresh generator seeded with `seed`, so all modes see the very same
    monoblock type sequence.  With no steps there are no segments, so every quality (and the
    ratio) is None; only makespans are reported.
    """
    if modes is Default:
        modes = default_modes()

    rows: List[ModeRow] = []
    for mode in xloop(modes):
        result = run_timeline(config, mode, np.random.default_rng(seed))
        rows.append(ModeRow(
            mode=mode.name,
            kind=mode.kind,
            exact_noncr=exact_quality(mode) if config.steps else None,
            noncr_fraction=result.report.noncr_fraction if result.report else None,
            makespan=result.makespan,
        ))

    comparison = ModeComparison(rows=tuple(rows), quality_ratio=None)
    quantum_row = comparison.row(ModeKind.ONE_WAY_QUANTUM)
    classical_row = comparison.row(ModeKind.ONE_WAY_CLASSICAL)
    if (
            quantum_row and classical_row
            and quantum_row.exact_noncr is not None and classical_row.exact_noncr
    ):
        ratio = quantum_row.exact_noncr / classical_row.exact_noncr
        comparison = ModeComparison(rows=comparison.rows, quality_ratio=ratio)
    return comparison
