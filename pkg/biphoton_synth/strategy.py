"""
## Controller strategies

Every strategy answers one question per step: given the monoblock types `c1`, `c2` present at
the two growth points, which shift signs `s1`, `s2` get used?  Site `i` only ever sees its own
type; the CPU's broadcast (shared randomness or a biphoton) is the only link between sites.

- `DeterministicStrategy`: each site applies a fixed `LocalRule` (type -> sign).
- `RandomizedClassicalStrategy`: the CPU broadcasts λ, a fresh draw per step that picks one of
  the 16 deterministic strategies.
- `QuantumStrategy`: the CPU emits a biphoton per step; each site measures the observable its
  local type selects and uses the outcome as the sign.

Exact values average over the four equiprobable type pairs; `E(Cr) = S/4` where `S` is the
CHSH combination, so `exact_noncr = (1 + S/4)/2`.

Strategies can be written as text (see `parse_strategy` and `Strategy.spec`):

- `det:<s1a><s1b><s2a><s2b>`, ie: `det:++++`
- `mix:<16 comma separated weights>`, ordered as `ALL_DETERMINISTIC`
- `quantum:corrected`, `quantum:paper-verbatim` or `quantum:theta=<radians>`,
  optionally followed by `:singlet` (default state is `phi-plus`).
"""
from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from logging import getLogger
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import quantum
from .assembly import (
    Chain, MonoblockType, SegmentPair, Shift, criticality, noncr_indicator, overlay
)
from .errors import BiphotonSynthError, InvalidStrategy
from .quantum import (
    BiphotonState, MeasurementSettings, Observable, OutcomePair, SettingsVariant
)

log = getLogger(__name__)

TYPE_PAIRS: Tuple[Tuple[MonoblockType, MonoblockType], ...] = tuple(
    itertools.product(MonoblockType, MonoblockType)
)
""" The four equiprobable `(c1, c2)` combinations. """

CLASSICAL_BOUND = 0.75
QUANTUM_VALUE = (2 + math.sqrt(2)) / 4


@dataclass(frozen=True)
class StrategyValue:
    exact_noncr: float
    chsh_S: float


class Strategy(ABC):
    """ Base class for all controllers. Subclasses are immutable values. """

    @property
    @abstractmethod
    def spec(self) -> str:
        """ Text form understood by `parse_strategy`. """

    @abstractmethod
    def value(self) -> StrategyValue:
        """ Exact expected quality, see `exact_value`. """

    @abstractmethod
    def shifts(
            self,
            types1: np.ndarray,
            types2: np.ndarray,
            rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Batch version of `step`: shift signs (int8 arrays of ±1) for each pair of types.

        Randomness is consumed exactly as `len(types1)` consecutive calls to `step` would
        consume it.
        """

    def step(self, c1: MonoblockType, c2: MonoblockType, rng: np.random.Generator) -> OutcomePair:
        s1, s2 = self.shifts(
            np.array([c1], dtype=np.int8), np.array([c2], dtype=np.int8), rng
        )
        return OutcomePair(int(s1[0]), int(s2[0]))

    def __str__(self):
        return self.spec


@dataclass(frozen=True)
class LocalRule:
    """ What one site does: shift sign to use for a type `a` block and for a type `b` block. """
    on_a: Shift
    on_b: Shift

    def __post_init__(self):
        object.__setattr__(self, 'on_a', Shift(self.on_a))
        object.__setattr__(self, 'on_b', Shift(self.on_b))

    def sign_for(self, block_type: MonoblockType) -> Shift:
        return self.on_a if block_type == MonoblockType.A else self.on_b

    def signs_for(self, types: np.ndarray) -> np.ndarray:
        return np.where(types == MonoblockType.A, self.on_a, self.on_b).astype(np.int8)

    @property
    def spec(self) -> str:
        return f"{self.on_a.symbol}{self.on_b.symbol}"


ALL_LOCAL_RULES: Tuple[LocalRule, ...] = tuple(
    LocalRule(on_a, on_b) for on_a, on_b in itertools.product(Shift, Shift)
)


@dataclass(frozen=True)
class DeterministicStrategy(Strategy):
    site1: LocalRule
    site2: LocalRule

    @property
    def spec(self) -> str:
        return f"det:{self.site1.spec}{self.site2.spec}"

    @property
    def chsh_S(self) -> int:
        """ `a1·b2 + b1·b2 + a1·a2 − b1·a2`, with each symbol the sign the rule assigns. """
        a1, b1 = int(self.site1.on_a), int(self.site1.on_b)
        a2, b2 = int(self.site2.on_a), int(self.site2.on_b)
        return a1 * b2 + b1 * b2 + a1 * a2 - b1 * a2

    @property
    def bracket_form(self) -> int:
        """ `a1·(b2 + a2) + b1·(b2 − a2)`; one bracket is 0, the other ±2. """
        a1, b1 = int(self.site1.on_a), int(self.site1.on_b)
        a2, b2 = int(self.site2.on_a), int(self.site2.on_b)
        return a1 * (b2 + a2) + b1 * (b2 - a2)

    def value(self) -> StrategyValue:
        noncr = sum(
            noncr_indicator(criticality(SegmentPair(
                c1, c2, self.site1.sign_for(c1), self.site2.sign_for(c2)
            )))
            for c1, c2 in TYPE_PAIRS
        ) / len(TYPE_PAIRS)
        return StrategyValue(exact_noncr=noncr, chsh_S=float(self.chsh_S))

    def shifts(self, types1, types2, rng):
        return self.site1.signs_for(types1), self.site2.signs_for(types2)


ALL_DETERMINISTIC: Tuple[DeterministicStrategy, ...] = tuple(
    DeterministicStrategy(site1, site2)
    for site1, site2 in itertools.product(ALL_LOCAL_RULES, ALL_LOCAL_RULES)
)
""" All 16 deterministic strategies; this order indexes `RandomizedClassicalStrategy.weights`.
"""

ALWAYS_FORWARD = DeterministicStrategy(
    LocalRule(Shift.FORWARD, Shift.FORWARD), LocalRule(Shift.FORWARD, Shift.FORWARD)
)
""" `det:++++`, one of the optimal deterministic strategies; our classical reference. """

# Per strategy, per site, per type: the sign; lets the randomized strategy vectorize lookups.
_RULE_SIGNS = np.array(
    [
        [[s.site1.on_a, s.site1.on_b], [s.site2.on_a, s.site2.on_b]]
        for s in ALL_DETERMINISTIC
    ],
    dtype=np.int8,
)


@dataclass(frozen=True)
class RandomizedClassicalStrategy(Strategy):
    """
    Shared randomness: λ is drawn fresh every step, with `weights[i]` the probability of
    playing `ALL_DETERMINISTIC[i]`.  Each step spends one `rng.random()` on λ.
    """
    weights: Tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, 'weights', weights)

        if len(weights) != len(ALL_DETERMINISTIC):
            raise InvalidStrategy(
                f"Need ({len(ALL_DETERMINISTIC)}) weights, one per deterministic strategy; "
                f"got ({len(weights)})."
            )
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise InvalidStrategy(f"Weights must be finite and nonnegative, got {weights}.")
        if abs(sum(weights) - 1.0) > quantum.STRUCTURAL_TOLERANCE:
            raise InvalidStrategy(f"Weights must sum to 1, they sum to ({sum(weights)}).")

    @classmethod
    def uniform(cls) -> "RandomizedClassicalStrategy":
        n = len(ALL_DETERMINISTIC)
        return cls(tuple([1 / n] * n))

    @property
    def spec(self) -> str:
        return "mix:" + ",".join(repr(w) for w in self.weights)

    def value(self) -> StrategyValue:
        values = [s.value() for s in ALL_DETERMINISTIC]
        return StrategyValue(
            exact_noncr=sum(w * v.exact_noncr for w, v in zip(self.weights, values)),
            chsh_S=sum(w * v.chsh_S for w, v in zip(self.weights, values)),
        )

    def shifts(self, types1, types2, rng):
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        choice = np.searchsorted(cdf, rng.random(len(types1)), side='right')
        choice = np.minimum(choice, len(ALL_DETERMINISTIC) - 1)
        types1 = np.asarray(types1, dtype=np.intp)
        types2 = np.asarray(types2, dtype=np.intp)
        return _RULE_SIGNS[choice, 0, types1], _RULE_SIGNS[choice, 1, types2]


STATES = {
    'phi-plus': BiphotonState.phi_plus(),
    'singlet': BiphotonState.singlet(),
}
""" Named biphoton states usable in a `quantum:` spec. """


@dataclass(frozen=True)
class QuantumStrategy(Strategy):
    """
    Biphoton control: a type `a` block at site `i` points the detector along `a_i`, a type `b`
    block along `b_i`; the measured ±1 is the shift sign.  One fresh biphoton per step.
    """
    state: BiphotonState
    settings: MeasurementSettings

    @classmethod
    def for_variant(
            cls,
            variant: Union[SettingsVariant, str] = SettingsVariant.CORRECTED,
            state: Optional[BiphotonState] = None
    ) -> "QuantumStrategy":
        return cls(
            state=state or BiphotonState.phi_plus(),
            settings=MeasurementSettings.for_variant(variant),
        )

    @property
    def spec(self) -> str:
        if self.settings.variant is not None:
            spec = f"quantum:{self.settings.variant.value}"
        elif self.settings.theta is not None:
            spec = f"quantum:theta={self.settings.theta!r}"
        else:
            spec = "quantum:custom"

        for name, state in STATES.items():
            if state == self.state:
                return spec if name == 'phi-plus' else f"{spec}:{name}"
        return f"{spec}:custom"

    def observables(self, c1: MonoblockType, c2: MonoblockType) -> Tuple[Observable, Observable]:
        settings = self.settings
        site1 = settings.a1 if c1 == MonoblockType.A else settings.b1
        site2 = settings.a2 if c2 == MonoblockType.A else settings.b2
        return site1, site2

    def distributions(self):
        """ Joint outcome distribution for each of the four `TYPE_PAIRS`. """
        return {
            (c1, c2): quantum.joint_distribution(self.state, *self.observables(c1, c2))
            for c1, c2 in TYPE_PAIRS
        }

    def value(self) -> StrategyValue:
        noncr = 0.0
        for (c1, c2), dist in self.distributions().items():
            for (s1, s2), p in zip(quantum.OUTCOME_ORDER, dist.probabilities):
                noncr += p * noncr_indicator(criticality(SegmentPair(c1, c2, s1, s2)))
        return StrategyValue(
            exact_noncr=noncr / len(TYPE_PAIRS),
            chsh_S=quantum.chsh(self.state, self.settings),
        )

    def shifts(self, types1, types2, rng):
        uniforms = rng.random(len(types1))
        s1 = np.empty(len(types1), dtype=np.int8)
        s2 = np.empty(len(types1), dtype=np.int8)
        for (c1, c2), dist in self.distributions().items():
            mask = (types1 == c1) & (types2 == c2)
            s1[mask], s2[mask] = dist.invert(uniforms[mask])
        return s1, s2


def exact_value(strategy: Strategy) -> StrategyValue:
    """ Expected fraction of non-critical positions, and the CHSH combination, for `strategy`.
    """
    return strategy.value()


def enumerate_deterministic() -> List[Tuple[DeterministicStrategy, StrategyValue]]:
    """ All 16 deterministic strategies with their values; the constructive classical bound. """
    return [(s, s.value()) for s in ALL_DETERMINISTIC]


def optimal_deterministic() -> List[DeterministicStrategy]:
    """ Every deterministic strategy attaining the maximum (there are several; no tie-break). """
    table = enumerate_deterministic()
    best = max(v.exact_noncr for _, v in table)
    return [s for s, v in table if v.exact_noncr == best]


def step(
        strategy: Strategy,
        c1: MonoblockType,
        c2: MonoblockType,
        rng: np.random.Generator
) -> OutcomePair:
    return strategy.step(c1, c2, rng)


def draw_types(steps: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """ Independent uniform types at both sites for each step; `(types1, types2)` int8 arrays.
    """
    types = rng.integers(0, 2, size=(steps, 2), dtype=np.int8)
    return types[:, 0], types[:, 1]


def run_assembly(strategy: Strategy, steps: int, rng: np.random.Generator) -> Tuple[Chain, Chain]:
    """
    Grow both chains for `steps` attachments.

    All types are drawn first (`draw_types`), then the strategy produces all shift signs; so for
    a given seed the chains are fully determined.
    """
    if steps < 0:
        raise BiphotonSynthError(f"steps must be >= 0, got ({steps}).")

    types1, types2 = draw_types(steps, rng)
    s1, s2 = strategy.shifts(types1, types2, rng)
    log.debug(f"Assembled ({steps}) steps with ({strategy.spec}).")
    return Chain(types1, s1), Chain(types2, s2)


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    steps: int


def binomial_stderr(mean: float, steps: int) -> float:
    return math.sqrt(max(mean * (1 - mean), 0.0) / steps)


def estimate_mc(strategy: Strategy, steps: int, rng: np.random.Generator) -> MonteCarloEstimate:
    """ One run of `steps` attachments; the overlay fraction and its binomial standard error. """
    if steps < 1:
        raise BiphotonSynthError(f"steps must be >= 1, got ({steps}).")

    report = overlay(*run_assembly(strategy, steps, rng))
    mean = report.noncr_fraction
    return MonteCarloEstimate(mean=mean, stderr=binomial_stderr(mean, steps), steps=steps)


def replication_seeds(seed: int, replications: int) -> List[int]:
    """ Replication `i` uses seed `seed + i`. """
    return [seed + i for i in range(replications)]


def replicate_mc(
        strategy: Strategy,
        steps: int,
        seed: int,
        replications: int
) -> List[MonteCarloEstimate]:
    """ `replications` independent `estimate_mc` runs, each with its own generator. """
    if replications < 1:
        raise BiphotonSynthError(f"replications must be >= 1, got ({replications}).")

    return [
        estimate_mc(strategy, steps, np.random.default_rng(s))
        for s in replication_seeds(seed, replications)
    ]


def pool(estimates: Sequence[MonteCarloEstimate]) -> MonteCarloEstimate:
    """ Combine equally sized replications as one run of their total length. """
    steps = sum(e.steps for e in estimates)
    mean = sum(e.mean * e.steps for e in estimates) / steps
    return MonteCarloEstimate(mean=mean, stderr=binomial_stderr(mean, steps), steps=steps)


def _parse_det(body: str) -> DeterministicStrategy:
    body = body.replace('−', '-')
    if len(body) != 4 or any(ch not in '+-' for ch in body):
        raise InvalidStrategy(
            f"det strategies need 4 signs (s1a s1b s2a s2b), ie: 'det:++++'; got ({body!r})."
        )
    s1a, s1b, s2a, s2b = (Shift.from_symbol(ch) for ch in body)
    return DeterministicStrategy(LocalRule(s1a, s1b), LocalRule(s2a, s2b))


def _parse_mix(body: str) -> RandomizedClassicalStrategy:
    try:
        weights = tuple(float(w) for w in body.split(','))
    except ValueError:
        raise InvalidStrategy(f"mix weights must be numbers, got ({body!r}).")
    return RandomizedClassicalStrategy(weights)


def _parse_quantum(body: str) -> QuantumStrategy:
    settings_part, _, state_name = body.partition(':')
    state_name = state_name or 'phi-plus'
    if state_name not in STATES:
        raise InvalidStrategy(
            f"Unknown state ({state_name!r}), expected one of {sorted(STATES)}."
        )

    if settings_part.startswith('theta='):
        try:
            theta = float(settings_part[len('theta='):])
        except ValueError:
            raise InvalidStrategy(f"theta must be a number, got ({settings_part!r}).")
        settings = MeasurementSettings.at_angle(theta)
    else:
        try:
            variant = SettingsVariant(settings_part)
        except ValueError:
            raise InvalidStrategy(
                f"Unknown settings ({settings_part!r}), expected 'corrected', "
                f"'paper-verbatim' or 'theta=<radians>'."
            )
        settings = MeasurementSettings.for_variant(variant)

    return QuantumStrategy(state=STATES[state_name], settings=settings)


_PARSERS = {
    'det': _parse_det,
    'mix': _parse_mix,
    'quantum': _parse_quantum,
}


def parse_strategy(spec: str) -> Strategy:
    """ Inverse of `Strategy.spec`; raises `biphoton_synth.errors.InvalidStrategy`. """
    kind, sep, body = spec.strip().partition(':')
    parser = _PARSERS.get(kind)
    if not sep or parser is None:
        raise InvalidStrategy(
            f"Strategy spec ({spec!r}) must start with one of "
            f"{', '.join(k + ':' for k in _PARSERS)}."
        )
    return parser(body)
