"""
## Two-qubit kernel

Exact linear algebra for the biphoton controller: dichotomic observables (unit Bloch vectors),
pure two-qubit states, Born-rule joint distributions, correlated outcome sampling and the
CHSH combination.

Conventions:

- Basis order is |00⟩, |01⟩, |10⟩, |11⟩; site 1 is the left qubit of every tensor product.
- Structural quantities (norms, probabilities, traces) are checked to `STRUCTURAL_TOLERANCE`,
  spectral ones (eigenvalues, imaginary residue of a trace) to `SPECTRAL_TOLERANCE`.
- Sampling spends exactly one uniform draw per biphoton, inverted through the CDF in
  `OUTCOME_ORDER`; so the same uniform stream always yields the same outcomes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from logging import getLogger
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import BiphotonSynthError, NonNormalizedState, NonUnitBloch

log = getLogger(__name__)

STRUCTURAL_TOLERANCE = 1e-12
SPECTRAL_TOLERANCE = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

OUTCOME_ORDER: Tuple[Tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
""" Order in which the four outcomes are laid out along the sampling CDF. """

TSIRELSON_BOUND = 2 * math.sqrt(2)


@dataclass(frozen=True)
class Observable:
    """
    A ±1 valued single-qubit measurement, `A = nx·σx + ny·σy + nz·σz` with `(nx, ny, nz)` a
    unit vector.

    Construct directly when you already have an exactly normalized vector, or use
    `observable_from_bloch` which tolerates (and removes) small normalization error.
    """
    nx: float
    ny: float
    nz: float
    label: str = ""

    def __post_init__(self):
        norm = math.sqrt(self.nx ** 2 + self.ny ** 2 + self.nz ** 2)
        if abs(norm - 1.0) > STRUCTURAL_TOLERANCE:
            raise NonUnitBloch(
                f"Observable ({self.label or 'unlabeled'}) needs a unit Bloch vector, "
                f"got ({self.nx}, {self.ny}, {self.nz}) with norm ({norm})."
            )

    @property
    def bloch(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz], dtype=float)

    @property
    def matrix(self) -> np.ndarray:
        """ The induced 2×2 Hermitian matrix. """
        return self.nx * SIGMA_X + self.ny * SIGMA_Y + self.nz * SIGMA_Z

    def projector(self, outcome: int) -> np.ndarray:
        """ Spectral projector `(I + outcome·A)/2` onto the `outcome` (±1) eigenspace. """
        return (IDENTITY + outcome * self.matrix) / 2

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_dichotomic(self, atol: float = STRUCTURAL_TOLERANCE) -> bool:
        """ True if `A² = I` within `atol`, the matrix form of the unit-vector invariant. """
        matrix = self.matrix
        return bool(np.allclose(matrix @ matrix, IDENTITY, rtol=0, atol=atol))

    def __neg__(self) -> "Observable":
        label = self.label[1:] if self.label.startswith("-") else f"-{self.label}"
        return Observable(-self.nx, -self.ny, -self.nz, label=label)

    def __str__(self):
        return self.label or f"({self.nx:.6g}, {self.ny:.6g}, {self.nz:.6g})"


def observable_from_bloch(n: Sequence[float], label: str = "") -> Observable:
    """
    Build an `Observable` from a Bloch 3-vector.

    The vector must already be unit length to within 1e-9; it is then renormalized exactly so
    the stored observable satisfies the 1e-12 invariant.  Zero (or otherwise non-unit) vectors
    raise `biphoton_synth.errors.NonUnitBloch`; we never silently normalize a degenerate
    observable.
    """
    vector = np.asarray(n, dtype=float)
    if vector.shape != (3,):
        raise NonUnitBloch(f"Bloch vector needs 3 components, got shape {vector.shape}.")

    norm = float(np.linalg.norm(vector))
    if abs(norm - 1.0) > SPECTRAL_TOLERANCE:
        raise NonUnitBloch(f"Bloch vector ({vector.tolist()}) has norm ({norm}), not 1.")

    vector = vector / norm
    return Observable(float(vector[0]), float(vector[1]), float(vector[2]), label=label)


OBS_X = Observable(1.0, 0.0, 0.0, label="sigma_x")
OBS_Z = Observable(0.0, 0.0, 1.0, label="sigma_z")


@dataclass(frozen=True)
class BiphotonState:
    """
    Normalized pure two-qubit state, the biphoton emitted by the CPU for every step.

    The density matrix `ρ = |Ψ⟩⟨Ψ|` is derived on demand via `BiphotonState.density_matrix`;
    it's never stored.
    """
    amp00: complex
    amp01: complex
    amp10: complex
    amp11: complex

    def __post_init__(self):
        for name in ('amp00', 'amp01', 'amp10', 'amp11'):
            object.__setattr__(self, name, complex(getattr(self, name)))

        norm_sq = sum(abs(a) ** 2 for a in (self.amp00, self.amp01, self.amp10, self.amp11))
        if abs(norm_sq - 1.0) > STRUCTURAL_TOLERANCE:
            raise NonNormalizedState(
                f"Biphoton amplitudes must have unit norm, squared norm is ({norm_sq})."
            )

    @classmethod
    def from_vector(cls, vector: Sequence[complex]) -> "BiphotonState":
        amps = np.asarray(vector, dtype=complex)
        if amps.shape != (4,):
            raise NonNormalizedState(f"Need exactly 4 amplitudes, got shape {amps.shape}.")
        return cls(*amps)

    @classmethod
    def phi_plus(cls) -> "BiphotonState":
        """ The EPR state (|00⟩ + |11⟩)/√2; default state everywhere. """
        r = 1 / math.sqrt(2)
        return cls(r, 0, 0, r)

    @classmethod
    def singlet(cls) -> "BiphotonState":
        """ (|01⟩ − |10⟩)/√2; with it the paper-verbatim observables reach +2√2. """
        r = 1 / math.sqrt(2)
        return cls(0, r, -r, 0)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp00, self.amp01, self.amp10, self.amp11], dtype=complex)

    def density_matrix(self) -> np.ndarray:
        vector = self.vector
        return np.outer(vector, vector.conj())


class SettingsVariant(enum.Enum):
    PAPER_VERBATIM = "paper-verbatim"
    """ Observables exactly as printed; they give S = −2√2 on |Φ+⟩. """

    CORRECTED = "corrected"
    """ Site-2 observables negated; gives the claimed S = +2√2 on |Φ+⟩. """


@dataclass(frozen=True)
class MeasurementSettings:
    """
    The four detector orientations: `a1`, `b1` at site 1 and `a2`, `b2` at site 2.

    `variant` is `None` for settings that are not one of the two named variants, such as the
    ones produced by `MeasurementSettings.at_angle`.
    """
    a1: Observable
    b1: Observable
    a2: Observable
    b2: Observable
    variant: Optional[SettingsVariant] = None
    theta: Optional[float] = None
    """ Rotation angle, for settings built by `MeasurementSettings.at_angle`. """

    @classmethod
    def for_variant(cls, variant: Union[SettingsVariant, str]) -> "MeasurementSettings":
        variant = SettingsVariant(variant)
        r = 1 / math.sqrt(2)
        if variant is SettingsVariant.PAPER_VERBATIM:
            log.warning(
                "Using the paper-verbatim observables; on |Phi+> they give S = -2*sqrt(2), "
                "see docs/sign-analysis.md."
            )
            return cls(
                a1=OBS_X,
                b1=OBS_Z,
                a2=Observable(-r, 0.0, r, label="(sigma_z-sigma_x)/sqrt2"),
                b2=Observable(-r, 0.0, -r, label="-(sigma_x+sigma_z)/sqrt2"),
                variant=variant,
            )

        return cls(
            a1=OBS_X,
            b1=OBS_Z,
            a2=Observable(r, 0.0, -r, label="(sigma_x-sigma_z)/sqrt2"),
            b2=Observable(r, 0.0, r, label="(sigma_x+sigma_z)/sqrt2"),
            variant=variant,
        )

    @classmethod
    def at_angle(cls, theta: float) -> "MeasurementSettings":
        """
        Site 1 fixed at `a1 = σx`, `b1 = σz`; site 2 rotated by `theta`:
        `a2 = cosθ·σx − sinθ·σz` and `b2 = cosθ·σx + sinθ·σz`.

        On |Φ+⟩ this family gives `S = 2(cosθ + sinθ)`; `theta = π/4` matches the corrected
        variant.
        """
        c, s = math.cos(theta), math.sin(theta)
        return cls(
            a1=OBS_X,
            b1=OBS_Z,
            a2=Observable(c, 0.0, -s, label=f"a2({theta:.6g})"),
            b2=Observable(c, 0.0, s, label=f"b2({theta:.6g})"),
            theta=theta,
        )


class OutcomePair(NamedTuple):
    """ Shift signs (±1) drawn at site 1 and site 2 for a single step. """
    s1: int
    s2: int


@dataclass(frozen=True)
class JointDistribution:
    """
    Probabilities of the four outcome pairs, stored in `OUTCOME_ORDER`
    (`++`, `+−`, `−+`, `−−`).  Index it as `dist[s1, s2]`.
    """
    probabilities: Tuple[float, float, float, float]

    def __post_init__(self):
        probabilities = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, 'probabilities', probabilities)

        if len(probabilities) != 4:
            raise BiphotonSynthError(f"Need 4 probabilities, got ({len(probabilities)}).")
        if any(p < 0.0 or p > 1.0 for p in probabilities):
            raise BiphotonSynthError(f"Probabilities out of [0, 1]: {probabilities}.")
        if abs(sum(probabilities) - 1.0) > STRUCTURAL_TOLERANCE:
            raise BiphotonSynthError(f"Probabilities don't sum to 1: {probabilities}.")

    def __getitem__(self, outcome: Tuple[int, int]) -> float:
        return self.probabilities[OUTCOME_ORDER.index(tuple(outcome))]

    @property
    def correlation(self) -> float:
        """ `Σ s1·s2·p(s1, s2)` """
        return sum(s1 * s2 * p for (s1, s2), p in zip(OUTCOME_ORDER, self.probabilities))

    def marginal_mean(self, site: int) -> float:
        """ Mean outcome at `site` (1 or 2), ie: `Σ s1·p(s1, ·)` for site 1. """
        return sum(pair[site - 1] * p for pair, p in zip(OUTCOME_ORDER, self.probabilities))

    @property
    def agreement(self) -> float:
        """ P(s1 = s2) """
        return self[1, 1] + self[-1, -1]

    def cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probabilities)
        # Guard against the last partial sum landing a hair under 1.
        cdf[-1] = 1.0
        return cdf

    def invert(self, uniforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Maps uniforms in [0, 1) to outcome pairs through the CDF; returns the `s1` and `s2`
        arrays (int8).
        """
        index = np.searchsorted(self.cdf(), uniforms, side='right')
        index = np.minimum(index, 3)
        order = np.array(OUTCOME_ORDER, dtype=np.int8)
        return order[index, 0], order[index, 1]


def _check_real(value: complex, what: str) -> float:
    if abs(value.imag) > SPECTRAL_TOLERANCE:
        raise BiphotonSynthError(f"{what} has imaginary part ({value.imag}); not Hermitian?")
    return float(value.real)


def expectation(state: BiphotonState, a: Observable, b: Observable) -> float:
    """ `⟨Ψ|A⊗B|Ψ⟩`, evaluated via the trace formula `tr((A⊗B)·ρ)`. """
    operator = np.kron(a.matrix, b.matrix)
    return _check_real(np.trace(operator @ state.density_matrix()), f"<{a}⊗{b}>")


def joint_distribution(state: BiphotonState, a: Observable, b: Observable) -> JointDistribution:
    """ Born rule: `p(s1, s2) = ⟨Ψ| (I+s1·A)/2 ⊗ (I+s2·B)/2 |Ψ⟩`. """
    vector = state.vector
    probabilities = []
    for s1, s2 in OUTCOME_ORDER:
        projector = np.kron(a.projector(s1), b.projector(s2))
        p = _check_real(np.vdot(vector, projector @ vector), f"p({s1:+d},{s2:+d})")
        # Rounding can leave an impossible (or certain) outcome a hair outside [0, 1].
        clipped = min(max(p, 0.0), 1.0)
        if abs(p - clipped) < STRUCTURAL_TOLERANCE:
            p = clipped
        probabilities.append(p)
    return JointDistribution(tuple(probabilities))


def sample(
        state: BiphotonState,
        a: Observable,
        b: Observable,
        rng: np.random.Generator
) -> OutcomePair:
    """ Emit one biphoton, measure `a` at site 1 and `b` at site 2; uses one `rng.random()`. """
    s1, s2 = joint_distribution(state, a, b).invert(np.array([rng.random()]))
    return OutcomePair(int(s1[0]), int(s2[0]))


def chsh(state: BiphotonState, settings: MeasurementSettings) -> float:
    """ `E(a1b2) + E(b1b2) + E(a1a2) − E(b1a2)` using quantum expectations. """
    return (
        expectation(state, settings.a1, settings.b2)
        + expectation(state, settings.b1, settings.b2)
        + expectation(state, settings.a1, settings.a2)
        - expectation(state, settings.b1, settings.a2)
    )
