from __future__ import annotations

import math
from dataclasses import dataclass
from logging import getLogger
from typing import List

import numpy as np

from . import quantum
from .errors import BiphotonSynthError
from .quantum import BiphotonState, MeasurementSettings

log = getLogger(__name__)


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    chsh_S: float
    noncr: float


def sweep_point(theta: float, state: BiphotonState = None) -> SweepPoint:
    """ Quality of the `MeasurementSettings.at_angle(theta)` controller. """
    s = quantum.chsh(state or BiphotonState.phi_plus(), MeasurementSettings.at_angle(theta))
    return SweepPoint(theta=theta, chsh_S=s, noncr=(1 + s / 4) / 2)


def angle_grid(start: float, stop: float, points: int) -> np.ndarray:
    """ `points` evenly spaced angles from `start` to `stop`, both ends included. """
    if points < 1:
        raise BiphotonSynthError(f"points must be >= 1, got ({points}).")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise BiphotonSynthError(f"Sweep range must be finite, got ({start}, {stop}).")
    if points == 1:
        return np.array([start])
    return np.linspace(start, stop, points)


def sweep(start: float, stop: float, points: int, state: BiphotonState = None) -> List[SweepPoint]:
    grid = angle_grid(start, stop, points)
    log.debug(f"Sweeping site-2 angle over ({points}) points in [{start}, {stop}].")
    return [sweep_point(float(theta), state) for theta in grid]
