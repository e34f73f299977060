from __future__ import annotations

import math

import numpy as np
import pytest

from biphoton_synth.errors import BiphotonSynthError
from biphoton_synth.quantum import BiphotonState
from biphoton_synth.strategy import CLASSICAL_BOUND, QUANTUM_VALUE
from biphoton_synth.sweep import angle_grid, sweep, sweep_point


def test_sweep_peaks_at_quarter_pi():
    points = sweep(0.0, math.pi / 2, 91)
    assert len(points) == 91
    best = max(points, key=lambda p: p.noncr)
    assert best.theta == pytest.approx(math.pi / 4, abs=1e-12)
    assert best.noncr == pytest.approx(QUANTUM_VALUE, abs=1e-12)
    assert best.chsh_S == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_sweep_ends_at_classical_value():
    points = sweep(0.0, math.pi / 2, 91)
    assert points[0].noncr == pytest.approx(CLASSICAL_BOUND, abs=1e-12)
    assert points[-1].noncr == pytest.approx(CLASSICAL_BOUND, abs=1e-12)


def test_sweep_is_concave():
    noncr = np.array([p.noncr for p in sweep(0.0, math.pi / 2, 91)])
    assert (np.diff(noncr, 2) <= 1e-12).all()


def test_sweep_point_closed_form():
    for theta in (0.1, 0.7, 1.3):
        point = sweep_point(theta)
        assert point.noncr == pytest.approx(0.5 + (math.cos(theta) + math.sin(theta)) / 4)


def test_sweep_on_singlet_flips_sign():
    point = sweep_point(math.pi / 4, BiphotonState.singlet())
    assert point.chsh_S == pytest.approx(-2 * math.sqrt(2), abs=1e-12)
    assert point.noncr == pytest.approx((2 - math.sqrt(2)) / 4, abs=1e-12)


def test_angle_grid():
    assert angle_grid(0.3, 0.9, 1).tolist() == [0.3]
    grid = angle_grid(0.0, 1.0, 5)
    assert grid.tolist() == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(BiphotonSynthError):
        angle_grid(0.0, 1.0, 0)
    with pytest.raises(BiphotonSynthError):
        angle_grid(0.0, math.nan, 3)
