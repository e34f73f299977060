"""
## Distributed chain synthesis under one-way biphoton control

Two polymer chains grow at two distant sites; a CPU steers the shift sign of every
attachment without waiting on the sites.  Classical control (shared randomness) glues at most
3/4 of the overlaid positions; a biphoton controller reaches (2+√2)/4 ≈ 0.8536.

Important modules:

- `biphoton_synth.quantum`: two-qubit kernel (observables, Born rule, sampling, CHSH).
- `biphoton_synth.assembly`: chains and gluing rules.
- `biphoton_synth.strategy`: classical and quantum controllers, exact values, Monte Carlo.
- `biphoton_synth.distsim`: the timed one-way / two-way control timeline.
- `biphoton_synth.cli`: the `biphoton-synth` command.
"""
from .assembly import Chain, MonoblockType, OverlayReport, SegmentPair, Shift, overlay
from .distsim import ControlMode, SimulationResult, TimelineConfig, compare_modes, run_timeline
from .errors import BiphotonSynthError
from .quantum import BiphotonState, MeasurementSettings, Observable, SettingsVariant
from .settings import SynthSettings
from .strategy import (
    DeterministicStrategy, QuantumStrategy, RandomizedClassicalStrategy, exact_value,
    parse_strategy, run_assembly
)

# Only these should be imported from here externally.
__all__ = (
    'BiphotonState',
    'BiphotonSynthError',
    'Chain',
    'ControlMode',
    'DeterministicStrategy',
    'MeasurementSettings',
    'MonoblockType',
    'Observable',
    'OverlayReport',
    'QuantumStrategy',
    'RandomizedClassicalStrategy',
    'SegmentPair',
    'SettingsVariant',
    'Shift',
    'SimulationResult',
    'SynthSettings',
    'TimelineConfig',
    'compare_modes',
    'exact_value',
    'overlay',
    'parse_strategy',
    'run_assembly',
    'run_timeline',
)
