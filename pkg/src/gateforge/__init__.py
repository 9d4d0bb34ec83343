"""Pulse design and verification for fast global entangling gates on ion chains."""

from gateforge.chain import ChainConfig, ModeStructure, normal_modes
from gateforge.dynamics import GateReport, GateTarget, gate_report, infidelity, phase_scan, robust_infidelity
from gateforge.fourier import InfeasibleError, build_constraints, reduce, three_qubit_bound_scan, two_qubit_optimal
from gateforge.io import TOOL_VERSION as __version__
from gateforge.waveform import FourierWaveform, SegmentedWaveform, sample_naive, sample_sinc

__all__ = [
    "ChainConfig",
    "FourierWaveform",
    "GateReport",
    "GateTarget",
    "InfeasibleError",
    "ModeStructure",
    "SegmentedWaveform",
    "build_constraints",
    "gate_report",
    "infidelity",
    "normal_modes",
    "phase_scan",
    "reduce",
    "robust_infidelity",
    "sample_naive",
    "sample_sinc",
    "three_qubit_bound_scan",
    "two_qubit_optimal",
]
