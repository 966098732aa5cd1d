"""Adaptive output regulation with an extended-state observer.

The package bundles the regulator itself (``regulator``), its
nonlinearities, plant and exosystem models, a fixed-step simulator,
grid-based assumption checkers and a scenario-driven command line tool.
"""
from .errors import (
    ConfigurationError,
    GainValidationError,
    NonFiniteStateError,
    SimulationFault,
    SingularInputError,
)
from .models import CompactSets, SystemModel, available_models, example_model, get_model, register_model
from .nonlinearities import BoundConstants, DeadZoneParams, SatParams, SampleBox, dz, sat
from .prime import build_Fe, default_observer_gains, gain_scaling, prime_triplet, routh_hurwitz
from .regulator import RegulatorGains, RegulatorState
from .simulate import ConvergenceReport, SimConfig, Trajectory, run, sweep

__version__ = "0.1.0"
