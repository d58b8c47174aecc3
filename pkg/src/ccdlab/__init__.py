"""Simulation and analysis of qubits under concatenated continuous driving."""

from .model import (
    DriveConfig,
    Frame,
    InhomogeneityModel,
    KET0,
    KET1,
    Lorentzian,
    Modulation,
    NoisePSDSet,
    QubitState,
    StaticGaussian,
    Sum,
    White,
)
from .evolution import TimeGrid, Trajectory, evolve, propagate

__all__ = [
    "DriveConfig", "Frame", "InhomogeneityModel", "KET0", "KET1", "Lorentzian", "Modulation", "NoisePSDSet",
    "QubitState", "StaticGaussian", "Sum", "White", "TimeGrid", "Trajectory", "evolve", "propagate",
]
__version__ = "0.1.0"
