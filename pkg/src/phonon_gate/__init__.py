"""Simulation of an ion-atom CNOT gate driven by Rydberg-induced phonon blockade."""

__version__ = "0.1.0"

from .physics import PhysicalParams, TrapShift, trap_shift  # noqa: E402
from .protocol import GateReport, ProtocolOptions, run_cnot  # noqa: E402

__all__ = ["PhysicalParams", "TrapShift", "trap_shift", "GateReport", "ProtocolOptions", "run_cnot", "__version__"]
