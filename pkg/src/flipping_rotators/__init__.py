"""Flipping-rotator Lorentz lattice gas on the honeycomb lattice."""

from .dynamics import RunOutcome, SimState, displacement_sq, reverse_step, run, step
from .engine import simulate
from .lattice import ORIGIN, FaceCoord, SiteCoord
from .medium import Medium, MediumSpec

__all__ = [
    "FaceCoord",
    "Medium",
    "MediumSpec",
    "ORIGIN",
    "RunOutcome",
    "SimState",
    "SiteCoord",
    "displacement_sq",
    "reverse_step",
    "run",
    "simulate",
    "step",
]
