"""Symmetric periodic orbits of a satellite moving with the super-eight choreography."""
from .dynamics import GRAVITY, CollisionError, PotentialLaw, SystemState
from .integrate import IntegratorConfig, Trajectory, propagate, propagate_bodies

__version__ = "0.1.0"

__all__ = [
    "GRAVITY",
    "CollisionError",
    "IntegratorConfig",
    "PotentialLaw",
    "SystemState",
    "Trajectory",
    "propagate",
    "propagate_bodies",
    "__version__",
]
