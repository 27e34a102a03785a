"""Name-based registry of the shipped systems."""

from __future__ import annotations

from .base import SystemModel
from .double_integrator import DoubleIntegrator
from .pendulum import DampedPendulum
from .pursuit_lqr import PursuitEvasionLqr
from .pursuit_mpc import PursuitEvasionMpc

__all__ = ["SYSTEMS", "make_system", "system_descriptions"]

SYSTEMS: dict[str, type[SystemModel]] = {
    "double_integrator": DoubleIntegrator,
    "damped_pendulum": DampedPendulum,
    "pe_lqr": PursuitEvasionLqr,
    "pe_mpc": PursuitEvasionMpc,
}


def make_system(name: str, **overrides) -> SystemModel:
    if name not in SYSTEMS:
        known = ", ".join(sorted(SYSTEMS))
        raise KeyError(f"unknown system {name!r}; known systems: {known}")
    return SYSTEMS[name](**overrides)


def system_descriptions() -> list[tuple[str, str]]:
    """(name, theta layout) pairs for each registered system."""
    return [(name, cls().theta_layout()) for name, cls in SYSTEMS.items()]
