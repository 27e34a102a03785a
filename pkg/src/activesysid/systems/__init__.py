from .base import SystemModel
from .double_integrator import DoubleIntegrator, discrete_double_integrator
from .pendulum import DampedPendulum
from .pursuit_lqr import PursuitEvasionLqr
from .pursuit_mpc import PursuitEvasionMpc
from .registry import SYSTEMS, make_system, system_descriptions

__all__ = [
    "SystemModel",
    "DoubleIntegrator",
    "discrete_double_integrator",
    "DampedPendulum",
    "PursuitEvasionLqr",
    "PursuitEvasionMpc",
    "SYSTEMS",
    "make_system",
    "system_descriptions",
]
