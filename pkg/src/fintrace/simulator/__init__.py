"""Goal-driven simulator of customer behavior in a bank environment."""

from .engine import SimConfig, SimResult, batch_configs, run_batch, simulate
from .goals import BehaviorProfile, criminal_profile, standard_profile
from .domainfile import load_domain, load_plan_library
from .executor import execute_step

__all__ = [
    "SimConfig",
    "SimResult",
    "batch_configs",
    "run_batch",
    "simulate",
    "BehaviorProfile",
    "criminal_profile",
    "standard_profile",
    "load_domain",
    "load_plan_library",
    "execute_step",
]
