"""Deterministic headless simulation harness.

Drives the relay core and client replicas from scripted or seeded
scenarios, on a virtual clock (bit-reproducible) or over real loopback
sockets, and checks session invariants along the way.
"""

from .scenario import Scenario, generate_fuzz, load_scenario
from .runner import run_scenario

__all__ = ["Scenario", "generate_fuzz", "load_scenario", "run_scenario"]
