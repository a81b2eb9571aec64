"""Lightweight authentication and key agreement for ambient-power IoT devices.

Submodules:

``crypto``      f1/f5 family, HMAC KDF, Ascon-128, AES-CBC + CMAC, op metering
``registry``    UDM subscription records, device state, relay-UE mappings
``messages``    byte-exact wire messages and protocol variants
``protocol``    device, access node, AMF and UDM state machines
``sim``         four-scenario network simulator with a wireless adversary
``attacks``     security property battery
``baselines``   device-side cost ledgers for the compared protocols
``costs``       time, energy and budget model, comparison tables
``cli``         ``aiot-aka`` command
"""

__version__ = "0.1.0"

from .baselines import CostLedger, ledger_for, ledger_from_transcript
from .costs import Calibration, EnergyEnv, budget_ratio, comparison_tables, energy_of, time_of
from .messages import ALL_VARIANTS, Basis, Indicator, Variant
from .protocol import Mutation
from .sim import Network, Scenario, Topology, run_honest, run_with_adversary

__all__ = [
    "ALL_VARIANTS", "Basis", "Calibration", "CostLedger", "EnergyEnv", "Indicator", "Mutation",
    "Network", "Scenario", "Topology", "Variant", "budget_ratio", "comparison_tables",
    "energy_of", "ledger_for", "ledger_from_transcript", "run_honest", "run_with_adversary",
    "time_of",
]
