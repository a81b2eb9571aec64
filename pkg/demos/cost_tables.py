"""
Computational cost and energy
=============================

Device-side work is tallied per operation class and converted into time on a
4 MHz microcontroller, then into energy at two harvesting power levels and as
a share of two capacitor budgets.
"""

from aiot_aka import ALL_VARIANTS, Calibration, EnergyEnv, ledger_for, ledger_from_transcript, run_honest
from aiot_aka.costs import comparison_tables, time_of

tables = comparison_tables()
print(tables.time_markdown())
print(tables.energy_markdown())

# the ledgers behind the proposed rows are not just transcribed: an executed
# run charges exactly the same operations
tr = run_honest(1, ALL_VARIANTS[1], seed=0)
print(ledger_from_transcript(tr, protocol="SQN-ASCON"))
print(ledger_for("SQN-ASCON"))

# a faster clock simply rescales every entry
fast = Calibration().with_clock(16e6)
for name in ("5G-AKA", "SQN-AES", "SQN-ASCON"):
    print(f"{name:10} {time_of(ledger_for(name)):.4f}s at 4 MHz, "
          f"{time_of(ledger_for(name), fast):.4f}s at 16 MHz")

# a different environment, full precision
print(comparison_tables(env=EnergyEnv((50e-6,), (1e-3,)), rounded=False).energy_markdown())
