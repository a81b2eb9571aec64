"""
Attacking the protocols
=======================

The wireless hops are controlled by an adversary that can drop, replay,
tamper with or inject messages.  The battery below runs each property check
against the honest build and against a build whose AMF skips MAC
verification.
"""

from aiot_aka import ALL_VARIANTS, Mutation
from aiot_aka.attacks import attack_suite

variant = ALL_VARIANTS[0]
print(attack_suite(variant, seed=0).to_text())

# the broken build must be caught
broken = attack_suite(variant, seed=0, mutation=Mutation.SKIP_MAC_VERIFY.value,
                      properties=["tamper", "impersonation", "mitm"])
print(broken.to_text())

# a hand-written script: flip one bit of the device's response in flight
from aiot_aka.sim import Tamper, run_with_adversary

tr = run_with_adversary(1, variant, seed=0, script={7: Tamper(5, 0x01)})
print(tr.dump())
