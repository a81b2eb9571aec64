"""
Recovering from a sequence-number desync
========================================

In the SQN variants the home network refuses to trust a device whose counter
has fallen too far behind.  We push the network's counter 2**20 ahead, watch
the device answer with a resynchronisation message, and check that the next
run goes through.
"""

from aiot_aka import Basis, Indicator, Network, Variant

for indicator in Indicator:
    variant = Variant(Basis.SQN, indicator)
    net = Network(1, variant, seed=3)
    net.run_session()

    net.record.sqn_hn += 1 << 20
    print(variant, "gap:", net.record.sqn_hn - net.device.sqn_ue)

    s = net.run_session()
    print("  desynced run:", s.verdicts)
    print("  counters equal afterwards:", net.record.sqn_hn == net.device.sqn_ue)

    s = net.run_session()
    print("  next run:", s.verdicts)
