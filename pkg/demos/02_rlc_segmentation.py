"""How a 2 MB model update crosses the radio: segmentation, AM recovery, UM loss.

Run: python3 demos/02_rlc_segmentation.py
"""

from coexsim.rlc import AmEntity, Outcome, Reassembler, RlcSdu, UmEntity, segment

# A 2,000,000-byte model with a 9,000-byte transport-block budget and a 5-byte header.
pdus = segment(2_000_000, 9_000)
print(f"{len(pdus)} segments; first {pdus[0].length} B, last {pdus[-1].length} B")

# Acknowledged mode: a lost segment goes to the retransmission queue and is
# sent again before any new data. Here the first segment is lost twice.
tx, rx = AmEntity(), Reassembler(in_order=True)
for i, size in enumerate((30_000, 12_000)):
    sdu = RlcSdu(i, "AI", size, enqueue_time=0)
    tx.enqueue_sdu(sdu)
    rx.expect(sdu)

losses = {(0, 0): 2}
t = 0
while tx.has_data():
    pdu = tx.next_pdu(9_000)
    t += 1
    key = (pdu.sdu_id, pdu.offset)
    if losses.get(key, 0) > 0:
        losses[key] -= 1
        print(f"t={t:>2}  sdu {pdu.sdu_id} offset {pdu.offset:>6} lost -> {tx.on_pdu_outcome(pdu, False).value}")
        continue
    tx.on_pdu_outcome(pdu, True)
    for done in rx.reassemble(pdu, t):
        print(f"t={t:>2}  sdu {done.sdu_id} delivered ({done.size_bytes} B)")

# Eight losses of the same range exhaust AM and the SDU is reported failed.
am = AmEntity()
am.enqueue_sdu(RlcSdu(0, "AI", 100, 0))
outcome = None
for _ in range(8):
    outcome = am.on_pdu_outcome(am.next_pdu(200), False)
print("after 8 losses:", outcome.value)

# Unacknowledged mode (URLLC) never retransmits: a lost PDU is gone.
um = UmEntity()
um.enqueue_sdu(RlcSdu(0, "URLLC", 64, 0))
p = um.next_pdu(200)
print("UM loss outcome:", um.on_pdu_outcome(p, False).value, "| data left:", um.has_data())
assert outcome is Outcome.SDU_FAILED
