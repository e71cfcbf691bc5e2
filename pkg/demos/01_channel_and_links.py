"""Where devices land, which sector serves them, and what the links can carry.

Run: python3 demos/01_channel_and_links.py
"""

import numpy as np

from coexsim.engine import RngFactory
from coexsim.radio import (MCS_TABLE, CellGeometry, Position, RadioParams, bler, draw_link,
                           path_loss_db, select_mcs, tb_capacity)

params = RadioParams()
geom = CellGeometry()

# Path loss grows with 21.5 dB per decade of distance from a 39.72 dB reference at 1 m.
for d in (1, 5, 10, 20):
    print(f"path loss at {d:>2} m: {path_loss_db(d, params):6.2f} dB")

# Draw ten devices the same way the simulator does: one random stream per device label.
rngs = RngFactory(0)
links = []
for i in range(10):
    rng = rngs.stream(f"placement/demo/{i}")
    pos = Position(rng.random() * 15, rng.random() * 15, geom.device_height)
    links.append(draw_link(i, pos, geom, params, rngs.stream(f"link/demo/{i}")))

print("\ndevice  cell  blocked  shadowing  gain to serving sector")
for ln in links:
    serving = ln.path_gain_db + ln.sector_gain_db[ln.serving_cell]
    print(f"{ln.device_id:>6}  {ln.serving_cell:>4}  {str(ln.blocked):>7}  {ln.shadowing_db:7.2f} dB  {serving:8.2f} dB")

# Link adaptation: URLLC aims for 1% block errors, AI traffic for 10%,
# so at the same SINR URLLC picks a lower MCS and carries fewer bits per PRB.
print("\nSINR   MCS(AI)  MCS(URLLC)  bits in 10 PRBs (AI / URLLC)")
for sinr in np.arange(-5, 26, 5):
    ai, ur = select_mcs(sinr, 0.1), select_mcs(sinr, 0.01)
    print(f"{sinr:4.0f}   {ai.index:>5}  {ur.index:>9}    {tb_capacity(10, ai):>6} / {tb_capacity(10, ur)}")

m = MCS_TABLE[6]
print(f"\nBLER of MCS {m.index} at its 50% point and 2 dB above: "
      f"{bler(m.snr50_db, m):.3f}, {bler(m.snr50_db + 2, m):.4f}")
