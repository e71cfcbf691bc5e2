"""From packet outcomes to availability: the survival-time filter.

A URLLC application tolerates outages shorter than its survival time.
The network state X drops at each missed deadline and recovers at the next
on-time delivery; the application state Y only drops once X has stayed
down for longer than the survival time.

Run: python3 demos/03_availability.py
"""

from coexsim.engine import ms
from coexsim.metrics import StateTrace, apply_survival, availability, combine_and, percentile, requirement_check

T = ms(1000)
t_sv = ms(5)

# Two outages: a 4 ms blip (masked) and a 30 ms burst (only 25 ms counts).
x = StateTrace.from_zero_intervals(T, [(ms(100), ms(104)), (ms(500), ms(530))])
y = apply_survival(x, t_sv)
print("X zero runs:", [(u / 1e6, v / 1e6) for u, v in x.zero_intervals()], "ms")
print("Y zero runs:", [(u / 1e6, v / 1e6) for u, v in y.zero_intervals()], "ms")
print(f"availability without filter {availability(x):.4f}, with {t_sv / 1e6:.0f} ms survival {availability(y):.4f}")

# A device is up only if both directions are up.
dl = apply_survival(StateTrace.from_zero_intervals(T, [(ms(520), ms(560))]), t_sv)
print(f"UL {availability(y):.4f}  DL {availability(dl):.4f}  combined {availability(combine_and(y, dl)):.4f}")

# The requirement looks at the pooled distribution over devices and seeds:
# at most a fraction gamma of samples may sit at or below a_req.
samples = [0.999] * 95 + [0.97] * 4 + [0.93]
r = requirement_check(samples, a_req=0.95, gamma=0.01)
print(f"1st percentile {percentile(samples, 0.01)}, median {percentile(samples, 0.5)}, "
      f"violation probability {r.violation_prob:.2f}, requirement met: {r.passed}")
