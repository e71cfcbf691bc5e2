"""One coexistence run: ten URLLC devices sharing the cell with a training workflow.

Compares a URLLC-only run with a run where 10 AI devices exchange a
0.5M-parameter model, for the same seed (same URLLC placement).

Run: python3 demos/05_coexistence_run.py      (a few seconds)
"""

from coexsim import desk_profile, run_scenario
from coexsim.metrics import percentile

horizon = 5.0
for N in (0, 10):
    cfg = desk_profile(sim__duration_s=horizon, fl__n_devices=N)
    r = run_scenario(cfg, seed=1)
    a = r.availability_samples
    print(f"\nN={N}: availability median {percentile(a, 0.5):.4f}, worst {min(a):.4f}")
    c = r.counters
    print(f"  URLLC packets {c['urllc_generated']}, late or lost {c['urllc_failed']}; "
          f"transport blocks {c.get('tb_tx', 0)}, decode errors {c.get('tb_err', 0)}")
    for row in r.ai_rows:
        print(f"  round {row['round_k']}: {row['d_k_ai_s']:.3f} s, "
              f"{row['n_received_at_update']} uploads in, distance to optimum {row['dist_to_wstar']:.3f}")
