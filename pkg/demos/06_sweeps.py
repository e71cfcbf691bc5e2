"""The two sweep designs, at a size that finishes in a few seconds.

eval1 keeps the population N fixed and varies the fraction eta of uploads
awaited; eval2 keeps the number of awaited uploads n fixed and grows N.
Results go to CSV files and a summary table, the same as the ``sweep``
command line.

Run: python3 demos/06_sweeps.py [out_dir]
"""

import sys
import tempfile
from pathlib import Path

from coexsim import desk_profile
from coexsim.experiments import eval1_specs, eval2_specs, format_summary, run_specs, summarize_results, write_results

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="coexsim-"))
base = desk_profile(sim__duration_s=3.0)

specs = eval1_specs(base, N=12, eta_list=[0.5, 1.0], seeds=2)
results = run_specs(specs)
print("eval1, N=12:\n" + format_summary(summarize_results(results)))

specs2 = eval2_specs(base, n=6, N_list=[6, 12], seeds=2)
results2 = run_specs(specs2)
print("\neval2, n=6:\n" + format_summary(summarize_results(results2)))

write_results(specs + specs2, results + results2, out)
print(f"\nCSV files written to {out}")
