"""n-sync training: wait for the first n of N uploads, then update.

Run: python3 demos/04_n_sync_training.py
"""

import numpy as np

from coexsim.fl import LearnerProblem, convergence_check, global_update, iteration_delay, local_update

# Per-iteration delay is the n-th fastest device's completion time plus the
# master's compute time. Waiting for fewer devices cuts the straggler tail.
rng = np.random.default_rng(3)
completion = rng.gamma(4.0, 0.5, size=20)
for n in (5, 10, 15, 20):
    print(f"n={n:>2} of 20: iteration delay {iteration_delay(completion, n, 0.02):.3f} s")

# The learner: least squares split across devices, plain gradient steps.
prob = LearnerProblem.random(10, dim=5, rng=rng)
step = 1.0 / prob.smoothness()
for n in (2, 5, 10):
    w = np.zeros(5)
    for k in range(60):
        chosen = rng.choice(10, n, replace=False)   # stand-in for "first n to arrive"
        w = global_update(w, [local_update(prob, i, w) for i in chosen], "gradient", step)
    _, dist = convergence_check(w, prob, 0.0)
    print(f"n={n:>2}: distance to optimum after 60 iterations {dist:.2e}")

# Fewer uploads per iteration means noisier averaged gradients.
w = rng.normal(size=5)
grads = np.array([prob.grad(i, w) for i in range(10)])
for n in (2, 5, 8, 10):
    means = np.array([grads[rng.choice(10, n, replace=False)].mean(axis=0) for _ in range(5000)])
    print(f"n={n:>2}: gradient-noise variance {means.var(axis=0).sum():.4f}")
