"""n-sync distributed learning: learner numerics and per-round timing.

The communication payload (``model_bytes``) and the learner dimension are
decoupled: rounds move ``4 * P`` bytes over the radio while the numerics run
on a small least-squares problem whose optimum is known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class LearnerDivergence(RuntimeError):
    pass


def required_uploads(n_devices: int, eta: float | None = None, n: int | None = None) -> int:
    """``n`` from ``eta = n/N``, rounding up; both given must agree."""
    if eta is not None and not (0 < eta <= 1):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    from_eta = math.ceil(round(eta * n_devices, 9)) if eta is not None else None
    if n is not None and from_eta is not None and n != from_eta:
        raise ValueError(f"n={n} inconsistent with eta={eta} for N={n_devices} (gives {from_eta})")
    out = n if n is not None else (from_eta if from_eta is not None else n_devices)
    if n_devices > 0 and not (1 <= out <= n_devices):
        raise ValueError(f"need 1 <= n <= N, got n={out}, N={n_devices}")
    return out


@dataclass
class LearnerProblem:
    """Per-device least squares ``f_i(w) = 0.5 * ||A_i w - b_i||^2``."""

    A: list[np.ndarray]
    b: list[np.ndarray]

    @property
    def n_devices(self) -> int:
        return len(self.A)

    @property
    def dim(self) -> int:
        return self.A[0].shape[1]

    def loss(self, i: int, w: np.ndarray) -> float:
        r = self.A[i] @ w - self.b[i]
        return 0.5 * float(r @ r)

    def grad(self, i: int, w: np.ndarray) -> np.ndarray:
        return self.A[i].T @ (self.A[i] @ w - self.b[i])

    def hessian(self) -> np.ndarray:
        return sum(a.T @ a for a in self.A) / self.n_devices

    def minimizer(self) -> np.ndarray:
        rhs = sum(a.T @ bb for a, bb in zip(self.A, self.b)) / self.n_devices
        return np.linalg.solve(self.hessian(), rhs)

    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.hessian())[-1])

    @classmethod
    def random(cls, n_devices: int, dim: int = 10, rows: int = 20, rng=None,
               heterogeneity: float = 1.0) -> "LearnerProblem":
        rng = rng if rng is not None else np.random.default_rng(0)
        w_true = rng.normal(size=dim)
        A, b = [], []
        for _ in range(n_devices):
            a = rng.normal(size=(rows, dim)) / math.sqrt(rows)
            shift = heterogeneity * rng.normal(size=dim)
            A.append(a)
            b.append(a @ (w_true + shift) + 0.1 * rng.normal(size=rows))
        return cls(A, b)

    @classmethod
    def scalar(cls, targets: Sequence[float]) -> "LearnerProblem":
        """``f_i(w) = 0.5 * (w - b_i)^2`` in one dimension."""
        return cls([np.ones((1, 1)) for _ in targets], [np.array([float(t)]) for t in targets])


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise LearnerDivergence(f"non-finite {what}: {x}")
    return x


def local_update(problem: LearnerProblem, i: int, w: np.ndarray, mode: str = "gradient",
                 step_size: float = 0.5, local_steps: int = 1) -> np.ndarray:
    """What device ``i`` uploads: its gradient, or its model after local GD steps."""
    w = np.asarray(w, dtype=float)
    if mode == "gradient":
        return _check_finite(problem.grad(i, w), f"gradient of device {i}")
    if mode == "fedavg":
        v = w.copy()
        for _ in range(local_steps):
            v = v - step_size * problem.grad(i, v)
        return _check_finite(v, f"local model of device {i}")
    raise ValueError(f"unknown learner mode {mode!r}")


def global_update(w: np.ndarray, uploads: Sequence[np.ndarray], mode: str = "gradient",
                  step_size: float = 0.5) -> np.ndarray:
    if not uploads:
        raise ValueError("global update needs at least one upload")
    total = np.sum(np.stack([np.asarray(c, dtype=float) for c in uploads]), axis=0)
    if mode == "gradient":
        out = np.asarray(w, dtype=float) - step_size * total / len(uploads)
    elif mode == "fedavg":
        out = total / len(uploads)
    else:
        raise ValueError(f"unknown learner mode {mode!r}")
    return _check_finite(out, "global model")


def convergence_check(w: np.ndarray, problem: LearnerProblem, tol: float) -> tuple[bool, float]:
    dist = float(np.linalg.norm(np.asarray(w, dtype=float) - problem.minimizer()))
    return dist <= tol, dist


def iteration_delay(completion_s: Sequence[float], n: int, master_compute_s: float = 0.0) -> float:
    """Per-iteration training delay.

    The min over size-``n`` subsets of the per-subset max completion time is
    the ``n``-th smallest completion; the master compute time is the same
    for every device so it is added once.
    """
    if n < 1 or len(completion_s) < n:
        raise ValueError(f"need at least n={n} completed uploads, have {len(completion_s)}")
    return sorted(completion_s)[n - 1] + master_compute_s


@dataclass
class DeviceRound:
    device_id: int
    dl_done: float | None = None   # d^D, seconds after round start
    compute: float | None = None   # d^pr
    ul: float | None = None        # d^U
    in_first_n: bool = False

    @property
    def total(self) -> float | None:
        if self.ul is None:
            return None
        return self.dl_done + self.compute + self.ul


@dataclass
class RoundState:
    k: int
    start: int  # ns
    n_required: int
    devices: dict[int, DeviceRound] = field(default_factory=dict)
    received: list[int] = field(default_factory=list)
    first_n: tuple[int, ...] | None = None
    uploads: dict[int, np.ndarray] = field(default_factory=dict)
    update_time: int | None = None
    delay_s: float | None = None

    def completed(self) -> list[float]:
        return [d.total for d in self.devices.values() if d.total is not None]

    def record_upload(self, device_id: int) -> bool:
        """Adds to the received set; returns True when this upload fills the first-n set."""
        if self.first_n is not None:
            return False
        self.received.append(device_id)
        self.devices[device_id].in_first_n = True
        if len(self.received) == self.n_required:
            self.first_n = tuple(self.received)
            return True
        return False
