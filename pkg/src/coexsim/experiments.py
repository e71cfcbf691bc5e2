"""Sweep harness (fixed-N and fixed-n sweeps), CSV emission and summaries."""

from __future__ import annotations

import csv
import logging
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .config import ScenarioConfig, dump_config
from .fl import required_uploads
from .metrics import box_stats, percentile, requirement_check
from .scenario import RunResult, run_scenario

log = logging.getLogger(__name__)

DEFAULT_ETAS = (0.4, 0.6, 0.8, 1.0)

URLLC_COLUMNS = ("run_id", "seed", "N", "eta", "n", "model_bytes", "device_id",
                 "avail_ul", "avail_dl", "avail_combined")
AI_COLUMNS = ("run_id", "seed", "N", "eta", "n", "model_bytes", "round_k", "d_k_ai_s",
              "n_received_at_update", "dist_to_wstar")
DETAIL_COLUMNS = ("run_id", "round_k", "device_id", "d_dl_s", "d_compute_s", "d_ul_s", "in_first_n")
MANIFEST_COLUMNS = ("run_id", "seed", "config_hash", "N", "eta", "n", "model_bytes")

OUTPUT_FILES = ("kpi_urllc.csv", "kpi_ai.csv", "ai_round_detail.csv", "run_manifest.csv")


@dataclass(frozen=True)
class RunSpec:
    cfg: ScenarioConfig
    seed: int


def seed_list(cfg: ScenarioConfig, count: int | None = None) -> list[int]:
    n = cfg.sim.seeds if count is None else count
    return [cfg.sim.base_seed + i for i in range(n)]


def eval1_specs(cfg: ScenarioConfig, N: int, eta_list: Sequence[float] = DEFAULT_ETAS,
                seeds: Iterable[int] | int | None = None) -> list[RunSpec]:
    """Fixed population ``N``; one run per (eta, seed)."""
    if N < 1:
        raise ValueError("a fixed-N sweep needs N >= 1")
    for eta in eta_list:
        if not (0 < eta <= 1):
            raise ValueError(f"eta must lie in (0, 1], got {eta}")
    seeds = _seeds(cfg, seeds)
    return [RunSpec(cfg.with_updates(fl__n_devices=N, fl__eta=float(eta), fl__n=None), s)
            for eta in eta_list for s in seeds]


def eval2_specs(cfg: ScenarioConfig, n: int, N_list: Sequence[int],
                seeds: Iterable[int] | int | None = None) -> list[RunSpec]:
    """Fixed number of awaited uploads ``n``; one run per (N, seed)."""
    if not N_list:
        raise ValueError("N_list is empty")
    if min(N_list) < n:
        raise ValueError(f"every N must be >= n={n}, got {sorted(N_list)}")
    seeds = _seeds(cfg, seeds)
    out = []
    for N in N_list:
        required_uploads(N, None, n)
        out.extend(RunSpec(cfg.with_updates(fl__n_devices=N, fl__n=n, fl__eta=None), s) for s in seeds)
    return out


def _seeds(cfg: ScenarioConfig, seeds) -> list[int]:
    if seeds is None or isinstance(seeds, int):
        return seed_list(cfg, seeds)
    return [int(s) for s in seeds]


def _execute(spec: RunSpec) -> RunResult:
    return run_scenario(spec.cfg, spec.seed)


def run_specs(specs: Sequence[RunSpec], workers: int = 1) -> list[RunResult]:
    """Run every spec; results come back in spec order whatever the worker count."""
    if workers <= 1 or len(specs) <= 1:
        return [_execute(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute, specs))


def sweep_eval1(cfg, N, eta_list=DEFAULT_ETAS, seeds=None, workers: int = 1) -> list[RunResult]:
    return run_specs(eval1_specs(cfg, N, eta_list, seeds), workers)


def sweep_eval2(cfg, n, N_list, seeds=None, workers: int = 1) -> list[RunResult]:
    return run_specs(eval2_specs(cfg, n, N_list, seeds), workers)


# ---------------------------------------------------------------- CSV output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _write(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> int:
    count = 0
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
            count += 1
    return count


def _run_fields(r: RunResult) -> dict:
    return {"run_id": r.run_id, "seed": r.seed, "N": r.N, "eta": r.eta, "n": r.n,
            "model_bytes": r.model_bytes}


def emit_csv(results: Sequence[RunResult], out_dir: str | Path,
             configs: dict[str, ScenarioConfig] | None = None) -> list[Path]:
    """Write the KPI files plus manifest and config echoes into ``out_dir``.

    Files are assembled in a scratch directory and moved into place only
    once all of them are complete, so a failure leaves no partial output.
    Rows are sorted by run id so output does not depend on run order.
    """
    if not results:
        raise ValueError("no results to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(results, key=lambda r: (r.run_id, r.config_hash))
    ids = [r.run_id for r in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate run ids in result set")

    written: list[Path] = []
    scratch = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    try:
        _write(scratch / "kpi_urllc.csv", URLLC_COLUMNS,
               ({**_run_fields(r), **row} for r in ordered for row in r.urllc_rows))
        _write(scratch / "kpi_ai.csv", AI_COLUMNS,
               ({**_run_fields(r), **row} for r in ordered for row in r.ai_rows))
        _write(scratch / "ai_round_detail.csv", DETAIL_COLUMNS,
               ({"run_id": r.run_id, **row} for r in ordered for row in r.detail_rows))
        _write(scratch / "run_manifest.csv", MANIFEST_COLUMNS,
               ({**_run_fields(r), "config_hash": r.config_hash} for r in ordered))
        names = list(OUTPUT_FILES)
        for h, cfg in sorted((configs or {}).items()):
            if cfg.config_hash() != h:
                raise ValueError(f"config echo hash mismatch for {h}")
            name = f"config_{h}.yaml"
            (scratch / name).write_text(dump_config(cfg), encoding="utf-8")
            names.append(name)
        for name in names:
            target = out / name
            shutil.move(str(scratch / name), target)
            written.append(target)
    except OSError:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return written


def write_results(specs: Sequence[RunSpec], results: Sequence[RunResult], out_dir) -> list[Path]:
    configs = {s.cfg.config_hash(): s.cfg for s in specs}
    return emit_csv(results, out_dir, configs)


# ---------------------------------------------------------------- summaries

@dataclass
class PointSummary:
    N: int
    eta: float
    n: int
    model_bytes: int
    runs: int
    devices: int
    median_avail: float
    p1_avail: float
    requirement_met: bool
    violation_prob: float
    rounds: int
    delay_box: object | None


def summarize(urllc_rows: Sequence[dict], ai_rows: Sequence[dict], a_req: float = 0.95,
              gamma: float = 0.01) -> list[PointSummary]:
    """Pool device samples per sweep point (N, eta, n, model_bytes) across seeds."""
    def key(row):
        return (int(row["N"]), round(float(row["eta"]), 12), int(row["n"]), int(row["model_bytes"]))

    avail: dict[tuple, list[float]] = {}
    runs: dict[tuple, set] = {}
    for row in urllc_rows:
        avail.setdefault(key(row), []).append(float(row["avail_combined"]))
        runs.setdefault(key(row), set()).add(row["run_id"])
    delays: dict[tuple, list[float]] = {}
    for row in ai_rows:
        delays.setdefault(key(row), []).append(float(row["d_k_ai_s"]))
        runs.setdefault(key(row), set()).add(row["run_id"])

    out = []
    for k in sorted(set(avail) | set(delays)):
        samples = avail.get(k, [])
        d = delays.get(k, [])
        req = requirement_check(samples, a_req, gamma) if samples else None
        out.append(PointSummary(
            N=k[0], eta=k[1], n=k[2], model_bytes=k[3], runs=len(runs[k]), devices=len(samples),
            median_avail=percentile(samples, 0.5) if samples else float("nan"),
            p1_avail=percentile(samples, 0.01) if samples else float("nan"),
            requirement_met=req.passed if req else False,
            violation_prob=req.violation_prob if req else float("nan"),
            rounds=len(d), delay_box=box_stats(d) if d else None))
    return out


def summarize_results(results: Sequence[RunResult], a_req: float = 0.95, gamma: float = 0.01):
    urllc = [{**_run_fields(r), **row} for r in results for row in r.urllc_rows]
    ai = [{**_run_fields(r), **row} for r in results for row in r.ai_rows]
    return summarize(urllc, ai, a_req, gamma)


def format_summary(points: Sequence[PointSummary]) -> str:
    head = (f"{'N':>4} {'eta':>6} {'n':>4} {'bytes':>9} {'runs':>4} {'med_A':>8} {'p1_A':>8} "
            f"{'req':>4} {'rounds':>6} {'d_min':>8} {'d_q25':>8} {'d_med':>8} {'d_q75':>8} {'d_max':>8}")
    lines = [head]
    for p in points:
        if p.delay_box is None:
            box = " ".join(f"{'-':>8}" for _ in range(5))
        else:
            b = p.delay_box
            box = " ".join(f"{v:8.3f}" for v in (b.min, b.q25, b.median, b.q75, b.max))
        lines.append(f"{p.N:>4} {p.eta:>6.3f} {p.n:>4} {p.model_bytes:>9} {p.runs:>4} "
                     f"{p.median_avail:>8.5f} {p.p1_avail:>8.5f} {'yes' if p.requirement_met else 'no':>4} "
                     f"{p.rounds:>6} {box}")
    return "\n".join(lines)


def read_outputs(in_dir: str | Path) -> tuple[list[dict], list[dict]]:
    d = Path(in_dir)
    missing = [n for n in ("kpi_urllc.csv", "kpi_ai.csv") if not (d / n).exists()]
    if missing:
        raise FileNotFoundError(f"missing {', '.join(missing)} in {d}")
    with (d / "kpi_urllc.csv").open(encoding="utf-8", newline="") as fh:
        urllc = list(csv.DictReader(fh))
    with (d / "kpi_ai.csv").open(encoding="utf-8", newline="") as fh:
        ai = list(csv.DictReader(fh))
    return urllc, ai
