"""Monte-Carlo benchmark orchestration and CSV emission.

Trials are independent jobs keyed by (scenario, method, k_factor, m, trial);
per-trial seeds derive deterministically from the base seed, so sweeps are
reproducible, resumable, and insensitive to worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curvature import hessian_blocks
from .likelihood import kl_divergence
from .metrics import TrialRecord, classify_success, first_row_mse, toeplitz_crb
from .model import CaratheodoryModel, assemble_covariance
from .optimizer import OptimizerConfig, fit_gd1, fit_gd2, fit_gda
from .scenarios import sample, sample_covariance, scenario_covariance

CSV_FIELDS = (
    "scenario", "method", "k_factor", "m", "trial", "seed",
    "rmse", "kl", "crb", "runtime_s", "iterations", "converged", "success",
)

SPEED_FIELDS = (
    "method", "m", "k_factor", "trial", "seed", "data_hash",
    "iterations", "wall_time_s",
)

SCAN_FIELDS = ("p", "k", "l_a_exact", "l_a_approx", "l_w_exact", "l_w_approx")

_FITTERS = {"gd1": fit_gd1, "gd2": fit_gd2, "gda": fit_gda}

# xor salt decorrelating the optimizer's init stream from the data stream
_INIT_SEED_SALT = 0x5EED


@dataclass
class BenchConfig:
    scenario: str = "atom"
    p: int | None = None
    m_values: tuple = tuple(range(10, 101, 10))
    trials: int = 100
    methods: tuple = ("gd2x2", "gd2x4")
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    base_seed: int = 0
    out: str = "results.csv"
    workers: int = 1
    success_factor: float = 10.0
    epsilon: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.methods:
            raise ValueError("methods must be non-empty")
        if any(m < 1 for m in self.m_values):
            raise ValueError("all m values must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.m_values = tuple(int(m) for m in self.m_values)
        self.methods = tuple(self.methods)
        for name in self.methods:
            parse_method(name)

    @classmethod
    def from_json(cls, path) -> "BenchConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        opt = OptimizerConfig(**raw.pop("optimizer", {}))
        known = {f for f in cls.__dataclass_fields__ if f != "optimizer"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(optimizer=opt, **raw)


def parse_method(name: str) -> tuple[str, float]:
    """Split a method tag like 'gd2x4' into (algo, k_factor)."""
    algo, sep, factor = name.partition("x")
    if algo not in _FITTERS or not sep:
        raise ValueError(f"bad method {name!r}; expected e.g. 'gd2x2' or 'gdax4'")
    try:
        kf = float(factor)
    except ValueError:
        raise ValueError(f"bad k-factor in method {name!r}") from None
    if kf <= 0:
        raise ValueError(f"k-factor must be positive in {name!r}")
    return algo, kf


def trial_seed(base_seed: int, m: int, trial: int) -> int:
    """Stable 63-bit per-trial seed: base_seed xor a keyed hash of (m, trial)."""
    digest = hashlib.blake2b(f"{m}:{trial}".encode(), digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(digest, "little")) & (2**63 - 1)


def effective_workers(requested: int) -> int:
    """TOEPGRAD_WORKERS overrides any configured worker count."""
    env = os.environ.get("TOEPGRAD_WORKERS")
    if env:
        value = int(env)
        if value < 1:
            raise ValueError(f"TOEPGRAD_WORKERS must be >= 1, got {value}")
        return value
    return requested


def run_trial(c_true, scenario, method, m, trial, base_seed, opt_cfg,
              crb_scalar, success_factor, epsilon) -> TrialRecord:
    """One fit on freshly drawn data; errors become failed rows."""
    algo, kf = parse_method(method)
    seed = trial_seed(base_seed, m, trial)
    p = c_true.shape[0]
    k = int(round(kf * p))
    record = TrialRecord(
        scenario=scenario, method=algo, k_factor=kf, m=m, trial=trial, seed=seed,
        rmse=float("nan"), kl=float("nan"), crb=crb_scalar, runtime_s=0.0,
        iterations=0, converged=False, success=False,
    )
    try:
        batch = sample(c_true, m, seed)
        s = sample_covariance(batch)
        fit = _FITTERS[algo](s, k, opt_cfg, seed=seed ^ _INIT_SEED_SALT, epsilon=epsilon)
        c_hat = assemble_covariance(fit.model)
        record.rmse = first_row_mse(c_hat, c_true)
        record.kl = kl_divergence(c_true, c_hat)
        record.runtime_s = fit.wall_time
        record.iterations = fit.iterations
        record.converged = fit.converged
        record.success = classify_success(record, crb_scalar, success_factor)
    except Exception:
        pass
    return record


def _run_trial_star(args):
    return run_trial(*args)


def _row_key(r: TrialRecord):
    return (r.scenario, r.method, r.k_factor, r.m, r.trial)


def run_bench(cfg: BenchConfig) -> tuple[list[TrialRecord], list[dict]]:
    """Execute the sweep, merge with any existing rows at cfg.out, rewrite the
    sorted CSV, and return (records, summary rows)."""
    c_true, spec = scenario_covariance(cfg.scenario, cfg.p)
    crb_cache = {m: toeplitz_crb(c_true, m).scalar for m in cfg.m_values}

    existing = read_results_csv(cfg.out) if os.path.exists(cfg.out) else []
    done = {_row_key(r) for r in existing}

    jobs = []
    for method in cfg.methods:
        algo, kf = parse_method(method)
        for m in cfg.m_values:
            for trial in range(cfg.trials):
                if (spec.kind, algo, kf, m, trial) in done:
                    continue
                jobs.append((c_true, spec.kind, method, m, trial, cfg.base_seed,
                             cfg.optimizer, crb_cache[m], cfg.success_factor, cfg.epsilon))

    workers = effective_workers(cfg.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            new_rows = list(pool.map(_run_trial_star, jobs, chunksize=1))
    else:
        new_rows = [run_trial(*job) for job in jobs]

    records = sorted(existing + new_rows, key=_row_key)
    write_results_csv(cfg.out, records)
    return records, summarize(records, crb_cache)


def summarize(records: list[TrialRecord], crb_by_m: dict | None = None) -> list[dict]:
    """Mean rmse over successful trials per (method, k_factor, m), with the
    exclusion count and the CRB reference."""
    cells: dict = {}
    for r in records:
        cells.setdefault((r.scenario, r.method, r.k_factor, r.m), []).append(r)
    summary = []
    for (scenario, method, kf, m), rows in sorted(cells.items()):
        good = [r.rmse for r in rows if r.success]
        crb = crb_by_m.get(m, rows[0].crb) if crb_by_m else rows[0].crb
        summary.append({
            "scenario": scenario,
            "method": method,
            "k_factor": kf,
            "m": m,
            "n_trials": len(rows),
            "n_success": len(good),
            "n_excluded": len(rows) - len(good),
            "mean_rmse": float(np.mean(good)) if good else float("nan"),
            "crb": crb,
        })
    return summary


def data_hash(batch) -> str:
    """Stable digest of a batch's bit pattern, used to certify pairing."""
    data = np.ascontiguousarray(batch.vectors.astype("<c16", copy=False))
    return hashlib.sha256(data.tobytes()).hexdigest()[:16]


def run_speed_compare(cfg: BenchConfig) -> list[dict]:
    """Paired single-rate versus two-rate runs on identical data.

    Methods must include both gd1 and gd2 tags; each (m, k_factor, trial)
    cell reuses one batch and one init seed for every algorithm.
    """
    algos = sorted({parse_method(name)[0] for name in cfg.methods})
    if "gd1" not in algos or "gd2" not in algos:
        raise ValueError("speed comparison needs both gd1 and gd2 methods")
    k_factors = sorted({parse_method(name)[1] for name in cfg.methods})
    c_true, _ = scenario_covariance(cfg.scenario, cfg.p)
    p = c_true.shape[0]

    rows = []
    for kf in k_factors:
        k = int(round(kf * p))
        for m in cfg.m_values:
            for trial in range(cfg.trials):
                seed = trial_seed(cfg.base_seed, m, trial)
                batch = sample(c_true, m, seed)
                s = sample_covariance(batch)
                digest = data_hash(batch)
                for algo in algos:
                    t0 = time.perf_counter()
                    fit = _FITTERS[algo](s, k, cfg.optimizer,
                                         seed=seed ^ _INIT_SEED_SALT, epsilon=cfg.epsilon)
                    wall = time.perf_counter() - t0
                    rows.append({
                        "method": algo, "m": m, "k_factor": kf, "trial": trial,
                        "seed": seed, "data_hash": digest,
                        "iterations": fit.iterations, "wall_time_s": wall,
                    })
    return rows


def speed_summary(rows: list[dict]) -> list[dict]:
    """Median iterations and wall time per (method, m, k_factor)."""
    cells: dict = {}
    for r in rows:
        cells.setdefault((r["method"], r["m"], r["k_factor"]), []).append(r)
    out = []
    for (method, m, kf), group in sorted(cells.items()):
        out.append({
            "method": method,
            "m": m,
            "k_factor": kf,
            "median_iterations": float(np.median([g["iterations"] for g in group])),
            "median_wall_time_s": float(np.median([g["wall_time_s"] for g in group])),
        })
    return out


def run_lipschitz_scan(n_trials: int, p_set=(5, 10, 15, 20), k_factors=(1, 2, 4),
                       seed: int = 0) -> list[dict]:
    """Exact versus approximate per-block curvature over random configurations.

    Each trial draws a model and an independent synthetic sample covariance
    from the same family (frequencies uniform on [0, 2pi), raw amplitudes
    uniform on [-2, 3), log-uniform ridge).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_trials):
        p = int(rng.choice(np.asarray(p_set)))
        kf = float(rng.choice(np.asarray(k_factors, dtype=float)))
        k = int(round(kf * p))
        model = _random_scan_model(rng, p, k)
        s_model = _random_scan_model(rng, p, k)
        s = assemble_covariance(s_model)
        blocks = hessian_blocks(s, model)
        rows.append({
            "p": p, "k": k,
            "l_a_exact": blocks.l_a_exact, "l_a_approx": blocks.l_a_approx,
            "l_w_exact": blocks.l_w_exact, "l_w_approx": blocks.l_w_approx,
        })
    return rows


def _random_scan_model(rng, p: int, k: int) -> CaratheodoryModel:
    return CaratheodoryModel(
        a_raw=rng.uniform(-2.0, 3.0, size=k),
        omega=rng.uniform(0.0, 2.0 * np.pi, size=k),
        epsilon=float(10.0 ** rng.uniform(-3.0, -1.0)),
        p=p,
    )


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, fields, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_format(row[f]) for f in fields])


def write_results_csv(path, records: list[TrialRecord]) -> None:
    write_csv(path, CSV_FIELDS, [vars(r) for r in records])


def read_results_csv(path) -> list[TrialRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"results file {path} lacks columns: {sorted(missing)}")
        for row in reader:
            records.append(TrialRecord(
                scenario=row["scenario"],
                method=row["method"],
                k_factor=float(row["k_factor"]),
                m=int(row["m"]),
                trial=int(row["trial"]),
                seed=int(row["seed"]),
                rmse=float(row["rmse"]),
                kl=float(row["kl"]),
                crb=float(row["crb"]),
                runtime_s=float(row["runtime_s"]),
                iterations=int(row["iterations"]),
                converged=row["converged"] == "true",
                success=row["success"] == "true",
            ))
    return records
