"""Monte-Carlo sweep orchestration, error accounting, and CSV emission.

A sweep fixes a scenario template and varies either the SNR or the
number of concurrent sources.  Every trial draws fresh source
placements and snapshots from seeds derived deterministically from the
master seed, runs every requested method on byte-identical snapshots,
matches estimates to truths by minimum total distance, and records
per-source absolute errors plus the spectrum-evaluation time.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import instrumentation
from .config import (RunConfig, angle_grid_spec, build_geometry,
                     complexity_grid, grid_spec, source_intervals)
from .errors import ConfigError
from .estimators import (modified_music_ula, modified_music_upa,
                         music_2d_nearfield, music_3d_upa)
from .geometry import ArrayGeometry, ULA, UPA, steering_matrix, subarray_split
from .synthesis import (Scenario, sample_sources, set_noise_for_snr,
                        synthesize_snapshots)
from .triangulation import association_swap, proposed_localize

MAX_MATCH_SOURCES = 8

METHOD_STAGES = {
    "music2d": "music2d:",
    "music3d": "music3d:",
    "modified": "modified:",
    "proposed": "proposed:",
}


@dataclass(frozen=True)
class SweepSpec:
    "One sweep: scenario template, swept variable, methods, trial budget."

    config: RunConfig
    variable: str                    # "snr_db" or "source_count"
    values: tuple
    trials: int
    methods: tuple[str, ...]
    master_seed: int
    record_timing: bool = True

    def __post_init__(self):
        if self.variable not in ("snr_db", "source_count"):
            raise ConfigError(f"unknown sweep variable {self.variable!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.trials < 1:
            raise ConfigError("sweep needs at least one trial")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class TrialRecord:
    "One (sweep value, trial, method, source) row."

    sweep_value: float
    trial: int
    method: str
    source_idx: int
    true_x: float
    true_y: float
    true_z: float
    est_x: float
    est_y: float
    est_z: float
    err_m: float
    elapsed_us: float
    degraded: int
    swap_flag: int


@dataclass(frozen=True)
class SummaryRow:
    "Aggregate of all trials at one (sweep value, method) point."

    sweep_value: float
    method: str
    mae_m: float
    mae_stderr: float
    time_mean_us: float
    time_std_us: float
    degradation_rate: float


def match_estimates(truths, estimates):
    """Minimum-total-distance bijection between truths and estimates.

    Exhaustive over the K! assignments, which is why K is capped at 8.
    Returns (truth_idx, estimate_idx, distance) triples sorted by truth
    index.
    """
    t = np.atleast_2d(np.asarray(truths, dtype=float))
    e = np.atleast_2d(np.asarray(estimates, dtype=float))
    if t.shape != e.shape:
        raise ConfigError("matching needs equally many truths and estimates")
    k = t.shape[0]
    if k > MAX_MATCH_SOURCES:
        raise ConfigError(f"matching supports at most {MAX_MATCH_SOURCES} sources")
    if k == 0:
        return []
    dist = np.linalg.norm(t[:, None, :] - e[None, :, :], axis=2)
    best_perm, best_cost = None, math.inf
    for perm in itertools.permutations(range(k)):
        cost = sum(dist[i, perm[i]] for i in range(k))
        if cost < best_cost:
            best_perm, best_cost = perm, cost
    return [(i, best_perm[i], float(dist[i, best_perm[i]])) for i in range(k)]


def _dispatch(method, snapshots, geom, cfg: RunConfig, k, grid=None):
    explicit_grid = grid is not None
    if grid is None:
        grid = grid_spec(cfg, geom)
    if method == "music2d":
        return music_2d_nearfield(snapshots, geom, k, grid,
                                  distance_model=cfg.distance_model)
    if method == "music3d":
        return music_3d_upa(snapshots, geom, k, grid,
                            distance_model=cfg.distance_model)
    if method == "modified":
        if geom.kind == ULA:
            return modified_music_ula(snapshots, geom, k, grid,
                                      window_count=cfg.window_count)
        return modified_music_upa(snapshots, geom, k, grid)
    if method == "proposed":
        angle_grid = grid.angles_only() if explicit_grid \
            else angle_grid_spec(cfg, geom)
        return proposed_localize(snapshots, geom, cfg.subarrays, k, angle_grid)
    raise ConfigError(f"unknown method {method!r}")


def check_methods(methods, geom: ArrayGeometry):
    "Reject method/geometry combinations up front."
    for method in methods:
        if method not in METHOD_STAGES:
            raise ConfigError(f"unknown method {method!r}")
        if method == "music2d" and geom.kind != ULA:
            raise ConfigError("music2d runs on linear arrays only")
        if method == "music3d" and geom.kind != UPA:
            raise ConfigError("music3d runs on planar arrays only")


def _trial_scenario(cfg: RunConfig, geom, k, snr_db, master_seed, trial):
    """Deterministic per-trial scenario from the master seed.

    The seed depends on the trial index but not on the sweep value, so
    all sweep points share placements and base signal draws (common
    random numbers); only the swept quantity changes between points,
    which keeps trend comparisons out of placement noise.
    """
    root = np.random.SeedSequence((int(master_seed), int(trial)))
    place_seq, snap_seq = root.spawn(2)
    rng = np.random.default_rng(place_seq)
    r_iv, az_iv, el_iv = source_intervals(cfg, geom)
    sources = sample_sources(geom, k, r_iv, az_iv, rng, elevation_interval=el_iv)
    scenario = Scenario(geometry=geom, sources=tuple(sources),
                        noise_variance=0.0, snapshots=cfg.snapshots,
                        rng_seed=int(snap_seq.generate_state(1, np.uint64)[0]))
    return set_noise_for_snr(scenario, snr_db)


def run_sweep(spec: SweepSpec):
    """Run the full sweep; returns (trial records, summary rows).

    Fully reproducible from the master seed: estimates and errors do not
    depend on timing or scheduling.  Per-method estimator failures are
    recorded as NaN-error rows with the degraded flag set rather than
    aborting the sweep.
    """
    cfg = spec.config
    geom = build_geometry(cfg)
    check_methods(spec.methods, geom)
    records = []
    for value in spec.values:
        k = cfg.k if spec.variable != "source_count" else int(value)
        snr_db = cfg.snr_db if spec.variable != "snr_db" else float(value)
        for trial in range(spec.trials):
            scenario = _trial_scenario(cfg, geom, k, snr_db, spec.master_seed,
                                       trial)
            snapshots = synthesize_snapshots(scenario)
            baseline_hash = hashlib.sha256(snapshots.data.tobytes()).digest()
            truths = np.stack([s.position for s in scenario.sources])
            swap = 0
            if "proposed" in spec.methods:
                centers = [s.center for s in subarray_split(geom, cfg.subarrays)]
                swap = int(association_swap(truths, centers))
            for method in spec.methods:
                records.extend(_run_one(method, snapshots, geom, cfg, k,
                                        truths, float(value), trial, swap,
                                        spec.record_timing))
                if hashlib.sha256(snapshots.data.tobytes()).digest() != baseline_hash:
                    raise RuntimeError(f"method {method} mutated the snapshots")
    return records, summarize(records, spec)


def _run_one(method, snapshots, geom, cfg, k, truths, value, trial, swap,
             record_timing):
    with instrumentation.measure() as meter:
        try:
            estimates = _dispatch(method, snapshots, geom, cfg, k)
            failed = False
        except (ConfigError, np.linalg.LinAlgError, ValueError):
            estimates, failed = None, True
    elapsed = meter.total(METHOD_STAGES[method]).seconds * 1e6 \
        if record_timing else 0.0
    swap_flag = swap if method == "proposed" else 0
    rows = []
    if failed:
        for i in range(k):
            rows.append(TrialRecord(value, trial, method, i,
                                    *truths[i], math.nan, math.nan, math.nan,
                                    math.nan, elapsed, 1, swap_flag))
        return rows
    positions = np.stack([e.position for e in estimates])
    degraded = int(any(e.degraded for e in estimates))
    for i, j, err in match_estimates(truths, positions):
        rows.append(TrialRecord(value, trial, method, i,
                                *truths[i], *positions[j],
                                err, elapsed, degraded, swap_flag))
    return rows


def summarize(records, spec: SweepSpec):
    "Aggregate trial records into one SummaryRow per (value, method)."
    rows = []
    for value in spec.values:
        for method in spec.methods:
            sel = [r for r in records
                   if r.sweep_value == float(value) and r.method == method]
            if not sel:
                continue
            errs = np.array([r.err_m for r in sel])
            good = errs[~np.isnan(errs)]
            mae = float(good.mean()) if good.size else math.nan
            stderr = float(good.std(ddof=1) / np.sqrt(good.size)) \
                if good.size > 1 else 0.0
            per_trial = {}
            flags = {}
            for r in sel:
                per_trial.setdefault(r.trial, r.elapsed_us)
                flags[r.trial] = max(flags.get(r.trial, 0), r.degraded)
            times = np.array(sorted(per_trial.values()))
            rows.append(SummaryRow(
                sweep_value=float(value), method=method, mae_m=mae,
                mae_stderr=stderr,
                time_mean_us=float(times.mean()),
                time_std_us=float(times.std(ddof=1)) if times.size > 1 else 0.0,
                degradation_rate=float(np.mean(list(flags.values())))))
    return rows


TRIALS_HEADER = ["sweep_value", "trial", "method", "source_idx",
                 "true_x", "true_y", "true_z", "est_x", "est_y", "est_z",
                 "err_m", "elapsed_us", "degraded", "swap_flag"]

SUMMARY_HEADER = ["sweep_value", "method", "mae_m", "mae_stderr",
                  "time_mean_us", "time_std_us", "degradation_rate"]


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.9g}"


def emit_trials_csv(records, path) -> None:
    "Write trial records in deterministic (value, method, trial) order."
    ordered = sorted(records, key=lambda r: (r.sweep_value, r.method,
                                             r.trial, r.source_idx))
    _write_csv(path, TRIALS_HEADER,
               [[r.sweep_value, r.trial, r.method, r.source_idx,
                 r.true_x, r.true_y, r.true_z, r.est_x, r.est_y, r.est_z,
                 r.err_m, r.elapsed_us, r.degraded, r.swap_flag]
                for r in ordered])


def emit_summary_csv(rows, path) -> None:
    "Write summary rows in deterministic (value, method) order."
    ordered = sorted(rows, key=lambda r: (r.sweep_value, r.method))
    _write_csv(path, SUMMARY_HEADER,
               [[r.sweep_value, r.method, r.mae_m, r.mae_stderr,
                 r.time_mean_us, r.time_std_us, r.degradation_rate]
                for r in ordered])


def _write_csv(path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def time_spectrum_evaluation(method: str, cfg: RunConfig, repetitions: int = 30,
                             warmups: int = 5, seed: int | None = None):
    """Wall time of the spectrum-evaluation stage only, in microseconds.

    Runs the estimator repeatedly on one fixed scenario over the
    M-samples-per-axis grid of the complexity accounting and accumulates
    the recorded spectrum-stage seconds (covariance estimation, eigen
    decomposition and snapshot synthesis are excluded).  Returns (mean,
    standard deviation); with 30+ repetitions the mean is a
    median-of-means over three blocks to shrug off scheduler outliers.
    """
    if repetitions < 10:
        raise ConfigError("need at least 10 timing repetitions")
    geom = build_geometry(cfg)
    check_methods([method], geom)
    scenario = _trial_scenario(cfg, geom, cfg.k, cfg.snr_db,
                               cfg.seed if seed is None else seed, 0)
    snapshots = synthesize_snapshots(scenario)
    grid = complexity_grid(cfg, geom)

    def once():
        with instrumentation.measure() as meter:
            _dispatch(method, snapshots, geom, cfg, cfg.k, grid=grid)
        return meter.total(METHOD_STAGES[method]).seconds * 1e6

    for _ in range(warmups):
        once()
    times = np.array([once() for _ in range(repetitions)])
    if repetitions >= 30:
        blocks = np.array_split(times, 3)
        mean = float(np.median([b.mean() for b in blocks]))
    else:
        mean = float(times.mean())
    return mean, float(times.std(ddof=1))


def beam_gain_sweep(geom: ArrayGeometry, source_position, angle_grid) -> np.ndarray:
    """Normalized far-field beamformer gain toward an actual source.

    For each grid angle az, gain = |a_far(az)^H a_exact(source)|^2 / M^2:
    1.0 means a perfectly matched planar wavefront.  A near-field source
    spreads its gain over many angles, which is the effect the sub-array
    estimator exploits.
    """
    if geom.kind != ULA:
        raise ConfigError("the beam-gain demo runs on linear arrays")
    angles = np.asarray(angle_grid, dtype=float)
    far = steering_matrix(geom, "farfield", azimuths=angles)
    a = steering_matrix(geom, "exact",
                        positions=np.asarray(source_position)[None, :])[:, 0]
    response = far.conj().T @ a
    return (np.abs(response) ** 2) / geom.m ** 2
