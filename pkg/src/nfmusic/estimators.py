"""End-to-end localization baselines and analytic complexity accounting.

Four estimators share the subspace core:

* ``music_2d_nearfield`` -- full-array search over (azimuth, distance)
  for a linear array, exact or fresnel steering.
* ``music_3d_upa``       -- full-array search over (azimuth, elevation,
  distance) for a planar array.
* ``modified_music_ula`` -- decoupled baseline for a symmetric ULA with
  an odd element count: the anti-diagonal of the covariance depends only
  on gamma = (2*pi/lambda)*d*sin(azimuth) measured from the array
  center, so azimuths come from a reduced 1D search, and each azimuth
  gets a 1D distance-only search of the full-array fresnel spectrum
  along its bearing ray.
* ``modified_music_upa`` -- the planar analogue: the anti-diagonal forms
  a virtual panel at doubled spacing carrying both arrival angles, a 2D
  windowed search recovers (azimuth, elevation), then distance follows
  per angle pair as above.

All bearing rays of the modified estimators are anchored at the array
center because that is the point the anti-diagonal physically measures
bearings from.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import instrumentation
from .errors import ConfigError
from .geometry import (ArrayGeometry, ULA, UPA, direction, element_positions,
                       polar_from_position, steering_matrix)
from .grids import GridSpec, axis_values
from .subspace import (CovarianceEstimate, decompose, find_k_peaks,
                       grid_peaks, sample_covariance, spectrum_values,
                       SpectrumGrid)


@dataclass(frozen=True, eq=False)
class SourceEstimate:
    """One estimated source location.

    ``position`` is Cartesian (3,); ``polar`` is (range, azimuth,
    elevation) about the reference element.  ``angle_trail`` carries the
    per-sub-array (azimuth, elevation) pairs when the estimate came from
    triangulation.
    """

    position: np.ndarray
    polar: tuple[float, float, float]
    method: str
    degraded: bool = False
    angle_trail: list | None = None

    @classmethod
    def from_position(cls, position, method, degraded=False, angle_trail=None):
        pos = np.asarray(position, dtype=float).ravel()
        if pos.size == 2:
            pos = np.array([pos[0], pos[1], 0.0])
        return cls(position=pos, polar=polar_from_position(pos),
                   method=method, degraded=degraded, angle_trail=angle_trail)


@dataclass(frozen=True)
class CostModel:
    "Spectrum-search cost as evaluations times per-evaluation operations."

    spectrum_eval_count: int
    per_eval_flops: int
    total_flops: int

    def __post_init__(self):
        if self.total_flops != self.spectrum_eval_count * self.per_eval_flops:
            raise ConfigError("cost model total must equal count * per-eval")

    @classmethod
    def of(cls, count: int, per_eval: int) -> "CostModel":
        return cls(spectrum_eval_count=count, per_eval_flops=per_eval,
                   total_flops=count * per_eval)


def _require_kind(geom, kind, what):
    if geom.kind != kind:
        raise ConfigError(f"{what} requires a {kind.upper()} geometry")


def _record_grid_stage(stage, axes, m_len, k, seconds):
    cells = int(np.prod([len(a) for a in axes], dtype=np.int64))
    instrumentation.record(stage, cells,
                           cells * instrumentation.projection_macs(m_len, m_len - k),
                           seconds)


def music_2d_nearfield(snapshots, geom: ArrayGeometry, k: int, grid: GridSpec,
                       distance_model: str = "exact", *, workers: int = 1,
                       materialize_cap: int | None = 2_000_000) -> list[SourceEstimate]:
    """Full-array near-field MUSIC over the (azimuth, distance) grid.

    Peaks convert to Cartesian positions (r cos(az), r sin(az), 0).
    """
    _require_kind(geom, ULA, "the 2D near-field search")
    if distance_model not in ("exact", "fresnel"):
        raise ConfigError(f"unknown distance model {distance_model!r}")
    dec = decompose(sample_covariance(snapshots), k)
    t0 = time.perf_counter()
    peaks, axes = grid_peaks(dec, geom, grid, distance_model, k,
                             workers=workers, materialize_cap=materialize_cap)
    _record_grid_stage("music2d:spectrum", axes, geom.m, k,
                       time.perf_counter() - t0)
    out = []
    for idx in peaks.indices:
        az, r = axes[0][idx[0]], axes[1][idx[1]]
        out.append(SourceEstimate.from_position(
            r * direction(az), method="music2d", degraded=peaks.degraded))
    return out


def music_3d_upa(snapshots, geom: ArrayGeometry, k: int, grid: GridSpec,
                 distance_model: str = "exact", *, workers: int = 1,
                 materialize_cap: int | None = 2_000_000) -> list[SourceEstimate]:
    "Full-array near-field MUSIC over (azimuth, elevation, distance)."
    _require_kind(geom, UPA, "the 3D search")
    if distance_model not in ("exact", "fresnel"):
        raise ConfigError(f"unknown distance model {distance_model!r}")
    dec = decompose(sample_covariance(snapshots), k)
    t0 = time.perf_counter()
    peaks, axes = grid_peaks(dec, geom, grid, distance_model, k,
                             workers=workers, materialize_cap=materialize_cap)
    _record_grid_stage("music3d:spectrum", axes, geom.m, k,
                       time.perf_counter() - t0)
    out = []
    for idx in peaks.indices:
        az, el, r = axes[0][idx[0]], axes[1][idx[1]], axes[2][idx[2]]
        out.append(SourceEstimate.from_position(
            r * direction(az, el), method="music3d", degraded=peaks.degraded))
    return out


def _antidiagonal(matrix: np.ndarray) -> np.ndarray:
    m = matrix.shape[0]
    idx = np.arange(m)
    return matrix[idx, m - 1 - idx]


def _windowed_covariance(vec: np.ndarray, length: int) -> np.ndarray:
    "Average the outer products of all sliding windows of ``length``."
    win = np.lib.stride_tricks.sliding_window_view(vec, length)
    cov = win.T @ win.conj() / win.shape[0]
    return 0.5 * (cov + cov.conj().T)


def _distance_stage(dec_full, geom, anchor, bearings, distance_axis, stage):
    """1D distance-only searches of the full-array fresnel spectrum.

    One search per (azimuth, elevation) bearing, along the ray from
    ``anchor``; returns positions at the per-bearing spectrum peaks plus
    a per-bearing degraded flag.
    """
    t0 = time.perf_counter()
    positions = []
    degraded = []
    for az, el in bearings:
        ray = anchor[None, :] + distance_axis[:, None] * direction(az, el)
        steer = steering_matrix(geom, "fresnel", positions=ray)
        vals = spectrum_values(dec_full, steer)
        peaks = find_k_peaks(SpectrumGrid(axes=(distance_axis,),
                                          names=("distance",), values=vals), 1)
        positions.append(ray[peaks.indices[0][0]])
        degraded.append(peaks.degraded)
    cells = len(bearings) * len(distance_axis)
    instrumentation.record(stage, cells,
                           cells * instrumentation.projection_macs(geom.m,
                                                                   geom.m - dec_full.k),
                           time.perf_counter() - t0)
    return positions, degraded


def modified_music_ula(snapshots, geom: ArrayGeometry, k: int, grid: GridSpec,
                       window_count: int | None = None,
                       anchor: str = "origin") -> list[SourceEstimate]:
    """Anti-diagonal decoupled baseline for a symmetric (odd) ULA.

    Steps: sample covariance; extract the 2N+1 anti-diagonal entries;
    form ``window_count`` overlapping sub-vectors and average their
    outer products; 1D MUSIC with the response b(az)[m] =
    exp(-j*2*(N-m+1)*gamma(az)) gives K azimuths; a distance-only
    fresnel search along each bearing ray gives the ranges, and the
    estimate is the peak point of that ray.

    The anti-diagonal entries depend on path differences between
    elements mirrored through the array center, so the recovered azimuth
    is physically the bearing seen from the center.  The method as
    published nevertheless treats (azimuth, range) as polar coordinates
    about the reference element; ``anchor="origin"`` reproduces that
    (including its cross-range bias of up to half the aperture), while
    ``anchor="center"`` removes the bias by anchoring rays at the array
    center.
    """
    _require_kind(geom, ULA, "modified MUSIC")
    m = geom.m
    if m % 2 == 0:
        raise ConfigError("modified MUSIC needs an odd, symmetric ULA")
    n = (m - 1) // 2
    w = window_count if window_count is not None else n + 1
    if not k < w <= m:
        raise ConfigError(f"window count {w} must satisfy K < W <= {m}")
    length = m + 1 - w
    if length <= k:
        raise ConfigError(f"window count {w} leaves sub-vectors of {length} "
                          f"entries, too short for {k} sources")

    cov = sample_covariance(snapshots)
    reduced = _windowed_covariance(_antidiagonal(cov.matrix), length)
    dec = decompose(CovarianceEstimate(matrix=reduced, snapshot_count=w), k)

    azimuth_axis = grid.azimuth_axis()
    t0 = time.perf_counter()
    gamma = (2.0 * np.pi / geom.wavelength) * geom.spacing * np.sin(azimuth_axis)
    coeff = -2.0 * (n - np.arange(length))
    response = np.exp(1j * coeff[:, None] * gamma[None, :])
    vals = spectrum_values(dec, response)
    instrumentation.record(
        "modified:angle", len(azimuth_axis),
        len(azimuth_axis) * instrumentation.projection_macs(length, length - k),
        time.perf_counter() - t0)
    peaks = find_k_peaks(SpectrumGrid(axes=(azimuth_axis,),
                                      names=("azimuth",), values=vals), k)
    bearings = [(azimuth_axis[idx[0]], 0.0) for idx in peaks.indices]

    dec_full = decompose(cov, k)
    anchor_point = _ray_anchor(geom, anchor)
    positions, dist_degraded = _distance_stage(
        dec_full, geom, anchor_point, bearings, grid.distance_axis(),
        "modified:distance")
    return [SourceEstimate.from_position(pos, method="modified",
                                         degraded=peaks.degraded or bad)
            for pos, bad in zip(positions, dist_degraded)]


def _ray_anchor(geom: ArrayGeometry, anchor: str) -> np.ndarray:
    if anchor == "origin":
        return np.zeros(3)
    if anchor == "center":
        return element_positions(geom).mean(axis=0)
    raise ConfigError(f"unknown ray anchor {anchor!r}")


def modified_music_upa(snapshots, geom: ArrayGeometry, k: int, grid: GridSpec,
                       window_counts: tuple[int, int] | None = None,
                       anchor: str = "origin") -> list[SourceEstimate]:
    """Planar-array analogue of the anti-diagonal baseline.

    The anti-diagonal of the covariance pairs each element with its
    mirror through the panel center, leaving a virtual M_V x M_H panel
    at doubled spacing that carries both arrival angles.  2D windowing
    restores rank, a 2D angular search gives K (azimuth, elevation)
    pairs, and distance follows per pair as in the ULA variant.
    """
    _require_kind(geom, UPA, "the planar modified baseline")
    wh, wv = window_counts if window_counts is not None \
        else ((geom.m_h + 1) // 2, (geom.m_v + 1) // 2)
    lh, lv = geom.m_h - wh + 1, geom.m_v - wv + 1
    if wh < 1 or wv < 1 or lh < 1 or lv < 1:
        raise ConfigError("window counts exceed the panel dimensions")
    if wh * wv <= k or lh * lv <= k:
        raise ConfigError(f"windows {wh}x{wv} cannot resolve {k} sources")

    cov = sample_covariance(snapshots)
    anti = _antidiagonal(cov.matrix)
    panel = anti.reshape(geom.m_v, geom.m_h)  # rows k(m), cols i(m)
    blocks = np.lib.stride_tricks.sliding_window_view(panel, (lv, lh))
    flat = blocks.reshape(-1, lv * lh)
    reduced = flat.T @ flat.conj() / flat.shape[0]
    reduced = 0.5 * (reduced + reduced.conj().T)
    dec = decompose(CovarianceEstimate(matrix=reduced, snapshot_count=wh * wv), k)

    az_axis = grid.azimuth_axis()
    el_axis = grid.elevation_axis()
    t0 = time.perf_counter()
    az_mesh, el_mesh = np.meshgrid(az_axis, el_axis, indexing="ij")
    u = (np.sin(az_mesh) * np.cos(el_mesh)).reshape(-1)
    v = np.sin(el_mesh).reshape(-1)
    scale = 4.0 * np.pi / geom.wavelength
    ih = np.arange(lh) * geom.spacing_h
    kv = np.arange(lv) * geom.spacing_v
    phase = scale * (kv[:, None, None] * v[None, None, :]
                     + ih[None, :, None] * u[None, None, :])
    response = np.exp(1j * phase.reshape(lv * lh, -1))
    vals = spectrum_values(dec, response)
    cells = len(az_axis) * len(el_axis)
    instrumentation.record(
        "modified:angle", cells,
        cells * instrumentation.projection_macs(lv * lh, lv * lh - k),
        time.perf_counter() - t0)
    peaks = find_k_peaks(SpectrumGrid(axes=(az_axis, el_axis),
                                      names=("azimuth", "elevation"),
                                      values=vals.reshape(len(az_axis),
                                                          len(el_axis))), k)
    bearings = [(az_axis[i], el_axis[j]) for i, j in peaks.indices]

    dec_full = decompose(cov, k)
    anchor_point = _ray_anchor(geom, anchor)
    positions, dist_degraded = _distance_stage(
        dec_full, geom, anchor_point, bearings, grid.distance_axis(),
        "modified:distance")
    return [SourceEstimate.from_position(pos, method="modified",
                                         degraded=peaks.degraded or bad)
            for pos, bad in zip(positions, dist_degraded)]


def complexity_counts(method: str, geom: ArrayGeometry, grid: GridSpec,
                      k: int, q: int) -> CostModel:
    """Published closed-form spectrum costs, factored as count x per-eval.

    With both axes sampled M times these reproduce the textbook
    expressions: 2M^3(M-K) for the full 2D search, 2M^2(M/Q - K + 1) for
    Q one-dimensional sub-array searches, and 2M^2(M - 2W + K) plus
    2M^2(5MK - 5K^2) for the two stages of the decoupled baseline (for
    the modified tags, ``q`` is the window count W).
    """
    m = geom.m
    a = len(grid.azimuth_axis())
    if method == "music2d":
        return CostModel.of(a * len(grid.distance_axis()), 2 * m * (m - k))
    if method == "proposed":
        if q < 1 or m % q:
            raise ConfigError(f"{q} sub-arrays do not divide {m} elements")
        n = m // q
        return CostModel.of(q * a, 2 * n * (n - k + 1))
    if method == "modified_angle":
        return CostModel.of(a, 2 * m * (m - 2 * q + k))
    if method == "modified_distance":
        return CostModel.of(k * len(grid.distance_axis()), 10 * m * (m - k))
    raise ConfigError(f"unknown method tag {method!r}")


def measured_cost(meter, stage: str) -> CostModel:
    "Instrumented spectrum cost of one recorded stage as a CostModel."
    stats = meter.stages.get(stage)
    if stats is None or stats.evals == 0:
        raise ConfigError(f"no recorded stage {stage!r}")
    per_eval, rem = divmod(stats.macs, stats.evals)
    if rem:
        raise ConfigError(f"stage {stage!r} has a non-uniform per-eval cost")
    return CostModel.of(stats.evals, per_eval)
