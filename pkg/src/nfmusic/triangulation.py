"""Sub-array angle estimation and bearing-line triangulation.

The aperture is split into Q sub-arrays; each runs a far-field angular
MUSIC search (1D azimuth for a ULA, 2D azimuth x elevation for a UPA)
and reports K arrival angles sorted ascending by azimuth, so that the
j-th angle of every sub-array is attributed to the same source.  Each
source is then the least-squares intersection of the Q bearing lines
anchored at the sub-array centers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import instrumentation
from .errors import ConfigError, DegenerateGeometryError
from .estimators import SourceEstimate
from .geometry import ArrayGeometry, UPA, bearing_from, direction, subarray_split
from .grids import GridSpec
from .subspace import decompose, grid_peaks, sample_covariance

PARALLEL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SubarrayAngleSet:
    """Per-sub-array arrival angles for K sources.

    ``centers`` is (Q, 3); ``azimuths`` and ``elevations`` are (Q, K)
    with rows sorted ascending by azimuth (elevations are zero for a
    linear array).  ``degraded`` flags sub-arrays whose peak search had
    to pad missing local maxima.
    """

    centers: np.ndarray
    azimuths: np.ndarray
    elevations: np.ndarray
    degraded: np.ndarray

    @property
    def q(self) -> int:
        return self.centers.shape[0]

    @property
    def k(self) -> int:
        return self.azimuths.shape[1]


@dataclass(frozen=True, eq=False)
class TriangulationSystem:
    """Stacked linear system for one source, b = A t.

    ``offsets`` (b) stacks p_1 - p_q for q = 2..Q; ``design`` (A) holds
    -d_1 in its first column and +d_q in column q's own block row;
    ``directions`` are the Q unit bearing vectors.
    """

    offsets: np.ndarray
    design: np.ndarray
    directions: np.ndarray


def estimate_subarray_angles(snapshots, geom: ArrayGeometry, q: int, k: int,
                             angle_grid: GridSpec, *,
                             workers: int = 1) -> SubarrayAngleSet:
    """Run far-field angular MUSIC independently on each of ``q`` sub-arrays.

    Each sub-array needs strictly more elements than sources.  Angles
    are returned sorted ascending by azimuth per sub-array.
    """
    subs = subarray_split(geom, q)
    n = subs[0].geometry.m
    if n <= k:
        raise ConfigError(f"sub-arrays of {n} elements cannot resolve {k} sources")
    grid = angle_grid.angles_only()
    data = np.asarray(getattr(snapshots, "data", snapshots))

    centers = np.stack([s.center for s in subs])
    azimuths = np.empty((q, k))
    elevations = np.zeros((q, k))
    degraded = np.zeros(q, dtype=bool)
    for j, sub in enumerate(subs):
        cov = sample_covariance(data[sub.element_indices])
        dec = decompose(cov, k)
        t0 = time.perf_counter()
        peaks, axes = grid_peaks(dec, sub.geometry, grid, "farfield", k,
                                 workers=workers)
        cells = int(np.prod([len(a) for a in axes], dtype=np.int64))
        instrumentation.record("proposed:spectrum", cells,
                               cells * instrumentation.projection_macs(n, n - k),
                               time.perf_counter() - t0)
        az = np.array([axes[0][idx[0]] for idx in peaks.indices])
        el = np.array([axes[1][idx[1]] for idx in peaks.indices]) \
            if geom.kind == UPA else np.zeros(k)
        order = np.lexsort((el, az))
        azimuths[j] = az[order]
        elevations[j] = el[order]
        degraded[j] = peaks.degraded
    return SubarrayAngleSet(centers=centers, azimuths=azimuths,
                            elevations=elevations, degraded=degraded)


def build_triangulation_system(angles: SubarrayAngleSet, source: int,
                               dimension: int) -> TriangulationSystem:
    "Assemble the stacked bearing-line system for one source index."
    if dimension not in (2, 3):
        raise ConfigError("triangulation runs in 2 or 3 dimensions")
    qn = angles.q
    if qn < 2:
        raise ConfigError("triangulation needs at least two sub-arrays")
    dirs = direction(angles.azimuths[:, source], angles.elevations[:, source])
    dirs = dirs[:, :dimension]
    centers = angles.centers[:, :dimension]
    rows = dimension * (qn - 1)
    design = np.zeros((rows, qn))
    offsets = np.empty(rows)
    for j in range(1, qn):
        block = slice(dimension * (j - 1), dimension * j)
        offsets[block] = centers[0] - centers[j]
        design[block, 0] = -dirs[0]
        design[block, j] = dirs[j]
    return TriangulationSystem(offsets=offsets, design=design, directions=dirs)


def _cross_norm(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape[-1] == 2:
        return abs(a[0] * b[1] - a[1] * b[0])
    return float(np.linalg.norm(np.cross(a, b)))


def _all_parallel(dirs: np.ndarray) -> bool:
    for a in range(len(dirs)):
        for b in range(a + 1, len(dirs)):
            if _cross_norm(dirs[a], dirs[b]) > PARALLEL_TOL:
                return False
    return True


def triangulate(angles: SubarrayAngleSet, dimension: int) -> list[SourceEstimate]:
    """Intersect each source's bearing lines by least squares.

    Solves (A^T A) t = A^T b per source, falling back to the
    pseudo-inverse when the normal equations are ill-conditioned, and
    places the source at the mean of the per-sub-array reconstructions
    p_q + t_q d_q.  Raises DegenerateGeometryError when every pair of
    bearings is parallel and no intersection exists.
    """
    estimates = []
    for s in range(angles.k):
        system = build_triangulation_system(angles, s, dimension)
        if _all_parallel(system.directions):
            raise DegenerateGeometryError(
                f"all bearings parallel for source {s}", source_index=s)
        a, b = system.design, system.offsets
        ata = a.T @ a
        if np.linalg.cond(ata) > 1e12:
            t = np.linalg.pinv(a) @ b
        else:
            t = np.linalg.solve(ata, a.T @ b)
        points = angles.centers[:, :dimension] + t[:, None] * system.directions
        pos = points.mean(axis=0)
        if dimension == 2:
            pos = np.array([pos[0], pos[1], 0.0])
        trail = list(zip(angles.azimuths[:, s].tolist(),
                         angles.elevations[:, s].tolist()))
        estimates.append(SourceEstimate.from_position(
            pos, method="proposed", degraded=bool(angles.degraded.any()),
            angle_trail=trail))
    return estimates


def proposed_localize(snapshots, geom: ArrayGeometry, q: int, k: int,
                      angle_grid: GridSpec, *,
                      workers: int = 1) -> list[SourceEstimate]:
    "Sub-array angular MUSIC followed by bearing-line triangulation."
    angles = estimate_subarray_angles(snapshots, geom, q, k, angle_grid,
                                      workers=workers)
    return triangulate(angles, 3 if geom.kind == UPA else 2)


def association_swap(truth_positions, centers) -> bool:
    """Simulation-only diagnostic: do the true sources keep one azimuth
    order from every sub-array vantage point?

    Sorting-based association across sub-arrays is only consistent when
    they do; a True return marks a trial where identity assignment by
    sorted azimuth must mix sources up.
    """
    orders = []
    for c in np.atleast_2d(centers):
        az = [bearing_from(c, p)[0] for p in truth_positions]
        orders.append(tuple(int(i) for i in np.argsort(az, kind="stable")))
    return any(o != orders[0] for o in orders[1:])
