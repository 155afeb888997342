"""Covariance estimation, subspace decomposition, and spectrum search.

The spectrum of a steering vector a against a noise basis U_n is
1 / (||U_n^H a||^2 + eps) with eps = 1e-12 * ||a||^2; large values mean
a is close to the signal subspace.  Grid evaluation is chunked with a
fixed chunk size so results are bit-identical regardless of worker
count, and K-peak extraction can run either on a materialized value
array or streaming over the same chunks with bounded memory.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import ArrayGeometry, UPA, direction, steering_matrix
from .grids import GridSpec

EPS_SCALE = 1e-12
DEFAULT_CHUNK_CELLS = 16384


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    "Hermitian sample covariance with the snapshot count that produced it."

    matrix: np.ndarray
    snapshot_count: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError("covariance must be square")
        m = 0.5 * (m + m.conj().T)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class SubspaceDecomposition:
    """Signal/noise eigenvector split of a covariance matrix.

    ``signal_basis`` holds the eigenvectors of the K largest eigenvalues,
    ``noise_basis`` the remaining M-K; ``eigenvalues`` are sorted
    descending.  Each eigenvector's phase is fixed so its
    largest-magnitude component is real-positive, which makes reruns
    bit-identical.
    """

    signal_basis: np.ndarray
    noise_basis: np.ndarray
    eigenvalues: np.ndarray

    @property
    def m(self) -> int:
        return self.signal_basis.shape[0]

    @property
    def k(self) -> int:
        return self.signal_basis.shape[1]


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    "Spectrum values over the cross-product of named, increasing axes."

    axes: tuple[np.ndarray, ...]
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != shape:
            raise ConfigError("spectrum values do not match the axes")
        for ax in self.axes:
            if len(ax) > 1 and np.any(np.diff(ax) <= 0):
                raise ConfigError("grid axes must be strictly increasing")


@dataclass(frozen=True)
class PeakSet:
    """Top-K spectrum cells: strict local maxima first, padded with the
    largest remaining cells (and flagged degraded) when the grid has
    fewer than K local maxima."""

    indices: tuple[tuple[int, ...], ...]
    values: np.ndarray
    degraded: bool


def sample_covariance(snapshots) -> CovarianceEstimate:
    """Plain sample covariance Y Y^H / T, symmetrized.

    Accepts a SnapshotSet or a bare (M, T) complex matrix.
    """
    data = np.asarray(getattr(snapshots, "data", snapshots))
    if data.ndim != 2:
        raise ConfigError("snapshots must form an (M, T) matrix")
    t = data.shape[1]
    return CovarianceEstimate(matrix=data @ data.conj().T / t, snapshot_count=t)


def decompose(cov, k: int) -> SubspaceDecomposition:
    "Split a covariance into K signal and M-K noise eigenvector columns."
    if isinstance(cov, np.ndarray):
        cov = CovarianceEstimate(matrix=cov, snapshot_count=0)
    m = cov.matrix.shape[0]
    if not 1 <= k < m:
        raise ConfigError(f"signal dimension {k} must satisfy 1 <= k < {m}")
    w, v = np.linalg.eigh(cov.matrix)
    w, v = w[::-1], v[:, ::-1]  # eigh sorts ascending
    anchor = np.argmax(np.abs(v), axis=0)
    phases = v[anchor, np.arange(m)]
    v = v * (np.abs(phases) / phases)[None, :]
    return SubspaceDecomposition(signal_basis=v[:, :k].copy(),
                                 noise_basis=v[:, k:].copy(),
                                 eigenvalues=w.copy())


def spectrum_values(decomp: SubspaceDecomposition, steering: np.ndarray) -> np.ndarray:
    "Spectrum for each steering column of an (M, P) matrix; returns (P,)."
    g = decomp.noise_basis.conj().T @ steering
    denom = np.einsum("ij,ij->j", g.conj(), g).real
    norms = np.einsum("ij,ij->j", steering.conj(), steering).real
    return 1.0 / (denom + EPS_SCALE * norms)


def music_spectrum_value(decomp: SubspaceDecomposition, a: np.ndarray) -> float:
    "Spectrum of a single steering vector."
    a = np.asarray(a)
    if a.shape != (decomp.m,):
        raise ConfigError(f"steering vector must have length {decomp.m}")
    return float(spectrum_values(decomp, a.reshape(-1, 1))[0])


def _grid_axes(geom: ArrayGeometry, grid: GridSpec, mode: str):
    "Resolve which axes a search uses for this geometry and model."
    names = ["azimuth"]
    axes = [grid.azimuth_axis()]
    if geom.kind == UPA:
        names.append("elevation")
        axes.append(grid.elevation_axis())
    if mode == "farfield":
        if grid.distance is not None:
            raise ConfigError("far-field searches take no distance axis")
    else:
        names.append("distance")
        axes.append(grid.distance_axis())
    return tuple(names), tuple(axes)


def _chunk_steering(geom, mode, names, axes, lo, hi):
    "Steering matrix for flat grid cells [lo, hi) in C order."
    shape = tuple(len(a) for a in axes)
    idx = np.unravel_index(np.arange(lo, hi), shape)
    coords = {name: axes[j][idx[j]] for j, name in enumerate(names)}
    az = coords["azimuth"]
    el = coords.get("elevation", 0.0)
    if mode == "farfield":
        return steering_matrix(geom, mode, azimuths=az,
                               elevations=coords.get("elevation"))
    positions = coords["distance"][:, None] * direction(az, el)
    return steering_matrix(geom, mode, positions=positions)


def _spectrum_chunks(decomp, geom, names, axes, mode, chunk_cells):
    "Yield (lo, values) over the flat grid in ascending order."
    cells = int(np.prod([len(a) for a in axes], dtype=np.int64))
    for lo in range(0, cells, chunk_cells):
        hi = min(lo + chunk_cells, cells)
        steer = _chunk_steering(geom, mode, names, axes, lo, hi)
        yield lo, spectrum_values(decomp, steer)


def evaluate_spectrum(decomp: SubspaceDecomposition, geom: ArrayGeometry,
                      grid: GridSpec, steering_mode: str = "exact",
                      workers: int = 1,
                      chunk_cells: int = DEFAULT_CHUNK_CELLS) -> SpectrumGrid:
    """Evaluate the spectrum over the full grid cross-product.

    Cells are independent, so the grid is processed in fixed-size chunks
    that may be distributed over ``workers`` threads; the chunking does
    not depend on the worker count, which keeps the result bit-identical
    to a single-worker run.
    """
    names, axes = _grid_axes(geom, grid, steering_mode)
    shape = tuple(len(a) for a in axes)
    cells = int(np.prod(shape, dtype=np.int64))
    out = np.empty(cells)
    if workers <= 1:
        for lo, vals in _spectrum_chunks(decomp, geom, names, axes,
                                         steering_mode, chunk_cells):
            out[lo:lo + len(vals)] = vals
    else:
        bounds = list(range(0, cells, chunk_cells))

        def work(lo):
            hi = min(lo + chunk_cells, cells)
            steer = _chunk_steering(geom, steering_mode, names, axes, lo, hi)
            out[lo:hi] = spectrum_values(decomp, steer)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    return SpectrumGrid(axes=axes, names=names, values=out.reshape(shape))


def _slab_local_max(prev, cur, nxt):
    "Strict local-max mask of one slab given its axis-0 neighbors."
    mask = np.ones(cur.shape, dtype=bool)
    if prev is not None:
        mask &= cur > prev
    if nxt is not None:
        mask &= cur > nxt
    for ax in range(cur.ndim):
        hi = [slice(None)] * cur.ndim
        lo = [slice(None)] * cur.ndim
        hi[ax] = slice(1, None)
        lo[ax] = slice(None, -1)
        upper, lower = cur[tuple(hi)], cur[tuple(lo)]
        mask[tuple(hi)] &= upper > lower
        mask[tuple(lo)] &= lower > upper
    return mask


class _PeakCollector:
    """Keeps the global top-K peak cells and top-K non-peak cells while
    slabs stream through, ordered by (value descending, flat index)."""

    def __init__(self, shape, k):
        self.shape = shape
        self.k = k
        self.slab_cells = int(np.prod(shape[1:], dtype=np.int64)) if len(shape) > 1 else 1
        self.peaks: list[tuple[float, int]] = []
        self.others: list[tuple[float, int]] = []

    def _push(self, bucket, vals, flats):
        if vals.size == 0:
            return
        if vals.size > self.k:
            sel = np.lexsort((flats, -vals))[:self.k]
            vals, flats = vals[sel], flats[sel]
        bucket.extend(zip(vals.tolist(), flats.tolist()))
        bucket.sort(key=lambda t: (-t[0], t[1]))
        del bucket[self.k:]

    def add_slab(self, index, prev, cur, nxt):
        mask = _slab_local_max(prev, cur, nxt).reshape(-1)
        vals = cur.reshape(-1)
        flats = index * self.slab_cells + np.arange(vals.size, dtype=np.int64)
        self._push(self.peaks, vals[mask], flats[mask])
        self._push(self.others, vals[~mask], flats[~mask])

    def finalize(self) -> PeakSet:
        chosen = list(self.peaks)
        degraded = len(chosen) < self.k
        if degraded:
            chosen.extend(self.others[:self.k - len(chosen)])
        if len(chosen) < self.k:
            raise ConfigError("grid has fewer cells than requested peaks")
        indices = tuple(tuple(int(i) for i in np.unravel_index(f, self.shape))
                        for _, f in chosen)
        return PeakSet(indices=indices,
                       values=np.array([v for v, _ in chosen]),
                       degraded=degraded)


def find_k_peaks(grid: SpectrumGrid, k: int) -> PeakSet:
    """Top ``k`` strict local maxima of a spectrum grid.

    A cell is a peak when it strictly exceeds every existing
    axis-adjacent neighbor (boundary cells compare only the neighbors
    they have).  Results are ordered by descending value; ties break on
    the flat C-order index, so no duplicates are possible.  If the grid
    holds fewer than ``k`` local maxima, the largest remaining cells pad
    the result and the set is flagged degraded.
    """
    if k < 1:
        raise ConfigError("peak count must be positive")
    vals = grid.values
    if vals.size < k:
        raise ConfigError("grid has fewer cells than requested peaks")
    collector = _PeakCollector(vals.shape, k)
    n0 = vals.shape[0]
    for i in range(n0):
        prev = vals[i - 1] if i > 0 else None
        nxt = vals[i + 1] if i < n0 - 1 else None
        collector.add_slab(i, prev, vals[i], nxt)
    return collector.finalize()


def streaming_k_peaks(decomp: SubspaceDecomposition, geom: ArrayGeometry,
                      grid: GridSpec, steering_mode: str, k: int,
                      chunk_cells: int = DEFAULT_CHUNK_CELLS) -> tuple[PeakSet, tuple]:
    """Find the top-K peaks without materializing the full value array.

    Spectrum chunks stream in flat order into per-slab buffers (a slab
    is one index of the first axis); each completed slab is tested
    against its neighbors and only bounded top-K bookkeeping is kept.
    Uses the same chunking as :func:`evaluate_spectrum`, so the selected
    peaks are identical to the materialized path.
    """
    names, axes = _grid_axes(geom, grid, steering_mode)
    shape = tuple(len(a) for a in axes)
    cells = int(np.prod(shape, dtype=np.int64))
    if cells < k:
        raise ConfigError("grid has fewer cells than requested peaks")
    n0 = shape[0]
    slab_cells = cells // n0
    slab_shape = shape[1:]
    collector = _PeakCollector(shape, k)

    done: dict[int, np.ndarray] = {}  # completed slabs awaiting neighbors
    emitted = -1

    def try_emit(final=False):
        nonlocal emitted
        while (s := emitted + 1) in done:
            if s + 1 not in done and not (final and s == n0 - 1):
                break
            collector.add_slab(s, done.get(s - 1), done[s], done.get(s + 1))
            emitted = s
            done.pop(s - 1, None)

    buf = np.empty(slab_cells)
    filled = 0
    slab_index = 0
    for lo, vals in _spectrum_chunks(decomp, geom, names, axes,
                                     steering_mode, chunk_cells):
        pos = 0
        while pos < len(vals):
            take = min(len(vals) - pos, slab_cells - filled)
            buf[filled:filled + take] = vals[pos:pos + take]
            filled += take
            pos += take
            if filled == slab_cells:
                done[slab_index] = buf.reshape(slab_shape).copy()
                slab_index += 1
                filled = 0
                try_emit()
    try_emit(final=True)
    return collector.finalize(), axes


def grid_peaks(decomp: SubspaceDecomposition, geom: ArrayGeometry,
               grid: GridSpec, steering_mode: str, k: int, *,
               workers: int = 1, chunk_cells: int = DEFAULT_CHUNK_CELLS,
               materialize_cap: int | None = 2_000_000) -> tuple[PeakSet, tuple]:
    """Evaluate a spectrum grid and extract its top-K peaks.

    Falls back to the streaming path when the cell count exceeds
    ``materialize_cap``; both paths return identical peaks.
    """
    names, axes = _grid_axes(geom, grid, steering_mode)
    cells = int(np.prod([len(a) for a in axes], dtype=np.int64))
    if materialize_cap is not None and cells > materialize_cap:
        return streaming_k_peaks(decomp, geom, grid, steering_mode, k,
                                 chunk_cells=chunk_cells)
    spectrum = evaluate_spectrum(decomp, geom, grid, steering_mode,
                                 workers=workers, chunk_cells=chunk_cells)
    return find_k_peaks(spectrum, k), spectrum.axes


def spectrum_to_csv(grid: SpectrumGrid, path) -> None:
    "Write one row per grid cell: axis values, then the spectrum value."
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(grid.names) + ["spectrum"])
        mesh = np.meshgrid(*grid.axes, indexing="ij")
        flat = [m.reshape(-1) for m in mesh] + [grid.values.reshape(-1)]
        for row in zip(*flat):
            writer.writerow([f"{x:.9g}" for x in row])
