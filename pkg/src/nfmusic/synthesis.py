"""Ground-truth source placement and synthetic snapshot generation.

The observation model is y[t] = sum_k sqrt(beta_k) * exp(-j*2*pi*r_1k/lambda)
* a_exact(source_k) * x_k[t] + n[t] with x_k[t] ~ CN(0, rho_k) i.i.d. across
sources and snapshots and n[t] ~ CN(0, sigma^2 I).  Snapshots are a pure
function of (scenario, seed): identical inputs give bit-identical output.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .geometry import ArrayGeometry, UPA, polar_from_position, position_from_polar, steering_matrix

_SNAPSHOT_MAGIC = b"NFSNAP1\x00"


@dataclass(frozen=True, eq=False)
class SourceTruth:
    """One emitting source: position plus signal power and channel gain.

    ``power`` is the variance of the transmitted symbol stream, ``gain``
    the (range-independent) channel gain.  Range and arrival angles are
    derived from the position relative to the reference element at the
    origin.
    """

    position: np.ndarray
    power: float = 1.0
    gain: float = 1.0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).ravel()
        if pos.size == 2:
            pos = np.array([pos[0], pos[1], 0.0])
        if pos.size != 3:
            raise ConfigError("source position must be 2D or 3D")
        pos.flags.writeable = False
        object.__setattr__(self, "position", pos)
        if self.power <= 0.0 or self.gain <= 0.0:
            raise ConfigError("source power and gain must be positive")
        if np.linalg.norm(pos) <= 0.0:
            raise ConfigError("source range must be positive")

    @property
    def range_m(self) -> float:
        return polar_from_position(self.position)[0]

    @property
    def azimuth(self) -> float:
        return polar_from_position(self.position)[1]

    @property
    def elevation(self) -> float:
        return polar_from_position(self.position)[2]


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to synthesize one observation: geometry, sources,
    noise level, snapshot count and the RNG seed."""

    geometry: ArrayGeometry
    sources: tuple[SourceTruth, ...]
    noise_variance: float
    snapshots: int
    rng_seed: int

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.noise_variance < 0.0:
            raise ConfigError("noise variance must be non-negative")
        if self.snapshots < 1:
            raise ConfigError("need at least one snapshot")
        if len(self.sources) >= self.geometry.m:
            raise ConfigError("source count must stay below the element count")

    @property
    def source_count(self) -> int:
        return len(self.sources)


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    "Complex observation matrix, M rows by T snapshot columns."

    data: np.ndarray
    scenario: Scenario

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.complex128)
        if d.shape != (self.scenario.geometry.m, self.scenario.snapshots):
            raise ConfigError(f"snapshot matrix shape {d.shape} does not match "
                              "the scenario")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)


def _check_interval(interval, name, lo_open, hi_open):
    lo, hi = float(interval[0]), float(interval[1])
    if hi < lo:
        raise ConfigError(f"empty {name} interval [{lo}, {hi}]")
    if not (lo_open < lo and hi < hi_open):
        raise ConfigError(f"{name} interval [{lo}, {hi}] outside "
                          f"({lo_open}, {hi_open})")
    return lo, hi


def sample_sources(geom: ArrayGeometry, k: int, range_interval,
                   angle_interval, rng: np.random.Generator,
                   elevation_interval=None) -> list[SourceTruth]:
    """Draw ``k`` sources uniformly in range and angle.

    Ranges come from ``range_interval`` (meters, measured from the
    reference element), azimuths from ``angle_interval`` (radians).  For
    a planar array, elevations are drawn from ``elevation_interval``
    (defaults to the azimuth interval).  Degenerate intervals with
    lo == hi are allowed and give point masses.
    """
    if k < 0:
        raise ConfigError("source count must be non-negative")
    r_lo, r_hi = _check_interval(range_interval, "range", 0.0, np.inf)
    a_lo, a_hi = _check_interval(angle_interval, "angle", -np.pi / 2, np.pi / 2)
    if elevation_interval is None:
        elevation_interval = (a_lo, a_hi)
    e_lo, e_hi = _check_interval(elevation_interval, "elevation",
                                 -np.pi / 2, np.pi / 2)
    sources = []
    for _ in range(k):
        r = rng.uniform(r_lo, r_hi)
        az = rng.uniform(a_lo, a_hi)
        el = rng.uniform(e_lo, e_hi) if geom.kind == UPA else 0.0
        sources.append(SourceTruth(position=position_from_polar(r, az, el)))
    return sources


def set_noise_for_snr(scenario: Scenario, snr_db: float) -> Scenario:
    """Return a copy of the scenario with the noise variance set so the
    weakest source sits at ``snr_db`` per element, pre-beamforming:
    sigma^2 = min_k(gain_k * power_k) / 10^(snr/10)."""
    if not scenario.sources:
        raise ConfigError("cannot set an SNR without sources")
    weakest = min(s.gain * s.power for s in scenario.sources)
    return replace(scenario, noise_variance=weakest / 10.0 ** (snr_db / 10.0))


def synthesize_snapshots(scenario: Scenario) -> SnapshotSet:
    "Generate the M x T observation matrix for a scenario."
    rng = np.random.default_rng(scenario.rng_seed)
    geom = scenario.geometry
    m, t, k = geom.m, scenario.snapshots, scenario.source_count

    signals = (rng.standard_normal((k, t)) + 1j * rng.standard_normal((k, t)))
    noise = (rng.standard_normal((m, t)) + 1j * rng.standard_normal((m, t)))
    noise *= np.sqrt(scenario.noise_variance / 2.0)

    data = noise
    if k:
        positions = np.stack([s.position for s in scenario.sources])
        steer = steering_matrix(geom, "exact", positions=positions)
        ranges = np.linalg.norm(positions, axis=1)
        coeff = np.array([np.sqrt(s.gain) for s in scenario.sources]) \
            * np.exp(-2j * np.pi * ranges / geom.wavelength)
        powers = np.sqrt(np.array([s.power for s in scenario.sources]) / 2.0)
        data = data + (steer * coeff[None, :]) @ (signals * powers[:, None])
    return SnapshotSet(data=data, scenario=scenario)


def save_snapshots(snapshots: SnapshotSet, path) -> None:
    """Dump a snapshot matrix to the raw binary interchange format.

    Layout: 32-byte header (8-byte magic ``NFSNAP1\\0``, uint32 M, uint32 T,
    float64 wavelength, 8 reserved zero bytes), then the M x T matrix
    row-major as little-endian float64 (re, im) pairs.
    """
    scen = snapshots.scenario
    header = _SNAPSHOT_MAGIC + struct.pack("<IId", scen.geometry.m,
                                           scen.snapshots,
                                           scen.geometry.wavelength)
    header += b"\x00" * (32 - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(snapshots.data).astype("<c16").tobytes())


def load_snapshots(path) -> tuple[np.ndarray, float]:
    "Read a raw snapshot dump; returns (M x T complex matrix, wavelength)."
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 32 or blob[:8] != _SNAPSHOT_MAGIC:
        raise ConfigError(f"{path}: not a snapshot dump")
    m, t, wavelength = struct.unpack("<IId", blob[8:24])
    expected = 32 + 16 * m * t
    if len(blob) != expected:
        raise ConfigError(f"{path}: expected {expected} bytes, got {len(blob)}")
    data = np.frombuffer(blob[32:], dtype="<c16").reshape(m, t)
    return data.astype(np.complex128), wavelength
