"""Sensor-array geometry: element layouts, distances, steering vectors.

Coordinate conventions, fixed throughout the package: a ULA spans the
Y-axis with element 1 at the origin and boresight along +X; a UPA spans
the Y-Z plane with horizontal element index i(m) = (m-1) mod M_H along Y
and vertical index k(m) = (m-1) // M_H along Z.  Azimuth is measured
from the X-axis toward +Y, elevation toward +Z.  Element 1 is the phase
reference of every steering vector, so the first entry is always 1.

Steering vectors are exp(-j*(2*pi/lambda)*(r_m - r_1)) with r_m taken
from one of three distance models:

* ``exact``    -- Euclidean distance from each element to the source.
* ``fresnel``  -- second-order expansion of the exact distance in the
                  element offset (spherical-wavefront approximation).
* ``farfield`` -- planar wavefront, distance drops out entirely and the
                  vector depends on the arrival angles only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DegenerateGeometryError

ULA = "ula"
UPA = "upa"

STEERING_MODES = ("exact", "fresnel", "farfield")


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear or planar sensor array.

    ULA fields: ``m`` elements with inter-element ``spacing``.
    UPA fields: ``m_h`` x ``m_v`` panel with ``spacing_h`` / ``spacing_v``;
    ``m`` always holds the total element count.
    """

    kind: str
    m: int
    wavelength: float
    spacing: float = 0.0
    m_h: int = 0
    m_v: int = 0
    spacing_h: float = 0.0
    spacing_v: float = 0.0

    def __post_init__(self):
        if self.kind not in (ULA, UPA):
            raise ConfigError(f"unknown array kind {self.kind!r}")
        if self.wavelength <= 0.0:
            raise ConfigError("wavelength must be positive")
        if self.m < 1:
            raise ConfigError("arrays need at least 1 element")
        if self.kind == ULA:
            if self.spacing <= 0.0:
                raise ConfigError("ULA spacing must be positive")
        else:
            if self.m_h < 1 or self.m_v < 1 or self.m_h * self.m_v != self.m:
                raise ConfigError("UPA element counts are inconsistent")
            if self.spacing_h <= 0.0 or self.spacing_v <= 0.0:
                raise ConfigError("UPA spacings must be positive")


@dataclass(frozen=True)
class FieldBoundaries:
    """Field-region boundaries of an aperture.

    ``bjornson`` = 2*D is the range beyond which the channel gain is
    effectively constant across elements; ``fraunhofer`` = 2*D^2/lambda
    is the planar-wavefront (far-field) boundary; ``aperture`` is the
    maximum aperture length D itself.
    """

    bjornson: float
    fraunhofer: float
    aperture: float


@dataclass(frozen=True, eq=False)
class Subarray:
    """One contiguous sub-aperture of a parent array.

    ``element_indices`` index rows of the parent snapshot matrix
    (0-based); ``center`` is the geometric center of the sub-aperture in
    parent coordinates and serves as the triangulation anchor.  The
    local ``geometry`` keeps its own first element as phase reference,
    which is irrelevant to any MUSIC spectrum evaluated on it.
    """

    geometry: ArrayGeometry
    element_indices: np.ndarray
    center: np.ndarray


def ula(m: int, spacing: float, wavelength: float) -> ArrayGeometry:
    "Build a uniform linear array geometry."
    return ArrayGeometry(kind=ULA, m=m, wavelength=wavelength, spacing=spacing)


def upa(m_h: int, m_v: int, spacing_h: float, spacing_v: float,
        wavelength: float) -> ArrayGeometry:
    "Build a uniform planar array geometry."
    return ArrayGeometry(kind=UPA, m=m_h * m_v, wavelength=wavelength,
                         m_h=m_h, m_v=m_v,
                         spacing_h=spacing_h, spacing_v=spacing_v)


@lru_cache(maxsize=128)
def _cached_positions(geom: ArrayGeometry) -> np.ndarray:
    if geom.kind == ULA:
        pos = np.zeros((geom.m, 3))
        pos[:, 1] = geom.spacing * np.arange(geom.m)
    else:
        ih, kv = _upa_indices(geom)
        pos = np.zeros((geom.m, 3))
        pos[:, 1] = geom.spacing_h * ih
        pos[:, 2] = geom.spacing_v * kv
    pos.flags.writeable = False
    return pos


def _upa_indices(geom: ArrayGeometry) -> tuple[np.ndarray, np.ndarray]:
    "Horizontal and vertical indices i(m), k(m) for every element."
    n = np.arange(geom.m)
    return n % geom.m_h, n // geom.m_h


def element_positions(geom: ArrayGeometry) -> np.ndarray:
    """Element coordinates as a read-only (M, 3) array, element 1 at the
    origin."""
    return _cached_positions(geom)


def aperture(geom: ArrayGeometry) -> float:
    "Maximum aperture length D (panel diagonal for a UPA)."
    if geom.kind == ULA:
        return (geom.m - 1) * geom.spacing
    return math.hypot((geom.m_h - 1) * geom.spacing_h,
                      (geom.m_v - 1) * geom.spacing_v)


def field_boundaries(geom: ArrayGeometry) -> FieldBoundaries:
    "Gain-constancy and far-field boundaries of the aperture."
    d = aperture(geom)
    return FieldBoundaries(bjornson=2.0 * d,
                           fraunhofer=2.0 * d * d / geom.wavelength,
                           aperture=d)


def _as_points(positions) -> np.ndarray:
    "Normalize source coordinates to an (P, 3) float array."
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    if pts.shape[-1] == 2:
        pts = np.concatenate([pts, np.zeros((pts.shape[0], 1))], axis=1)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ConfigError(f"positions must be (P, 2) or (P, 3), got {pts.shape}")
    return pts


def direction(azimuth, elevation=0.0) -> np.ndarray:
    "Unit direction vector(s) (cos(el)cos(az), cos(el)sin(az), sin(el))."
    az = np.asarray(azimuth, dtype=float)
    el = np.broadcast_to(np.asarray(elevation, dtype=float), az.shape)
    ce = np.cos(el)
    return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1)


def position_from_polar(range_m, azimuth, elevation=0.0) -> np.ndarray:
    "Cartesian position(s) at the given range and arrival angles."
    r = np.asarray(range_m, dtype=float)
    return r[..., None] * direction(azimuth, elevation)


def polar_from_position(position) -> tuple[float, float, float]:
    "Range, azimuth and elevation of a point relative to the origin."
    p = np.asarray(position, dtype=float).ravel()
    if p.size == 2:
        p = np.array([p[0], p[1], 0.0])
    r = float(np.linalg.norm(p))
    if r == 0.0:
        raise DegenerateGeometryError("polar angles undefined at the origin")
    az = math.atan2(p[1], p[0])
    el = math.asin(max(-1.0, min(1.0, p[2] / r)))
    return r, az, el


def bearing_from(point, target) -> tuple[float, float]:
    "Azimuth and elevation of ``target`` as seen from ``point``."
    delta = np.asarray(target, dtype=float) - np.asarray(point, dtype=float)
    _, az, el = polar_from_position(delta)
    return az, el


def exact_distance(geom: ArrayGeometry, element: int, source) -> float:
    """Euclidean distance from element ``element`` (1-based) to a source.

    For a ULA this equals the unexpanded law-of-cosines expression
    sqrt(r^2 + off^2 - 2*off*r*sin(az)) with off = (m-1)*d.
    """
    if not 1 <= element <= geom.m:
        raise ConfigError(f"element index {element} outside 1..{geom.m}")
    pt = _as_points(source)[0]
    dist = float(np.linalg.norm(pt - element_positions(geom)[element - 1]))
    if dist == 0.0:
        raise DegenerateGeometryError("source coincides with an array element")
    return dist


def exact_distances(geom: ArrayGeometry, positions) -> np.ndarray:
    "Euclidean distances from every element to every source, (M, P)."
    pts = _as_points(positions)
    diff = element_positions(geom)[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("mpc,mpc->mp", diff, diff))


def fresnel_distance(geom: ArrayGeometry, element: int, range_m: float,
                     azimuth: float, elevation: float = 0.0) -> float:
    """Spherical-wavefront (second-order) distance approximation.

    ULA: r*(1 + off^2*cos^2(az)/(2 r^2) - off*sin(az)/r).
    UPA: r + (i^2 dH^2 + k^2 dV^2)/(2 r)
           - i*dH*sin(az)cos(el) - k*dV*sin(el).
    """
    if range_m <= 0.0:
        raise ConfigError("range must be positive")
    if not 1 <= element <= geom.m:
        raise ConfigError(f"element index {element} outside 1..{geom.m}")
    if geom.kind == ULA:
        off = (element - 1) * geom.spacing
        s, c2 = math.sin(azimuth), math.cos(azimuth) ** 2
        return range_m * (1.0 + off * off * c2 / (2.0 * range_m ** 2)
                          - off * s / range_m)
    ih, kv = (element - 1) % geom.m_h, (element - 1) // geom.m_h
    u = math.sin(azimuth) * math.cos(elevation)
    v = math.sin(elevation)
    quad = (ih * geom.spacing_h) ** 2 + (kv * geom.spacing_v) ** 2
    return range_m + quad / (2.0 * range_m) \
        - ih * geom.spacing_h * u - kv * geom.spacing_v * v


def _delta_exact(geom, pts):
    dist = exact_distances(geom, pts)
    if np.any(dist == 0.0):
        raise DegenerateGeometryError("source coincides with an array element")
    return dist - dist[0:1, :]


def _delta_fresnel(geom, pts):
    r = np.linalg.norm(pts, axis=1)
    if np.any(r <= 0.0):
        raise DegenerateGeometryError("fresnel model needs a nonzero range")
    if geom.kind == ULA:
        off = geom.spacing * np.arange(geom.m)
        sin_az = pts[:, 1] / r
        cos2 = 1.0 - sin_az ** 2
        return (off ** 2)[:, None] * (cos2 / (2.0 * r))[None, :] \
            - off[:, None] * sin_az[None, :]
    ih, kv = _upa_indices(geom)
    u = pts[:, 1] / r
    v = pts[:, 2] / r
    quad = (ih * geom.spacing_h) ** 2 + (kv * geom.spacing_v) ** 2
    return quad[:, None] / (2.0 * r)[None, :] \
        - (ih * geom.spacing_h)[:, None] * u[None, :] \
        - (kv * geom.spacing_v)[:, None] * v[None, :]


def _delta_farfield(geom, azimuths, elevations):
    az = np.atleast_1d(np.asarray(azimuths, dtype=float))
    if geom.kind == ULA:
        off = geom.spacing * np.arange(geom.m)
        return -off[:, None] * np.sin(az)[None, :]
    if elevations is None:
        raise ValueError("UPA far-field steering needs elevation angles")
    el = np.broadcast_to(np.atleast_1d(np.asarray(elevations, dtype=float)), az.shape)
    ih, kv = _upa_indices(geom)
    u = np.sin(az) * np.cos(el)
    v = np.sin(el)
    return -(ih * geom.spacing_h)[:, None] * u[None, :] \
        - (kv * geom.spacing_v)[:, None] * v[None, :]


def steering_matrix(geom: ArrayGeometry, mode: str, positions=None,
                    azimuths=None, elevations=None) -> np.ndarray:
    """Steering vectors for a batch of sources, stacked as (M, P) columns.

    ``exact`` and ``fresnel`` take Cartesian ``positions``; ``farfield``
    takes ``azimuths`` (plus ``elevations`` for a UPA) and rejects
    positions outright, since a planar wavefront has no range.
    """
    if mode not in STEERING_MODES:
        raise ConfigError(f"unknown steering mode {mode!r}")
    if mode == "farfield":
        if positions is not None:
            raise ValueError("far-field steering is angle-only; got positions")
        if azimuths is None:
            raise ValueError("far-field steering needs arrival angles")
        delta = _delta_farfield(geom, azimuths, elevations)
    else:
        if positions is None:
            raise ValueError(f"{mode} steering needs source positions")
        pts = _as_points(positions)
        delta = _delta_exact(geom, pts) if mode == "exact" \
            else _delta_fresnel(geom, pts)
    return np.exp((-2j * np.pi / geom.wavelength) * delta)


def steering_vector(geom: ArrayGeometry, mode: str, position=None,
                    azimuth=None, elevation=None) -> np.ndarray:
    "Single steering vector of length M; see :func:`steering_matrix`."
    out = steering_matrix(
        geom, mode,
        positions=None if position is None else [np.asarray(position)],
        azimuths=None if azimuth is None else [azimuth],
        elevations=None if elevation is None else [elevation])
    return out[:, 0]


def subarray_split(geom: ArrayGeometry, q: int) -> list[Subarray]:
    """Partition the aperture into ``q`` contiguous sub-arrays.

    A ULA splits into q equal runs along Y (q must divide M); a UPA
    splits into a sqrt(q) x sqrt(q) grid of equal panels.  Sub-arrays
    cover all elements exactly once; each carries its geometric center
    as the triangulation anchor.
    """
    if q < 1:
        raise ConfigError("sub-array count must be positive")
    pos = element_positions(geom)
    subs = []
    if geom.kind == ULA:
        if geom.m % q != 0:
            raise ConfigError(f"{q} sub-arrays do not divide {geom.m} elements")
        n = geom.m // q
        if n < 2:
            raise ConfigError("sub-arrays need at least 2 elements")
        sub_geom = ula(n, geom.spacing, geom.wavelength)
        for b in range(q):
            idx = np.arange(b * n, (b + 1) * n)
            subs.append(Subarray(sub_geom, idx, pos[idx].mean(axis=0)))
    else:
        s = math.isqrt(q)
        if s * s != q:
            raise ConfigError("UPA sub-array count must be a perfect square")
        if geom.m_h % s != 0 or geom.m_v % s != 0:
            raise ConfigError(f"a {s}x{s} split does not divide the "
                              f"{geom.m_h}x{geom.m_v} panel")
        bh, bv = geom.m_h // s, geom.m_v // s
        if bh * bv < 2:
            raise ConfigError("sub-arrays need at least 2 elements")
        sub_geom = upa(bh, bv, geom.spacing_h, geom.spacing_v, geom.wavelength)
        for bj in range(s):
            for bi in range(s):
                ii = np.arange(bi * bh, (bi + 1) * bh)
                kk = np.arange(bj * bv, (bj + 1) * bv)
                idx = (kk[:, None] * geom.m_h + ii[None, :]).ravel()
                subs.append(Subarray(sub_geom, idx, pos[idx].mean(axis=0)))
    for sub in subs:
        sub.element_indices.flags.writeable = False
        sub.center.flags.writeable = False
    return subs
