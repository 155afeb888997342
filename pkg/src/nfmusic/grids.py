"""Search-grid descriptions shared by the spectrum searches."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

Span = tuple[float, float, float]


def axis_values(span: Span) -> np.ndarray:
    """Materialize a (start, stop, step) span as a strictly increasing axis.

    The stop value is always covered: if start + n*step falls short of
    stop by more than rounding noise, one extra node is appended.
    """
    start, stop, step = (float(x) for x in span)
    if step <= 0.0:
        raise ConfigError("grid step must be positive")
    if stop < start:
        raise ConfigError("grid stop must not precede start")
    n = int(np.floor((stop - start) / step + 1.0 + 1e-9))
    ax = start + step * np.arange(n)
    if ax[-1] < stop - 1e-9 * max(1.0, abs(stop)):
        ax = np.append(ax, start + step * n)
    return ax


@dataclass(frozen=True)
class GridSpec:
    """Axes of a spectrum search.

    Angles are (start, stop, step) in radians, distance in meters.
    Elevation applies to planar arrays only; distance applies to the
    near-field (exact/fresnel) searches only.
    """

    azimuth: Span
    elevation: Span | None = None
    distance: Span | None = None

    def azimuth_axis(self) -> np.ndarray:
        return axis_values(self.azimuth)

    def elevation_axis(self) -> np.ndarray:
        if self.elevation is None:
            raise ConfigError("grid has no elevation axis")
        return axis_values(self.elevation)

    def distance_axis(self) -> np.ndarray:
        if self.distance is None:
            raise ConfigError("grid has no distance axis")
        return axis_values(self.distance)

    def angles_only(self) -> "GridSpec":
        "Copy of this grid without the distance axis."
        return replace(self, distance=None)
