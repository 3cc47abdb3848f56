"""Transmitting-antenna polarization model.

The antenna is a double off-axis parabolic telescope feeding a two-mirror
periscope scanning head.  The paraboloids see incidence angles below 7 degrees
over the whole aperture, small enough that their s/p response is treated as
polarization-neutral; only the two 45-degree scanning-head mirrors carry a
coating response.

Pointing model: rotating the head in azimuth by theta and in elevation by phi
adds theta + phi to the polarization frame.  The composed Jones element is

    J(theta, phi) = R(phi) @ D @ R(-theta) @ D

with D = diag(r_s, r_p) per mirror, which reduces to the pure rotation
R(theta + phi) for ideal mirrors (r_s = 1, r_p = -1) and couples coating
imperfections direction-dependently otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .jones import (
    PER_CAP,
    MirrorResponse,
    PolarizationState,
    mirror_element,
    per_to_fidelity,
    measure_per,
    rotator,
)

# Coating response of the scanning-head plane mirrors at 780 nm, built from
# the vendor-measured power reflectances and s/p phase gap.
HR_COATING = MirrorResponse.from_powers(0.999908, 0.998168, 0.9996 * math.pi)


@dataclass(frozen=True)
class TelescopeGeometry:
    """Paraboloid parameters of the two off-axis telescope mirrors (mm)."""

    primary_focal_mm: float
    primary_semidiameter_mm: float
    secondary_focal_mm: float
    secondary_semidiameter_mm: float
    conic: float = -1.0

    def __post_init__(self):
        for name in (
            "primary_focal_mm",
            "primary_semidiameter_mm",
            "secondary_focal_mm",
            "secondary_semidiameter_mm",
        ):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_radii(cls, primary_radius_mm, primary_semidiameter_mm,
                   secondary_radius_mm, secondary_semidiameter_mm, conic=-1.0):
        """Build from vertex radii of curvature (f = |R|/2 for a paraboloid)."""
        return cls(
            abs(primary_radius_mm) / 2.0,
            primary_semidiameter_mm,
            abs(secondary_radius_mm) / 2.0,
            secondary_semidiameter_mm,
            conic,
        )


# Design values of the transmitting antenna: primary R=-1625 mm over a 190 mm
# semi-aperture, secondary R=-65 mm over 7.6 mm, both conic -1.
DESIGN_GEOMETRY = TelescopeGeometry.from_radii(-1625.0, 190.0, -65.0, 7.6)


@dataclass(frozen=True)
class PointingDirection:
    """Azimuth in [-180, 180) and elevation in [0, 90], degrees."""

    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self):
        if not (-180.0 <= self.azimuth_deg < 180.0):
            raise ValueError(f"azimuth must be in [-180, 180), got {self.azimuth_deg!r}")
        if not (0.0 <= self.elevation_deg <= 90.0):
            raise ValueError(f"elevation must be in [0, 90], got {self.elevation_deg!r}")


def parabola_incidence_angle(focal_mm, ray_height_mm, semidiameter_mm=None):
    """Incidence angle of an axis-parallel ray on a paraboloid, atan(h / 2f).

    The surface z = r^2 / (4 f) has slope h / (2 f) at ray height h, which is
    also the angle between the incoming ray and the surface normal.
    """
    if ray_height_mm < 0.0:
        raise ValueError("ray height must be non-negative")
    if semidiameter_mm is not None and ray_height_mm > semidiameter_mm:
        raise ValueError(
            f"ray height {ray_height_mm!r} outside the {semidiameter_mm!r} mm aperture"
        )
    return math.atan2(ray_height_mm, 2.0 * focal_mm)


def max_incidence_angle(geom):
    """Largest paraboloid incidence angle over both apertures."""
    return max(
        parabola_incidence_angle(geom.primary_focal_mm, geom.primary_semidiameter_mm),
        parabola_incidence_angle(geom.secondary_focal_mm, geom.secondary_semidiameter_mm),
    )


def scanning_head_jones(direction, coating):
    """Composed Jones element of the two coated 45-degree scanning mirrors.

    Includes the theta + phi polarization frame rotation that pointing
    introduces; see the module docstring for the composition.
    """
    theta = math.radians(direction.azimuth_deg)
    phi = math.radians(direction.elevation_deg)
    d = mirror_element(coating)
    return rotator(phi) @ d @ rotator(-theta) @ d


@dataclass(frozen=True)
class PerScanResult:
    """PER scan over (elevation, azimuth, input state) cells."""

    rows: tuple  # of (elevation_deg, azimuth_deg, state_label, per, fidelity)

    @property
    def min_per(self):
        return min(r[3] for r in self.rows)

    @property
    def mean_per(self):
        return sum(r[3] for r in self.rows) / len(self.rows)

    def to_csv(self):
        lines = ["elevation_deg,azimuth_deg,state_label,per,fidelity"]
        for el, az, label, per, fid in self.rows:
            lines.append(f"{el!r},{az!r},{label},{per!r},{fid!r}")
        lines.append(f"# summary min_per={self.min_per!r} mean_per={self.mean_per!r}")
        return "\n".join(lines) + "\n"


def parse_per_scan_csv(text):
    rows = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("elevation_deg"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"line {line_no}: expected 5 columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1]), parts[2], float(parts[3]), float(parts[4])))
    return PerScanResult(tuple(rows))


# The four test states transmitted during the local antenna scan.
DEFAULT_SCAN_STATES = (
    ("H", PolarizationState.h()),
    ("V", PolarizationState.v()),
    ("+", PolarizationState.plus()),
    ("-", PolarizationState.minus()),
)

DEFAULT_SCAN_ELEVATIONS = (30.0, 50.0, 70.0)
DEFAULT_SCAN_AZIMUTHS = (-180.0, -135.0, -90.0, -45.0, 0.0, 45.0, 90.0, 135.0)


def antenna_per_scan(
    geom,
    coating,
    elevations_deg=DEFAULT_SCAN_ELEVATIONS,
    azimuths_deg=DEFAULT_SCAN_AZIMUTHS,
    states=DEFAULT_SCAN_STATES,
    cap=PER_CAP,
):
    """Simulated local PER test: one cell per (elevation, azimuth, state).

    The analyzer tracks the known geometric frame rotation, so each cell's
    reference angle is the input state's axis plus theta + phi; what remains
    in the PER is the coating-induced depolarization.  `geom` carries the
    paraboloid mirrors, modeled as polarization-neutral (their incidence
    angles stay below 7 degrees); it does not enter the Jones chain.
    """
    if not elevations_deg or not azimuths_deg or not states:
        raise ValueError("scan grids must be non-empty")
    rows = []
    for el in elevations_deg:
        for az in azimuths_deg:
            direction = PointingDirection(az, el)
            element = scanning_head_jones(direction, coating)
            frame = math.radians(az + el)
            for label, state in states:
                out = element.apply(state).normalized()
                ref = state.linear_axis() + frame
                per = measure_per(out, ref, cap=cap)
                rows.append((float(el), float(az), label, per, per_to_fidelity(per)))
    return PerScanResult(tuple(rows))
