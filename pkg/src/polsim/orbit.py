"""Two-body orbit propagation and ground-station pass geometry.

Desk-scale fidelity on purpose: Keplerian two-body motion from the TLE mean
elements (no SGP4 perturbations), a spherical Earth, UTC timestamps with leap
seconds ignored, and geodetic station latitude treated as geocentric.  Pass
shapes and durations are insensitive to all of that at the cadence this
package works at; externally computed ephemerides can be injected through the
pass-CSV reader when higher fidelity is needed.

Angle conventions: azimuth from north through east in [0, 360); elevation
above the local horizon.  The satellite telescope angle beta is the signed
in-plane gimbal angle of a nadir-mounted telescope tracking the station:
atan2(along-track LOS component, nadir LOS component).  It is continuous and
antisymmetric about culmination for a zenith-crossing pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

MU_EARTH_KM3_S2 = 398600.4418
R_EARTH_KM = 6371.0
SECONDS_PER_DAY = 86400.0

# Two-body elements drift from reality; refuse to extrapolate past this.
MAX_PROPAGATION_DAYS = 7.0


def to_posix(t):
    """Accept a POSIX-seconds float or a datetime (naive = UTC)."""
    if isinstance(t, datetime):
        if t.tzinfo is None:
            t = t.replace(tzinfo=timezone.utc)
        return t.timestamp()
    return float(t)


def iso_from_posix(t):
    dt = datetime.fromtimestamp(t, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"


def posix_from_iso(text):
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1]
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


@dataclass(frozen=True)
class GroundStation:
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude must be in [-90, 90], got {self.latitude_deg!r}")
        if not self.altitude_m > -500.0:
            raise ValueError(f"altitude must exceed -500 m, got {self.altitude_m!r}")


# Transmitting ground station at Ngari: 32d19'33.07" N, 80d01'34.18" E, 5047 m.
NGARI_STATION = GroundStation(32.3258527778, 80.0261611111, 5047.0)


def solve_kepler(mean_anomaly, eccentricity, tol=1e-13, max_iter=60):
    """Eccentric anomaly E with E - e sin E = M, by safeguarded Newton."""
    if not 0.0 <= eccentricity < 1.0:
        raise ValueError(f"eccentricity must be in [0, 1), got {eccentricity!r}")
    m = math.remainder(mean_anomaly, 2.0 * math.pi)
    e = eccentricity
    ecc_anom = m if e < 0.8 else math.pi * math.copysign(1.0, m)
    for _ in range(max_iter):
        f = ecc_anom - e * math.sin(ecc_anom) - m
        step = f / (1.0 - e * math.cos(ecc_anom))
        ecc_anom -= step
        if abs(step) < tol:
            break
    # polish once; the residual contract is |E - e sin E - M| < 1e-12
    f = ecc_anom - e * math.sin(ecc_anom) - m
    ecc_anom -= f / (1.0 - e * math.cos(ecc_anom))
    return ecc_anom + (mean_anomaly - m)


def _solve_kepler_array(mean_anomaly, eccentricity, iterations=25):
    m = np.remainder(np.asarray(mean_anomaly, dtype=float), 2.0 * np.pi)
    e = eccentricity
    ecc = m.copy() if e < 0.8 else np.full_like(m, math.pi)
    for _ in range(iterations):
        f = ecc - e * np.sin(ecc) - m
        ecc = ecc - f / (1.0 - e * np.cos(ecc))
    return ecc


def _perifocal_to_eci(raan_deg, incl_deg, argp_deg):
    """Rotation matrix PQW -> ECI."""
    om = math.radians(raan_deg)
    inc = math.radians(incl_deg)
    w = math.radians(argp_deg)
    co, so = math.cos(om), math.sin(om)
    ci, si = math.cos(inc), math.sin(inc)
    cw, sw = math.cos(w), math.sin(w)
    return np.array(
        [
            [co * cw - so * sw * ci, -co * sw - so * cw * ci, so * si],
            [so * cw + co * sw * ci, -so * sw + co * cw * ci, -co * si],
            [sw * si, cw * si, ci],
        ]
    )


def _check_horizon(rec, t_posix):
    t_posix = np.asarray(t_posix, dtype=float)
    span = np.max(np.abs(t_posix - rec.epoch_posix))
    if span > MAX_PROPAGATION_DAYS * SECONDS_PER_DAY:
        raise ValueError(
            f"propagation {span / SECONDS_PER_DAY:.2f} days from epoch exceeds the "
            f"{MAX_PROPAGATION_DAYS:.0f}-day two-body accuracy horizon"
        )


def propagate_state(rec, t):
    """ECI position (km) and velocity (km/s) on the record's Kepler ellipse.

    Vectorized over t: scalar t gives shape-(3,) arrays, an array of times
    gives shape (n, 3).
    """
    if isinstance(t, datetime) or np.isscalar(t):
        t_posix = np.asarray(to_posix(t), dtype=float)
    else:
        arr = np.asarray(t)
        if arr.dtype.kind in "if":
            t_posix = arr.astype(float)
        else:
            t_posix = np.asarray([to_posix(x) for x in arr.ravel()], dtype=float)
    scalar = t_posix.ndim == 0
    _check_horizon(rec, t_posix)

    n_rad = rec.mean_motion_rev_per_day * 2.0 * math.pi / SECONDS_PER_DAY
    a = (MU_EARTH_KM3_S2 / n_rad**2) ** (1.0 / 3.0)
    e = rec.eccentricity
    m0 = math.radians(rec.mean_anomaly_deg)
    m = m0 + n_rad * (np.atleast_1d(t_posix) - rec.epoch_posix)
    ecc = _solve_kepler_array(m, e)

    cos_e, sin_e = np.cos(ecc), np.sin(ecc)
    b_fac = math.sqrt(1.0 - e * e)
    x_pqw = a * (cos_e - e)
    y_pqw = a * b_fac * sin_e
    # dE/dt = n / (1 - e cos E)
    e_dot = n_rad / (1.0 - e * cos_e)
    vx_pqw = -a * sin_e * e_dot
    vy_pqw = a * b_fac * cos_e * e_dot

    rot = _perifocal_to_eci(rec.raan_deg, rec.inclination_deg, rec.arg_perigee_deg)
    pos = np.stack([x_pqw, y_pqw, np.zeros_like(x_pqw)], axis=-1) @ rot.T
    vel = np.stack([vx_pqw, vy_pqw, np.zeros_like(vx_pqw)], axis=-1) @ rot.T
    if scalar:
        return pos[0], vel[0]
    return pos, vel


def propagate(rec, t):
    """ECI position (km) at time t."""
    return propagate_state(rec, t)[0]


def gmst_rad(t_posix):
    """Greenwich mean sidereal time, radians (IAU 1982-style polynomial)."""
    jd = np.asarray(t_posix, dtype=float) / SECONDS_PER_DAY + 2440587.5
    d = jd - 2451545.0
    t_cent = d / 36525.0
    gmst_deg = (
        280.46061837
        + 360.98564736629 * d
        + 0.000387933 * t_cent**2
        - t_cent**3 / 38710000.0
    )
    return np.deg2rad(np.remainder(gmst_deg, 360.0))


def station_ecef(station):
    """Station ECEF position, km (spherical Earth)."""
    lat = math.radians(station.latitude_deg)
    lon = math.radians(station.longitude_deg)
    r = R_EARTH_KM + station.altitude_m / 1000.0
    return np.array(
        [r * math.cos(lat) * math.cos(lon), r * math.cos(lat) * math.sin(lon), r * math.sin(lat)]
    )


def eci_to_ecef(vec_eci, t_posix):
    g = gmst_rad(t_posix)
    c, s = np.cos(g), np.sin(g)
    x, y, z = np.moveaxis(np.asarray(vec_eci, dtype=float), -1, 0)
    return np.stack([c * x + s * y, -s * x + c * y, z], axis=-1)


def ecef_to_eci(vec_ecef, t_posix):
    g = gmst_rad(t_posix)
    c, s = np.cos(g), np.sin(g)
    x, y, z = np.moveaxis(np.asarray(vec_ecef, dtype=float), -1, 0)
    return np.stack([c * x - s * y, s * x + c * y, z], axis=-1)


def _enu_basis(station):
    lat = math.radians(station.latitude_deg)
    lon = math.radians(station.longitude_deg)
    east = np.array([-math.sin(lon), math.cos(lon), 0.0])
    north = np.array(
        [-math.sin(lat) * math.cos(lon), -math.sin(lat) * math.sin(lon), math.cos(lat)]
    )
    up = np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])
    return east, north, up


def topocentric(sat_eci_km, station, t):
    """(azimuth_deg, elevation_deg, range_km) of a satellite from a station."""
    t_posix = to_posix(t)
    sat_ecef = eci_to_ecef(np.asarray(sat_eci_km, dtype=float), t_posix)
    rel = sat_ecef - station_ecef(station)
    east, north, up = _enu_basis(station)
    e, n, u = rel @ east, rel @ north, rel @ up
    rng = float(np.sqrt(e * e + n * n + u * u))
    el = math.degrees(math.asin(u / rng))
    horizontal = math.hypot(e, n)
    if horizontal < 1e-9:
        az = 0.0  # zenith: azimuth undefined, returned as 0 by convention
    else:
        az = math.degrees(math.atan2(e, n)) % 360.0
    return az, el, rng


def _topocentric_arrays(rec, station, t_posix):
    """Vectorized az/el/range plus satellite state, for pass scanning."""
    t_posix = np.asarray(t_posix, dtype=float)
    pos, vel = propagate_state(rec, t_posix)
    sat_ecef = eci_to_ecef(pos, t_posix)
    rel = sat_ecef - station_ecef(station)
    east, north, up = _enu_basis(station)
    e, n, u = rel @ east, rel @ north, rel @ up
    rng = np.sqrt(e * e + n * n + u * u)
    el = np.degrees(np.arcsin(u / rng))
    az = np.degrees(np.arctan2(e, n)) % 360.0
    return az, el, rng, pos, vel


@dataclass(frozen=True)
class PassProfile:
    """One satellite passage: time series of azimuth, elevation, beta."""

    t_posix: np.ndarray
    azimuth_deg: np.ndarray
    elevation_deg: np.ndarray
    beta_deg: np.ndarray

    def __post_init__(self):
        for name in ("t_posix", "azimuth_deg", "elevation_deg", "beta_deg"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.t_posix)
        if n < 2:
            raise ValueError("a pass needs at least two samples")
        if any(len(getattr(self, f)) != n for f in ("azimuth_deg", "elevation_deg", "beta_deg")):
            raise ValueError("pass sample arrays must share one length")
        if not np.all(np.diff(self.t_posix) > 0.0):
            raise ValueError("pass timestamps must be strictly increasing")

    @property
    def duration_s(self):
        return float(self.t_posix[-1] - self.t_posix[0])

    @property
    def max_elevation_deg(self):
        return float(np.max(self.elevation_deg))

    def is_north_to_south(self):
        """True when the pass starts on the north side and ends on the south."""
        start = math.cos(math.radians(self.azimuth_deg[0]))
        end = math.cos(math.radians(self.azimuth_deg[-1]))
        return start > 0.0 > end

    def to_csv(self):
        lines = ["t_iso8601,az_deg,el_deg,beta_deg"]
        for t, az, el, beta in zip(self.t_posix, self.azimuth_deg, self.elevation_deg, self.beta_deg):
            lines.append(f"{iso_from_posix(t)},{float(az)!r},{float(el)!r},{float(beta)!r}")
        return "\n".join(lines) + "\n"


def parse_pass_csv(text):
    """Read a pass CSV `t_iso8601, az_deg, el_deg[, beta_deg]`.

    A missing beta column means no satellite-telescope rotation (zeros);
    a present one is taken verbatim (injected-series mode).
    """
    times, az, el, beta = [], [], [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("t_iso8601"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise ValueError(f"line {line_no}: expected 3 or 4 columns, got {len(parts)}")
        try:
            times.append(posix_from_iso(parts[0]))
            az.append(float(parts[1]))
            el.append(float(parts[2]))
            beta.append(float(parts[3]) if len(parts) == 4 else 0.0)
        except ValueError as exc:
            raise ValueError(f"line {line_no}: {exc}") from None
    return PassProfile(np.array(times), np.array(az), np.array(el), np.array(beta))


def load_pass_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_pass_csv(fh.read())


def beta_angle(rec, station, t_posix, mode="geometric"):
    """Satellite telescope angle per sample, degrees.

    mode="geometric": signed in-plane off-nadir angle of the station line of
    sight in the satellite's nadir-pointing frame (positive when the station
    is ahead along track).  mode="zero": nadir-fixed satellite, all zeros.
    """
    t_posix = np.asarray(t_posix, dtype=float)
    if mode == "zero":
        return np.zeros_like(t_posix)
    if mode != "geometric":
        raise ValueError(f"unknown beta mode {mode!r}")
    pos, vel = propagate_state(rec, t_posix)
    station_eci = ecef_to_eci(np.broadcast_to(station_ecef(station), pos.shape), t_posix)
    los = station_eci - pos

    r_hat = pos / np.linalg.norm(pos, axis=-1, keepdims=True)
    nadir = -r_hat
    v_rad = np.sum(vel * r_hat, axis=-1, keepdims=True)
    along = vel - v_rad * r_hat
    along = along / np.linalg.norm(along, axis=-1, keepdims=True)

    beta = np.degrees(np.arctan2(np.sum(los * along, axis=-1), np.sum(los * nadir, axis=-1)))
    return beta


def _refine_crossing(rec, station, t_lo, t_hi, threshold_deg, tol_s=1e-4):
    """Bisect the elevation-threshold crossing between two sample times."""

    def above(t):
        _, el, _, _, _ = _topocentric_arrays(rec, station, np.array([t]))
        return el[0] - threshold_deg

    f_lo = above(t_lo)
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        f_mid = above(mid)
        if (f_lo <= 0.0) == (f_mid <= 0.0):
            t_lo, f_lo = mid, f_mid
        else:
            t_hi = mid
        if abs(t_hi - t_lo) < tol_s:
            break
    return 0.5 * (t_lo + t_hi)


def extract_passes(
    rec,
    station,
    t_start,
    t_end,
    threshold_deg=10.0,
    step_s=1.0,
    beta_mode="geometric",
):
    """All complete passes with elevation >= threshold inside [t_start, t_end].

    Interior samples sit on the step grid; the first and last sample of each
    pass are refined to the threshold crossing itself.  Passes clipped by the
    window edges (already up at t_start, still up at t_end) are dropped since
    their true rise/set times are unknown.
    """
    t0, t1 = to_posix(t_start), to_posix(t_end)
    if t1 <= t0:
        raise ValueError("empty time window")
    if not 0.0 <= threshold_deg < 90.0:
        raise ValueError(f"threshold must be in [0, 90), got {threshold_deg!r}")
    grid = np.arange(t0, t1 + step_s / 2.0, step_s)
    _, el, _, _, _ = _topocentric_arrays(rec, station, grid)
    up = el >= threshold_deg

    passes = []
    i = 0
    n = len(grid)
    while i < n:
        if not up[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and up[j + 1]:
            j += 1
        if i > 0 and j < n - 1:  # complete pass only
            t_rise = _refine_crossing(rec, station, grid[i - 1], grid[i], threshold_deg)
            t_set = _refine_crossing(rec, station, grid[j + 1], grid[j], threshold_deg)
            inner = grid[i:j + 1]
            inner = inner[(inner > t_rise) & (inner < t_set)]
            times = np.concatenate([[t_rise], inner, [t_set]])
            az, elev, _, _, _ = _topocentric_arrays(rec, station, times)
            beta = beta_angle(rec, station, times, mode=beta_mode)
            passes.append(PassProfile(times, az, elev, beta))
        i = j + 1
    return passes
