"""Motion compensation of the uplink polarization frame by one rotating HWP.

Tracking a satellite rotates the transmitted polarization frame by the
azimuth theta plus the elevation phi; the satellite telescope adds its own
angle beta.  Because a half-wave plate at alpha reflects linear polarization
about its axis (g -> 2 alpha - g), scheduling

    alpha = zero_point + (theta + phi + beta) / 2

cancels the accumulated rotation exactly: the output angle is constant at
2 * zero_point - g_in, whatever the pass geometry does.  The zero point is a
per-installation calibration; the deployed system used 145.8 degrees, a
simulated chain calibrates its own (`calibrate_zero_point`).  Note the
H/V basis is restored exactly while diagonal/circular components come back
conjugated - a fixed, known flip absorbed by receiver calibration.

HWP angles are pi-periodic, so emitted angles live in [0, 180) while slew
rates are always computed on the unwrapped series.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .antenna import PointingDirection, scanning_head_jones
from .jones import PolarizationState, fidelity, hwp, rotator
from .orbit import iso_from_posix, posix_from_iso

# The deployed installation's empirically determined HWP zero point, degrees.
DEFAULT_ZERO_POINT_DEG = 145.8

# Conservative motorized-rotator slew capability, deg/s; schedule rates above
# this are flagged in the schedule metadata.
DEFAULT_MAX_SLEW_DEG_PER_S = 5.0


def compensation_angle(theta_deg, phi_deg, beta_deg, zero_point_deg=DEFAULT_ZERO_POINT_DEG,
                       sign=1):
    """Scheduled HWP angle zero + sign*(theta+phi+beta)/2, reduced to [0, 180).

    `sign` flips the tracking sense for installations whose mirror chain
    rotates the frame the other way; +1 is the deployed sense.
    """
    for v in (theta_deg, phi_deg, beta_deg, zero_point_deg):
        if not math.isfinite(v):
            raise ValueError(f"compensation_angle needs finite inputs, got {v!r}")
    return (zero_point_deg + sign * (theta_deg + phi_deg + beta_deg) / 2.0) % 180.0


@dataclass(frozen=True)
class CompensationSchedule:
    """Per-sample HWP commands for one pass."""

    t_posix: np.ndarray
    angle_deg: np.ndarray  # reduced to [0, 180)
    rate_deg_per_s: np.ndarray  # from the unwrapped series; rate[0] = 0
    zero_point_deg: float
    sign: int
    max_rate_deg_per_s: float
    warnings: tuple

    def to_csv(self):
        lines = ["t_iso8601,hwp_deg,rate_deg_per_s"]
        for t, a, r in zip(self.t_posix, self.angle_deg, self.rate_deg_per_s):
            lines.append(f"{iso_from_posix(t)},{float(a)!r},{float(r)!r}")
        return "\n".join(lines) + "\n"

    def metadata(self):
        return {
            "zero_point_deg": self.zero_point_deg,
            "sign": self.sign,
            "max_rate_deg_per_s": self.max_rate_deg_per_s,
            "samples": int(len(self.t_posix)),
            "warnings": list(self.warnings),
        }

    def metadata_json(self):
        return json.dumps(self.metadata(), sort_keys=True, indent=2) + "\n"


def parse_schedule_csv(text):
    times, angles, rates = [], [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("t_iso8601"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ValueError(f"line {line_no}: expected 3 columns, got {len(parts)}")
        times.append(posix_from_iso(parts[0]))
        angles.append(float(parts[1]))
        rates.append(float(parts[2]))
    return np.array(times), np.array(angles), np.array(rates)


def schedule_from_pass(pass_profile, zero_point_deg=DEFAULT_ZERO_POINT_DEG, sign=1,
                       max_slew_deg_per_s=DEFAULT_MAX_SLEW_DEG_PER_S):
    """Compensation schedule for a pass, with slew-rate bookkeeping.

    Azimuth and beta are unwrapped before the formula so the rate series sees
    no artificial 360-degree seams; the emitted angle is reduced mod 180
    afterwards.  A rate above `max_slew_deg_per_s` is recorded as a warning
    (the schedule is still produced).
    """
    az = np.unwrap(pass_profile.azimuth_deg, period=360.0)
    beta = np.unwrap(pass_profile.beta_deg, period=360.0)
    raw = zero_point_deg + sign * (az + pass_profile.elevation_deg + beta) / 2.0

    dt = np.diff(pass_profile.t_posix)
    rate = np.concatenate([[0.0], np.diff(raw) / dt])
    max_rate = float(np.max(np.abs(rate)))

    warnings = []
    if max_rate > max_slew_deg_per_s:
        idx = int(np.argmax(np.abs(rate)))
        warnings.append(
            f"max rate {max_rate:.4f} deg/s at sample {idx} exceeds the "
            f"{max_slew_deg_per_s:.4f} deg/s slew limit"
        )
    return CompensationSchedule(
        t_posix=pass_profile.t_posix.copy(),
        angle_deg=raw % 180.0,
        rate_deg_per_s=rate,
        zero_point_deg=float(zero_point_deg),
        sign=int(sign),
        max_rate_deg_per_s=max_rate,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class QuantizationError:
    """Both readings of the HWP-accuracy error figure.

    `rotation_rad` expresses the plate accuracy itself in radians (0.01 deg is
    1.745e-4, about 0.017%); `infidelity` is the resulting worst-case state
    infidelity sin^2(2 * accuracy), which for the same accuracy is ~1.2e-7.
    """

    rotation_rad: float
    infidelity: float


def quantization_error(hwp_accuracy_deg):
    if hwp_accuracy_deg < 0.0:
        raise ValueError("accuracy must be non-negative")
    acc = math.radians(hwp_accuracy_deg)
    return QuantizationError(rotation_rad=acc, infidelity=math.sin(2.0 * acc) ** 2)


def compensated_chain(direction, beta_deg, hwp_angle_deg, coating):
    """Jones element: antenna at (az, el), frame rotation beta, then the HWP."""
    return (
        hwp(math.radians(hwp_angle_deg))
        @ rotator(math.radians(beta_deg))
        @ scanning_head_jones(direction, coating)
    )


def calibrate_zero_point(coating, state=None):
    """Simulated zero-point determination, mirroring the deployed procedure.

    Sends `state` (default H) through the chain at the reference direction
    (azimuth 0, elevation 0, beta 0) and finds the HWP angle in [0, 180) that
    maximizes the fidelity of what comes back.
    """
    if state is None:
        state = PolarizationState.h()

    def fid(zero_deg):
        chain = compensated_chain(PointingDirection(0.0, 0.0), 0.0, zero_deg, coating)
        return fidelity(chain.apply(state).normalized(), state)

    coarse = np.linspace(0.0, 180.0, 721)
    best = float(coarse[int(np.argmax([fid(z) for z in coarse]))])
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda z: -fid(z), bracket=(best - 0.3, best, best + 0.3))
    return float(res.x) % 180.0


def verify_compensation(pass_profile, coating, state=None,
                        zero_point_deg=None, sign=1, hwp_angles_deg=None):
    """End-to-end fidelity of the compensated chain at every pass sample.

    With ideal mirrors the cancellation is exact (fidelity 1 to rounding).
    `zero_point_deg=None` calibrates the simulated chain's own zero point.
    Passing `hwp_angles_deg` overrides the schedule (e.g. a constant array to
    model a disabled compensator).
    """
    if state is None:
        state = PolarizationState.h()
    if zero_point_deg is None:
        zero_point_deg = calibrate_zero_point(coating, state)
    if hwp_angles_deg is None:
        schedule = schedule_from_pass(pass_profile, zero_point_deg, sign)
        hwp_angles_deg = schedule.angle_deg
    else:
        hwp_angles_deg = np.broadcast_to(
            np.asarray(hwp_angles_deg, dtype=float), pass_profile.t_posix.shape
        )

    out = np.empty(len(pass_profile.t_posix))
    for i in range(len(out)):
        az = math.remainder(pass_profile.azimuth_deg[i], 360.0)
        az = az if az < 180.0 else az - 360.0
        chain = compensated_chain(
            PointingDirection(az, pass_profile.elevation_deg[i]),
            pass_profile.beta_deg[i],
            hwp_angles_deg[i],
            coating,
        )
        out[i] = fidelity(chain.apply(state).normalized(), state)
    return out
