"""Jones-calculus polarization algebra.

Conventions used throughout the package:

* Jones vectors live in the H/V basis, ``H = (1, 0)`` and ``V = (0, 1)``.
* All angles are in radians and measured counterclockwise from H.
* A waveplate with its fast axis at angle ``a`` and retardance ``delta`` is
  ``R(a) @ diag(1, exp(i*delta)) @ R(-a)`` where ``R`` is the rotation matrix
  ``[[cos a, -sin a], [sin a, cos a]]``.  With this convention a half-wave
  plate at ``a`` maps linear polarization at ``g`` to linear polarization at
  ``2a - g`` (the usual factor-of-two lever arm).
* A coated mirror is diagonal ``diag(r_s, r_p)`` in its own s/p frame with s
  along H; callers compose with ``rotator`` to move it into the lab frame.

Everything here is a pure function over immutable values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# Measured PER is clamped here: real power meters have finite dynamic range
# and an infinity would poison CSV/JSON output.
PER_CAP = 1e9

# Tolerance for "is this state normalized" input checks.
_NORM_ATOL = 1e-6


class CompensationSolveError(RuntimeError):
    """Raised when the fiber-compensation solver cannot reach its residual."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _check_finite_angle(angle):
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle!r}")


@dataclass(frozen=True)
class PolarizationState:
    """Pure polarization state: complex amplitude pair (a_h, a_v)."""

    a_h: complex
    a_v: complex

    @property
    def vector(self):
        return np.array([self.a_h, self.a_v], dtype=complex)

    def norm_sq(self):
        return float(abs(self.a_h) ** 2 + abs(self.a_v) ** 2)

    def is_normalized(self, atol=_NORM_ATOL):
        return abs(self.norm_sq() - 1.0) <= atol

    def normalized(self):
        n = math.sqrt(self.norm_sq())
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return PolarizationState(self.a_h / n, self.a_v / n)

    def linear_axis(self):
        """Orientation of the polarization ellipse major axis, in (-pi/2, pi/2].

        Computed from the Stokes parameters S1, S2; for a linear state this is
        simply its angle from H.
        """
        s1 = abs(self.a_h) ** 2 - abs(self.a_v) ** 2
        s2 = 2.0 * (self.a_h.conjugate() * self.a_v).real
        return 0.5 * math.atan2(s2, s1)

    @classmethod
    def h(cls):
        return cls(1.0, 0.0)

    @classmethod
    def v(cls):
        return cls(0.0, 1.0)

    @classmethod
    def plus(cls):
        r = 1.0 / math.sqrt(2.0)
        return cls(r, r)

    @classmethod
    def minus(cls):
        r = 1.0 / math.sqrt(2.0)
        return cls(r, -r)

    @classmethod
    def linear(cls, angle):
        _check_finite_angle(angle)
        return cls(math.cos(angle), math.sin(angle))


@dataclass(frozen=True)
class OpticalElement:
    """2x2 complex Jones matrix wrapper with composition helpers."""

    m00: complex
    m01: complex
    m10: complex
    m11: complex

    @property
    def matrix(self):
        return np.array([[self.m00, self.m01], [self.m10, self.m11]], dtype=complex)

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"Jones matrix must be 2x2, got shape {m.shape}")
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def __matmul__(self, other):
        if isinstance(other, OpticalElement):
            return OpticalElement.from_matrix(self.matrix @ other.matrix)
        return NotImplemented

    def apply(self, state):
        out = self.matrix @ state.vector
        return PolarizationState(out[0], out[1])

    def is_unitary(self, atol=1e-12):
        m = self.matrix
        return bool(np.allclose(m.conj().T @ m, np.eye(2), atol=atol, rtol=0.0))


@dataclass(frozen=True)
class MirrorResponse:
    """Complex amplitude reflectances of one mirror for s and p polarization.

    The relative phase ``arg(r_s) - arg(r_p)`` carries the extra phase a
    coating stamps between the two components; an ideal mirror has
    ``r_s = 1, r_p = -1`` (pi relative phase, no loss).
    """

    r_s: complex
    r_p: complex

    def __post_init__(self):
        if abs(self.r_s) > 1.0 + 1e-12 or abs(self.r_p) > 1.0 + 1e-12:
            raise ValueError(
                f"passive mirror needs |r| <= 1, got |r_s|={abs(self.r_s):.6g}, "
                f"|r_p|={abs(self.r_p):.6g}"
            )

    @property
    def phase_gap(self):
        """Relative phase arg(r_s) - arg(r_p), wrapped to (-pi, pi]."""
        d = cmath.phase(self.r_s) - cmath.phase(self.r_p)
        return math.remainder(d, 2.0 * math.pi)

    @classmethod
    def from_powers(cls, rs_power, rp_power, phase_gap):
        """Build from power reflectances |r_s|^2, |r_p|^2 and relative phase."""
        if not (0.0 <= rs_power <= 1.0 and 0.0 <= rp_power <= 1.0):
            raise ValueError("power reflectances must lie in [0, 1]")
        return cls(math.sqrt(rs_power), math.sqrt(rp_power) * cmath.exp(-1j * phase_gap))


# Ideal plane mirror: unit reflectance, pi phase between s and p.
IDEAL_MIRROR = MirrorResponse(1.0, -1.0)


def rotation_matrix(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotator(angle):
    """Frame rotation by `angle` (rotates linear polarization by +angle)."""
    _check_finite_angle(angle)
    return OpticalElement.from_matrix(rotation_matrix(angle))


def waveplate(angle, retardance):
    """Linear retarder, fast axis at `angle`, retardance `retardance`."""
    _check_finite_angle(angle)
    _check_finite_angle(retardance)
    r = rotation_matrix(angle)
    core = np.array([[1.0, 0.0], [0.0, cmath.exp(1j * retardance)]], dtype=complex)
    return OpticalElement.from_matrix(r @ core @ r.conj().T)


def hwp(angle):
    """Half-wave plate at `angle`: linear at g goes to linear at 2*angle - g."""
    return waveplate(angle, math.pi)


def qwp(angle):
    """Quarter-wave plate at `angle`; qwp(a) @ qwp(a) equals hwp(a)."""
    return waveplate(angle, math.pi / 2.0)


def polarizer(angle):
    """Ideal linear polarizer (rank-1 projector) transmitting at `angle`."""
    _check_finite_angle(angle)
    r = rotation_matrix(angle)
    core = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    return OpticalElement.from_matrix(r @ core @ r.conj().T)


def mirror_element(resp):
    """Jones matrix diag(r_s, r_p) of a coated mirror in its s/p frame."""
    return OpticalElement.from_matrix(
        np.array([[resp.r_s, 0.0], [0.0, resp.r_p]], dtype=complex)
    )


def identity_element():
    return OpticalElement(1.0, 0.0, 0.0, 1.0)


def fidelity(a, b):
    """Pure-state fidelity |<a|b>|^2; insensitive to global phase."""
    if not a.is_normalized() or not b.is_normalized():
        raise ValueError("fidelity requires normalized states")
    ip = np.vdot(a.vector, b.vector)
    return min(float(abs(ip) ** 2), 1.0)


def per_to_fidelity(per):
    """Convert a polarization extinction ratio to fidelity, per/(per+1)."""
    if not per > 0.0:
        raise ValueError(f"PER must be positive, got {per!r}")
    return per / (per + 1.0)


def fidelity_to_per(f):
    """Inverse of per_to_fidelity on (0, 1)."""
    if not 0.0 < f < 1.0:
        raise ValueError(f"fidelity must lie in (0, 1) to invert, got {f!r}")
    return f / (1.0 - f)


def measure_per(state, reference_angle, cap=PER_CAP):
    """Extinction ratio of `state` against the reference_angle analyzer pair.

    Transmitted power through a polarizer at reference_angle vs one at
    reference_angle + pi/2; returns the max/min power ratio, clamped at `cap`.
    """
    if not state.is_normalized():
        raise ValueError("measure_per requires a normalized state")
    _check_finite_angle(reference_angle)
    i_par = polarizer(reference_angle).apply(state).norm_sq()
    i_perp = polarizer(reference_angle + math.pi / 2.0).apply(state).norm_sq()
    i_max, i_min = max(i_par, i_perp), min(i_par, i_perp)
    if i_min <= 0.0 or i_max / i_min > cap:
        return cap
    return i_max / i_min


# --- fiber compensation: QWP/HWP/QWP inversion of an arbitrary unitary -----

# Transformation into the circular basis |R>,|L>; in that basis any waveplate
# becomes a rotation about an equatorial axis of the Poincare sphere, which is
# what makes the closed-form Euler-like decomposition below possible.
_T_CIRC = np.array([[1.0, 1.0], [-1.0j, 1.0j]], dtype=complex) / math.sqrt(2.0)


def _gadget(q1, h, q2):
    return qwp(q1) @ hwp(h) @ qwp(q2)


def _phase_aligned_residual(m):
    """Operator-norm distance of unitary-ish m from the nearest phase*identity."""
    tr = m[0, 0] + m[1, 1]
    if abs(tr) > 1e-12:
        lam = tr / abs(tr)
    else:
        lam = 1.0
    return float(np.linalg.norm(m - lam * np.eye(2), 2))


def _reduce_half_turn(angle):
    """Reduce a waveplate axis angle to [-pi/2, pi/2); plates are pi-periodic."""
    a = math.remainder(angle, math.pi)
    if a >= math.pi / 2.0:
        a -= math.pi
    return a


def solve_fiber_compensation(channel, tol=1e-6):
    """Angles (q1, h, q2) with qwp(q1) @ hwp(h) @ qwp(q2) @ channel ~ identity.

    This undoes a static unitary channel (fibers plus fixed mirrors) with the
    standard two-quarter-wave-plate / one-half-wave-plate stack.  The solution
    is analytic: in the circular basis the target splits into an Euler-like
    triple of equatorial Poincare rotations.  A short least-squares polish
    runs only if rounding leaves the residual above 1e-9.

    Angles are reduced to [-pi/2, pi/2).  Raises CompensationSolveError when
    the residual cannot be brought below `tol`.
    """
    m = channel.matrix
    if not channel.is_unitary(atol=1e-9):
        raise ValueError("channel must be unitary within 1e-9")

    target = m.conj().T  # want the gadget to invert the channel
    vc = _T_CIRC.conj().T @ target @ _T_CIRC
    det = vc[0, 0] * vc[1, 1] - vc[0, 1] * vc[1, 0]
    vc = vc / cmath.sqrt(det)

    a, b = vc[0, 0], vc[0, 1]
    sigma = math.atan2(abs(b), abs(a))
    delta = cmath.phase(a) if abs(a) > 1e-15 else 0.0
    w = -cmath.phase(b) if abs(b) > 1e-15 else 0.0

    # Circular-basis axis longitudes; physical plate angle is -longitude/2.
    phi1 = w - delta
    phi3 = w + delta
    psi = sigma + w
    q1 = _reduce_half_turn(-phi1 / 2.0)
    h = _reduce_half_turn(-psi / 2.0)
    q2 = _reduce_half_turn(-phi3 / 2.0)

    residual = _phase_aligned_residual((_gadget(q1, h, q2) @ channel).matrix)
    if residual > 1e-9:
        from scipy.optimize import least_squares

        def flat_residual(angles):
            mm = (_gadget(*angles) @ channel).matrix
            tr = mm[0, 0] + mm[1, 1]
            lam = tr / abs(tr) if abs(tr) > 1e-12 else 1.0
            d = mm - lam * np.eye(2)
            return np.concatenate([d.real.ravel(), d.imag.ravel()])

        fit = least_squares(flat_residual, x0=[q1, h, q2], xtol=1e-15, ftol=1e-15)
        q1, h, q2 = (_reduce_half_turn(x) for x in fit.x)
        residual = _phase_aligned_residual((_gadget(q1, h, q2) @ channel).matrix)

    if residual > tol:
        raise CompensationSolveError("fiber compensation solver did not converge", residual)
    return q1, h, q2
