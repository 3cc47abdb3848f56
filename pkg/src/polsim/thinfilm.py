"""Fresnel reflection and multilayer coating response.

Single interfaces follow the Fresnel amplitude equations

    r_s = (n0 cos(ti) - n cos(tt)) / (n0 cos(ti) + n cos(tt))
    r_p = (n cos(ti) - n0 cos(tt)) / (n cos(ti) + n0 cos(tt))

with Snell's law n0 sin(ti) = n sin(tt).  Note the sign convention baked into
the p equation: at normal incidence r_s and r_p have opposite signs.  The
multilayer routines keep that same convention so an empty stack reduces
exactly to the bare-interface formula, and all relative-phase bookkeeping in
the rest of the package uses arg(r_s) - arg(r_p).

Two independent multilayer algorithms are provided: the characteristic-matrix
method (`stack_response`) and a recursive interface-by-interface composition
(`stack_response_oracle`).  They are algebraically equivalent and are checked
against each other to 1e-10 in the test suite.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .jones import MirrorResponse


class StackParseError(ValueError):
    """Stack-file syntax error; carries the offending 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Interface:
    """Refractive index pair across one boundary (incident side first)."""

    n0: complex
    n: complex

    def __post_init__(self):
        if complex(self.n0).real <= 0.0 or complex(self.n).real <= 0.0:
            raise ValueError("refractive indices need a positive real part")


@dataclass(frozen=True)
class Ray:
    """Incidence angle (radians) and vacuum wavelength (nm)."""

    theta_i: float
    wavelength_nm: float

    def __post_init__(self):
        if not (0.0 <= self.theta_i < math.pi / 2.0):
            raise ValueError(f"incidence angle must be in [0, pi/2), got {self.theta_i!r}")
        if not self.wavelength_nm > 0.0:
            raise ValueError("wavelength must be positive")


@dataclass(frozen=True)
class LayerStack:
    """Coating stack: ambient index, ordered (index, thickness_nm) layers, substrate.

    The first layer in the list is the one the light meets first.  An empty
    layer list is a bare ambient/substrate interface.
    """

    ambient: complex
    layers: tuple
    substrate: complex

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple((complex(n), float(d)) for n, d in self.layers))
        if complex(self.ambient).real <= 0.0 or complex(self.substrate).real <= 0.0:
            raise ValueError("ambient/substrate indices need a positive real part")
        for i, (_, d) in enumerate(self.layers):
            if not d > 0.0:
                raise ValueError(f"layer {i}: thickness must be positive, got {d!r}")


def snell(iface, theta_i):
    """Transmitted angle from n0 sin(ti) = n sin(tt); complex past TIR."""
    if not (0.0 <= theta_i < math.pi / 2.0):
        raise ValueError(f"incidence angle must be in [0, pi/2), got {theta_i!r}")
    s = complex(iface.n0) * cmath.sin(theta_i) / complex(iface.n)
    return cmath.asin(s)


def _cos_refracted(n0, n, theta_i):
    """cos of the transmitted angle, branch chosen so Im(n cos) >= 0.

    That branch makes the transmitted/evanescent wave decay away from the
    interface, which keeps the layer recursions numerically stable.
    """
    s = complex(n0) * cmath.sin(theta_i) / complex(n)
    c = cmath.sqrt(1.0 - s * s)
    nc = complex(n) * c
    if nc.imag < 0.0 or (nc.imag == 0.0 and nc.real < 0.0):
        c = -c
    return c


def _fresnel_amplitudes(n0, n, cos_i, cos_t):
    rs = (n0 * cos_i - n * cos_t) / (n0 * cos_i + n * cos_t)
    rp = (n * cos_i - n0 * cos_t) / (n * cos_i + n0 * cos_t)
    return rs, rp


def fresnel(iface, theta_i):
    """Amplitude reflectances of a single interface as a MirrorResponse."""
    if not (0.0 <= theta_i < math.pi / 2.0):
        raise ValueError(f"incidence angle must be in [0, pi/2), got {theta_i!r}")
    n0, n = complex(iface.n0), complex(iface.n)
    cos_i = cmath.cos(theta_i)
    cos_t = _cos_refracted(n0, n, theta_i)
    rs, rp = _fresnel_amplitudes(n0, n, cos_i, cos_t)
    return MirrorResponse(rs, rp)


def fresnel_transmission(iface, theta_i):
    """Amplitude transmissions (t_s, t_p) of a single interface."""
    n0, n = complex(iface.n0), complex(iface.n)
    cos_i = cmath.cos(theta_i)
    cos_t = _cos_refracted(n0, n, theta_i)
    ts = 2.0 * n0 * cos_i / (n0 * cos_i + n * cos_t)
    tp = 2.0 * n0 * cos_i / (n * cos_i + n0 * cos_t)
    return ts, tp


def brewster_angle(n0, n):
    """Angle with r_p = 0 for a real-index pair: atan(n/n0)."""
    return math.atan2(float(n), float(n0))


def _stack_media(stack):
    chain = [complex(stack.ambient)]
    chain += [n for n, _ in stack.layers]
    chain.append(complex(stack.substrate))
    return chain


def stack_response(stack, ray):
    """Multilayer amplitude reflectances via the characteristic-matrix method.

    Each layer contributes M = [[cos b, -i sin b / eta], [-i eta sin b, cos b]]
    with phase thickness b = 2 pi n d cos(t) / lambda and tilted admittance
    eta_s = n cos(t), eta_p = n / cos(t).  Time convention is exp(-i w t), so
    absorbing media carry a positive imaginary index.  The admittance form
    returns r_p in the opposite sign convention from the Fresnel equations
    above, so the p result is negated to keep one convention package-wide.
    """
    n_amb = complex(stack.ambient)
    n_sub = complex(stack.substrate)
    cos_amb = cmath.cos(ray.theta_i)
    cos_sub = _cos_refracted(n_amb, n_sub, ray.theta_i)

    k0 = 2.0 * math.pi / ray.wavelength_nm
    out = []
    for pol in ("s", "p"):

        def eta(n, c):
            return n * c if pol == "s" else n / c

        m = np.eye(2, dtype=complex)
        for n_layer, d in stack.layers:
            c = _cos_refracted(n_amb, n_layer, ray.theta_i)
            beta = k0 * n_layer * d * c
            e = eta(n_layer, c)
            m = m @ np.array(
                [
                    [cmath.cos(beta), -1j * cmath.sin(beta) / e],
                    [-1j * e * cmath.sin(beta), cmath.cos(beta)],
                ],
                dtype=complex,
            )
        eta0 = eta(n_amb, cos_amb)
        eta_sub = eta(n_sub, cos_sub)
        b, c = m @ np.array([1.0, eta_sub], dtype=complex)
        r = complex((eta0 * b - c) / (eta0 * b + c))
        out.append(r if pol == "s" else -r)
    return MirrorResponse(out[0], out[1])


def stack_response_oracle(stack, ray):
    """Multilayer reflectances by recursive single-interface composition.

    Starting from the substrate, each boundary's Fresnel coefficient is folded
    in through r <- (r_j + r exp(2 i b)) / (1 + r_j r exp(2 i b)).  Entirely
    independent of the characteristic-matrix code path; used to cross-check it.
    """
    media = _stack_media(stack)
    n_amb = media[0]
    cosines = [cmath.cos(ray.theta_i)] + [
        _cos_refracted(n_amb, n, ray.theta_i) for n in media[1:]
    ]
    k0 = 2.0 * math.pi / ray.wavelength_nm

    out = []
    for pol in ("s", "p"):
        r = None
        # walk boundaries bottom-up: substrate interface first
        for j in range(len(media) - 2, -1, -1):
            rs, rp = _fresnel_amplitudes(media[j], media[j + 1], cosines[j], cosines[j + 1])
            r_j = rs if pol == "s" else rp
            if r is None:
                r = r_j
            else:
                n_inner, d_inner = stack.layers[j]
                phase = cmath.exp(2j * k0 * n_inner * d_inner * cosines[j + 1])
                r = (r_j + r * phase) / (1.0 + r_j * r * phase)
        out.append(r)
    return MirrorResponse(out[0], out[1])


def quarter_wave_stack(
    n_high=2.10,
    n_low=1.45,
    pairs=25,
    wavelength_nm=780.0,
    design_angle=math.radians(45.0),
    n_ambient=1.0,
    n_substrate=1.52,
):
    """Alternating high/low stack, each layer a quarter wave at the design angle.

    Layer thickness is lambda / (4 n cos t) with t the internal angle, so the
    stopband of both polarizations is centered on the design wavelength at the
    design incidence.  The default 25 pairs (50 layers) of Ta2O5/SiO2-class
    indices stands in for a commercial high reflector at 45 degrees / 780 nm.
    """
    layers = []
    for _ in range(pairs):
        for n in (n_high, n_low):
            c = _cos_refracted(n_ambient, n, design_angle).real
            layers.append((n, wavelength_nm / (4.0 * n * c)))
    return LayerStack(n_ambient, tuple(layers), n_substrate)


# --- stack description files ------------------------------------------------
#
# Plain text, one definition per line:
#   ambient   <n_real> <n_imag>
#   substrate <n_real> <n_imag>
#   <n_real> <n_imag> <thickness_nm>     (one line per layer, in light order)
# '#' starts a comment; blank lines are ignored.


def parse_stack_text(text):
    ambient = None
    substrate = None
    layers = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] in ("ambient", "substrate"):
            if len(tokens) != 3:
                raise StackParseError(line_no, f"'{tokens[0]}' needs 2 numbers, got {len(tokens) - 1}")
            try:
                value = complex(float(tokens[1]), float(tokens[2]))
            except ValueError:
                raise StackParseError(line_no, f"non-numeric index in {raw.strip()!r}") from None
            if tokens[0] == "ambient":
                if ambient is not None:
                    raise StackParseError(line_no, "duplicate 'ambient' line")
                ambient = value
            else:
                if substrate is not None:
                    raise StackParseError(line_no, "duplicate 'substrate' line")
                substrate = value
        else:
            if len(tokens) != 3:
                raise StackParseError(
                    line_no, f"layer line needs 'n_real n_imag thickness_nm', got {raw.strip()!r}"
                )
            try:
                n_re, n_im, d = (float(t) for t in tokens)
            except ValueError:
                raise StackParseError(line_no, f"non-numeric layer field in {raw.strip()!r}") from None
            if d <= 0.0:
                raise StackParseError(line_no, f"layer thickness must be positive, got {d!r}")
            layers.append((complex(n_re, n_im), d))
    if ambient is None:
        raise StackParseError(0, "missing 'ambient' line")
    if substrate is None:
        raise StackParseError(0, "missing 'substrate' line")
    return LayerStack(ambient, tuple(layers), substrate)


def load_stack_file(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_stack_text(fh.read())


def format_stack(stack):
    amb, sub = complex(stack.ambient), complex(stack.substrate)
    lines = [
        f"ambient {amb.real!r} {amb.imag!r}",
        f"substrate {sub.real!r} {sub.imag!r}",
    ]
    for n, d in stack.layers:
        lines.append(f"{n.real!r} {n.imag!r} {d!r}")
    return "\n".join(lines) + "\n"
