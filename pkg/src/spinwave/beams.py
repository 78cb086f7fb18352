"""Gaussian-beam parameters, Laguerre-Gauss transverse modes, and the
paraxial propagator, plus the radial quadrature used for mode overlaps.

All lengths are micrometers. Transverse modes are normalized so that
``integral |u_pl|^2 d^2r = A`` with ``A = pi w0^2 / 2`` the effective mode
area; equivalently ``u_00(0, 0) = 1`` at the focus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import QuadratureError

DEFAULT_WAVELENGTH_UM = 0.852  # cesium D2; probe wavelength is configurable


@dataclass(frozen=True)
class BeamParameters:
    """Probe beam geometry.

    Parameters
    ----------
    wavelength : float
        Vacuum wavelength in micrometers.
    waist_w0 : float
        1/e^2 intensity waist radius at the focus, micrometers.

    Derived attributes are exposed as properties: ``wavenumber_k0 = 2 pi /
    wavelength``, ``rayleigh_zR = k0 w0^2 / 2`` and ``mode_area_A =
    pi w0^2 / 2``.
    """

    wavelength: float
    waist_w0: float

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if self.waist_w0 <= 0:
            raise ValueError(f"waist must be positive, got {self.waist_w0}")

    @property
    def wavenumber_k0(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def rayleigh_zR(self) -> float:
        return self.wavenumber_k0 * self.waist_w0**2 / 2

    @property
    def mode_area_A(self) -> float:
        return math.pi * self.waist_w0**2 / 2


def beam_derived(wavelength: float, waist: float) -> BeamParameters:
    """Build :class:`BeamParameters` from wavelength and waist (micrometers)."""
    return BeamParameters(wavelength=wavelength, waist_w0=waist)


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Transverse mode label: radial index ``p >= 0``, azimuthal index ``l``."""

    p: int
    l: int = 0

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"radial index must be non-negative, got p={self.p}")


def gaussian_params(z, beam: BeamParameters):
    """Local beam radius, phase-front curvature radius, and axial phase.

    Returns ``(w(z), R(z), phase(z))`` with ``w = w0 sqrt(1 + (z/zR)^2)``,
    ``R = z (1 + (zR/z)^2)`` (infinite at the focal plane) and
    ``phase = atan(z / zR)``. Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=float)
    zr = beam.rayleigh_zR
    w = beam.waist_w0 * np.sqrt(1.0 + (z / zr) ** 2)
    with np.errstate(divide="ignore"):
        R = np.where(z == 0.0, np.inf, z * (1.0 + np.where(z == 0.0, 1.0, (zr / z) ** 2)))
    phase = np.arctan(z / zr)
    if np.ndim(z) == 0:
        return float(w), float(R), float(phase)
    return w, R, phase


def _lg_norm(p: int, l_abs: int) -> float:
    # sqrt(p! / (p + |l|)!) via lgamma for stability at large indices
    return math.exp(0.5 * (math.lgamma(p + 1) - math.lgamma(p + l_abs + 1)))


def lg_mode(mode: ModeIndex, rho, phi, z, beam: BeamParameters):
    """Evaluate the Laguerre-Gauss amplitude ``u_pl(rho, phi, z)``.

    The convention used here carries a diverging-wavefront curvature phase
    ``exp(+i k0 rho^2 / 2R)``, an axial phase ``exp(-i (2p + |l| + 1)
    atan(z/zR))`` and the azimuthal factor ``exp(-i l phi)``. ``u_00`` is 1
    on axis at the focus. Broadcasts over array inputs.
    """
    p, l = mode.p, mode.l
    la = abs(l)
    rho = np.asarray(rho, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    zr = beam.rayleigh_zR
    w = beam.waist_w0 * np.sqrt(1.0 + (z_arr / zr) ** 2)
    gouy = np.arctan(z_arr / zr)
    x = 2.0 * rho**2 / w**2
    amp = (
        _lg_norm(p, la)
        * (beam.waist_w0 / w)
        * (np.sqrt(2.0) * rho / w) ** la
        * eval_genlaguerre(p, la, x)
        * np.exp(-(rho**2) / w**2)
    )
    # k0 rho^2 / 2R written via 1/R = z / (z^2 + zR^2), finite at z = 0
    inv_R = z_arr / (z_arr**2 + zr**2)
    phase = beam.wavenumber_k0 * rho**2 * inv_R / 2.0 - (2 * p + la + 1) * gouy - l * np.asarray(phi)
    out = amp * np.exp(1j * phase)
    if np.ndim(out) == 0:
        return complex(out)
    return out


def propagator(dr_perp, dz: float, beam: BeamParameters):
    """Free paraxial propagator ``K(dr_perp, dz)`` between transverse planes.

    ``K = (-i k0 / (2 pi dz)) exp(i k0 |dr_perp|^2 / (2 dz))``. The
    ``dz = 0`` boundary is a transverse delta function and is rejected here;
    callers must handle that limit themselves.
    """
    if dz == 0:
        raise ValueError("propagator is a delta function at dz = 0; use the boundary case directly")
    dr2 = np.asarray(dr_perp, dtype=float) ** 2
    if dr2.ndim >= 1 and dr2.shape[-1] == 2:
        dr2 = dr2.sum(axis=-1)
    k0 = beam.wavenumber_k0
    out = (-1j * k0 / (2 * math.pi * dz)) * np.exp(1j * k0 * dr2 / (2 * dz))
    if np.ndim(out) == 0:
        return complex(out)
    return out


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the adaptive radial Gauss-Legendre quadrature.

    The radial domain is ``[0, cutoff_factor * scale]`` where the scale is
    chosen by the caller (typically ``max(w(z), sigma_perp)``). Node counts
    are doubled from ``start_nodes`` until two successive refinements agree
    to ``tol`` (relative to the integral magnitude or ``abs_floor``).
    """

    cutoff_factor: float = 6.0
    start_nodes: int = 96
    max_nodes: int = 3072
    tol: float = 1e-11
    abs_floor: float = 1e-13


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def radial_nodes(upper: float, n: int):
    """Gauss-Legendre nodes/weights on [0, upper] with the 2 pi rho measure folded in."""
    x, w = _leggauss(n)
    r = 0.5 * upper * (x + 1.0)
    wq = math.pi * upper * w * r  # = 2*pi * (upper/2) * w * r
    return r, wq


def adaptive_radial_integral(f, upper: float, spec: QuadratureSpec = QuadratureSpec()):
    """Integrate ``f(rho) * 2 pi rho drho`` on [0, upper], doubling nodes until converged.

    Raises :class:`QuadratureError` with the last residual if the node budget
    is exhausted before two refinements agree.
    """
    n = spec.start_nodes
    r, wq = radial_nodes(upper, n)
    prev = np.sum(f(r) * wq)
    while n < spec.max_nodes:
        n *= 2
        r, wq = radial_nodes(upper, n)
        cur = np.sum(f(r) * wq)
        residual = abs(cur - prev)
        if residual <= spec.tol * max(abs(cur), spec.abs_floor):
            return cur
        prev = cur
    raise QuadratureError(
        f"radial quadrature did not converge within {spec.max_nodes} nodes",
        residual=abs(cur - prev),
    )


def mode_inner_product(mode_a: ModeIndex, mode_b: ModeIndex, z: float, beam: BeamParameters,
                       spec: QuadratureSpec = QuadratureSpec()):
    """Normalized overlap ``(1/A) integral u_a^* u_b d^2r`` at the plane ``z``.

    The azimuthal integral is done analytically (zero unless ``l_a == l_b``);
    the radial factor uses the adaptive quadrature. Equals the Kronecker
    delta for an orthonormal pair, up to quadrature tolerance.
    """
    if mode_a.l != mode_b.l:
        return 0.0 + 0.0j
    w, _, _ = gaussian_params(z, beam)
    upper = spec.cutoff_factor * w

    def integrand(rho):
        return np.conj(lg_mode(mode_a, rho, 0.0, z, beam)) * lg_mode(mode_b, rho, 0.0, z, beam)

    return complex(adaptive_radial_integral(integrand, upper, spec) / beam.mode_area_A)


def mode_sum_propagator(r_perp, z, r_perp_prime, z_prime, beam: BeamParameters,
                        p_max: int, l_max: int):
    """Truncated completeness sum ``sum_pl u_pl(r, z) u_pl^*(r', z') / A``.

    Converges to ``propagator(r - r', z - z')`` as the truncation grows;
    used to probe mode-basis completeness.
    """
    (rho, phi), (rho_p, phi_p) = r_perp, r_perp_prime
    total = 0.0 + 0.0j
    for l in range(-l_max, l_max + 1):
        for p in range(p_max + 1):
            m = ModeIndex(p, l)
            total += lg_mode(m, rho, phi, z, beam) * np.conj(lg_mode(m, rho_p, phi_p, z_prime, beam))
    return total / beam.mode_area_A
