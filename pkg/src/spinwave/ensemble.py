"""Atomic cloud geometry, probe coupling weights, and the collective
coupling figures of merit.

The cloud is a cylindrically symmetric Gaussian,
``eta(r) = eta0 exp(-2 rho^2 / sigma_perp^2 - 2 z^2 / sigma_z^2)``,
so the total atom number is ``N = eta0 (pi/2)^{3/2} sigma_perp^2 sigma_z``.
Everything downstream is controlled by the probe-intensity moments of this
density: the effective atom numbers ``N_eff^{(K)} = integral eta beta00^K``
with ``beta00 = |u00|^2`` the local intensity weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .beams import BeamParameters, ModeIndex, QuadratureSpec, adaptive_radial_integral, lg_mode
from .errors import QuadratureError

GAUSSIAN_VOLUME_FACTOR = (math.pi / 2) ** 1.5  # N = eta0 * this * sigma_perp^2 * sigma_z
CM3_TO_UM3 = 1e-12  # density unit conversion: 1 cm^-3 = 1e-12 um^-3


@dataclass(frozen=True)
class CloudGeometry:
    """Cylindrically symmetric Gaussian cloud.

    ``sigma_perp`` and ``sigma_z`` are the 1/e^2 transverse and longitudinal
    widths (micrometers); ``peak_density_eta0`` is in atoms per cubic
    micrometer.
    """

    sigma_perp: float
    sigma_z: float
    peak_density_eta0: float

    def __post_init__(self):
        if self.sigma_perp <= 0 or self.sigma_z <= 0:
            raise ValueError("cloud widths must be positive")
        if self.peak_density_eta0 < 0:
            raise ValueError("peak density must be non-negative")

    @property
    def total_N(self) -> float:
        return self.peak_density_eta0 * GAUSSIAN_VOLUME_FACTOR * self.sigma_perp**2 * self.sigma_z

    @property
    def aspect_ratio(self) -> float:
        return self.sigma_z / self.sigma_perp

    @classmethod
    def from_atom_number(cls, sigma_perp: float, sigma_z: float, total_n: float) -> "CloudGeometry":
        eta0 = total_n / (GAUSSIAN_VOLUME_FACTOR * sigma_perp**2 * sigma_z)
        return cls(sigma_perp, sigma_z, eta0)

    def density(self, rho, z):
        """Atom density at (rho, z), vectorized."""
        rho = np.asarray(rho, dtype=float)
        z = np.asarray(z, dtype=float)
        return self.peak_density_eta0 * np.exp(
            -2.0 * rho**2 / self.sigma_perp**2 - 2.0 * z**2 / self.sigma_z**2
        )


@dataclass(frozen=True)
class AtomicSpecies:
    """Hyperfine spin, Lande factor, and unit-oscillator cross-section.

    ``resonant_cross_section_sigma0 = 3 lambda^2 / (2 pi)`` for the probe
    wavelength. Spin-1/2 uses g = 2, which is what makes the local
    optical-pumping map reduce to the -1/3 and -2/9 decay coefficients;
    the cesium f = 4 manifold uses g = 1/4.
    """

    spin_f: float
    lande_gf: float
    resonant_cross_section_sigma0: float

    @classmethod
    def spin_half(cls, wavelength: float) -> "AtomicSpecies":
        return cls(0.5, 2.0, resonant_cross_section(wavelength))

    @classmethod
    def cesium_f4(cls, wavelength: float) -> "AtomicSpecies":
        return cls(4.0, 0.25, resonant_cross_section(wavelength))


def resonant_cross_section(wavelength: float) -> float:
    """Unit-oscillator-strength resonant cross-section, 3 lambda^2 / 2 pi."""
    return 3.0 * wavelength**2 / (2.0 * math.pi)


@dataclass(frozen=True)
class ProbeParameters:
    """Peak scattering rate gamma0 and the per-atom measurement strength.

    ``kappa = (1 / 9 f^2) (sigma0 / A) gamma0``; for f = 1/2 this is
    ``(4/9) (sigma0 / A) gamma0``.
    """

    gamma0: float
    kappa: float

    @classmethod
    def for_beam(cls, beam: BeamParameters, species: AtomicSpecies, gamma0: float = 1.0) -> "ProbeParameters":
        kappa = measurement_strength(beam, species, gamma0)
        return cls(gamma0=gamma0, kappa=kappa)


def measurement_strength(beam: BeamParameters, species: AtomicSpecies, gamma0: float = 1.0) -> float:
    """Per-atom measurement strength kappa = (1/9f^2)(sigma0/A) gamma0."""
    return (species.resonant_cross_section_sigma0 / beam.mode_area_A) * gamma0 / (9.0 * species.spin_f**2)


@dataclass(frozen=True)
class EffectiveNumbers:
    """Geometry moments N_eff^(1..3) and the effective optical density."""

    n1: float
    n2: float
    n3: float
    od_eff: float


def beta_weight(mode: ModeIndex, position, beam: BeamParameters):
    """Scattering weight ``beta_pl(r) = u_pl^*(r) u_00(r)`` at one position.

    For the fundamental mode this is the real intensity weight
    ``|u00|^2`` in (0, 1].
    """
    rho, phi, z = position
    val = np.conj(lg_mode(mode, rho, phi, z, beam)) * lg_mode(ModeIndex(0, 0), rho, phi, z, beam)
    if np.ndim(val) == 0:
        return complex(val)
    return val


def intensity_weight(rho, z, beam: BeamParameters):
    """``beta00(r) = |u00(r)|^2``, vectorized and real."""
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    w2 = beam.waist_w0**2 * (1.0 + (z / beam.rayleigh_zR) ** 2)
    return (beam.waist_w0**2 / w2) * np.exp(-2.0 * rho**2 / w2)


def _nk_z_integrand(z, K, cloud: CloudGeometry, beam: BeamParameters):
    # transverse Gaussian x Gaussian integral done in closed form per z plane
    w2 = beam.waist_w0**2 * (1.0 + (z / beam.rayleigh_zR) ** 2)
    transverse = (
        (beam.waist_w0**2 / w2) ** K
        * math.pi
        * cloud.sigma_perp**2
        * w2
        / (2.0 * (w2 + K * cloud.sigma_perp**2))
    )
    return math.exp(-2.0 * z**2 / cloud.sigma_z**2) * transverse


def effective_atom_number(K: int, cloud: CloudGeometry, beam: BeamParameters,
                          rel_tol: float = 1e-10) -> float:
    """``N_eff^{(K)} = integral eta(r) beta00(r)^K d^3r``.

    The transverse integral is analytic per z plane; the remaining 1D
    integral runs over ``|z| <= 6 sigma_z`` with adaptive quadrature.
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    lim = 6.0 * cloud.sigma_z
    val, abserr = quad(_nk_z_integrand, -lim, lim, args=(K, cloud, beam), limit=400,
                       epsabs=0.0, epsrel=rel_tol)
    if val > 0 and abserr > 1e-6 * val:
        raise QuadratureError("z quadrature for effective atom number did not converge",
                              residual=abserr)
    return cloud.peak_density_eta0 * val


def effective_atom_number_quad2d(K: int, cloud: CloudGeometry, beam: BeamParameters,
                                 spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Same moment as :func:`effective_atom_number` but with the transverse
    integral done numerically too (full 2D + 1D quadrature path). Used to
    cross-check the analytic-transverse reduction."""
    lim = 6.0 * cloud.sigma_z

    def z_integrand(z):
        w = beam.waist_w0 * math.sqrt(1.0 + (z / beam.rayleigh_zR) ** 2)
        upper = spec.cutoff_factor * max(w, cloud.sigma_perp)

        def radial(rho):
            return cloud.density(rho, z) * intensity_weight(rho, z, beam) ** K

        return adaptive_radial_integral(radial, upper, spec)

    val, abserr = quad(z_integrand, -lim, lim, limit=400, epsabs=0.0, epsrel=1e-9)
    if val > 0 and abserr > 1e-6 * val:
        raise QuadratureError("z quadrature (2D path) did not converge", residual=abserr)
    return val


def effective_atom_number_mc(K: int, cloud: CloudGeometry, beam: BeamParameters,
                             n_samples: int = 10**7, seed: int = 0):
    """Monte-Carlo estimate of ``N_eff^{(K)}`` with standard error.

    Samples positions from the normalized cloud density (independent
    Gaussians) and averages ``beta00^K``; returns ``(estimate, stderr)``.
    Serves as the independent cross-check for the quadrature paths.
    """
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(K)]))
    # eta/N factorizes; exp(-2 x^2/sigma^2) is a normal with std sigma/2 per axis
    sx = cloud.sigma_perp / 2.0
    sz = cloud.sigma_z / 2.0
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    chunk = min(2_000_000, n_samples)
    while remaining > 0:
        m = min(chunk, remaining)
        x = rng.standard_normal(m) * sx
        y = rng.standard_normal(m) * sx
        z = rng.standard_normal(m) * sz
        vals = intensity_weight(np.hypot(x, y), z, beam) ** K
        total += vals.sum()
        total_sq += (vals**2).sum()
        remaining -= m
    mean = total / n_samples
    var = total_sq / n_samples - mean**2
    stderr = math.sqrt(max(var, 0.0) / n_samples)
    return cloud.total_N * mean, cloud.total_N * stderr


def od_eff(cloud: CloudGeometry, beam: BeamParameters, species: AtomicSpecies) -> float:
    """Effective optical density ``N_eff^{(2)} sigma0 / A``."""
    n2 = effective_atom_number(2, cloud, beam)
    return n2 * species.resonant_cross_section_sigma0 / beam.mode_area_A


def effective_numbers(cloud: CloudGeometry, beam: BeamParameters, species: AtomicSpecies) -> EffectiveNumbers:
    """All three effective atom numbers plus the effective optical density."""
    n1, n2, n3 = (effective_atom_number(K, cloud, beam) for K in (1, 2, 3))
    return EffectiveNumbers(
        n1=n1, n2=n2, n3=n3,
        od_eff=n2 * species.resonant_cross_section_sigma0 / beam.mode_area_A,
    )


def solve_density_for_od(target_od: float, cloud_shape, beam: BeamParameters,
                         species: AtomicSpecies) -> float:
    """Peak density that produces the requested effective optical density.

    ``cloud_shape`` is ``(sigma_perp, sigma_z)``. OD_eff is linear in the
    peak density, so the solve is a single division (exact to roundoff).
    """
    if target_od < 0:
        raise ValueError("target OD must be non-negative")
    sigma_perp, sigma_z = cloud_shape
    unit_cloud = CloudGeometry(sigma_perp, sigma_z, 1.0)
    od_unit = od_eff(unit_cloud, beam, species)
    return target_od / od_unit


def local_scattering_rate(position, beam: BeamParameters, gamma0: float):
    """Diffuse photon-scattering rate at a position: ``gamma0 beta00(r)``."""
    rho, _, z = position
    return gamma0 * intensity_weight(rho, z, beam)


def coupling_strength_xi(od_eff_value: float, gamma0: float, T: float, spin_f: float) -> float:
    """Integrated projection-noise-to-shot-noise ratio,
    ``xi = OD_eff gamma0 T / (18 f)``."""
    if T < 0:
        raise ValueError("integration time must be non-negative")
    return od_eff_value * gamma0 * T / (18.0 * spin_f)


def faraday_signal(spin_z_expectations, positions, beam: BeamParameters) -> float:
    """Polarimeter signal ``sum_i beta00(r_i) <f_z^(i)>``.

    In the uniform-intensity limit every weight is 1 and this reduces to the
    symmetric collective spin.
    """
    if len(spin_z_expectations) != len(positions):
        raise ValueError("spin expectation and position lists must have equal length")
    total = 0.0
    for fz, (rho, _, z) in zip(spin_z_expectations, positions):
        total += float(intensity_weight(rho, z, beam)) * fz
    return total


def dipole_forward_coefficients(polarizability_xx: complex, polarizability_yx: complex,
                                position, beam: BeamParameters):
    """Forward-scattered field coefficients for a single dipole.

    Returns ``(phase_shift, attenuation, faraday_angle, birefringence_angle)``
    for an x-polarized probe: the scalar index phase shift and Beer's-law
    attenuation come from alpha_xx, the Stokes rotation (Faraday) and
    birefringence angles from alpha_yx. All share the local intensity weight
    ``|u00(r)|^2`` and the 2 pi k0 / A scale.
    """
    rho, _, z = position
    weight = float(intensity_weight(rho, z, beam))
    scale = 2.0 * math.pi * beam.wavenumber_k0 / beam.mode_area_A * weight
    phase_shift = scale * np.real(polarizability_xx)
    attenuation = 2.0 * scale * np.imag(polarizability_xx)
    faraday_angle = -2.0 * scale * np.imag(polarizability_yx)
    birefringence_angle = 2.0 * scale * np.real(polarizability_yx)
    return phase_shift, attenuation, faraday_angle, birefringence_angle
