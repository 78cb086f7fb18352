"""Coarse-grained slice grid, diffuse-coupling projection tensor, and the
initial spin-wave moments.

Diffuse scattering couples the probe-weighted spin waves to higher
transverse modes. Within one longitudinal slice the coupling is encoded by
the tensor

    c[a][b](z_k) = (1/A) integral |u00|^2 u_a^* u_b d^2r_perp,

which is Hermitian in (a, b) and vanishes between different azimuthal
indices. For a cylindrically symmetric cloud the whole problem closes on
the l = 0 sector, so the default basis is radial-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import eval_genlaguerre

from .beams import BeamParameters, ModeIndex, QuadratureSpec, _lg_norm, radial_nodes
from .ensemble import CloudGeometry
from .errors import QuadratureError


@dataclass(frozen=True)
class SliceGrid:
    """Uniform longitudinal slices, symmetric about z = 0."""

    centers: np.ndarray
    thickness: float
    extent_sigmas: float

    def __len__(self):
        return len(self.centers)


def build_grid(cloud: CloudGeometry, slice_count: int, extent_sigmas: float = 3.0) -> SliceGrid:
    """Uniform slice grid covering ``|z| <= extent_sigmas * sigma_z``.

    Slice thickness is ``2 extent sigma_z / slice_count``; centers are the
    midpoints, so they sum to zero.
    """
    if slice_count < 4:
        raise ValueError(f"need at least 4 slices, got {slice_count}")
    if extent_sigmas < 3.0:
        raise ValueError(f"grid must cover at least 3 sigma_z, got {extent_sigmas}")
    half = extent_sigmas * cloud.sigma_z
    dz = 2.0 * half / slice_count
    centers = -half + dz * (np.arange(slice_count) + 0.5)
    return SliceGrid(centers=centers, thickness=dz, extent_sigmas=extent_sigmas)


@dataclass(frozen=True)
class WaveBasis:
    """Ordered truncated set of transverse modes; must contain (0, 0) first."""

    modes: tuple

    def __post_init__(self):
        if not self.modes or self.modes[0] != ModeIndex(0, 0):
            raise ValueError("basis must start with the fundamental mode (0, 0)")

    @classmethod
    def radial_only(cls, p_max: int) -> "WaveBasis":
        """l = 0 basis up to radial index p_max (the cylindrically symmetric sector)."""
        return cls(tuple(ModeIndex(p, 0) for p in range(p_max + 1)))

    @classmethod
    def rectangular(cls, p_max: int, l_max: int) -> "WaveBasis":
        modes = [ModeIndex(0, 0)]
        for l in range(-l_max, l_max + 1):
            for p in range(p_max + 1):
                if (p, l) != (0, 0):
                    modes.append(ModeIndex(p, l))
        return cls(tuple(modes))

    @property
    def p_max(self) -> int:
        return max(m.p for m in self.modes)

    @property
    def l_set(self):
        return sorted({m.l for m in self.modes})

    def __len__(self):
        return len(self.modes)


@dataclass(frozen=True)
class ProjectionTensor:
    """Per-slice coupling blocks ``values[k, a, b] = c[a][b](z_k)``."""

    basis: WaveBasis
    grid: SliceGrid
    values: np.ndarray  # (n_slices, n_modes, n_modes) complex


def _radial_envelopes(basis: WaveBasis, rho: np.ndarray, z: float, beam: BeamParameters):
    """Radial amplitude profiles and axial phases for all basis modes at one plane.

    The curvature phase is omitted; it is common to every mode and cancels
    in all conjugate pairings used in this module.
    """
    w = beam.waist_w0 * math.sqrt(1.0 + (z / beam.rayleigh_zR) ** 2)
    gouy = math.atan2(z, beam.rayleigh_zR)
    x = 2.0 * rho**2 / w**2
    amps = np.empty((len(basis), rho.size))
    phases = np.empty(len(basis))
    for i, m in enumerate(basis.modes):
        la = abs(m.l)
        amps[i] = (
            _lg_norm(m.p, la)
            * (beam.waist_w0 / w)
            * (np.sqrt(2.0) * rho / w) ** la
            * eval_genlaguerre(m.p, la, x)
            * np.exp(-(rho**2) / w**2)
        )
        phases[i] = -(2 * m.p + la + 1) * gouy
    return amps, phases


def projection_coefficients(basis: WaveBasis, grid: SliceGrid, beam: BeamParameters,
                            spec: QuadratureSpec = QuadratureSpec()) -> ProjectionTensor:
    """Build the coupling tensor ``c[a][b](z_k)`` by radial quadrature.

    The azimuthal selection rule (l_a == l_b) is applied analytically; the
    curvature phases of the conjugate pair cancel, leaving the axial-phase
    difference ``exp(2i (p_a - p_b) atan(z/zR))`` times a real radial
    integral of smooth Gaussians times polynomials.
    """
    P = len(basis)
    K = len(grid)
    values = np.empty((K, P, P), dtype=complex)
    ls = np.array([m.l for m in basis.modes])
    same_l = ls[:, None] == ls[None, :]
    for k, zk in enumerate(grid.centers):
        w = beam.waist_w0 * math.sqrt(1.0 + (zk / beam.rayleigh_zR) ** 2)
        upper = spec.cutoff_factor * w
        n = spec.start_nodes
        prev = None
        residual = math.inf
        while n <= spec.max_nodes:
            rho, wq = radial_nodes(upper, n)
            amps, phases = _radial_envelopes(basis, rho, zk, beam)
            w2 = w**2
            intensity = (beam.waist_w0**2 / w2) * np.exp(-2.0 * rho**2 / w2)
            weighted = amps * (intensity * wq)
            block = (amps @ weighted.T).T  # [a, b] = integral |u00|^2 amp_a amp_b
            block = block * np.exp(1j * (phases[None, :] - phases[:, None]))
            block = np.where(same_l, block, 0.0) / beam.mode_area_A
            if prev is not None:
                residual = np.max(np.abs(block - prev))
                if residual <= spec.tol * max(np.max(np.abs(block)), spec.abs_floor):
                    break
                prev = block
            else:
                prev = block
            n *= 2
        else:
            raise QuadratureError("projection-coefficient quadrature did not converge",
                                  residual=float(residual))
        values[k] = block
    return ProjectionTensor(basis=basis, grid=grid, values=values)


@dataclass(frozen=True)
class InitialMoments:
    """Spin-coherent-state moments projected onto (mode, slice).

    ``means[k, a]`` is f * dz * integral eta beta_a; ``cov_blocks[k, a, b]``
    is (f/2) * dz * integral eta beta_a^* beta_b (block-diagonal across
    slices); ``noise_blocks[k, a, b]`` is the optical-pumping injection
    overlap dz * integral eta beta00 beta_a^* beta_b. Covariance blocks are
    Hermitian positive semidefinite by construction.
    """

    basis: WaveBasis
    grid: SliceGrid
    means: np.ndarray        # (K, P) complex
    cov_blocks: np.ndarray   # (K, P, P) complex
    noise_blocks: np.ndarray  # (K, P, P) complex
    spin_f: float

    def covariance_matrix(self) -> np.ndarray:
        """Assemble the full block-diagonal (K*P, K*P) covariance."""
        K, P = self.means.shape
        C = np.zeros((K * P, K * P), dtype=complex)
        for k in range(K):
            C[k * P:(k + 1) * P, k * P:(k + 1) * P] = self.cov_blocks[k]
        return C


def initial_moments(cloud: CloudGeometry, beam: BeamParameters, basis: WaveBasis,
                    grid: SliceGrid, spin_f: float,
                    spec: QuadratureSpec = QuadratureSpec()) -> InitialMoments:
    """Moments of an x-polarized spin coherent state on the (mode, slice) grid.

    Summed over slices, the fundamental-mode entries reproduce the effective
    atom numbers: ``sum_k means[k, 00] -> N1 f``, ``sum_k cov[k, 00, 00] ->
    N2 f / 2`` and ``sum_k noise[k, 00, 00] -> N3``.
    """
    P = len(basis)
    K = len(grid)
    dz = grid.thickness
    means = np.empty((K, P), dtype=complex)
    cov_blocks = np.empty((K, P, P), dtype=complex)
    noise_blocks = np.empty((K, P, P), dtype=complex)
    ls = np.array([m.l for m in basis.modes])
    mean_sel = ls == 0  # azimuthal integral of beta_a against the symmetric cloud
    same_l = ls[:, None] == ls[None, :]
    for k, zk in enumerate(grid.centers):
        w = beam.waist_w0 * math.sqrt(1.0 + (zk / beam.rayleigh_zR) ** 2)
        upper = spec.cutoff_factor * max(w, cloud.sigma_perp)
        n = spec.start_nodes
        prev = None
        residual = math.inf
        while n <= spec.max_nodes:
            rho, wq = radial_nodes(upper, n)
            amps, phases = _radial_envelopes(basis, rho, zk, beam)
            w2 = w**2
            u00_amp = (beam.waist_w0 / w) * np.exp(-(rho**2) / w2)
            beta_amp = amps * u00_amp  # |beta_a| radial profiles; beta_amp[0] = |u00|^2
            eta = cloud.density(rho, zk)
            # beta_a phase = u00 phase - u_a phase = phases[0] - phases[a] (curvature cancels)
            bphase = np.exp(1j * (phases[0] - phases))
            m_vec = np.where(mean_sel, (beta_amp @ (eta * wq)) * bphase, 0.0)
            wvec = eta * wq
            M2 = beta_amp @ (beta_amp * wvec).T
            M3 = beta_amp @ (beta_amp * (wvec * beta_amp[0])).T
            state = (m_vec, M2, M3)
            if prev is not None:
                residual = max(
                    np.max(np.abs(state[1] - prev[1])),
                    np.max(np.abs(state[2] - prev[2])),
                )
                if residual <= spec.tol * max(np.max(np.abs(state[1])), spec.abs_floor):
                    break
            prev = state
            n *= 2
        else:
            raise QuadratureError("initial-moment quadrature did not converge",
                                  residual=float(residual))
        phase_pair = np.conj(bphase)[:, None] * bphase[None, :]
        means[k] = spin_f * dz * m_vec
        cov_blocks[k] = np.where(same_l, (spin_f / 2.0) * dz * M2 * phase_pair, 0.0)
        noise_blocks[k] = np.where(same_l, dz * M3 * phase_pair, 0.0)
    return InitialMoments(basis=basis, grid=grid, means=means, cov_blocks=cov_blocks,
                          noise_blocks=noise_blocks, spin_f=spin_f)


@dataclass
class ConvergenceReport:
    """Downstream metric across a refinement sequence with a Richardson-style
    extrapolated limit."""

    labels: list
    values: list
    diffs: list = field(default_factory=list)
    monotone: bool = True
    converged_at: int | None = None
    extrapolated: float | None = None
    threshold: float = 0.0

    def summary(self) -> str:
        rows = [f"{lab}: {val:.6g}" for lab, val in zip(self.labels, self.values)]
        status = "converged" if self.converged_at is not None else "not converged"
        return "; ".join(rows) + f" [{status}, extrapolated={self.extrapolated}]"


def convergence_probe(settings: Sequence, metric: Callable, threshold: float,
                      labels: Sequence | None = None) -> ConvergenceReport:
    """Evaluate a metric along a monotone refinement sequence.

    ``settings`` is the refinement sequence (finest last) and ``metric`` maps
    a setting to a scalar. The report records successive differences, flags
    non-monotone behavior of those differences, marks the first level whose
    change is below ``threshold``, and attaches a Richardson-style estimate
    from the last two levels (geometric-ratio extrapolation when the ratio
    of successive differences is stable and contracting).
    """
    values = [float(metric(s)) for s in settings]
    labels = list(labels) if labels is not None else [str(s) for s in settings]
    report = ConvergenceReport(labels=labels, values=values, threshold=threshold)
    diffs = [abs(b - a) for a, b in zip(values, values[1:])]
    report.diffs = diffs
    if diffs:
        report.monotone = all(d1 >= d2 for d1, d2 in zip(diffs, diffs[1:]))
        for i, d in enumerate(diffs):
            if d <= threshold:
                report.converged_at = i + 1
                break
    if len(diffs) >= 2 and diffs[-2] > 0:
        ratio = diffs[-1] / diffs[-2]
        if 0 < ratio < 0.9:
            # geometric tail sum estimate
            sign = math.copysign(1.0, values[-1] - values[-2])
            report.extrapolated = values[-1] + sign * diffs[-1] * ratio / (1.0 - ratio)
        else:
            report.extrapolated = values[-1]
    elif values:
        report.extrapolated = values[-1]
    return report
