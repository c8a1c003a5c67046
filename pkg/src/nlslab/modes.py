"""Symplectic mode coordinates around the ground-state orbit.

A state near the orbit {e^(i theta) Phi} is written, after gauge fixing,
as e^(-i theta) psi = Phi + eta and eta is split along the discrete modes

    eta = lam_plus U_plus + lam_minus U_minus + b Phi' + Gamma,
    U_pm = f1 +- i f2,

with Gamma symplectically orthogonal to U_plus, U_minus, i Phi and Phi'.
The module owns the gauge choice, the decomposition, the energy norm,
and the distance functions d / d-tilde built from it.  The symplectic
form is Omega(u, v) = Im <u, v> in the quadrature inner product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import (DegenerateGauge, DomainError, NegativeQuadraticForm,
                     NonConvergence)
from .functionals import hamiltonian, mass
from .grid import (RadialField, inner, inner_real, norm_H1, norm_L2,
                   radial_derivative, require_finite)
from .spectrum import lminus_rows, lplus_rows, tridiag_matvec


def symplectic_form(f: RadialField, g: RadialField) -> float:
    """Omega(f, g) = Im <f, g>; Omega(U_plus, U_minus) = 2 (f1, f2) = 1."""
    z = inner(f, g)
    return float(z.imag) if isinstance(z, complex) else 0.0


def _smoothstep5(t: float) -> float:
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def chi_cutoff(x: float) -> float:
    """C^2 cutoff: 1 on (-inf, 1], 0 on [2, inf), quintic ramp between."""
    if x <= 1.0:
        return 1.0
    if x >= 2.0:
        return 0.0
    return 1.0 - _smoothstep5(x - 1.0)


@dataclass(frozen=True)
class DistanceConfig:
    """Calibration of the distance functions.

    delta_E is the energy-norm smallness scale: the cutoff in d is
    evaluated at ||eta||_E / (2 delta_E), and d-tilde blends from d to
    the orbital H1 distance over [delta_E, delta_E + blend_width].
    """

    delta_E: float
    chi: Callable[[float], float] = chi_cutoff
    blend_width: float | None = None

    def __post_init__(self):
        if not (self.delta_E > 0.0 and math.isfinite(self.delta_E)):
            raise DomainError(f"delta_E must be positive, got {self.delta_E}")
        if self.blend_width is not None and not self.blend_width > 0.0:
            raise DomainError("blend_width must be positive when given")
        if abs(self.chi(1.0) - 1.0) > 1e-12 or abs(self.chi(2.0)) > 1e-12:
            raise DomainError("cutoff must satisfy chi(1) = 1 and chi(2) = 0")
        samples = [self.chi(x) for x in np.linspace(0.25, 2.75, 41)]
        if any(b > a + 1e-12 for a, b in zip(samples, samples[1:])):
            raise DomainError("cutoff must be non-increasing")


@dataclass(frozen=True)
class ModeCoordinates:
    """Gauge angle, perturbation, and its symplectic components.

    lam1 = (lam_plus + lam_minus)/2 and lam2 = (lam_plus - lam_minus)/2,
    so eta = 2 lam1 f1 + 2i lam2 f2 + b Phi' + Gamma.  The distance
    fields are NaN until a DistanceConfig is supplied.
    """

    theta: float
    eta: RadialField
    lam_plus: float
    lam_minus: float
    lam1: float
    lam2: float
    b: float
    gamma: RadialField
    energy_norm: float = math.nan
    c_omega: float = math.nan
    d_omega: float = math.nan
    d_tilde: float = math.nan


def _phi_prime(gs) -> RadialField:
    if gs.omega_derivative is not None:
        return gs.omega_derivative
    from .groundstate import solve_phi_prime
    return solve_phi_prime(gs)


def _check_grids(psi: RadialField, gs, spec=None):
    g = gs.profile.grid
    if psi.grid is not g and not psi.grid.same_geometry(g):
        raise DomainError("state and ground state live on different grids")
    if spec is not None:
        gf = spec.f1.grid
        if gf is not g and not gf.same_geometry(g):
            raise DomainError("spectral data lives on a different grid")


def gauge_theta(psi: RadialField, gs) -> float:
    """Phase theta with Omega(e^(-i theta) psi, Phi') = 0 and the real
    pairing negative: theta = arg <psi, Phi'> + pi.

    Raises DegenerateGauge when the pairing is numerically zero.
    """
    _check_grids(psi, gs)
    require_finite(psi)
    pp = _phi_prime(gs)
    z = complex(inner(psi, pp))
    if abs(z) < 1e-12 * norm_L2(psi) * norm_L2(pp):
        raise DegenerateGauge(
            "pairing <psi, Phi'> is numerically zero; no gauge angle")
    theta = float(np.angle(z)) + math.pi
    if theta > math.pi:
        theta -= 2.0 * math.pi
    return theta


def decompose(psi: RadialField, gs, spec, cfg: DistanceConfig | None = None):
    """Split psi into gauge angle, discrete-mode coefficients, and Gamma.

    Parameters
    ----------
    psi : RadialField
        The state (complex values allowed).
    gs : GroundState
        Orbit profile, with its omega-derivative.
    spec : SpectralData
        Normalized mode pair from `solve_mu`.
    cfg : DistanceConfig, optional
        When given, the distance fields of the result are filled in.

    Returns
    -------
    ModeCoordinates
    """
    _check_grids(psi, gs, spec)
    grid = gs.profile.grid
    theta = gauge_theta(psi, gs)

    phi = gs.profile.values.real
    pp = _phi_prime(gs).values.real
    f1 = spec.f1.values.real
    f2 = spec.f2.values.real
    w = grid.w

    eta_v = np.exp(-1j * theta) * psi.values - phi
    eta = RadialField(grid, eta_v)

    u_plus = f1 + 1j * f2
    u_minus = f1 - 1j * f2
    # lam_plus = Omega(eta, U_minus), lam_minus = -Omega(eta, U_plus),
    # b = -Omega(eta, i Phi) / (Phi, Phi'); all pairings reduce to real
    # quadratures because f1, f2, Phi, Phi' are real
    lam_plus = float(np.sum(w * (eta_v * np.conj(u_minus)).imag))
    lam_minus = -float(np.sum(w * (eta_v * np.conj(u_plus)).imag))
    dm = float(np.sum(w * phi * pp))
    b = float(np.sum(w * eta_v.real * phi)) / dm
    lam1 = 0.5 * (lam_plus + lam_minus)
    lam2 = 0.5 * (lam_plus - lam_minus)

    gamma_v = eta_v - lam_plus * u_plus - lam_minus * u_minus - b * pp
    gamma = RadialField(grid, gamma_v)

    # the four symplectic orthogonalities of Gamma, relative to the size
    # of eta against each pairing partner
    eta_n = norm_L2(eta)
    checks = (
        ("Omega(Gamma, U_plus)",
         np.sum(w * (gamma_v * np.conj(u_plus)).imag),
         eta_n * float(np.sqrt(np.sum(w * np.abs(u_plus) ** 2)))),
        ("Omega(Gamma, U_minus)",
         np.sum(w * (gamma_v * np.conj(u_minus)).imag),
         eta_n * float(np.sqrt(np.sum(w * np.abs(u_minus) ** 2)))),
        ("Omega(Gamma, i Phi)",
         -np.sum(w * gamma_v.real * phi),
         eta_n * float(np.sqrt(np.sum(w * phi ** 2)))),
        ("Omega(Gamma, Phi')",
         np.sum(w * gamma_v.imag * pp),
         eta_n * float(np.sqrt(np.sum(w * pp ** 2)))),
    )
    bad = [f"{name} = {val:.3e}" for name, val, scale in checks
           if abs(val) > 1e-6 * scale]
    if bad:
        raise NonConvergence(
            "symplectic orthogonality of Gamma failed: " + "; ".join(bad))

    recon = (2.0 * lam1) * f1 + (2j * lam2) * f2 + b * pp + gamma_v
    if eta_n > 0.0 and float(np.sqrt(np.sum(w * np.abs(recon - eta_v) ** 2))) \
            > 1e-8 * eta_n:
        raise NonConvergence("mode reconstruction of eta failed")

    coords = ModeCoordinates(
        theta=theta, eta=eta, lam_plus=lam_plus, lam_minus=lam_minus,
        lam1=lam1, lam2=lam2, b=b, gamma=gamma)
    if cfg is not None:
        scalars = distance_d(coords, psi, gs, spec, cfg)
        coords = replace(coords, **scalars)
        coords = replace(
            coords, d_tilde=distance_dtilde(psi, gs, spec, cfg,
                                            coords=coords))
    return coords


def _energy_quadratic(coords, gs, spec) -> float:
    """<L_plus Re Gamma, Re Gamma> + <L_minus Im Gamma, Im Gamma>."""
    grid = gs.profile.grid
    prm = gs.params
    phi = gs.profile.values.real
    w = grid.w
    gr = coords.gamma.values.real
    gi = coords.gamma.values.imag
    q = float(np.sum(w * gr * tridiag_matvec(lplus_rows(grid, prm, phi), gr)))
    q += float(np.sum(w * gi * tridiag_matvec(lminus_rows(grid, prm, phi),
                                              gi)))
    scale = float(np.sum(w * (gr * gr + gi * gi)))
    if q < -1e-10 * max(scale, 1e-300) * (1.0 + abs(prm.omega)):
        raise NegativeQuadraticForm(
            f"<L Gamma, Gamma> = {q:.3e} < 0: symplectic orthogonality "
            f"does not control Gamma on this state")
    return max(q, 0.0)


def distance_d(coords: ModeCoordinates, psi: RadialField, gs, spec,
               cfg: DistanceConfig) -> dict:
    """Energy norm, cutoff correction C, and the distance d.

    ||eta||_E^2 = (mu/2)(lam_plus^2 + lam_minus^2) + <L Gamma, Gamma>/2
    and d^2 = ||eta||_E^2 + chi(||eta||_E / 2 delta_E) * C with
    C = H(psi) - H(Phi) + (mu/2)(lam_plus + lam_minus)^2 - ||eta||_E^2.

    Returns
    -------
    dict
        Keys energy_norm, c_omega, d_omega.

    Raises
    ------
    NegativeQuadraticForm
        If the Gamma form or d^2 is negative beyond round-off.
    """
    _check_grids(psi, gs, spec)
    mu = spec.mu
    q = _energy_quadratic(coords, gs, spec)
    e2 = 0.5 * mu * (coords.lam_plus ** 2 + coords.lam_minus ** 2) + 0.5 * q
    e = math.sqrt(e2)
    c = (hamiltonian(psi, gs.params) - hamiltonian(gs.profile, gs.params)
         + 0.5 * mu * (coords.lam_plus + coords.lam_minus) ** 2 - e2)
    d2 = e2 + cfg.chi(e / (2.0 * cfg.delta_E)) * c
    if d2 < -1e-12 * max(e2, 1e-300):
        raise NegativeQuadraticForm(
            f"d^2 = {d2:.3e} < 0 at ||eta||_E = {e:.3e}: the cutoff "
            f"scale delta_E = {cfg.delta_E:.3e} is miscalibrated")
    return {"energy_norm": e, "c_omega": c, "d_omega": math.sqrt(max(d2, 0.0))}


def dist_H1_orbit(psi: RadialField, gs) -> float:
    """inf over theta of ||psi - e^(i theta) Phi||_H1, by the closed-form
    minimizing phase theta* = arg <psi, Phi>_H1."""
    _check_grids(psi, gs)
    phi = gs.profile
    z = complex(inner(psi, phi))
    z += complex(inner(radial_derivative(psi), radial_derivative(phi)))
    theta = float(np.angle(z)) if z != 0.0 else 0.0
    diff = RadialField(psi.grid,
                       psi.values - np.exp(1j * theta) * phi.values.real)
    return norm_H1(diff)


def distance_dtilde(psi: RadialField, gs, spec, cfg: DistanceConfig, *,
                    coords: ModeCoordinates | None = None) -> float:
    """Globally meaningful distance: equals d below delta_E, follows the
    orbital H1 distance (floored at delta_E) above, with a smooth blend
    over [delta_E, delta_E + blend_width]."""
    if coords is None:
        coords = decompose(psi, gs, spec)
    d = coords.d_omega
    if not math.isfinite(d):
        d = distance_d(coords, psi, gs, spec, cfg)["d_omega"]
    if d <= cfg.delta_E:
        return d
    far = max(cfg.delta_E, dist_H1_orbit(psi, gs))
    width = cfg.blend_width if cfg.blend_width is not None else cfg.delta_E
    t = min((d - cfg.delta_E) / width, 1.0)
    s = _smoothstep5(t)
    return (1.0 - s) * d + s * far


def project_mass_sphere(psi: RadialField, gs) -> RadialField:
    """Rescale psi onto the sphere M(psi) = M(Phi)."""
    m = mass(psi)
    if m <= 0.0:
        raise DomainError("cannot mass-normalize the zero state")
    return RadialField(psi.grid,
                       math.sqrt(gs.mass / m) * psi.values)


def calibrate_delta_E(gs, spec, *, n_random: int = 4, seed: int = 0,
                      ratio_limit: float = 0.1) -> DistanceConfig:
    """Scan perturbation sizes to fix the smallness scale delta_E.

    Walks mass-normalized states Phi + eps v along U_plus, U_minus, and
    n_random admissible Gamma directions, finds the largest energy norm
    E_max below which |C| <= ratio_limit * ||eta||_E^2 along every
    direction, and returns delta_E = E_max / 8 (the bound is then
    guaranteed on ||eta||_E <= 4 delta_E with a factor-2 margin).
    """
    grid = gs.profile.grid
    w, r = grid.w, grid.r
    phi = gs.profile.values.real
    pp = _phi_prime(gs).values.real
    f1 = spec.f1.values.real
    f2 = spec.f2.values.real

    def unit(v):
        return v / norm_L2(RadialField(grid, v))

    dirs = [unit(f1 + 1j * f2), unit(f1 - 1j * f2)]
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        parts = []
        for _re in range(2):
            c = rng.standard_normal(4)
            s = rng.uniform(0.5, 5.0, 4)
            parts.append(sum(c[k] * np.exp(-(r / s[k]) ** 2)
                             for k in range(4)))
        gr, gi = parts
        # admissible direction: Re orthogonal to f2 and Phi, Im to f1
        # and Phi', in the quadrature product
        for basis in (f2, phi):
            gr = gr - (np.sum(w * gr * basis) / np.sum(w * basis ** 2)) * basis
        for basis in (f1, pp):
            gi = gi - (np.sum(w * gi * basis) / np.sum(w * basis ** 2)) * basis
        dirs.append(unit(gr + 1j * gi))

    probe_cfg = DistanceConfig(delta_E=1e30)  # cutoff fixed at 1: pure C scan
    eps_grid = np.geomspace(3e-4, 1.0, 18)
    e_max = math.inf
    for v in dirs:
        e_dir = 0.0
        for eps in eps_grid:
            psi = project_mass_sphere(
                RadialField(grid, phi + eps * v), gs)
            coords = decompose(psi, gs, spec)
            try:
                got = distance_d(coords, psi, gs, spec, probe_cfg)
            except NegativeQuadraticForm:
                break  # far outside the quadratic regime
            e, c = got["energy_norm"], got["c_omega"]
            if abs(c) > ratio_limit * e * e:
                break
            e_dir = e
        e_max = min(e_max, e_dir)
    if not (e_max > 0.0 and math.isfinite(e_max)):
        raise NonConvergence(
            "cutoff calibration failed: |C| exceeds the energy-norm bound "
            "already at the smallest scanned perturbation")
    return DistanceConfig(delta_E=e_max / 8.0)
