"""Stationary radial profiles and the action-versus-frequency curve.

Profiles solve  omega u - u'' - (d-1)u'/r - u^p - u^(2*-1) = 0  with
u'(0) = 0 and decay at infinity.  The solver shoots on the continuum ODE
(bisection on the center value between undershoot and overshoot) to get
a seed, then polishes it with a damped Newton iteration on the discrete
finite-volume residual, so the returned profile is a stationary point of
the *discrete* action to round-off.  The subcritical-limit profile
(omega = 1, critical term dropped) and the explicit critical bubble are
also provided, along with the frequency derivative of the profile and
the sampled action curve m(omega) with its monotone interpolants.

The documented convergence range at the default d = 4, p = 2.5 is
omega in [0.005, 0.5]; outside it the solver raises rather than
returning silently inaccurate profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import (DomainError, GridTooCoarse, NonConvergence, OutOfRange,
                     SingularOperator)
from .functionals import ModelParams
from .grid import (RadialField, RadialGrid, grad_norm_sq_energy, norm_H1,
                   norm_L2, norm_Lq)

OMEGA_RANGE = (0.005, 0.5)
_BRACKET = (1e-3, 1e3)  # center-value search window
_R0 = 1e-6              # series start radius for the shooting ODE


# ---------------------------------------------------------------- shooting

def _shoot(a, d, p, q, omega, critical, r_end, rtol=1e-9, dense=False):
    """Integrate the radial profile ODE from the center value `a`.

    Returns ("over"|"under", solution): "over" when u changes sign,
    "under" when u' turns positive while u > 0 or u decays to r_end.
    """

    def f(u):
        au = abs(u)
        out = omega * u - au ** (p - 1.0) * u
        if critical:
            out -= au ** (q - 2.0) * u
        return out

    def rhs(r, y):
        u, du = y
        return (du, f(u) - (d - 1.0) / r * du)

    def crossing(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    def turning(r, y):
        return y[1]

    turning.terminal = True
    turning.direction = 1

    fa = f(a)
    y0 = (a + fa * _R0**2 / (2 * d), fa * _R0 / d)
    sol = solve_ivp(rhs, (_R0, r_end), y0, rtol=rtol, atol=1e-12 * a,
                    events=[crossing, turning], dense_output=dense)
    kind = "over" if sol.t_events[0].size else "under"
    return kind, sol


def _center_value(d, p, q, omega, critical, r_end, guess=None, rel_tol=1e-7):
    """Bisect the center value between undershoot and overshoot."""
    lo, hi = _BRACKET
    if _shoot(lo, d, p, q, omega, critical, r_end)[0] != "under" or \
            _shoot(hi, d, p, q, omega, critical, r_end)[0] != "over":
        raise NonConvergence(
            f"no undershoot/overshoot bracket for the center value in "
            f"[{lo:g}, {hi:g}] (omega={omega:g}, p={p:g}, d={d})")
    if guess is not None:
        # narrow from the scaling-informed guess before bisecting
        glo, ghi = max(lo, guess / 4.0), min(hi, guess * 4.0)
        if _shoot(glo, d, p, q, omega, critical, r_end)[0] == "under":
            lo = glo
        if _shoot(ghi, d, p, q, omega, critical, r_end)[0] == "over":
            hi = ghi
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if _shoot(mid, d, p, q, omega, critical, r_end)[0] == "over":
            hi = mid
        else:
            lo = mid
        if hi - lo < rel_tol * hi:
            break
    return 0.5 * (lo + hi)


@lru_cache(maxsize=None)
def _subcritical_center_rough(d, p):
    """Coarse center value of the subcritical profile, used only to seed
    the bracket search through the omega-scaling of the profile family."""
    return _center_value(d, p, 0.0, 1.0, False, 30.0, rel_tol=1e-4)


def _seed_on_grid(grid, sol, a, kappa):
    """Sample the dense shooting solution at the nodes; past the radius
    where it stops being trustworthy (tail underflow or the onset of the
    separatrix-tracking divergence), extend with the far-field form
    u ~ r^(-(d-1)/2) e^(-kappa r)."""
    r = grid.r
    t_end = sol.t[-1]
    u = np.zeros(grid.n)
    inside = r < t_end
    u[inside] = sol.sol(r[inside])[0]
    bad = ~inside | (u <= 1e-6 * a)
    bad[1:] |= np.diff(u) >= 0.0
    if bad.any():
        i_c = max(int(np.argmax(bad)), 2)
        r_t, u_t = r[i_c - 1], u[i_c - 1]
        tail = r[i_c:]
        u[i_c:] = u_t * (r_t / tail) ** ((grid.d - 1) / 2.0) \
            * np.exp(-kappa * (tail - r_t))
    return u


# ------------------------------------------------------------------ Newton

def _nlin(u, p, q, critical):
    a = np.abs(u)
    out = a ** (p - 1.0) * u
    if critical:
        out += a ** (q - 2.0) * u
    return out


def _nlin_prime(u, p, q, critical):
    a = np.abs(u)
    out = p * a ** (p - 1.0)
    if critical:
        out += (q - 1.0) * a ** (q - 2.0)
    return out


def _newton_polish(grid, p, q, omega, critical, u0, tol_rel, max_iter):
    """Damped Newton on the nodal residual omega u - Lap u - nlin(u).

    The Jacobian is tridiagonal (Laplacian rows plus the diagonal
    linearized potential), so each step is one banded solve.
    """
    lower, main, upper = grid.laplacian_rows()
    # the residual evaluation cannot resolve below the Laplacian's
    # round-off floor, which grows like eps/h^2
    tol_rel = max(tol_rel, 8.0 * np.finfo(float).eps / grid.h**2)

    def residual(u):
        return omega * u - grid.laplacian_matvec(u.copy()) - _nlin(u, p, q, critical)

    def wnorm(v):
        return math.sqrt(float(np.sum(grid.w * v * v)))

    u = u0.copy()
    res = residual(u)
    rn = wnorm(res)
    scale = wnorm(u)
    n = grid.n
    ab = np.zeros((3, n))
    for it in range(max_iter):
        if rn <= tol_rel * scale:
            return u, it
        ab[0, 1:] = -upper
        ab[1, :] = omega - main - _nlin_prime(u, p, q, critical)
        ab[2, :-1] = -lower
        delta = solve_banded((1, 1), ab, -res)
        step = 1.0
        for _ in range(12):
            u_try = u + step * delta
            res_try = residual(u_try)
            rn_try = wnorm(res_try)
            if rn_try < (1.0 - 0.25 * step) * rn or rn_try <= tol_rel * scale:
                break
            step *= 0.5
        else:
            raise GridTooCoarse(
                f"Newton polish stalled at relative residual {rn / scale:.2e}")
        u, res, rn = u_try, res_try, rn_try
        scale = wnorm(u)
    if rn <= tol_rel * scale:
        return u, max_iter
    raise GridTooCoarse(
        f"Newton polish did not reach {tol_rel:g} within {max_iter} steps "
        f"(relative residual {rn / scale:.2e})")


# ----------------------------------------------------------------- records

@dataclass(frozen=True, eq=False)
class GroundState:
    """A certified stationary profile plus its quality certificates.

    `m` is the action at the profile (the variational level when the
    profile is the combined-problem minimizer), `mass` its mass M,
    `phi0` the center value extrapolated to r = 0.  `residual_h1` is the
    H^1 norm of the stationary-equation residual; `k_rel` and
    `nehari_rel` are the scale-derivative and Nehari identity defects,
    each normalized by the sum of the magnitudes of the identity's
    terms (both identities vanish on exact critical points, so these
    are relative residuals of a cancellation).
    """

    params: ModelParams
    profile: RadialField
    omega_derivative: Optional[RadialField]
    phi0: float
    center_value: float
    m: float
    mass: float
    residual_h1: float
    k_rel: float
    nehari_rel: float
    newton_iters: int
    includes_critical: bool = True


def _certify(grid, prm, u, critical):
    """Action, mass and the vanishing-identity certificates for a profile."""
    field = RadialField(grid, u)
    p, q, omega = prm.p, prm.two_star, prm.omega
    l2 = norm_L2(field) ** 2
    grad2 = grad_norm_sq_energy(field)
    lp1 = norm_Lq(field, p + 1.0) ** (p + 1.0)
    lq = norm_Lq(field, q) ** q if critical else 0.0
    mass_value = 0.5 * l2
    action = omega * mass_value + 0.5 * grad2 - lp1 / (p + 1.0) - lq / q
    c_p = grid.d * (p - 1.0) / (2.0 * (p + 1.0))
    k_val = grad2 - c_p * lp1 - lq
    nehari = omega * l2 + grad2 - lp1 - lq
    res_values = omega * u - grid.laplacian_matvec(u.copy()) - _nlin(u, p, q, critical)
    residual_h1 = norm_H1(RadialField(grid, res_values))
    # Identity defects are cancellations; report them relative to the
    # sum of the magnitudes of the terms being cancelled.
    return field, {
        "m": action,
        "mass": mass_value,
        "residual_h1": residual_h1,
        "k_rel": k_val / (grad2 + c_p * lp1 + lq),
        "nehari_rel": nehari / (omega * l2 + grad2 + lp1 + lq),
    }


def _check_shape(u, label):
    amp = float(u.max())
    trusted = u > 1e-12 * amp  # below that, values sit at the solve's
    core = u[trusted]          # round-off floor and sign is meaningless
    if not (core > 0.0).all() or not (np.diff(core) < 0.0).all() or u[0] != amp:
        raise NonConvergence(
            f"{label} profile is not positive strictly decreasing")


def _profile_solve(grid, prm, omega, critical, guess, tol, max_newton):
    q = prm.two_star
    a = _center_value(grid.d, prm.p, q, omega, critical, grid.r_max,
                      guess=guess)
    _, sol = _shoot(a, grid.d, prm.p, q, omega, critical, grid.r_max,
                    dense=True)
    seed = _seed_on_grid(grid, sol, a, math.sqrt(omega))
    u, iters = _newton_polish(grid, prm.p, q, omega, critical, seed,
                              tol, max_newton)
    _check_shape(u, "combined" if critical else "subcritical")
    return u, a, iters


def solve_phi(grid: RadialGrid, params: ModelParams, *,
              with_derivative: bool = True,
              tol: float = 1e-11, max_newton: int = 24) -> GroundState:
    """Ground state of the combined-power problem at params.omega.

    Shooting (bisection on the center value in [1e-3, 1e3]) seeds a
    damped Newton polish on the finite-volume residual; the result
    satisfies the discrete stationary equation to near round-off.
    Raises DomainError outside the documented omega range, NonConvergence
    when no shooting bracket exists, GridTooCoarse when the polish cannot
    reach its tolerance on this grid.
    """
    if grid.d != params.d:
        raise DomainError(f"grid dimension {grid.d} != params dimension {params.d}")
    if not (OMEGA_RANGE[0] <= params.omega <= OMEGA_RANGE[1]):
        raise DomainError(
            f"omega={params.omega:g} outside the supported range "
            f"[{OMEGA_RANGE[0]:g}, {OMEGA_RANGE[1]:g}]")
    guess = _subcritical_center_rough(params.d, params.p) \
        * params.omega ** (1.0 / (params.p - 1.0))
    u, a, iters = _profile_solve(grid, params, params.omega, True, guess,
                                 tol, max_newton)
    field, cert = _certify(grid, params, u, True)
    phi0 = float(u[0] + (u[0] - u[1]) / 8.0)  # even-parabola center value
    deriv = None
    gs = GroundState(params=params, profile=field, omega_derivative=None,
                     phi0=phi0, center_value=a, newton_iters=iters,
                     includes_critical=True, **cert)
    if with_derivative:
        deriv = solve_phi_prime(gs)
        gs = GroundState(params=params, profile=field, omega_derivative=deriv,
                         phi0=phi0, center_value=a, newton_iters=iters,
                         includes_critical=True, **cert)
    return gs


def certify_profile(field: RadialField, params: ModelParams, *,
                    includes_critical: bool = True,
                    with_derivative: bool = True) -> GroundState:
    """Wrap an existing real profile (e.g. loaded from a snapshot file)
    in a GroundState with freshly evaluated certificates.

    No equation is solved for the profile itself (newton_iters = 0 and
    center_value is the r -> 0 extrapolation); the caller judges the
    certificates.  The frequency derivative is still obtained from its
    defining linear solve unless with_derivative is False.
    """
    if params.d != field.grid.d:
        raise DomainError(f"grid dimension {field.grid.d} != params "
                          f"dimension {params.d}")
    u = np.real(field.values).astype(float)
    field_r, cert = _certify(field.grid, params, u, includes_critical)
    phi0 = float(u[0] + (u[0] - u[1]) / 8.0)
    gs = GroundState(params=params, profile=field_r, omega_derivative=None,
                     phi0=phi0, center_value=phi0, newton_iters=0,
                     includes_critical=includes_critical, **cert)
    if with_derivative:
        deriv = solve_phi_prime(gs)
        gs = GroundState(params=params, profile=field_r,
                         omega_derivative=deriv, phi0=phi0,
                         center_value=phi0, newton_iters=0,
                         includes_critical=includes_critical, **cert)
    return gs


def solve_U(grid: RadialGrid, params: ModelParams, *,
            tol: float = 1e-11, max_newton: int = 24) -> GroundState:
    """Profile of the subcritical-only problem (omega = 1, critical term
    dropped); params.omega is ignored.  This is the limit shape of the
    rescaled combined profiles as omega -> 0."""
    prm = params.with_omega(1.0)
    if grid.d != prm.d:
        raise DomainError(f"grid dimension {grid.d} != params dimension {prm.d}")
    u, a, iters = _profile_solve(grid, prm, 1.0, False, None, tol, max_newton)
    field, cert = _certify(grid, prm, u, False)
    phi0 = float(u[0] + (u[0] - u[1]) / 8.0)
    return GroundState(params=prm, profile=field, omega_derivative=None,
                       phi0=phi0, center_value=a, newton_iters=iters,
                       includes_critical=False, **cert)


def closed_form_W(grid: RadialGrid) -> RadialField:
    """The explicit critical bubble (d(d-2))^((d-2)/4) (1+r^2)^(-(d-2)/2),
    the zero-frequency scale-invariant stationary profile."""
    d = grid.d
    amp = (d * (d - 2.0)) ** ((d - 2.0) / 4.0)
    return RadialField(grid, amp * (1.0 + grid.r**2) ** (-(d - 2.0) / 2.0))


def solve_phi_prime(gs: GroundState, *, cond_limit: float = 1e12) -> RadialField:
    """Frequency derivative of the profile: the solution of
    L_+ v = -Phi on the grid (one banded solve).

    Raises SingularOperator when the solve's relative residual exceeds
    1e-8 or the conditioning estimate (Gershgorin bound times the
    solution amplification) exceeds cond_limit.
    """
    from . import spectrum  # deferred: spectrum owns the operator assembly

    grid = gs.profile.grid
    phi = gs.profile.values
    rows = spectrum.lplus_rows(grid, gs.params, phi)
    lower, main, upper = rows
    n = grid.n
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = main
    ab[2, :-1] = lower
    v = solve_banded((1, 1), ab, -phi)

    def wnorm(x):
        return math.sqrt(float(np.sum(grid.w * x * x)))

    back = spectrum.tridiag_matvec(rows, v)
    rel_res = wnorm(back + phi) / wnorm(phi)
    gersh = np.abs(main).max() + np.abs(upper).max() + np.abs(lower).max()
    cond_est = gersh * wnorm(v) / wnorm(phi)
    if not np.isfinite(v).all() or rel_res > 1e-8 or cond_est > cond_limit:
        raise SingularOperator(
            f"L_+ solve failed: relative residual {rel_res:.2e}, "
            f"condition estimate {cond_est:.2e}")
    return RadialField(grid, v)


# ----------------------------------------------------------------- m-curve

@dataclass(frozen=True, eq=False)
class MCurve:
    """Sampled action curve m(omega) with monotone interpolants.

    m is strictly increasing and the mass strictly decreasing in omega
    over the supported range, so both interpolants are invertible; the
    inverse of the mass curve is exposed as alpha_of_mass.
    """

    d: int
    p: float
    omega: np.ndarray
    m: np.ndarray
    mass: np.ndarray
    phi0: np.ndarray
    residual: np.ndarray
    _m_interp: PchipInterpolator
    _mass_interp: PchipInterpolator

    def _check_range(self, w):
        if not (self.omega[0] <= w <= self.omega[-1]):
            raise OutOfRange(
                f"omega={w:g} outside the sampled range "
                f"[{self.omega[0]:g}, {self.omega[-1]:g}]")

    def m_of(self, w: float) -> float:
        self._check_range(w)
        return float(self._m_interp(w))

    def mass_of(self, w: float) -> float:
        self._check_range(w)
        return float(self._mass_interp(w))

    def dm_domega(self, w: float) -> float:
        self._check_range(w)
        return float(self._m_interp.derivative()(w))

    def alpha_of_mass(self, mass_value: float) -> float:
        """Inverse of the (strictly decreasing) mass curve."""
        lo, hi = float(self.omega[0]), float(self.omega[-1])
        if not (self.mass[-1] <= mass_value <= self.mass[0]):
            raise OutOfRange(
                f"mass {mass_value:g} outside the tabulated range "
                f"[{self.mass[-1]:g}, {self.mass[0]:g}]")
        if float(self._mass_interp(lo)) <= mass_value:
            return lo
        if float(self._mass_interp(hi)) >= mass_value:
            return hi
        return float(brentq(lambda w: self._mass_interp(w) - mass_value,
                            lo, hi, xtol=1e-12, rtol=1e-14))

    def rows(self):
        """Per-sample (omega, m, mass, phi0, residual) tuples."""
        return list(zip(self.omega, self.m, self.mass, self.phi0,
                        self.residual))


def build_mcurve(grid: RadialGrid, params: ModelParams, omegas) -> MCurve:
    """Solve the ground state at each omega (ascending) and build the
    monotone interpolants for m(omega), M(omega)."""
    omegas = np.asarray(sorted(float(w) for w in omegas))
    if omegas.size < 2:
        raise DomainError("need at least two omega samples")
    m, mass_v, phi0, resid = [], [], [], []
    for w in omegas:
        gs = solve_phi(grid, params.with_omega(w), with_derivative=False)
        m.append(gs.m)
        mass_v.append(gs.mass)
        phi0.append(gs.phi0)
        resid.append(gs.residual_h1 / norm_H1(gs.profile))
    m = np.asarray(m)
    mass_v = np.asarray(mass_v)
    if not (np.diff(m) > 0).all():
        raise NonConvergence("sampled m(omega) is not strictly increasing")
    if not (np.diff(mass_v) < 0).all():
        raise NonConvergence("sampled mass(omega) is not strictly decreasing")
    return MCurve(d=params.d, p=params.p, omega=omegas, m=m, mass=mass_v,
                  phi0=np.asarray(phi0), residual=np.asarray(resid),
                  _m_interp=PchipInterpolator(omegas, m),
                  _mass_interp=PchipInterpolator(omegas, mass_v))
