"""Radial time evolution with per-snapshot diagnostics.

Strang splitting: a half-step of the exact nonlinear phase rotation, a
full Crank-Nicolson step of the radial Laplacian, and a second half
phase rotation.  The Laplacian is self-adjoint in the quadrature inner
product, so the Cayley step preserves the discrete mass to round-off;
all splitting error lands in the Hamiltonian drift.  The step map
commutes with conjugation-reversal exactly, which is what makes the
backward-in-time diagnostics of a forward run trustworthy.

`run` integrates to a horizon with adaptive step halving keyed to the
nonlinear phase increment per step, and records scalar diagnostics at a
fixed stride; when ground-state and spectral data are supplied it also
records the mode coordinates and distances at each snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    DegenerateGauge,
    DomainError,
    NegativeQuadraticForm,
    NonConvergence,
    NonFiniteData,
)
from .functionals import (
    K,
    ModelParams,
    hamiltonian,
    mass,
    nonlinearity_ratio,
    second_moment,
)
from .grid import RadialField, grad_norm_sq_energy, norm_Lq, require_finite
from .modes import DistanceConfig, decompose, distance_d, distance_dtilde

__all__ = [
    "EvolveConfig",
    "TrajectoryRecord",
    "step",
    "linear_step",
    "run",
]


@dataclass(frozen=True)
class EvolveConfig:
    """Integration controls.

    dt is the base (largest) step; the step is halved whenever the
    nonlinear phase advance of a single step would exceed phase_max
    radians anywhere on the grid, and re-doubled (never past dt) once
    it falls below phase_min.  A run is declared blowup evidence when
    the gradient norm grows past blowup_ratio times its initial value
    or the adaptive step underflows dt_floor.
    """

    dt: float
    t_max: float
    stride: int = 10
    phase_max: float = 0.1
    phase_min: float = 0.025
    blowup_ratio: float = 1e3
    dt_floor: float = 1e-10
    max_steps: int = 500_000

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise DomainError(f"t_max must be positive, got {self.t_max}")
        if self.stride < 1:
            raise DomainError(f"stride must be >= 1, got {self.stride}")
        if not (0 < self.phase_min < self.phase_max):
            raise DomainError("need 0 < phase_min < phase_max")
        if self.blowup_ratio <= 1.0:
            raise DomainError("blowup_ratio must exceed 1")
        if not (0 < self.dt_floor < self.dt):
            raise DomainError("need 0 < dt_floor < dt")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")


_COLUMNS = ("t", "mass", "hamiltonian", "K", "grad_norm", "second_moment",
            "d_omega", "d_tilde", "lambda_plus", "lambda_minus", "theta")
# diagnostics kept on the record but outside the trajectory-file columns
_EXTRA = ("lp_norm",)


@dataclass
class TrajectoryRecord:
    """Scalar diagnostics of one run, one row per snapshot.

    Mode and distance columns are NaN when the run was not given the
    data they need (ground state + spectrum, and a distance config).
    status is one of 'completed', 'blowup', 'gauge-degenerate'.
    """

    params: ModelParams
    status: str
    t: np.ndarray
    mass: np.ndarray
    hamiltonian: np.ndarray
    K: np.ndarray
    grad_norm: np.ndarray
    second_moment: np.ndarray
    d_omega: np.ndarray
    d_tilde: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    theta: np.ndarray
    lp_norm: np.ndarray  # ||psi||_{L^{p+1}}, used by run classification
    final_state: RadialField
    n_steps: int = 0
    dt_final: float = float("nan")
    mass_drift: float = float("nan")
    hamiltonian_drift: float = float("nan")

    COLUMNS = _COLUMNS

    def columns(self) -> dict:
        """Column name -> array, in the trajectory file order."""
        return {name: getattr(self, name) for name in _COLUMNS}


def _cn_diagonals(grid, dt: float):
    """Banded matrix of I - i dt/2 L in solve_banded layout."""
    lower, main, upper = grid.laplacian_rows()
    tau = 0.5j * dt
    n = grid.n
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = -tau * upper
    ab[1, :] = 1.0 - tau * main
    ab[2, :-1] = -tau * lower
    return ab


class _Propagator:
    """Caches the Crank-Nicolson banded matrices per step size."""

    def __init__(self, grid):
        self.grid = grid
        self._ab = {}

    def linear(self, values: np.ndarray, dt: float) -> np.ndarray:
        ab = self._ab.get(dt)
        if ab is None:
            if len(self._ab) > 64:
                self._ab.clear()
            ab = _cn_diagonals(self.grid, dt)
            self._ab[dt] = ab
        rhs = values + 0.5j * dt * self.grid.laplacian_matvec(values)
        return solve_banded((1, 1), ab, rhs)


def linear_step(psi: RadialField, dt: float,
                _prop: _Propagator | None = None) -> RadialField:
    """One Crank-Nicolson step of the free equation (nonlinearity off).

    Unitary in the quadrature inner product: mass and the H^1 norm are
    conserved to round-off.
    """
    prop = _prop if _prop is not None else _Propagator(psi.grid)
    out = prop.linear(np.asarray(psi.values, dtype=complex), dt)
    return RadialField(psi.grid, out)


def step(psi: RadialField, dt: float, prm: ModelParams,
         _prop: _Propagator | None = None) -> RadialField:
    """One Strang step of the full equation.

    Half nonlinear phase rotation (pointwise, exact, modulus
    preserving), full Crank-Nicolson linear step, half nonlinear phase
    rotation; second order in dt.

    Raises
    ------
    NonFiniteData
        When the state overflows; callers treat this as blowup
        evidence, not as a solver bug.
    """
    prop = _prop if _prop is not None else _Propagator(psi.grid)
    v = np.asarray(psi.values, dtype=complex)
    v = v * np.exp(0.5j * dt * nonlinearity_ratio(v, prm))
    v = prop.linear(v, dt)
    v = v * np.exp(0.5j * dt * nonlinearity_ratio(v, prm))
    if not np.all(np.isfinite(v.view(float))):
        raise NonFiniteData("state overflowed during a step")
    return RadialField(psi.grid, v)


def _snapshot(rows: dict, t: float, psi: RadialField, prm: ModelParams,
              gs, spec, dist_cfg: DistanceConfig | None) -> bool:
    """Append one full diagnostics row; True when the gauge fit failed
    (the row is still appended, with NaN mode columns)."""
    d = dt_ = lp = lm = th = float("nan")
    degenerate = False
    if gs is not None and spec is not None:
        try:
            coords = decompose(psi, gs, spec)
        except DegenerateGauge:
            degenerate = True
        else:
            lp, lm, th = coords.lam_plus, coords.lam_minus, coords.theta
            if dist_cfg is not None:
                try:
                    d = distance_d(coords, psi, gs, spec, dist_cfg)["d_omega"]
                    dt_ = distance_dtilde(psi, gs, spec, dist_cfg,
                                          coords=coords)
                except NegativeQuadraticForm:
                    # off the calibrated regime (e.g. mass mismatch);
                    # the distance is meaningless there, not the run
                    d = dt_ = float("nan")
    rows["t"].append(t)
    rows["mass"].append(mass(psi))
    rows["hamiltonian"].append(hamiltonian(psi, prm))
    rows["K"].append(K(psi, prm))
    rows["grad_norm"].append(math.sqrt(max(grad_norm_sq_energy(psi), 0.0)))
    rows["second_moment"].append(second_moment(psi))
    rows["d_omega"].append(d)
    rows["d_tilde"].append(dt_)
    rows["lambda_plus"].append(lp)
    rows["lambda_minus"].append(lm)
    rows["theta"].append(th)
    rows["lp_norm"].append(norm_Lq(psi, prm.p + 1.0))
    return degenerate


def run(psi0: RadialField, cfg: EvolveConfig, prm: ModelParams,
        gs=None, spec=None, dist_cfg: DistanceConfig | None = None
        ) -> TrajectoryRecord:
    """Integrate to cfg.t_max or a terminal event, recording diagnostics.

    Mode columns (lambda, theta) need gs and spec; distance columns
    additionally need dist_cfg.  Diagnostics are recorded at t = 0,
    every cfg.stride accepted steps, and at the final time.

    A DegenerateGauge during diagnostics ends the run with status
    'gauge-degenerate'; overflow, gradient growth past the threshold,
    or step underflow end it with status 'blowup'.

    Raises
    ------
    NonConvergence
        When cfg.max_steps accepted steps did not reach the horizon or
        a terminal event; happens when adaptivity pins the step far
        below dt (e.g. collapse arrested by the grid) so that neither
        stopping criterion can trigger in reasonable time.
    """
    require_finite(psi0)
    if gs is not None and not psi0.grid.same_geometry(gs.profile.grid):
        raise DomainError("initial state and ground state live on different grids")
    prop = _Propagator(psi0.grid)
    rows: dict = {name: [] for name in _COLUMNS + _EXTRA}
    psi = RadialField(psi0.grid, np.asarray(psi0.values, dtype=complex))
    status = None
    t = 0.0
    n_steps = 0
    dt_cur = cfg.dt
    grad0 = math.sqrt(max(grad_norm_sq_energy(psi), 0.0))
    if _snapshot(rows, t, psi, prm, gs, spec, dist_cfg):
        status = "gauge-degenerate"
    while status is None and t < cfg.t_max * (1.0 - 1e-12):
        if n_steps >= cfg.max_steps:
            raise NonConvergence(
                f"no terminal event within {cfg.max_steps} steps "
                f"(t = {t:.6g} of {cfg.t_max:g}, dt = {dt_cur:.3e})")
        rate = float(np.max(nonlinearity_ratio(psi.values, prm)))
        while dt_cur * rate > cfg.phase_max and dt_cur > cfg.dt_floor:
            dt_cur *= 0.5
        if dt_cur <= cfg.dt_floor:
            status = "blowup"
            break
        dt_eff = min(dt_cur, cfg.t_max - t)
        try:
            psi = step(psi, dt_eff, prm, _prop=prop)
        except NonFiniteData:
            status = "blowup"
            break
        t += dt_eff
        n_steps += 1
        grad = math.sqrt(max(grad_norm_sq_energy(psi), 0.0))
        last = t >= cfg.t_max * (1.0 - 1e-12)
        blown = grad > cfg.blowup_ratio * max(grad0, 1e-300)
        if n_steps % cfg.stride == 0 or last or blown:
            if _snapshot(rows, t, psi, prm, gs, spec, dist_cfg):
                status = "gauge-degenerate"
                break
        if blown:
            status = "blowup"
            break
        if dt_cur < cfg.dt and dt_cur * rate < 0.5 * cfg.phase_min:
            dt_cur = min(2.0 * dt_cur, cfg.dt)
    if status is None:
        status = "completed"
    arrays = {name: np.asarray(vals, dtype=float) for name, vals in rows.items()}
    rec = TrajectoryRecord(params=prm, status=status, final_state=psi,
                           n_steps=n_steps, dt_final=dt_cur, **arrays)
    ts = arrays["t"]
    if ts.size >= 2 and ts[-1] > 0:
        span = ts[-1] - ts[0]
        m0 = arrays["mass"][0]
        h0 = arrays["hamiltonian"][0]
        rec.mass_drift = abs(arrays["mass"][-1] - m0) / (abs(m0) * span) \
            if m0 != 0 and span > 0 else 0.0
        scale = max(abs(h0), 1e-300)
        rec.hamiltonian_drift = abs(arrays["hamiltonian"][-1] - h0) / (scale * span) \
            if span > 0 else 0.0
    return rec
