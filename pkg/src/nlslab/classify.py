"""Threshold bookkeeping and nine-scenario trajectory labeling.

epsilon_omega evaluates the four-branch threshold margin built on the
action curve m(omega): below the reference mass M(Phi_omega_star) it is
the secant gap at omega_star, at M(Phi_omega) it equals the
per-frequency margin eps(omega), and in between / above it follows the
alpha(M) = inverse-mass frequency.  The action spline is rebuilt as a
Hermite interpolant with derivative M(Phi_omega) at the nodes, because
the branch formulas join smoothly only when dm/domega = M holds; a
generic interpolant of m alone breaks the join at the 1e-3 level.

sign_function reads the trajectory sign through lambda_1 near the orbit
(d-tilde <= delta_E) and through K away from it (d-tilde >= delta_*),
checking agreement on the overlap band.  classify_run labels forward
and backward runs Scatter / Blowup / Trap and maps the pair to the
scenario index 1..9.

Scattering here is a proxy decision: persistent K > 0 over the final
half of the horizon, L^{p+1} decay by a fixed factor from the
post-ejection maximum, and separation d-tilde >= delta_* from the
orbit.  Dispersive-norm bounds are out of scope for a finite radial
box, so a "Scatter" label certifies the proxy, not scattering itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, Inconsistent, NlslabError, OutOfRange
from .evolve import EvolveConfig, TrajectoryRecord, run
from .functionals import ModelParams, S_omega, mass
from .grid import RadialField
from .groundstate import MCurve
from .modes import DistanceConfig

LABELS = ("Scatter", "Blowup", "Trap", "Undecided")

# (forward, backward) -> scenario index of the nine-set classification
_SCENARIOS = {
    ("Scatter", "Scatter"): 1,
    ("Blowup", "Blowup"): 2,
    ("Scatter", "Blowup"): 3,
    ("Blowup", "Scatter"): 4,
    ("Trap", "Scatter"): 5,
    ("Scatter", "Trap"): 6,
    ("Trap", "Blowup"): 7,
    ("Blowup", "Trap"): 8,
    ("Trap", "Trap"): 9,
}


def scenario_index(forward: str, backward: str):
    """Map a (forward, backward) label pair to the scenario index.

    Returns an int in 1..9, or the string "Undecided" when either side
    is Undecided.
    """
    for name in (forward, backward):
        if name not in LABELS:
            raise DomainError(f"unknown label {name!r}; expected one of "
                              f"{LABELS}")
    if forward == "Undecided" or backward == "Undecided":
        return "Undecided"
    return _SCENARIOS[(forward, backward)]


@dataclass(frozen=True)
class ThresholdTable:
    """m-curve handle plus the data epsilon_omega needs.

    eps_of_omega is the per-frequency margin eps(omega) > 0; the default
    built by build_threshold_table is the constant delta_E^2 / 2, the
    action-excess scale under which the distance calibration is valid.
    m_at evaluates the envelope-consistent action spline (value = solved
    m at the nodes, derivative = solved mass at the nodes).
    """

    mcurve: MCurve
    omega: float
    omega_star: float
    eps_of_omega: Callable[[float], float]
    _m_env: CubicHermiteSpline = field(repr=False)

    def m_at(self, w: float) -> float:
        if not (self.mcurve.omega[0] <= w <= self.mcurve.omega[-1]):
            raise OutOfRange(f"omega={w:g} outside the tabulated range")
        return float(self._m_env(w))

    @property
    def m_omega(self) -> float:
        return self.m_at(self.omega)

    @property
    def mass_omega(self) -> float:
        return self.mcurve.mass_of(self.omega)


def build_threshold_table(mcurve: MCurve, omega: float,
                          omega_star: float | None = None, *,
                          eps_of_omega: Callable[[float], float] | None = None,
                          delta_E: float | None = None) -> ThresholdTable:
    """Assemble the threshold table at frequency omega.

    omega_star defaults to min(2 omega, top tabulated node) and must
    satisfy omega < omega_star.  Exactly one of eps_of_omega / delta_E
    must be given; delta_E yields the constant margin delta_E^2 / 2.
    """
    lo, hi = float(mcurve.omega[0]), float(mcurve.omega[-1])
    if not (lo <= omega <= hi):
        raise OutOfRange(f"omega={omega:g} outside tabulated [{lo:g}, {hi:g}]")
    if omega_star is None:
        omega_star = min(2.0 * omega, hi)
    if not (omega < omega_star <= hi):
        raise DomainError(f"need omega < omega_star <= {hi:g}, got "
                          f"omega_star={omega_star:g}")
    if (eps_of_omega is None) == (delta_E is None):
        raise DomainError("give exactly one of eps_of_omega / delta_E")
    if eps_of_omega is None:
        margin = 0.5 * delta_E * delta_E
        eps_of_omega = lambda w: margin  # noqa: E731
    probe = eps_of_omega(omega)
    if not (probe > 0.0 and math.isfinite(probe)):
        raise DomainError(f"eps(omega) must be positive, got {probe}")
    m_env = CubicHermiteSpline(mcurve.omega, mcurve.m, mcurve.mass)
    return ThresholdTable(mcurve=mcurve, omega=float(omega),
                          omega_star=float(omega_star),
                          eps_of_omega=eps_of_omega, _m_env=m_env)


def epsilon_omega(M: float, table: ThresholdTable) -> float:
    """Threshold margin epsilon_omega(M), four branches in M.

    Saturates at the omega_star secant gap for M <= M(Phi_omega_star),
    equals eps(omega) exactly at M = M(Phi_omega), and otherwise
    evaluates the alpha(M)-branch formulas.  Masses needing alpha(M)
    beyond the tabulated inverse raise OutOfRange.
    """
    if not (M >= 0.0 and math.isfinite(M)):
        raise DomainError(f"mass must be finite and nonnegative, got {M}")
    mc = table.mcurve
    w, ws = table.omega, table.omega_star
    M_w = mc.mass_of(w)
    M_ws = mc.mass_of(ws)
    if M <= M_ws:
        return table.m_at(ws) - table.m_at(w) - (ws - w) * M_ws
    if M == M_w:
        return float(table.eps_of_omega(w))
    a = mc.alpha_of_mass(M)
    eps_a = float(table.eps_of_omega(a))
    if M < M_w:
        return eps_a + table.m_at(a) - table.m_at(w) - (a - w) * M
    return eps_a + (w - a) * M - (table.m_at(w) - table.m_at(a))


@dataclass(frozen=True)
class ClassifyConfig:
    """Calibrated inputs and decision constants for classify_run.

    The delta chain hangs off delta_S (default delta_E): delta_* =
    delta_S / 4, R_* = delta_* / 10, eps_* = (R_* / 10)^2.  evolve holds
    the base-horizon solver settings; runs that verifiably leave the
    orbit are continued to t_far before the scatter criteria are read,
    while trapped runs are decided at the base horizon (longer standing-
    wave runs only measure the truncation-seeded instability of the
    scheme, not the data).
    """

    gs: object
    spec: object
    dist: DistanceConfig
    table: ThresholdTable | None = None
    evolve: EvolveConfig = EvolveConfig(
        dt=1e-3, t_max=3.0, stride=10, blowup_ratio=30.0, dt_floor=1e-6,
        max_steps=200_000)
    t_far: float = 16.0
    delta_S: float | None = None
    lam_tol: float = 2e-4
    k_tol: float = 5e-3
    decay_factor: float = 4.0
    strict: bool = False
    ejection: dict | None = None

    def __post_init__(self):
        if self.t_far < self.evolve.t_max:
            raise DomainError(f"t_far={self.t_far:g} below the base horizon "
                              f"{self.evolve.t_max:g}")
        for name in ("lam_tol", "k_tol"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive, got {v}")
        if not self.decay_factor > 1.0:
            raise DomainError("decay_factor must exceed 1")
        if not self.delta_star < self.delta_E:
            raise DomainError(f"delta chain broken: delta_* = "
                              f"{self.delta_star:g} must stay below "
                              f"delta_E = {self.delta_E:g}")

    @property
    def delta_E(self) -> float:
        return self.dist.delta_E

    @property
    def delta_star(self) -> float:
        base = self.delta_S if self.delta_S is not None else self.delta_E
        return base / 4.0

    @property
    def r_star(self) -> float:
        return self.delta_star / 10.0

    @property
    def eps_star(self) -> float:
        return (self.r_star / 10.0) ** 2


@dataclass(frozen=True)
class SignSeries:
    """Per-snapshot sign readings of a trajectory.

    signs is -1/0/+1 per snapshot; marginal marks snapshots whose only
    available readings were below the magnitude tolerances (the sign is
    still reported, from lambda_1 when present); gaps marks snapshots
    with no non-marginal reading at all, as returned-rather-than-raised
    unresolvable points.  n_overlap counts snapshots where both the
    lambda_1 and the K definitions were live and checked against each
    other.
    """

    signs: np.ndarray
    marginal: np.ndarray
    gaps: np.ndarray
    n_overlap: int


def sign_function(traj: TrajectoryRecord, cfg: ClassifyConfig) -> SignSeries:
    """Read the trajectory sign: lambda_1 near the orbit, K far from it.

    Near means d-tilde <= delta_E, far means d-tilde >= delta_*; on the
    overlap band both readings apply and must agree wherever both are
    above their magnitude tolerances, otherwise Inconsistent is raised
    (a disagreement there means the delta chain is miscalibrated, not
    that the trajectory is undecidable).
    """
    dt_ = traj.d_tilde
    lam1 = 0.5 * (traj.lambda_plus + traj.lambda_minus)
    K_v = traj.K
    n = dt_.size
    signs = np.zeros(n, dtype=np.int8)
    marginal = np.zeros(n, dtype=bool)
    gaps = np.zeros(n, dtype=bool)
    n_overlap = 0
    for i in range(n):
        near = math.isfinite(dt_[i]) and dt_[i] <= cfg.delta_E \
            and math.isfinite(lam1[i])
        far = math.isfinite(dt_[i]) and dt_[i] >= cfg.delta_star
        s_lam = int(np.sign(lam1[i])) if near else 0
        s_K = int(np.sign(K_v[i])) if far else 0
        weak_lam = near and abs(lam1[i]) < cfg.lam_tol
        weak_K = far and abs(K_v[i]) < cfg.k_tol
        if near and far:
            n_overlap += 1
            if not weak_lam and not weak_K and s_lam != s_K:
                raise Inconsistent(
                    f"sign disagreement on the overlap band at t = "
                    f"{traj.t[i]:.6g}: lambda_1 = {lam1[i]:.3e} vs K = "
                    f"{K_v[i]:.3e} (d-tilde = {dt_[i]:.3e})")
        if near and not weak_lam:
            signs[i] = s_lam
        elif far and not weak_K:
            signs[i] = s_K
        elif near or far:
            # only marginal readings; report lambda_1's sign when the
            # near regime applies, else K's
            signs[i] = s_lam if near else s_K
            marginal[i] = True
            gaps[i] = True
        else:
            gaps[i] = True
    return SignSeries(signs=signs, marginal=marginal, gaps=gaps,
                      n_overlap=n_overlap)


@dataclass(frozen=True)
class OnePassReport:
    """Crossing bookkeeping for the one-pass pattern at level R.

    verdict is one of "never-entered", "stays-below", "permanent-exit",
    "return-violation"; a return is recorded, never asserted against.
    """

    R: float
    barrier: float
    entered_at: float | None
    exited_at: float | None
    returned_at: float | None
    verdict: str


def one_pass_monitor(traj: TrajectoryRecord, R: float,
                     cfg: ClassifyConfig) -> OnePassReport:
    """Watch d-tilde against the barrier R + R^{min(3, p+1)/2}.

    After d-tilde first drops below R, the trajectory either stays
    below the barrier for the rest of the horizon or exits above it;
    a later drop back below R is flagged as a violation of the
    one-pass pattern at the simulated tolerance.
    """
    if not (0.0 < R < cfg.delta_E):
        raise DomainError(f"R must lie in (0, delta_E = {cfg.delta_E:g}), "
                          f"got {R}")
    p = traj.params.p
    barrier = R + R ** (min(3.0, p + 1.0) / 2.0)
    t = traj.t
    dt_ = traj.d_tilde
    ok = np.isfinite(dt_)
    entered_at = exited_at = returned_at = None
    state = "outside"
    for i in range(t.size):
        if not ok[i]:
            continue
        if state == "outside":
            if dt_[i] < R:
                entered_at = float(t[i])
                state = "inside"
        elif state == "inside":
            if dt_[i] > barrier:
                exited_at = float(t[i])
                state = "exited"
        elif state == "exited":
            if dt_[i] < R:
                returned_at = float(t[i])
                break
    if entered_at is None:
        verdict = "never-entered"
    elif exited_at is None:
        verdict = "stays-below"
    elif returned_at is None:
        verdict = "permanent-exit"
    else:
        verdict = "return-violation"
    return OnePassReport(R=float(R), barrier=float(barrier),
                         entered_at=entered_at, exited_at=exited_at,
                         returned_at=returned_at, verdict=verdict)


@dataclass(frozen=True)
class Classification:
    """Label pair, scenario index, and the evidence behind them."""

    forward: str
    backward: str
    scenario: int | str
    evidence: dict
    forward_record: TrajectoryRecord | None = None
    backward_record: TrajectoryRecord | None = None


def _concat_records(a: TrajectoryRecord, b: TrajectoryRecord
                    ) -> TrajectoryRecord:
    """Join a continuation record b (run from a.final_state) onto a."""
    cols = {}
    for name in a.COLUMNS + ("lp_norm",):
        xa, xb = getattr(a, name), getattr(b, name)
        if name == "t":
            xb = xa[-1] + xb
        # b's first row re-snapshots a's final state; drop it
        cols[name] = np.concatenate([xa, xb[1:]])
    rec = TrajectoryRecord(params=a.params, status=b.status,
                           final_state=b.final_state,
                           n_steps=a.n_steps + b.n_steps,
                           dt_final=b.dt_final, **cols)
    span = rec.t[-1] - rec.t[0]
    if span > 0:
        m0, h0 = rec.mass[0], rec.hamiltonian[0]
        rec.mass_drift = abs(rec.mass[-1] - m0) / (abs(m0) * span) \
            if m0 != 0 else 0.0
        rec.hamiltonian_drift = (abs(rec.hamiltonian[-1] - h0)
                                 / (max(abs(h0), 1e-300) * span))
    return rec


def _final_half(rec: TrajectoryRecord) -> np.ndarray:
    return rec.t >= 0.5 * rec.t[-1]


def _trap_certified(rec: TrajectoryRecord, cfg: ClassifyConfig) -> bool:
    dt_h = rec.d_tilde[_final_half(rec)]
    return bool(np.isfinite(dt_h).all() and (dt_h <= cfg.delta_E).all())


def _label_record(rec: TrajectoryRecord, cfg: ClassifyConfig):
    """Apply the Blowup / Scatter / Trap rules to one (merged) record."""
    half = _final_half(rec)
    K_h = rec.K[half]
    dt_h = rec.d_tilde[half]
    info = {
        "status": rec.status,
        "t_end": float(rec.t[-1]),
        "n_steps": rec.n_steps,
        "K_final": float(rec.K[-1]),
        "K_final_half_min": float(K_h.min()),
        "K_final_half_max": float(K_h.max()),
        "d_tilde_final": float(rec.d_tilde[-1]),
        "d_tilde_final_half_max": float(np.nanmax(dt_h))
        if np.isfinite(dt_h).any() else float("nan"),
        "d_tilde_min": float(np.nanmin(rec.d_tilde))
        if np.isfinite(rec.d_tilde).any() else float("nan"),
        "lp_max": float(rec.lp_norm.max()),
        "lp_final": float(rec.lp_norm[-1]),
    }
    if rec.status == "blowup":
        if (K_h < 0.0).all():
            return "Blowup", info
        info["reason"] = "blowup evidence without settled K < 0"
        return "Undecided", info
    if rec.status != "completed":
        info["reason"] = f"solver stopped with status {rec.status!r}"
        return "Undecided", info
    # scattering proxy: persistent K > 0, L^{p+1} decay from the
    # post-ejection maximum, and separation from the orbit
    ejected = np.isfinite(rec.d_tilde) & (rec.d_tilde > cfg.delta_E)
    if ejected.any():
        i_ej = int(np.argmax(ejected))
        lp_post = rec.lp_norm[i_ej:]
        ratio = float(lp_post.max() / rec.lp_norm[-1])
        info["ejected_at"] = float(rec.t[i_ej])
        info["lp_decay_ratio"] = ratio
        separated = np.isfinite(dt_h).all() and \
            (dt_h >= cfg.delta_star).all()
        if (K_h > 0.0).all() and ratio >= cfg.decay_factor and separated:
            return "Scatter", info
    if _trap_certified(rec, cfg):
        return "Trap", info
    info["reason"] = "no criterion met within the horizon"
    return "Undecided", info


def _run_direction(psi0: RadialField, prm: ModelParams, cfg: ClassifyConfig):
    """Base-horizon run, extended to t_far unless trapped or blown up."""
    try:
        rec = run(psi0, cfg.evolve, prm, cfg.gs, cfg.spec, cfg.dist)
        extended = False
        if rec.status == "completed" and not _trap_certified(rec, cfg) \
                and cfg.t_far > cfg.evolve.t_max:
            tail_cfg = replace(cfg.evolve, t_max=cfg.t_far - cfg.evolve.t_max)
            tail = run(rec.final_state, tail_cfg, prm, cfg.gs, cfg.spec,
                       cfg.dist)
            rec = _concat_records(rec, tail)
            extended = True
    except NlslabError as exc:
        return "Undecided", {"reason": f"solver error: {exc}",
                             "error": type(exc).__name__}, None
    label, info = _label_record(rec, cfg)
    info["extended"] = extended
    return label, info, rec


def classify_run(psi0: RadialField, prm: ModelParams,
                 cfg: ClassifyConfig) -> Classification:
    """Label the forward and backward evolutions of psi0.

    The backward-in-time behavior of psi is the forward behavior of its
    conjugate, so both directions run through the same solver; for
    exactly real data the two initial states are bitwise identical and
    the forward record is reused.  Solver failures become Undecided
    with a reason rather than exceptions.  In strict mode, initial data
    with S_omega(psi0) >= m_omega + epsilon_omega(M(psi0)) is refused
    (labels Undecided, no runs), which requires a threshold table.
    """
    M0 = mass(psi0)
    S0 = S_omega(psi0, prm)
    evidence: dict = {"mass": M0, "S_omega": S0, "strict": cfg.strict}
    if cfg.table is not None:
        evidence["m_omega"] = cfg.table.m_omega
        try:
            evidence["epsilon_omega"] = epsilon_omega(M0, cfg.table)
            evidence["admissible"] = (
                S0 < cfg.table.m_omega + evidence["epsilon_omega"])
        except OutOfRange as exc:
            evidence["epsilon_omega"] = None
            evidence["admissible"] = None
            evidence["admissibility_error"] = str(exc)
    if cfg.strict:
        if cfg.table is None:
            raise DomainError("strict mode needs a threshold table")
        if evidence.get("admissible") is None:
            raise OutOfRange(
                "strict mode cannot test admissibility: "
                + evidence.get("admissibility_error", "no epsilon_omega"))
        if not evidence["admissible"]:
            reason = ("refused: S_omega(psi0) = "
                      f"{S0:.6g} >= m_omega + epsilon_omega(M) = "
                      f"{cfg.table.m_omega + evidence['epsilon_omega']:.6g}")
            evidence["reason"] = reason
            return Classification(forward="Undecided", backward="Undecided",
                                  scenario="Undecided", evidence=evidence)

    f_label, f_info, f_rec = _run_direction(psi0, prm, cfg)
    if np.all(psi0.values.imag == 0.0):
        b_label, b_info, b_rec = f_label, dict(f_info), f_rec
        b_info["reused_forward"] = True
    else:
        conj0 = RadialField(psi0.grid, np.conj(psi0.values))
        b_label, b_info, b_rec = _run_direction(conj0, prm, cfg)
        b_info["reused_forward"] = False
    evidence["forward"] = f_info
    evidence["backward"] = b_info
    return Classification(forward=f_label, backward=b_label,
                          scenario=scenario_index(f_label, b_label),
                          evidence=evidence, forward_record=f_rec,
                          backward_record=b_rec)


def measure_ejection_constants(gs, spec, dist: DistanceConfig, *,
                               eps: float = 1e-3, dt: float = 1e-3,
                               t_max: float = 1.6) -> dict:
    """Measure the ejection constants from +-eps unstable-mode runs.

    Over the window R0 <= d_omega <= delta_E the distance brackets
    A_* e^{mu t} R0 <= d <= B_* e^{mu t} R0; C_* is the growth factor
    e^{mu t} at which K first takes the ejection sign, and T_* the
    (R0-scaled) time after which d grows monotonically.  The constants
    are measured, stored, and reported -- never assumed.
    """
    prm = gs.params
    grid = gs.profile.grid
    uplus = spec.f1.values + 1j * spec.f2.values
    out = {"eps": eps, "A_star": math.inf, "B_star": 0.0, "C_star": 1.0,
           "T_star": 0.0, "R0": {}}
    for sgn in (+1.0, -1.0):
        psi0 = RadialField(grid, gs.profile.values + sgn * eps * uplus)
        rec = run(psi0, EvolveConfig(dt=dt, t_max=t_max, stride=5),
                  prm, gs, spec, dist)
        d = rec.d_omega
        t = rec.t
        finite = np.isfinite(d)
        R0 = float(d[finite][0])
        win = finite & (d >= R0) & (d <= dist.delta_E)
        if win.sum() < 8:
            raise DomainError("ejection window too short; raise t_max or "
                              "lower eps")
        ratio = d[win] / (np.exp(spec.mu * t[win]) * R0)
        out["A_star"] = min(out["A_star"], float(ratio.min()))
        out["B_star"] = max(out["B_star"], float(ratio.max()))
        signed = np.where(np.sign(rec.K) == sgn)[0]
        if signed.size:
            out["C_star"] = max(out["C_star"],
                                float(np.exp(spec.mu * t[signed[0]])))
        dd = np.diff(d[win])
        drops = np.where(dd <= 0.0)[0]
        t_mono = float(t[win][drops[-1] + 1]) if drops.size else float(
            t[win][0])
        out["T_star"] = max(out["T_star"],
                            t_mono / R0 ** min(1.0, prm.p - 1.0))
        out["R0"][f"{sgn:+.0f}"] = R0
    return out
