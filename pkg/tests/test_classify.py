"""Threshold margin epsilon_omega, sign readings, one-pass monitor, and
the nine-scenario labeling of forward/backward runs.

Slow pieces (the solver runs behind the scenario tests) are shared
through module-scoped fixtures; the pinned numbers below were measured
once on the default configuration and frozen.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from nlslab.classify import (
    LABELS,
    ClassifyConfig,
    build_threshold_table,
    classify_run,
    epsilon_omega,
    measure_ejection_constants,
    one_pass_monitor,
    scenario_index,
    sign_function,
)
from nlslab.errors import DomainError, Inconsistent, OutOfRange
from nlslab.evolve import EvolveConfig, TrajectoryRecord, run
from nlslab.functionals import ModelParams, S_omega, mass
from nlslab.grid import RadialField
from nlslab.modes import DistanceConfig


# -- shared runs (module scope: each integrates the PDE once) ---------------

@pytest.fixture(scope="module")
def rec_trap(gs05, specdata05, cfg05):
    """Standing-wave run over one unit of time."""
    psi0 = RadialField(gs05.profile.grid,
                       gs05.profile.values.astype(complex))
    return run(psi0, EvolveConfig(dt=1e-3, t_max=1.0), gs05.params,
               gs05, specdata05, cfg05)


@pytest.fixture(scope="module")
def rec_eject_plus(gs05, specdata05, cfg05):
    """Phi + 1e-3 * U_+ run, horizon well past the ejection time."""
    uplus = specdata05.f1.values + 1j * specdata05.f2.values
    psi0 = RadialField(gs05.profile.grid,
                       gs05.profile.values + 1e-3 * uplus)
    return run(psi0, EvolveConfig(dt=1e-3, t_max=4.0), gs05.params,
               gs05, specdata05, cfg05)


def _fake_record(params, t, d_tilde, lam1=None, K=None, status="completed"):
    """Minimal hand-built record for the pure-logic readers."""
    t = np.asarray(t, float)
    n = t.size
    z = np.zeros(n)
    lam = z if lam1 is None else np.asarray(lam1, float)
    Kv = z if K is None else np.asarray(K, float)
    return TrajectoryRecord(
        params=params, status=status, t=t,
        mass=np.ones(n), hamiltonian=np.ones(n), K=Kv,
        grad_norm=np.ones(n), second_moment=np.ones(n),
        d_omega=np.asarray(d_tilde, float).copy(),
        d_tilde=np.asarray(d_tilde, float),
        lambda_plus=lam.copy(), lambda_minus=lam.copy(),
        theta=z, lp_norm=np.ones(n), final_state=None)


# -- scenario table ---------------------------------------------------------

def test_scenario_index_covers_all_nine_pairs():
    expected = {
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
    seen = set()
    for (f, b), idx in expected.items():
        assert scenario_index(f, b) == idx
        seen.add(idx)
    assert seen == set(range(1, 10))


def test_scenario_index_undecided_and_unknown():
    for other in ("Scatter", "Blowup", "Trap", "Undecided"):
        assert scenario_index("Undecided", other) == "Undecided"
        assert scenario_index(other, "Undecided") == "Undecided"
    with pytest.raises(DomainError):
        scenario_index("Scatter", "scatter")
    with pytest.raises(DomainError):
        scenario_index("Global", "Scatter")
    assert set(LABELS) == {"Scatter", "Blowup", "Trap", "Undecided"}


# -- threshold table and epsilon_omega --------------------------------------

def test_threshold_table_nodes_and_envelope(table05, mcurve05):
    # spline reproduces the solved m at the nodes ...
    for wn, mn in zip(mcurve05.omega, mcurve05.m):
        assert table05.m_at(float(wn)) == pytest.approx(float(mn),
                                                        rel=1e-12)
    # ... with derivative equal to the solved mass (the envelope
    # identity dm/domega = M that makes the branch formulas join)
    h = 1e-7
    for wn in (0.04, 0.05, 0.08):
        fd = (table05.m_at(wn + h) - table05.m_at(wn - h)) / (2 * h)
        assert fd == pytest.approx(mcurve05.mass_of(wn), rel=1e-6)
    assert table05.m_omega == pytest.approx(mcurve05.m_of(0.05), rel=1e-12)
    assert table05.mass_omega == mcurve05.mass_of(0.05)
    with pytest.raises(OutOfRange):
        table05.m_at(0.021)


def test_build_threshold_table_validation(mcurve05, cfg05):
    dE = cfg05.delta_E
    with pytest.raises(OutOfRange):
        build_threshold_table(mcurve05, 0.5, delta_E=dE)
    with pytest.raises(DomainError):
        build_threshold_table(mcurve05, 0.05, 0.05, delta_E=dE)
    with pytest.raises(DomainError):
        build_threshold_table(mcurve05, 0.05, 0.20, delta_E=dE)
    with pytest.raises(DomainError):
        build_threshold_table(mcurve05, 0.05, 0.10)
    with pytest.raises(DomainError):
        build_threshold_table(mcurve05, 0.05, 0.10, delta_E=dE,
                              eps_of_omega=lambda w: 1e-3)
    with pytest.raises(DomainError):
        build_threshold_table(mcurve05, 0.05, 0.10,
                              eps_of_omega=lambda w: 0.0)
    # omega_star defaults to min(2 omega, top node)
    assert build_threshold_table(mcurve05, 0.05,
                                 delta_E=dE).omega_star == 0.10
    assert build_threshold_table(mcurve05, 0.08,
                                 delta_E=dE).omega_star == 0.12


def test_epsilon_omega_exact_at_reference_mass(table05, cfg05):
    got = epsilon_omega(table05.mass_omega, table05)
    assert got == 0.5 * cfg05.delta_E * cfg05.delta_E


def test_epsilon_omega_continuous_at_reference_mass(table05):
    # the alpha(M) branches meet the exact value from both sides;
    # measured deviation ~3.5e-8 with the envelope spline (a generic
    # interpolant of m alone puts this near 2e-3)
    Mw = table05.mass_omega
    center = epsilon_omega(Mw, table05)
    left = epsilon_omega(Mw * (1.0 - 1e-6), table05)
    right = epsilon_omega(Mw * (1.0 + 1e-6), table05)
    assert abs(left - center) <= 1e-6 * center
    assert abs(right - center) <= 1e-6 * center
    assert abs(left - right) <= 1e-6 * center


def test_epsilon_omega_saturates_below_reference(table05, mcurve05):
    # constant on M <= M(Phi_{omega_star}): the omega_star secant gap
    sat = epsilon_omega(0.0, table05)
    assert sat == epsilon_omega(float(mcurve05.mass_of(0.10)), table05)
    assert sat == pytest.approx(0.4540771547139104, rel=1e-9)
    assert sat > 0.0


def test_epsilon_omega_node_identities(table05, mcurve05):
    # at a tabulated node alpha the spline equals the solved m, so the
    # branch values reduce to closed forms in the raw solver output
    eps = table05.eps_of_omega(0.05)
    m = dict(zip(mcurve05.omega, mcurve05.m))
    M = dict(zip(mcurve05.omega, mcurve05.mass))
    # above the reference mass (alpha < omega)
    expected_4 = eps + (0.05 - 0.04) * M[0.04] - (m[0.05] - m[0.04])
    assert epsilon_omega(float(M[0.04]), table05) == pytest.approx(
        expected_4, rel=1e-9)
    # between the two reference masses (omega < alpha < omega_star)
    expected_2 = eps + m[0.08] - m[0.05] - (0.08 - 0.05) * M[0.08]
    assert epsilon_omega(float(M[0.08]), table05) == pytest.approx(
        expected_2, rel=1e-9)


def test_epsilon_omega_positive_on_scanned_grid(table05, mcurve05):
    Ms = np.linspace(0.5, float(mcurve05.mass[0]) * 0.999999, 101)
    vals = np.array([epsilon_omega(float(M), table05) for M in Ms])
    assert (vals > 0.0).all()
    assert vals.min() > 1e-5


def test_epsilon_omega_domain(table05, mcurve05):
    with pytest.raises(DomainError):
        epsilon_omega(-1.0, table05)
    with pytest.raises(DomainError):
        epsilon_omega(float("nan"), table05)
    with pytest.raises(DomainError):
        epsilon_omega(float("inf"), table05)
    # masses above the tabulated branch need alpha(M) beyond the table
    with pytest.raises(OutOfRange):
        epsilon_omega(float(mcurve05.mass[0]) * 1.01, table05)
    # small masses saturate instead of raising
    assert epsilon_omega(0.0, table05) > 0.0


# -- config / delta chain ---------------------------------------------------

def test_classify_config_delta_chain(clscfg05, cfg05):
    assert clscfg05.delta_E == cfg05.delta_E
    assert clscfg05.delta_star == cfg05.delta_E / 4.0
    assert clscfg05.r_star == clscfg05.delta_star / 10.0
    assert clscfg05.eps_star == (clscfg05.r_star / 10.0) ** 2
    assert replace(clscfg05, delta_S=0.008).delta_star == 0.002


def test_classify_config_validation(gs05, specdata05, cfg05):
    with pytest.raises(DomainError):
        ClassifyConfig(gs=gs05, spec=specdata05, dist=cfg05, t_far=1.0)
    with pytest.raises(DomainError):
        ClassifyConfig(gs=gs05, spec=specdata05, dist=cfg05, lam_tol=0.0)
    with pytest.raises(DomainError):
        ClassifyConfig(gs=gs05, spec=specdata05, dist=cfg05,
                       decay_factor=1.0)
    # delta_S so large the chain inverts
    with pytest.raises(DomainError):
        ClassifyConfig(gs=gs05, spec=specdata05, dist=cfg05,
                       delta_S=5.0 * cfg05.delta_E)


# -- sign readings ----------------------------------------------------------

def test_sign_standing_wave_all_marginal(rec_trap, clscfg05):
    ss = sign_function(rec_trap, clscfg05)
    # the standing wave never leaves the near regime over one time unit
    # and its lambda_1 stays below the magnitude tolerance throughout
    assert (rec_trap.d_tilde <= clscfg05.delta_E).all()
    assert ss.marginal.all()
    assert ss.n_overlap == 0
    assert np.isin(ss.signs, (-1, 0, 1)).all()


def test_sign_ejection_positive(rec_eject_plus, clscfg05):
    ss = sign_function(rec_eject_plus, clscfg05)
    # both readings live on the overlap band, never marginal, all +1
    assert not ss.marginal.any()
    assert not ss.gaps.any()
    assert ss.n_overlap > 30
    assert (ss.signs == 1).all()


def test_sign_ejection_negative(gs05, specdata05, cfg05, clscfg05):
    uplus = specdata05.f1.values + 1j * specdata05.f2.values
    psi0 = RadialField(gs05.profile.grid,
                       gs05.profile.values - 1e-3 * uplus)
    rec = run(psi0, EvolveConfig(dt=1e-3, t_max=1.6), gs05.params,
              gs05, specdata05, cfg05)
    ss = sign_function(rec, clscfg05)
    live = ~ss.marginal
    assert live.any() and (ss.signs[live] == -1).all()
    assert ss.n_overlap > 10
    assert ss.marginal.mean() < 0.1


def test_sign_overlap_agreement_and_disagreement(params_default, clscfg05):
    t = [0.0, 0.1, 0.2]
    band = 0.5 * (clscfg05.delta_star + clscfg05.delta_E)
    d = [band] * 3
    # agreeing non-marginal readings pass and count the overlap
    ss = sign_function(_fake_record(params_default, t, d,
                                    lam1=[1e-3] * 3, K=[1e-2] * 3),
                       clscfg05)
    assert ss.n_overlap == 3 and (ss.signs == 1).all()
    assert not ss.marginal.any()
    # disagreement with both readings above tolerance is a calibration
    # failure, not an undecidable point
    with pytest.raises(Inconsistent):
        sign_function(_fake_record(params_default, t, d,
                                   lam1=[1e-3] * 3, K=[-1e-2] * 3),
                      clscfg05)
    # a weak lambda_1 defers to the live K reading instead of raising
    ss = sign_function(_fake_record(params_default, t, d,
                                    lam1=[1e-4] * 3, K=[-1e-2] * 3),
                       clscfg05)
    assert (ss.signs == -1).all()
    assert not ss.marginal.any()


def test_sign_gap_when_no_reading(params_default, clscfg05):
    # snapshot with NaN distance has neither regime: a gap, no raise
    ss = sign_function(_fake_record(params_default, [0.0, 0.1],
                                    [float("nan"), 1e-4],
                                    lam1=[1.0, 1e-3]),
                       clscfg05)
    assert bool(ss.gaps[0]) and ss.signs[0] == 0
    assert ss.signs[1] == 1 and not ss.gaps[1]


# -- one-pass monitor -------------------------------------------------------

def test_one_pass_barrier_arithmetic(gs05, specdata05):
    # R = 0.01 sits above the calibrated delta_E, so exercise the
    # barrier formula under a synthetic (wider) cutoff
    wide = ClassifyConfig(gs=gs05, spec=specdata05,
                          dist=DistanceConfig(delta_E=0.02))
    rec = _fake_record(ModelParams(4, 2.5, 0.05), [0.0], [1.0])
    rep = one_pass_monitor(rec, 0.01, wide)
    assert math.isclose(rep.barrier, 0.011, rel_tol=1e-12)  # R + R^{3/2}
    # at d = 4 every admissible power has p + 1 > 3, so the exponent
    # min(3, p+1)/2 only drops below 3/2 in higher dimension
    rec = _fake_record(ModelParams(5, 1.9, 0.05), [0.0], [1.0])
    rep = one_pass_monitor(rec, 0.01, wide)
    assert math.isclose(rep.barrier, 0.01 + 0.01 ** 1.45, rel_tol=1e-12)


def test_one_pass_R_validation(params_default, clscfg05):
    rec = _fake_record(params_default, [0.0], [1.0])
    for bad in (0.0, -1e-3, clscfg05.delta_E, 0.01):
        with pytest.raises(DomainError):
            one_pass_monitor(rec, bad, clscfg05)


def test_one_pass_synthetic_verdicts(params_default, clscfg05):
    R = 1e-3
    t = [0.0, 0.1, 0.2, 0.3]
    mk = lambda d: _fake_record(params_default, t[:len(d)], d)  # noqa: E731
    assert one_pass_monitor(mk([5e-3, 5e-3, 5e-3]), R,
                            clscfg05).verdict == "never-entered"
    rep = one_pass_monitor(mk([1e-4, 1e-4, 1e-4]), R, clscfg05)
    assert rep.verdict == "stays-below" and rep.entered_at == 0.0
    rep = one_pass_monitor(mk([1e-4, 1e-4, 5e-3, 7e-3]), R, clscfg05)
    assert rep.verdict == "permanent-exit" and rep.exited_at == 0.2
    assert rep.returned_at is None
    rep = one_pass_monitor(mk([1e-4, 5e-3, 1e-4]), R, clscfg05)
    assert rep.verdict == "return-violation" and rep.returned_at == 0.2
    # NaN snapshots are skipped, not treated as crossings
    rep = one_pass_monitor(mk([float("nan"), 1e-4, 5e-3]), R, clscfg05)
    assert rep.verdict == "permanent-exit" and rep.entered_at == 0.1


def test_one_pass_on_solver_runs(rec_trap, rec_eject_plus, clscfg05):
    R = 2e-3
    rep = one_pass_monitor(rec_trap, R, clscfg05)
    assert rep.verdict == "stays-below" and rep.entered_at == 0.0
    rep = one_pass_monitor(rec_eject_plus, R, clscfg05)
    assert rep.verdict == "permanent-exit"
    assert rep.barrier == pytest.approx(0.0020894427190999917, rel=1e-12)
    assert rep.entered_at == 0.0 and 0.2 < rep.exited_at < 0.7
    assert rep.returned_at is None


# -- classify_run on the three example families -----------------------------

def test_classify_standing_wave_is_trap_trap(gs05, clscfg05):
    psi0 = RadialField(gs05.profile.grid,
                       gs05.profile.values.astype(complex))
    c = classify_run(psi0, gs05.params, clscfg05)
    assert (c.forward, c.backward) == ("Trap", "Trap")
    assert c.scenario == 9
    fwd = c.evidence["forward"]
    assert fwd["status"] == "completed"
    assert not fwd["extended"]  # trap-certified at the base horizon
    assert fwd["d_tilde_final_half_max"] <= clscfg05.delta_E
    assert c.evidence["backward"]["reused_forward"]
    assert c.backward_record is c.forward_record
    assert c.evidence["admissible"] is True


def test_classify_supercritical_scaling_is_blowup_blowup(gs05, clscfg05):
    psi0 = RadialField(gs05.profile.grid,
                       1.2 * gs05.profile.values.astype(complex))
    c = classify_run(psi0, gs05.params, clscfg05)
    assert (c.forward, c.backward) == ("Blowup", "Blowup")
    assert c.scenario == 2
    fwd = c.evidence["forward"]
    assert fwd["status"] == "blowup"
    assert fwd["K_final_half_max"] < 0.0
    assert fwd["t_end"] < 1.0
    assert c.evidence["admissible"] is True


def test_classify_subcritical_scaling_is_scatter_scatter(gs05, clscfg05):
    psi0 = RadialField(gs05.profile.grid,
                       0.8 * gs05.profile.values.astype(complex))
    c = classify_run(psi0, gs05.params, clscfg05)
    assert (c.forward, c.backward) == ("Scatter", "Scatter")
    assert c.scenario == 1
    fwd = c.evidence["forward"]
    assert fwd["extended"]  # decided on the far horizon
    assert fwd["t_end"] == pytest.approx(clscfg05.t_far, abs=0.02)
    assert fwd["lp_decay_ratio"] >= clscfg05.decay_factor
    assert fwd["K_final_half_min"] > 0.0
    # mass scales exactly quadratically under amplitude scaling
    assert c.evidence["mass"] == pytest.approx(0.64 * gs05.mass, rel=1e-12)
    assert c.evidence["epsilon_omega"] == pytest.approx(
        0.18939181361115287, rel=1e-6)
    assert c.evidence["admissible"] is True


def test_classify_solver_error_becomes_undecided(grid_coarse, gs05,
                                                 clscfg05):
    # wrong grid: the solver refuses, classify reports instead of raising
    psi0 = RadialField(grid_coarse,
                       np.exp(-grid_coarse.r**2).astype(complex))
    c = classify_run(psi0, gs05.params, clscfg05)
    assert (c.forward, c.backward) == ("Undecided", "Undecided")
    assert c.scenario == "Undecided"
    assert c.evidence["forward"]["error"] == "DomainError"
    assert "solver error" in c.evidence["forward"]["reason"]
    assert c.forward_record is None


# -- strict admissibility ---------------------------------------------------

def test_strict_mode_refuses_inadmissible_data(gs05, clscfg05):
    grid = gs05.profile.grid
    psi0 = RadialField(grid,
                       (1.33 * np.exp(-(grid.r / 2.0) ** 2)).astype(complex))
    strict = replace(clscfg05, strict=True)
    # its action exceeds the threshold at comparable mass
    assert S_omega(psi0, gs05.params) > clscfg05.table.m_omega
    c = classify_run(psi0, gs05.params, strict)
    assert (c.forward, c.backward) == ("Undecided", "Undecided")
    assert c.scenario == "Undecided"
    assert c.evidence["admissible"] is False
    assert c.evidence["reason"].startswith("refused")
    assert c.forward_record is None and c.backward_record is None


def test_strict_mode_requires_table_and_coverage(gs05, specdata05, cfg05,
                                                 clscfg05):
    grid = gs05.profile.grid
    psi0 = RadialField(grid, gs05.profile.values.astype(complex))
    bare = ClassifyConfig(gs=gs05, spec=specdata05, dist=cfg05, strict=True)
    with pytest.raises(DomainError):
        classify_run(psi0, gs05.params, bare)
    # mass beyond the tabulated inverse cannot be tested in strict mode
    heavy = RadialField(grid,
                        (4.0 * np.exp(-(grid.r / 2.0) ** 2)).astype(complex))
    assert mass(heavy) > float(clscfg05.table.mcurve.mass[0])
    with pytest.raises(OutOfRange):
        classify_run(heavy, gs05.params, replace(clscfg05, strict=True))


# -- measured ejection constants --------------------------------------------

def test_measure_ejection_constants(gs05, specdata05, cfg05):
    out = measure_ejection_constants(gs05, specdata05, cfg05)
    assert 0.95 <= out["A_star"] <= 1.0 + 1e-9
    assert out["A_star"] <= out["B_star"] <= 1.2
    assert 1.0 <= out["C_star"] <= 1.5
    assert 0.0 <= out["T_star"] <= 0.5
    # seed distance: eps * sqrt(mu / 2) up to discretization
    expect_R0 = 1e-3 * math.sqrt(specdata05.mu / 2.0)
    for key in ("+1", "-1"):
        assert out["R0"][key] == pytest.approx(expect_R0, rel=0.08)


def test_measure_ejection_constants_window_too_short(gs05, specdata05,
                                                     cfg05):
    with pytest.raises(DomainError):
        measure_ejection_constants(gs05, specdata05, cfg05, t_max=0.02)
