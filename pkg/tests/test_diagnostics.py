import dataclasses

import numpy as np
import pytest
from scipy.integrate import quad

import crossdiff as cd
from crossdiff.diagnostics import diss_entropy_rate, make_test_bank
from crossdiff.grid import Field
from crossdiff.solver import State, Trajectory

from scenarios import fast_problem, heat_problem, stationary_problem


def _standing_problem(n=256, t_final=1.0):
    """A valid problem shell for hand-built trajectories."""
    g = cd.make_grid(n)
    one = Field.constant(g, 1.0)
    return cd.ProblemSpec(
        grid=g, nonlinearity=cd.Nonlinearity(0.5),
        potentials=cd.build_potentials([], [], g),
        initial=cd.validate_initial(one, one),
        t_final=t_final, snapshot_times=(0.0, t_final))


def _state(problem, rho_vals, mu_vals, t=0.0):
    g = problem.grid
    return State(t, Field(g, rho_vals), Field(g, mu_vals))


def _cos_S(x):
    return 1.0 + 0.5 * np.cos(2 * np.pi * x)


# --------------------------------------------------------------------------
# pointwise functionals


def test_entropy_examples():
    prob = _standing_problem(64)
    g = prob.grid
    assert cd.entropy(_state(prob, np.ones(64), np.ones(64))) == pytest.approx(
        0.0, abs=1e-15)
    assert cd.entropy(_state(prob, 3 * np.ones(64), np.ones(64))) == pytest.approx(
        3 * np.log(3.0), abs=1e-13)


def test_entropy_quadrature_oracle():
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    got = cd.entropy(_state(prob, half, half))
    oracle, err = quad(lambda z: _cos_S(z) * np.log(0.5 * _cos_S(z)), 0.0, 1.0,
                       epsabs=1e-13, epsrel=1e-13, limit=200)
    assert err < 1e-10
    assert got == pytest.approx(oracle, abs=1e-10)


def test_energy_closed_forms():
    prob = _standing_problem(64)
    st = _state(prob, np.ones(64), np.ones(64))
    prob1 = dataclasses.replace(_standing_problem(64),
                                nonlinearity=cd.Nonlinearity(1.0))
    assert cd.energy(st, prob1) == pytest.approx(2 * np.log(2) - 2, abs=1e-13)
    assert cd.energy(st, prob) == pytest.approx(-2 * np.sqrt(2), abs=1e-13)


def test_energy_descends_without_potentials():
    traj = cd.run(heat_problem(128, snaps=9))
    e = [cd.energy(s, traj.problem) for s in traj.snapshots]
    assert np.all(np.diff(e) <= 1e-12)


def test_dissipation_beta_degenerate_endpoints():
    prob = _standing_problem(64)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    st = _state(prob, half, half)
    for beta in (0.0, 1.0):
        out = cd.dissipation_beta(st, prob, beta)
        assert out.dissipation == 0.0
        assert out.rhs_bound == 0.0
    with pytest.raises(ValueError, match="beta out of range"):
        cd.dissipation_beta(st, prob, 1.5)


def _two_point_quad(fn, dx):
    """Adaptive quadrature of a periodic two-point-difference integrand."""
    val, err = quad(fn, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=400)
    assert err < 1e-9
    return val


def test_dissipation_beta_log_branch_oracle():
    # alpha = beta = 1/2 hits the logarithmic branch
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    st = _state(prob, half, half)
    got = cd.dissipation_beta(st, prob, 0.5).dissipation
    dx = prob.grid.dx
    coeff = 0.5 * 0.5 * 0.5 / 2.0
    oracle = coeff * _two_point_quad(
        lambda z: ((np.log(_cos_S(z + dx)) - np.log(_cos_S(z))) / dx) ** 2, dx)
    assert got == pytest.approx(oracle, abs=1e-8)


def test_dissipation_beta_power_branch_oracle():
    # alpha = 1, beta = 1/2: exponent (alpha+beta-1)/2 = 1/4
    prob = dataclasses.replace(_standing_problem(256),
                                nonlinearity=cd.Nonlinearity(1.0))
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    st = _state(prob, half, half)
    got = cd.dissipation_beta(st, prob, 0.5).dissipation
    dx = prob.grid.dx
    coeff = 2.0 * 1.0 * 0.5 * 0.5 / 0.5**2
    oracle = coeff * _two_point_quad(
        lambda z: ((_cos_S(z + dx) ** 0.25 - _cos_S(z) ** 0.25) / dx) ** 2, dx)
    assert got == pytest.approx(oracle, abs=1e-8)


def test_dissipation_beta_branches_agree_near_log_case():
    # the power branch tends continuously to the logarithmic branch
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    st = _state(prob, half, half)
    log_val = cd.dissipation_beta(st, prob, 0.5).dissipation
    near_val = cd.dissipation_beta(st, prob, 0.5 + 1e-6).dissipation
    assert near_val == pytest.approx(log_val, rel=1e-4)


def test_dissipation_beta_rhs_bound():
    prob = fast_problem(128, snaps=3)
    st = State(0.0, prob.initial.rho0, prob.initial.mu0)
    beta = 0.25
    out = cd.dissipation_beta(st, prob, beta)
    sup = max(prob.potentials.sup_dV, prob.potentials.sup_dW)
    c = beta * (1 - beta) * sup**2 / (2 * 0.5)
    oracle, err = quad(lambda z: (1.0 + 0.4 * np.cos(2 * np.pi * z)) ** (beta + 0.5),
                       0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    assert out.rhs_bound == pytest.approx(c * oracle, rel=1e-6)
    assert out.beta_entropy < 0.0


def test_bv_norms_constant():
    prob = _standing_problem(64)
    st = _state(prob, np.full(64, 2.0), np.full(64, 0.5))
    bv_r, bv_u = cd.bv_norms(st, prob)
    assert bv_r == 0.0
    assert bv_u == 0.0  # no potentials, constant log-ratio


def test_bv_r_sine_total_variation():
    # log-ratio r = sin(2 pi x): total variation over the torus is 4
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    mu = np.ones(256)
    rho = np.exp(np.sin(2 * np.pi * x))
    bv_r, _ = cd.bv_norms(_state(prob, rho, mu), prob)
    assert bv_r == pytest.approx(4.0, abs=1e-3)
    # brute-force oracle over the same samples
    r = np.sin(2 * np.pi * x)
    oracle = sum(abs(r[(i + 1) % 256] - r[i]) for i in range(256))
    assert bv_r == pytest.approx(oracle, abs=1e-12)


def test_bv_u_drift_l1_oracle():
    # alpha = 1, r = 0, V = sin(2 pi x), W = 0: the L1 norm of the shift
    # equals int |V'| = 4
    g = cd.make_grid(256)
    one = Field.constant(g, 1.0)
    prob = cd.ProblemSpec(
        grid=g, nonlinearity=cd.Nonlinearity(1.0),
        potentials=cd.build_potentials([(1, 0.0, 1.0)], [], g),
        initial=cd.validate_initial(one, one),
        t_final=1.0, snapshot_times=(0.0, 1.0))
    _, bv_u = cd.bv_norms(State(0.0, one, one), prob)
    oracle, err = quad(lambda z: np.abs(2 * np.pi * np.cos(2 * np.pi * z)),
                       0.0, 1.0, points=[0.25, 0.75], limit=200)
    assert oracle == pytest.approx(4.0, abs=1e-10)
    assert bv_u == pytest.approx(4.0, abs=1e-3)


def test_lebesgue_norms_constant():
    prob = _standing_problem(64)
    st = _state(prob, 0.5 * np.ones(64), 0.5 * np.ones(64))
    out = cd.lebesgue_norms(st, prob)
    assert out.norm_S_2ma == pytest.approx(1.0, abs=1e-14)
    assert out.sup_S_pow == pytest.approx(1.0, abs=1e-14)
    assert out.fisher_log == 0.0
    assert out.h_minus_one == pytest.approx(0.0, abs=1e-13)


def test_h_minus_one_single_mode():
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    out = cd.lebesgue_norms(_state(prob, half, half), prob)
    closed_form = 0.5 / (2 * np.pi * np.sqrt(2.0))  # mode c1 = 1/2
    assert closed_form == pytest.approx(0.05627, abs=5e-6)
    assert out.h_minus_one == pytest.approx(closed_form, rel=1e-12)


def test_h_minus_one_zero_iff_constant():
    prob = _standing_problem(64)
    x = prob.grid.cell_centers()
    rng = np.random.default_rng(3)
    for vals in (1.0 + 0.3 * np.sin(2 * np.pi * 5 * x),
                 1.0 + 0.1 * (-1.0) ** np.arange(64),  # pure Nyquist mode
                 rng.uniform(0.5, 2.0, 64)):
        out = cd.lebesgue_norms(_state(prob, vals / 2, vals / 2), prob)
        assert out.h_minus_one > 1e-8


def test_lebesgue_power_integral_oracle():
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    out = cd.lebesgue_norms(_state(prob, half, half), prob)
    oracle, _ = quad(lambda z: _cos_S(z) ** 1.5, 0.0, 1.0,
                     epsabs=1e-12, epsrel=1e-12)
    assert out.norm_S_2ma == pytest.approx(oracle, abs=1e-8)
    assert out.sup_S_pow == pytest.approx(np.sqrt(np.max(half * 2)), rel=1e-12)


def test_diss_entropy_rate_oracle():
    prob = _standing_problem(256)
    x = prob.grid.cell_centers()
    half = 0.5 * _cos_S(x)
    got = diss_entropy_rate(_state(prob, half, half), prob)
    dx = prob.grid.dx
    alpha = 0.5

    def integrand(z):
        s_mean = 0.5 * (_cos_S(z) + _cos_S(z + dx))
        slope = (_cos_S(z + dx) - _cos_S(z)) / dx
        return alpha * s_mean ** (alpha - 2.0) * slope**2

    oracle = _two_point_quad(integrand, dx)
    assert got == pytest.approx(oracle, abs=1e-8)


# --------------------------------------------------------------------------
# weak residual


def test_weak_residual_stationary_constant():
    prob = _standing_problem(128, t_final=0.5)
    g = prob.grid
    states = tuple(State(t, Field.constant(g, 0.7), Field.constant(g, 0.7))
                   for t in np.linspace(0, 0.5, 6))
    traj = Trajectory(prob, states, ())
    bank = make_test_bank(g, 0.5, k_max=6)
    rows, res_max = cd.weak_residual(traj, bank)
    assert res_max <= 1e-12
    assert len(rows) == 2 * len(bank.phis)


def test_weak_residual_mass_identity():
    # the spatially constant test function reduces to mass conservation
    traj = cd.run(fast_problem(64, snaps=9))
    bank = make_test_bank(traj.problem.grid, traj.problem.t_final, k_max=2)
    rows, _ = cd.weak_residual(traj, bank)
    for row in rows:
        if row.phi_id.startswith("cos0"):
            assert abs(row.residual) <= 1e-10


def test_weak_residual_requires_two_snapshots():
    prob = _standing_problem(64)
    traj = Trajectory(prob, (State(0.0, prob.initial.rho0, prob.initial.mu0),), ())
    bank = make_test_bank(prob.grid, 1.0, k_max=2)
    with pytest.raises(ValueError, match="at least 2 snapshots"):
        cd.weak_residual(traj, bank)


def test_weak_residual_refinement():
    res = {}
    for n in (64, 128):
        traj = cd.run(heat_problem(n, snaps=65))
        bank = make_test_bank(traj.problem.grid, traj.problem.t_final, k_max=8)
        _, res[n] = cd.weak_residual(traj, bank)
    assert res[64] <= 2e-3
    assert 1.5 <= res[64] / res[128] <= 4.0


def test_bank_validation():
    g = cd.make_grid(16)
    with pytest.raises(ValueError, match="n/4"):
        make_test_bank(g, 1.0, k_max=8)
    bank = make_test_bank(g, 1.0, k_max=2)
    # every test function vanishes at the final time
    for phi in bank.phis:
        assert phi.chi(1.0) == 0.0
        assert phi.chi(0.0) == 1.0


# --------------------------------------------------------------------------
# equicontinuity moduli


def test_moduli_constant_trajectory():
    prob = _standing_problem(64)
    g = prob.grid
    states = tuple(State(t, Field.constant(g, 1.0), Field.constant(g, 1.0))
                   for t in (0.0, 0.5, 1.0))
    (h, osr, osm), (k, otr, otm) = cd.equicontinuity_moduli(
        Trajectory(prob, states, ()))
    assert np.all(osr == 0.0) and np.all(osm == 0.0)
    assert np.all(otr == 0.0) and np.all(otm == 0.0)


def test_moduli_frozen_cosine_closed_form():
    # rho(x) = cos(2 pi x) frozen over [0, 1]: omega_space(h) = (4/pi) sin(pi h)
    prob = _standing_problem(256)
    g = prob.grid
    x = g.cell_centers()
    vals = np.cos(2 * np.pi * x)
    states = tuple(State(t, Field(g, vals), Field(g, vals)) for t in (0.0, 0.5, 1.0))
    traj = Trajectory(prob, states, ())
    (h, osr, _), _ = cd.equicontinuity_moduli(traj)
    idx = int(np.argmin(np.abs(h - 0.25)))
    assert h[idx] == pytest.approx(0.25, abs=1e-14)
    assert osr[idx] == pytest.approx((4 / np.pi) * np.sin(np.pi / 4), abs=1e-4)
    assert osr[idx] == pytest.approx(0.90032, abs=1e-4)
    # brute-force double-sum oracle with trapezoid time weights
    times = np.array([0.0, 0.5, 1.0])
    w = np.array([0.25, 0.5, 0.25])
    m = int(round(0.25 * g.n_cells))
    oracle = 0.0
    for j, t in enumerate(times):
        total = sum(abs(vals[(i + m) % g.n_cells] - vals[i])
                    for i in range(g.n_cells)) * g.dx
        oracle += w[j] * total
    assert osr[idx] == pytest.approx(oracle, abs=1e-12)


def test_moduli_bounds_and_time_curve():
    traj = cd.run(fast_problem(64, snaps=9))
    (h, osr, osm), (k, otr, otm) = cd.equicontinuity_moduli(traj)
    assert np.all(osr >= 0.0) and np.all(otr >= 0.0)
    sup_mass = max(cd.integrate(s.rho) for s in traj.snapshots)
    t_span = traj.times[-1] - traj.times[0]
    assert np.all(osr <= 2.0 * sup_mass * t_span + 1e-12)
    assert len(k) > 0 and k[0] == pytest.approx(traj.times[1] - traj.times[0])


# --------------------------------------------------------------------------
# report aggregation


def test_report_single_snapshot():
    prob = _standing_problem(64)
    traj = Trajectory(prob, (State(0.0, prob.initial.rho0, prob.initial.mu0),), ())
    rep = cd.build_report(traj)
    assert len(rep.times) == 1
    assert rep.omega_time_k.size == 0
    assert rep.residuals == ()
    assert np.isnan(rep.residual_max)


def test_report_stationary_rows_identical():
    traj = cd.run(stationary_problem(64, snaps=5))
    rep = cd.build_report(traj, with_residuals=False)
    from crossdiff.csvio import SCALAR_COLUMNS
    for col in SCALAR_COLUMNS:
        vals = getattr(rep, col)
        assert np.max(np.abs(vals - vals[0])) <= 1e-12 * max(1.0, abs(vals[0]))


def test_report_heat_entropy_decreases():
    traj = cd.run(heat_problem(128, snaps=9))
    rep = cd.build_report(traj, with_residuals=False)
    assert np.all(np.diff(rep.entropy) < 0.0)
    assert rep.clamp_events == 0


def test_moduli_nonuniform_spacing_skips_time_curve():
    prob = _standing_problem(64)
    g = prob.grid
    states = tuple(State(t, Field.constant(g, 1.0), Field.constant(g, 1.0))
                   for t in (0.0, 0.3, 1.0))
    _, (k, otr, otm) = cd.equicontinuity_moduli(Trajectory(prob, states, ()))
    assert k.size == 0 and otr.size == 0 and otm.size == 0
