"""Functionals controlled by the a priori estimates, weak-form residuals,
and translation-equicontinuity moduli, evaluated on solver trajectories.

Conventions.  Grid total variation sum_i |r_{i+1} - r_i| stands in for the
BV seminorm of the log-ratio (exact for the piecewise-constant
reconstruction).  The dissipation reported by dissipation_beta is the
retained half after absorbing the drift by Young's inequality,

    2 a b (1-b) / (a+b-1)^2 * int |grad S^((a+b-1)/2)|^2      (a+b != 1)
    a b (1-b) / 2           * int |grad log S|^2              (a+b == 1)

with a = alpha, b = beta (the two branches agree in the limit a+b -> 1);
its companion bound is C int S^(b+1-a) with C = b(1-b) M^2 / (2a) and
M the grid sup of |V'|, |W'|.  The negative H^-1 diagnostic uses the
standard Fourier multiplier with exponent one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .grid import GridSpec, integrate
from .model import ProblemSpec
from .solver import State, Trajectory
from .transforms import shifted_gradient, to_sum_ratio


def entropy(state: State) -> float:
    rho, mu = state.rho.values, state.mu.values
    return float(np.sum(rho * np.log(rho) + mu * np.log(mu)) * state.grid.dx)


def energy(state: State, problem: ProblemSpec) -> float:
    """Gradient-flow energy int energy_density(S) + rho V + mu W."""
    nl, pot = problem.nonlinearity, problem.potentials
    rho, mu = state.rho.values, state.mu.values
    dens = nl.energy_density(rho + mu) + rho * pot.V_cells + mu * pot.W_cells
    return float(np.sum(dens) * state.grid.dx)


class DissipationBeta(NamedTuple):
    beta_entropy: float   # -int S^beta, the functional whose rate is bounded
    dissipation: float
    rhs_bound: float


def dissipation_beta(state: State, problem: ProblemSpec, beta: float) -> DissipationBeta:
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta out of range [0,1]: got {beta}")
    nl, pot = problem.nonlinearity, problem.potentials
    alpha = nl.alpha
    dx = state.grid.dx
    S = state.rho.values + state.mu.values
    beta_entropy = -float(np.sum(S**beta) * dx)
    m = alpha + beta - 1.0
    if beta in (0.0, 1.0):
        diss = 0.0
    elif m == 0.0:
        g = _grad_vals(np.log(S), dx)
        diss = (alpha * beta * (1.0 - beta) / 2.0) * float(np.sum(g * g) * dx)
    else:
        g = _grad_vals(S ** (m / 2.0), dx)
        diss = (2.0 * alpha * beta * (1.0 - beta) / m**2) * float(np.sum(g * g) * dx)
    sup_drift = max(pot.sup_dV, pot.sup_dW)
    c_young = beta * (1.0 - beta) * sup_drift**2 / (2.0 * alpha)
    rhs = c_young * float(np.sum(S ** (beta + 1.0 - alpha)) * dx)
    return DissipationBeta(beta_entropy, diss, rhs)


def _grad_vals(v: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(v, -1) - v) / dx


def bv_norms(state: State, problem: ProblemSpec) -> tuple[float, float]:
    """(bv_r, bv_u): total variation of the log-ratio and the L1 norm of the
    shifted log-ratio gradient."""
    sr = to_sum_ratio(state.rho, state.mu)
    r = sr.r.values
    bv_r = float(np.sum(np.abs(np.roll(r, -1) - r)))
    u = shifted_gradient(sr, problem.potentials, problem.nonlinearity).values
    bv_u = float(np.sum(np.abs(u)) * state.grid.dx)
    return bv_r, bv_u


class LebesgueNorms(NamedTuple):
    norm_S_2ma: float   # int S^(2-alpha)
    sup_S_pow: float    # max S^(1-alpha)
    fisher_log: float   # int |grad log S|^2
    h_minus_one: float  # ||S - mean(S)||_{H^-1}


def lebesgue_norms(state: State, problem: ProblemSpec) -> LebesgueNorms:
    alpha = problem.nonlinearity.alpha
    dx = state.grid.dx
    n = state.grid.n_cells
    S = state.rho.values + state.mu.values
    norm_2ma = float(np.sum(S ** (2.0 - alpha)) * dx)
    sup_pow = float(np.max(S) ** (1.0 - alpha))
    g = _grad_vals(np.log(S), dx)
    fisher = float(np.sum(g * g) * dx)
    # Fourier coefficients at the cell centers (phase-corrected rfft)
    k = np.arange(1, n // 2 + 1)
    spec = np.fft.rfft(S)[1:n // 2 + 1] * np.exp(-1j * np.pi * k / n)
    coef_sq = (2.0 * dx) ** 2 * np.abs(spec) ** 2
    h_m1 = float(np.sqrt(np.sum(coef_sq / (2.0 * (2.0 * np.pi * k) ** 2))))
    return LebesgueNorms(norm_2ma, sup_pow, fisher, h_m1)


# ---------------------------------------------------------------------------
# weak-form residuals


@dataclass(frozen=True)
class PhiSpec:
    phi_id: str
    x_vals: np.ndarray    # spatial factor at cell centers
    dx_vals: np.ndarray   # its exact derivative at cell centers
    chi: Callable[[float], float]


@dataclass(frozen=True)
class TestFunctionBank:
    """Separable test functions phi(t, x) = X(x) chi_j(t) with X a trig mode
    of wavenumber <= k_max and chi_j raised-cosine cutoffs that equal 1 at
    t = 0 and vanish identically on the final eighth of [0, T]."""

    grid: GridSpec
    t_final: float
    k_max: int
    phis: tuple[PhiSpec, ...]


def _raised_cosine(t_on: float, t_off: float) -> Callable[[float], float]:
    def chi(t: float) -> float:
        if t <= t_on:
            return 1.0
        if t >= t_off:
            return 0.0
        return 0.5 * (1.0 + np.cos(np.pi * (t - t_on) / (t_off - t_on)))
    return chi


def make_test_bank(grid: GridSpec, t_final: float, k_max: int = 8) -> TestFunctionBank:
    if k_max > grid.n_cells // 4:
        raise ValueError(
            f"test bank k_max exceeds n/4 (k_max={k_max}, n={grid.n_cells})")
    if t_final <= 0.0:
        raise ValueError("test bank needs a positive horizon")
    xc = grid.cell_centers()
    profiles = [
        ("chi1", _raised_cosine(0.5 * t_final, 0.875 * t_final)),
        ("chi2", _raised_cosine(0.125 * t_final, 0.5 * t_final)),
    ]
    phis = []
    for tag, chi in profiles:
        phis.append(PhiSpec(f"cos0_{tag}", np.ones_like(xc), np.zeros_like(xc), chi))
        for k in range(1, k_max + 1):
            w = 2.0 * np.pi * k
            phis.append(PhiSpec(f"cos{k}_{tag}", np.cos(w * xc), -w * np.sin(w * xc), chi))
            phis.append(PhiSpec(f"sin{k}_{tag}", np.sin(w * xc), w * np.cos(w * xc), chi))
    return TestFunctionBank(grid, float(t_final), int(k_max), tuple(phis))


class ResidualRow(NamedTuple):
    phi_id: str
    species: str
    residual: float


def weak_residual(traj: Trajectory, bank: TestFunctionBank
                  ) -> tuple[tuple[ResidualRow, ...], float]:
    """Residual of the weak formulation for every test function and species.

    Space: midpoint quadrature with analytic X, X'.  Time: trapezoid weights
    for the flux terms; the time-derivative term pairs interval-averaged
    densities with exact chi increments (discrete integration by parts), so
    a constant zero-flux state telescopes to residual zero exactly.
    """
    if len(traj.snapshots) < 2:
        raise ValueError("weak residual needs at least 2 snapshots")
    problem = traj.problem
    nl, pot = problem.nonlinearity, problem.potentials
    dx = problem.grid.dx
    times = traj.times
    widths = np.diff(times)
    w_trap = np.zeros_like(times)
    w_trap[:-1] += 0.5 * widths
    w_trap[1:] += 0.5 * widths

    rho = np.stack([s.rho.values for s in traj.snapshots])
    mu = np.stack([s.mu.values for s in traj.snapshots])
    S = rho + mu
    # centered pressure gradient at cells: mean of the two interface values
    dp_int = np.stack([_grad_vals(nl.pressure(s), dx) for s in S])
    dp_cells = 0.5 * (dp_int + np.roll(dp_int, 1, axis=1))

    flux_rho = rho * (dp_cells + pot.dV_cells)
    flux_mu = mu * (dp_cells + pot.dW_cells)

    rows = []
    for phi in bank.phis:
        chi_t = np.array([phi.chi(t) for t in times])
        dchi = np.diff(chi_t)
        for species, dens, flux in (("rho", rho, flux_rho), ("mu", mu, flux_mu)):
            space_mass = dens @ phi.x_vals * dx        # int dens X dx per time
            space_flux = flux @ phi.dx_vals * dx       # int flux X' dx per time
            dt_term = -float(np.sum(0.5 * (space_mass[:-1] + space_mass[1:]) * dchi))
            flux_term = float(np.sum(w_trap * chi_t * space_flux))
            init_term = float(space_mass[0] * chi_t[0])
            rows.append(ResidualRow(phi.phi_id, species,
                                    dt_term + flux_term - init_term))
    res_max = max(abs(r.residual) for r in rows)
    return tuple(rows), res_max


# ---------------------------------------------------------------------------
# equicontinuity moduli


def _dyadic_lags(limit: int) -> list[int]:
    lags, m = [], 1
    while m <= limit:
        lags.append(m)
        m *= 2
    return lags


def equicontinuity_moduli(traj: Trajectory):
    """Time-integrated translation moduli of both species.

    omega_space(h): int_0^T int |rho(t, x+h) - rho(t, x)| dx dt on dyadic
    lags h = dx, 2dx, ..., <= 1/4 (trapezoid in time).  omega_time(k): the
    analogous time-translate integral on dyadic multiples of the snapshot
    spacing; empty when the spacing is not uniform (no interpolation).
    Returns ((h, om_rho, om_mu), (k, om_rho, om_mu)).
    """
    grid = traj.problem.grid
    n, dx = grid.n_cells, grid.dx
    times = traj.times
    rho = np.stack([s.rho.values for s in traj.snapshots])
    mu = np.stack([s.mu.values for s in traj.snapshots])

    if len(times) > 1:
        widths = np.diff(times)
        w_trap = np.zeros_like(times)
        w_trap[:-1] += 0.5 * widths
        w_trap[1:] += 0.5 * widths
    else:
        w_trap = np.zeros(1)

    space_lags = _dyadic_lags(n // 4)
    h_vals = np.array([m * dx for m in space_lags])
    om_space = {"rho": [], "mu": []}
    for m in space_lags:
        for name, dens in (("rho", rho), ("mu", mu)):
            diff = np.sum(np.abs(np.roll(dens, -m, axis=1) - dens), axis=1) * dx
            om_space[name].append(float(np.sum(w_trap * diff)))

    nt = len(times)
    uniform = nt > 1 and np.allclose(np.diff(times), times[1] - times[0],
                                     rtol=1e-9, atol=1e-12)
    if uniform:
        spacing = times[1] - times[0]
        t_lags = _dyadic_lags(nt - 1)
        k_vals = np.array([ell * spacing for ell in t_lags])
        om_time = {"rho": [], "mu": []}
        for ell in t_lags:
            for name, dens in (("rho", rho), ("mu", mu)):
                diff = np.sum(np.abs(dens[ell:] - dens[:-ell]), axis=1) * dx
                om_time[name].append(float(np.sum(diff) * spacing))
    else:
        k_vals = np.zeros(0)
        om_time = {"rho": [], "mu": []}

    return ((h_vals, np.array(om_space["rho"]), np.array(om_space["mu"])),
            (k_vals, np.array(om_time["rho"]), np.array(om_time["mu"])))


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class DiagnosticsReport:
    times: np.ndarray
    mass_rho: np.ndarray
    mass_mu: np.ndarray
    entropy: np.ndarray
    energy: np.ndarray
    diss_entropy: np.ndarray
    diss_beta_a: np.ndarray
    diss_beta_1ma: np.ndarray
    fisher_log: np.ndarray
    bv_r: np.ndarray
    bv_u: np.ndarray
    norm_S_2ma: np.ndarray
    sup_S_pow: np.ndarray
    h_minus_one: np.ndarray
    omega_space_h: np.ndarray
    omega_space_rho: np.ndarray
    omega_space_mu: np.ndarray
    omega_time_k: np.ndarray
    omega_time_rho: np.ndarray
    omega_time_mu: np.ndarray
    residuals: tuple[ResidualRow, ...]
    residual_max: float
    clamp_events: int


def diss_entropy_rate(state: State, problem: ProblemSpec) -> float:
    """Entropy dissipation int pressure_slope(S) |grad S|^2 with S averaged
    onto interfaces."""
    nl = problem.nonlinearity
    dx = state.grid.dx
    S = state.rho.values + state.mu.values
    s_int = 0.5 * (S + np.roll(S, -1))
    g = _grad_vals(S, dx)
    return float(np.sum(nl.pressure_slope(s_int) * g * g) * dx)


def build_report(traj: Trajectory, bank: TestFunctionBank | None = None,
                 with_residuals: bool = True, with_moduli: bool = True
                 ) -> DiagnosticsReport:
    problem = traj.problem
    alpha = problem.nonlinearity.alpha
    cols = {name: [] for name in
            ("mass_rho", "mass_mu", "entropy", "energy", "diss_entropy",
             "diss_beta_a", "diss_beta_1ma", "fisher_log", "bv_r", "bv_u",
             "norm_S_2ma", "sup_S_pow", "h_minus_one")}
    for s in traj.snapshots:
        cols["mass_rho"].append(integrate(s.rho))
        cols["mass_mu"].append(integrate(s.mu))
        cols["entropy"].append(entropy(s))
        cols["energy"].append(energy(s, problem))
        cols["diss_entropy"].append(diss_entropy_rate(s, problem))
        cols["diss_beta_a"].append(dissipation_beta(s, problem, alpha).dissipation)
        cols["diss_beta_1ma"].append(
            dissipation_beta(s, problem, 1.0 - alpha).dissipation)
        r, u = bv_norms(s, problem)
        cols["bv_r"].append(r)
        cols["bv_u"].append(u)
        leb = lebesgue_norms(s, problem)
        cols["norm_S_2ma"].append(leb.norm_S_2ma)
        cols["sup_S_pow"].append(leb.sup_S_pow)
        cols["fisher_log"].append(leb.fisher_log)
        cols["h_minus_one"].append(leb.h_minus_one)

    if with_moduli:
        (h, osr, osm), (k, otr, otm) = equicontinuity_moduli(traj)
    else:
        h = osr = osm = k = otr = otm = np.zeros(0)

    if with_residuals and len(traj.snapshots) >= 2:
        if bank is None:
            bank = make_test_bank(problem.grid, problem.t_final,
                                  k_max=min(8, problem.grid.n_cells // 4))
        rows, res_max = weak_residual(traj, bank)
    else:
        rows, res_max = (), float("nan")

    return DiagnosticsReport(
        times=traj.times,
        omega_space_h=h, omega_space_rho=osr, omega_space_mu=osm,
        omega_time_k=k, omega_time_rho=otr, omega_time_mu=otm,
        residuals=rows, residual_max=res_max,
        clamp_events=int(sum(rec.clamps for rec in traj.step_log)),
        **{name: np.array(vals) for name, vals in cols.items()},
    )
