"""Conservative, positivity-preserving time integration of the two-species
cross-diffusion system

    d/dt rho = d/dx(rho d/dx pressure(S)) + d/dx(rho V') + eps rho_xx
    d/dt mu  = d/dx(mu  d/dx pressure(S)) + d/dx(mu  W') + eps mu_xx

with S = rho + mu.  The scheme advances the species pair (conservation and
positivity are then structural); the S and r equations are verified as
diagnostics, not used for stepping.

Flux convention: with velocity a = grad(pressure(S)) + V' at interfaces,
the update is rho <- rho + dt * div(F),  F = rho_up * a + eps * grad(rho),
where rho_up is the donor cell of the transport direction -a (rho_i when
a < 0, rho_{i+1} otherwise).  The semi-implicit stepper keeps only the
potential drift explicit and solves the stiff aggregate diffusion
S - dt * Lap(kirchhoff(S) + eps S) = S_drift by damped Newton, splitting
the diffusive interface flux between the species by their donor-cell
mobility fractions (exactly conservative per species).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .grid import Field
from .model import ProblemSpec

NEWTON_TOL = 1e-11
NEWTON_MAXIT = 50
_VEL_FLOOR = 1e-30  # guards the advective CFL division


class SolverError(RuntimeError):
    """Raised on positivity violation or Newton breakdown; carries time."""


@dataclass(frozen=True)
class State:
    t: float
    rho: Field
    mu: Field

    def __post_init__(self):
        if self.rho.grid != self.mu.grid:
            raise ValueError("rho and mu live on different grids")

    @property
    def grid(self):
        return self.rho.grid


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    clamps: int
    newton_iters: int


@dataclass(frozen=True)
class Trajectory:
    problem: ProblemSpec
    snapshots: tuple[State, ...]
    step_log: tuple[StepRecord, ...]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def _grad(v: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(v, -1) - v) / dx


def _div(g: np.ndarray, dx: float) -> np.ndarray:
    return (g - np.roll(g, 1)) / dx


def _donor(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    # donor cell of the transport direction -a at interface i
    return np.where(a < 0.0, v, np.roll(v, -1))


def interface_velocities(state: State, problem: ProblemSpec) -> tuple[Field, Field]:
    """Species velocities a_rho = grad(pressure(S)) + V', a_mu likewise with W'."""
    nl, pot = problem.nonlinearity, problem.potentials
    dx = problem.grid.dx
    S = state.rho.values + state.mu.values
    dp = _grad(nl.pressure(S), dx)
    return (Field(problem.grid, dp + pot.dV_int),
            Field(problem.grid, dp + pot.dW_int))


def cfl_dt(state: State, problem: ProblemSpec) -> float:
    """Stable step: advective dx/max|a|, plus the diffusive dx^2 bound for
    the explicit stepper (the semi-implicit one is advectively limited only)."""
    nl = problem.nonlinearity
    dx = problem.grid.dx
    a_rho, a_mu = interface_velocities(state, problem)
    amax = max(np.max(np.abs(a_rho.values)), np.max(np.abs(a_mu.values)), _VEL_FLOOR)
    dt = dx / amax
    if problem.stepper == "explicit":
        S = state.rho.values + state.mu.values
        diff_max = float(np.max(nl.diffusivity(S))) + problem.eps_viscosity
        dt = min(dt, dx * dx / (2.0 * diff_max))
    return problem.cfl_safety * dt


def _check_positive(v: np.ndarray, t: float, name: str) -> None:
    if not np.all(np.isfinite(v)):
        raise SolverError(f"positivity violated: non-finite {name} at t={t:.6g}")
    if np.any(v <= 0.0):
        i = int(np.flatnonzero(v <= 0.0)[0])
        raise SolverError(f"positivity violated: {name} at cell {i}, t={t:.6g}")


def _explicit_update(state: State, dt: float, problem: ProblemSpec):
    nl, pot = problem.nonlinearity, problem.potentials
    dx = problem.grid.dx
    eps = problem.eps_viscosity
    rho, mu = state.rho.values, state.mu.values
    S = rho + mu
    clamps = nl.clamp_count(S)
    dp = _grad(nl.pressure(S), dx)
    new = []
    for v, dpot in ((rho, pot.dV_int), (mu, pot.dW_int)):
        a = dp + dpot
        flux = _donor(v, a) * a + eps * _grad(v, dx)
        new.append(v + dt * _div(flux, dx))
    t_new = state.t + dt
    _check_positive(new[0], t_new, "rho")
    _check_positive(new[1], t_new, "mu")
    g = problem.grid
    return State(t_new, Field(g, new[0]), Field(g, new[1])), clamps, 0


def _implicit_diffusion(s_rhs: np.ndarray, dt: float, problem: ProblemSpec):
    """Solve S - dt * Lap(kirchhoff(S) + eps S) = s_rhs by damped Newton."""
    nl = problem.nonlinearity
    eps = problem.eps_viscosity
    dx = problem.grid.dx
    n = s_rhs.size
    c = dt / (dx * dx)
    idx = np.arange(n)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([(idx - 1) % n, idx, (idx + 1) % n])

    def residual(s):
        q = nl.kirchhoff(s) + eps * s
        return s - c * (np.roll(q, -1) - 2.0 * q + np.roll(q, 1)) - s_rhs

    s = s_rhs.copy()
    res = residual(s)
    norm = float(np.max(np.abs(res)))
    clamps = 0
    for it in range(NEWTON_MAXIT):
        if norm <= NEWTON_TOL:
            return s, it, clamps
        d = nl.diffusivity(s) + eps
        vals = np.concatenate([-c * d[(idx - 1) % n],
                               1.0 + 2.0 * c * d,
                               -c * d[(idx + 1) % n]])
        jac = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        delta = spsolve(jac, -res)
        lam = 1.0
        for _ in range(30):
            trial = s + lam * delta
            clamps += nl.clamp_count(trial)
            res_t = residual(trial)
            norm_t = float(np.max(np.abs(res_t)))
            if norm_t < norm:
                s, res, norm = trial, res_t, norm_t
                break
            lam *= 0.5
        else:
            raise SolverError(
                f"newton stalled, residual {norm:.3e} after {it + 1} iterations")
    raise SolverError(f"newton did not converge, residual {norm:.3e}")


def _semi_implicit_update(state: State, dt: float, problem: ProblemSpec):
    nl, pot = problem.nonlinearity, problem.potentials
    dx = problem.grid.dx
    eps = problem.eps_viscosity
    rho, mu = state.rho.values, state.mu.values
    t_new = state.t + dt

    # explicit upwind potential drift
    rho_s = rho + dt * _div(_donor(rho, pot.dV_int) * pot.dV_int, dx)
    mu_s = mu + dt * _div(_donor(mu, pot.dW_int) * pot.dW_int, dx)
    _check_positive(rho_s, t_new, "rho")
    _check_positive(mu_s, t_new, "mu")

    s_star = rho_s + mu_s
    clamps = nl.clamp_count(s_star)
    s_new, iters, nclamps = _implicit_diffusion(s_star, dt, problem)
    clamps += nclamps

    # split the aggregate diffusive flux by donor-cell mobility fractions
    g_diff = _grad(nl.kirchhoff(s_new) + eps * s_new, dx)
    s_up = _donor(s_star, g_diff)
    rho_new = rho_s + dt * _div((_donor(rho_s, g_diff) / s_up) * g_diff, dx)
    mu_new = mu_s + dt * _div((_donor(mu_s, g_diff) / s_up) * g_diff, dx)
    _check_positive(rho_new, t_new, "rho")
    _check_positive(mu_new, t_new, "mu")
    g = problem.grid
    return State(t_new, Field(g, rho_new), Field(g, mu_new)), clamps, iters


def advance(state: State, dt: float, problem: ProblemSpec):
    """One step with the problem's stepper; returns (state, StepRecord)."""
    if dt <= 0.0:
        raise SolverError(f"nonpositive dt {dt}")
    if problem.stepper == "explicit":
        new, clamps, iters = _explicit_update(state, dt, problem)
    else:
        new, clamps, iters = _semi_implicit_update(state, dt, problem)
    return new, StepRecord(state.t, dt, clamps, iters)


def step_explicit(state: State, dt: float, problem: ProblemSpec) -> State:
    return _explicit_update(state, dt, problem)[0]


def step_semi_implicit(state: State, dt: float, problem: ProblemSpec) -> State:
    return _semi_implicit_update(state, dt, problem)[0]


def run(problem: ProblemSpec) -> Trajectory:
    """Integrate from t = 0 to t_final with adaptive CFL steps, truncating
    dt to land exactly on every snapshot time (never interpolating)."""
    state = State(0.0, problem.initial.rho0, problem.initial.mu0)
    snapshots = [state]
    log: list[StepRecord] = []
    for target in problem.snapshot_times[1:]:
        while state.t < target:
            remaining = target - state.t
            dt = cfl_dt(state, problem)
            landing = dt >= remaining
            if landing:
                dt = remaining
            try:
                state, rec = advance(state, dt, problem)
            except SolverError as err:
                raise SolverError(f"{err} (while integrating to t={target:.6g})") from err
            log.append(rec)
            if landing:
                state = replace(state, t=target)
        snapshots.append(state)
    return Trajectory(problem, tuple(snapshots), tuple(log))
