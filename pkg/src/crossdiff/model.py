"""Problem data: the fast-diffusion nonlinearity family, trigonometric
potential pairs with exact derivative tables, and validated initial data.

The nonlinearity is the power family with exponent alpha in (0, 1]:

    kirchhoff(s)   = s^alpha            (aggregate diffusion flux potential)
    diffusivity(s) = alpha s^(alpha-1)  (= s * pressure_slope(s))
    pressure(s)    = log s                       for alpha = 1
                   = -(alpha/(1-alpha)) s^(alpha-1)  for alpha < 1
    energy_density(s) = s log s - s     (alpha = 1),  s^alpha/(alpha-1) else
    shift_profile(s)  = -s^(1-alpha)/alpha^2  (constant -1 when alpha = 1)

The pressure integration constant is fixed so pressure(1) = 0 for alpha = 1
and pressure(+inf) = 0 for alpha < 1; only its gradient enters the dynamics.
All evaluations clamp the argument below at s_floor, a numerical guard for
the singular derivatives near zero density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, integrate

Mode = tuple[int, float, float]  # (wavenumber k, cosine coeff, sine coeff)


@dataclass(frozen=True)
class Nonlinearity:
    alpha: float
    s_floor: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha out of range (0,1]: got {self.alpha}")
        if not (self.s_floor > 0.0):
            raise ValueError("s_floor must be positive")

    def _clamped(self, s):
        return np.maximum(np.asarray(s, dtype=float), self.s_floor)

    def clamp_count(self, s) -> int:
        """Number of entries that would be clamped up to s_floor."""
        return int(np.count_nonzero(np.asarray(s, dtype=float) < self.s_floor))

    def energy_density(self, s):
        s = self._clamped(s)
        if self.alpha == 1.0:
            return s * np.log(s) - s
        return s**self.alpha / (self.alpha - 1.0)

    def pressure(self, s):
        s = self._clamped(s)
        if self.alpha == 1.0:
            return np.log(s)
        return -(self.alpha / (1.0 - self.alpha)) * s ** (self.alpha - 1.0)

    def pressure_slope(self, s):
        s = self._clamped(s)
        return self.alpha * s ** (self.alpha - 2.0)

    def kirchhoff(self, s):
        s = self._clamped(s)
        return s**self.alpha

    def diffusivity(self, s):
        s = self._clamped(s)
        return self.alpha * s ** (self.alpha - 1.0)

    def shift_profile(self, s):
        s = self._clamped(s)
        if self.alpha == 1.0:
            return np.full_like(s, -1.0)
        return -(s ** (1.0 - self.alpha)) / self.alpha**2

    def shift_profile_prime(self, s):
        s = self._clamped(s)
        if self.alpha == 1.0:
            return np.zeros_like(s)
        return -(1.0 - self.alpha) * s ** (-self.alpha) / self.alpha**2


def _trig_eval(modes, x: np.ndarray, order: int) -> np.ndarray:
    """order-th exact derivative of sum_k a cos(2 pi k x) + b sin(2 pi k x)."""
    out = np.zeros_like(x)
    for k, a, b in modes:
        w = 2.0 * np.pi * k
        ca, cb = float(a), float(b)
        for _ in range(order):
            # d/dx [ca cos(wx) + cb sin(wx)] = (cb w) cos(wx) + (-ca w) sin(wx)
            ca, cb = w * cb, -w * ca
        out += ca * np.cos(w * x) + cb * np.sin(w * x)
    return out


def _check_modes(modes, grid: GridSpec, name: str) -> tuple[Mode, ...]:
    checked = []
    for mode in modes:
        k, a, b = mode
        k = int(k)
        if k < 0:
            raise ValueError(f"{name}: negative wavenumber {k}")
        if k > grid.n_cells // 4:
            raise ValueError(
                f"{name}: mode exceeds n/4 (k={k}, n={grid.n_cells})"
            )
        checked.append((k, float(a), float(b)))
    return tuple(checked)


@dataclass(frozen=True)
class PotentialPair:
    """Two C^3 potentials given by finite trigonometric sums, with exact
    derivative tables sampled at cell centers and interfaces.

    v = (V' + W')/2 and w = (V' - W')/2 are the half-sum/half-difference
    drift fields.  w_fd_int is the two-point gradient of the cell samples
    of (V - W)/2; it is the interface shift used by the shifted log-ratio
    gradient so that the alpha = 1 collapse onto grad(r + V - W) is exact
    at the discrete level.
    """

    grid: GridSpec
    modes_V: tuple[Mode, ...]
    modes_W: tuple[Mode, ...]
    V_cells: np.ndarray
    W_cells: np.ndarray
    V_int: np.ndarray
    W_int: np.ndarray
    dV_cells: np.ndarray
    dW_cells: np.ndarray
    dV_int: np.ndarray
    dW_int: np.ndarray
    d2V_cells: np.ndarray
    d2W_cells: np.ndarray
    d3V_cells: np.ndarray
    d3W_cells: np.ndarray
    v_int: np.ndarray
    w_int: np.ndarray
    dw_int: np.ndarray
    w_fd_int: np.ndarray
    sup_dV: float
    sup_dW: float


def build_potentials(modes_V, modes_W, grid: GridSpec) -> PotentialPair:
    """Assemble all potential tables by term-wise differentiation (no
    numerical differentiation except the dedicated two-point w_fd_int)."""
    mv = _check_modes(modes_V, grid, "V")
    mw = _check_modes(modes_W, grid, "W")
    xc = grid.cell_centers()
    xi = grid.interfaces()

    tables = {}
    for name, modes in (("V", mv), ("W", mw)):
        tables[f"{name}_cells"] = _trig_eval(modes, xc, 0)
        tables[f"{name}_int"] = _trig_eval(modes, xi, 0)
        tables[f"d{name}_cells"] = _trig_eval(modes, xc, 1)
        tables[f"d{name}_int"] = _trig_eval(modes, xi, 1)
        tables[f"d2{name}_cells"] = _trig_eval(modes, xc, 2)
        tables[f"d3{name}_cells"] = _trig_eval(modes, xc, 3)

    v_int = 0.5 * (tables["dV_int"] + tables["dW_int"])
    w_int = 0.5 * (tables["dV_int"] - tables["dW_int"])
    dw_int = 0.5 * (_trig_eval(mv, xi, 2) - _trig_eval(mw, xi, 2))
    half_diff = 0.5 * (tables["V_cells"] - tables["W_cells"])
    w_fd_int = (np.roll(half_diff, -1) - half_diff) / grid.dx
    sup_dV = float(max(np.max(np.abs(tables["dV_cells"]), initial=0.0),
                       np.max(np.abs(tables["dV_int"]), initial=0.0)))
    sup_dW = float(max(np.max(np.abs(tables["dW_cells"]), initial=0.0),
                       np.max(np.abs(tables["dW_int"]), initial=0.0)))

    for arr in tables.values():
        arr.setflags(write=False)
    for arr in (v_int, w_int, dw_int, w_fd_int):
        arr.setflags(write=False)

    return PotentialPair(
        grid=grid, modes_V=mv, modes_W=mw,
        v_int=v_int, w_int=w_int, dw_int=dw_int, w_fd_int=w_fd_int,
        sup_dV=sup_dV, sup_dW=sup_dW, **tables,
    )


@dataclass(frozen=True)
class InitialData:
    rho0: Field
    mu0: Field
    entropy0: float
    log_ratio_bv0: float


def validate_initial(rho0: Field, mu0: Field) -> InitialData:
    """Check strict positivity and record the entropy and the total
    variation of log(rho0/mu0) of the initial pair."""
    if rho0.grid != mu0.grid:
        raise ValueError("initial fields live on different grids")
    for name, f in (("rho0", rho0), ("mu0", mu0)):
        bad = np.flatnonzero(f.values <= 0.0)
        if bad.size:
            raise ValueError(f"{name}: nonpositive density at cell {bad[0]}")
    r = np.log(rho0.values) - np.log(mu0.values)
    entropy0 = integrate(Field(rho0.grid,
                               rho0.values * np.log(rho0.values)
                               + mu0.values * np.log(mu0.values)))
    log_ratio_bv0 = float(np.sum(np.abs(np.roll(r, -1) - r)))
    return InitialData(rho0, mu0, entropy0, log_ratio_bv0)


STEPPERS = ("explicit", "semi-implicit")


@dataclass(frozen=True)
class ProblemSpec:
    """A complete, validated problem: grid, model data, horizon and stepper
    policy.  snapshot_times must start at 0 and end at t_final."""

    grid: GridSpec
    nonlinearity: Nonlinearity
    potentials: PotentialPair
    initial: InitialData
    t_final: float
    snapshot_times: tuple[float, ...]
    eps_viscosity: float = 0.0
    stepper: str = "explicit"
    cfl_safety: float = 0.5

    def __post_init__(self):
        if self.t_final < 0.0:
            raise ValueError("t_final must be nonnegative")
        if self.eps_viscosity < 0.0:
            raise ValueError("eps_viscosity must be nonnegative")
        if self.stepper not in STEPPERS:
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.potentials.grid != self.grid or self.initial.rho0.grid != self.grid:
            raise ValueError("grid mismatch between problem components")
        ts = tuple(float(t) for t in self.snapshot_times)
        if not ts:
            raise ValueError("snapshot_times must be nonempty")
        tol = 1e-12 * max(1.0, self.t_final)
        if abs(ts[0]) > tol:
            raise ValueError("snapshot_times must start at 0")
        if abs(ts[-1] - self.t_final) > tol:
            raise ValueError("snapshot_times must end at t_final")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        object.__setattr__(self, "snapshot_times", ts)
