"""Conservative finite differences and IMEX time stepping on a truncated line.

The equation u_t = (a_L(x) u_x)_x + f_L(x, u) is discretized in flux form with
face diffusivities evaluated analytically at cell midpoints, Dirichlet values
pinned at both ends, implicit (backward Euler or Crank-Nicolson) diffusion and
explicit reaction.  One tridiagonal solve advances a step.  The implicit
Euler/explicit reaction combination is order-preserving whenever
dt * lip_k <= 1, which the configuration enforces with margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .profiles import ProblemInstance


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid whose extent is an integer number of periods L."""

    x_min: float
    x_max: float
    n: int
    h: float
    L: float
    a_face: np.ndarray  # diffusivity at the n-1 cell midpoints

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 nodes")
        if abs(self.h * (self.n - 1) - (self.x_max - self.x_min)) > 1e-9 * self.h:
            raise ValueError("h inconsistent with extent and node count")
        periods = (self.x_max - self.x_min) / self.L
        if abs(periods - round(periods)) > 1e-9:
            raise ValueError("domain extent must be an integer multiple of L")
        self.a_face.flags.writeable = False

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    @property
    def nodes_per_period(self) -> int:
        return int(round(self.L / self.h))


def build_grid(inst: ProblemInstance, halfwidth: float,
               nodes_per_period: int = 64, center: float = 0.0) -> Grid1D:
    """Grid of spacing L/nodes_per_period covering at least [c-W, c+W].

    The extent is rounded up to whole periods and the left edge placed on an
    integer multiple of L so node index mod nodes_per_period fixes the cell
    coordinate y.
    """
    L = inst.L
    h = L / nodes_per_period
    m = max(1, int(math.ceil(halfwidth / L)))
    k0 = int(math.floor(center / L))
    x_min = (k0 - m) * L
    x_max = (k0 + 1 + m) * L
    n = int(round((x_max - x_min) / h)) + 1
    mids = x_min + h * (np.arange(n - 1) + 0.5)
    a_face = np.asarray(inst.a_L(mids), dtype=float)
    return Grid1D(x_min=x_min, x_max=x_max, n=n, h=h, L=L, a_face=a_face)


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray
    t: float

    def __post_init__(self):
        if self.values.shape != (self.grid.n,):
            raise ValueError("field shape does not match grid")
        self.values.flags.writeable = False

    def with_values(self, values: np.ndarray, t: float) -> "Field":
        return Field(self.grid, np.array(values, dtype=float), t)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    scheme: str = "imex"          # "imex" (backward Euler diffusion) or "cn"
    u_left: float = 1.0
    u_right: float = 0.0
    stride: int = 20

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.scheme not in ("imex", "cn"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


class Stepper:
    """Precomputed matrices for repeated steps of one instance on one grid."""

    def __init__(self, inst: ProblemInstance, grid: Grid1D, cfg: SolverConfig):
        if cfg.dt * inst.reaction.lip_k >= 0.5:
            raise SolverError(
                f"dt*K = {cfg.dt * inst.reaction.lip_k:.3g} >= 0.5 breaks the "
                "explicit reaction stability budget")
        self.inst = inst
        self.grid = grid
        self.cfg = cfg
        n, h = grid.n, grid.h
        af = grid.a_face
        # interior flux form: (a_{i+1/2}(u_{i+1}-u_i) - a_{i-1/2}(u_i-u_{i-1})) / h^2
        lower = np.zeros(n)
        diag = np.zeros(n)
        upper = np.zeros(n)
        lower[1:n-1] = af[0:n-2] / h**2
        upper[1:n-1] = af[1:n-1] / h**2
        diag[1:n-1] = -(af[0:n-2] + af[1:n-1]) / h**2
        self._diff = (lower, diag, upper)
        theta_imp = 1.0 if cfg.scheme == "imex" else 0.5
        self._theta_imp = theta_imp
        ab = np.zeros((3, n))
        ab[0, 1:] = -cfg.dt * theta_imp * upper[:-1]
        ab[1, :] = 1.0 - cfg.dt * theta_imp * diag
        ab[2, :-1] = -cfg.dt * theta_imp * lower[1:]
        # Dirichlet rows: identity
        ab[1, 0] = 1.0
        ab[0, 1] = 0.0
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        self._ab = ab
        self._y_nodes = np.mod(grid.nodes / inst.L, 1.0)
        self.min_seen = math.inf
        self.max_seen = -math.inf

    def _apply_diffusion(self, u: np.ndarray) -> np.ndarray:
        lower, diag, upper = self._diff
        out = diag * u
        out[1:-1] += lower[1:-1] * u[:-2] + upper[1:-1] * u[2:]
        out[0] = 0.0
        out[-1] = 0.0
        return out

    def reaction_at(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.inst.reaction.f(self._y_nodes, u), dtype=float)

    def step_values(self, u: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        rhs = u + cfg.dt * self.reaction_at(u)
        if self._theta_imp != 1.0:
            rhs += cfg.dt * (1.0 - self._theta_imp) * self._apply_diffusion(u)
        rhs[0] = cfg.u_left
        rhs[-1] = cfg.u_right
        out = solve_banded((1, 1), self._ab, rhs, check_finite=False,
                           overwrite_ab=False, overwrite_b=True)
        return out

    def run(self, u: np.ndarray, t0: float, n_steps: int,
            on_step: Callable | None = None,
            callback_every: int | None = None) -> tuple[np.ndarray, float]:
        """Advance n_steps; on_step(k, t, u) fires every callback_every steps
        (default: the configuration stride) and on the final step."""
        dt = self.cfg.dt
        every = self.cfg.stride if callback_every is None else callback_every
        for k in range(1, n_steps + 1):
            u = self.step_values(u)
            if not np.all(np.isfinite(u)):
                raise SolverError(f"non-finite value at step {k} (t={t0 + k * dt:.6g})")
            self.min_seen = min(self.min_seen, float(u.min()))
            self.max_seen = max(self.max_seen, float(u.max()))
            if on_step is not None and (k % every == 0 or k == n_steps):
                on_step(k, t0 + k * dt, u)
        return u, t0 + n_steps * dt


def step(field: Field, inst: ProblemInstance, cfg: SolverConfig) -> Field:
    """One time step; diffusion implicit, reaction explicit on the extended f."""
    st = Stepper(inst, field.grid, cfg)
    u = st.step_values(np.array(field.values, dtype=float))
    if not np.all(np.isfinite(u)):
        raise SolverError(f"non-finite value produced at t={field.t + cfg.dt:.6g}")
    return Field(field.grid, u, field.t + cfg.dt)


def evolve(field: Field, inst: ProblemInstance, cfg: SolverConfig, t_final: float,
           callbacks: Sequence[Callable] = ()) -> Field:
    """Step repeatedly until t_final; callbacks(field) fire at the stride."""
    if t_final < field.t:
        raise ValueError("t_final must not precede the field time")
    n_steps = int(round((t_final - field.t) / cfg.dt))
    st = Stepper(inst, field.grid, cfg)

    def on_step(k, t, u):
        if callbacks:
            snap = Field(field.grid, u.copy(), t)
            for cb in callbacks:
                cb(snap)

    u, t = st.run(np.array(field.values, dtype=float), field.t, n_steps,
                  on_step if callbacks else None)
    return Field(field.grid, u, t)


def residual_stationary(field: Field, inst: ProblemInstance) -> float:
    """Sup-norm of (a_L u')' + f_L at interior nodes, same stencil as step()."""
    g = field.grid
    u = field.values
    af = g.a_face
    diff = (af[1:] * (u[2:] - u[1:-1]) - af[:-1] * (u[1:-1] - u[:-2])) / g.h**2
    y = np.mod(g.nodes[1:-1] / inst.L, 1.0)
    f = np.asarray(inst.reaction.f(y, u[1:-1]), dtype=float)
    return float(np.max(np.abs(diff + f)))


def excursion(field: Field, lo: float = -0.1, hi: float = 1.1) -> float:
    """How far the field leaves [lo, hi]; 0.0 when it stays inside."""
    v = field.values
    return float(max(0.0, lo - v.min(), v.max() - hi))


def front_initial_datum(grid: Grid1D, style: str = "tanh",
                        interface: float = 0.0, width: float | None = None) -> Field:
    """Monotone front-like datum: 1 left of the interface, 0 right of it."""
    if not (grid.x_min < interface < grid.x_max):
        raise ValueError("interface must lie inside the grid")
    x = grid.nodes
    if width is None:
        width = 8.0 * grid.h
    width = max(width, 4.0 * grid.h)
    if style == "step":
        g = np.where(x <= interface, 1.0, 0.0)
        # soften over 4h so the transition is resolved
        band = np.abs(x - interface) <= 2.0 * grid.h
        g = np.where(band, 0.5 - (x - interface) / (4.0 * grid.h), g)
    elif style == "ramp":
        g = np.clip(0.5 - (x - interface) / width, 0.0, 1.0)
    elif style == "tanh":
        g = 0.5 * (1.0 - np.tanh((x - interface) / (width / 2.0)))
    else:
        raise ValueError(f"unknown initial datum style {style!r}")
    g = np.minimum.accumulate(g)  # enforce nonincreasing node-to-node
    g[0] = 1.0
    g[-1] = 0.0
    return Field(grid, g, 0.0)


def write_snapshot(path, field: Field, extras: dict | None = None) -> None:
    """Dump `x u` lines with a `# t=<time> L=<period>` header."""
    head = f"# t={field.t!r} L={field.grid.L!r}"
    if extras:
        head += "".join(f" {k}={v}" for k, v in extras.items())
    with open(path, "w") as fh:
        fh.write(head + "\n")
        for x, u in zip(field.grid.nodes, field.values):
            fh.write(f"{x:.12g} {u:.12g}\n")


def read_snapshot(path):
    """Read a snapshot dump; returns (x, u, header dict)."""
    with open(path) as fh:
        header = fh.readline().strip()
    meta = {}
    for tok in header.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            try:
                meta[k] = float(v)
            except ValueError:
                meta[k] = v
    data = np.loadtxt(path)
    return data[:, 0], data[:, 1], meta
