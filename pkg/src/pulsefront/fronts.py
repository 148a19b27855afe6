"""Pulsating fronts by long-time evolution: speeds, profiles, classification.

A front-like datum is evolved until the orbit satisfies, to tolerance, the
defining relation u(t + L/c, x + L) = u(t, x) of a pulsating front, or until
the interface demonstrably pins (stationary branch), or until the budget runs
out (inconclusive, never silently a front).  Speeds are measured two ways: a
least-squares fit of the half-level position, and L/T* with T* minimizing the
space-time shift defect.  The profile phi(xi, y) is rebuilt from one period of
snapshots by reading u at t = (x - xi)/c on nodes x whose cell coordinate is y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .profiles import HomogenizedData, ProblemInstance, homogenized_data
from .solver import (Field, Grid1D, SolverConfig, Stepper, build_grid,
                     front_initial_datum, residual_stationary)


class FrontNotConverged(RuntimeError):
    """Budget exhausted with neither the pulsating nor the stationary criterion met."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Budget:
    t_max: float = 600.0


@dataclass(frozen=True)
class FrontRunConfig:
    nodes_per_period: int = 64
    tail_floor: float = 1e-8
    halfwidth: float | None = None       # override the decay-based domain size
    dt: float | None = None              # override the derived time step
    dt_cap: float = 0.05
    accuracy_cfl: float = 0.25           # target |c| dt <= accuracy_cfl * h
    reaction_budget: float = 0.4         # dt <= reaction_budget / lip_k
    tol_puls: float = 1e-3
    tol_stat: float = 1e-6
    stat_window: float = 100.0
    stat_disp_frac: float = 0.1          # displacement threshold, units of h
    transient_factor: float = 20.0       # times L/|c|
    transient_min: float = 50.0
    settle_time: float = 10.0
    capture_snapshots: int = 192
    level: float = 0.5
    initial_style: str = "tanh"          # step | ramp | tanh
    recenter_frac: float = 0.15          # interface drift allowance, x halfwidth
    defect_margin_frac: float = 0.15     # per-side exclusion of the defect window


# ---------------------------------------------------------------------------
# measurement helpers
# ---------------------------------------------------------------------------

def level_position(x: np.ndarray, u: np.ndarray, level: float = 0.5):
    """Outermost crossing of the level (largest x with u >= level).

    Returns (position, n_crossings) with sub-grid linear interpolation, or
    (None, 0) when the level is not attained.
    """
    above = u >= level
    if not above.any() or above.all():
        return None, 0
    n_cross = int(np.count_nonzero(np.diff(above.astype(int)) != 0))
    i = int(np.max(np.nonzero(above)[0]))
    if i == len(u) - 1:
        return float(x[-1]), n_cross
    u0, u1 = u[i], u[i + 1]
    frac = (u0 - level) / (u0 - u1) if u0 != u1 else 0.0
    return float(x[i] + frac * (x[i + 1] - x[i])), n_cross


@dataclass
class SnapshotSeries:
    """Uniformly spaced snapshots of one capture window on a frozen grid."""

    t0: float
    dt_snap: float
    U: np.ndarray          # (k, n)
    grid: Grid1D
    x_offset: float = 0.0

    @property
    def t1(self) -> float:
        return self.t0 + (self.U.shape[0] - 1) * self.dt_snap

    def u_at(self, t: float) -> np.ndarray:
        s = (t - self.t0) / self.dt_snap
        k = self.U.shape[0]
        s = min(max(s, 0.0), k - 1 - 1e-12)
        i = int(s)
        w = s - i
        return (1.0 - w) * self.U[i] + w * self.U[i + 1]

    def shift_defect(self, t_ref: float, T: float, margin_nodes: int,
                     shift: int = 1) -> float:
        """sup over interior nodes of |u(t_ref + T, x + shift*L) - u(t_ref, x)|."""
        m0 = self.grid.nodes_per_period
        n = self.grid.n
        a = self.u_at(t_ref)
        b = self.u_at(t_ref + T)
        lo = margin_nodes
        hi = n - margin_nodes - m0
        if hi <= lo:
            raise ValueError("domain too small for the defect window")
        if shift >= 0:
            return float(np.max(np.abs(b[lo + m0:hi + m0] - a[lo:hi])))
        return float(np.max(np.abs(b[lo:hi] - a[lo + m0:hi + m0])))

    def time_monotonicity_defect(self) -> float:
        """How far the capture is from being nondecreasing in t (0 if monotone)."""
        d = np.diff(self.U, axis=0)
        return float(max(0.0, -float(d.min())))


def _golden_min(f: Callable[[float], float], lo: float, hi: float,
                tol: float, max_iter: int = 200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def min_shift_defect(snaps: SnapshotSeries, t_ref: float, t_hat: float,
                     margin_nodes: int, shift: int = 1, rel_range: float = 0.25):
    """Minimize the pulsating defect over the time period T near t_hat > 0.

    Returns (T*, defect*, T-width over which the defect stays below twice the
    minimum), the last being a crude timing uncertainty.
    """
    t_lo = (1.0 - rel_range) * t_hat
    t_hi = min((1.0 + rel_range) * t_hat, snaps.t1 - t_ref)
    if t_hi <= t_lo:
        raise ValueError("capture window too short for period matching")
    ts = np.linspace(t_lo, t_hi, 61)
    ds = np.array([snaps.shift_defect(t_ref, T, margin_nodes, shift) for T in ts])
    j = int(np.argmin(ds))
    lo = ts[max(0, j - 1)]
    hi = ts[min(len(ts) - 1, j + 1)]
    T_star, d_star = _golden_min(
        lambda T: snaps.shift_defect(t_ref, T, margin_nodes, shift),
        lo, hi, tol=1e-7 * t_hat)
    below = ds <= 2.0 * max(d_star, 1e-15)
    width = (ts[1] - ts[0]) * max(1, int(np.count_nonzero(below)))
    return float(T_star), float(d_star), float(width)


@dataclass(frozen=True)
class SpeedEstimate:
    c_level: float
    c_period: float | None
    unc_level: float
    unc_period: float | None
    window: tuple
    multi_crossing: bool = False

    @property
    def uncertainty(self) -> float:
        u = self.unc_level
        if self.unc_period is not None:
            u += self.unc_period
        return u

    @property
    def consistent(self) -> bool:
        if self.c_period is None:
            return True
        return abs(self.c_level - self.c_period) <= max(self.uncertainty, 1e-12)


def fit_line(x: np.ndarray, y: np.ndarray):
    """Least-squares slope of y against x with its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x - x.mean()
    denom = float(np.dot(xm, xm))
    if denom == 0.0:
        return 0.0, math.inf
    c = float(np.dot(xm, y - y.mean()) / denom)
    resid = y - (y.mean() + c * xm)
    dof = max(len(x) - 2, 1)
    stderr = math.sqrt(float(np.dot(resid, resid)) / dof / denom)
    return c, stderr


def measure_speed(times: Sequence[float], positions: Sequence[float],
                  snaps: SnapshotSeries | None = None, L: float | None = None,
                  t_hat: float | None = None, shift: int = 1,
                  margin_nodes: int = 8, multi_crossing: bool = False,
                  min_samples: int = 20) -> SpeedEstimate:
    """Speed from the level trajectory, plus period matching when snapshots of
    a capture window are supplied (t_hat > 0 is the period guess L/|c|)."""
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if len(times) < min_samples:
        raise ValueError(f"need at least {min_samples} level samples, got {len(times)}")
    c_level, stderr = fit_line(times, positions)
    c_period = None
    unc_period = None
    if snaps is not None:
        if L is None or t_hat is None:
            raise ValueError("period matching needs L and a period guess t_hat")
        t_ref = snaps.t0 + 0.02 * (snaps.t1 - snaps.t0)
        T_star, _, width = min_shift_defect(snaps, t_ref, t_hat, margin_nodes, shift)
        c_period = shift * L / T_star
        unc_period = abs(L) * (0.25 * width + 0.25 * snaps.dt_snap) / T_star**2
    return SpeedEstimate(c_level=c_level, c_period=c_period,
                         unc_level=stderr + 1e-12, unc_period=unc_period,
                         window=(float(times[0]), float(times[-1])),
                         multi_crossing=multi_crossing)


# ---------------------------------------------------------------------------
# front solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontSolution:
    speed: float
    xi: np.ndarray
    y: np.ndarray
    phi: np.ndarray               # shape (len(xi), len(y))
    pulsating_error: float
    mu1_fit: float | None
    mu2_fit: float | None
    stationary: bool
    speed_estimate: SpeedEstimate | None
    replica_spread: float
    diagnostics: dict

    def phi_mean(self) -> np.ndarray:
        return self.phi.mean(axis=1)

    def interp(self, xi, y):
        """Bilinear interpolation of the lattice, periodic in y, clamped in xi."""
        xi = np.asarray(xi, dtype=float)
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        h = self.xi[1] - self.xi[0]
        s = np.clip((xi - self.xi[0]) / h, 0.0, len(self.xi) - 1 - 1e-12)
        i = s.astype(int)
        wi = s - i
        m = len(self.y)
        sy = y * m
        j = np.minimum(sy.astype(int), m - 1)
        wj = sy - j
        jp = (j + 1) % m
        p = self.phi
        return ((1 - wi) * ((1 - wj) * p[i, j] + wj * p[i, jp])
                + wi * ((1 - wj) * p[i + 1, j] + wj * p[i + 1, jp]))


def extract_profile(snaps: SnapshotSeries, c: float, L: float,
                    t_start: float, period: float, margin_nodes: int = 8):
    """Rebuild phi(xi, y) from snapshots spanning at least one time period.

    Returns (xi, y, phi, replica_spread).  Replicas of the same (xi, y) seen
    through different nodes are averaged and their spread reported.
    """
    grid = snaps.grid
    m0 = grid.nodes_per_period
    n = grid.n
    h = grid.h
    if c == 0.0:
        raise ValueError("profile extraction needs a nonzero speed")
    if snaps.t1 - t_start < period:
        raise ValueError("snapshots must cover one full period past t_start; "
                         f"have {snaps.t1 - t_start:.3g}, need {period:.3g}")
    t_lo = t_start
    t_hi = snaps.t1
    lo_node = margin_nodes
    hi_node = n - 1 - margin_nodes
    xs = grid.nodes
    xi_lo = xs[lo_node] - c * (t_lo if c > 0 else t_hi)
    xi_hi = xs[hi_node] - c * (t_hi if c > 0 else t_lo)
    p_lo = int(math.ceil((xi_lo - grid.x_min) / h - 1e-9))
    p_hi = int(math.floor((xi_hi - grid.x_min) / h + 1e-9))
    if p_hi - p_lo < 8:
        raise ValueError("capture window leaves no feasible profile range")
    ps = np.arange(p_lo, p_hi + 1)
    xi = grid.x_min + h * ps
    ys = np.arange(m0) / m0
    phi = np.zeros((len(ps), m0))
    spread = 0.0
    k_snap = snaps.U.shape[0]
    cdt = c / h
    for j in range(m0):
        acc = np.zeros(len(ps))
        cnt = np.zeros(len(ps))
        mn = np.full(len(ps), np.inf)
        mx = np.full(len(ps), -np.inf)
        q_a = ps + cdt * t_lo
        q_b = ps + cdt * t_hi
        q_min = np.minimum(q_a, q_b)
        q_max = np.maximum(q_a, q_b)
        m_first = np.ceil((q_min - j) / m0 - 1e-9).astype(int)
        m_last = np.floor((q_max - j) / m0 + 1e-9).astype(int)
        max_reps = int(np.max(m_last - m_first)) + 1
        for r in range(max(max_reps, 0)):
            mm = m_first + r
            q = j + mm * m0
            t = (q - ps) * h / c
            ok = (mm <= m_last) & (q >= lo_node) & (q <= hi_node) \
                & (t >= t_lo - 1e-9) & (t <= t_hi + 1e-9)
            if not ok.any():
                continue
            s = (t - snaps.t0) / snaps.dt_snap
            s = np.clip(s, 0.0, k_snap - 1 - 1e-12)
            i0 = s.astype(int)
            w = s - i0
            qq = np.clip(q, 0, n - 1)
            vals = (1.0 - w) * snaps.U[i0, qq] + w * snaps.U[i0 + 1, qq]
            acc[ok] += vals[ok]
            cnt[ok] += 1
            mn[ok] = np.minimum(mn[ok], vals[ok])
            mx[ok] = np.maximum(mx[ok], vals[ok])
        if not (cnt > 0).all():
            raise ValueError("insufficient snapshot coverage for some lattice points; "
                             "increase the capture span or snapshot count")
        phi[:, j] = acc / cnt
        multi = cnt > 1
        if multi.any():
            spread = max(spread, float(np.max(mx[multi] - mn[multi])))
    return xi, ys, phi, spread


def fit_tail_rates(xi: np.ndarray, prof: np.ndarray, floor: float = 1e-10,
                   ceiling: float = 1e-2, min_efolds: float = 3.0):
    """Log-linear decay rates of a front profile toward 0 (right) and 1 (left)."""
    out = []
    for vals, sign in ((prof, -1.0), (1.0 - prof, +1.0)):
        mask = (vals > floor) & (vals < ceiling)
        if np.count_nonzero(mask) < 5:
            raise ValueError("tail too short for a decay fit; enlarge the xi window")
        lv = np.log(vals[mask])
        if lv.max() - lv.min() < min_efolds:
            raise ValueError(
                f"tail spans only {lv.max() - lv.min():.2f} e-foldings (< {min_efolds}); "
                "enlarge the xi window")
        slope, _ = fit_line(xi[mask], lv)
        out.append(sign * slope)
    mu1, mu2 = out
    if mu1 <= 0 or mu2 <= 0:
        raise ValueError("non-positive fitted tail rate; profile not converged")
    return float(mu1), float(mu2)


def fit_decay_rates(front: FrontSolution, floor: float = 1e-10,
                    ceiling: float = 1e-2, min_efolds: float = 3.0):
    """Tail rates (mu1 toward 0, mu2 toward 1) of a front's mean profile."""
    return fit_tail_rates(front.xi, front.phi_mean(), floor, ceiling, min_efolds)


# ---------------------------------------------------------------------------
# scale estimates used to size grids and steps
# ---------------------------------------------------------------------------

def speed_scale(homog: HomogenizedData) -> float:
    """Dimensional speed estimate sqrt(2 a_H S) * asymmetry, S = max |fbar|.

    The asymmetry ratio |int fbar| / int |fbar| is scale-free, so the estimate
    tracks reaction amplitude as sqrt(S) like the true speed does.
    """
    u = np.linspace(0.0, 1.0, 513)
    fv = np.abs(np.asarray(homog.fbar(u), dtype=float))
    s = float(np.max(fv))
    if s <= 0.0:
        return 0.0
    total = float(np.trapezoid(fv, u))
    asym = abs(homog.i_fbar) / max(total, 1e-30)
    return math.sqrt(2.0 * homog.a_h * s) * min(asym, 1.0)


def decay_scale(homog: HomogenizedData, c_est: float) -> float:
    """Smallest linear tail rate of the two fronts tails at the estimated speed.

    The speed carries the sign of the reaction integral; the tail toward 0
    decays at the +c characteristic root of the state 0, the tail toward 1 at
    the -c root of the state 1.
    """
    a = homog.a_h
    c = math.copysign(abs(c_est), homog.i_fbar) if homog.i_fbar != 0.0 else 0.0
    q0, q1 = -homog.slope0, -homog.slope1
    mu1 = (c + math.sqrt(c * c + 4.0 * a * q0)) / (2.0 * a)
    mu2 = (-c + math.sqrt(c * c + 4.0 * a * q1)) / (2.0 * a)
    return 0.9 * min(mu1, mu2)


def default_halfwidth(homog: HomogenizedData, cfg: FrontRunConfig) -> float:
    if cfg.halfwidth is not None:
        return cfg.halfwidth
    mu = max(decay_scale(homog, speed_scale(homog)), 1e-3)
    w = math.log(1.0 / cfg.tail_floor) / mu + 4.0
    return float(min(max(w, 8.0), 150.0))


def default_dt(inst: ProblemInstance, homog: HomogenizedData, h: float,
               cfg: FrontRunConfig) -> float:
    if cfg.dt is not None:
        return cfg.dt
    dt = cfg.reaction_budget / max(inst.reaction.lip_k, 1e-12)
    c_est = speed_scale(homog)
    if c_est > 0:
        dt = min(dt, cfg.accuracy_cfl * h / c_est)
    return float(min(dt, cfg.dt_cap))


# ---------------------------------------------------------------------------
# the long-time evolution driver
# ---------------------------------------------------------------------------

class _RunState:
    """Mutable bookkeeping for one front run (fixed grid, shifting window)."""

    def __init__(self, inst, grid, solver_cfg, run_cfg):
        self.inst = inst
        self.grid = grid
        self.cfg = solver_cfg
        self.run_cfg = run_cfg
        self.stepper = Stepper(inst, grid, solver_cfg)
        f0 = front_initial_datum(grid, run_cfg.initial_style,
                                 interface=0.5 * (grid.x_min + grid.x_max))
        self.u = np.array(f0.values)
        self.t = 0.0
        self.x_offset = 0.0
        self.level_t: list[float] = []
        self.level_x: list[float] = []
        self.multi_crossing = False
        self.m0 = grid.nodes_per_period

    def record_level(self, t, u):
        pos, ncross = level_position(self.grid.nodes, u, self.run_cfg.level)
        if pos is not None:
            self.level_t.append(t)
            self.level_x.append(pos + self.x_offset)
            if ncross > 1:
                self.multi_crossing = True

    def advance(self, duration: float):
        n_steps = max(1, int(round(duration / self.cfg.dt)))
        self.u, self.t = self.stepper.run(
            self.u, self.t, n_steps,
            on_step=lambda k, t, u: self.record_level(t, u))

    def capture(self, span: float) -> SnapshotSeries:
        dt = self.cfg.dt
        n_target = self.run_cfg.capture_snapshots
        r = max(1, int(round(span / (n_target * dt))))
        k = int(math.ceil(span / (r * dt)))
        n_steps = r * k
        U = np.empty((k + 1, self.grid.n))
        U[0] = self.u
        t0 = self.t
        taken = [0]

        def on_step(step_k, t, u):
            if step_k % r == 0:
                taken[0] += 1
                U[taken[0]] = u
            self.record_level(t, u)

        self.u, self.t = self.stepper.run(self.u, self.t, n_steps, on_step,
                                          callback_every=1)
        assert taken[0] == k
        return SnapshotSeries(t0=t0, dt_snap=r * dt, U=U, grid=self.grid,
                              x_offset=self.x_offset)

    def interface_in_grid(self):
        pos, _ = level_position(self.grid.nodes, self.u, self.run_cfg.level)
        return pos

    def recenter(self):
        pos = self.interface_in_grid()
        if pos is None:
            return
        center = 0.5 * (self.grid.x_min + self.grid.x_max)
        halfwidth = 0.5 * (self.grid.x_max - self.grid.x_min)
        if abs(pos - center) < max(self.grid.L, self.run_cfg.recenter_frac * halfwidth):
            return
        p = int(round((pos - center) / self.grid.L))
        if p == 0:
            return
        shift = p * self.m0
        u = self.u
        if shift > 0:
            u = np.concatenate([u[shift:], np.full(shift, self.cfg.u_right)])
        else:
            u = np.concatenate([np.full(-shift, self.cfg.u_left), u[:shift]])
        u[0] = self.cfg.u_left
        u[-1] = self.cfg.u_right
        self.u = u
        self.x_offset += p * self.grid.L

    def recent_speed(self, window: float):
        t = np.asarray(self.level_t)
        x = np.asarray(self.level_x)
        if len(t) < 5:
            return None, None
        keep = t >= t[-1] - window
        if np.count_nonzero(keep) < 5:
            return None, None
        return fit_line(t[keep], x[keep])

    def displacement(self, window: float):
        t = np.asarray(self.level_t)
        x = np.asarray(self.level_x)
        if len(t) < 2:
            return None
        keep = t >= t[-1] - window
        if np.count_nonzero(keep) < 2 or (t[-1] - t[keep][0]) < 0.9 * window:
            return None
        xx = x[keep]
        return float(xx.max() - xx.min())

    def field(self) -> Field:
        return Field(self.grid, self.u.copy(), self.t)


def _front_from_lattice(speed, xi, ys, phi, defect, stationary, est, spread,
                        diagnostics, level=0.5):
    prof = phi.mean(axis=1)
    pos, _ = level_position(xi, prof, level)
    xi = xi - (pos if pos is not None else 0.0)
    mu1 = mu2 = None
    try:
        mu1, mu2 = fit_tail_rates(xi, prof)
    except ValueError as exc:
        diagnostics["decay_fit"] = str(exc)
    return FrontSolution(speed=speed, xi=xi, y=ys, phi=phi, pulsating_error=defect,
                         mu1_fit=mu1, mu2_fit=mu2, stationary=stationary,
                         speed_estimate=est, replica_spread=spread,
                         diagnostics=diagnostics)


def compute_pulsating_front(inst: ProblemInstance, cfg: FrontRunConfig = FrontRunConfig(),
                            budget: Budget = Budget(),
                            homog: HomogenizedData | None = None) -> FrontSolution:
    """Evolve a front-like datum until it is a pulsating front, a pinned
    stationary front (speed 0), or the budget is spent (FrontNotConverged)."""
    if homog is None:
        homog = homogenized_data(inst.coeff, inst.reaction)
    halfwidth = default_halfwidth(homog, cfg)
    grid = build_grid(inst, halfwidth, cfg.nodes_per_period)
    h = grid.h
    dt = default_dt(inst, homog, h, cfg)
    stride = max(1, int(round(0.05 / dt)))
    solver_cfg = SolverConfig(dt=dt, scheme="imex", u_left=1.0, u_right=0.0,
                              stride=stride)
    state = _RunState(inst, grid, solver_cfg, cfg)
    # the defect window stays clear of the Dirichlet boundary layers
    margin_nodes = max(grid.nodes_per_period + 4, int(cfg.defect_margin_frac * grid.n))
    c_floor = h / (10.0 * cfg.stat_window)
    last_defect = None
    diagnostics: dict = {"L": inst.L, "h": h, "dt": dt, "halfwidth": halfwidth,
                         "n_nodes": grid.n}

    while state.t < budget.t_max:
        state.advance(min(cfg.settle_time, budget.t_max - state.t))
        state.recenter()
        c_hat, _ = state.recent_speed(max(2.0 * cfg.settle_time, 20.0))
        disp = state.displacement(cfg.stat_window)
        if disp is not None and disp < cfg.stat_disp_frac * h \
                and state.t >= cfg.transient_min:
            resid = residual_stationary(state.field(), inst)
            diagnostics["stationary_residual"] = resid
            diagnostics["displacement"] = disp
            diagnostics["t_final"] = state.t
            if resid < cfg.tol_stat:
                est = None
                if len(state.level_t) >= 20:
                    est = measure_speed(state.level_t[-200:], state.level_x[-200:],
                                        multi_crossing=state.multi_crossing)
                m = grid.nodes_per_period
                margin = m + 4
                xi = grid.nodes[margin:-margin]
                prof = state.u[margin:-margin]
                phi = np.repeat(prof[:, None], m, axis=1)
                return _front_from_lattice(0.0, xi, np.arange(m) / m, phi, resid,
                                           True, est, 0.0, diagnostics, cfg.level)
        if c_hat is None or abs(c_hat) < c_floor:
            continue
        transient = max(cfg.transient_factor * inst.L / abs(c_hat), cfg.transient_min)
        if state.t < transient:
            continue
        t_hat = inst.L / abs(c_hat)
        span = 1.45 * t_hat
        if state.t + span > budget.t_max:
            break
        sgn = 1 if c_hat > 0 else -1
        snaps = state.capture(span)
        t_ref1 = snaps.t0 + 0.02 * span
        t_ref2 = snaps.t0 + 0.12 * span
        try:
            T1, d1, width = min_shift_defect(snaps, t_ref1, t_hat, margin_nodes, sgn)
            d2 = snaps.shift_defect(t_ref2, T1, margin_nodes, sgn)
        except ValueError:
            continue
        defect = max(d1, d2)
        diagnostics["last_defect"] = defect
        if defect < cfg.tol_puls and last_defect is not None \
                and last_defect < cfg.tol_puls:
            c_period = sgn * inst.L / T1
            times = np.asarray(state.level_t)
            xs = np.asarray(state.level_x)
            keep = times >= min(transient, times[-1] - 1e-9)
            base = measure_speed(times[keep], xs[keep],
                                 multi_crossing=state.multi_crossing)
            unc_period = abs(inst.L) * (0.25 * width + 0.25 * snaps.dt_snap) / T1**2
            est = SpeedEstimate(c_level=base.c_level, c_period=c_period,
                                unc_level=base.unc_level, unc_period=unc_period,
                                window=base.window, multi_crossing=base.multi_crossing)
            xi, ys, phi, spread = extract_profile(snaps, c_period, inst.L,
                                                  t_ref1, T1, margin_nodes)
            diagnostics["t_final"] = state.t
            diagnostics["excursion"] = max(0.0, -0.1 - state.stepper.min_seen,
                                           state.stepper.max_seen - 1.1)
            diagnostics["range_seen"] = (state.stepper.min_seen,
                                         state.stepper.max_seen)
            diagnostics["time_monotonicity_defect"] = snaps.time_monotonicity_defect()
            diagnostics["xi_monotonicity_defect"] = (
                float(max(0.0, np.max(np.diff(phi, axis=0)))) if phi.shape[0] > 1 else 0.0)
            return _front_from_lattice(c_period, xi, ys, phi, defect, False, est,
                                       spread, diagnostics, cfg.level)
        last_defect = defect

    diagnostics["t_final"] = state.t
    diagnostics["last_defect"] = last_defect
    c_hat, _ = state.recent_speed(max(2.0 * cfg.settle_time, 20.0))
    diagnostics["c_hat"] = c_hat
    if "stationary_residual" not in diagnostics:
        diagnostics["stationary_residual"] = residual_stationary(state.field(), inst)
    raise FrontNotConverged(
        f"budget t_max={budget.t_max} exhausted at t={state.t:.4g} without meeting "
        "the pulsating or stationary criterion", diagnostics)


# ---------------------------------------------------------------------------
# speed-sign integral identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    c_identity: float
    c_front: float
    mismatch: float
    gradient_integral: float
    reaction_integral: float


def verify_speed_identity(front: FrontSolution, homog: HomogenizedData,
                          d_floor: float = 1e-8) -> IdentityReport:
    """Check c * integral of (d_xi phi)^2 over xi and y = integral of fbar.

    Returns the speed implied by the identity and the relative mismatch.
    """
    if front.stationary or front.speed == 0.0:
        raise ValueError("the identity check needs a non-stationary front")
    h = float(front.xi[1] - front.xi[0])
    dphi = np.gradient(front.phi, h, axis=0)
    d = float(np.trapezoid(np.mean(dphi**2, axis=1), dx=h))
    if d < d_floor:
        raise ValueError("gradient integral below floor; profile not converged")
    c_id = homog.i_fbar / d
    mismatch = abs(c_id - front.speed) / abs(front.speed)
    return IdentityReport(c_identity=c_id, c_front=front.speed, mismatch=mismatch,
                          gradient_integral=d, reaction_integral=homog.i_fbar)


# ---------------------------------------------------------------------------
# classification and scans
# ---------------------------------------------------------------------------

PROPAGATING = "Propagating"
STATIONARY = "Stationary"
INCONCLUSIVE = "Inconclusive"


@dataclass
class ClassificationRecord:
    kind: str
    c: float | None
    evidence: dict
    front: FrontSolution | None = None


def classify_quenching(inst: ProblemInstance, cfg: FrontRunConfig = FrontRunConfig(),
                       budget: Budget = Budget(),
                       homog: HomogenizedData | None = None) -> ClassificationRecord:
    """Three-way outcome of the front computation with the evidence attached."""
    try:
        front = compute_pulsating_front(inst, cfg, budget, homog=homog)
    except FrontNotConverged as exc:
        return ClassificationRecord(kind=INCONCLUSIVE, c=None,
                                    evidence=dict(exc.diagnostics), front=None)
    if front.stationary:
        return ClassificationRecord(kind=STATIONARY, c=0.0,
                                    evidence=dict(front.diagnostics), front=front)
    ev = dict(front.diagnostics)
    ev["pulsating_defect"] = front.pulsating_error
    est = front.speed_estimate
    if est is not None:
        ev["c_level"] = est.c_level
        ev["uncertainty"] = est.uncertainty
    return ClassificationRecord(kind=PROPAGATING, c=front.speed, evidence=ev,
                                front=front)


@dataclass(frozen=True)
class SweepPoint:
    L: float
    record: ClassificationRecord

    def csv_row(self) -> str:
        rec = self.record
        est = rec.front.speed_estimate if rec.front is not None else None
        c_level = est.c_level if est is not None else math.nan
        c_period = (est.c_period if est is not None and est.c_period is not None
                    else (0.0 if rec.kind == STATIONARY else math.nan))
        unc = est.uncertainty if est is not None else math.nan
        defect = rec.front.pulsating_error if rec.front is not None else math.nan
        resid = rec.evidence.get("stationary_residual", math.nan)
        return (f"{self.L:.10g},{rec.kind},{c_level:.10g},{c_period:.10g},"
                f"{unc:.10g},{defect:.10g},{resid:.10g}")


SWEEP_CSV_HEADER = ("L,classification,c_level,c_period,uncertainty,"
                    "pulsating_defect,stationary_residual")


def _scan_one(args):
    coeff, reaction, L, cfg, budget = args
    inst = ProblemInstance(coeff=coeff, reaction=reaction, L=L)
    return SweepPoint(L=L, record=classify_quenching(inst, cfg, budget))


def scan_E(coeff, reaction, L_grid: Sequence[float],
           cfg: FrontRunConfig = FrontRunConfig(), budget: Budget = Budget(),
           workers: int = 1) -> list[SweepPoint]:
    """Classify each period in the increasing L grid; per-point failures become
    Inconclusive records and the scan continues."""
    Ls = list(L_grid)
    if any(l2 <= l1 for l1, l2 in zip(Ls, Ls[1:])):
        raise ValueError("L grid must be strictly increasing")
    jobs = [(coeff, reaction, L, cfg, budget) for L in Ls]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_scan_one, jobs))
    else:
        points = [_scan_one(j) for j in jobs]
    points.sort(key=lambda p: p.L)
    prev_c = None
    for p in points:
        if p.record.kind == PROPAGATING:
            if prev_c is not None:
                p.record.evidence["speed_jump"] = abs(p.record.c - prev_c)
            prev_c = p.record.c
        else:
            prev_c = None
    return points
