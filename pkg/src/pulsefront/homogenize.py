"""Homogenized traveling-wave problem: shooting solve, decay exponents, and
the small-period convergence sweep.

The limit problem is a_H phi'' + c phi' + fbar(phi) = 0 with phi(-inf) = 1,
phi(+inf) = 0.  The solver leaves the state 1 along its unstable direction and
bisects on c between overshoot (phi dips below 0) and turnback (phi' changes
sign before reaching 0).  If fbar has several interior zeros the trajectory
can instead converge to one of them, in which case there is no 0-1 connection
and the solve reports it rather than forcing an answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .profiles import HomogenizedData, ProblemInstance
from .fronts import (Budget, FrontRunConfig, FrontSolution, _golden_min,
                     compute_pulsating_front, fit_line)


class NoConnection(RuntimeError):
    """The trajectory settles on an interior zero: no 0-1 front exists."""


class BracketError(RuntimeError):
    """No sign change of the shooting functional over the allowed c range."""


@dataclass(frozen=True)
class HomogenizedFront:
    c0: float
    xi: np.ndarray
    phi: np.ndarray
    lambda1: float
    lambda2: float
    A1: float
    A2: float
    shoot_residual: float
    _spline: CubicSpline

    def __call__(self, xi):
        """Profile sampler with analytic exponential tails outside the core."""
        xi = np.asarray(xi, dtype=float)
        inner = self._spline(np.clip(xi, self.xi[0], self.xi[-1]))
        left = 1.0 - self.A2 * np.exp(self.lambda2 * xi)
        right = self.A1 * np.exp(-self.lambda1 * xi)
        return np.where(xi < self.xi[0], left,
                        np.where(xi > self.xi[-1], right, inner))


def characteristic_rates(a_h: float, c0: float, slope0: float, slope1: float):
    """Closed-form tail exponents of the limit front.

    lambda1 (decay toward 0, right tail) and lambda2 (toward 1, left tail) are
    the positive characteristic roots at the two stable states.
    """
    if not (slope0 < 0.0 and slope1 < 0.0):
        raise ValueError("both end slopes must be negative")
    l1 = (c0 + math.sqrt(c0 * c0 - 4.0 * a_h * slope0)) / (2.0 * a_h)
    l2 = (-c0 + math.sqrt(c0 * c0 - 4.0 * a_h * slope1)) / (2.0 * a_h)
    return l1, l2


def homogenized_decay_rates(front: HomogenizedFront, homog: HomogenizedData):
    """Characteristic-root exponents cross-checked against tail fits."""
    l1, l2 = characteristic_rates(homog.a_h, front.c0, homog.slope0, homog.slope1)
    fit1, fit2 = _tail_fit(front)
    gap = max(abs(fit1 - l1) / l1, abs(fit2 - l2) / l2)
    if gap > 0.02:
        raise RuntimeError(
            f"tail fits deviate {gap:.1%} (> 2%) from the characteristic roots")
    return l1, l2


def _tail_fit(front: HomogenizedFront, floor: float = 1e-6, ceiling: float = 1e-3):
    # below ~1e-7 the trajectory feels the finite bisection bracket, so the
    # fit windows stay above that
    xi = front.xi
    phi = front.phi
    out = []
    for vals, sign in ((phi, -1.0), (1.0 - phi, 1.0)):
        mask = (vals > floor) & (vals < ceiling)
        if np.count_nonzero(mask) < 5:
            mask = (vals > floor) & (vals < 1e-2)
        slope, _ = fit_line(xi[mask], np.log(vals[mask]))
        out.append(sign * slope)
    return out


def _is_odd_symmetric(homog: HomogenizedData, tol: float = 1e-11) -> bool:
    u = np.linspace(0.0, 1.0, 513)
    dev = np.max(np.abs(homog.fbar(u) + homog.fbar(1.0 - u)))
    scale = max(np.max(np.abs(homog.fbar(u))), 1e-30)
    return bool(dev <= tol + 1e-9 * scale)


def _shoot_once(homog: HomogenizedData, c: float, eps: float, xi_max: float):
    """Integrate from (1 - eps, -eps*l2) and classify the trajectory."""
    a = homog.a_h
    l2 = (-c + math.sqrt(c * c - 4.0 * a * homog.slope1)) / (2.0 * a)

    def rhs(xi, s):
        return [s[1], -(c * s[1] + float(homog.fbar(s[0]))) / a]

    def ev_overshoot(xi, s):
        return s[0] + 1e-6
    ev_overshoot.terminal = True
    ev_overshoot.direction = -1.0

    def ev_turnback(xi, s):
        return s[1]
    ev_turnback.terminal = True
    ev_turnback.direction = 1.0

    sol = solve_ivp(rhs, (0.0, xi_max), [1.0 - eps, -eps * l2],
                    events=(ev_overshoot, ev_turnback), rtol=1e-10, atol=1e-12,
                    dense_output=True, max_step=xi_max)
    overshoot = len(sol.t_events[0]) > 0
    return overshoot, sol


def solve_homogenized_front(homog: HomogenizedData, tol_c: float = 1e-10,
                            eps: float = 1e-6) -> HomogenizedFront:
    """Front (phi0, c0) of the averaged equation by bisection on the speed.

    Preconditions: fbar'(0) < 0, fbar'(1) < 0 and at least one interior zero.
    The profile is normalized by phi0(0) = 1/2; repeated solves with the same
    tolerances are bitwise identical.
    """
    if not (homog.slope0 < 0.0 and homog.slope1 < 0.0):
        raise ValueError("need fbar'(0) < 0 and fbar'(1) < 0")
    if len(homog.theta_bar) == 0:
        raise ValueError("averaged reaction has no interior zero")
    a = homog.a_h
    umax = float(np.max(np.abs(homog.fbar(np.linspace(0, 1, 513)))))
    c_max = 2.0 * math.sqrt(umax * a)
    xi_max = 400.0 / math.sqrt(min(-homog.slope0, -homog.slope1) / a)

    if _is_odd_symmetric(homog) and abs(homog.i_fbar) < 1e-12:
        return _symmetric_front(homog, eps)

    lo, hi = -c_max, c_max
    ok = False
    for _ in range(4):
        over_lo, _ = _shoot_once(homog, lo, eps, xi_max)
        over_hi, _ = _shoot_once(homog, hi, eps, xi_max)
        if over_lo and not over_hi:
            ok = True
            break
        lo *= 2.0
        hi *= 2.0
    if not ok:
        raise BracketError(
            f"no overshoot/turnback sign change on [{lo/2:.3g}, {hi/2:.3g}]; "
            "a 0-1 connection may not exist for this averaged reaction")
    while hi - lo > tol_c:
        mid = 0.5 * (lo + hi)
        over, _ = _shoot_once(homog, mid, eps, xi_max)
        if over:
            lo = mid
        else:
            hi = mid
    c0 = 0.5 * (lo + hi)
    _, sol = _shoot_once(homog, c0, eps, xi_max)
    return _assemble_front(homog, c0, sol, eps, bracket=hi - lo)


def _assemble_front(homog: HomogenizedData, c0: float, sol, eps: float,
                    bracket: float) -> HomogenizedFront:
    l1, l2 = characteristic_rates(homog.a_h, c0, homog.slope0, homog.slope1)
    # keep the trajectory while it still heads monotonically from 1 to 0
    t_end = sol.t[-1]
    ts = np.linspace(0.0, t_end, 4001)
    phi, dphi = sol.sol(ts)
    # cut where the profile leaves (0, 1) or stops decreasing
    good = (phi > 0.0) & (phi < 1.0) & (dphi < 0.0)
    stop = np.argmin(good) if not good.all() else len(ts)
    if stop < 16:
        raise NoConnection("trajectory leaves the front corridor immediately")
    ts, phi = ts[:stop], phi[:stop]
    if phi[-1] > 0.45:
        raise NoConnection(
            f"trajectory turns back at phi = {phi[-1]:.3f}: the connection "
            "settles on an interior zero of the averaged reaction")
    # normalize phi(0) = 1/2
    i_half = int(np.argmin(np.abs(phi - 0.5)))
    spl = CubicSpline(ts, phi - 0.5)
    from scipy.optimize import brentq
    lo = max(0, i_half - 5)
    hi = min(len(ts) - 1, i_half + 5)
    try:
        shift = brentq(spl, ts[lo], ts[hi])
    except ValueError:
        shift = ts[i_half]
    xi = ts - shift
    A1 = float(phi[-1] * math.exp(l1 * xi[-1]))
    A2 = float((1.0 - phi[0]) * math.exp(-l2 * xi[0]))
    resid = max(float(abs(phi[-1])), float(bracket))
    return HomogenizedFront(c0=c0, xi=xi, phi=phi, lambda1=l1, lambda2=l2,
                            A1=A1, A2=A2, shoot_residual=resid,
                            _spline=CubicSpline(xi, phi))


def _symmetric_front(homog: HomogenizedData, eps: float) -> HomogenizedFront:
    """Stationary profile when fbar is odd about 1/2: quadrature of the
    first-order reduction a_H (phi')^2 / 2 = int_phi^1 fbar."""
    a = homog.a_h
    u_nodes = np.linspace(0.0, 1.0, 8193)
    f_nodes = homog.fbar(u_nodes)
    F = CubicSpline(u_nodes, f_nodes).antiderivative()
    F1 = float(F(1.0))

    def dphi(u):
        val = 2.0 * (F1 - F(u)) / a
        return -np.sqrt(np.maximum(val, 0.0))

    def rhs(xi, s):
        return [dphi(s[0])]

    span = 200.0 / math.sqrt(-homog.slope0 / a)
    sol_r = solve_ivp(rhs, (0.0, span), [0.5], rtol=1e-10, atol=1e-13,
                      dense_output=True)
    sol_l = solve_ivp(rhs, (0.0, -span), [0.5], rtol=1e-10, atol=1e-13,
                      dense_output=True)
    n = 2000
    xi_r = np.linspace(0.0, sol_r.t[-1], n)
    xi_l = np.linspace(sol_l.t[-1], 0.0, n)
    phi_r = sol_r.sol(xi_r)[0]
    phi_l = sol_l.sol(xi_l)[0]
    keep_r = (phi_r > eps) & (phi_r < 1.0)
    keep_l = (phi_l < 1.0 - eps) & (phi_l > 0.0)
    xi = np.concatenate([xi_l[keep_l][:-1], xi_r[keep_r]])
    phi = np.concatenate([phi_l[keep_l][:-1], phi_r[keep_r]])
    l1, l2 = characteristic_rates(a, 0.0, homog.slope0, homog.slope1)
    A1 = float(phi[-1] * math.exp(l1 * xi[-1]))
    A2 = float((1.0 - phi[0]) * math.exp(-l2 * xi[0]))
    return HomogenizedFront(c0=0.0, xi=xi, phi=phi, lambda1=l1, lambda2=l2,
                            A1=A1, A2=A2, shoot_residual=float(phi[-1]),
                            _spline=CubicSpline(xi, phi))


# ---------------------------------------------------------------------------
# profile alignment and the L -> 0 sweep
# ---------------------------------------------------------------------------

def align_profiles(xi: np.ndarray, y: np.ndarray, phi: np.ndarray,
                   phi0, search: float = 6.0):
    """Shift s* minimizing the mean-square lattice gap between phi(xi + s, y)
    and phi0(xi), and the gap at s*.  Golden-section around a level-matching
    first guess."""
    phi_mean = phi.mean(axis=1)
    # initial guess from the half-levels
    from .fronts import level_position
    pos_l, _ = level_position(xi, phi_mean, 0.5)
    xi0 = np.asarray(xi, dtype=float)
    base = np.asarray(phi0(xi0), dtype=float)
    pos_0, _ = level_position(xi0, base, 0.5)
    guess = (pos_l - pos_0) if (pos_l is not None and pos_0 is not None) else 0.0

    def gap2(s):
        shifted = np.empty_like(phi)
        for j in range(phi.shape[1]):
            shifted[:, j] = np.interp(xi0 + s, xi0, phi[:, j],
                                      left=phi[0, j], right=phi[-1, j])
        d = shifted - base[:, None]
        return float(np.mean(np.trapezoid(d * d, x=xi0, axis=0)))

    s_star, g2 = _golden_min(gap2, guess - search, guess + search, tol=1e-8)
    return float(s_star), float(math.sqrt(max(g2, 0.0)))


@dataclass(frozen=True)
class SweepPointHomog:
    L: float
    c_L: float
    c0: float
    c_gap_rel: float
    profile_gap: float
    shift: float
    front: FrontSolution

    def csv_row(self) -> str:
        return (f"{self.L:.10g},{self.c_L:.10g},{self.c0:.10g},"
                f"{self.c_gap_rel:.10g},{self.profile_gap:.10g},{self.shift:.10g}")


HOMOG_CSV_HEADER = "L,c_L,c0,c_gap_rel,profile_gap_L2,shift"


def homogenization_sweep(coeff, reaction, L_list: Sequence[float],
                         cfg: FrontRunConfig = FrontRunConfig(),
                         budget: Budget = Budget(),
                         homog: HomogenizedData | None = None,
                         front0: HomogenizedFront | None = None):
    """Fronts along a decreasing L list compared with the homogenized limit.

    Returns (records, front0).  Refuses symmetric reactions with c0 = 0; that
    regime is the stationary branch of the period scan.  Per-L failures are
    recorded as None entries.
    """
    from .profiles import homogenized_data as _hd
    if homog is None:
        homog = _hd(coeff, reaction)
    if front0 is None:
        front0 = solve_homogenized_front(homog)
    if front0.c0 == 0.0:
        raise ValueError("homogenized speed is zero; use the period scan's "
                         "stationary branch instead of the sweep")
    if any(l2 >= l1 for l1, l2 in zip(L_list, L_list[1:])):
        raise ValueError("L list must be strictly decreasing")
    records = []
    for L in L_list:
        inst = ProblemInstance(coeff=coeff, reaction=reaction, L=L)
        try:
            front = compute_pulsating_front(inst, cfg, budget, homog=homog)
        except Exception as exc:          # per-L failures recorded, sweep continues
            records.append((L, exc))
            continue
        shift, gap = align_profiles(front.xi, front.y, front.phi, front0)
        records.append(SweepPointHomog(
            L=L, c_L=front.speed, c0=front0.c0,
            c_gap_rel=abs(front.speed - front0.c0) / abs(front0.c0),
            profile_gap=gap, shift=shift, front=front))
    return records, front0
