"""Principal eigenvalues, periodic steady states, and exponential decay roots.

All eigenpairs are computed by shifted inverse power iteration: with the shift
above the Gershgorin right edge, (shift*I - A) is an M-matrix, its inverse is
positive, and the iteration converges to the eigenvalue with the positive
eigenfunction.  Dirichlet problems use a banded Cholesky solve, periodic ones
a sparse LU of the cyclic-tridiagonal matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cholesky_banded, cho_solve_banded
from scipy.sparse.linalg import splu

from .profiles import ProblemInstance

MAX_POWER_ITER = 10_000
RESID_TOL = 1e-10


class EigenIterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenPair:
    value: float
    x: np.ndarray
    psi: np.ndarray
    boundary: tuple            # ("dirichlet", R) or ("periodic", L)
    residual: float
    iterations: int
    about: str = ""


@dataclass(frozen=True)
class SteadyState:
    x: np.ndarray
    u: np.ndarray
    residual: float
    lambda1: float
    eigen: EigenPair
    cls: str                   # "stable" | "unstable" | "semistable-boundary"


@dataclass(frozen=True)
class DecayEstimate:
    mu1: float
    mu2: float
    C1: float = math.nan
    C2: float = math.nan
    A1: float = math.nan
    A2: float = math.nan


SEMISTABLE_BAND = 1e-6


def classify_lambda(lam: float, band: float = SEMISTABLE_BAND) -> str:
    if lam > band:
        return "unstable"
    if lam < -band:
        return "stable"
    return "semistable-boundary"


# ---------------------------------------------------------------------------
# inverse power iteration cores
# ---------------------------------------------------------------------------

def _principal_banded(diag: np.ndarray, off: np.ndarray):
    """Largest eigenpair of the symmetric tridiagonal (diag, off)."""
    m = len(diag)
    sigma = float(np.max(diag + np.concatenate([[0.0], np.abs(off)])
                         + np.concatenate([np.abs(off), [0.0]]))) + 1.0
    ab = np.zeros((2, m))
    ab[0, 1:] = -off
    ab[1, :] = sigma - diag
    cb = cholesky_banded(ab, lower=False)
    v = np.ones(m)
    lam = 0.0
    opnorm = float(np.max(np.abs(diag))) + 2.0 * float(np.max(np.abs(off), initial=0.0))
    tol = max(RESID_TOL, 16.0 * np.finfo(float).eps * opnorm)
    for it in range(1, MAX_POWER_ITER + 1):
        w = cho_solve_banded((cb, False), v)
        w /= np.max(np.abs(w))
        av = diag * w
        av[1:] += off * w[:-1]
        av[:-1] += off * w[1:]
        lam = float(np.dot(w, av) / np.dot(w, w))
        resid = float(np.max(np.abs(av - lam * w)))
        v = w
        if resid <= tol:
            return lam, np.abs(v) / np.max(np.abs(v)), resid, it
    raise EigenIterationError(f"no convergence in {MAX_POWER_ITER} iterations "
                              f"(last residual {resid:.3g})")


def _principal_cyclic(main: np.ndarray, lower: np.ndarray, upper: np.ndarray):
    """Principal eigenpair of the cyclic tridiagonal with given diagonals.

    lower[i] multiplies u_{i-1} (wrapping), upper[i] multiplies u_{i+1}.
    Off-diagonal entries must be nonnegative so the shifted matrix is an
    M-matrix and the Perron pair is reached.
    """
    n = len(main)
    if np.min(lower) < 0.0 or np.min(upper) < 0.0:
        raise ValueError("cyclic operator has negative off-diagonal entries; "
                         "refine the grid")
    rows = np.concatenate([np.arange(n)] * 3)
    cols = np.concatenate([np.arange(n), (np.arange(n) - 1) % n, (np.arange(n) + 1) % n])
    vals = np.concatenate([main, lower, upper])
    A = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    gersh = main + lower + upper
    sigma = float(np.max(gersh)) + 1.0
    M = (sp.identity(n, format="csc") * sigma - A).tocsc()
    lu = splu(M)
    v = np.ones(n)
    opnorm = float(np.max(np.abs(main) + upper + lower))
    tol = max(RESID_TOL, 16.0 * np.finfo(float).eps * opnorm)
    for it in range(1, MAX_POWER_ITER + 1):
        w = lu.solve(v)
        w /= np.max(np.abs(w))
        av = A @ w
        lam = float(np.dot(w, av) / np.dot(w, w))
        resid = float(np.max(np.abs(av - lam * w)))
        v = w
        if resid <= tol:
            return lam, np.abs(v) / np.max(np.abs(v)), resid, it
    raise EigenIterationError(f"no convergence in {MAX_POWER_ITER} iterations "
                              f"(last residual {resid:.3g})")


def _as_values(ubar, x: np.ndarray) -> np.ndarray:
    if callable(ubar):
        return np.asarray(ubar(x), dtype=float)
    u = np.asarray(ubar, dtype=float)
    if u.shape != x.shape:
        raise ValueError(f"steady-state array shape {u.shape} does not match "
                         f"the grid ({x.shape})")
    return u


# ---------------------------------------------------------------------------
# eigenvalue problems around a steady state
# ---------------------------------------------------------------------------

def dirichlet_principal_eigen(inst: ProblemInstance, ubar, R: float,
                              n_nodes: int = 1024) -> EigenPair:
    """Principal pair of (a_L psi')' + df_L(x, ubar) psi on [-R, R], psi(+-R)=0."""
    if n_nodes < 64:
        raise ValueError("need n_nodes >= 64")
    x = np.linspace(-R, R, n_nodes)
    h = x[1] - x[0]
    u = _as_values(ubar, x)
    q = np.asarray(inst.df_L(x, u), dtype=float)
    af = np.asarray(inst.a_L(x[:-1] + 0.5 * h), dtype=float)
    m = n_nodes - 2
    diag = -(af[:-1] + af[1:]) / h**2 + q[1:-1]
    off = af[1:-1] / h**2
    lam, psi_in, resid, it = _principal_banded(diag, off)
    psi = np.zeros(n_nodes)
    psi[1:-1] = psi_in
    return EigenPair(value=lam, x=x, psi=psi, boundary=("dirichlet", float(R)),
                     residual=resid, iterations=it,
                     about=f"dirichlet R={R:g} n={n_nodes}")


def periodic_principal_eigen(inst: ProblemInstance, ubar,
                             n_nodes: int = 512) -> EigenPair:
    """Principal pair of the L-periodic problem on one period."""
    L = inst.L
    x = L * np.arange(n_nodes) / n_nodes
    h = L / n_nodes
    u = _as_values(ubar, x)
    q = np.asarray(inst.df_L(x, u), dtype=float)
    af = np.asarray(inst.a_L(x + 0.5 * h), dtype=float)   # face i+1/2
    af_m = np.roll(af, 1)                                  # face i-1/2
    main = -(af + af_m) / h**2 + q
    upper = af / h**2
    lower = af_m / h**2
    lam, psi, resid, it = _principal_cyclic(main, lower, upper)
    return EigenPair(value=lam, x=x, psi=psi, boundary=("periodic", float(L)),
                     residual=resid, iterations=it,
                     about=f"periodic L={L:g} n={n_nodes}")


@dataclass(frozen=True)
class StabilityLimit:
    R_list: tuple
    lambdas: tuple
    periodic_value: float | None
    terminal_gap: float | None
    cls: str


def stability_limit(inst: ProblemInstance, ubar, R_list: Sequence[float],
                    n_per_unit: int = 128, periodic_nodes: int = 512,
                    mono_slack: float = 1e-10) -> StabilityLimit:
    """Dirichlet principal eigenvalues on nested [-R, R], shared lattice.

    The trace must be increasing (within slack); for an L-periodic state the
    terminal value is compared against the periodic eigenvalue, which is the
    R -> infinity limit.
    """
    Rs = sorted(float(R) for R in R_list)
    if len(Rs) < 2:
        raise ValueError("need at least two radii")
    h = 1.0 / n_per_unit
    lams = []
    for R in Rs:
        nn = 2 * int(round(R / h)) + 1
        lam = dirichlet_principal_eigen(inst, ubar, R=(nn - 1) * h / 2.0,
                                        n_nodes=nn).value
        lams.append(lam)
    diffs = np.diff(lams)
    if np.any(diffs < -mono_slack):
        raise EigenIterationError(
            f"Dirichlet eigenvalue trace is not increasing in R: {lams}")
    per_val = None
    gap = None
    try:
        per_val = periodic_principal_eigen(inst, ubar, periodic_nodes).value
        gap = abs(lams[-1] - per_val)
    except (ValueError, TypeError):
        pass
    return StabilityLimit(R_list=tuple(Rs), lambdas=tuple(lams),
                          periodic_value=per_val, terminal_gap=gap,
                          cls=classify_lambda(per_val if per_val is not None else lams[-1]))


# ---------------------------------------------------------------------------
# periodic steady states by damped Newton
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonConfig:
    n_nodes: int = 256
    tol: float = 1e-11
    max_iter: int = 60
    max_halvings: int = 30
    dedupe_factor: float = 10.0
    trivial_tol: float = 1e-4


def _steady_residual(inst, x, h, u):
    af = np.asarray(inst.a_L(x + 0.5 * h), dtype=float)
    af_m = np.roll(af, 1)
    lap = (af * (np.roll(u, -1) - u) - af_m * (u - np.roll(u, 1))) / h**2
    return lap + np.asarray(inst.f_L(x, u), dtype=float)


def _newton_periodic(inst: ProblemInstance, u0: np.ndarray, cfg: NewtonConfig):
    L = inst.L
    n = cfg.n_nodes
    x = L * np.arange(n) / n
    h = L / n
    af = np.asarray(inst.a_L(x + 0.5 * h), dtype=float)
    af_m = np.roll(af, 1)
    rows = np.concatenate([np.arange(n)] * 3)
    cols = np.concatenate([np.arange(n), (np.arange(n) - 1) % n, (np.arange(n) + 1) % n])
    u = np.array(u0, dtype=float)
    F = _steady_residual(inst, x, h, u)
    norm = float(np.max(np.abs(F)))
    # the flux stencil cannot resolve residuals below its rounding floor
    tol = max(cfg.tol, 8.0 * np.finfo(float).eps * float(np.max(af)) / h**2)
    for _ in range(cfg.max_iter):
        if norm < tol:
            return x, u, norm
        dq = np.asarray(inst.df_L(x, u), dtype=float)
        main = -(af + af_m) / h**2 + dq
        vals = np.concatenate([main, af_m / h**2, af / h**2])
        J = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
        try:
            delta = splu(J).solve(-F)
        except RuntimeError:
            return None
        s = 1.0
        for _ in range(cfg.max_halvings):
            u_try = u + s * delta
            F_try = _steady_residual(inst, x, h, u_try)
            norm_try = float(np.max(np.abs(F_try)))
            if norm_try < norm:
                u, F, norm = u_try, F_try, norm_try
                break
            s *= 0.5
        else:
            return None
    return (x, u, norm) if norm < tol else None


def _shift_distance(u1: np.ndarray, u2: np.ndarray) -> float:
    """Sup distance minimized over integer grid shifts (period-shift aliases)."""
    best = math.inf
    for k in range(len(u1)):
        d = float(np.max(np.abs(np.roll(u1, k) - u2)))
        if d < best:
            best = d
    return best


def find_periodic_steady_states(inst: ProblemInstance, seeds: Sequence | None = None,
                                cfg: NewtonConfig = NewtonConfig()) -> list[SteadyState]:
    """Damped Newton on the L-periodic steady problem from a fixed seed set.

    Seeds always include the interior zeros of the averaged reaction as
    constants and the map x -> theta(x/L); extra seeds may be constants in
    (0, 1) or arrays on the Newton grid.  Converged roots are deduplicated up
    to period shifts, states touching 0 or 1 are dropped as trivial, and each
    survivor is classified by its periodic principal eigenvalue.
    """
    n = cfg.n_nodes
    x = inst.L * np.arange(n) / n
    seed_vecs: list[np.ndarray] = []

    def add_seed(s):
        if np.isscalar(s):
            s = float(s)
            if not (0.0 < s < 1.0):
                return
            seed_vecs.append(np.full(n, s))
        else:
            arr = _as_values(s, x) if callable(s) else np.asarray(s, dtype=float)
            if arr.shape != (n,):
                raise ValueError("array seed must live on the Newton grid")
            if arr.min() <= 0.0 or arr.max() >= 1.0:
                return
            seed_vecs.append(arr)

    from .profiles import fbar_and_integral
    fbar, _ = fbar_and_integral(inst.reaction, 512)
    for z in fbar.zeros_inside():
        add_seed(z)
    add_seed(np.asarray(inst.theta_L(x), dtype=float))
    for s in (seeds or ()):
        add_seed(s)

    found: list[tuple[np.ndarray, float]] = []
    for s in seed_vecs:
        res = _newton_periodic(inst, s, cfg)
        if res is None:
            continue
        xg, u, norm = res
        if u.min() < cfg.trivial_tol or u.max() > 1.0 - cfg.trivial_tol:
            continue
        if not (u.min() > 0.0 and u.max() < 1.0):
            continue
        if any(_shift_distance(u, v) <= cfg.dedupe_factor * max(cfg.tol, norm, vn)
               for v, vn in found):
            continue
        found.append((u, norm))

    states = []
    for u, norm in found:
        pair = periodic_principal_eigen(inst, u, n_nodes=n)
        states.append(SteadyState(x=x, u=u, residual=norm, lambda1=pair.value,
                                  eigen=pair, cls=classify_lambda(pair.value)))
    states.sort(key=lambda s: float(np.mean(s.u)))
    return states


# ---------------------------------------------------------------------------
# exponential decay-rate roots
# ---------------------------------------------------------------------------

def decay_eigenvalue(inst: ProblemInstance, c: float, mu: float,
                     direction: str = "right", potential: str = "margin",
                     n_nodes: int | None = None) -> float:
    """Principal periodic eigenvalue of the tail operator at rate mu.

    direction "right" tests supersolutions e^{-mu xi} psi(y) for the tail at
    0; "left" tests e^{+mu xi} psi(y) for the tail at 1.  The zeroth-order
    term is -gamma (potential="margin", the certified bound) or the actual
    linearization slope at the corresponding equilibrium ("linearized").
    """
    L = inst.L
    coeff = inst.coeff
    reaction = inst.reaction
    if n_nodes is None:
        n_nodes = max(128, int(math.ceil(6.0 * L * abs(mu) * coeff.a_max / coeff.a_min)))
    y = np.arange(n_nodes) / n_nodes
    h = 1.0 / n_nodes
    a = np.asarray(coeff.a(y), dtype=float)
    da = np.asarray(coeff.da(y), dtype=float)
    af = np.asarray(coeff.a(y + 0.5 * h), dtype=float)
    af_m = np.roll(af, 1)
    if potential == "margin":
        p = np.full(n_nodes, -reaction.gamma)
    elif potential == "linearized":
        p = np.asarray(reaction.d0(y) if direction == "right" else reaction.d1(y),
                       dtype=float)
    else:
        raise ValueError(f"unknown potential mode {potential!r}")
    if direction == "right":
        adv = -2.0 * mu * a / L
        zer = -mu * da / L - c * mu + a * mu**2 + p
    elif direction == "left":
        adv = 2.0 * mu * a / L
        zer = mu * da / L + c * mu + a * mu**2 + p
    else:
        raise ValueError(f"unknown direction {direction!r}")
    # centered first derivative keeps order 2; grid chosen so the matrix stays
    # an M-matrix
    upper = af / (L * h)**2 + adv / (2.0 * h)
    lower = af_m / (L * h)**2 - adv / (2.0 * h)
    main = -(af + af_m) / (L * h)**2 + zer
    lam, _, _, _ = _principal_cyclic(main, lower, upper)
    return lam


def decay_root_mu(inst: ProblemInstance, c: float, direction: str = "right",
                  potential: str = "margin", mu_max: float = 50.0,
                  bisect_tol: float = 1e-12, n_nodes: int | None = None) -> float:
    """Rate mu1 > 0 with vanishing principal eigenvalue of the tail operator.

    lambda1(0) < 0 by the stability margins and lambda1 grows quadratically,
    so a sign change is bracketed by scanning and then bisected.
    """
    if n_nodes is None:
        n_nodes = max(128, int(math.ceil(
            6.0 * inst.L * mu_max * inst.coeff.a_max / inst.coeff.a_min)))

    def lam(mu):
        return decay_eigenvalue(inst, c, mu, direction, potential, n_nodes)

    lam0 = lam(0.0)
    if lam0 >= 0.0:
        raise RuntimeError(f"tail operator not negative at mu=0 (lambda={lam0:.3g})")
    lo = 0.0
    hi = None
    mu = min(0.25, mu_max)
    while mu <= mu_max * (1 + 1e-12):
        if lam(mu) > 0.0:
            hi = mu
            break
        lo = mu
        mu *= 2.0
    if hi is None:
        raise RuntimeError(f"no decay-rate sign change below mu_max={mu_max}")
    while hi - lo > bisect_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if lam(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
