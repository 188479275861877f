"""Stochastic simulation of the one-dimensional telegraph dynamics.

Two simulators share one random stream per trajectory:

* an exact event-driven walk in the arc coordinate ``x`` (unit speed, flips
  at Poisson times of rate ``lambda_c`` in intrinsic time ``s``), with real
  time read off a tabulated antiderivative ``W(x) = int_0^x w``;
* a fourth-order Runge-Kutta integration of the raw ``(theta, pi)`` equations,
  used to cross-check the first.

Left-tail excursions have heavy-tailed intrinsic durations.  Both simulators
therefore stop an excursion at the depth ``theta_d`` where the remaining
tail of ``int p`` is a fixed fraction of the full tail, add the exact
expected real time of the rest of the excursion, and restart moving right.
The mean hitting time is unchanged; its spread shrinks.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from . import _pykernels
from ._backend import kernels
from .errors import ConfigError, DomainError, IntegrationWarning, NoHits
from .potential import CoordinateMaps, Landscape, _cumulative_gl, momentum_p
from .secd_analytic import p_integral

TIMEOUT_S = 1e7


@dataclass
class SimConfig:
    """Run parameters; ``closure_fraction`` sets the excursion cut-off depth."""

    lambda_c: float
    E: float = 1.0
    u0: int = 1
    seed: int = 0
    max_s: float = TIMEOUT_S
    n_traj: int = 1000
    quad_tol: float = 1e-11
    closure_fraction: float = 0.1
    sigma_hit: float | None = None
    n_threads: int | None = None

    def __post_init__(self):
        problems = []
        if not self.lambda_c >= 0:
            problems.append("lambda_c: rate must be nonnegative")
        if not self.E > 0:
            problems.append("E: energy must be positive")
        if self.u0 not in (1, -1):
            problems.append("u0: must be +1 or -1")
        if not self.max_s > 0:
            problems.append("max_s: must be positive")
        if self.n_traj < 1:
            problems.append("n_traj: must be at least 1")
        if not 0 < self.closure_fraction < 1:
            problems.append("closure_fraction: must lie in (0, 1)")
        if self.sigma_hit is not None and not self.sigma_hit > 0:
            problems.append("sigma_hit: must be positive")
        if not 0 <= self.seed < 2**64:
            problems.append("seed: must be an unsigned 64-bit integer")
        if problems:
            raise ConfigError(problems)

    def threads(self) -> int:
        if self.n_threads:
            return int(self.n_threads)
        return int(os.environ.get("ECD_LAB_THREADS", "1") or 1)


def closure_depth(lnd: Landscape, E: float, fraction: float, rtol: float = 1e-11):
    """Depth ``theta_d`` with ``int_{-inf}^{theta_d} p = fraction * int_{-inf}^{a_left} p``.

    Returns ``(theta_d, tail_cost)`` where ``tail_cost`` is that remaining integral,
    the expected real time of an excursion below ``theta_d``.
    """
    full = p_integral(lnd, E, -math.inf, lnd.a_left, rtol)
    target = fraction * full
    f = lambda th: p_integral(lnd, E, -math.inf, th, rtol) - target
    span = max(lnd.a_right - lnd.a_left, 1e-3)
    lo = lnd.a_left - span
    while f(lo) > 0:
        lo = lnd.a_left - 2.0 * (lnd.a_left - lo)
    theta_d = brentq(f, lo, lnd.a_left, xtol=1e-14 * max(1.0, abs(lo)), rtol=1e-15)
    return theta_d, p_integral(lnd, E, -math.inf, theta_d, rtol)


class TimeTable:
    """Real-time antiderivative ``W(x)`` tabulated on ``x = c sinh(xi)``, uniform in ``xi``.

    ``x = 0`` is the local minimum; ``W(x) = (1/2) int_{a_left}^{theta(x)} p``.
    """

    def __init__(self, lnd: Landscape, maps: CoordinateMaps, theta_lo: float,
                 dxi: float = 2e-3, n_theta: int = 20001):
        E = maps.energy_E
        self.L = maps.L_classical
        p = lambda t: np.sqrt(E / lnd.value(t))
        cth = 0.5 * (lnd.a_left + lnd.a_right)
        sth = 0.25 * (lnd.a_right - lnd.a_left)
        u = np.linspace(np.arcsinh((theta_lo - cth) / sth), np.arcsinh((lnd.a_right - cth) / sth), n_theta)
        th = cth + sth * np.sinh(u)
        th[0], th[-1] = theta_lo, lnd.a_right
        j0 = int(np.argmin(np.abs(th - lnd.a_left)))
        th[j0] = lnd.a_left
        x = _cumulative_gl(lambda t: 1.0 / p(t), th)
        w = 0.5 * _cumulative_gl(p, th)
        x -= x[j0]
        w -= w[j0]
        pth = p(th)
        theta_of_x = CubicHermiteSpline(x, th, pth)
        W_of_theta = CubicHermiteSpline(th, w, 0.5 * pth)

        self.c = self.L / 8.0
        xi_lo = math.asinh(x[0] / self.c)
        xi_hi = math.asinh(self.L / self.c)
        n = int(math.ceil((xi_hi - xi_lo) / dxi)) + 1
        self.xi0 = xi_lo
        self.dxi = (xi_hi - xi_lo) / (n - 1)
        xi = xi_lo + self.dxi * np.arange(n)
        xs = self.c * np.sinh(xi)
        xs[0], xs[-1] = x[0], self.L
        ths = theta_of_x(xs)
        self.W = np.ascontiguousarray(W_of_theta(ths))
        self.D = np.ascontiguousarray(0.5 * p(ths) ** 2 * self.c * np.cosh(xi))
        self.x_min = float(x[0])
        self._theta_of_x = theta_of_x

    def args(self):
        return self.c, self.xi0, self.dxi, self.W, self.D

    def __call__(self, x):
        return kernels.w_eval(*self.args(), np.atleast_1d(np.asarray(x, dtype=float)))

    def theta(self, x):
        return self._theta_of_x(x)


@dataclass
class Setup:
    """Everything a batch of trajectories needs, derived once from a configuration."""

    table: TimeTable
    x_hit: float
    x_d: float
    theta_d: float
    tail_cost: float


def prepare(lnd: Landscape, maps: CoordinateMaps, cfg: SimConfig) -> Setup:
    if not math.isclose(maps.energy_E, cfg.E, rel_tol=1e-15):
        raise DomainError("maps were built for a different energy")
    if cfg.lambda_c > 0:
        theta_d, tail_cost = closure_depth(lnd, cfg.E, cfg.closure_fraction, cfg.quad_tol)
        table = TimeTable(lnd, maps, theta_d)
        x_d = table.x_min
    else:
        theta_d, tail_cost = -math.inf, 0.0
        table = TimeTable(lnd, maps, max(maps.trunc[0], lnd.a_left - 4 * (lnd.a_right - lnd.a_left)))
        x_d = -math.inf
    if cfg.sigma_hit is None:
        x_hit = maps.L_classical
    else:
        if cfg.sigma_hit >= lnd.a_right - lnd.a_left:
            raise DomainError("hit window wider than the well separation")
        x_hit = float(maps.phi(lnd.a_right - cfg.sigma_hit))
    return Setup(table, x_hit, x_d, theta_d, tail_cost)


@dataclass
class ClassicalRun:
    """One trajectory.  ``events`` rows are ``(s, x, kind)``; x moves linearly between rows."""

    hit: bool
    t_real: float
    s_elapsed: float
    n_flips: int
    n_legs: int
    first_cross: int
    n_closures: int
    flips: list = field(default_factory=list)
    events: list = field(default_factory=list)
    energy_drift: float | None = None

    @property
    def timed_out(self) -> bool:
        return not self.hit


def run_event_driven(lnd: Landscape, maps: CoordinateMaps, cfg: SimConfig, traj: int = 0,
                     setup: Setup | None = None) -> ClassicalRun:
    """Exact event-driven trajectory number ``traj`` of the stream seeded by ``cfg.seed``.

    Starts at the local minimum moving in direction ``cfg.u0``; stops on hitting
    the global minimum or when intrinsic time exceeds ``cfg.max_s`` (timeout).
    """
    st = setup or prepare(lnd, maps, cfg)
    tb = _pykernels._Table(*st.table.args())
    out, log = _pykernels.simulate_one(tb, st.x_hit, st.x_d, st.tail_cost, cfg.lambda_c,
                                       cfg.u0, cfg.max_s, cfg.seed, traj, record=True)
    h, t, s, flips, legs, first, clos = out
    return ClassicalRun(bool(h), t, s, flips, legs, first, clos,
                        flips=[row[0] for row in log if row[2] == "flip"], events=log)


@dataclass
class HittingReport:
    """Monte Carlo estimate of the mean real hitting time."""

    mean: float
    se: float
    n_traj: int
    n_hits: int
    n_timeouts: int
    q_hat: float | None
    q_se: float | None
    legs_mean: float
    legs_se: float
    closures: int
    hit: np.ndarray
    t_real: np.ndarray
    s_elapsed: np.ndarray
    n_flips: np.ndarray
    n_legs: np.ndarray
    first_cross: np.ndarray
    seed: int = 0

    def summary(self) -> dict:
        return {k: getattr(self, k) for k in ("mean", "se", "n_traj", "n_hits", "n_timeouts",
                                               "q_hat", "q_se", "legs_mean", "legs_se",
                                               "closures", "seed")}


def simulate(lnd: Landscape, maps: CoordinateMaps, cfg: SimConfig, setup: Setup | None = None,
             first_traj: int = 0, n_traj: int | None = None):
    """Raw per-trajectory arrays ``(hit, t_real, s, flips, legs, first_cross, closures)``."""
    st = setup or prepare(lnd, maps, cfg)
    n = cfg.n_traj if n_traj is None else n_traj
    return kernels.simulate_batch(*st.table.args(), st.x_hit, st.x_d, st.tail_cost,
                                  float(cfg.lambda_c), int(cfg.u0), float(cfg.max_s),
                                  int(cfg.seed), int(first_traj), int(n), cfg.threads())


def monte_carlo_hitting(lnd: Landscape, maps: CoordinateMaps, cfg: SimConfig,
                        setup: Setup | None = None) -> HittingReport:
    """Sample mean and standard error of the real hitting time over ``cfg.n_traj`` streams."""
    hit, t, s, flips, legs, first, clos = simulate(lnd, maps, cfg, setup)
    ok = hit.astype(bool)
    n_hits = int(ok.sum())
    if n_hits == 0:
        raise NoHits(f"all {cfg.n_traj} trajectories timed out")
    th = t[ok]
    mean = float(th.mean())
    se = float(th.std(ddof=1) / math.sqrt(n_hits)) if n_hits > 1 else math.nan
    lg = legs[ok].astype(float)
    legs_se = float(lg.std(ddof=1) / math.sqrt(n_hits)) if n_hits > 1 else math.nan
    decided = first[first >= 0]
    if cfg.u0 == 1 and decided.size:
        q_hat = float(decided.mean())
        q_se = math.sqrt(max(q_hat * (1 - q_hat), 0.0) / decided.size)
    else:
        q_hat = q_se = None
    return HittingReport(mean, se, cfg.n_traj, n_hits, cfg.n_traj - n_hits, q_hat, q_se,
                         float(lg.mean()), legs_se, int(clos.sum()), hit, t, s, flips, legs,
                         first, cfg.seed)


def flip_counts(lambda_c: float, duration: float, n_traj: int, seed: int = 0) -> np.ndarray:
    """Number of flips within intrinsic duration ``duration`` for ``n_traj`` streams."""
    if not lambda_c > 0:
        raise DomainError("rate must be positive")
    return kernels.count_flips(float(lambda_c), float(duration), int(seed), int(n_traj))


# ---------------------------------------------------------------------------
# raw (theta, pi) integration

def _rhs(lnd, th, pi):
    v = float(lnd.value(th))
    return 2.0 / pi, -float(lnd.deriv(th)) / v, 2.0 / (pi * pi)


def _rk4(lnd, th, pi, s, h):
    k1 = _rhs(lnd, th, pi)
    k2 = _rhs(lnd, th + 0.5 * h * k1[0], pi + 0.5 * h * k1[1])
    k3 = _rhs(lnd, th + 0.5 * h * k2[0], pi + 0.5 * h * k2[1])
    k4 = _rhs(lnd, th + h * k3[0], pi + h * k3[1])
    return (th + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            pi + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            s + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def _locate(g, h_full, g_full, g0):
    """Secant search for the partial step with ``g(h) = 0``, bracketed in ``(0, h_full]``."""
    a, ga, b, gb = 0.0, g0, h_full, g_full
    for _ in range(60):
        c = b - gb * (b - a) / (gb - ga)
        if not a < c < b:
            c = 0.5 * (a + b)
        gc = g(c)
        if abs(gc) < 1e-15 or (b - a) < 1e-15 * h_full:
            return c
        if (gc > 0) == (gb > 0):
            b, gb = c, gc
        else:
            a, ga = c, gc
    return c


def run_ode_raw(lnd: Landscape, cfg: SimConfig, dt: float, traj: int = 0,
                theta_d: float | None = None, tail_cost: float = 0.0,
                max_steps: int = 50_000_000) -> ClassicalRun:
    """Integrate ``theta' = 2/pi, pi' = -V'/V`` by RK4 with Poisson flips in intrinsic time.

    Flip times are the same draws as in :func:`run_event_driven` for the same
    ``(seed, traj)``, so the two simulators follow the same path.  The step is
    ``dt * min(1, sqrt(V_ref / V))``; flips, hits and closures are located by
    re-stepping to the exact event.  ``energy_drift`` is the maximum of
    ``|pi^2 V - E| / E``; above ``1e-4`` an :class:`IntegrationWarning` is issued.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    E = cfg.E
    lam = cfg.lambda_c
    if theta_d is None and lam > 0:
        theta_d, tail_cost = closure_depth(lnd, E, cfg.closure_fraction, cfg.quad_tol)
    if theta_d is None:
        theta_d = -math.inf
    target = lnd.a_right if cfg.sigma_hit is None else lnd.a_right - cfg.sigma_hit
    grid = np.linspace(lnd.a_left, lnd.a_right, 201)
    v_ref = float(np.max(lnd.value(grid)))
    rng = _pykernels.Stream(cfg.seed, traj)
    next_flip = rng.expo(lam) if lam > 0 else math.inf

    th = lnd.a_left
    pi = cfg.u0 * math.sqrt(E / float(lnd.value(th)))
    s = t = 0.0
    drift = 0.0
    flips = []
    legs = clos = 0
    first = -1
    hit = False
    events = []
    for _ in range(max_steps):
        h = dt * min(1.0, math.sqrt(v_ref / float(lnd.value(th))))
        th1, pi1, s1 = _rk4(lnd, th, pi, s, h)
        kind = None
        cands = []
        if s1 >= next_flip:
            cands.append(("flip", lambda hh: _rk4(lnd, th, pi, s, hh)[2] - next_flip, s1 - next_flip, s - next_flip))
        if pi > 0 and th1 >= target:
            cands.append(("hit", lambda hh: _rk4(lnd, th, pi, s, hh)[0] - target, th1 - target, th - target))
        if pi < 0 and th1 <= theta_d:
            cands.append(("closure", lambda hh: _rk4(lnd, th, pi, s, hh)[0] - theta_d, th1 - theta_d, th - theta_d))
        crossed_zero = (th - lnd.a_left) * (th1 - lnd.a_left) < 0
        if cands:
            best = None
            for name, g, g1, g0 in cands:
                hh = _locate(g, h, g1, g0)
                if best is None or hh < best[1]:
                    best = (name, hh)
            kind, h = best
            th1, pi1, s1 = _rk4(lnd, th, pi, s, h)
            crossed_zero = (th - lnd.a_left) * (th1 - lnd.a_left) < 0
        if crossed_zero:
            legs += 1
            if pi < 0 and first < 0:
                first = 0
        th, pi, s, t = th1, pi1, s1, t + h
        drift = max(drift, abs(pi * pi * float(lnd.value(th)) - E) / E)
        if kind == "flip":
            pi = -pi
            flips.append(s)
            events.append((s, th, "flip"))
            next_flip += rng.expo(lam)
        elif kind == "hit":
            legs += 1
            if first < 0:
                first = 1
            hit = True
            events.append((s, th, "hit"))
            break
        elif kind == "closure":
            t += tail_cost
            pi = abs(pi)
            clos += 1
            events.append((s, th, "closure"))
            next_flip = s + rng.expo(lam)
        if s > cfg.max_s:
            events.append((s, th, "timeout"))
            break
    if drift > 1e-4:
        warnings.warn(f"energy drift {drift:.3g} exceeds 1e-4", IntegrationWarning, stacklevel=2)
    return ClassicalRun(hit, t, s, len(flips), legs, first, clos, flips=flips, events=events,
                        energy_drift=drift)
