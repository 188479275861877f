"""Positive double-well landscapes and their quadrature-backed coordinate maps.

A landscape is the shifted objective ``V = F - F0 > 0``.  Two coordinate
changes are tabulated once and reused everywhere:

* the classical arc coordinate ``phi(theta) = E**-0.5 * int_{a_left}^theta sqrt(V)``,
  in which the stochastic dynamics is a unit-speed telegraph process;
* the Liouville coordinate ``y(theta) = int_0^theta V**-0.5``, which turns the
  quantum Hamiltonian into a Schroedinger operator on a bounded interval.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .errors import AssumptionViolation, DomainError, QuadratureError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)

TRUNCATION_FACTOR = 1e6


@dataclass(frozen=True, eq=False)
class Landscape:
    """A one-dimensional positive double well.

    Use :meth:`quartic` or :meth:`custom` rather than the constructor.
    ``a_right`` is the global minimum (value ``v0``), ``a_left`` the local one
    (value ``v1``).
    """

    kind: str
    value: Callable
    deriv: Callable
    deriv2: Callable
    a_left: float
    a_right: float
    v0: float
    v1: float
    params: dict = field(default_factory=dict)

    @classmethod
    def quartic(cls, a: float, omega: float, v0: float) -> "Landscape":
        """``V = omega**2 / (8 a**2) * (theta**2 - a**2)**2 + v0``."""
        if not (a > 0 and omega > 0 and v0 > 0):
            raise DomainError("quartic landscape needs a > 0, omega > 0, v0 > 0")
        k = omega**2 / (8.0 * a * a)

        def value(t):
            t = np.asarray(t, dtype=float)
            return k * (t * t - a * a) ** 2 + v0

        def deriv(t):
            t = np.asarray(t, dtype=float)
            return 4.0 * k * t * (t * t - a * a)

        def deriv2(t):
            t = np.asarray(t, dtype=float)
            return 4.0 * k * (3.0 * t * t - a * a)

        return cls("quartic", value, deriv, deriv2, -a, a, v0, v0,
                   {"a": a, "omega": omega, "v0": v0})

    @classmethod
    def custom(cls, value, deriv, deriv2, local_min: float, global_min: float) -> "Landscape":
        """Wrap user callables.  Both derivatives must be analytic."""
        v0 = float(value(global_min))
        v1 = float(value(local_min))
        return cls("custom", value, deriv, deriv2, float(local_min), float(global_min), v0, v1, {})

    @property
    def barrier(self) -> float:
        """Barrier height ``V(0)``; for the quartic this is ``a^2 omega^2 / 8 + v0``."""
        return float(self.value(0.0))

    @property
    def beta(self) -> float:
        """Barrier above the floor, ``a^2 omega^2 / 8`` for the quartic."""
        if self.kind == "quartic":
            p = self.params
            return p["a"] ** 2 * p["omega"] ** 2 / 8.0
        return self.barrier - self.v0

    @property
    def symmetric(self) -> bool:
        if self.kind == "quartic":
            return True
        probe = np.linspace(0.0, 3.0 * max(abs(self.a_left), abs(self.a_right)), 257)
        return bool(np.allclose(self.value(probe), self.value(-probe), rtol=1e-13, atol=0.0))

    def __call__(self, theta):
        return eval_v(self, theta)


def eval_v(lnd: Landscape, theta):
    """Evaluate ``V``; raises :class:`AssumptionViolation` on a non-positive value."""
    v = lnd.value(theta)
    if np.any(np.asarray(v) <= 0):
        raise AssumptionViolation(f"V must be positive; got min {np.min(v)!r}")
    return v if np.ndim(v) else float(v)


def momentum_p(lnd: Landscape, E: float, theta):
    """Momentum norm ``p = sqrt(E / V)`` at fixed energy."""
    if not E > 0:
        raise DomainError("energy must be positive")
    return np.sqrt(E / eval_v(lnd, theta))


@dataclass
class Check:
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    positivity: Check
    two_minima: Check
    tail: Check

    @property
    def ok(self) -> bool:
        return self.positivity.passed and self.two_minima.passed and self.tail.passed

    def as_dict(self) -> dict:
        return {
            name: {"passed": c.passed, "detail": c.detail, **c.values}
            for name, c in (("positivity", self.positivity),
                            ("two_minima", self.two_minima),
                            ("tail", self.tail))
        }


def truncation_bounds(lnd: Landscape, factor: float = TRUNCATION_FACTOR, cap: float = 1e8):
    """Smallest radii with ``V >= factor * V1`` on each side of the wells.

    Returns ``(theta_lo, theta_hi, reached)``; ``reached`` is False when V does
    not grow enough before ``cap`` (the tail condition is then suspect).
    """
    target = factor * max(lnd.v1, lnd.v0)
    scale = max(abs(lnd.a_right - lnd.a_left), 1e-3)
    reached = True

    def search(start, sign):
        nonlocal reached
        step = scale
        lo = start
        hi = start + sign * step
        while lnd.value(hi) < target:
            lo = hi
            step *= 2.0
            hi = start + sign * step
            if abs(hi) > cap:
                reached = False
                return hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if lnd.value(mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi

    hi = search(lnd.a_right, 1.0)
    lo = search(lnd.a_left, -1.0)
    return lo, hi, reached


def _quad(f, lo, hi, rtol, what="integral"):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol, limit=400,
                                        full_output=1)[:3]
    if not np.isfinite(val) or err > max(50.0 * rtol * abs(val), 1e-300):
        raise QuadratureError(f"{what} did not converge: value={val!r}, error={err!r}")
    return val


def tail_integral(f, start: float, side: int, rtol: float = 1e-11, what="tail integral"):
    """``int_start^{+inf} f`` (``side=+1``) or ``int_{-inf}^start f`` (``side=-1``).

    The half-line is compactified with ``theta = start + side * u / (1 - u)``
    so superquadratic tails give a bounded integrand on ``[0, 1)``.
    """
    def g(u):
        om = 1.0 - u
        return f(start + side * u / om) / (om * om)

    return _quad(g, 0.0, 1.0, rtol, what)


def finite_integral(f, lo: float, hi: float, rtol: float = 1e-11, what="integral"):
    return _quad(f, lo, hi, rtol, what)


def _cumulative_gl(f, nodes):
    """Cumulative integral of ``f`` from ``nodes[0]`` at every node, 12-point Gauss per cell."""
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    half = 0.5 * np.diff(nodes)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    cells = (f(pts) * _GL_W).sum(axis=1) * half
    return np.concatenate(([0.0], np.cumsum(cells)))


def validate_assumptions(lnd: Landscape, scan_domain=None, tol: float = 0.05,
                         n_scan: int = 20001) -> ValidationReport:
    """Check positivity, the two-minimum structure and integrability of ``1/sqrt(V)``.

    The tail check compares ``int_{a<|theta|<R} V**-0.5`` with the same
    integral up to ``2R``; the tail is flagged convergent when the relative
    change is below ``tol``.
    """
    if scan_domain is None:
        span = max(abs(lnd.a_left), abs(lnd.a_right), 1e-3)
        scan_domain = (min(lnd.a_left, -lnd.a_right) - 2 * span, max(lnd.a_right, -lnd.a_left) + 2 * span)
    lo, hi = scan_domain
    if not (lo < lnd.a_left < hi and lo < lnd.a_right < hi):
        raise DomainError("scan domain must contain both wells")
    th = np.linspace(lo, hi, n_scan)
    v = np.asarray(lnd.value(th), dtype=float)

    vmin = float(v.min())
    positivity = Check(bool(vmin > 0 and lnd.v0 > 0), f"min V on scan = {vmin:.6g}", {"min_v": vmin})

    interior = (v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])
    minima = th[1:-1][interior]
    dx = th[1] - th[0]
    found_left = bool(np.any(np.abs(minima - lnd.a_left) <= 2 * dx))
    found_right = bool(np.any(np.abs(minima - lnd.a_right) <= 2 * dx))
    ordered = lnd.v0 <= lnd.v1 if lnd.symmetric else lnd.v0 < lnd.v1
    two = len(minima) == 2 and found_left and found_right and ordered
    two_minima = Check(two, f"{len(minima)} local minima at {np.round(minima, 6).tolist()}",
                       {"minima": minima.tolist()})

    t_lo, t_hi, reached = truncation_bounds(lnd)
    inv_sqrt = _inv_sqrt_v(lnd)
    try:
        with np.errstate(invalid="ignore", divide="ignore"):
            near = [finite_integral(inv_sqrt, lnd.a_right, t_hi, 1e-10),
                    finite_integral(inv_sqrt, t_lo, lnd.a_left, 1e-10)]
            far = [finite_integral(inv_sqrt, lnd.a_right, lnd.a_right + 2 * (t_hi - lnd.a_right), 1e-10),
                   finite_integral(inv_sqrt, lnd.a_left - 2 * (lnd.a_left - t_lo), lnd.a_left, 1e-10)]
        j1, j2 = sum(near), sum(far)
        rel = abs(j2 - j1) / abs(j2)
        tail_ok = bool(reached and rel <= tol)
        tail = Check(tail_ok, f"relative change under radius doubling = {rel:.3g}",
                     {"radius": [t_lo, t_hi], "J_R": j1, "J_2R": j2, "rel_change": rel})
    except (QuadratureError, AssumptionViolation, FloatingPointError) as exc:
        tail = Check(False, f"tail quadrature failed: {exc}", {})
    return ValidationReport(positivity, two_minima, tail)


def _inv_sqrt_v(lnd):
    return lambda t: 1.0 / np.sqrt(lnd.value(t))


class CoordinateMaps:
    """Tabulated ``phi``, ``phi^-1``, ``y`` and ``y^-1`` for one landscape and energy.

    Tables live on a grid uniform in ``u`` with ``theta = c + s sinh(u)``
    between the truncation bounds; the Liouville coordinate is extended to
    the whole line through two compactified tail tables.  All interpolants are
    cubic Hermite with exact derivatives, so they are monotone to rounding
    on these grids.
    """

    def __init__(self, lnd: Landscape, E: float, quad_tol: float = 1e-11,
                 n_nodes: int = 4097, trunc=None):
        if not E > 0:
            raise DomainError("energy must be positive")
        self.landscape = lnd
        self.energy_E = float(E)
        self.quad_tol = quad_tol
        if trunc is None:
            t_lo, t_hi, _ = truncation_bounds(lnd)
        else:
            t_lo, t_hi = trunc
        self.trunc = (float(t_lo), float(t_hi))

        V = lnd.value
        sqE = math.sqrt(E)
        c = 0.5 * (lnd.a_left + lnd.a_right)
        s = 0.25 * (lnd.a_right - lnd.a_left)
        u = np.linspace(np.arcsinh((t_lo - c) / s), np.arcsinh((t_hi - c) / s), n_nodes)
        th = c + s * np.sinh(u)
        th[0], th[-1] = t_lo, t_hi
        self.theta_table = th

        dphi = lambda t: np.sqrt(V(t)) / sqE
        dy = lambda t: 1.0 / np.sqrt(V(t))
        phi = _cumulative_gl(dphi, th)
        yy = _cumulative_gl(dy, th)
        phi -= _interp_anchor(phi, th, lnd.a_left, dphi)
        yy -= _interp_anchor(yy, th, 0.0, dy)
        self.phi_table = phi
        self.y_table = yy
        self._phi = CubicHermiteSpline(th, phi, dphi(th))
        self._phi_inv = CubicHermiteSpline(phi, th, 1.0 / dphi(th))
        self._y = CubicHermiteSpline(th, yy, dy(th))
        self._y_inv = CubicHermiteSpline(yy, th, 1.0 / dy(th))

        self.L_classical = finite_integral(dphi, lnd.a_left, lnd.a_right, quad_tol, "L")
        tail_r = tail_integral(dy, t_hi, +1, quad_tol, "right Liouville tail")
        tail_l = tail_integral(dy, t_lo, -1, quad_tol, "left Liouville tail")
        self.y_plus = float(yy[-1] + tail_r)
        self.y_minus = float(yy[0] - tail_l)
        self.L_y = self.y_plus - self.y_minus
        self._tails = {+1: _TailTable(dy, t_hi, +1, yy[-1]), -1: _TailTable(dy, t_lo, -1, yy[0])}

    # classical arc coordinate -------------------------------------------------
    def phi(self, theta):
        theta = np.asarray(theta, dtype=float)
        self._check_inner(theta)
        out = self._phi(theta)
        return out if out.ndim else float(out)

    def phi_inv(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < self.phi_table[0]) | (x > self.phi_table[-1])):
            raise DomainError("x outside the tabulated range")
        out = self._phi_inv(x)
        return out if out.ndim else float(out)

    # Liouville coordinate -------------------------------------------------------
    def y(self, theta):
        """Liouville coordinate; accepts ``+-inf`` (the interval ends)."""
        theta = np.asarray(theta, dtype=float)
        out = np.empty_like(theta)
        pinf, minf = np.isposinf(theta), np.isneginf(theta)
        out[pinf] = self.y_plus
        out[minf] = self.y_minus
        fin = ~(pinf | minf)
        self._check_inner(theta[fin])
        out[fin] = self._y(theta[fin])
        return out if out.ndim else float(out)

    def theta_of_y(self, yv):
        """Inverse Liouville map on the open interval ``(y_minus, y_plus)``."""
        yv = np.asarray(yv, dtype=float)
        if np.any((yv <= self.y_minus) | (yv >= self.y_plus)):
            raise DomainError("y outside the open Liouville interval")
        out = np.empty_like(yv)
        inner = (yv >= self.y_table[0]) & (yv <= self.y_table[-1])
        out[inner] = self._y_inv(yv[inner])
        hi = yv > self.y_table[-1]
        lo = yv < self.y_table[0]
        if np.any(hi):
            out[hi] = self._tails[+1].theta(yv[hi])
        if np.any(lo):
            out[lo] = self._tails[-1].theta(yv[lo])
        return out if out.ndim else float(out)

    def _check_inner(self, theta):
        t_lo, t_hi = self.trunc
        if np.any((theta < t_lo) | (theta > t_hi)):
            raise DomainError(f"theta outside truncated domain [{t_lo:.6g}, {t_hi:.6g}]")


class _TailTable:
    """Liouville coordinate beyond a truncation bound, on ``theta = start + side*s*u/(1-u)``."""

    def __init__(self, dy, start, side, y_start, n_nodes=2049):
        s = max(abs(start), 1.0)
        self.start, self.side, self.s = start, side, s
        u = np.linspace(0.0, 1.0, n_nodes)

        def g(uu):
            om = 1.0 - uu
            return dy(start + side * s * uu / om) * s / (om * om)

        cum = _cumulative_gl(g, u)
        self.y_nodes = y_start + side * cum
        slope = np.empty_like(u)
        slope[:-1] = g(u[:-1])
        # limit of the integrand at u -> 1 from the last two interior values
        slope[-1] = 2 * slope[-2] - slope[-3]
        if side > 0:
            self._inv = CubicHermiteSpline(self.y_nodes, u, 1.0 / slope)
        else:
            self._inv = CubicHermiteSpline(self.y_nodes[::-1], u[::-1], -1.0 / slope[::-1])

    def theta(self, yv):
        uu = np.clip(self._inv(yv), 0.0, 1.0 - 1e-15)
        return self.start + self.side * self.s * uu / (1.0 - uu)


def _interp_anchor(table, nodes, at, f):
    """Cumulative-table value at an arbitrary point, via one Gauss rule from the nearest node."""
    j = int(np.clip(np.searchsorted(nodes, at), 1, len(nodes) - 1))
    j = j if abs(nodes[j] - at) < abs(nodes[j - 1] - at) else j - 1
    lo, hi = sorted((nodes[j], at))
    half = 0.5 * (hi - lo)
    piece = float((f(0.5 * (hi + lo) + half * _GL_X) * _GL_W).sum() * half)
    return table[j] + (piece if at >= nodes[j] else -piece)


def build_maps(lnd: Landscape, E: float, quad_tol: float = 1e-11, **kw) -> CoordinateMaps:
    """Build the coordinate tables; see :class:`CoordinateMaps`."""
    return CoordinateMaps(lnd, E, quad_tol, **kw)


def distance_I(maps: CoordinateMaps, t1, t2):
    """Liouville distance ``I(t1, t2) = y(t2) - y(t1)``; ``+-inf`` allowed."""
    return maps.y(t2) - maps.y(t1)
