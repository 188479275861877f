"""Closed-form hitting-time quantities for the one-dimensional telegraph dynamics.

In the arc coordinate ``x`` the trajectory moves at unit speed between
flips, the wells sit at ``x = 0`` and ``x = L``, and real time accrues at
rate ``w(x) = p(theta(x))**2 / 2``.  Well visits form a four-state chain
whose transition times are computed here by one-dimensional quadrature.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import IntEnum

import numpy as np

from .errors import DomainError
from .potential import (CoordinateMaps, Landscape, finite_integral, momentum_p,
                        tail_integral)


class State(IntEnum):
    """Well-visit states ``(position, direction)`` in the order used by :func:`transition_matrix`."""

    ZERO_MINUS = 0
    ZERO_PLUS = 1
    L_MINUS = 2
    L_PLUS = 3


def crossing_prob(lambda_c: float, L: float) -> float:
    """Probability ``1 / (1 + lambda_c L)`` of crossing the interval before returning."""
    if lambda_c < 0 or not L > 0:
        raise DomainError("need lambda_c >= 0 and L > 0")
    return 1.0 / (1.0 + lambda_c * L)


def transition_matrix(q: float) -> np.ndarray:
    """Embedded-chain transition matrix over :class:`State`."""
    if not 0 < q <= 1:
        raise DomainError("q must lie in (0, 1]")
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [1.0 - q, 0.0, 0.0, q],
        [q, 0.0, 0.0, 1.0 - q],
        [0.0, 0.0, 1.0, 0.0],
    ])


def expected_legs(q: float, start: State | int) -> float:
    """Expected number of chain steps until ``(L, +)``: ``2/q - 1`` from ``(0,+)``, ``2/q`` from ``(0,-)``."""
    if not 0 < q <= 1:
        raise DomainError("q must lie in (0, 1]")
    start = State(start)
    if start == State.ZERO_PLUS:
        return 2.0 / q - 1.0
    if start == State.ZERO_MINUS:
        return 2.0 / q
    raise DomainError("start must be (0,+) or (0,-)")


def interval_cost(lambda_c: float, L: float, w, start_sign: int, rtol: float = 1e-11) -> float:
    """Expected cost ``int w(x_s) ds`` accumulated until the walk leaves ``[0, L]``.

    ``start_sign=+1`` starts at ``0`` moving right, ``-1`` at ``L`` moving left.
    """
    q = crossing_prob(lambda_c, L)
    if start_sign > 0:
        f = lambda x: (1.0 + 2.0 * lambda_c * (L - x)) * w(x)
    else:
        f = lambda x: (1.0 + 2.0 * lambda_c * x) * w(x)
    return q * finite_integral(f, 0.0, L, rtol, "interval cost")


def halfline_cost(w, side: int, rtol: float = 1e-11) -> float:
    """Expected cost ``2 int w`` of an excursion into ``[0, inf)`` (``side=+1``) or ``(-inf, 0]``."""
    return 2.0 * tail_integral(w, 0.0, 1 if side > 0 else -1, rtol, "half-line cost")


def p_integral(lnd: Landscape, E: float, lo: float, hi: float, rtol: float = 1e-11) -> float:
    """``int_lo^hi p(theta) d theta``; either limit may be infinite."""
    p = lambda t: momentum_p(lnd, E, t)
    if math.isinf(lo) and math.isinf(hi):
        return tail_integral(p, 0.0, -1, rtol) + tail_integral(p, 0.0, 1, rtol)
    if math.isinf(lo):
        return tail_integral(p, hi, -1, rtol)
    if math.isinf(hi):
        return tail_integral(p, lo, 1, rtol)
    return finite_integral(p, lo, hi, rtol)


def deterministic_time(lnd: Landscape, maps: CoordinateMaps) -> float:
    """Real time of the flip-free crossing, ``(1/2) int_{a_left}^{a_right} p``."""
    return 0.5 * p_integral(lnd, maps.energy_E, lnd.a_left, lnd.a_right, maps.quad_tol)


def barrier_integrals(lnd: Landscape, maps: CoordinateMaps) -> tuple[float, float]:
    """``(B_0+, B_L-)`` as single quadratures of ``p`` weighted by the tabulated ``phi``."""
    E, L = maps.energy_E, maps.L_classical
    p = lambda t: momentum_p(lnd, E, t)
    b_in = finite_integral(lambda t: (L - maps.phi(t)) * p(t), lnd.a_left, lnd.a_right,
                           maps.quad_tol, "B_0+")
    b_out = finite_integral(lambda t: maps.phi(t) * p(t), lnd.a_left, lnd.a_right,
                            maps.quad_tol, "B_L-")
    return b_in, b_out


def transition_times(lnd: Landscape, maps: CoordinateMaps, lambda_c: float) -> dict:
    """Expected real duration of one chain step from each state.

    Outward states cost the tail integral of ``p``; inward states cost
    ``q (T_det + lambda_c B_z)``.
    """
    E = maps.energy_E
    q = crossing_prob(lambda_c, maps.L_classical)
    t_det = deterministic_time(lnd, maps)
    b_in, b_out = barrier_integrals(lnd, maps)
    return {
        State.ZERO_MINUS: p_integral(lnd, E, -math.inf, lnd.a_left, maps.quad_tol),
        State.ZERO_PLUS: q * (t_det + lambda_c * b_in),
        State.L_MINUS: q * (t_det + lambda_c * b_out),
        State.L_PLUS: p_integral(lnd, E, lnd.a_right, math.inf, maps.quad_tol),
    }


@dataclass
class HittingBreakdown:
    """Terms of the expected real hitting time of the global minimum."""

    t_det: float
    barrier_term: float
    tail_term: float
    total: float
    q: float
    L: float
    lambda_c: float
    u0: int
    E: float
    B_zero_plus: float
    B_L_minus: float
    tail_left: float
    tail_right: float

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def hitting_time_general(lnd: Landscape, maps: CoordinateMaps, lambda_c: float,
                         u0: int) -> HittingBreakdown:
    """``T_det + lambda_c B_0+ + (lambda_c L + 1{u0 = -1}) int_{-inf}^{a_left} p``."""
    if u0 not in (1, -1):
        raise DomainError("u0 must be +1 or -1")
    if lambda_c < 0:
        raise DomainError("rate must be nonnegative")
    E, L = maps.energy_E, maps.L_classical
    t_det = deterministic_time(lnd, maps)
    b_in, b_out = barrier_integrals(lnd, maps)
    tail_l = p_integral(lnd, E, -math.inf, lnd.a_left, maps.quad_tol)
    tail_r = p_integral(lnd, E, lnd.a_right, math.inf, maps.quad_tol)
    barrier = lambda_c * b_in
    tail = (lambda_c * L + (1.0 if u0 == -1 else 0.0)) * tail_l
    return HittingBreakdown(t_det, barrier, tail, t_det + barrier + tail,
                            crossing_prob(lambda_c, L), L, lambda_c, u0, E,
                            b_in, b_out, tail_l, tail_r)


def hitting_time_symmetric(lnd: Landscape, maps: CoordinateMaps, lambda_c: float,
                           u0: int) -> float:
    """``(1 + lambda_c L) int_0^inf p - 1{u0 = +1} int_a^inf p`` for an even landscape."""
    if not lnd.symmetric or not math.isclose(lnd.a_left, -lnd.a_right, rel_tol=1e-14):
        raise DomainError("landscape is not symmetric")
    if u0 not in (1, -1):
        raise DomainError("u0 must be +1 or -1")
    E, L = maps.energy_E, maps.L_classical
    inner = p_integral(lnd, E, 0.0, lnd.a_right, maps.quad_tol)
    tail = p_integral(lnd, E, lnd.a_right, math.inf, maps.quad_tol)
    total = (1.0 + lambda_c * L) * (inner + tail)
    return total - tail if u0 == 1 else total
