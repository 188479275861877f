"""Spectral solution of ``H = -hbar^2 d/dtheta (V d/dtheta)`` on the Liouville grid.

With ``y = int_0^theta V**-0.5`` and ``u = V**0.25 psi`` the eigenproblem becomes
``-u'' + Q(y) u = E / hbar**2 u`` on the bounded interval ``(y_minus, y_plus)``,
``Q = V''/4 - V'**2 / (16 V)``.  Second-order central differences with
Dirichlet walls give a symmetric tridiagonal matrix; its full
eigendecomposition drives exact time evolution, detection probabilities and
the randomized-time hitting protocol.

Grid vectors are stored with the discrete normalisation ``sum |U_j|**2 = 1``,
so ``u(y_j) = U_j / sqrt(h)`` and ``int |psi|**2 d theta = int |u|**2 dy``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .eigen import eigh_tridiagonal
from .errors import DomainError, NoDetection, ResolutionError
from .potential import CoordinateMaps, Landscape
from .special import expint_e1, xe1_argmax


def wkb_cutoff(lnd: Landscape, hbar: float, n_scan: int = 4001) -> float:
    """``hbar^2 max(sup V'^2/V, sup |V''|)`` over the well region widened by half the separation."""
    half = 0.5 * (lnd.a_right - lnd.a_left)
    th = np.linspace(lnd.a_left - half, lnd.a_right + half, n_scan)
    v, d1, d2 = lnd.value(th), lnd.deriv(th), lnd.deriv2(th)
    return hbar**2 * max(float(np.max(d1 * d1 / v)), float(np.max(np.abs(d2))))


@dataclass(eq=False)
class SpectralModel:
    """Discretised Hamiltonian with its eigendecomposition.

    ``eigenvalues`` are ``lambda_n = E_n / hbar**2``; ``vectors`` holds one
    orthonormal eigenvector per row.  When ``lambda_q`` is set, time
    arguments refer to the rescaled Hamiltonian ``H / (lambda_q hbar)**2``.
    """

    landscape: Landscape
    maps: CoordinateMaps
    hbar: float
    lambda_q: float | None
    y_grid: np.ndarray
    theta_grid: np.ndarray
    h: float
    Q_diag: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    e_cut: float
    v_quarter: np.ndarray = field(repr=False, default=None)

    @property
    def n_grid(self) -> int:
        return len(self.y_grid)

    @property
    def energies(self) -> np.ndarray:
        return self.hbar**2 * self.eigenvalues

    @property
    def time_factor(self) -> float:
        """Multiplier turning reported time into evolution time under ``H``."""
        if self.lambda_q is None:
            return 1.0
        return 1.0 / (self.lambda_q * self.hbar) ** 2

    @property
    def frequencies(self) -> np.ndarray:
        """Phase rates ``E_n / hbar`` per unit of reported time."""
        return self.hbar * self.eigenvalues * self.time_factor

    def wkb_energy(self, n) -> np.ndarray:
        """``(n pi hbar / L_y)^2`` for 1-based level index ``n``."""
        return (np.asarray(n) * math.pi * self.hbar / self.maps.L_y) ** 2

    def with_lambda_q(self, lambda_q: float | None) -> "SpectralModel":
        """Same decomposition, different time rescaling."""
        out = SpectralModel(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.lambda_q = lambda_q
        return out


def build_spectral_model(lnd: Landscape, maps: CoordinateMaps, hbar: float, n_grid: int = 4096,
                         lambda_q: float | None = None, cluster_tol: float = 1e-5) -> SpectralModel:
    """Discretise on ``n_grid`` interior points of the Liouville interval and diagonalise.

    ``cluster_tol`` is passed to :func:`~ecdlab.eigen.eigh_tridiagonal`.
    """
    if not hbar > 0:
        raise DomainError("hbar must be positive")
    if n_grid < 256:
        raise DomainError("n_grid must be at least 256")
    if lambda_q is not None and not lambda_q > 0:
        raise DomainError("lambda_q must be positive")
    h = maps.L_y / (n_grid + 1)
    y = maps.y_minus + h * np.arange(1, n_grid + 1)
    th = maps.theta_of_y(y)
    v, d1, d2 = lnd.value(th), lnd.deriv(th), lnd.deriv2(th)
    Q = 0.25 * d2 - d1 * d1 / (16.0 * v)
    diag = 2.0 / h**2 + Q
    off = np.full(n_grid - 1, -1.0 / h**2)
    w, Z = eigh_tridiagonal(diag, off, cluster_tol=cluster_tol)
    return SpectralModel(lnd, maps, float(hbar), lambda_q, y, th, h, Q, w, Z,
                         wkb_cutoff(lnd, hbar), v ** 0.25)


def wkb_eigenstate(model: SpectralModel, n: int, theta):
    """``sqrt(2/L_y) V^{-1/4} sin(n pi I(-inf, theta) / L_y)``, valid above the cut-off."""
    if n < 1:
        raise DomainError("levels are indexed from 1")
    if model.wkb_energy(n) <= model.e_cut:
        raise DomainError(f"level {n} lies in the low-energy band (E <= E_cut)")
    maps = model.maps
    theta = np.asarray(theta, dtype=float)
    yv = maps.y(theta)
    v = model.landscape.value(theta)
    L = maps.L_y
    with np.errstate(divide="ignore", invalid="ignore"):
        out = math.sqrt(2.0 / L) * np.sin(n * math.pi * (yv - maps.y_minus) / L) / v ** 0.25
    out = np.where(np.isinf(theta), 0.0, out)
    return out if out.ndim else float(out)


def wkb_overlap(model: SpectralModel, n: int) -> float:
    """Overlap of the WKB state with numeric eigenvector ``n`` (1-based), in the theta measure."""
    if model.wkb_energy(n) <= model.e_cut:
        raise DomainError(f"level {n} lies in the low-energy band (E <= E_cut)")
    L = model.maps.L_y
    s = math.sqrt(2.0 / L) * np.sin(n * math.pi * (model.y_grid - model.maps.y_minus) / L)
    return float(model.vectors[n - 1] @ s * math.sqrt(model.h))


def endpoint_phases(model: SpectralModel) -> tuple[float, float]:
    """Phase lag ``(nu - 1/2) pi / 2`` at each wall, with ``nu = sqrt(Q d^2 + 1/4)``.

    Near a wall at distance ``d`` the Liouville potential behaves like
    ``(nu^2 - 1/4) / d^2``; the regular solution ``sqrt(kd) J_nu(kd)`` then
    lags the free sine by the returned amount.  ``Q d^2`` is read off the
    grid point next to each wall.
    """
    h2 = model.h**2
    nu = [math.sqrt(max(model.Q_diag[i] * h2, 0.0) + 0.25) for i in (0, -1)]
    return tuple((v - 0.5) * 0.5 * math.pi for v in nu)


def wkb_phase_overlap(model: SpectralModel, n: int) -> float:
    """|Overlap| of eigenvector ``n`` with the wall-phase corrected sine.

    Uses ``sin(k (y - y_minus) - s_L)`` with ``k L_y = n pi + s_L + s_R``.
    """
    if model.wkb_energy(n) <= model.e_cut:
        raise DomainError(f"level {n} lies in the low-energy band (E <= E_cut)")
    s_l, s_r = endpoint_phases(model)
    k = (n * math.pi + s_l + s_r) / model.maps.L_y
    s = np.sin(k * (model.y_grid - model.maps.y_minus) - s_l)
    return float(abs(model.vectors[n - 1] @ s) / np.linalg.norm(s))


@dataclass
class Wavepacket:
    """State as spectral coefficients ``c_n`` at reported time ``t``."""

    model: SpectralModel
    coeffs: np.ndarray
    t: float = 0.0
    projection_norm: float = 1.0
    alpha: float | None = None

    @property
    def grid_values(self) -> np.ndarray:
        """``U_j`` with ``sum |U_j|^2 = int |psi|^2 d theta``."""
        return self.coeffs @ self.model.vectors

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def psi_theta(self) -> np.ndarray:
        """``psi(theta_j)`` on the model's theta nodes."""
        m = self.model
        return self.grid_values / (math.sqrt(m.h) * m.v_quarter)

    def energy(self) -> float:
        """``<psi|H|psi>`` of the discretised Hamiltonian."""
        return float(self.model.hbar**2 * np.sum(self.model.eigenvalues * np.abs(self.coeffs) ** 2))

    def mean_position(self) -> float:
        return float(np.sum(self.model.theta_grid * np.abs(self.grid_values) ** 2))


def initial_gaussian(model: SpectralModel, center: float | None = None, alpha: float = 1.0,
                     min_points: int = 8) -> Wavepacket:
    """Zero-momentum Gaussian of width ``sigma = alpha sqrt(hbar)``, projected and renormalised."""
    lnd = model.landscape
    if center is None:
        center = lnd.a_left
    sigma = alpha * math.sqrt(model.hbar)
    sigma_y = sigma / math.sqrt(float(lnd.value(center)))
    if sigma_y / model.h < min_points:
        raise ResolutionError(
            f"sigma spans {sigma_y / model.h:.2f} grid points in y; need {min_points}")
    th = model.theta_grid
    psi = (2 * math.pi * sigma**2) ** -0.25 * np.exp(-((th - center) ** 2) / (4 * sigma**2))
    U = model.v_quarter * psi * math.sqrt(model.h)
    raw = float(U @ U)
    U /= math.sqrt(raw)
    return Wavepacket(model, model.vectors @ U, 0.0, raw, alpha)


def evolve(model: SpectralModel, psi: Wavepacket, t: float) -> Wavepacket:
    """Advance by reported time ``t`` (phases ``exp(-i E_n t / hbar)``, rescaled if ``lambda_q`` set)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    phase = np.exp(-1j * model.frequencies * t)
    return Wavepacket(model, psi.coeffs * phase, psi.t + t, psi.projection_norm, psi.alpha)


def window_weights(model: SpectralModel, center: float, sigma: float) -> np.ndarray:
    """Nodal weights ``w_j`` with ``int_{window} |u|^2 dy ~= sum_j w_j |U_j|^2``.

    The density ``|u|^2`` is interpolated linearly between nodes, with zero
    at the walls, and integrated exactly over ``[y(c - sigma), y(c + sigma)]``.
    """
    maps = model.maps
    lo, hi = center - sigma, center + sigma
    ylo = maps.y_minus if math.isinf(lo) else maps.y(lo)
    yhi = maps.y_plus if math.isinf(hi) else maps.y(hi)
    h = model.h
    n = model.n_grid
    # node k = 0..n+1 at y_minus + k h; nodes 0 and n+1 are the walls
    a = (ylo - maps.y_minus) / h
    b = (yhi - maps.y_minus) / h
    a, b = max(a, 0.0), min(b, n + 1.0)
    wts = np.zeros(n + 2)
    if b <= a:
        return wts[1:-1]
    k0, k1 = int(math.floor(a)), int(math.ceil(b))
    for k in range(k0, min(k1, n + 1)):
        s0, s1 = max(a, k) - k, min(b, k + 1) - k
        if s1 <= s0:
            continue
        # hat functions on [k, k+1]: (1 - s) at node k, s at node k + 1
        wts[k] += (s1 - s0) - 0.5 * (s1 * s1 - s0 * s0)
        wts[k + 1] += 0.5 * (s1 * s1 - s0 * s0)
    return wts[1:-1]


def detection_prob(model: SpectralModel, psi_t: Wavepacket, window_center: float,
                   sigma: float) -> float:
    """Probability mass in ``[c - sigma, c + sigma]`` (theta measure)."""
    w = window_weights(model, window_center, sigma)
    return float(np.sum(w * np.abs(psi_t.grid_values) ** 2))


def _retained(psi0: Wavepacket, threshold: float):
    keep = np.flatnonzero(np.abs(psi0.coeffs) ** 2 > threshold)
    return keep


def _window_matrix(model, psi0, window, keep):
    w = window_weights(model, *window)
    idx = np.flatnonzero(w)
    Zk = model.vectors[np.ix_(keep, idx)]
    c = psi0.coeffs[keep]
    A = (Zk * w[idx]) @ Zk.T
    return A * np.outer(c, np.conj(c)), idx


def averaged_prob(model: SpectralModel, psi0: Wavepacket, tau, window, method: str = "exact",
                  threshold: float = 1e-14):
    """``(1/tau) int_0^tau p_sigma(t) dt`` for ``window = (center, sigma)``.

    ``method="exact"`` integrates each mode pair in closed form,
    ``sum c_n c_m W_nm sinc((omega_n - omega_m) tau)``.  ``method="quadrature"``
    samples ``p_sigma`` with composite Simpson at a step no larger than
    ``2 pi / (10 omega_max)`` over the retained modes.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau_arr < 0):
        raise DomainError("tau must be nonnegative")
    keep = _retained(psi0, threshold)
    M, idx = _window_matrix(model, psi0, window, keep)
    om = model.frequencies[keep]
    if method == "exact":
        d = om[:, None] - om[None, :]
        out = np.array([float(np.real(np.sum(M * np.sinc(d * tv / math.pi)))) for tv in tau_arr])
    elif method == "quadrature":
        Zk = model.vectors[np.ix_(keep, idx)]
        w = window_weights(model, *window)[idx]
        c = psi0.coeffs[keep]
        step = 2 * math.pi / (10 * max(float(np.max(np.abs(om - om.min()))), 1e-300))
        out = np.empty_like(tau_arr)
        for i, tv in enumerate(tau_arr):
            if tv == 0:
                out[i] = float(np.sum(w * np.abs(c @ Zk) ** 2))
                continue
            m = max(2, int(math.ceil(tv / step)))
            m += m % 2
            ts = np.linspace(0.0, tv, m + 1)
            amp = (c[None, :] * np.exp(-1j * np.outer(ts, om))) @ Zk
            p = np.sum(w * np.abs(amp) ** 2, axis=1)
            wq = np.ones(m + 1)
            wq[1:-1:2], wq[2:-1:2] = 4.0, 2.0
            out[i] = float(np.sum(wq * p) * (tv / m) / 3.0 / tv)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out if np.ndim(tau) else float(out[0])


def detection_series(model: SpectralModel, psi0: Wavepacket, times, window,
                     threshold: float = 1e-14) -> np.ndarray:
    """``p_sigma(t)`` on an array of reported times."""
    keep = _retained(psi0, threshold)
    w = window_weights(model, *window)
    idx = np.flatnonzero(w)
    Zk = model.vectors[np.ix_(keep, idx)]
    c = psi0.coeffs[keep]
    om = model.frequencies[keep]
    times = np.asarray(times, dtype=float)
    out = np.empty(times.shape)
    for i, t in enumerate(times.ravel()):
        amp = (c * np.exp(-1j * om * t)) @ Zk
        out.flat[i] = float(np.sum(w[idx] * np.abs(amp) ** 2))
    return out


# ---------------------------------------------------------------------------
# closed forms

@dataclass
class PbarConstants:
    """Constants of the averaged-probability closed form ``(A / 2 tau) E1(B / tau^2)``."""

    A: float
    B: float
    I0: float
    v0: float
    v1: float
    alpha: float
    hbar: float

    @property
    def tau_star(self) -> float:
        """Minimiser of ``tau / pbar``, ``sqrt(B / x0)`` with ``x0`` maximising ``x E1(x)``."""
        return math.sqrt(self.B / xe1_argmax())


def pbar_constants(lnd: Landscape, maps: CoordinateMaps, hbar: float, alpha: float) -> PbarConstants:
    """``A = sqrt(2) alpha^2 / sqrt(pi V0 V1)``, ``B = alpha^2 I0^2 / (2 hbar V1)``."""
    I0 = float(maps.y(lnd.a_right) - maps.y(lnd.a_left))
    A = math.sqrt(2.0) * alpha**2 / math.sqrt(math.pi * lnd.v0 * lnd.v1)
    B = alpha**2 * I0**2 / (2.0 * hbar * lnd.v1)
    return PbarConstants(A, B, I0, lnd.v0, lnd.v1, alpha, hbar)


def analytic_pbar(lnd: Landscape, maps: CoordinateMaps, hbar: float, alpha: float, tau):
    """``(A / 2 tau) E1(B / tau^2)``; tends to 0 as ``tau -> 0``."""
    k = pbar_constants(lnd, maps, hbar, alpha)
    tau = np.asarray(tau, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.where(tau > 0, k.B / np.where(tau > 0, tau, 1.0) ** 2, np.inf)
    e1 = np.where(np.isinf(x), 0.0, expint_e1(np.where(np.isinf(x), 1.0, x)))
    out = np.where(tau > 0, k.A / (2.0 * np.where(tau > 0, tau, 1.0)) * e1, 0.0)
    return out if out.ndim else float(out)


def hitting_constant() -> float:
    """``c = sqrt(pi / 2) / (x0 E1(x0))``: the closed form gives ``inf tau/pbar = c I0^2 sqrt(V0/V1) / hbar``."""
    x0 = xe1_argmax()
    return math.sqrt(math.pi / 2.0) / (x0 * expint_e1(x0))


def hitting_scale(lnd: Landscape, maps: CoordinateMaps, hbar: float) -> float:
    """``I0^2 sqrt(V0 / V1) / hbar``."""
    I0 = float(maps.y(lnd.a_right) - maps.y(lnd.a_left))
    return I0**2 * math.sqrt(lnd.v0 / lnd.v1) / hbar


def semiclassical_alpha(lnd: Landscape, hbar_max: float) -> float:
    """Largest ``alpha`` whose packet kinetic energy ``hbar V1 / (4 alpha^2)`` reaches ``E_cut``."""
    lam_cut = wkb_cutoff(lnd, 1.0)
    return math.sqrt(lnd.v1 / (4.0 * hbar_max * lam_cut))


@dataclass
class QuantumHitReport:
    tau_grid: np.ndarray
    pbar_numeric: np.ndarray
    pbar_analytic: np.ndarray
    T_hit_numeric: float
    tau_at_min: float
    T_bound: float
    T_scale: float
    C_fit: float
    bracket_ok: bool
    hbar: float
    alpha: float
    lambda_q: float | None


def hitting_time(model: SpectralModel, psi0: Wavepacket, window=None, alpha: float | None = None,
                 n_tau: int = 161, span=(1.0 / 8.0, 30.0)) -> QuantumHitReport:
    """Minimise ``tau / pbar(tau)`` over a log grid around the closed-form optimum.

    The grid spans ``span`` times ``tau*`` (both in reported time units).
    ``T_bound`` is the closed-form value ``c I0^2 sqrt(V0/V1) / hbar`` scaled
    to reported time; ``C_fit`` is the numeric minimum over ``I0^2 sqrt(V0/V1) / hbar``.
    """
    lnd, maps = model.landscape, model.maps
    if alpha is None:
        alpha = psi0.alpha
    if alpha is None:
        raise DomainError("alpha is required for the closed-form comparison")
    sigma = alpha * math.sqrt(model.hbar)
    if window is None:
        window = (lnd.a_right, sigma)
    k = pbar_constants(lnd, maps, model.hbar, alpha)
    tf = model.time_factor
    tau_star = k.tau_star / tf
    taus = tau_star * np.geomspace(span[0], span[1], n_tau)
    pn = averaged_prob(model, psi0, taus, window)
    pa = analytic_pbar(lnd, maps, model.hbar, alpha, taus * tf)
    if not np.any(pn > 1e-300):
        raise NoDetection("averaged detection probability underflows on the whole bracket")
    with np.errstate(divide="ignore"):
        ratio = np.where(pn > 0, taus / np.where(pn > 0, pn, 1.0), np.inf)
    j = int(np.argmin(ratio))
    scale = hitting_scale(lnd, maps, model.hbar) / tf
    return QuantumHitReport(taus, pn, pa, float(ratio[j]), float(taus[j]),
                            hitting_constant() * scale, scale, float(ratio[j]) / scale,
                            0 < j < n_tau - 1, model.hbar, alpha, model.lambda_q)


# ---------------------------------------------------------------------------
# propagator

@dataclass
class PropagatorComparison:
    exact: complex
    closed_form: complex
    rel_error: float
    modulus_rel_error: float
    k_low: complex
    n_low: int
    k_low_bound: float
    in_time_window: bool
    delta: float


def _eigen_theta(model: SpectralModel, theta: float) -> np.ndarray:
    """All eigenfunctions ``psi_n(theta)``, linear interpolation in y between nodes."""
    yv = float(model.maps.y(theta))
    f = (yv - model.maps.y_minus) / model.h - 1.0
    j = int(math.floor(f))
    if not 0 <= j < model.n_grid - 1:
        raise DomainError("theta outside the interior grid")
    s = f - j
    u = ((1 - s) * model.vectors[:, j] + s * model.vectors[:, j + 1]) / math.sqrt(model.h)
    return u / float(model.landscape.value(theta)) ** 0.25


def _smoothed_closed_form(lnd, maps, hb, theta1, theta2, t, width, n_nodes=401):
    tp = theta1 + width * np.linspace(-8.0, 8.0, n_nodes)
    g = np.exp(-((tp - theta1) ** 2) / (2 * width**2)) / (math.sqrt(2 * math.pi) * width)
    I = np.abs(maps.y(theta2) - maps.y(tp))
    k = (np.exp(1j * (I**2 / (4 * hb * t) - math.pi / 4))
         / (2 * math.sqrt(math.pi * hb * t) * (lnd.value(tp) * lnd.value(theta2)) ** 0.25))
    return complex(integrate.trapezoid(k * g, tp))


def propagator_compare(model: SpectralModel, theta1: float, theta2: float, t: float,
                       smoothing: float | None = None) -> PropagatorComparison:
    """Spectral kernel ``sum_n exp(-i E_n t / hbar) psi_n(theta2) psi_n(theta1)`` versus the
    stationary-phase form ``exp(i[I^2 / (4 hbar t) - pi/4]) / (2 sqrt(pi hbar t) (V1 V2)^{1/4})``.

    On a bounded Liouville interval the pointwise kernel at real time is a
    distribution (wall reflections never decay), so the raw sum depends on
    the spectral cut-off.  With ``smoothing`` set, both kernels are averaged
    over ``theta1`` against a normalised Gaussian of that width, which damps
    reflected paths relative to the direct one.

    ``t`` is physical time under ``H``.  The time window ``t < delta I / hbar``
    uses ``delta = hbar / (2 sqrt(E_cut))``, the largest value keeping the
    saddle energy ``I^2 / (4 t^2)`` above ``E_cut``.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    lnd, maps, hb = model.landscape, model.maps, model.hbar
    p2 = _eigen_theta(model, theta2)
    if smoothing is None:
        p1 = _eigen_theta(model, theta1)
        closed = complex(np.exp(1j * (float(maps.y(theta2) - maps.y(theta1)) ** 2 / (4 * hb * t) - math.pi / 4))
                         / (2 * math.sqrt(math.pi * hb * t)
                            * float(lnd.value(theta1) * lnd.value(theta2)) ** 0.25))
    else:
        g = (np.exp(-((model.theta_grid - theta1) ** 2) / (2 * smoothing**2))
             / (math.sqrt(2 * math.pi) * smoothing))
        # int psi_n g d theta = sum_j U_nj V_j^{1/4} g_j sqrt(h)
        p1 = model.vectors @ (model.v_quarter * g) * math.sqrt(model.h)
        closed = _smoothed_closed_form(lnd, maps, hb, theta1, theta2, t, smoothing)
    phase = np.exp(-1j * hb * model.eigenvalues * t)
    terms = phase * p1 * p2
    exact = complex(np.sum(terms))
    I = float(abs(maps.y(theta2) - maps.y(theta1)))
    low = model.energies < model.e_cut
    k_low = complex(np.sum(terms[low]))
    n_low = int(low.sum())
    bound = n_low * float(np.max(np.abs(p1[low] * p2[low]))) if n_low else 0.0
    delta = hb / (2.0 * math.sqrt(model.e_cut))
    return PropagatorComparison(exact, closed, abs(exact - closed) / abs(closed),
                                abs(abs(exact) - abs(closed)) / abs(closed), k_low, n_low,
                                bound, t < delta * I / hb, delta)
