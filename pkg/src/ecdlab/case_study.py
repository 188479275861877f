"""Symmetric quartic double well: baselines, regime predictions and sweeps.

With ``delta = V0 / beta`` and ``theta = a u`` the quartic reads
``beta (delta + (1 - u^2)^2)``, so every classical quantity reduces to three
one-dimensional integrals in ``u``.  The asymptotic regime forms are
compared with the exact quadratures through two-sided ratio bounds.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import ConfigError, DomainError, EcdError
from .potential import Landscape, build_maps
from .secd_analytic import hitting_time_general
from .secd_sim import SimConfig, monte_carlo_hitting

REGIMES = ("small_error", "large_error")
SWEEP_COLUMNS = ("beta", "v0", "regime", "Tc_analytic", "Tc_mc_mean", "Tc_mc_se", "Tq_bound",
                 "Tq_measured", "Tsgd_form", "Tqtw_form")
# largest argument of exp that stays finite in double precision
_LOG_MAX = math.log(np.finfo(float).max)


class SweepWarning(UserWarning):
    pass


@dataclass
class RegimeConfig:
    """Quartic ``omega^2 (theta^2 - a^2)^2 / (8 a^2) + v0`` with fixed tunables.

    ``regime`` must agree with ``delta = v0 / beta``: ``small_error`` needs
    ``delta <= 1`` and ``large_error`` needs ``delta >= 1``.
    """

    a: float
    omega: float
    v0: float
    regime: str
    s: float = 1.0
    h: float = 1.0
    lambda_c: float = 1.0
    lambda_q: float = 1.0
    E: float = 1.0
    u0: int = 1

    def __post_init__(self):
        problems = []
        for name in ("a", "omega", "v0", "s", "h", "E", "lambda_q"):
            if not getattr(self, name) > 0:
                problems.append(f"{name}: must be positive")
        if not self.lambda_c >= 0:
            problems.append("lambda_c: rate must be nonnegative")
        if self.u0 not in (1, -1):
            problems.append("u0: must be +1 or -1")
        if self.regime not in REGIMES:
            problems.append(f"regime: must be one of {', '.join(REGIMES)}")
        elif not problems:
            d = self.delta
            if self.regime == "small_error" and d > 1.0:
                problems.append(f"regime: small_error needs v0 <= beta (delta = {d:.6g})")
            if self.regime == "large_error" and d < 1.0:
                problems.append(f"regime: large_error needs v0 >= beta (delta = {d:.6g})")
        if problems:
            raise ConfigError(problems)

    @property
    def beta(self) -> float:
        return self.a**2 * self.omega**2 / 8.0

    @property
    def delta(self) -> float:
        return self.v0 / self.beta

    def landscape(self) -> Landscape:
        return Landscape.quartic(self.a, self.omega, self.v0)

    @classmethod
    def auto(cls, a: float, omega: float, v0: float, **kw) -> "RegimeConfig":
        """Pick the regime tag from ``delta``; ``delta = 1`` counts as small."""
        beta = a * a * omega * omega / 8.0
        return cls(a, omega, v0, "small_error" if v0 <= beta else "large_error", **kw)


# ---------------------------------------------------------------------------
# closed forms


@dataclass
class BaselineTimes:
    """Gradient-descent baseline forms.

    ``sgd`` and ``qtw`` hold the times, or their natural logs when the
    matching ``*_is_log`` flag is set because the value overflows.
    """

    sgd: float
    qtw: float
    log_sgd: float
    log_qtw: float
    sgd_is_log: bool
    qtw_is_log: bool


def _exp_or_log(log_value: float) -> tuple[float, bool]:
    if log_value > _LOG_MAX:
        return log_value, True
    return math.exp(log_value), False


def baseline_times(cfg: RegimeConfig) -> BaselineTimes:
    """``sqrt(s)/(a w^3) exp(w^2 a^2 / s)`` and ``1/(a w^1.5 sqrt(h)) exp(a^2 w / h)``."""
    if not (cfg.s > 0 and cfg.h > 0):
        raise DomainError("s and h must be positive")
    a, w = cfg.a, cfg.omega
    log_sgd = 0.5 * math.log(cfg.s) - math.log(a) - 3.0 * math.log(w) + w * w * a * a / cfg.s
    log_qtw = -math.log(a) - 1.5 * math.log(w) - 0.5 * math.log(cfg.h) + a * a * w / cfg.h
    sgd, f1 = _exp_or_log(log_sgd)
    qtw, f2 = _exp_or_log(log_qtw)
    return BaselineTimes(sgd, qtw, log_sgd, log_qtw, f1, f2)


@dataclass
class SecdPrediction:
    """Regime form of the classical hitting time.

    ``lower_bound`` is the energy-independent middle term of the form.
    ``boundary`` flags a degenerate evaluation (``log(beta/v0) = 0``).
    """

    value: float
    lower_bound: float
    regime: str
    boundary: bool


def secd_prediction(cfg: RegimeConfig) -> SecdPrediction:
    """Evaluate the regime's asymptotic classical hitting-time form."""
    a, w, v0, lam, E = cfg.a, cfg.omega, cfg.v0, cfg.lambda_c, cfg.E
    if cfg.regime == "small_error":
        lg = math.log(cfg.beta / v0)
        value = (lam * a * a + math.sqrt(E) / w) * lg
        return SecdPrediction(value, lam * a * a * lg, cfg.regime, lg <= 0.0)
    scale = math.sqrt(a * E / w) * v0**-0.25
    middle = lam * a * math.sqrt(v0 / E)
    value = ((1.0 if cfg.u0 == -1 else 0.0) + middle + math.sqrt(a * w) * v0**-0.25) * scale
    return SecdPrediction(value, middle * scale, cfg.regime, False)


def qecd_prediction(cfg: RegimeConfig) -> float:
    """Upper-bound form: ``lambda_q a^2 / v0`` or ``(lambda_q / w^2) log^2(beta / v0)``."""
    if cfg.regime == "large_error":
        return cfg.lambda_q * cfg.a**2 / cfg.v0
    return cfg.lambda_q / cfg.omega**2 * math.log(cfg.beta / cfg.v0) ** 2


# ---------------------------------------------------------------------------
# exact reductions


def dimensionless_integrals(delta: float, rtol: float = 1e-12) -> tuple[float, float, float]:
    """``int_{-1}^1 r``, ``int_0^1 1/r`` and ``int_1^inf 1/r`` with ``r = sqrt(delta + (1-u^2)^2)``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    r = lambda u: math.sqrt(delta + (1.0 - u * u) ** 2)
    inv = lambda u: 1.0 / r(u)
    q = lambda f, lo, hi, **kw: integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol, limit=400, **kw)[0]
    # the 1/r peak at u = 1 has width ~sqrt(delta); give quad that scale as a breakpoint
    w = min(0.5, math.sqrt(delta))
    lcal = 2.0 * q(r, 0.0, 1.0)
    inner = q(inv, 0.0, 1.0 - w) + q(inv, 1.0 - w, 1.0)
    tail = q(inv, 1.0, 1.0 + w) + q(inv, 1.0 + w, 2.0) + q(inv, 2.0, math.inf)
    return lcal, inner, tail


def classical_lower_bound(cfg: RegimeConfig) -> float:
    """``lambda_c L int_0^inf p = lambda_c a^2 lcal (inner + tail)``, independent of ``E``.

    Every term of the exact hitting time is nonnegative, so this never
    exceeds it.
    """
    lcal, inner, tail = dimensionless_integrals(cfg.delta)
    return cfg.lambda_c * cfg.a**2 * lcal * (inner + tail)


def exact_classical(cfg: RegimeConfig, quad_tol: float = 1e-11):
    """Full quadrature hitting time (:func:`~ecdlab.secd_analytic.hitting_time_general`)."""
    lnd = cfg.landscape()
    maps = build_maps(lnd, cfg.E, quad_tol)
    return hitting_time_general(lnd, maps, cfg.lambda_c, cfg.u0)


@dataclass
class RatioBound:
    """Two-sided bound ``1/C <= value / (K reference) <= C`` with ``K`` the geometric mean ratio."""

    label: str
    x: np.ndarray
    ratios: np.ndarray
    K: float
    C: float


def ratio_bound(label: str, x, values, reference) -> RatioBound:
    r = np.asarray(values, dtype=float) / np.asarray(reference, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise DomainError(f"{label}: ratios must be finite and positive")
    return RatioBound(label, np.asarray(x, dtype=float), r, float(math.sqrt(r.max() * r.min())),
                      float(math.sqrt(r.max() / r.min())))


def integral_asymptotics(small=(1e-6, 1e-5, 1e-4, 1e-3, 1e-2), large=(1.0, 10.0, 100.0)):
    """Ratio bounds of the ``u``-integrals against their limiting forms.

    Small ``delta``: inner and tail against ``log(1/delta)``.  Large
    ``delta``: lcal against ``sqrt(delta)``, inner against ``delta^-1/2``,
    tail against ``delta^-1/4``.
    """
    small, large = np.asarray(small, float), np.asarray(large, float)
    s = np.array([dimensionless_integrals(d) for d in small])
    g = np.array([dimensionless_integrals(d) for d in large])
    return [
        ratio_bound("inner ~ log(1/delta)", small, s[:, 1], np.log(1 / small)),
        ratio_bound("tail ~ log(1/delta)", small, s[:, 2], np.log(1 / small)),
        ratio_bound("lcal ~ sqrt(delta)", large, g[:, 0], np.sqrt(large)),
        ratio_bound("inner ~ delta^-1/2", large, g[:, 1], large**-0.5),
        ratio_bound("tail ~ delta^-1/4", large, g[:, 2], large**-0.25),
    ]


# ---------------------------------------------------------------------------
# regression


@dataclass
class LinearFit:
    """Least-squares line with a 95% interval on the slope; ``ok`` is False when ill-posed."""

    slope: float
    intercept: float
    slope_ci: tuple[float, float]
    r2: float
    n: int
    ok: bool
    note: str = ""


def linear_fit(x, y) -> LinearFit:
    x, y = np.asarray(x, float), np.asarray(y, float)
    m = np.isfinite(x) & np.isfinite(y)
    x, y = x[m], y[m]
    nan = math.nan
    if x.size < 3:
        return LinearFit(nan, nan, (nan, nan), nan, int(x.size), False, "fewer than 3 points")
    if np.ptp(x) <= 1e-12 * max(1.0, float(np.abs(x).max())):
        return LinearFit(nan, nan, (nan, nan), nan, int(x.size), False, "no spread in x")
    res = stats.linregress(x, y)
    half = stats.t.ppf(0.975, x.size - 2) * res.stderr
    return LinearFit(float(res.slope), float(res.intercept), (res.slope - half, res.slope + half),
                     float(res.rvalue**2), int(x.size), True)


def loglog_fit(x, y) -> LinearFit:
    """Power-law exponent of ``y`` in ``x``; nonpositive entries are dropped."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    m = (x > 0) & (y > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return linear_fit(np.log(x[m]), np.log(y[m]))


def small_regime_fit(a: float = 1.0, omega: float = 2.0, ks=range(2, 11), lambda_c: float = 1.0,
                     E: float = 1.0, u0: int = 1):
    """Exact hitting time against ``log(beta / v0)`` for ``v0 = beta 2^-k``.

    Returns ``(log_ratio, T_exact, T_form, fit)``; the fit is linear in the log.
    """
    beta = a * a * omega * omega / 8.0
    lg, te, tf = [], [], []
    for k in ks:
        cfg = RegimeConfig(a, omega, beta * 2.0**-k, "small_error", lambda_c=lambda_c, E=E, u0=u0)
        lg.append(math.log(cfg.beta / cfg.v0))
        te.append(exact_classical(cfg).total)
        tf.append(secd_prediction(cfg).value)
    lg, te, tf = map(np.asarray, (lg, te, tf))
    return lg, te, tf, linear_fit(lg, te)


def large_regime_fit(a: float = 1.0, omega: float = 2.0, deltas=None, lambda_c: float = 1.0):
    """Exponent in ``v0`` of the energy-independent classical term for ``delta`` from 16 to 1e6."""
    if deltas is None:
        deltas = np.geomspace(16.0, 1e6, 9)
    beta = a * a * omega * omega / 8.0
    v0 = beta * np.asarray(deltas, float)
    lb = np.array([classical_lower_bound(RegimeConfig(a, omega, v, "large_error", lambda_c=lambda_c))
                   for v in v0])
    return v0, lb, loglog_fit(v0, lb)


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepSpec:
    """Barrier sweep at fixed ``a`` and ``v0`` by scaling ``omega``.

    Quantum hitting times are measured only when ``hbar`` is given, with
    ``hbar >= 0.02`` and ``n_grid <= 8192``; otherwise only the bound is
    tabulated.
    """

    betas: tuple = tuple(2.0**k for k in range(11))
    v0: float = 1.0
    n_traj: int = 4000
    seed: int = 0
    closure_fraction: float = 0.25
    hbar: float | None = None
    n_grid: int = 4096
    n_threads: int | None = None

    def __post_init__(self):
        problems = []
        if len(self.betas) == 0 or any(not b > 0 for b in self.betas):
            problems.append("betas: must be a nonempty list of positive values")
        if not self.v0 > 0:
            problems.append("v0: must be positive")
        if self.n_traj < 2:
            problems.append("n_traj: must be at least 2")
        if self.hbar is not None and not self.hbar > 0:
            problems.append("hbar: must be positive")
        if problems:
            raise ConfigError(problems)


@dataclass
class SweepResult:
    rows: list
    fits: dict
    separation: LinearFit
    crossover: list
    warnings: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in self.rows:
                w.writerow([r["regime"] if c == "regime" else _fmt(r[c]) for c in SWEEP_COLUMNS])

    def fits_dict(self) -> dict:
        out = {k: asdict(v) for k, v in self.fits.items()}
        out["separation"] = asdict(self.separation)
        return out


def _fmt(v: float) -> str:
    return "%.17g" % v


def _measure_quantum(cfg: RegimeConfig, hbar: float, n_grid: int) -> float:
    from . import qecd_spectral as qs

    lnd = cfg.landscape()
    maps = build_maps(lnd, 1.0)
    model = qs.build_spectral_model(lnd, maps, hbar, n_grid, lambda_q=cfg.lambda_q)
    alpha = qs.semiclassical_alpha(lnd, max(hbar, 0.1))
    psi0 = qs.initial_gaussian(model, lnd.a_left, alpha)
    return qs.hitting_time(model, psi0).T_hit_numeric


def scaling_sweep(base: RegimeConfig, spec: SweepSpec) -> SweepResult:
    """Tabulate classical, quantum and baseline times over ``spec.betas``.

    ``omega = sqrt(8 beta) / a``.  Baseline forms that overflow are written
    as ``inf``; their logs drive the separation fit of
    ``log(T_sgd / T_c_mc)`` against ``beta``.
    """
    rows, notes, crossover, log_sep = [], [], [], []
    measure = spec.hbar is not None and spec.hbar >= 0.02 and spec.n_grid <= 8192
    if spec.hbar is not None and not measure:
        notes.append("quantum measurement skipped: needs hbar >= 0.02 and n_grid <= 8192")
    for i, beta in enumerate(spec.betas):
        omega = math.sqrt(8.0 * beta) / base.a
        cfg = RegimeConfig.auto(base.a, omega, spec.v0, s=base.s, h=base.h, lambda_c=base.lambda_c,
                                lambda_q=base.lambda_q, E=base.E, u0=base.u0)
        if 0.25 < cfg.delta < 4.0:
            crossover.append(float(beta))
        lnd = cfg.landscape()
        maps = build_maps(lnd, cfg.E)
        exact = hitting_time_general(lnd, maps, cfg.lambda_c, cfg.u0).total
        sim = SimConfig(cfg.lambda_c, cfg.E, cfg.u0, seed=spec.seed + i, n_traj=spec.n_traj,
                        closure_fraction=spec.closure_fraction, n_threads=spec.n_threads)
        try:
            mc = monte_carlo_hitting(lnd, maps, sim)
            mc_mean, mc_se = mc.mean, mc.se
            if mc.n_timeouts:
                notes.append(f"beta={beta:g}: {mc.n_timeouts} trajectories timed out")
        except EcdError as exc:
            mc_mean = mc_se = math.nan
            notes.append(f"beta={beta:g}: Monte Carlo failed ({exc})")
        tq = math.nan
        if measure:
            try:
                tq = _measure_quantum(cfg, spec.hbar, spec.n_grid)
            except EcdError as exc:
                notes.append(f"beta={beta:g}: quantum measurement failed ({exc})")
        base_t = baseline_times(cfg)
        rows.append({
            "beta": float(beta), "v0": cfg.v0, "regime": cfg.regime, "Tc_analytic": exact,
            "Tc_mc_mean": mc_mean, "Tc_mc_se": mc_se, "Tq_bound": qecd_prediction(cfg),
            "Tq_measured": tq,
            "Tsgd_form": math.inf if base_t.sgd_is_log else base_t.sgd,
            "Tqtw_form": math.inf if base_t.qtw_is_log else base_t.qtw,
            "log_Tsgd": base_t.log_sgd, "log_Tqtw": base_t.log_qtw,
        })
        log_sep.append(base_t.log_sgd - math.log(mc_mean) if mc_mean > 0 else math.nan)

    betas = np.array([r["beta"] for r in rows])
    fits = {}
    for col in ("Tc_analytic", "Tc_mc_mean", "Tq_bound", "Tq_measured"):
        fits[col] = loglog_fit(betas, [r[col] for r in rows])
    # the baseline forms are exponential in beta: fit their logs linearly instead
    for col, key in (("Tsgd_form", "log_Tsgd"), ("Tqtw_form", "log_Tqtw")):
        fits[col] = linear_fit(betas, [r[key] for r in rows])
    sep = linear_fit(betas, log_sep)
    for name, f in list(fits.items()) + [("separation", sep)]:
        if not f.ok and not (name == "Tq_measured" and not measure):
            notes.append(f"fit {name} flagged: {f.note}")
    for n in notes:
        warnings.warn(n, SweepWarning, stacklevel=2)
    return SweepResult(rows, fits, sep, crossover, notes)
