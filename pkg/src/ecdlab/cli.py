"""Command-line front end: ``ecdlab <subcommand> --config run.ini --out DIR``.

The config file is flat INI: ``[section]`` headers followed by
``key = value`` lines; ``#`` and ``;`` start comments.  Unknown sections or
keys, duplicates and malformed values are reported together with their
line numbers.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EcdError

SUBCOMMANDS = ("validate", "simulate-secd", "analytic-secd", "spectrum", "evolve", "hit-quantum",
               "dimensionless", "sweep")


# ---------------------------------------------------------------------------
# schema

def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(s):
    return int(s, 0)


def _floats(s):
    vals = [_float(t) for t in s.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty list")
    return vals


def _opt_float(s):
    return None if s.strip().lower() in ("none", "") else _float(s)


def _u0(s):
    v = int(s)
    if v not in (1, -1):
        raise ValueError("must be +1 or -1")
    return v


def _kind(s):
    if s != "quartic":
        raise ValueError("only 'quartic' landscapes are configurable from a file")
    return s


def _positive(v):
    return v is None or (min(v) if isinstance(v, list) else v) > 0


def _rate(v):
    return v >= 0


# section -> key -> (parser, default, check, message)
SCHEMA = {
    "potential": {
        "kind": (_kind, "quartic", None, ""),
        "a": (_float, 1.0, _positive, "must be positive"),
        "omega": (_float, 2.0, _positive, "must be positive"),
        "v0": (_float, 1.0, _positive, "must be positive"),
    },
    "classical": {
        "lambda_c": (_float, None, _rate, "rate must be nonnegative"),
        "E": (_float, 1.0, _positive, "must be positive"),
        "u0": (_u0, 1, None, ""),
        "n_traj": (_int, 1000, _positive, "must be positive"),
        "seed": (_int, 0, lambda v: 0 <= v < 2**64, "must be an unsigned 64-bit integer"),
        "max_s": (_float, 1e7, _positive, "must be positive"),
        "closure_fraction": (_float, 0.1, lambda v: 0 < v < 1, "must lie in (0, 1)"),
    },
    "quantum": {
        "hbar": (_floats, None, _positive, "must be positive"),
        "lambda_q": (_opt_float, None, _positive, "must be positive"),
        "alpha": (_opt_float, None, _positive, "must be positive"),
        "n_grid": (_int, 4096, lambda v: v >= 256, "must be at least 256"),
        "n_tau": (_int, 161, lambda v: v >= 3, "must be at least 3"),
        "times": (_floats, [0.0, 0.5, 1.0, 2.0, 4.0], lambda v: min(v) >= 0, "must be nonnegative"),
    },
    "sweep": {
        "betas": (_floats, [2.0**k for k in range(11)], _positive, "must be positive"),
        "v0": (_float, 1.0, _positive, "must be positive"),
        "n_traj": (_int, 4000, lambda v: v >= 2, "must be at least 2"),
        "closure_fraction": (_float, 0.25, lambda v: 0 < v < 1, "must lie in (0, 1)"),
        "hbar": (_opt_float, None, _positive, "must be positive"),
        "n_grid": (_int, 4096, lambda v: v >= 256, "must be at least 256"),
        "s": (_float, 1.0, _positive, "must be positive"),
        "h": (_float, 1.0, _positive, "must be positive"),
    },
    "dimensionless": {
        "deltas": (_floats, [10.0**k for k in range(-6, 3)], _positive, "must be positive"),
    },
    "tolerance": {
        "quad_tol": (_float, 1e-11, lambda v: 0 < v < 1, "must lie in (0, 1)"),
        "eig_tol": (_float, 1e-5, lambda v: 0 < v < 1, "must lie in (0, 1)"),
    },
    "output": {
        "dir": (str, "ecdlab-out", None, ""),
    },
}

# keys that must appear in the file for a given subcommand
REQUIRED = {
    "simulate-secd": [("classical", "lambda_c")],
    "analytic-secd": [("classical", "lambda_c")],
    "spectrum": [("quantum", "hbar")],
    "evolve": [("quantum", "hbar")],
    "hit-quantum": [("quantum", "hbar")],
    "sweep": [("classical", "lambda_c")],
}


@dataclass
class RunConfig:
    """Parsed configuration: one dict of resolved values per section."""

    subcommand: str | None
    sections: dict
    lines: dict = field(default_factory=dict)
    source: str = ""
    digest: str = ""

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def require(self, subcommand: str) -> None:
        missing = [f"[{s}] {k}: required for {subcommand}" for s, k in REQUIRED.get(subcommand, [])
                   if self.sections[s][k] is None]
        if missing:
            raise ConfigError(missing)

    def echo(self) -> dict:
        return {s: dict(v) for s, v in self.sections.items()}


def parse_text(text: str, subcommand: str | None = None, source: str = "<string>") -> RunConfig:
    """Parse INI text; every problem is collected before raising :class:`ConfigError`."""
    problems, seen, raw = [], {}, {}
    section = None
    for ln, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                problems.append(f"line {ln}: malformed section header")
                continue
            section = s[1:-1].strip()
            if section not in SCHEMA:
                problems.append(f"line {ln}: unknown section [{section}]")
            continue
        if "=" not in s:
            problems.append(f"line {ln}: expected 'key = value'")
            continue
        key, value = (t.strip() for t in s.split("=", 1))
        if section is None:
            problems.append(f"line {ln}: key '{key}' outside any section")
            continue
        if section not in SCHEMA:
            continue
        if key not in SCHEMA[section]:
            problems.append(f"line {ln}: unknown key '{key}' in [{section}]")
            continue
        if (section, key) in seen:
            problems.append(f"lines {seen[(section, key)]} and {ln}: duplicate key '{key}' in [{section}]")
            continue
        seen[(section, key)] = ln
        raw[(section, key)] = value

    sections = {}
    for sec, keys in SCHEMA.items():
        vals = {}
        for key, (parse, default, check, msg) in keys.items():
            if (sec, key) not in raw:
                vals[key] = list(default) if isinstance(default, list) else default
                continue
            ln = seen[(sec, key)]
            try:
                v = parse(raw[(sec, key)])
            except ValueError as exc:
                problems.append(f"line {ln}: {key}: cannot parse {raw[(sec, key)]!r} ({exc})")
                continue
            if check is not None and not check(v):
                problems.append(f"line {ln}: {key}: {msg}")
                continue
            vals[key] = v
        sections[sec] = vals
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(subcommand, sections, {f"{s}.{k}": ln for (s, k), ln in seen.items()}, source,
                    hashlib.sha256(text.encode()).hexdigest())
    if subcommand is not None:
        cfg.require(subcommand)
    return cfg


def parse_config(path, subcommand: str | None = None) -> RunConfig:
    """Read and validate a config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_text(p.read_text(), subcommand, str(p))


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return o if math.isfinite(o) else str(o)
    return o


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


class Run:
    """Collects outputs and warnings of one subcommand."""

    def __init__(self, cfg: RunConfig, out: Path, seed: int, threads: int | None):
        self.cfg, self.out, self.seed, self.threads = cfg, out, seed, threads
        self.outputs, self.warnings = [], []

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def warn(self, msg: str) -> None:
        self.warnings.append(msg)


# ---------------------------------------------------------------------------
# subcommands

def _landscape(cfg):
    from .potential import Landscape
    p = cfg["potential"]
    return Landscape.quartic(p["a"], p["omega"], p["v0"])


def _maps(cfg, lnd, E=1.0):
    from .potential import build_maps
    return build_maps(lnd, E, cfg["tolerance"]["quad_tol"])


def cmd_validate(run: Run):
    from .potential import validate_assumptions
    lnd = _landscape(run.cfg)
    rep = validate_assumptions(lnd)
    write_json(run.path("validation.json"), {"ok": rep.ok, **rep.as_dict()})
    for name, chk in rep.as_dict().items():
        if not chk["passed"]:
            run.warn(f"assumption check '{name}' failed: {chk['detail']}")


def cmd_analytic_secd(run: Run):
    from .secd_analytic import hitting_time_general
    c = run.cfg["classical"]
    lnd = _landscape(run.cfg)
    maps = _maps(run.cfg, lnd, c["E"])
    hb = hitting_time_general(lnd, maps, c["lambda_c"], c["u0"])
    write_json(run.path("analytic.json"), asdict(hb))


def cmd_simulate_secd(run: Run):
    from .secd_analytic import hitting_time_general
    from .secd_sim import SimConfig, monte_carlo_hitting
    c = run.cfg["classical"]
    lnd = _landscape(run.cfg)
    maps = _maps(run.cfg, lnd, c["E"])
    sim = SimConfig(c["lambda_c"], c["E"], c["u0"], seed=run.seed, max_s=c["max_s"],
                    n_traj=c["n_traj"], quad_tol=run.cfg["tolerance"]["quad_tol"],
                    closure_fraction=c["closure_fraction"], n_threads=run.threads)
    rep = monte_carlo_hitting(lnd, maps, sim)
    write_csv(run.path("trajectories.csv"),
              ("traj_id", "seed", "hit", "t_real", "s_elapsed", "n_flips"),
              ((i, run.seed, int(rep.hit[i]), rep.t_real[i], rep.s_elapsed[i], int(rep.n_flips[i]))
               for i in range(rep.n_traj)))
    exact = hitting_time_general(lnd, maps, c["lambda_c"], c["u0"]).total
    z = (rep.mean - exact) / rep.se if rep.se and rep.se > 0 else math.nan
    write_json(run.path("secd_mc.json"), {**rep.summary(), "analytic": exact, "z_score": z})
    if rep.n_timeouts:
        run.warn(f"{rep.n_timeouts} trajectories timed out")


def _spectral(run: Run, hbar):
    from .qecd_spectral import build_spectral_model
    q = run.cfg["quantum"]
    lnd = _landscape(run.cfg)
    maps = _maps(run.cfg, lnd)
    return build_spectral_model(lnd, maps, hbar, q["n_grid"], q["lambda_q"],
                                run.cfg["tolerance"]["eig_tol"])


def _single_hbar(run: Run) -> float:
    hb = run.cfg["quantum"]["hbar"]
    if len(hb) != 1:
        raise ConfigError(f"[quantum] hbar: {run.cfg.subcommand} takes a single value")
    return hb[0]


def _alpha(run: Run, lnd) -> float:
    from .qecd_spectral import semiclassical_alpha
    q = run.cfg["quantum"]
    return q["alpha"] if q["alpha"] is not None else semiclassical_alpha(lnd, max(q["hbar"]))


def cmd_spectrum(run: Run):
    m = _spectral(run, _single_hbar(run))
    n = np.arange(1, m.n_grid + 1)
    e = m.energies
    ew = m.wkb_energy(n)
    write_csv(run.path("spectrum.csv"), ("n", "E_n", "E_wkb_n", "rel_err"),
              zip(n, e, ew, e / ew - 1.0))
    write_json(run.path("spectrum.json"), {"hbar": m.hbar, "n_grid": m.n_grid, "L_y": m.maps.L_y,
                                           "E_cut": m.e_cut, "h": m.h})


def cmd_evolve(run: Run):
    from .qecd_spectral import detection_prob, evolve, initial_gaussian
    m = _spectral(run, _single_hbar(run))
    lnd = m.landscape
    alpha = _alpha(run, lnd)
    psi0 = initial_gaussian(m, lnd.a_left, alpha)
    sigma = alpha * math.sqrt(m.hbar)
    rows = []
    for t in run.cfg["quantum"]["times"]:
        psi = evolve(m, psi0, t)
        rows.append((t, psi.norm, psi.mean_position(), psi.energy(),
                     detection_prob(m, psi, lnd.a_left, sigma),
                     detection_prob(m, psi, lnd.a_right, sigma)))
    write_csv(run.path("evolve.csv"), ("t", "norm", "mean_theta", "energy", "p_left", "p_right"), rows)


def cmd_hit_quantum(run: Run):
    from .qecd_spectral import hitting_time, initial_gaussian
    q = run.cfg["quantum"]
    hbars = q["hbar"]
    rows = []
    for k, hb in enumerate(hbars):
        m = _spectral(run, hb)
        lnd = m.landscape
        alpha = _alpha(run, lnd)
        psi0 = initial_gaussian(m, lnd.a_left, alpha)
        rep = hitting_time(m, psi0, n_tau=q["n_tau"])
        name = "pbar.csv" if len(hbars) == 1 else f"pbar_{k}.csv"
        write_csv(run.path(name), ("tau", "pbar_numeric", "pbar_analytic"),
                  zip(rep.tau_grid, rep.pbar_numeric, rep.pbar_analytic))
        rows.append((hb, rep.T_hit_numeric, rep.T_bound))
        if not rep.bracket_ok:
            run.warn(f"hbar={hb:g}: minimum of tau/pbar sits on the edge of the tau bracket")
    write_csv(run.path("qhit.csv"), ("hbar", "T_hit_numeric", "T_bound"), rows)


def cmd_dimensionless(run: Run):
    from .case_study import dimensionless_integrals
    ds = run.cfg["dimensionless"]["deltas"]
    write_csv(run.path("dimensionless.csv"), ("delta", "lcal", "inner", "tail"),
              ((d, *dimensionless_integrals(d)) for d in ds))


def cmd_sweep(run: Run):
    from .case_study import RegimeConfig, SweepSpec, SweepWarning, scaling_sweep
    c, s, q, p = (run.cfg[k] for k in ("classical", "sweep", "quantum", "potential"))
    base = RegimeConfig.auto(p["a"], p["omega"], p["v0"], s=s["s"], h=s["h"],
                             lambda_c=c["lambda_c"], lambda_q=q["lambda_q"] or 1.0, E=c["E"],
                             u0=c["u0"])
    spec = SweepSpec(tuple(s["betas"]), s["v0"], s["n_traj"], run.seed, s["closure_fraction"],
                     s["hbar"], s["n_grid"], run.threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SweepWarning)
        res = scaling_sweep(base, spec)
    res.to_csv(run.path("sweep.csv"))
    write_json(run.path("sweep_fits.json"), {"fits": res.fits_dict(), "crossover_betas": res.crossover})
    for w in res.warnings:
        run.warn(w)


COMMANDS = {
    "validate": cmd_validate,
    "simulate-secd": cmd_simulate_secd,
    "analytic-secd": cmd_analytic_secd,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "hit-quantum": cmd_hit_quantum,
    "dimensionless": cmd_dimensionless,
    "sweep": cmd_sweep,
}


def _versions() -> dict:
    import scipy
    from . import __version__
    from ._backend import BACKEND
    return {"ecdlab": __version__, "backend": BACKEND, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def dispatch(cfg: RunConfig, out=None, seed: int | None = None, threads: int | None = None) -> int:
    """Run ``cfg.subcommand``; returns 0 on success, 2 with warnings, 1 on error."""
    if cfg.subcommand not in COMMANDS:
        print(f"error: unknown subcommand {cfg.subcommand!r}", file=sys.stderr)
        return 1
    if seed is None:
        seed = cfg["classical"]["seed"]
    if threads is None and os.environ.get("ECD_LAB_THREADS"):
        threads = int(os.environ["ECD_LAB_THREADS"])
    out = Path(out if out is not None else cfg["output"]["dir"])
    t0 = time.perf_counter()
    try:
        cfg.require(cfg.subcommand)
        out.mkdir(parents=True, exist_ok=True)
        run = Run(cfg, out, seed, threads)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            COMMANDS[cfg.subcommand](run)
        for w in caught:
            if issubclass(w.category, UserWarning):
                run.warn(str(w.message))
    except (EcdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_json(out / "manifest.json", {
        "subcommand": cfg.subcommand, "config": cfg.echo(), "config_path": cfg.source,
        "config_sha256": cfg.digest, "seed": seed, "threads": threads, "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0, "outputs": run.outputs, "warnings": run.warnings,
    })
    for w in run.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 2 if run.warnings else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecdlab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides [classical] seed)")
    ap.add_argument("--threads", type=int, help="worker threads (fallback: ECD_LAB_THREADS)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(args.config, args.subcommand)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 1
    return dispatch(cfg, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
