"""Command-line front end: ``ringhopf <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Floats are
written with 12 significant digits; outputs carry no timestamps, so identical
inputs give byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bifurcation import (
    CALIBRATED_PSI,
    TABLE_AMBIENT,
    branch_from_center,
    calibrate_psi,
    classify_equilibrium_hopf,
    compare_events,
    find_centers,
    golden,
    hopf_scan_releq,
    regularity_check,
    releq_at,
    reproduce_table,
    table_csv,
)
from .model import LaserParams, load_params, case_study_params, trivial_equilibrium
from .simulator import (
    fit_rotating_wave,
    integrate,
    power_traces_csv,
    rotating_wave_history,
    trajectory_csv,
)
from .spectral import CONVENTIONS, RootCountError
from .symmetry import ambient_twist, catalog_json

log = logging.getLogger("ringhopf")

SELECTORS = ("D8", "Z8t1", "Z8t2", "Z8t3", "D8d")


class ConfigError(Exception):
    """Invalid command line or configuration file (exit code 2)."""


class NumericalFailure(Exception):
    """A computation did not converge (exit code 3)."""


@dataclass
class RunConfig:
    params: LaserParams
    out: Path | None = None
    threads: int = 1
    convention: str = "real-dim"
    psi_sweep: tuple[float, float, int] | None = None
    options: dict = field(default_factory=dict)


# -- formatting ---------------------------------------------------------------------------------

def fmt(x) -> str:
    return f"{x:.12g}"


def _round(obj):
    if isinstance(obj, (float, np.floating)):
        return None if not np.isfinite(obj) else float(fmt(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dump_json(doc) -> str:
    return json.dumps(_round(doc), indent=2) + "\n"


def emit(cfg: RunConfig, name: str, text: str) -> None:
    """Write ``text`` to ``<out>/<name>``, or to stdout when no output directory is set."""
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / name).write_text(text, encoding="utf-8")
        log.info("wrote %s", cfg.out / name)


# -- argument parsing ---------------------------------------------------------------------------

def parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in text.split(":"))
    except ValueError:
        raise ConfigError(f"bad range {text!r}; expected LO:HI") from None
    if not hi > lo:
        raise ConfigError(f"empty range {text!r}")
    return lo, hi


def parse_sweep(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"bad sweep {text!r}; expected LO:HI:N") from None
    if not hi > lo or n < 2:
        raise ConfigError(f"empty sweep {text!r}")
    return lo, hi, n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    # SUPPRESS lets the flags appear before or after the command without clobbering each other
    g.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS,
                   help="key=value parameter file (default: bundled case-study parameters)")
    g.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS,
                   help="output directory (default: stdout)")
    g.add_argument("--psi", type=float, default=argparse.SUPPRESS,
                   help=f"coupling phase (default: {CALIBRATED_PSI} with the bundled parameters, "
                        "else the value in --config)")
    g.add_argument("--psi-sweep", metavar="LO:HI:N", default=argparse.SUPPRESS,
                   help="calibrate psi on the equilibrium table before running")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes")
    g.add_argument("--convention", choices=CONVENTIONS, default=argparse.SUPPRESS,
                   help="unstable-count convention for tables")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="ringhopf", parents=[common],
                                     description="Hopf analysis of a ring of 8 mode-locked lasers.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("centers", parents=[common], help="centers of the laser-off state")
    p.add_argument("--j", type=int, help="only this Fourier mode (0..n/2)")
    p.add_argument("--range", default="0.03:0.04", help="alpha range LO:HI")

    p = sub.add_parser("table", parents=[common], help="reproduce one of the unstable-count tables")
    p.add_argument("which", type=int)

    p = sub.add_parser("branch", parents=[common], help="continue a rotating-wave branch and scan it")
    p.add_argument("selector", help="one of " + ", ".join(SELECTORS))
    p.add_argument("--range", default="0.036:0.09", help="alpha range LO:HI")
    p.add_argument("--d-alpha", type=float, default=1e-4, help="scan grid step")

    for name, hlp in (("simulate", "integrate the ring"), ("verify", "closed-loop check of a rotating wave")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--alpha", type=float, required=name == "simulate")
        p.add_argument("--init", help="equilibrium | releq:SELECTOR | file:PATH"
                       + (" (default releq:D8)" if name == "verify" else ""))
        p.add_argument("--perturb", type=float, default=0.0, help="size of a random perturbation")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--t-end", type=float, default=None, help="run length in units of T")
        p.add_argument("--dt", type=float, default=None, help="step in units of T")
        p.add_argument("--transient", type=float, default=None, help="fit transient in units of T")

    p = sub.add_parser("diff-tables", parents=[common], help="compare all tables and event lists with the golden data")
    p.add_argument("--which", type=int, nargs="*", default=list(TABLE_AMBIENT))
    p.add_argument("--events", action="store_true", help="also scan the D8, Z8t1 and D8d branches")

    sub.add_parser("catalog-export", parents=[common], help="write the twisted-subgroup catalog")
    return parser


def make_config(ns: argparse.Namespace) -> RunConfig:
    config = getattr(ns, "config", None)
    try:
        params = load_params(config) if config else case_study_params(CALIBRATED_PSI)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    psi = getattr(ns, "psi", None)
    if psi is not None:
        if not np.isfinite(psi):
            raise ConfigError("psi must be finite")
        params = params.replace(psi=psi)
    threads = getattr(ns, "threads", 1)
    if threads < 1:
        raise ConfigError("--threads must be positive")
    sweep = getattr(ns, "psi_sweep", None)
    out = getattr(ns, "out", None)
    return RunConfig(params, Path(out) if out else None, threads,
                     getattr(ns, "convention", "real-dim"), parse_sweep(sweep) if sweep else None,
                     {k: v for k, v in vars(ns).items()})


def _pmap(cfg: RunConfig, fn, jobs):
    if cfg.threads <= 1 or len(jobs) <= 1:
        return [fn(*a) for a in jobs]
    with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
        return list(ex.map(fn, *zip(*jobs)))


def _maybe_calibrate(cfg: RunConfig) -> dict | None:
    if cfg.psi_sweep is None:
        return None
    lo, hi, n = cfg.psi_sweep
    best, scores = calibrate_psi(cfg.params, lo, hi, n)
    cfg.params = cfg.params.replace(psi=best)
    log.info("calibrated psi = %s", fmt(best))
    return {"psi": best, "scores": [{"psi": s, "mismatches": m} for s, m in scores]}


# -- commands -----------------------------------------------------------------------------------

def cmd_centers(cfg: RunConfig) -> int:
    _maybe_calibrate(cfg)
    p = cfg.params
    lo, hi = parse_range(cfg.options["range"])
    if lo <= 0:
        raise ConfigError("alpha range must be positive")
    js = range(p.n // 2 + 1)
    if cfg.options.get("j") is not None:
        if not 0 <= cfg.options["j"] <= p.n // 2:
            raise ConfigError(f"--j must lie in 0..{p.n // 2}")
        js = [cfg.options["j"]]
    centers = sorted((c for j in js for c in find_centers(p, (lo, hi), j)), key=lambda c: c.alpha0)
    preds = [classify_equilibrium_hopf(p, c) for c in centers]
    lines = ["alpha0,w0,j,transversal,r_prime,crossing_number,orbit_types"]
    for c, pr in zip(centers, preds):
        t = "" if pr.crossing is None else str(pr.crossing.t)
        types = ";".join(f"{ot.name}x{k}" for ot, k in pr.orbit_types)
        lines.append(f"{fmt(c.alpha0)},{fmt(c.w0)},{c.j},{int(c.transversal)},{fmt(c.r_prime)},{t},{types}")
    emit(cfg, "centers.csv", "\n".join(lines) + "\n")
    if cfg.out is not None:
        doc = {"psi": p.psi, "centers": [dict(alpha0=c.alpha0, w0=c.w0, j=c.j, transversal=c.transversal,
                                              r_prime=c.r_prime, prediction=pr.to_dict())
                                         for c, pr in zip(centers, preds)]}
        emit(cfg, "centers.json", dump_json(doc))
    return 0


def _table_job(which, params, convention):
    t = reproduce_table(which, params, convention=convention)
    return table_csv(t), {"table": which, "branch": TABLE_AMBIENT[which], "psi": params.psi,
                          "convention": convention,
                          "mismatches": [dict(component=j, column=c, computed=v, golden=r)
                                         for j, c, v, r in t.mismatches()],
                          "marker_mismatches": [dict(component=j, column=c, computed=m, golden=r)
                                                for j, c, m, r in t.marker_mismatches()],
                          "diagnostics": t.diagnostics}


def cmd_table(cfg: RunConfig) -> int:
    which = cfg.options["which"]
    if which not in TABLE_AMBIENT:
        raise ConfigError(f"no table {which}; expected 1..6")
    calib = _maybe_calibrate(cfg)
    csv, diff = _table_job(which, cfg.params, cfg.convention)
    if calib is not None:
        diff["calibration"] = calib
    emit(cfg, f"table{which}.csv", csv)
    if cfg.out is not None:
        emit(cfg, f"table{which}_diff.json", dump_json(diff))
    print(f"table {which}: {len(diff['mismatches'])} mismatching entries, "
          f"{len(diff['marker_mismatches'])} mismatching markers (psi={fmt(cfg.params.psi)})", file=sys.stderr)
    return 0


def _selector_twist(sel: str) -> int:
    if sel not in SELECTORS:
        raise ConfigError(f"unknown selector {sel!r}; expected one of {', '.join(SELECTORS)}")
    return ambient_twist(sel)


def _branch(cfg: RunConfig, sel: str, alpha_max: float):
    l = _selector_twist(sel)
    try:
        br = branch_from_center(cfg.params, l, alpha_max)
    except RuntimeError as exc:
        raise NumericalFailure(str(exc)) from None
    if not br:
        raise NumericalFailure(f"{sel} branch could not be continued")
    return br


def cmd_branch(cfg: RunConfig) -> int:
    _maybe_calibrate(cfg)
    p = cfg.params
    sel = cfg.options["selector"]
    _selector_twist(sel)
    lo, hi = parse_range(cfg.options["range"])
    if cfg.options["d_alpha"] <= 0:
        raise ConfigError("--d-alpha must be positive")
    br = _branch(cfg, sel, hi + 1e-3)
    doc = {"selector": sel, "psi": p.psi, "range": [lo, hi],
           "points": [r.to_dict() for r in br], "events": [], "predictions": []}
    failure = None
    if br[-1].alpha < hi:
        failure = f"branch ends at alpha={fmt(br[-1].alpha)} before {fmt(hi)}"
    try:
        reg = [regularity_check(p, r) for r in br[:: max(1, len(br) // 10)]]
        doc["regularity"] = [{"alpha": r.alpha, "passed": rr.passed} for r, rr in
                             zip(br[:: max(1, len(br) // 10)], reg)]
        events, preds = hopf_scan_releq(p, br, d_alpha=cfg.options["d_alpha"], alpha_range=(lo, hi))
        doc["events"] = [dict(alpha=e.alpha, component=e.component, type=e.kind, w0=e.w0,
                              delta_count=e.delta_count, t=e.t) for e in events]
        doc["predictions"] = [pr.to_dict() for pr in preds]
        ref = golden()["hopf_events"].get(sel)
        if ref is not None:
            doc["golden_diff"] = compare_events(preds, ref)
    except (RootCountError, RuntimeError, np.linalg.LinAlgError) as exc:
        failure = str(exc)
    emit(cfg, f"branch_{sel}.json", dump_json(doc))
    if failure:
        raise NumericalFailure(failure)
    return 0


def _initial(cfg: RunConfig, spec: str | None, alpha: float | None):
    """History and bookkeeping for ``--init``; returns ``(alpha, history, releq or None)``."""
    p = cfg.params
    if not spec:
        raise ConfigError("missing initial condition (--init equilibrium | releq:SELECTOR | file:PATH)")
    kind, _, arg = spec.partition(":")
    if kind == "equilibrium":
        if alpha is None:
            raise ConfigError("--alpha is required with --init equilibrium")
        return alpha, trivial_equilibrium(p, alpha), None
    if kind == "releq":
        sel = arg or "D8"
        _selector_twist(sel)
        a = 0.045 if alpha is None else alpha
        br = _branch(cfg, sel, a + 2e-3)
        re = releq_at(p, br, a)
        return a, re, re
    if kind == "file":
        if alpha is None:
            raise ConfigError("--alpha is required with --init file:PATH")
        try:
            x = np.loadtxt(arg, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read initial state: {exc}") from None
        if x.shape != (p.n, 4):
            raise ConfigError(f"initial state must have {p.n} rows of g,q,re_a,im_a; got {x.shape}")
        return alpha, x, None
    raise ConfigError(f"unknown initial condition {spec!r}")


def _run(cfg: RunConfig, default_t_end: float, default_dt: float):
    p, o = cfg.params, cfg.options
    alpha, init, re = _initial(cfg, o.get("init") or ("releq:D8" if o["command"] == "verify" else None),
                               o.get("alpha"))
    if re is not None:
        x0 = re.full_state(p.n)
        hist = rotating_wave_history(x0, re.w)
    else:
        x0 = np.array(init, dtype=float)
        hist = None
    if o["perturb"]:
        rng = np.random.default_rng(o["seed"])
        x0 = x0 + o["perturb"] * rng.standard_normal(x0.shape)
        hist = None
    if hist is None:
        hist = x0
    t_end = (o["t_end"] if o["t_end"] is not None else default_t_end) * p.T
    dt = (o["dt"] if o["dt"] is not None else default_dt) * p.T
    if not (t_end > 0 and dt > 0):
        raise ConfigError("--t-end and --dt must be positive")
    if dt > p.T / 20:
        raise ConfigError(f"--dt must not exceed T/20 = {fmt(p.T / 20)}")
    try:
        traj = integrate(p, alpha, hist, t_end, dt)
    except FloatingPointError as exc:
        raise NumericalFailure(str(exc)) from None
    return alpha, traj, re


def cmd_simulate(cfg: RunConfig) -> int:
    _maybe_calibrate(cfg)
    p, o = cfg.params, cfg.options
    alpha, traj, re = _run(cfg, 100.0, 1 / 20)
    transient = (o["transient"] if o["transient"] is not None else 50.0) * p.T
    report = {"alpha": alpha, "psi": p.psi, "t_end": traj.times[-1], "dt": traj.dt}
    eq = trivial_equilibrium(p, alpha)
    report["final_deviation_from_equilibrium"] = float(np.abs(traj.states[-1] - eq).max())
    report["max_power"] = float((traj.states[..., 2] ** 2 + traj.states[..., 3] ** 2).max())
    if transient < traj.times[-1]:
        try:
            fit = fit_rotating_wave(traj, transient)
            report["fit"] = {"fitted_w": fit.fitted_w, "residual": fit.residual, "twist_estimate": fit.twist_estimate}
        except ValueError as exc:
            report["fit"] = {"error": str(exc)}
    emit(cfg, "trajectory.csv", trajectory_csv(traj))
    if cfg.out is not None:
        emit(cfg, "power.csv", power_traces_csv(traj))
        emit(cfg, "simulate.json", dump_json(report))
    else:
        print(json.dumps(_round(report)), file=sys.stderr)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    _maybe_calibrate(cfg)
    p, o = cfg.params, cfg.options
    alpha, traj, re = _run(cfg, 30.0, 1 / 250)
    if re is None:
        raise ConfigError("verify needs a rotating-wave initial condition (--init releq:SELECTOR)")
    transient = (o["transient"] if o["transient"] is not None else 0.0) * p.T
    span = traj.times[-1] - transient
    if re.w != 0 and span < 3 * 2 * np.pi / abs(re.w):
        raise ConfigError("run too short to fit three periods of the wave after the transient")
    try:
        fit = fit_rotating_wave(traj, transient)
    except ValueError as exc:
        # the window suits the expected wave, so a failed fit means the run is not that wave
        raise NumericalFailure(f"rotating-wave verification failed: {exc}") from None
    ok = (fit.residual < 1e-5 and abs(fit.fitted_w - re.w) <= 1e-4 * max(abs(re.w), 1e-12)
          and fit.twist_estimate == re.twist_l % p.n)
    report = {"alpha": alpha, "psi": p.psi, "w": re.w, "twist_l": re.twist_l,
              "fitted_w": fit.fitted_w, "residual": fit.residual, "twist_estimate": fit.twist_estimate,
              "passed": ok}
    emit(cfg, "verify.json", dump_json(report))
    if cfg.out is not None:
        emit(cfg, "trajectory.csv", trajectory_csv(traj))
    if not ok:
        raise NumericalFailure("rotating-wave verification failed")
    return 0


def _events_job(sel, params, alpha_max):
    br = branch_from_center(params, ambient_twist(sel), alpha_max)
    _, preds = hopf_scan_releq(params, br)
    return compare_events(preds, golden()["hopf_events"][sel])


def cmd_diff_tables(cfg: RunConfig) -> int:
    _maybe_calibrate(cfg)
    which = cfg.options["which"]
    bad = [w for w in which if w not in TABLE_AMBIENT]
    if bad:
        raise ConfigError(f"no table {bad[0]}; expected 1..6")
    results = _pmap(cfg, _table_job, [(w, cfg.params, cfg.convention) for w in which])
    doc = {"psi": cfg.params.psi, "convention": cfg.convention,
           "tables": [diff for _, diff in results]}
    lines = []
    for diff in doc["tables"]:
        n = len(diff["mismatches"])
        lines.append(f"table {diff['table']} ({diff['branch']}): "
                     + ("match" if n == 0 else f"{n} mismatching entries"))
        for m in diff["mismatches"]:
            lines.append(f"  U{m['component']} column {m['column']}: computed {m['computed']}, golden {m['golden']}")
    if cfg.options["events"]:
        sels = ("D8", "Z8t1", "D8d")
        evs = _pmap(cfg, _events_job, [(s, cfg.params, 0.082) for s in sels])
        doc["events"] = dict(zip(sels, evs))
        for s, d in zip(sels, evs):
            lines.append(f"events {s}: " + ("match" if not d else f"{len(d)} differences"))
            lines.extend("  " + x for x in d)
    if cfg.out is not None:
        emit(cfg, "diff_tables.json", dump_json(doc))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_catalog_export(cfg: RunConfig) -> int:
    emit(cfg, "catalog.json", catalog_json() + "\n")
    return 0


COMMANDS = {
    "centers": cmd_centers,
    "table": cmd_table,
    "branch": cmd_branch,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "diff-tables": cmd_diff_tables,
    "catalog-export": cmd_catalog_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(ns)
        return COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"ringhopf: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"ringhopf: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (RootCountError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"ringhopf: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
