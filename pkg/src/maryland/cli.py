"""``maryland`` command line: run one experiment, write a table and a manifest.

Every subcommand writes ``<command>.csv`` (or ``<command>.json`` with
``--format json``) plus ``<command>.manifest.json`` into the output directory.
Tables hold only numbers derived from the configuration; timing and host
details live in the manifest, so tables are byte-reproducible.

Exit status: 0 on success, 2 for invalid input, 3 when a phase hits a pole of
the potential or a box determinant vanishes, 4 when ``lemma-suite`` has a
failing assertion.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .cocycle import LN2, avg_log_ptilde, default_epsilon, lyapunov, lyapunov_birkhoff, ptilde_log_rates, \
    midpoint_grid, x2_root
from .config import KEYS, ExperimentConfig, load_config, parse_value
from .determinants import ModelParams
from .errors import ConfigError, MarylandError, SingularDenominator, SingularPhase
from .interpolation import check_3eps_uniform, interval_scheme
from .localization import decay_pipeline, green_cramer, green_direct
from .suite import DEFAULT_LEMMA_KS, run_lemma_suite
from .torus import check_phase_guard

__all__ = ["main", "build_parser", "run_command", "COMMANDS"]

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_ASSERT = 0, 2, 3, 4

# flag -> (config key, help)
_OVERRIDES = {
    "--lambda": ("model.lambda", "coupling constant"),
    "--alpha": ("model.alpha", "golden, silver, a decimal, or a list of partial quotients"),
    "--theta": ("model.theta", "phase"),
    "--energy": ("model.energy", "energy (target energy for localize)"),
    "--energies": ("model.energies", "list of energies, e.g. 0,0.5,1"),
    "--k": ("run.k", "number of transfer steps"),
    "--ks": ("run.ks", "list of sites or block lengths"),
    "--N": ("run.N", "box size"),
    "--grid": ("run.grid", "number of phase grid points"),
    "--epsilon": ("run.epsilon", "override for eps; must be below L(E)/600"),
    "--k-range": ("run.k_range", "kmin,kmax"),
    "--which": ("run.which", "nearest or ground"),
    "--box": ("run.box", "x1,x2"),
    "--y": ("run.y", "column of the Green's function"),
    "--guard": ("run.guard", "minimal distance of any phase from a pole"),
}


class Table:
    """Column names plus rows, in output order."""

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row length does not match the header")
        self.rows.append(row)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def table_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def table_json(table: Table) -> str:
    rows = [dict(zip(table.columns, (_jsonable(v) for v in row))) for row in table.rows]
    return json.dumps({"columns": table.columns, "rows": rows}, indent=1) + "\n"


# ---------------------------------------------------------------------------
# commands.  Each takes (config, threads) and returns (table, extra manifest fields).


def _params(cfg: ExperimentConfig, energy=None) -> ModelParams:
    E = cfg.energy if energy is None else energy
    return ModelParams(cfg.lam, cfg.frequency(), cfg.theta, float(E))


def _energy_block(cfg, energies):
    eps_override = cfg.check_epsilon(energies)
    out = []
    for E in energies:
        L = lyapunov(E, cfg.lam)
        out.append({"E": E, "L": L, "L_tilde": L - LN2,
                    "epsilon": eps_override if eps_override is not None else default_epsilon(E, cfg.lam)})
    return out


def _scheme_dict(sch):
    return {"k": sch.k, "case": sch.case_tag, "n": sch.n, "q_n": sch.q_n, "s": sch.s, "h": sch.h,
            "I1": list(sch.I1), "I2": list(sch.I2), "mirrored": sch.mirrored}


def cmd_lyapunov(cfg, threads):
    energies = [float(e) for e in cfg.get("model.energies", [0.0, 0.5, 1.0])]
    k = int(cfg.get("run.k", 100_000))
    grid = int(cfg.get("run.grid", 64))
    info = _energy_block(cfg, energies)
    freq = cfg.frequency()
    t = Table(["E", "L_closed", "L_birkhoff_D", "L_birkhoff_F_plus_ln2", "ln_abs_x2", "k_used"])
    checks = []
    for E in energies:
        p = ModelParams(cfg.lam, freq, cfg.theta, E)
        Lc = lyapunov(E, cfg.lam)
        d = lyapunov_birkhoff(p, k, grid, "D", threads, cfg.guard)
        f = lyapunov_birkhoff(p, k, grid, "F", threads, cfg.guard)
        lx = x2_root(E, cfg.lam)[1]
        t.add(E, Lc, d.value, f.value, lx, k)
        checks += [_check(f"birkhoff_D_E{E!r}", abs(d.value - Lc), 1e-2),
                   _check(f"birkhoff_F_E{E!r}", abs(f.value - Lc), 2e-2),
                   _check(f"root_identity_E{E!r}", abs(lx - Lc), 1e-12)]
    return t, {"energies": info, "checks": checks, "summary": {"k": k, "grid": grid}}


def _check(name, value, bound, passed=None, asserted=True, note=""):
    ok = bool(value <= bound) if passed is None else bool(passed)
    return {"name": name, "value": value, "bound": bound, "passed": ok, "asserted": asserted, "note": note}


def cmd_detgrowth(cfg, threads):
    ks = [int(k) for k in cfg.get("run.ks", [1, 50, 100, 200, 400])]
    grid = int(cfg.get("run.grid", 8192))
    p = _params(cfg)
    info = _energy_block(cfg, [p.energy])
    eps = info[0]["epsilon"]
    t = Table(["k", "avg_log_ptilde", "lower_bound", "upper_envelope", "max_over_theta"])
    for k in ks:
        if k < 1:
            raise ConfigError(f"{cfg.where('run.ks')}: block lengths must be positive, got {k}")
        rep = avg_log_ptilde(p, k, grid, eps, threads)
        top = float(np.max(ptilde_log_rates(p, k, midpoint_grid(grid), threads)))
        t.add(k, rep.value, rep.lower_bound, rep.upper_envelope, top)
    return t, {"energies": info, "summary": {"grid": grid}}


def cmd_uniformity(cfg, threads):
    ks = [int(k) for k in cfg.get("run.ks", [34, 55, 89])]
    p = _params(cfg)
    info = _energy_block(cfg, [p.energy])
    eps = info[0]["epsilon"]
    t = Table(["k", "case_tag", "q_n", "s", "h", "epsilon_effective", "threshold", "pass"])
    schemes, checks = [], []
    for k in ks:
        sch = interval_scheme(k, p.freq)
        rep = check_3eps_uniform(p, k, eps)
        t.add(sch.k, sch.case_tag, sch.q_n, sch.s, sch.h, rep.epsilon_effective, rep.threshold, rep.passed)
        schemes.append(_scheme_dict(sch))
        checks.append(_check(f"uniformity_k{k}", rep.epsilon_effective, rep.threshold, rep.passed))
    return t, {"energies": info, "scheme": schemes, "checks": checks}


def cmd_scheme(cfg, threads):
    ks = [int(k) for k in cfg.get("run.ks", [5, 34, 55, 89, 144])]
    freq = cfg.frequency()
    t = Table(["k", "case_tag", "n", "q_n", "s", "h", "I1_lo", "I1_hi", "I2_lo", "I2_hi",
               "window_length", "margin"])
    schemes = []
    for k in ks:
        sch = interval_scheme(k, freq)
        t.add(sch.k, sch.case_tag, sch.n, sch.q_n, sch.s, sch.h, *sch.I1, *sch.I2,
              sch.window_length, sch.margin)
        schemes.append(_scheme_dict(sch))
    return t, {"scheme": schemes}


def cmd_green(cfg, threads):
    x1, x2 = (int(v) for v in cfg.get("run.box", [0, 9]))
    p = _params(cfg)
    check_phase_guard(p.theta, p.freq, (x1, x2), cfg.guard)
    ys = [int(cfg.get("run.y"))] if cfg.get("run.y") is not None else list(range(x1, x2 + 1))
    for y in ys:
        if not x1 <= y <= x2:
            raise ConfigError(f"{cfg.where('run.y')}: y={y} lies outside the box [{x1}, {x2}]")
    t = Table(["y", "sign_left", "log_abs_left", "sign_right", "log_abs_right",
               "rel_diff_left", "rel_diff_right", "direct_residual"])
    worst = 0.0
    for y in ys:
        cl, cr = green_cramer(p, x1, x2, y)
        dl, dr = green_direct(p, x1, x2, y)
        diffs = [_rel_diff(a.value, b.value) for a, b in ((cl, dl), (cr, dr))]
        worst = max(worst, *diffs)
        t.add(y, cl.value.sign, cl.log_abs, cr.value.sign, cr.log_abs, *diffs, dl.residual)
    return t, {"energies": _energy_block(cfg, [p.energy]), "summary": {"box": [x1, x2]},
               "checks": [_check("cramer_vs_direct", worst, 1e-6)]}


def _rel_diff(a, b) -> float:
    if a.sign == 0 and b.sign == 0:
        return 0.0
    if a.sign != b.sign:
        return 2.0
    return abs(math.expm1(a.log_mag - b.log_mag))


def cmd_localize(cfg, threads):
    N = int(cfg.get("run.N", 2000))
    kr = tuple(int(v) for v in cfg.get("run.k_range", [30, 400]))
    which = cfg.get("run.which", "nearest")
    p = _params(cfg)
    first = -(N // 2)
    check_phase_guard(p.theta, p.freq, (first, first + N - 1), cfg.guard)
    eps_override = cfg.check_epsilon([p.energy])
    res = decay_pipeline(p, N, p.energy, kr, eps_override, which, threads)
    t = Table(["k", "log_abs_phi", "regular", "witness_x1", "h", "expansion_log_bound",
               "theorem_log_bound"])
    for k, lp, v, eb, tb in zip(res.sites, res.log_phi, res.verdicts, res.expansion_log_bound,
                                res.theorem_log_bound):
        t.add(int(k), lp, v.regular, v.witness_x1, v.window_length + 1, eb, tb)
    fit = res.fit
    info = [{"E": res.energy, "L": res.lyapunov, "L_tilde": res.lyapunov - LN2, "epsilon": res.epsilon}]
    summary = {"energy": res.energy, "center": res.center, "which": which, "N": N,
               "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
               "slope_ratio": res.slope_ratio, "regular_fraction": res.regular_fraction,
               "regularity_rate": res.m, "edge_log_ratio": res.edge_log_ratio}
    checks = [_check("regular_fraction", res.regular_fraction, 0.95, res.regular_fraction >= 0.95),
              _check("slope_ratio", abs(res.slope_ratio - 1.0), 0.15),
              _check("r_squared", fit.r_squared, 0.98, fit.r_squared >= 0.98),
              _check("sitewise_bound", float(np.max(res.log_phi - res.theorem_log_bound)), 0.0)]
    return t, {"energies": info, "summary": summary, "checks": checks}


def cmd_lemma_suite(cfg, threads):
    N = int(cfg.get("run.N", 2000))
    ks = tuple(int(k) for k in cfg.get("run.ks", list(DEFAULT_LEMMA_KS)))
    p = _params(cfg)
    info = _energy_block(cfg, [p.energy])
    first = -(N // 2)
    check_phase_guard(p.theta, p.freq, (min(first, 0), max(first + N - 1, 9_999)), cfg.guard)
    rows = run_lemma_suite(p, N, ks, cfg.get("run.epsilon"), threads)
    t = Table(["name", "value", "bound", "passed", "asserted", "note"])
    for r in rows:
        t.add(r.name, r.value, r.bound, r.passed, r.asserted, r.note)
    checks = [_check(r.name, r.value, r.bound, r.passed, r.asserted, r.note) for r in rows]
    failed = [r.name for r in rows if r.asserted and not r.passed]
    return t, {"energies": info, "checks": checks, "summary": {"failed": failed, "N": N, "ks": list(ks)}}


COMMANDS = {
    "lyapunov": cmd_lyapunov,
    "detgrowth": cmd_detgrowth,
    "uniformity": cmd_uniformity,
    "scheme": cmd_scheme,
    "green": cmd_green,
    "localize": cmd_localize,
    "lemma-suite": cmd_lemma_suite,
}

_HELP = {
    "lyapunov": "closed-form, Birkhoff and root estimates of L(E)",
    "detgrowth": "phase average and maximum of log|P~_k| / k",
    "uniformity": "Lagrange-factor uniformity of the window-start nodes",
    "scheme": "window ranges I1, I2 and length h for each k",
    "green": "edge values of the box Green's function, two ways",
    "localize": "eigenvector decay against regularity of sites",
    "lemma-suite": "every consistency check as one batch",
    "sweep": "repeat a command over values of one configuration key",
}


# ---------------------------------------------------------------------------


def run_command(command: str, cfg: ExperimentConfig, out_dir: str, threads: int = 1,
                fmt: str | None = None) -> tuple[int, dict]:
    """Run ``command`` and write its files into ``out_dir``; returns (exit code, manifest)."""
    fmt = fmt or cfg.get("output.format", "csv")
    start = time.perf_counter()
    table, extra = COMMANDS[command](cfg, threads)
    elapsed = time.perf_counter() - start
    os.makedirs(out_dir, exist_ok=True)
    name = f"{command}.{fmt}"
    text = table_csv(table) if fmt == "csv" else table_json(table)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    freq = cfg.frequency()
    manifest = {
        "tool": "maryland",
        "version": __version__,
        "command": command,
        "config_source": cfg.source,
        "parameters": {
            "lambda": cfg.lam,
            "alpha": freq.value,
            "alpha_partial_quotients": list(freq.cf_coeffs[:12]),
            "theta": cfg.theta,
            "settings": {k: cfg.values[k] for k in sorted(cfg.values)},
            "energies": extra.pop("energies", []),
        },
        "scheme": extra.pop("scheme", []),
        "summary": extra.pop("summary", {}),
        "checks": extra.pop("checks", []),
        "data_files": [name],
        "threads": threads,
        "wall_clock_seconds": elapsed,
    }
    with open(os.path.join(out_dir, f"{command}.manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=1)
        fh.write("\n")
    code = EXIT_OK
    if command == "lemma-suite" and manifest["summary"]["failed"]:
        code = EXIT_ASSERT
    return code, manifest


def _run_sweep(cfg, out_dir, threads, fmt):
    command = cfg.get("sweep.command")
    key = cfg.get("sweep.key")
    values = cfg.get("sweep.values")
    for k, what in (("sweep.command", command), ("sweep.key", key), ("sweep.values", values)):
        if what is None:
            raise ConfigError(f"{cfg.source}: sweep needs {k} (set it in the file or with --set)")
    if command not in COMMANDS:
        raise ConfigError(f"{cfg.where('sweep.command')}: unknown command {command!r}")
    if key not in KEYS or key.startswith("sweep."):
        raise ConfigError(f"{cfg.where('sweep.key')}: cannot sweep over {key!r}")
    t = Table(["index", "value", "exit_code", "directory"])
    worst = EXIT_OK
    start = time.perf_counter()
    runs = []
    for i, v in enumerate(values):
        sub = cfg.copy()
        sub.set(key, v, f"{cfg.where('sweep.values')} (item {i})")
        d = f"{command}-{i:03d}"
        code, _ = run_command(command, sub, os.path.join(out_dir, d), threads, fmt)
        worst = max(worst, code)
        t.add(i, json.dumps(v), code, d)
        runs.append(os.path.join(d, f"{command}.manifest.json"))
    os.makedirs(out_dir, exist_ok=True)
    fmt = fmt or cfg.get("output.format", "csv")
    name = f"sweep.{fmt}"
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(table_csv(t) if fmt == "csv" else table_json(t))
    manifest = {"tool": "maryland", "version": __version__, "command": "sweep",
                "config_source": cfg.source,
                "summary": {"command": command, "key": key, "values": values},
                "runs": runs, "data_files": [name], "threads": threads,
                "wall_clock_seconds": time.perf_counter() - start}
    with open(os.path.join(out_dir, "sweep.manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=1)
        fh.write("\n")
    return worst


_LIST_KEYS = {"model.energies", "run.ks", "run.qs", "sweep.values"}


def _override_value(raw: str, where: str, key: str | None = None):
    raw = raw.strip()
    if "," in raw and not raw.startswith(("[", '"')):
        raw = f"[{raw}]"
    v = parse_value(raw, where)
    if key in _LIST_KEYS and not isinstance(v, list):
        v = [v]
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (key = value lines)")
    common.add_argument("--out", help="output directory (default: maryland-out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    for flag, (key, text) in _OVERRIDES.items():
        common.add_argument(flag, dest="ov_" + key.replace(".", "_"), metavar="VALUE",
                            help=f"{text} [{key}]")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="set any configuration key; repeatable")

    parser = argparse.ArgumentParser(prog="maryland", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in list(COMMANDS) + ["sweep"]:
        sp = sub.add_parser(name, parents=[common], help=_HELP[name], description=_HELP[name])
        if name == "sweep":
            sp.add_argument("--command", dest="sweep_command", metavar="NAME", help="command to repeat")
            sp.add_argument("--key", dest="sweep_key", metavar="KEY", help="configuration key to vary")
            sp.add_argument("--values", dest="sweep_values", metavar="LIST", help="values, e.g. 0.5,1.5,3")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for flag, (key, _) in _OVERRIDES.items():
        raw = getattr(args, "ov_" + key.replace(".", "_"))
        if raw is not None:
            cfg.set(key, _override_value(raw, flag, key), flag)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
        key, raw = (s.strip() for s in item.split("=", 1))
        cfg.set(key, _override_value(raw, f"--set {key}", key), f"--set {key}")
    if args.command == "sweep":
        for dest, key in (("sweep_command", "sweep.command"), ("sweep_key", "sweep.key")):
            if getattr(args, dest) is not None:
                cfg.set(key, getattr(args, dest), f"--{dest.split('_')[1]}")
        if args.sweep_values is not None:
            cfg.set("sweep.values", _override_value(args.sweep_values, "--values", "sweep.values"), "--values")
    cfg.frequency()  # fail early on a bad frequency
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        cfg = _resolve_config(args)
        out = args.out or cfg.get("output.dir", "maryland-out")
        if args.command == "sweep":
            code = _run_sweep(cfg, out, args.threads, args.format)
        else:
            code, manifest = run_command(args.command, cfg, out, args.threads, args.format)
            failed = [c["name"] for c in manifest["checks"] if c["asserted"] and not c["passed"]]
            if failed:
                print(f"maryland {args.command}: checks outside tolerance: {', '.join(failed)}",
                      file=sys.stderr)
        return code
    except (SingularPhase, SingularDenominator) as exc:
        print(f"maryland: numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (MarylandError, ValueError) as exc:
        print(f"maryland: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
