"""Command-line entry point.

Subcommands::

    background        CSV table of a, Omega, omega, p_tilde
    evolve            run a YAML config, write diagnostics CSV (+ snapshots)
    check-identities  identity firewall table; exit 3 on any failure
    fit-rates         decay-rate fits of diagnostics columns
    plot-data         per-quantity (t, log value) files from a diagnostics CSV

Exit codes: 0 success, 1 validation error, 2 numerical breakdown, 3 identity failure.
Config values are overridden with ``--set section.key=value`` (YAML-parsed value).
"""

from __future__ import annotations

import argparse
import copy
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

EXIT_OK, EXIT_INVALID, EXIT_BREAKDOWN, EXIT_IDENTITY = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as a breakdown
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


# ---- config ----------------------------------------------------------------

DEFAULTS = {
    "background": {"Lambda": 3.0, "cs2": 1.0 / 9.0, "rho_bar": 3.0, "eta_min_proxy": None},
    "grid": {"n": 16, "backend": "spectral", "dealias": True},
    "run": {"t_end": None, "hubble_times": None, "cfl": 0.5, "cadence": 0.25, "dt_max": None, "fixed_dt": None},
    "thresholds": {"min_abs_g00": 1e-2, "min_eig_h": 1e-2, "min_P": 1e-8, "max_cb": 1e8},
    "perturbation": {"amplitude": 0.0, "kmax": 2, "seed": 0, "targets": ["g", "K", "p", "u"]},
    "energy": {"N": 3, "gamma00": 1.0, "delta00": 11.0, "gamma0s": 1.0, "delta0s": 5.0},
    "output": {"snapshots": False, "snapshot_every": 1, "snapshot_fields": "all", "snapshot_format": "binary"},
}


def _merge(base, over, where=""):
    out = copy.deepcopy(base)
    if not isinstance(over, dict):
        raise ConfigError(f"section {where or '<root>'} must be a mapping")
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {where + k!r}")
        if isinstance(base[k], dict):
            out[k] = _merge(base[k], v, where + k + ".")
        else:
            out[k] = v
    return out


def apply_override(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    path, raw = item.split("=", 1)
    keys = path.strip().split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"unknown config section in override {path!r}")
        node = node[k]
    if keys[-1] not in node or isinstance(node[keys[-1]], dict):
        raise ConfigError(f"unknown config key in override {path!r}")
    try:
        node[keys[-1]] = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from None


def load_config(path, overrides=()) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    cfg = _merge(DEFAULTS, raw or {})
    for item in overrides:
        apply_override(cfg, item)
    return cfg


class Resolved:
    """Typed objects built from a config dict; construction validates everything."""

    def __init__(self, cfg: dict):
        from .background import BackgroundParams
        from .diagnostics import EnergyConfig
        from .evolve import RunConfig, Thresholds
        from .fields import FIELD_NAMES
        from .initial_data import PerturbationSpec

        self.cfg = cfg
        try:
            b = cfg["background"]
            self.params = BackgroundParams(
                Lambda=_num(b["Lambda"]), cs2=_num(b["cs2"]), rho_bar=_num(b["rho_bar"]),
                eta_min_proxy=None if b["eta_min_proxy"] is None else _num(b["eta_min_proxy"]),
            )
            r = cfg["run"]
            if (r["t_end"] is None) == (r["hubble_times"] is None):
                raise ConfigError("set exactly one of run.t_end and run.hubble_times")
            t_end = _num(r["t_end"]) if r["t_end"] is not None else _num(r["hubble_times"]) / self.params.H
            gcfg = cfg["grid"]
            n = gcfg["n"]
            if not isinstance(n, int) or n < 8 or n & (n - 1):
                raise ConfigError(f"grid.n must be a power of two >= 8, got {n!r}")
            if gcfg["backend"] not in ("spectral", "fd4"):
                raise ConfigError(f"grid.backend must be spectral or fd4, got {gcfg['backend']!r}")
            self.run = RunConfig(
                t_end=t_end, cfl=_num(r["cfl"]), cadence=_num(r["cadence"]), n=n,
                backend=gcfg["backend"], dealias=bool(gcfg["dealias"]),
                thresholds=Thresholds(**{k: _num(v) for k, v in cfg["thresholds"].items()}),
                dt_max=None if r["dt_max"] is None else _num(r["dt_max"]),
                fixed_dt=None if r["fixed_dt"] is None else _num(r["fixed_dt"]),
            )
            p = cfg["perturbation"]
            self.perturbation = PerturbationSpec(
                amplitude=_num(p["amplitude"]), kmax=int(p["kmax"]), seed=int(p["seed"]),
                targets=tuple(p["targets"]),
            )
            if self.perturbation.amplitude > 0 and self.perturbation.kmax > n // 4:
                raise ConfigError(f"perturbation.kmax={self.perturbation.kmax} exceeds n/4={n // 4}")
            e = cfg["energy"]
            self.energy = EnergyConfig(N=int(e["N"]), **{k: _num(v) for k, v in e.items() if k != "N"})
            o = cfg["output"]
            if o["snapshot_format"] not in ("binary", "csv"):
                raise ConfigError("output.snapshot_format must be binary or csv")
            fields = FIELD_NAMES if o["snapshot_fields"] == "all" else list(o["snapshot_fields"])
            unknown = set(fields) - set(FIELD_NAMES)
            if unknown:
                raise ConfigError(f"unknown snapshot fields {sorted(unknown)}")
            self.snapshot_fields = [FIELD_NAMES.index(f) for f in fields]
            if int(o["snapshot_every"]) < 1:
                raise ConfigError("output.snapshot_every must be >= 1")
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return float(v)


def _prepare_outdir(path: Path, force: bool) -> None:
    if path.exists():
        if not path.is_dir():
            raise ConfigError(f"{path} exists and is not a directory")
        if any(path.iterdir()) and not force:
            raise ConfigError(f"{path} is not empty; pass --force to overwrite")
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ConfigError(f"{path} is not writable")


# ---- subcommands -----------------------------------------------------------


def cmd_background(args) -> int:
    from .background import BackgroundParams, sample_background

    try:
        params = BackgroundParams(Lambda=args.Lambda, cs2=args.cs2, rho_bar=args.rho_bar)
        table = sample_background(params, args.t_max, args.samples)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["t", "a", "Omega", "omega", "p_tilde"])
        for row in table:
            w.writerow([repr(float(x)) for x in row])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_evolve(args) -> int:
    from .diagnostics import CsvWriter, record
    from .evolve import run
    from .fields import FIELD_NAMES
    from .grid import write_snapshot, write_snapshot_csv
    from .initial_data import from_geometric_data, perturbed_data

    cfg = load_config(args.config, args.set or ())
    res = Resolved(cfg)
    out = Path(args.out)
    _prepare_outdir(out, args.force)
    with open(out / "config.resolved.yaml", "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False)

    grid = res.run.grid()
    state0 = from_geometric_data(perturbed_data(res.perturbation, res.params, grid), res.params, grid)
    snap_dir = out / "snapshots"
    o = cfg["output"]
    if o["snapshots"]:
        snap_dir.mkdir(exist_ok=True)
    counter = {"i": 0}

    def on_output(state, rec):
        writer.write(rec)
        i = counter["i"]
        counter["i"] += 1
        if o["snapshots"] and i % int(o["snapshot_every"]) == 0:
            for c in res.snapshot_fields:
                name = FIELD_NAMES[c]
                stem = snap_dir / f"t{i:05d}_{name}"
                if o["snapshot_format"] == "binary":
                    write_snapshot(stem.with_suffix(".bin"), name, state.data[c])
                else:
                    write_snapshot_csv(stem.with_suffix(".csv"), name, grid, state.data[c])
        if not args.quiet:
            print(f"t={state.t:.4f} Q_N={rec.Q_N:.4e} E_total={rec.E_total:.4e} gauge={rec.gauge_sup:.2e}",
                  file=sys.stderr)

    with CsvWriter(out / "diagnostics.csv") as writer:
        result = run(
            state0, res.params, res.run, grid,
            diagnostics=lambda s, g: record(s, res.params, g, res.energy),
            on_output=on_output,
        )
    with open(out / "status.txt", "w") as fh:
        fh.write(result.describe() + "\n")
    if not result.completed:
        print(f"evolve: {result.describe()}", file=sys.stderr)
        return EXIT_BREAKDOWN
    print(f"evolve: {result.describe()}; output in {out}")
    return EXIT_OK


def cmd_check_identities(args) -> int:
    from .identity_lab import run_firewall

    if args.seeds < 1 or args.n < 8:
        raise ConfigError("--seeds must be >= 1 and --n >= 8")
    reports, mutated = run_firewall(range(args.seeds), n=args.n, mutations=not args.no_mutations)
    print(f"{'check':28s} {'seed':>4s} {'residual':>11s} {'tol':>9s}  status")
    ok = True
    for r in reports:
        print(f"{r.name:28s} {r.seed:4d} {r.residual:11.3e} {r.tolerance:9.1e}  {'PASS' if r.passed else 'FAIL'}")
        ok &= r.passed
    if mutated:
        caught = [m for m in mutated if not m.passed]
        print(f"mutations caught: {len(caught)}/{len(mutated)}")
        for m in mutated:
            if m.passed:
                print(f"mutation NOT caught: {m.name} seed {m.seed} residual {m.residual:.3e}")
        ok &= len(caught) == len(mutated)
    return EXIT_OK if ok else EXIT_IDENTITY


def _load_series(path) -> tuple[dict, Path]:
    from .diagnostics import read_csv

    path = Path(path)
    csv_path = path / "diagnostics.csv" if path.is_dir() else path
    try:
        return read_csv(csv_path), csv_path
    except OSError as exc:
        raise ConfigError(f"cannot read {csv_path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _hubble(args, csv_path: Path) -> float:
    if args.H is not None:
        return args.H
    resolved = csv_path.parent / "config.resolved.yaml"
    if resolved.exists():
        with open(resolved) as fh:
            lam = _num(yaml.safe_load(fh)["background"]["Lambda"])
        return math.sqrt(lam / 3.0)
    raise ConfigError("pass --H (no config.resolved.yaml next to the CSV)")


def _fit_or_none(t, v, window):
    from .diagnostics import fit_decay_rate

    keep = v > 0
    if window is not None:
        keep &= (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if keep.sum() < 2:
        return None
    return fit_decay_rate(t[keep], v[keep])


FIT_DEFAULT = ("S_g00", "S_g0s", "S_hss", "U_Nm1", "S_fluid", "Q_N", "E_total", "gauge_sup")


def cmd_fit_rates(args) -> int:
    series, csv_path = _load_series(args.csv)
    H = _hubble(args, csv_path)
    cols = args.columns or FIT_DEFAULT
    missing = [c for c in cols if c not in series]
    if missing:
        raise ConfigError(f"unknown columns {missing}")
    t = series["t"]
    window = None if args.window is None else (args.window[0] / H, args.window[1] / H)
    print(f"{'column':12s} {'rate':>11s} {'rate/H':>9s} {'r2':>7s} samples")
    for c in cols:
        fit = _fit_or_none(t, series[c], window)
        if fit is None:
            print(f"{c:12s} {'n/a':>11s} {'n/a':>9s} {'n/a':>7s} 0")
        else:
            print(f"{c:12s} {-fit.rate:11.4e} {-fit.rate / H:9.4f} {fit.r2:7.4f} {fit.samples}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    series, csv_path = _load_series(args.csv)
    out = Path(args.out) if args.out else csv_path.parent / "plot-data"
    _prepare_outdir(out, args.force)
    t = series["t"]
    window = None
    if args.window is not None:
        H = _hubble(args, csv_path)
        window = (args.window[0] / H, args.window[1] / H)
    for name, v in series.items():
        if name == "t":
            continue
        fit = _fit_or_none(t, v, window)
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), -np.inf)
        with open(out / f"{name}.dat", "w") as fh:
            if fit is None:
                fh.write(f"# {name}: fitted decay rate n/a (fewer than two positive samples)\n")
            else:
                fh.write(f"# {name}: fitted decay rate {-fit.rate:.6e} (r2={fit.r2:.4f}, samples={fit.samples})\n")
            fh.write("# t log_value\n")
            for ti, li in zip(t, logv):
                fh.write(f"{float(ti)!r} {float(li)!r}\n")
    print(f"plot-data: {len(series) - 1} files in {out}")
    return EXIT_OK


# ---- dispatch --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flrwlab", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("background", help="tabulate the FLRW background")
    b.add_argument("--lambda", dest="Lambda", type=float, required=True)
    b.add_argument("--rho-bar", type=float, required=True)
    b.add_argument("--cs2", type=float, required=True)
    b.add_argument("--t-max", type=float, required=True)
    b.add_argument("--samples", type=int, default=101)
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.set_defaults(func=cmd_background)

    e = sub.add_parser("evolve", help="evolve the configured initial data")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    e.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_evolve)

    c = sub.add_parser("check-identities", help="run the identity firewall")
    c.add_argument("--seeds", type=int, default=20)
    c.add_argument("--n", type=int, default=16)
    c.add_argument("--no-mutations", action="store_true", help="skip the sign-mutation self-test")
    c.set_defaults(func=cmd_check_identities)

    for name, func, about in (
        ("fit-rates", cmd_fit_rates, "fit exponential decay rates"),
        ("plot-data", cmd_plot_data, "write per-quantity plot files"),
    ):
        f = sub.add_parser(name, help=about)
        f.add_argument("csv", help="diagnostics CSV or run directory")
        f.add_argument("--window", type=float, nargs=2, metavar=("HT_LO", "HT_HI"), help="fit window in units of 1/H")
        f.add_argument("--H", type=float, help="Hubble rate (default: from config.resolved.yaml)")
        if name == "fit-rates":
            f.add_argument("--columns", nargs="+")
        else:
            f.add_argument("--out", help="output directory (default: <csv dir>/plot-data)")
            f.add_argument("--force", action="store_true")
        f.set_defaults(func=func)
    return p


def _configure_threads() -> None:
    threads = os.environ.get("FLRWLAB_THREADS")
    if not threads:
        return
    try:
        import numba

        numba.set_num_threads(int(threads))
    except (ImportError, ValueError) as exc:
        print(f"flrwlab: ignoring FLRWLAB_THREADS={threads!r}: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_threads()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"flrwlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
