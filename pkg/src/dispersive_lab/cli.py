"""Batch experiment driver.

    dispersive-lab <command> [--config path.toml] [--set key=value]... [--plots]

Values from ``--set`` override the config file.  Exit codes: 0 ok, 2 config
error, 3 accuracy error, 4 blowup.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .errors import AccuracyError, BlowupError, DispersiveLabError
from .evolver import (
    EvolutionConfig,
    _Stepper,
    deep_water_compare,
    default_dt,
    run,
    verify_scaling,
    write_diagnostics_csv,
    write_run_metadata,
)
from .inflation_probe import inflation_scan, write_scan_csv as write_inflation_csv
from .littlewood_paley import decompose, resolved_band, square_function_ratio
from .multiplier_ops import KINDS, DispersionFamily, apply_symbol, coth_gap
from .resonance_lab import (
    LEMMA_THRESHOLD_ABOVE,
    LEMMA_THRESHOLD_BELOW,
    bound_scan,
    min_resonance_on_support,
    trilinear_vanishing_check,
    write_scan_csv as write_resonance_csv,
)
from .spectral_core import Grid, RealField, mean_zero_project

COMMANDS = (
    "simulate",
    "resonance-scan",
    "lp-check",
    "trilinear-check",
    "inflation-scan",
    "limit-check",
    "scaling-check",
    "bench",
)

DEFAULTS = {
    "family": "BO",
    "gamma": 0.0,
    "delta": 1.0,
    "alpha_disp": 1.0,
    "grid.n": 1024,
    "grid.L": 16 * np.pi,
    "dt": None,  # None selects min(dx / (4 max|u0|), 1e-3)
    "t_end": 1.0,
    "s": 1.0,
    "seed": 0,
    "output_dir": "out",
    # experiment sizes
    "samples": 1_000_000,
    "trials": 20,
    "n_list": [16, 32, 64, 128, 256, 512],
}

# defaults that differ per command; the config file and --set still win
COMMAND_DEFAULTS = {
    "inflation-scan": {"family": "RMBO", "gamma": 1.0, "s": 0.75},
}

EXIT_OK, EXIT_CONFIG, EXIT_ACCURACY, EXIT_BLOWUP = 0, 2, 3, 4
THREADS_ENV = "DISPERSIVE_LAB_THREADS"
MANIFEST_NAME = "run_manifest.json"


class ConfigError(DispersiveLabError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ExperimentConfig:
    command: str
    params: dict

    def __getitem__(self, key):
        return self.params[key]

    @property
    def family(self) -> DispersionFamily:
        p = self.params
        return DispersionFamily(p["family"], gamma=p["gamma"], delta=p["delta"], alpha=p["alpha_disp"])

    @property
    def grid(self) -> Grid:
        return Grid(self.params["grid.n"], self.params["grid.L"])


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_time_s: float = 0.0
    outputs: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    def to_json(self):
        return {
            "config": self.config,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "outputs": self.outputs,
            "status": self.status,
            "message": self.message,
        }


# --- config ---------------------------------------------------------------------


def _flatten(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(params: dict) -> list:
    """Every problem with ``params``, not just the first."""
    problems = []
    for key in params:
        if key not in DEFAULTS:
            problems.append(f"unknown key {key!r}")
    p = {**DEFAULTS, **{k: v for k, v in params.items() if k in DEFAULTS}}

    if p["family"] not in KINDS:
        problems.append(f"family must be one of {', '.join(KINDS)} (got {p['family']!r})")
    for key in ("gamma", "delta", "alpha_disp", "grid.L", "t_end", "s"):
        if not _is_number(p[key]):
            problems.append(f"{key} must be a number")
    if _is_number(p["gamma"]):
        if p["gamma"] < 0:
            problems.append("gamma must be ≥ 0")
        elif p["gamma"] > 0 and p["family"] in ("BO", "ILW"):
            problems.append(f"gamma must be 0 for family {p['family']}")
    if _is_number(p["delta"]) and not p["delta"] > 0:
        problems.append("delta must be > 0")
    if _is_number(p["alpha_disp"]) and not 1 <= p["alpha_disp"] <= 2:
        problems.append("alpha_disp must lie in [1, 2]")
    n = p["grid.n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 2 or n & (n - 1):
        problems.append("grid.n must be a power of two >= 2")
    if _is_number(p["grid.L"]) and not p["grid.L"] > 0:
        problems.append("grid.L must be > 0")
    if p["dt"] is not None and not (_is_number(p["dt"]) and p["dt"] > 0):
        problems.append("dt must be a positive number")
    if _is_number(p["t_end"]) and p["t_end"] < 0:
        problems.append("t_end must be ≥ 0")
    for key in ("seed", "samples", "trials"):
        v = p[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            problems.append(f"{key} must be a nonnegative integer")
    if not isinstance(p["output_dir"], str) or not p["output_dir"]:
        problems.append("output_dir must be a nonempty string")
    nl = p["n_list"]
    if not (isinstance(nl, list) and nl and all(_is_number(v) and v > 1 for v in nl)):
        problems.append("n_list must be a nonempty list of numbers > 1")
    elif any(b <= a for a, b in zip(nl, nl[1:])):
        problems.append("n_list must be ascending")
    return problems


def parse_config(text: str, command: str = "simulate", overrides: dict | None = None) -> ExperimentConfig:
    """Parse a TOML document (flat keys or one level of tables, e.g. ``[grid]``)."""
    if command not in COMMANDS:
        raise ConfigError([f"unknown command {command!r}"])
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"]) from None
    params = {**COMMAND_DEFAULTS.get(command, {}), **_flatten(doc), **(overrides or {})}
    problems = validate(params)
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(command, {**DEFAULTS, **params})


def parse_override(item: str):
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError([f"--set expects key=value, got {item!r}"])
    try:
        value = tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        value = raw
    return key, value


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError([f"{THREADS_ENV} must be a positive integer, got {raw!r}"])
    return n


# --- experiments ----------------------------------------------------------------


def _datum(grid: Grid) -> RealField:
    return mean_zero_project(grid.from_function(lambda x: 1.0 / np.cosh(x) ** 2))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _simulate(cfg, out: Path, plots: bool):
    grid = cfg.grid
    u0 = _datum(grid)
    dt = cfg["dt"] or default_dt(u0)
    ecfg = EvolutionConfig(cfg.family, grid, dt, cfg["t_end"], diag_stride=max(1, round(0.01 / dt)), s=cfg["s"])
    try:
        result = run(u0, ecfg)
    except BlowupError as exc:
        write_diagnostics_csv(out / "diagnostics.csv", exc.diagnostics)
        raise
    write_diagnostics_csv(out / "diagnostics.csv", result.rows)
    write_run_metadata(out / "run_meta.json", ecfg, result, include_wall_time=False)
    if plots:
        _plot_rows(result.rows, out)


def _plot_rows(rows, out: Path):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    t = [r.t for r in rows]
    for col in ("l2", "mean_abs", "zs", "invariant", "drift_rel"):
        fig, ax = plt.subplots(figsize=(5, 3))
        ax.plot(t, [getattr(r, col) for r in rows])
        ax.set_xlabel("t")
        ax.set_ylabel(col)
        fig.tight_layout()
        fig.savefig(out / f"{col}.svg")
        plt.close(fig)


def _resonance_scan(cfg, out: Path, plots: bool):
    """Worst sample per (min_abs, box) for RMBO and RMILW, one CSV per family."""
    gamma = cfg["gamma"] if cfg["gamma"] > 0 else 1.0
    families = [DispersionFamily.rmbo(gamma), DispersionFamily.rmilw(cfg["delta"], gamma)]
    jobs = [(fam, m, box) for fam in families for box in (64.0, 128.0) for m in (1.0, 2.0, 4.0, 8.0)]

    def job(args):
        fam, m, box = args
        best, cols = bound_scan(fam, m, box, cfg["samples"], seed=cfg["seed"], return_samples=True)
        i = int(np.argmax(cols[-1]))
        return fam.kind, m, box, best, tuple(float(c[i]) for c in cols)

    with ThreadPoolExecutor(max_workers()) as pool:
        results = list(pool.map(job, jobs))
    for fam in families:
        worst = [r[4] for r in results if r[0] == fam.kind]
        write_resonance_csv(out / f"resonance_scan_{fam.kind.lower()}.csv", tuple(zip(*worst)))
    _write_csv(out / "resonance_summary.csv", ["family", "min_abs", "box", "max_ratio"], [r[:4] for r in results])


def _lp_check(cfg, out: Path, plots: bool):
    grid = cfg.grid
    rng = np.random.default_rng(cfg["seed"])
    lo, hi = resolved_band(grid)
    xi = grid.rfft_wavenumbers
    rows = []
    for trial in range(100):
        f = grid.field(rng.normal(size=grid.num_points))
        band = (xi >= lo) & (xi <= hi / 2)
        f = mean_zero_project(apply_symbol(f, band.astype(float)))
        ratio = square_function_ratio(f, 0.0)
        dec = decompose(f, lo, hi)
        err = (dec.reconstruct() - f).l2() / f.l2()
        rows.append((trial, ratio, err))
    _write_csv(out / "lp_check.csv", ["trial", "ratio_s0", "reconstruction_error"], rows)


def trilinear_configs():
    """``(ns, ls_below, ls_above)`` used by the dichotomy check."""
    out = []
    for ns in ((4, 4, 4), (4, 8, 8), (8, 8, 8)):
        n1, n2 = ns[0], ns[1]
        threshold = n1 * n2**2 + n2 / n1**2
        below = 2.0 ** np.floor(np.log2(LEMMA_THRESHOLD_BELOW * threshold))
        above = 2.0 ** np.ceil(np.log2(LEMMA_THRESHOLD_ABOVE * threshold))
        out.append((ns, below, above))
    return out


def _trilinear_check(cfg, out: Path, plots: bool):
    fam = cfg.family
    rows = []
    for ns, below, above in trilinear_configs():
        m = min_resonance_on_support(fam, ns)
        for regime, level in (("below", below), ("above", above)):
            val = trilinear_vanishing_check(ns, (level,) * 3, fam, trials=cfg["trials"], seed=cfg["seed"])
            rows.append((*ns, level, regime, val, m))
    _write_csv(out / "trilinear_check.csv", ["n1", "n2", "n3", "l", "regime", "max_normalized", "min_resonance"], rows)


def _inflation_scan(cfg, out: Path, plots: bool):
    gamma = cfg["gamma"]
    s = cfg["s"]
    ns = [float(v) for v in cfg["n_list"]]

    def job(n):
        return inflation_scan(s, gamma, [n], t=cfg["t_end"])[0]

    with ThreadPoolExecutor(max_workers()) as pool:
        results = list(pool.map(job, ns))
    write_inflation_csv(out / "inflation_scan.csv", results)


def _limit_check(cfg, out: Path, plots: bool):
    grid = cfg.grid
    u0 = _datum(grid)
    deltas = [2.0, 4.0, 8.0]
    t = min(cfg["t_end"], 0.1)
    diffs = deep_water_compare(u0, deltas, cfg["gamma"], t)
    xi = grid.rfft_wavenumbers[1:-1]
    xi = xi[xi >= 1.0]
    rows = [(d, float(coth_gap(d, xi).max()), 2.1 * np.exp(-2 * d), diff) for d, diff in zip(deltas, diffs)]
    _write_csv(out / "limit_check.csv", ["delta", "multiplier_gap", "gap_bound", "rel_difference"], rows)


def _scaling_check(cfg, out: Path, plots: bool):
    grid = cfg.grid
    u0 = _datum(grid)
    gamma = cfg["gamma"] if cfg["gamma"] > 0 else 1.0
    fam = DispersionFamily.rmbo(gamma)
    t = min(cfg["t_end"], 0.1)
    rows = []
    for exponent in (3.0, 4.0):
        d = verify_scaling(u0, 0.5, fam, t, rotation_exponent=exponent)
        rows.append((0.5, gamma, t, exponent, d))
    _write_csv(out / "scaling_check.csv", ["lambda", "gamma", "t", "rotation_exponent", "discrepancy"], rows)


def _bench(cfg, out: Path, plots: bool):
    fam = cfg.family
    results = []
    for k in range(10, 15):
        n = 2**k
        grid = Grid(n, cfg["grid.L"])
        u = _datum(grid)
        stepper = _Stepper(fam, grid, default_dt(u), 2.0 / 3.0)
        U = np.fft.rfft(u.samples)
        steps = 0
        start = time.perf_counter()
        while steps < 20 or time.perf_counter() - start < 0.2:
            U = stepper(U)
            steps += 1
        elapsed = time.perf_counter() - start
        results.append({"n": n, "steps": steps, "seconds": elapsed, "steps_per_sec": steps / elapsed})
    with open(out / "bench.json", "w") as fh:
        json.dump({"family": fam.kind, "results": results}, fh, indent=2)


EXPERIMENTS = {
    "simulate": _simulate,
    "resonance-scan": _resonance_scan,
    "lp-check": _lp_check,
    "trilinear-check": _trilinear_check,
    "inflation-scan": _inflation_scan,
    "limit-check": _limit_check,
    "scaling-check": _scaling_check,
    "bench": _bench,
}


def dispatch(cfg: ExperimentConfig, plots: bool = False) -> RunManifest:
    """Run the experiment named by ``cfg.command`` and write its manifest.

    Module errors are caught and reflected in ``status``; the manifest lists
    every file present in ``output_dir`` afterwards, itself included.
    """
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config={"command": cfg.command, **cfg.params}, version=__version__)
    start = time.perf_counter()
    try:
        EXPERIMENTS[cfg.command](cfg, out, plots)
    except BlowupError as exc:
        manifest.status, manifest.message = "blowup", str(exc)
    except AccuracyError as exc:
        manifest.status, manifest.message = "accuracy-error", str(exc)
    manifest.wall_time_s = time.perf_counter() - start
    path = out / MANIFEST_NAME
    names = {p.name for p in out.iterdir() if p.is_file()} | {path.name}
    manifest.outputs = sorted(str(out / n) for n in names)
    with open(path, "w") as fh:
        json.dump(manifest.to_json(), fh, indent=2, sort_keys=True)
    return manifest


STATUS_CODES = {"ok": EXIT_OK, "accuracy-error": EXIT_ACCURACY, "blowup": EXIT_BLOWUP}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dispersive-lab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="TOML config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--plots", action="store_true", help="also write SVG line plots")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        overrides = dict(parse_override(item) for item in args.overrides)
        cfg = parse_config(text, args.command, overrides)
        max_workers()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = dispatch(cfg, plots=args.plots)
    except DispersiveLabError as exc:
        # a parameter rejected by a module counts as a configuration problem
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if manifest.status != "ok":
        print(f"{manifest.status}: {manifest.message}", file=sys.stderr)
    return STATUS_CODES[manifest.status]


if __name__ == "__main__":
    sys.exit(main())
