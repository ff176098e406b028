"""Command-line front end: ``qjump {coeffs,compare,figures,traject,slope}``.

Every value is reported as ``T * f``. Exit codes: 0 when all tolerance gates
pass, 2 when a gate fails, 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .fock import fock_projector
from .jc import JCParams, fmn_jc, fnn_exact_jc, fnn_interp_jc
from .oscillator import (OscParams, Regime, fnn_asymptotic, fnn_integral_osc, fnn_small_chi,
                         fnn_steepest_descent, fnn_tricomi)
from .tables import Model, Provenance, fit_power_law, implied_beta
from .trajectories import TrajectoryConfig, sample_first_jumps

EXIT_OK, EXIT_ERROR, EXIT_GATE = 0, 1, 2

FIG1_CHI = (0.1, 0.3, 0.5, 0.8, 1.1)
FIG2_CHI = (5.0, 10.0, 20.0, 40.0, 70.0)
FIG3_CHI = (0.5, 1.1, 2.0, 3.0, 4.0)
FIG3_GATE_N, FIG3_GATE_TOL = 20, 0.05

DEFAULT_N = {"coeffs": "1:50", "compare": "1:50", "figures": "1:300",
             "traject": "1:5", "slope": "50:300"}
MODEL_NAMES = {"jc": Model.JC, "osc": Model.OSCILLATOR}

# method -> (provenance, relative tolerance or None, smallest gated n)
METHODS = {
    Model.JC: {
        "exact": (Provenance.ANALYTIC_EXACT, 0.01, 1),
        "interp": (Provenance.ANALYTIC_INTERP, None, 1),
    },
    Model.OSCILLATOR: {
        "tricomi": (Provenance.ANALYTIC_EXACT, 1e-6, 1),
        "small_chi_exact": (Provenance.ANALYTIC_EXACT, 0.02, 1),
        "steepest_descent": (Provenance.STEEPEST_DESCENT, FIG3_GATE_TOL, FIG3_GATE_N),
        "asymptotic": (Provenance.STEEPEST_DESCENT, None, 1),
    },
}

CONFIG_KEYS = {"model", "chi", "lambda_T", "omega_over_g", "T", "n", "n_traj", "seed",
               "out", "format", "method", "workers", "off_diagonal"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: Model = Model.JC
    chi: tuple = (0.5,)
    lambda_T: float = 10.0
    omega_over_g: float = 1e3
    T: float = 1.0
    n_range: tuple = (1, 50)
    n_traj: int = 100_000
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    method: str | None = None
    workers: int = 1
    off_diagonal: bool = False
    chi_given: bool = False

    def echo(self) -> dict:
        model = next(k for k, v in MODEL_NAMES.items() if v is self.model)
        return {"model": model, "chi": ",".join(_fmt(c) for c in self.chi),
                "lambda_T": _fmt(self.lambda_T), "omega_over_g": _fmt(self.omega_over_g),
                "T": _fmt(self.T), "n": f"{self.n_range[0]}:{self.n_range[1]}",
                "n_traj": str(self.n_traj), "seed": str(self.seed), "out": self.out,
                "format": self.format, "method": self.method, "workers": str(self.workers),
                "off_diagonal": str(self.off_diagonal).lower()}


@dataclass
class Outcome:
    files: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    gate_failures: list = field(default_factory=list)


# --- parsing -------------------------------------------------------------

def _fmt(x) -> str:
    # shortest round-trip form, for the config echo and messages
    return repr(float(x)) if isinstance(x, float) else str(x)


def parse_chi(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad chi list {text!r}") from exc
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ConfigError(f"chi values must be positive, got {text!r}")
    return vals


def parse_n_range(text: str) -> tuple:
    parts = str(text).split(":")
    try:
        lo, hi = (int(parts[0]), int(parts[-1])) if len(parts) <= 2 else (None, None)
    except ValueError as exc:
        raise ConfigError(f"bad n range {text!r}; expected LO:HI") from exc
    if lo is None or lo < 0 or hi < lo:
        raise ConfigError(f"bad n range {text!r}; expected 0 <= LO <= HI")
    return lo, hi


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def read_config_file(path: str) -> dict:
    """``key = value`` lines with ``#`` comments, or the ``config`` object of a run manifest."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        cfg = json.loads(text).get("config")
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: manifest has no config object")
        items = {k: v for k, v in cfg.items() if v is not None}
    else:
        items = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            items[key] = value
    unknown = sorted(set(items) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return {k: str(v) for k, v in items.items()}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qjump", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"coeffs": "tabulate T*f_mn by quadrature",
             "compare": "quadrature against the closed forms, with tolerance gates",
             "figures": "datasets behind the three f_nn figures (oscillator detector)",
             "traject": "Monte Carlo first-jump statistics against quadrature",
             "slope": "log-log slope of f_nn and the implied beta"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--model", choices=sorted(MODEL_NAMES))
        p.add_argument("--chi", help="comma-separated list")
        p.add_argument("--lambda-T", dest="lambda_T")
        p.add_argument("--omega-over-g", dest="omega_over_g")
        p.add_argument("--T")
        p.add_argument("--n", help="LO:HI")
        p.add_argument("--n-traj", dest="n_traj")
        p.add_argument("--seed")
        p.add_argument("--out")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--method")
        p.add_argument("--workers")
        p.add_argument("--off-diagonal", dest="off_diagonal", action="store_const",
                       const="true", help="coeffs: include m != n (chi < 1 only)")
        p.add_argument("--config", help="key = value file, or a run manifest")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    values = read_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    cfg = RunConfig(command=args.command)
    try:
        if "model" in values:
            if values["model"] not in MODEL_NAMES:
                raise ConfigError(f"unknown model {values['model']!r}")
            cfg.model = MODEL_NAMES[values["model"]]
        if "chi" in values:
            cfg.chi = parse_chi(values["chi"])
            cfg.chi_given = True
        for key in ("lambda_T", "omega_over_g", "T"):
            if key in values:
                setattr(cfg, key, float(values[key]))
        cfg.n_range = parse_n_range(values.get("n", DEFAULT_N[args.command]))
        if "n_traj" in values:
            cfg.n_traj = int(values["n_traj"])
        if "seed" in values:
            cfg.seed = int(values["seed"])
        if "workers" in values:
            cfg.workers = int(values["workers"])
        if "off_diagonal" in values:
            cfg.off_diagonal = _parse_bool(values["off_diagonal"])
        cfg.out = values.get("out")
        cfg.format = values.get("format", "csv")
        cfg.method = values.get("method")
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    for key in ("lambda_T", "omega_over_g", "T"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{key} must be positive")
    if cfg.n_traj < 1 or cfg.workers < 1:
        raise ConfigError("n_traj and workers must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.command != "traject" and cfg.n_range[0] < 1:
        raise ConfigError("n range must start at 1 or above")
    if cfg.command == "slope" and cfg.n_range[1] - cfg.n_range[0] + 1 < 10:
        raise ConfigError("slope needs an n range of at least 10 points")
    if cfg.command == "figures" and cfg.chi_given:
        raise ConfigError("figures uses the caption chi lists; --chi is not accepted")
    if cfg.method is not None:
        if cfg.command != "compare":
            raise ConfigError("--method only applies to compare")
        if cfg.method not in METHODS[cfg.model]:
            raise ConfigError(f"method {cfg.method!r} is not available for "
                              f"{cfg.model.value}; choose from {sorted(METHODS[cfg.model])}")


# --- physics helpers ----------------------------------------------------------

def _params(model: Model, chi: float, cfg: RunConfig):
    cls = JCParams if model is Model.JC else OscParams
    return cls.from_chi(chi, lambda_T=cfg.lambda_T, omega_over_g=cfg.omega_over_g, T=cfg.T)


def _quadrature(model: Model, p, T: float, m: int, n: int):
    if model is Model.JC:
        return fmn_jc(p, T, m, n)
    return fnn_integral_osc(p, T, m, n)


def _method_value(model: Model, method: str, p, n: int, T: float) -> float:
    if model is Model.JC:
        return fnn_exact_jc(n, T) if method == "exact" else fnn_interp_jc(n, T, p)
    if method == "tricomi":
        if p.regime is not Regime.CRITICAL:
            raise ValueError("tricomi form applies at chi = 1 only")
        return fnn_tricomi(n, T)
    if method == "small_chi_exact":
        return fnn_small_chi(n, T).exact
    if method == "steepest_descent":
        return fnn_steepest_descent(p, n, T)[0]
    return fnn_asymptotic(p.chi, n, T)


def _rel_err(num: float, other: float) -> float:
    return (num - other) / num if num != 0 else (0.0 if other == 0 else math.inf)


# --- commands --------------------------------------------------------------

def cmd_coeffs(cfg: RunConfig, out: Outcome):
    header = ["model", "chi", "lambdaT", "m", "n", "T_fmn_re", "T_fmn_im", "provenance"]
    rows = []
    lo, hi = cfg.n_range
    for chi in cfg.chi:
        p = _params(cfg.model, chi, cfg)
        for m in range(lo, hi + 1):
            cols = range(m, hi + 1) if cfg.off_diagonal else (m,)
            for n in cols:
                v = complex(_quadrature(cfg.model, p, cfg.T, m, n)) * cfg.T
                rows.append([cfg.model.value, chi, cfg.lambda_T, m, n, v.real, v.imag,
                             Provenance.QUADRATURE.value])
    out.provenance["T_fmn"] = Provenance.QUADRATURE.value
    out.files[_default_out(cfg)] = (header, rows)


def cmd_compare(cfg: RunConfig, out: Outcome):
    header = ["model", "chi", "lambdaT", "n", "method", "T_fnn", "rel_err_vs_quadrature"]
    methods = [cfg.method] if cfg.method else list(METHODS[cfg.model])
    rows = []
    out.provenance["quadrature"] = Provenance.QUADRATURE.value
    for chi in cfg.chi:
        p = _params(cfg.model, chi, cfg)
        active = [m for m in methods if cfg.method or m != "tricomi"
                  or p.regime is Regime.CRITICAL]
        for n in range(cfg.n_range[0], cfg.n_range[1] + 1):
            q = _quadrature(cfg.model, p, cfg.T, n, n)
            rows.append([cfg.model.value, chi, cfg.lambda_T, n, "quadrature", q * cfg.T, 0.0])
            for method in active:
                prov, tol, n_gate = METHODS[cfg.model][method]
                out.provenance[method] = prov.value
                v = _method_value(cfg.model, method, p, n, cfg.T)
                err = _rel_err(q, v)
                rows.append([cfg.model.value, chi, cfg.lambda_T, n, method, v * cfg.T, err])
                if tol is not None and n >= n_gate and not abs(err) < tol:
                    out.gate_failures.append(
                        f"{method} chi={_fmt(chi)} n={n}: |rel_err| {abs(err):.3g} >= {tol:g}")
    out.files[_default_out(cfg)] = (header, rows)


def cmd_figures(cfg: RunConfig, out: Outcome):
    base = Path(cfg.out or ".")
    ext = cfg.format
    lo, hi = cfg.n_range
    for name, chis in (("fig1", FIG1_CHI), ("fig2", FIG2_CHI)):
        rows = []
        for chi in chis:
            p = _params(Model.OSCILLATOR, chi, cfg)
            for n in range(lo, hi + 1):
                rows.append([chi, n, fnn_integral_osc(p, cfg.T, n, n) * cfg.T])
        out.files[str(base / f"{name}.{ext}")] = (["chi", "n", "T_fnn_numeric"], rows)
    rows = []
    for chi in FIG3_CHI:
        p = _params(Model.OSCILLATOR, chi, cfg)
        for n in range(lo, hi + 1):
            num = fnn_integral_osc(p, cfg.T, n, n) * cfg.T
            try:
                anal = fnn_steepest_descent(p, n, cfg.T)[0] * cfg.T
            except ValueError as exc:
                rows.append([chi, n, num, math.nan, math.nan, str(exc)])
                continue
            err = _rel_err(num, anal)
            rows.append([chi, n, num, anal, err, ""])
            if n >= FIG3_GATE_N and not abs(err) < FIG3_GATE_TOL:
                out.gate_failures.append(f"fig3 chi={_fmt(chi)} n={n}: |Er| {abs(err):.3g}")
    out.files[str(base / f"fig3.{ext}")] = (
        ["chi", "n", "T_fnn_numeric", "T_fnn_analytic", "rel_err", "error"], rows)
    out.provenance.update(T_fnn_numeric=Provenance.QUADRATURE.value,
                          T_fnn_analytic=Provenance.STEEPEST_DESCENT.value)


def cmd_traject(cfg: RunConfig, out: Outcome):
    header = ["model", "chi", "n", "n_traj", "empirical_T_fnn", "stderr", "reference_T_fnn",
              "z_score"]
    rows = []
    for chi in cfg.chi:
        p = _params(cfg.model, chi, cfg)
        for n in range(cfg.n_range[0], cfg.n_range[1] + 1):
            dim = max(n + 1, 2)
            step = 2 * math.pi / (p.abs_g * math.sqrt(max(n, 1))) / 20
            points = max(4096, math.ceil(cfg.T / step) + 1)
            tc = TrajectoryConfig(cfg.model, p, cfg.T, fock_projector(n, dim), cfg.n_traj,
                                  cfg.seed, points)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                ens = sample_first_jumps(tc, workers=cfg.workers)
            out.warnings.extend(f"chi={_fmt(chi)} n={n}: {w.message}" for w in caught)
            if n == 0:
                ref, z = 0.0, 0.0
            else:
                ref = _quadrature(cfg.model, p, cfg.T, n, n)
                z = ens.z_score(ref)
            rows.append([cfg.model.value, chi, n, cfg.n_traj, ens.empirical_fnn * cfg.T,
                         ens.stderr * cfg.T, ref * cfg.T, z])
            if abs(z) > 3:
                out.gate_failures.append(f"traject chi={_fmt(chi)} n={n}: |z| = {abs(z):.3g}")
    out.provenance.update(empirical_T_fnn=Provenance.EMPIRICAL.value,
                          reference_T_fnn=Provenance.QUADRATURE.value)
    out.files[_default_out(cfg)] = (header, rows)


def cmd_slope(cfg: RunConfig, out: Outcome):
    from .jc import jc_table
    from .oscillator import osc_table
    header = ["model", "chi", "n_lo", "n_hi", "slope", "implied_beta"]
    lo, hi = cfg.n_range
    rows = []
    for chi in cfg.chi:
        p = _params(cfg.model, chi, cfg)
        build = jc_table if cfg.model is Model.JC else osc_table
        table = build(p, cfg.T, hi, workers=cfg.workers)
        fit = fit_power_law(table, lo, hi)
        rows.append([cfg.model.value, chi, lo, hi, fit.slope, implied_beta(fit.slope)])
    out.provenance["slope"] = Provenance.QUADRATURE.value
    out.files[_default_out(cfg)] = (header, rows)


COMMANDS = {"coeffs": cmd_coeffs, "compare": cmd_compare, "figures": cmd_figures,
            "traject": cmd_traject, "slope": cmd_slope}


# --- output ----------------------------------------------------------------

def _default_out(cfg: RunConfig) -> str:
    return cfg.out or f"{cfg.command}.{cfg.format}"


def _cell(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def render(header, rows, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows([[_cell(c) for c in r] for r in rows])
        return buf.getvalue()
    records = [{h: (None if isinstance(c, float) and not math.isfinite(c) else c)
                for h, c in zip(header, r)} for r in rows]
    return json.dumps(records, indent=1) + "\n"


def write_atomic(path: str | Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(cfg: RunConfig) -> Path:
    if cfg.command == "figures":
        return Path(cfg.out or ".") / "figures.manifest.json"
    return Path(str(_default_out(cfg)) + ".manifest.json")


def run(cfg: RunConfig) -> tuple[int, Outcome]:
    out = Outcome()
    start = time.perf_counter()
    COMMANDS[cfg.command](cfg, out)
    for path, (header, rows) in out.files.items():
        write_atomic(path, render(header, rows, cfg.format))
    code = EXIT_GATE if out.gate_failures else EXIT_OK
    manifest = {
        "command": cfg.command,
        "config": cfg.echo(),
        "version": __version__,
        "provenance": out.provenance,
        "tail_bound": math.exp(-cfg.lambda_T),
        "wall_clock_s": round(time.perf_counter() - start, 3),
        "warnings": out.warnings,
        "gate_failures": out.gate_failures,
        "files": sorted(out.files),
        "exit_code": code,
    }
    write_atomic(manifest_path(cfg), json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return code, out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        code, out = run(cfg)
    except ConfigError as exc:
        print(f"qjump: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        print(f"qjump: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for msg in out.gate_failures[:20]:
        print(f"gate failed: {msg}", file=sys.stderr)
    if len(out.gate_failures) > 20:
        print(f"... {len(out.gate_failures) - 20} more gate failures", file=sys.stderr)
    for path in sorted(out.files):
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
