"""Command-line front end: config handling, seeding, and data emission.

Subcommands wrap the library's top-level operations (scan, bracket, zeroset,
stationary, mapplot, verify) and write plot-ready CSV/JSON. Configuration is a
flat key=value file overridden by CLI flags; the master seed resolves as flag >
NIO_SEED environment variable > config file > default 0. Every output embeds a
header with a hash of the effective parameters and the master seed, writes go
through a temp file + atomic rename, and floats carry 17 significant digits so
re-runs are byte-identical.

Exit codes: 0 success, 1 usage/config error, 2 numerical or per-point failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .dynamics import LorenzSkewProduct
from .interval import ZeroSweepError, zero_set_csv_rows, zero_set_sweep
from .noise import KERNEL_KINDS, ScaledKernel, mother_kernel
from .scan import (
    SCAN_CSV_HEADER,
    ScanBudgets,
    bracket_transition,
    default_xi_grid,
    scan_csv_rows,
    scan_xi,
    transition_from_rows,
    verify_max_formula,
)
from .transfer import (
    ConvergenceError,
    base_lyapunov_from_density,
    build_ulam,
    density_csv_rows,
    stationary_density,
)

DEFAULT_SEED = 0
VERIFY_DEFAULT_XI = (0.1, 0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class RunConfig:
    """Shared run parameters; per-command extras stay on the CLI."""

    a: float = 2.0
    s: float = 4.0
    r: float = 7.5
    c_plus: float = 0.5
    c_minus: float = -0.5
    kernel: str = "uniform"
    n_cells: int = 1024
    n_steps: int = 1_000_000
    n_burnin: int = 10_000
    zero_noise_seeds: int = 8
    xi_min: float = 0.01
    xi_max: float = 100.0
    xi_points: int = 40
    include_zero: bool = True
    seed: int = DEFAULT_SEED
    outdir: str = "."
    workers: int = 0

    def map(self) -> LorenzSkewProduct:
        return LorenzSkewProduct(
            a=self.a, s=self.s, r=self.r, c_plus=self.c_plus, c_minus=self.c_minus
        )

    def budgets(self) -> ScanBudgets:
        return ScanBudgets(
            n_steps=self.n_steps,
            n_burnin=self.n_burnin,
            n_cells=self.n_cells,
            zero_noise_seeds=self.zero_noise_seeds,
        )

    def xi_grid(self) -> np.ndarray:
        grid = np.logspace(math.log10(self.xi_min), math.log10(self.xi_max), self.xi_points)
        if self.include_zero:
            grid = np.concatenate([[0.0], grid])
        return grid


_CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
# outdir and workers never influence the emitted data, so they stay out of the hash
_HASH_EXCLUDED = {"outdir", "workers"}


class UsageError(Exception):
    """Invalid flags, config file, or parameter values (exit code 1)."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(name: str, raw: str):
    default = getattr(RunConfig(), name)
    try:
        if isinstance(default, bool):
            return _parse_bool(raw)
        if isinstance(default, int):
            return int(raw, 0)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise UsageError(f"config field {name}: {exc}") from exc


def read_config_file(path: str) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if "=" not in stripped:
                    raise UsageError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
                key, _, raw = stripped.partition("=")
                key = key.strip()
                if key not in _CONFIG_FIELDS:
                    raise UsageError(f"{path}:{lineno}: unknown config field {key!r}")
                values[key] = _coerce(key, raw.strip())
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults <- config file <- NIO_SEED <- explicit flags, then validation."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    env_seed = os.environ.get("NIO_SEED")
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed, 0)
        except ValueError as exc:
            raise UsageError(f"NIO_SEED is not an integer: {env_seed!r}") from exc
    for name in _CONFIG_FIELDS:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    try:
        config = RunConfig(**values)
        config.map()  # field-level parameter validation
        mother_kernel(config.kernel)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if config.n_steps < 100:
        raise UsageError("n_steps: must be >= 100")
    if config.xi_points < 1:
        raise UsageError("xi_points: must be >= 1")
    if not 0.0 < config.xi_min <= config.xi_max:
        raise UsageError("xi range: need 0 < xi_min <= xi_max")
    return config


def config_hash(config: RunConfig, command: str, extras: dict) -> str:
    """Stable hex digest of every parameter that determines the output data."""
    entries = {
        name: getattr(config, name) for name in _CONFIG_FIELDS if name not in _HASH_EXCLUDED
    }
    entries.update(extras)
    entries["command"] = command
    lines = []
    for key in sorted(entries):
        value = entries[key]
        if isinstance(value, float):
            lines.append(f"{key}={value!r}")
        else:
            lines.append(f"{key}={value}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_csv(path: str, header_comment: str, columns: str, rows) -> None:
    lines = [header_comment, columns]
    lines.extend(",".join(_fmt_cell(cell) for cell in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: str, header: dict, payload: dict) -> None:
    _atomic_write(path, json.dumps({**header, **payload}, indent=2, sort_keys=True) + "\n")


def _header(config: RunConfig, command: str, extras: dict) -> str:
    return f"# config_hash={config_hash(config, command, extras)} master_seed={config.seed}"


def _parse_xi_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"--xi: {exc}") from exc
    if not values:
        raise UsageError("--xi: empty list")
    return values


def cmd_scan(config: RunConfig, args: argparse.Namespace) -> int:
    if args.xi is not None:
        grid = sorted(_parse_xi_list(args.xi))
        if any(v < 0 for v in grid):
            raise UsageError("--xi: amplitudes must be nonnegative")
    else:
        grid = list(config.xi_grid())
    only = args.only
    extras = {"xi_grid": ",".join("%.17g" % v for v in grid), "only": only or "all"}
    header = _header(config, "scan", extras)

    rows = scan_xi(
        config.map(),
        mother_kernel(config.kernel),
        grid,
        config.budgets(),
        master_seed=config.seed,
        workers=config.workers,
        only=only,
    )
    csv_path = os.path.join(config.outdir, "scan.csv")
    write_csv(csv_path, header, SCAN_CSV_HEADER, scan_csv_rows(rows))

    report = transition_from_rows(rows)
    errors = [{"xi": r.xi, "message": r.error} for r in rows if r.error is not None]
    summary = {
        "n_rows": len(rows),
        "transition": dataclasses.asdict(report) if report else None,
        "errors": errors,
    }
    json_path = os.path.join(config.outdir, "scan_summary.json")
    write_json(
        json_path,
        {"config_hash": config_hash(config, "scan", extras), "master_seed": config.seed},
        summary,
    )
    print(f"scan: {len(rows)} rows -> {csv_path}")
    if report:
        print(
            f"scan: MC sign change bracketed in [{report.xi_plus:.6g}, {report.xi_minus:.6g}]"
        )
    if errors:
        failed = ", ".join("%.6g" % e["xi"] for e in errors)
        print(f"scan: {len(errors)} grid point(s) failed at xi = {failed}", file=sys.stderr)
        return 2
    return 0


def cmd_bracket(config: RunConfig, args: argparse.Namespace) -> int:
    extras = {"xi_lo": args.xi_lo, "xi_hi": args.xi_hi, "tol_xi": args.tol_xi}
    try:
        report = bracket_transition(
            config.map(),
            mother_kernel(config.kernel),
            args.xi_lo,
            args.xi_hi,
            tol_xi=args.tol_xi,
            budgets=config.budgets(),
            master_seed=config.seed,
        )
    except (ValueError, ConvergenceError) as exc:
        print(f"bracket: failed on [{args.xi_lo:.6g}, {args.xi_hi:.6g}]: {exc}", file=sys.stderr)
        return 2
    path = os.path.join(config.outdir, "bracket.json")
    write_json(
        path,
        {"config_hash": config_hash(config, "bracket", extras), "master_seed": config.seed},
        dataclasses.asdict(report),
    )
    print(
        f"bracket: xi_plus={report.xi_plus:.6g} xi_minus={report.xi_minus:.6g} "
        f"({report.bracket_method}) -> {path}"
    )
    return 0


def cmd_zeroset(config: RunConfig, args: argparse.Namespace) -> int:
    a_lo, a_hi = args.a_range
    if not 1.0 < a_lo <= a_hi <= 2.0:
        raise UsageError(f"--a-range: need 1 < lo <= hi <= 2, got {a_lo} {a_hi}")
    if args.width_tol <= 0:
        raise UsageError("--width-tol: must be positive")
    extras = {"a_lo": a_lo, "a_hi": a_hi, "n_points": args.n_points, "width_tol": args.width_tol}
    try:
        sweep = zero_set_sweep(a_lo, a_hi, args.n_points, args.width_tol)
    except ZeroSweepError as exc:
        print(f"zeroset: sweep failed: {exc}", file=sys.stderr)
        return 2
    path = os.path.join(config.outdir, "zeroset.csv")
    write_csv(path, _header(config, "zeroset", extras), "a,s_lo,s_hi,steps,certified", zero_set_csv_rows(sweep))
    n_uncertified = sum(1 for e in sweep if not e.certified)
    print(f"zeroset: {len(sweep)} enclosures -> {path}")
    if n_uncertified:
        bad = ", ".join("%.6g" % e.a.mid for e in sweep if not e.certified)
        print(f"zeroset: {n_uncertified} enclosure(s) not certified at a = {bad}", file=sys.stderr)
        return 2
    return 0


def cmd_stationary(config: RunConfig, args: argparse.Namespace) -> int:
    if args.xi <= 0.0:
        raise UsageError("--xi: stationary densities need a positive amplitude")
    extras = {"xi": args.xi}
    kernel = ScaledKernel(mother_kernel(config.kernel), args.xi)
    op = build_ulam(config.map(), config.n_cells)
    try:
        result = stationary_density(op, kernel)
    except ConvergenceError as exc:
        print(f"stationary: xi={args.xi:.6g} failed to converge: {exc}", file=sys.stderr)
        return 2
    path = os.path.join(config.outdir, "stationary.csv")
    write_csv(
        path,
        _header(config, "stationary", extras),
        "cell_left,cell_right,density",
        density_csv_rows(result.density),
    )
    lam = base_lyapunov_from_density(config.map(), result.density)
    print(
        f"stationary: xi={args.xi:.6g} converged in {result.iterations} iterations "
        f"(residual {result.residual:.3g}), lambda_base={lam:.6g} -> {path}"
    )
    return 0


def cmd_mapplot(config: RunConfig, args: argparse.Namespace) -> int:
    m = config.map()
    xs = np.linspace(-1.0, 1.0, 2049)
    xs = xs[xs != 0.0]
    rows = [(x, m.base_map(float(x))) for x in xs]
    path = os.path.join(config.outdir, "mapplot.csv")
    write_csv(path, _header(config, "mapplot", {}), "x,T(x)", rows)
    print(f"mapplot: {len(rows)} samples -> {path}")
    return 0


def cmd_verify(config: RunConfig, args: argparse.Namespace) -> int:
    xi_list = _parse_xi_list(args.xi) if args.xi is not None else list(VERIFY_DEFAULT_XI)
    if any(v <= 0 for v in xi_list):
        raise UsageError("--xi: verification amplitudes must be positive")
    extras = {"xi_list": ",".join("%.17g" % v for v in xi_list)}
    rows = verify_max_formula(
        config.map(),
        mother_kernel(config.kernel),
        xi_list,
        config.budgets(),
        master_seed=config.seed,
    )
    path = os.path.join(config.outdir, "verify.csv")
    write_csv(
        path,
        _header(config, "verify", extras),
        "xi,chi1_qr,max_base_fiber,discrepancy,combined_stderr,passed,sum_identity_residual,identity_passed",
        [dataclasses.astuple(r) for r in rows],
    )
    all_ok = True
    for r in rows:
        status = "pass" if (r.passed and r.identity_passed) else "FAIL"
        all_ok &= r.passed and r.identity_passed
        print(
            f"verify: xi={r.xi:<8.6g} chi1_qr={r.chi1_qr:+.6f} max={r.max_base_fiber:+.6f} "
            f"disc={r.discrepancy:.2e} identity_res={r.sum_identity_residual:.2e} [{status}]"
        )
    print(f"verify: table -> {path}")
    if not all_ok:
        failed = ", ".join("%.6g" % r.xi for r in rows if not (r.passed and r.identity_passed))
        print(f"verify: failed at xi = {failed}", file=sys.stderr)
        return 2
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="niolab",
        description="Noise-induced-order laboratory for fiber-contracting skew products",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--a", type=float, help="base map slope parameter")
    common.add_argument("--s", type=float, help="base map exponent")
    common.add_argument("--r", type=float, help="fiber contraction exponent (> s + 3)")
    common.add_argument("--c-plus", dest="c_plus", type=float, help="right-branch fiber offset")
    common.add_argument("--c-minus", dest="c_minus", type=float, help="left-branch fiber offset")
    common.add_argument("--kernel", choices=sorted(KERNEL_KINDS), help="mother noise kernel")
    common.add_argument("--n-cells", dest="n_cells", type=int, help="transfer-operator grid cells (power of two)")
    common.add_argument("--n-steps", dest="n_steps", type=int, help="Monte Carlo orbit steps")
    common.add_argument("--n-burnin", dest="n_burnin", type=int, help="Monte Carlo burn-in steps")
    common.add_argument("--zero-noise-seeds", dest="zero_noise_seeds", type=int, help="seed count for xi=0 averages")
    common.add_argument("--seed", type=int, help="master seed (overrides NIO_SEED and config)")
    common.add_argument("--outdir", help="output directory")
    common.add_argument("--workers", type=int, help="worker threads (0 = auto)")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_scan = sub.add_parser("scan", parents=[common], help="exponents on a xi grid -> scan.csv + scan_summary.json")
    p_scan.add_argument("--xi", help="comma-separated amplitudes overriding the default grid")
    p_scan.add_argument("--only", choices=["ulam", "mc"], help="restrict to one estimation route")
    p_scan.add_argument("--xi-min", dest="xi_min", type=float, help="grid lower amplitude")
    p_scan.add_argument("--xi-max", dest="xi_max", type=float, help="grid upper amplitude")
    p_scan.add_argument("--xi-points", dest="xi_points", type=int, help="log-spaced grid size")
    p_scan.add_argument(
        "--include-zero", dest="include_zero", type=_parse_bool, help="prepend xi=0 (true/false)"
    )
    p_scan.set_defaults(func=cmd_scan)

    p_bracket = sub.add_parser("bracket", parents=[common], help="bisect the sign change -> bracket.json")
    p_bracket.add_argument("--xi-lo", dest="xi_lo", type=float, default=0.01)
    p_bracket.add_argument("--xi-hi", dest="xi_hi", type=float, default=10.0)
    p_bracket.add_argument("--tol-xi", dest="tol_xi", type=float, default=1e-2)
    p_bracket.set_defaults(func=cmd_bracket)

    p_zeroset = sub.add_parser("zeroset", parents=[common], help="certified s*(a) enclosures -> zeroset.csv")
    p_zeroset.add_argument("--a-range", dest="a_range", type=float, nargs=2, default=[1.00781, 2.0], metavar=("LO", "HI"))
    p_zeroset.add_argument("--n-points", dest="n_points", type=int, default=128)
    p_zeroset.add_argument("--width-tol", dest="width_tol", type=float, default=1e-6)
    p_zeroset.set_defaults(func=cmd_zeroset)

    p_stationary = sub.add_parser("stationary", parents=[common], help="stationary density -> stationary.csv")
    p_stationary.add_argument("--xi", type=float, required=True, help="noise amplitude (> 0)")
    p_stationary.set_defaults(func=cmd_stationary)

    p_mapplot = sub.add_parser("mapplot", parents=[common], help="sampled base map graph -> mapplot.csv")
    p_mapplot.set_defaults(func=cmd_mapplot)

    p_verify = sub.add_parser("verify", parents=[common], help="max-formula checks -> verify.csv")
    p_verify.add_argument("--xi", help="comma-separated amplitudes (default 0.1,0.5,1,2,5)")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        return args.func(config, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
