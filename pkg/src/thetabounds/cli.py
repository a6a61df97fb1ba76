"""Command-line front end: ``thetabounds {bound,epsilon,verify,tables,report}``.

Configuration is a plain ``key=value`` file named by ``--config`` or the
THETABOUNDS_CONFIG environment variable; command-line flags win over it.
Exit status is 0 on success, 2 when an input violates a precondition and 3
when an input file is malformed.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import BoundsError, DataError, PreconditionError
from .inputs import (
    DEFAULT_CONSTANTS,
    GlobalConstants,
    load_epsilon_table,
    load_sieve_maxima,
    load_zero_density,
)
from .numerics import LOWER, UPPER, ConservativeReal, eval_conservative, present, set_working_digits

CONFIG_ENV = "THETABOUNDS_CONFIG"
EXIT_OK, EXIT_PRECONDITION, EXIT_DATA = 0, 2, 3

CONSTANT_KEYS = {f.name for f in fields(GlobalConstants)}


@dataclass(frozen=True)
class RunConfig:
    constants: GlobalConstants = DEFAULT_CONSTANTS
    epsilon_csv: str = "package:epsilon_default.csv"
    zerodensity_csv: str = "package:zerodensity.csv"
    zeros_file: str = "package:zeros.txt"
    dk_fixtures: str = "package:sieve_maxima.csv"
    precision: int = 30
    threads: int = 1

    def validate(self) -> "RunConfig":
        if not 6 <= self.precision <= 30:
            raise PreconditionError(f"precision must lie in [6, 30], got {self.precision}")
        if self.threads < 1:
            raise PreconditionError("threads must be at least 1")
        for name in ("epsilon_csv", "zerodensity_csv", "dk_fixtures"):
            path = getattr(self, name)
            if not path.startswith("package:") and not Path(path).is_file():
                raise DataError(f"{name}: no such file {path}")
        return self

    def describe(self) -> list[str]:
        lines = [f"{k}={v}" for k, v in self.constants.describe()]
        lines += [f"{name}={getattr(self, name)}" for name in ("epsilon_csv", "zerodensity_csv", "dk_fixtures", "precision")]
        return lines


def parse_config_text(text: str, where: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise DataError(f"{where}:{lineno}: expected key=value")
        values[key.strip()] = value.strip()
    return values


def build_config(path: str | None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Defaults, then the config file, then ``overrides``."""
    values: dict[str, str] = {}
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise DataError(f"cannot read config {path}: {exc.strerror}") from None
        values.update(parse_config_text(text, path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    consts = {k: v for k, v in values.items() if k in CONSTANT_KEYS}
    rest = {k: v for k, v in values.items() if k not in CONSTANT_KEYS}
    cfg = RunConfig(constants=DEFAULT_CONSTANTS.with_overrides(consts))
    known = {f.name for f in fields(RunConfig)} - {"constants"}
    for key, value in rest.items():
        if key not in known:
            raise DataError(f"unknown configuration key {key!r}")
        if key in ("precision", "threads"):
            try:
                value = int(value)
            except ValueError:
                raise DataError(f"{key} must be an integer, got {value!r}") from None
        cfg = replace(cfg, **{key: value})
    return cfg.validate()


# ---------------------------------------------------------------------------
# commands


def _providers(cfg: RunConfig, live: bool = True):
    from .assemble import DkProvider, Providers
    from .verifier import dk_scan

    def live_window(a, b):
        return dk_scan(a, b, range(6))[0]

    dk = DkProvider(load_sieve_maxima(cfg.dk_fixtures), live=live_window if live else None)
    return Providers(load_epsilon_table(cfg.epsilon_csv), load_zero_density(cfg.zerodensity_csv), dk, cfg.constants)


def cmd_bound(args, cfg: RunConfig, out) -> int:
    from .assemble import BoundRequest, assemble

    result = assemble(BoundRequest(args.k, args.x0, args.x1), _providers(cfg, live=not args.no_live_sieve))
    print(result.summary(args.digits), file=out)
    for line in result.trace_lines(args.digits):
        print(line, file=out)
    return EXIT_OK


def cmd_epsilon(args, cfg: RunConfig, out) -> int:
    from .inputs import log_scale
    from .psi_epsilon import pt_optimize, small_range_epsilon

    b, label = log_scale(args.b)
    if args.method == "table":
        eps, row = load_epsilon_table(cfg.epsilon_csv).epsilon_at(b)
        print(present(eps, 6), file=out)
        print(f"# {row.method} row {row.b_label or row.b}..{row.b_next_label or row.b_next} of {cfg.epsilon_csv}", file=out)
    elif args.method == "small":
        eps = small_range_epsilon(eval_conservative(args.b).interval)
        print(present(eps, 6), file=out)
        print("# small-range bound from theta(x) < x below 1e19 and the bias constant 0.94", file=out)
    else:
        b2 = args.b2 if args.b2 is not None else str(b + 500)
        zd = load_zero_density(cfg.zerodensity_csv)
        eps, params = pt_optimize(b, log_scale(b2)[0], zd, cfg.constants.H, cfg.constants.R)
        print(present(eps, 6), file=out)
        print(f"# PT on [{label}, {b2}] with {params.describe()}", file=out)
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig, out) -> int:
    from .verifier import MAX_SEGMENT, SieveScan, ThetaAccumulator, emit_dk_tsv

    limit = int(float(args.limit))
    segment = int(float(args.segment))
    if not 1 <= segment <= MAX_SEGMENT:
        raise PreconditionError(f"segment length must lie in [1, {MAX_SEGMENT}]")
    if limit < 2:
        raise PreconditionError("limit must be at least 2")
    acc = None
    if args.checkpoint and Path(args.checkpoint).exists() and args.resume:
        acc = ThetaAccumulator.load(args.checkpoint)
    start = acc.last_prime if acc else 1
    if start >= limit:
        raise PreconditionError(f"checkpoint at {start} is already past the limit {limit}")
    windows = _verify_windows(cfg, start, limit)
    scan = SieveScan(
        limit,
        windows=windows if args.emit_dk else (),
        bias_from=max(599, start) if limit >= 599 else None,
        segment_len=segment,
        accumulator=acc,
    ).run()
    if args.checkpoint:
        scan.acc_at_limit.save(args.checkpoint)
    theta = scan.acc_at_limit.theta_interval
    low = ConservativeReal.from_interval(theta, LOWER)
    high = ConservativeReal.from_interval(theta, UPPER)
    print(f"# primes up to {limit}: {scan.acc_at_limit.n}", file=out)
    print(f"# theta({limit}) in [{present(low, 12)}, {present(high, 12)}]", file=out)
    if scan.bias is not None:
        status = "passed" if scan.bias.passed else f"FAILED at p = {scan.bias.first_violation}"
        print(f"# bias check theta(p) < p - 0.05 sqrt(p) on [{scan.bias_from}, {limit}]: {status}", file=out)
    if args.emit_dk:
        tsv = emit_dk_tsv(scan.windows, header=[f"sieve maxima up to {limit}", f"segment {segment}"])
        if args.out:
            Path(args.out).write_text(tsv)
        else:
            out.write(tsv)
    if scan.bias is not None and not scan.bias.passed:
        return EXIT_DATA
    return EXIT_OK


def _verify_windows(cfg: RunConfig, start: int, limit: int) -> list[tuple[int, int]]:
    """Published row boundaries inside [start, limit], closed off at the limit."""
    cuts = sorted({r.a for r in load_sieve_maxima(cfg.dk_fixtures)} | {r.b for r in load_sieve_maxima(cfg.dk_fixtures)})
    cuts = [c for c in cuts if start <= c < limit] + [limit]
    if start not in cuts:
        cuts.insert(0, start)
    return [(a, b) for a, b in zip(cuts, cuts[1:]) if a < b]


def cmd_tables(args, cfg: RunConfig, out) -> int:
    from .tables import TableContext, emit_table, live_dk_scanner

    ctx = TableContext(
        load_epsilon_table(cfg.epsilon_csv),
        load_zero_density(cfg.zerodensity_csv),
        load_sieve_maxima(cfg.dk_fixtures),
        cfg.constants,
        live_dk=live_dk_scanner() if args.id == "dk" else None,
    )
    text = emit_table(args.id, args.grid, ctx, args.digits)
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_report(args, cfg: RunConfig, out) -> int:
    from .report import write_report
    from .tables import TableContext, live_dk_scanner

    ctx = TableContext(
        load_epsilon_table(cfg.epsilon_csv),
        load_zero_density(cfg.zerodensity_csv),
        load_sieve_maxima(cfg.dk_fixtures),
        cfg.constants,
        live_dk=live_dk_scanner() if args.include_dk else None,
    )
    for path in write_report(args.out, ctx, args.digits, include_dk=args.include_dk):
        print(path, file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key=value configuration file (default: ${CONFIG_ENV})")
    common.add_argument("--digits", type=int, default=5, help="significant digits printed (default 5)")
    common.add_argument("--precision", type=int, help="working precision in decimal digits, 6..30")

    parser = argparse.ArgumentParser(prog="thetabounds", description="Explicit bounds for the Chebyshev theta function.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="m_k and M_k for thresholds X0, X1")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x0", required=True, help="lower-bound threshold, e.g. 19035709163 or e^35")
    p.add_argument("--x1", required=True, help="upper-bound threshold")
    p.add_argument("--no-live-sieve", action="store_true", help="use published sieve maxima only")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("epsilon", parents=[common], help="epsilon with |psi(x) - x| <= epsilon x for x >= e^b")
    p.add_argument("--b", required=True)
    p.add_argument("--b2", help="upper end for --method pt (default b + 500)")
    p.add_argument("--method", choices=("table", "small", "pt"), default="table")
    p.set_defaults(func=cmd_epsilon)

    p = sub.add_parser("verify", parents=[common], help="sieve primes, check the bias, emit sieve maxima")
    p.add_argument("--limit", required=True)
    p.add_argument("--segment", default="1e8")
    p.add_argument("--emit-dk", action="store_true", help="write the D_k table for the published windows")
    p.add_argument("--out", help="file for the D_k table (default: standard output)")
    p.add_argument("--checkpoint", help="accumulator file written at the end")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint if it exists")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tables", parents=[common], help="emit one table as TSV")
    p.add_argument("--id", required=True, choices=("epsilon", "ak", "bk", "script_bk", "ck", "dk", "theta_eps"))
    p.add_argument("--grid", help="grid such as 20..30 or 20,log(5e10),25 (dk: a:b windows)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("report", parents=[common], help="all tables plus PNG figures")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--include-dk", action="store_true", help="also sieve to 1e9 for the D_k table")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args.config, {"precision": None if args.precision is None else str(args.precision)})
        set_working_digits(cfg.precision)
        return args.func(args, cfg, out)
    except PreconditionError as exc:
        print(f"thetabounds: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except DataError as exc:
        print(f"thetabounds: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BoundsError as exc:
        print(f"thetabounds: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
