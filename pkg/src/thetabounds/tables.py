"""Tab-separated reproductions of the bound tables.

Every table starts with ``#`` metadata lines naming the constants and the
precision in force, followed by one header row and one row per grid point.
A grid is a comma-separated list whose items are single log-scale points
(``43``, ``log(5e10)``) or inclusive ranges ``start..stop[:step]``.  The
``dk`` table takes windows ``a:b`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Sequence

from .envelopes import ak_min_sigma, ck_bound, k0_bounds, middle_range, regime_for, script_bk
from .errors import DataError, PreconditionError
from .inputs import (
    DEFAULT_CONSTANTS,
    EpsilonTable,
    GlobalConstants,
    SieveMaximumRow,
    ZeroDensityRow,
)
from .numerics import eval_conservative, iv, mid, mp, present, working_digits

TABLE_IDS = ("epsilon", "ak", "bk", "script_bk", "ck", "dk", "theta_eps")
KS = range(1, 6)

DEFAULT_GRIDS = {
    "epsilon": "20..30,35,40,43,45,50,100,500,1000,2000,2500,3000,5000,10000",
    "ak": "1000,2000,3000,5000,10000",
    "bk": "20..30",
    "script_bk": "20,25,30,35,40,43,45,50,100,500,1000,2000",
    "ck": "20..24,log(5e10),25..31,log(3.2e13),32..43",
    "dk": "1:1e5,1e5:5e5,5e5:1e6,1e6:5e6,5e6:1e7,1e7:5e7,5e7:1e8,1e8:1e9",
    "theta_eps": "20,25,30,35,40,log(1e19),45,50,60,70,80,90,100,200,300,400,500",
}


@dataclass(frozen=True)
class GridPoint:
    label: str
    value: object  # an interval for log-scale points


def parse_grid(text: str) -> list[GridPoint]:
    """Expand a grid specification into labelled log-scale points."""
    points: list[GridPoint] = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if ".." in item:
            span, _, step_text = item.partition(":")
            start_text, stop_text = span.split("..", 1)
            try:
                start, stop = Decimal(start_text), Decimal(stop_text)
                step = Decimal(step_text or "1")
            except ArithmeticError:
                raise DataError(f"bad grid range {item!r}") from None
            if step <= 0:
                raise DataError(f"grid step must be positive in {item!r}")
            n = int((stop - start) / step)
            for i in range(n + 1):
                v = start + i * step
                points.append(GridPoint(_plain(v), _interval(str(v))))
        else:
            points.append(GridPoint(item, _interval(item)))
    return points


def parse_windows(text: str) -> list[tuple[int, int]]:
    windows = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        try:
            a, b = (int(Decimal(p)) for p in item.split(":"))
        except (ValueError, ArithmeticError):
            raise DataError(f"bad window {item!r}; expected a:b") from None
        if not 1 <= a < b:
            raise DataError(f"window {item!r} needs 1 <= a < b")
        windows.append((a, b))
    return windows


def _plain(v: Decimal) -> str:
    return format(v.normalize(), "f")


def _interval(text: str):
    try:
        Decimal(text)
    except ArithmeticError:
        try:
            return eval_conservative(text).interval
        except Exception as exc:
            raise DataError(f"cannot parse grid point {text!r}: {exc}") from None
    return iv.mpf(text)


def header_lines(table_id: str, constants: GlobalConstants, digits: int, extra: Sequence[str] = ()) -> list[str]:
    lines = [
        f"# table\t{table_id}",
        f"# H\t{constants.H}",
        f"# R\t{constants.R}",
        f"# precision\t{working_digits()} working digits, {digits} printed",
    ]
    lines += [f"# {e}" for e in extra]
    return lines


@dataclass(frozen=True)
class TableContext:
    table: EpsilonTable
    zero_density: tuple[ZeroDensityRow, ...]
    sieve_rows: tuple[SieveMaximumRow, ...] = ()
    constants: GlobalConstants = DEFAULT_CONSTANTS
    live_dk: Callable | None = None  # windows -> list of DkResult
    live_limit: int = 10**9


def emit_table(table_id: str, grid: str | None, ctx: TableContext, digits: int = 5) -> str:
    """Render one table as TSV text.  An empty grid gives the header lines only."""
    if table_id not in TABLE_IDS:
        raise PreconditionError(f"unknown table {table_id!r}; choose from {', '.join(TABLE_IDS)}")
    grid = DEFAULT_GRIDS[table_id] if grid is None else grid
    render = _RENDERERS[table_id]
    columns, rows, extra = render(grid, ctx, digits)
    out = header_lines(table_id, ctx.constants, digits, extra)
    if rows:
        out.append("\t".join(columns))
        out += ["\t".join(r) for r in rows]
    return "\n".join(out) + "\n"


def _epsilon_rows(grid, ctx, digits):
    rows = []
    for p in parse_grid(grid):
        eps, row = ctx.table.epsilon_at(mid(p.value))
        src = f"{row.b_label or mp.nstr(row.b, 10)}..{row.b_next_label or mp.nstr(row.b_next, 10)}"
        rows.append([p.label, present(eps, max(digits, 6)), row.method, src])
    return ["b", "epsilon", "method", "row"], rows, [f"epsilon source\t{ctx.table.source}"]


def _ak_rows(grid, ctx, digits):
    rows = []
    for p in parse_grid(grid):
        vals, sigma = [], None
        for k in KS:
            v, sigma = ak_min_sigma(k, p.value, ctx.zero_density, ctx.table, ctx.constants.R)
            vals.append(present(v, digits))
        rows.append([p.label] + vals + [str(sigma)])
    return ["b"] + [f"A{k}" for k in KS] + ["sigma"], rows, []


def _bk_rows(grid, ctx, digits):
    mr = middle_range(ctx.table)
    rows = []
    for p in parse_grid(grid):
        i = ctx.table.index_of(mid(p.value))
        row = ctx.table[i]
        nxt = row.b_next_label or mp.nstr(row.b_next, 10)
        rows.append([p.label, nxt] + [present(mr.bk(i, k), digits) for k in KS])
    return ["b", "b_next"] + [f"B{k}" for k in KS], rows, []


def _script_bk_rows(grid, ctx, digits):
    rows = []
    for p in parse_grid(grid):
        b = mid(p.value)
        rows.append([p.label] + [present(script_bk(k, b, ctx.table), digits) for k in KS])
    return ["b0"] + [f"script_B{k}" for k in KS], rows, [f"rows up to e^{mp.nstr(ctx.table.end, 8)}"]


def _ck_rows(grid, ctx, digits):
    rows = []
    for p in parse_grid(grid):
        regime = regime_for(p.value)
        vals = [present(ck_bound(k, p.value, regime, ctx.constants.c0), digits) for k in KS]
        rows.append([p.label] + vals + [f"{float(regime.v):g}"])
    return ["b"] + [f"C{k}" for k in KS] + ["valid_to"], rows, [f"c0\t{ctx.constants.c0}"]


def _dk_rows(grid, ctx, digits):
    windows = parse_windows(grid)
    live = [w for w in windows if w[1] <= ctx.live_limit and ctx.live_dk is not None]
    results = {(r.a, r.b): r for r in (ctx.live_dk(live) if live else [])}
    published = {(r.a, r.b): r for r in ctx.sieve_rows}
    rows = []
    for a, b in windows:
        if (a, b) in results:
            r = results[a, b]
            vals = [present(r.at_argmax(k), max(digits, 6)) for k in range(6)]
            rows.append([str(a), str(b)] + vals + [str(r.argmax[k]) for k in range(6)] + ["sieve"])
        elif (a, b) in published:
            r = published[a, b]
            rows.append([str(a), str(b)] + [str(r.D(k)) for k in range(6)] + ["-"] * 6 + ["published"])
        else:
            raise PreconditionError(f"window {a}:{b} is beyond the live sieve limit and not published")
    columns = ["a", "b"] + [f"D{k}" for k in range(6)] + [f"argmax{k}" for k in range(6)] + ["source"]
    return columns, rows, [f"live sieve limit\t{ctx.live_limit}"]


def _theta_eps_rows(grid, ctx, digits):
    rows = []
    for p in parse_grid(grid):
        m0, M0 = k0_bounds(p.value, p.value, ctx.table, ctx.constants.c0)
        rows.append([p.label, present(M0, digits), present(m0, digits)])
    return ["log_X0", "M0", "m0"], rows, ["X0 = X1"]


_RENDERERS = {
    "epsilon": _epsilon_rows,
    "ak": _ak_rows,
    "bk": _bk_rows,
    "script_bk": _script_bk_rows,
    "ck": _ck_rows,
    "dk": _dk_rows,
    "theta_eps": _theta_eps_rows,
}


def live_dk_scanner(segment_len: int = 10**8):
    """A ``live_dk`` callable running one shared sieve pass over all windows."""
    from .verifier import SieveScan

    def scan(windows):
        limit = max(b for _, b in windows)
        return SieveScan(limit, windows=windows, segment_len=segment_len).run().windows

    return scan


def table_row_values(tsv: str) -> list[list[str]]:
    """Data rows of an emitted table, header row dropped."""
    lines = [l for l in tsv.splitlines() if l and not l.startswith("#")]
    return [l.split("\t") for l in lines[1:]]
