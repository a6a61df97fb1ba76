"""Write every table as TSV plus a few PNG figures into one directory."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .envelopes import ck_bound, middle_range, regime_for  # noqa: E402
from .numerics import hi, mid  # noqa: E402
from .tables import DEFAULT_GRIDS, TABLE_IDS, TableContext, emit_table  # noqa: E402


def write_report(out_dir, ctx: TableContext, digits: int = 5, include_dk: bool = False) -> list[Path]:
    """Render the tables and figures; returns the paths written.

    The ``dk`` table needs a sieve pass up to 1e9 and is skipped unless
    ``include_dk`` is set.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for table_id in TABLE_IDS:
        if table_id == "dk" and not include_dk:
            continue
        path = out / f"{table_id}.tsv"
        path.write_text(emit_table(table_id, DEFAULT_GRIDS[table_id], ctx, digits))
        written.append(path)
    for name, draw in (("epsilon.png", _plot_epsilon), ("middle_range.png", _plot_bk), ("bias_lower.png", _plot_ck)):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        draw(ax, ctx)
        fig.tight_layout()
        path = out / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def _plot_epsilon(ax, ctx: TableContext) -> None:
    by_method: dict[str, tuple[list, list]] = {}
    for row in ctx.table:
        xs, ys = by_method.setdefault(row.method, ([], []))
        xs += [float(row.b), float(row.b_next)]
        ys += [float(row.epsilon)] * 2
    for method, (xs, ys) in sorted(by_method.items()):
        ax.plot(xs, ys, ".", markersize=3, label=method.lower())
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("b = log x")
    ax.set_ylabel("epsilon(b)")
    ax.set_title("|psi(x) - x| <= epsilon x for x >= e^b")
    ax.legend(fontsize=8)


def _plot_bk(ax, ctx: TableContext) -> None:
    mr = middle_range(ctx.table)
    starts = [float(r.b) for r in ctx.table]
    for k in (1, 2, 3, 4, 5):
        ax.plot(starts, [float(hi(mr.bk(i, k).interval)) for i in range(len(ctx.table))], label=f"k={k}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("row start b")
    ax.set_ylabel("B_k(b, b')")
    ax.set_title("Row-wise middle-range constants")
    ax.legend(fontsize=8)


def _plot_ck(ax, ctx: TableContext) -> None:
    bs = list(range(20, 44))
    for k in (1, 2, 3, 4, 5):
        vals = [float(ck_bound(k, b, regime_for(b), ctx.constants.c0).upper) for b in bs]
        ax.plot(bs, vals, marker="o", markersize=3, label=f"k={k}")
    ax.axvline(float(mid(ctx.constants.J)), color="grey", linestyle=":", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("b = log x")
    ax.set_ylabel("C_(b,k)")
    ax.set_title("Lower-side constants from the Chebyshev bias")
    ax.legend(fontsize=8)
