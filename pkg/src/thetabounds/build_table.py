"""Assemble the default epsilon table shipped as ``data/epsilon_default.csv``.

Layout, by log-scale range:

* [20, 45): unit rows from the closed small-range formula, with an extra
  break at log(1e19) where the formula stops; the [44, 45) row reuses the
  published value for [40, 45].
* [45, 2275): published rows.
* [2275, 2425): 25-wide rows whose epsilon is recovered from printed B_k values.
* [2425, 2500): 25-wide rows bounded through the printed running maxima at 2400.
* [2500, 3000): 25-wide rows, each the smaller of the published [2500, 3000]
  value and a fresh truncated-Perron bound for the row.
* [3000, 26000): published rows.
"""

from __future__ import annotations

import csv
import logging
from decimal import Decimal
from pathlib import Path

from .gap import gap_constants
from .inputs import (
    EpsilonRow,
    EpsilonTable,
    _data_lines,
    _read_text,
    load_epsilon_table,
    log_scale,
    load_zero_density,
)
from .numerics import ConservativeReal, UPPER, iv, mp, present, to_iv
from .psi_epsilon import pt_optimize, small_range_epsilon

log = logging.getLogger(__name__)

STEP = 25
DIGITS = 6


def _last_digit(text: str) -> Decimal:
    """One unit in the last printed digit of a decimal string."""
    return Decimal(1).scaleb(Decimal(text).as_tuple().exponent)


def _ceil_text(value: ConservativeReal) -> str:
    return present(value.with_direction(UPPER), DIGITS)


def _row(b, b_next, eps: str, method: str) -> EpsilonRow:
    return EpsilonRow(_mid(b), _mid(b_next), eps, method, _label(b), _label(b_next))


def _label(x) -> str:
    return x if isinstance(x, str) else str(x)


def _mid(x):
    if isinstance(x, str):
        return log_scale(x)[0]
    return mp.mpf(x)


def small_range_rows(x1_label="log(1e19)", published: EpsilonTable | None = None) -> list[EpsilonRow]:
    rows = [_row(b, b + 1, _ceil_text(small_range_epsilon(b)), "SMALL_RANGE") for b in range(20, 43)]
    rows.append(_row(43, x1_label, _ceil_text(small_range_epsilon(43)), "SMALL_RANGE"))
    rows.append(_row(x1_label, 44, _ceil_text(small_range_epsilon(iv.log(10**19))), "SMALL_RANGE"))
    tail = published[published.index_of(40)].epsilon if published else "1.93378e-8"
    rows.append(_row(44, 45, tail, "TABLE"))
    return rows


def _printed_rows(path: str) -> list[list[str]]:
    text, where = _read_text(path)
    lines = [cells for _, cells in ((n, [c.strip() for c in l.split(",")]) for n, l in _data_lines(text))]
    return lines[1:]


def recovered_rows(published: EpsilonTable, path="package:middle_range_printed.csv") -> list[EpsilonRow]:
    """epsilon <= (B_k + last digit - a1 t^k e^(-t/2) - a2 t^k e^(-2t/3)) / t^k at t = b_next.

    Any row B_k(b, b_next) bounds g(b_next), which contains epsilon * b_next^k;
    the smallest of the five resulting bounds is kept.
    """
    out = []
    for cells in _printed_rows(path):
        b, b_next, printed = int(cells[0]), int(cells[1]), cells[2:]
        if b >= 2425:
            continue
        gap = gap_constants(b, published)
        t = iv.mpf(b_next)
        best = None
        for k, text in enumerate(printed, start=1):
            ceiling = to_iv(text) + to_iv(str(_last_digit(text)))
            other = t**k * (gap.a1.interval * iv.exp(-t / 2) + gap.a2.interval * iv.exp(-2 * t / 3))
            cand = ConservativeReal.from_interval((ceiling - other) / t**k, UPPER)
            if best is None or cand.upper < best.upper:
                best = cand
        out.append(_row(b, b_next, _ceil_text(best), "RECOVERED"))
    return out


def suffix_rows(path="package:suffix_max_printed.csv", start=2425, stop=2500) -> list[EpsilonRow]:
    """Rows bounded by running maxima: epsilon <= (script B_k(b0) + last digit) / s^k on [e^s, ...).

    Whatever the underlying partition, the row containing x has epsilon * (log x)^k
    below the running maximum, so (log x)^k >= s^k gives the bound.
    """
    printed = _printed_rows(path)[0]
    b0, values = int(printed[0]), printed[1:]
    out = []
    for s in range(start, stop, STEP):
        if s < b0:
            raise ValueError("suffix rows must start above the running-maximum origin")
        best = None
        for k, text in enumerate(values, start=1):
            cand = ConservativeReal.from_interval((to_iv(text) + to_iv(str(_last_digit(text)))) / iv.mpf(s) ** k, UPPER)
            if best is None or cand.upper < best.upper:
                best = cand
        out.append(_row(s, s + STEP, _ceil_text(best), "RECOVERED"))
    return out


def pt_rows(published: EpsilonTable, start=2500, stop=3000, zd_path="package:zerodensity.csv") -> list[EpsilonRow]:
    zd = load_zero_density(zd_path)
    cap = published[published.index_of(start)].epsilon
    out = []
    for b in range(start, stop, STEP):
        value, params = pt_optimize(b, b + STEP, zd)
        text = _ceil_text(value)
        if Decimal(text) < Decimal(cap):
            log.info("row %s: PT %s (%s)", b, text, params.describe())
            out.append(_row(b, b + STEP, text, "PT"))
        else:
            out.append(_row(b, b + STEP, cap, "TABLE"))
    return out


def build_default_table(published_path="package:epsilon_published.csv") -> EpsilonTable:
    published = load_epsilon_table(published_path)
    rows = small_range_rows(published=published)
    for r in published:
        if 45 <= r.b < 2000:
            rows.append(r)
    two_k = published[published.index_of(2000)]
    rows.append(_row(2000, 2275, two_k.epsilon, "TABLE"))
    rows += recovered_rows(published)
    rows += suffix_rows()
    rows += pt_rows(published)
    rows += [r for r in published if r.b >= 3000]
    return EpsilonTable(tuple(rows), "built")


HEADER = (
    "# |psi(x)-x| <= epsilon*x on [e^b, e^b_next]\n"
    "# method: SMALL_RANGE closed form below log(1e19); TABLE published value; "
    "RECOVERED bounded through printed B_k values; PT truncated Perron bound\n"
)


def write_default_table(path: Path) -> EpsilonTable:
    table = build_default_table()
    Path(path).write_text(HEADER + table.to_csv())
    return table


if __name__ == "__main__":
    import sys

    logging.basicConfig(level=logging.INFO)
    write_default_table(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "data" / "epsilon_default.csv")
