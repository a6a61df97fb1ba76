"""Combine the range-specific envelopes into m_k, M_k with

    x (1 - m_k / (log x)^k) <= theta(x)  for x >= X0,
    theta(x) <= x (1 + M_k / (log x)^k)  for x >= X1.

Thresholds fall into four regimes by u = log X:

    1. u >= K            large-range envelope only
    2. J <= u < K        middle-range rows from u, then the large range
    3. J0 <= u < J       middle-range rows from J; the lower side adds the
                         bias-based C envelope from floor(u)
    4. u < J0            as 3, plus sieve maxima on [X0, e^J0] and the C
                         envelope from floor(J0)

Upper bounds below J need no small-range term because theta(x) < x there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Sequence

from .envelopes import ak_min_sigma, k0_bounds, middle_range, small_range_lower
from .errors import CoverageError, PreconditionError, RangeError
from .inputs import (
    DEFAULT_CONSTANTS,
    EpsilonTable,
    GlobalConstants,
    SieveMaximumRow,
    ZeroDensityRow,
)
from .numerics import ConservativeReal, UPPER, cmax, eval_conservative, hi, iv, lo, mid, mp, present

AK_START = 1000  # the large-range envelope is only available from e^1000


# ---------------------------------------------------------------------------
# requests and results


def parse_threshold(text) -> tuple[object, str]:
    """(log X as an interval, label) for inputs like 19035709163, 1e19, e^35 or exp(35)."""
    if not isinstance(text, str):
        text = str(text)
    t = text.strip().replace(" ", "").replace("_", "")
    if t.startswith("e^"):
        u = eval_conservative(t[2:]).interval
        return u, text
    if t.startswith("exp(") and t.endswith(")"):
        return eval_conservative(t[4:-1]).interval, text
    x = eval_conservative(t).interval
    if lo(x) < 1:
        raise PreconditionError(f"threshold {text} must be at least 1")
    return iv.log(x), text


@dataclass(frozen=True)
class BoundRequest:
    k: int
    X0: str
    X1: str

    def __post_init__(self):
        if self.k not in range(6):
            raise PreconditionError(f"k must be in 0..5, got {self.k}")

    @property
    def u0(self):
        return parse_threshold(self.X0)[0]

    @property
    def u1(self):
        return parse_threshold(self.X1)[0]


@dataclass(frozen=True)
class TraceItem:
    name: str
    side: str  # "lower", "upper" or "both"
    value: ConservativeReal
    source: str


@dataclass
class BoundResult:
    request: BoundRequest
    m_k: ConservativeReal
    M_k: ConservativeReal
    case_id: tuple[int, int]  # (case for X0, case for X1)
    ell_choice: tuple[int | None, int | None]  # cutoff row index per side
    trace: list[TraceItem] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def summary(self, digits: int = 5) -> str:
        k = self.request.k
        return f"m_{k}={present(self.m_k, digits)} M_{k}={present(self.M_k, digits)}"

    def trace_lines(self, digits: int = 5) -> list[str]:
        lines = [f"case X0={self.case_id[0]} X1={self.case_id[1]} ell={self.ell_choice}"]
        for t in self.trace:
            lines.append(f"{t.side}\t{t.name}\t{present(t.value, digits)}\t{t.source}")
        lines += [f"note\t{n}" for n in self.notes]
        return lines


# ---------------------------------------------------------------------------
# sieve maxima


class DkProvider:
    """D_k(X0, end) from published rows, with live sieve windows where no row starts at X0.

    Published values are widened by one unit in their last printed digit.
    Below ``live_limit`` a window from X0 to the next published boundary is
    computed with ``live`` (a callable (a, b) -> DkResult); above it, the
    published row containing X0 is used as a (wider) stand-in.
    """

    def __init__(
        self,
        rows: Sequence[SieveMaximumRow],
        live: Callable | None = None,
        live_limit: int = 10**9,
    ):
        self.rows = sorted(rows, key=lambda r: (r.a, r.b))
        self.live = live
        self.live_limit = live_limit

    @staticmethod
    def _widen(d: Decimal) -> ConservativeReal:
        unit = Decimal(1).scaleb(d.as_tuple().exponent)
        return ConservativeReal.from_interval(iv.mpf([str(d), str(d + unit)]), UPPER)

    def D(self, k: int, X0: int, end: int) -> tuple[ConservativeReal, list[str]]:
        pos = int(X0)
        pieces: list[tuple[ConservativeReal, str]] = []
        while pos < end:
            starting = [r for r in self.rows if r.a == pos]
            if starting:
                row = min(starting, key=lambda r: r.b)
                pieces.append((self._widen(row.D(k)), f"published D_{k}({row.a},{row.b})"))
                pos = row.b
                continue
            nxt = min((r.a for r in self.rows if r.a > pos), default=None)
            if pos < self.live_limit and nxt is not None and self.live is not None:
                res = self.live(pos, nxt)
                pieces.append((res.value(k), f"sieve D_{k}({pos},{nxt}) at p={res.argmax[k]}"))
                pos = nxt
                continue
            enclosing = [r for r in self.rows if r.a <= pos < r.b]
            if not enclosing:
                raise CoverageError(f"no sieve data covers x = {pos}")
            row = max(enclosing, key=lambda r: r.a)
            pieces.append((self._widen(row.D(k)), f"published D_{k}({row.a},{row.b}) containing {pos}"))
            pos = row.b
        if not pieces:
            raise CoverageError("empty sieve range")
        best = max(pieces, key=lambda p: p[0].upper)
        return cmax([p[0] for p in pieces]), [best[1]]


# ---------------------------------------------------------------------------
# the middle/large range combination


@dataclass(frozen=True)
class Providers:
    table: EpsilonTable
    zero_density: tuple[ZeroDensityRow, ...]
    dk: DkProvider | None = None
    constants: GlobalConstants = DEFAULT_CONSTANTS


def choose_ell(k: int, start_row: int, table: EpsilonTable, zero_density) -> tuple[int, ConservativeReal, dict]:
    """Cutoff row l >= start_row minimising max(A_k(b_{l+1}), max_{start <= i <= l} B_{i,k}).

    The running B maximum only grows with l while A_k(b_{l+1}) shrinks, so
    the scan stops at the first l where A_k(b_{l+1}) is already below the
    running maximum.  Returns l, the value, and details for the trace.
    """
    mr = middle_range(table)
    best = None
    run = None
    run_row = start_row
    for ell in range(start_row, len(table)):
        b_ell = mr.bk(ell, k)
        if run is None or b_ell.upper > run.upper:
            run, run_row = b_ell, ell
        b_next = table[ell].b_next
        if b_next < AK_START:
            continue
        try:
            a_val, sigma = ak_min_sigma(k, table[ell].b_next_interval, zero_density, table)
        except RangeError:
            continue
        value = a_val if a_val.upper > run.upper else run
        if best is None or value.upper < best[1].upper:
            best = (ell, value, {"A": a_val, "sigma": sigma, "B": run, "B_row": run_row})
        if a_val.upper <= run.upper:
            break
    if best is None:
        raise CoverageError("the epsilon table does not reach the large-range envelope")
    return best


def _case(u, c: GlobalConstants) -> int:
    if lo(u) >= c.K:
        return 1
    if lo(u) >= mid(c.J) - mp.mpf(10) ** -20:
        return 2
    if lo(u) >= mid(c.J0):
        return 3
    return 4


def _start_row(table: EpsilonTable, u, c: GlobalConstants) -> int:
    """Row covering max(u, J): below J the small-range envelopes take over."""
    point = max(mid(u), mid(c.J))
    return table.floor_index(point + mp.mpf(10) ** -25)


def _large_only(k, u, providers: Providers, side: str) -> tuple[ConservativeReal, list[TraceItem]]:
    a_val, sigma = ak_min_sigma(k, u, providers.zero_density, providers.table)
    return a_val, [TraceItem(f"A_{k}({mp.nstr(mid(u), 8)})", side, a_val, f"large range, sigma={sigma}")]


def _middle(k, u, providers: Providers, side: str):
    table = providers.table
    start = _start_row(table, u, providers.constants)
    ell, value, info = choose_ell(k, start, table, providers.zero_density)
    b_start = table[start].b_label or mp.nstr(table[start].b, 8)
    b_row = table[info["B_row"]]
    b_end = table[ell].b_next_label or mp.nstr(table[ell].b_next, 8)
    items = [
        TraceItem(
            f"max B_{k} over rows {b_start}..{table[ell].b_label} (at row {b_row.b_label or mp.nstr(b_row.b, 8)})",
            side,
            info["B"],
            "middle range",
        ),
        TraceItem(f"A_{k}({b_end})", side, info["A"], f"large range, sigma={info['sigma']}"),
    ]
    return value, items, ell


def _lower_small(k, u0, case, providers: Providers):
    c = providers.constants
    items, values = [], []
    if case == 3:
        b = math.floor(lo(u0))
    else:
        b = math.floor(mid(c.J0))
    cval, pieces = small_range_lower(k, b, c0=c.c0)
    for name, v in pieces:
        items.append(TraceItem(name, "lower", v, "bias envelope"))
    values.append(cval)
    notes = []
    if case == 4:
        if providers.dk is None:
            raise CoverageError("thresholds below e^J0 need sieve maxima")
        X0 = math.ceil(mp.exp(lo(u0)) - mp.mpf(10) ** -9)
        X0 = max(X0, 1)
        d, src = providers.dk.D(k, X0, c.sieve_limit)
        items.append(TraceItem(f"D_{k}({X0},{c.sieve_limit})", "lower", d, "; ".join(src)))
        values.append(d)
        if hi(u0) < k + 1:
            limit = (k + 1) ** (k + 1)
            if d.upper >= limit:
                raise PreconditionError(
                    f"X0 < e^{k + 1} needs D_{k} < {limit} to carry the bound between primes"
                )
            notes.append(f"X0 < e^{k + 1}: accepted because D_{k} < (k+1)^(k+1) = {limit}")
    return cmax(values), items, notes


def assemble(req: BoundRequest, providers: Providers) -> BoundResult:
    c = providers.constants
    u0, u1 = req.u0, req.u1
    k = req.k
    if k == 0:
        return _assemble_k0(req, providers)
    case0, case1 = _case(u0, c), _case(u1, c)
    trace: list[TraceItem] = []
    notes: list[str] = []

    if case1 == 1:
        M, items = _large_only(k, u1, providers, "upper")
        ell1 = None
    else:
        M, items, ell1 = _middle(k, u1, providers, "upper")
        if case1 >= 3:
            notes.append("upper bound below e^J uses theta(x) < x for x <= 1e19")
    trace += items

    if case0 == 1:
        m, items = _large_only(k, u0, providers, "lower")
        ell0 = None
        trace += items
    else:
        m, items, ell0 = _middle(k, u0, providers, "lower")
        trace += items
        if case0 >= 3:
            small, items, more = _lower_small(k, u0, case0, providers)
            trace += items
            notes += more
            m = cmax(m, small)
    return BoundResult(req, m.with_direction(UPPER), M.with_direction(UPPER), (case0, case1), (ell0, ell1), trace, notes)


def _assemble_k0(req: BoundRequest, providers: Providers) -> BoundResult:
    c = providers.constants
    table = providers.table
    u0, u1 = req.u0, req.u1
    trace, notes = [], []
    # upper side: below e^20 the table does not apply, but theta(x) < x up to 1e19
    if hi(u1) < 20:
        M0 = table.epsilon_at(mid(c.J))[0]
        trace.append(TraceItem("eps(log 1e19)", "upper", M0, "theta(x) < x for x <= 1e19, then the epsilon table"))
    else:
        _, M0 = k0_bounds(u1, u1, table, c.c0)
        if lo(u1) < mid(c.J):
            M_bias = table.epsilon_at(mid(c.J))[0]
            if M_bias.upper < M0.upper:
                notes.append(f"theta(x) < x for x <= 1e19 would also give M_0 = {present(M_bias, 6)}")
        trace.append(TraceItem(f"eps({mp.nstr(mid(u1), 8)})", "upper", M0, "epsilon table"))
    if lo(u0) >= 20:
        m0, _ = k0_bounds(u0, u0, table, c.c0)
        trace.append(TraceItem(f"m0({mp.nstr(mid(u0), 8)})", "lower", m0, "epsilon table plus psi-theta correction"))
    else:
        if providers.dk is None:
            raise CoverageError("k = 0 with X0 < e^20 needs sieve maxima")
        b = math.floor(mid(c.J0))
        tail, _ = k0_bounds(b, b, table, c.c0)
        X0 = max(1, math.ceil(mp.exp(lo(u0)) - mp.mpf(10) ** -9))
        d, src = providers.dk.D(0, X0, c.sieve_limit)
        trace.append(TraceItem(f"m0({b})", "lower", tail, "epsilon table plus psi-theta correction"))
        trace.append(TraceItem(f"D_0({X0},{c.sieve_limit})", "lower", d, "; ".join(src)))
        m0 = cmax(tail, d)
    return BoundResult(req, m0.with_direction(UPPER), M0.with_direction(UPPER), (_case(u0, c), _case(u1, c)), (None, None), trace, notes)
