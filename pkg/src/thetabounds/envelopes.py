"""Bounds of the form |theta(x) - x| <= c * x / (log x)^k on different ranges.

* ``ak_*``: the large range, from a zero-free region plus zero density.
* ``bk_*`` / ``script_bk``: the middle range, row by row from an epsilon table.
* ``ck_*``: lower bounds on the small range from the Chebyshev bias.
* ``k0_bounds``: the k = 0 case.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from decimal import Decimal
from typing import Sequence

from .errors import DomainError, PreconditionError, RangeError
from .gap import GapConstants, gap_constants
from .inputs import DEFAULT_CONSTANTS, EpsilonTable, ZeroDensityRow
from .numerics import ConservativeReal, UPPER, cmax, hi, iv, lo, mid, mp, to_iv

# ---------------------------------------------------------------------------
# large range


@dataclass(frozen=True)
class ABCConstants:
    sigma: Decimal
    x0_log: object
    A: ConservativeReal
    B: ConservativeReal
    C: ConservativeReal
    A_prime: ConservativeReal
    k_factor: ConservativeReal
    c3: ConservativeReal
    c4: ConservativeReal
    c5: ConservativeReal
    R: Decimal = DEFAULT_CONSTANTS.R


def abc_constants(
    sigma,
    x0_log,
    zd_row: ZeroDensityRow,
    eps_table: EpsilonTable | None = None,
    R=DEFAULT_CONSTANTS.R,
    gap: GapConstants | None = None,
) -> ABCConstants:
    """Constants of |theta(x) - x| / x <= A' (log x / R)^B exp(-C sqrt(log x / R)) for x >= e^x0_log.

    ``x0_log`` is a logarithm: the bound starts at e^x0_log.  A' adds the
    psi - theta gap to A, which needs a1 and a2 at x0_log; pass them as
    ``gap`` or supply the epsilon table they are derived from.
    """
    sigma = Decimal(str(sigma))
    if sigma != zd_row.sigma:
        raise DomainError(f"sigma {sigma} does not match the zero-density row {zd_row.sigma}")
    if not Decimal("0.75") <= sigma < 1:
        raise DomainError(f"sigma must lie in [0.75, 1), got {sigma}")
    L = to_iv(x0_log)
    if lo(L) < 1000:
        raise DomainError("the large-range constants need x0_log >= 1000")
    if gap is None:
        if eps_table is None:
            raise PreconditionError("abc_constants needs either gap constants or an epsilon table")
        gap = gap_constants(L, eps_table)
    s, R_ = to_iv(sigma), to_iv(R)
    u = iv.sqrt(L / R_)
    kf = 1 / (iv.exp((10 - 16 * s) / 3 * u) * u ** (5 - 2 * s))
    c3 = 2 * iv.exp(-2 * u) * L**2 * kf
    c4 = iv.exp(L * (s - 1)) * (2 * L / (iv.pi * R_) + iv.mpf("1.8642")) * kf
    c5 = iv.mpf("8.01") * to_iv(zd_row.c2) * iv.exp(-2 * u) * (L / R_) * kf
    A = iv.mpf("2.0025") * iv.mpf(2) ** (5 - 2 * s) * to_iv(zd_row.c1) + c3 + c4 + c5
    B = iv.mpf(5) / 2 - s
    C = 16 * s / 3 - iv.mpf(10) / 3
    extra = (R_ / L) ** B * iv.exp(C * u) * (
        gap.a1.interval * iv.exp(-L / 2) + gap.a2.interval * iv.exp(-2 * L / 3)
    )
    A_prime = A + extra
    cr = ConservativeReal.from_interval
    return ABCConstants(sigma, x0_log, cr(A), cr(B), cr(C), cr(A_prime), cr(kf), cr(c3), cr(c4), cr(c5), Decimal(str(R)))


def ak_threshold(k: int, constants: ABCConstants):
    """Smallest b for which A_k(b) is valid: beyond it the envelope decreases in b."""
    B, C, R = constants.B.interval, constants.C.interval, to_iv(constants.R)
    return max(hi(to_iv(constants.x0_log)), hi(iv.log(4 * R * ((B + k) / C) ** 2)))


def ak_bound(k: int, b, constants: ABCConstants, R=None) -> ConservativeReal:
    """A_k(b) = (A'/R^B) b^(B+k) exp(-C sqrt(b/R)), valid for every x >= e^b."""
    if k not in range(6):
        raise DomainError("k must be in 0..5")
    R = to_iv(constants.R if R is None else R)
    bi = to_iv(b)
    need = ak_threshold(k, constants)
    if lo(bi) < need:
        raise RangeError(f"A_{k}(b) needs b >= {mp.nstr(need, 8)}, got {mp.nstr(mid(bi), 8)}")
    B, C = constants.B.interval, constants.C.interval
    base = constants.A_prime.interval / R**B * bi**B * iv.exp(-C * iv.sqrt(bi / R))
    return ConservativeReal.from_interval(base * bi**k, UPPER)


@functools.lru_cache(maxsize=256)
def _abc_for(sigma: Decimal, x0_log: str, zd_rows: tuple, table: EpsilonTable, R: Decimal) -> ABCConstants:
    row = next(r for r in zd_rows if r.sigma == sigma)
    return abc_constants(sigma, mp.mpf(x0_log), row, table, R)


def ak_min_sigma(
    k: int,
    b,
    zd_rows: Sequence[ZeroDensityRow],
    eps_table: EpsilonTable,
    R=DEFAULT_CONSTANTS.R,
) -> tuple[ConservativeReal, Decimal]:
    """min over the zero-density rows of A_k(b), with the constants started at x0 = b.

    Rows whose validity threshold lies above b are skipped.  Returns the value
    and the sigma that achieved it.
    """
    best = None
    key = mp.nstr(mid(to_iv(b)), 30)
    for row in zd_rows:
        abc = _abc_for(row.sigma, key, tuple(zd_rows), eps_table, Decimal(str(R)))
        try:
            v = ak_bound(k, b, abc)
        except RangeError:
            continue
        if best is None or v.upper < best[0].upper:
            best = (v, row.sigma)
    if best is None:
        raise RangeError(f"no zero-density row gives a valid A_{k} at b = {key}")
    return best


# ---------------------------------------------------------------------------
# middle range

_RATES = (iv.mpf(1) / 2, iv.mpf(2) / 3)


def _g(k, t, gap: GapConstants, eps):
    """a1 t^k e^(-t/2) + a2 t^k e^(-2t/3) + eps t^k as an interval function of t."""
    tk = t**k
    return tk * (gap.a1.interval * iv.exp(-t / 2) + gap.a2.interval * iv.exp(-2 * t / 3) + eps)


def _convex_on(k: int, start) -> bool:
    """Each summand of g is convex on [start, inf) when start > (k + sqrt k)/c for both rates."""
    edge = (k + iv.sqrt(k)) / _RATES[0]  # the slower rate gives the larger edge
    return lo(to_iv(start)) > hi(edge)


def _branch_and_bound_max(f, a, b, rel_tol=mp.mpf(10) ** -12, max_boxes=20000):
    """Upper bound for max f on [a, b] by bisection with interval enclosures."""
    a, b = mp.mpf(lo(to_iv(a))), mp.mpf(hi(to_iv(b)))
    best_low = max(lo(f(iv.mpf(a))), lo(f(iv.mpf(b))))
    boxes = [(hi(f(iv.mpf([a, b]))), a, b)]
    done_upper = best_low
    steps = 0
    while boxes:
        boxes.sort(key=lambda item: item[0])
        top, s, t = boxes.pop()
        if top <= best_low * (1 + rel_tol) or steps > max_boxes:
            done_upper = max(done_upper, top, *(x[0] for x in boxes))
            break
        steps += 1
        m = (s + t) / 2
        best_low = max(best_low, lo(f(iv.mpf(m))))
        for u, v in ((s, m), (m, t)):
            boxes.append((hi(f(iv.mpf([u, v]))), u, v))
    return done_upper


def bk_bound(k: int, b, b_next, eps, gap: GapConstants) -> ConservativeReal:
    """max over t in [b, b_next] of a1 t^k e^(-t/2) + a2 t^k e^(-2t/3) + eps t^k.

    When every summand is convex on the range the maximum sits at an
    endpoint; otherwise it is bracketed by bisection.
    """
    if k not in range(1, 6):
        raise DomainError("k must be in 1..5")
    bi, bn = to_iv(b), to_iv(b_next)
    if not hi(bi) < lo(bn):
        raise PreconditionError("bk_bound needs b < b_next")
    if lo(bi) < 2 * k:
        raise PreconditionError(f"bk_bound needs b >= 2k = {2 * k}")
    e = eps.interval if isinstance(eps, ConservativeReal) else to_iv(eps)
    if _convex_on(k, bi):
        ends = (_g(k, bi, gap, e), _g(k, bn, gap, e))
        return ConservativeReal(max(lo(x) for x in ends), max(hi(x) for x in ends), UPPER)
    top = _branch_and_bound_max(lambda t: _g(k, t, gap, e), bi, bn)
    low = max(lo(_g(k, bi, gap, e)), lo(_g(k, bn, gap, e)))
    return ConservativeReal(low, top, UPPER)


def bk_tilde(k: int, b, b_next, eps, gap: GapConstants) -> ConservativeReal:
    """The weaker b^k (a1 e^(-b/2) + a2 e^(-2b/3)) + eps b_next^k."""
    bi, bn = to_iv(b), to_iv(b_next)
    e = eps.interval if isinstance(eps, ConservativeReal) else to_iv(eps)
    value = bi**k * (gap.a1.interval * iv.exp(-bi / 2) + gap.a2.interval * iv.exp(-2 * bi / 3)) + e * bn**k
    return ConservativeReal.from_interval(value, UPPER)


class MiddleRange:
    """Row-wise B_k values and suffix maxima for one epsilon table."""

    def __init__(self, table: EpsilonTable):
        self.table = table
        self._gap: dict[int, GapConstants] = {}
        self._bk: dict[tuple[int, int], ConservativeReal] = {}

    def gap(self, i: int) -> GapConstants:
        if i not in self._gap:
            self._gap[i] = gap_constants(self.table[i].b_interval, self.table)
        return self._gap[i]

    def bk(self, i: int, k: int) -> ConservativeReal:
        if (i, k) not in self._bk:
            row = self.table[i]
            self._bk[i, k] = bk_bound(k, row.b_interval, row.b_next_interval, row.eps, self.gap(i))
        return self._bk[i, k]

    def suffix_max(self, i: int, k: int, stop: int | None = None) -> tuple[ConservativeReal, int]:
        """max of B_k over rows i..stop-1 and the row attaining it."""
        stop = len(self.table) if stop is None else stop
        if not 0 <= i < stop <= len(self.table):
            raise RangeError("empty row range")
        j = max(range(i, stop), key=lambda n: (self.bk(n, k).upper, -n))
        return cmax([self.bk(n, k) for n in range(i, stop)]), j


@functools.lru_cache(maxsize=8)
def middle_range(table: EpsilonTable) -> MiddleRange:
    return MiddleRange(table)


def script_bk(k: int, b0, table: EpsilonTable, K_cap=None) -> ConservativeReal:
    """max of B_k over the consecutive row pairs from b0 up to K_cap (default: the table end).

    Valid for e^b0 <= x <= e^K_cap.
    """
    start = table.index_of(b0)
    if K_cap is None:
        stop = len(table)
    else:
        cap = mp.mpf(K_cap)
        stop = next((n + 1 for n, r in enumerate(table) if abs(r.b_next - cap) <= mp.mpf(10) ** -20 * cap), None)
        if stop is None:
            raise RangeError(f"K_cap = {K_cap} is not a row boundary of the table")
        if stop <= start:
            raise RangeError("K_cap must lie above b0")
    return middle_range(table).suffix_max(start, k, stop)[0]


# ---------------------------------------------------------------------------
# small range, lower side


@dataclass(frozen=True)
class BiasRegime:
    """|psi(x) - x| bounds of the form c sqrt(x) (lower) and C_up sqrt(x) (upper) for u <= x <= v."""

    u: Decimal
    v: Decimal
    c: Decimal
    C_up: Decimal

    @property
    def log_v(self):
        return iv.log(to_iv(self.v))


BIAS_REGIMES = (
    BiasRegime(Decimal(100), Decimal("5e10"), Decimal("0.8"), Decimal("0.81")),
    BiasRegime(Decimal(100), Decimal("32e12"), Decimal("0.88"), Decimal("0.86")),
    BiasRegime(Decimal(100), Decimal("1e19"), Decimal("0.94"), Decimal("0.94")),
)


def regime_for(b, regimes: Sequence[BiasRegime] = BIAS_REGIMES) -> BiasRegime:
    """The regime with the smallest v >= e^b; ties go to the smaller c."""
    bi = to_iv(b)
    fitting = [r for r in regimes if hi(bi) <= lo(r.log_v) + mp.mpf(10) ** -25]
    if not fitting:
        raise RangeError(f"no bias regime covers e^{mp.nstr(mid(bi), 8)}")
    return min(fitting, key=lambda r: (r.v, r.c))


def ck_bound(k: int, b, regime: BiasRegime, c0=DEFAULT_CONSTANTS.c0) -> ConservativeReal:
    """C_{b,k} = b^k ((C_up+1) e^(-b/2) + c0 e^(-2b/3) + c e^(-3b/4) + c0 e^(-4b/5)).

    theta(x) >= x - C_{b,k} x / (log x)^k holds for e^b <= x <= regime.v.
    """
    if k not in range(6):
        raise DomainError("k must be in 0..5")
    bi = to_iv(b)
    floor_b = max(hi(iv.log(10**4)), 2 * k)
    if lo(bi) < floor_b - mp.mpf(10) ** -25:
        raise RangeError(f"C_(b,{k}) needs e^b >= max(1e4, e^{2 * k})")
    if hi(bi) > hi(regime.log_v) + mp.mpf(10) ** -25:
        raise RangeError(f"e^b exceeds the regime limit {regime.v}")
    c0i = to_iv(c0)
    inner = (
        (to_iv(regime.C_up) + 1) * iv.exp(-bi / 2)
        + c0i * iv.exp(-2 * bi / 3)
        + to_iv(regime.c) * iv.exp(-3 * bi / 4)
        + c0i * iv.exp(-4 * bi / 5)
    )
    return ConservativeReal.from_interval(bi**k * inner, UPPER)


def small_range_lower(
    k: int, b, regimes: Sequence[BiasRegime] = BIAS_REGIMES, c0=DEFAULT_CONSTANTS.c0
) -> tuple[ConservativeReal, list[tuple[str, ConservativeReal]]]:
    """C-type constant valid on [e^b, v_last], chaining the regimes upward.

    Returns the max and the individual pieces ``(label, value)``.
    """
    first = regime_for(b, regimes)
    later = [r for r in regimes if r.v > first.v]
    later.sort(key=lambda r: r.v)
    pieces = [(f"C_({_fmt(b)},{k}) up to {float(first.v):g}", ck_bound(k, b, first, c0))]
    prev = first
    for r in later:
        pieces.append((f"C_(log {float(prev.v):g},{k}) up to {float(r.v):g}", ck_bound(k, prev.log_v, r, c0)))
        prev = r
    return cmax([p[1] for p in pieces]), pieces


def _fmt(b) -> str:
    if isinstance(b, int):
        return str(b)
    return mp.nstr(mid(to_iv(b)), 8, strip_zeros=True)


# ---------------------------------------------------------------------------
# k = 0


def k0_bounds(
    log_X0, log_X1, eps_table: EpsilonTable, c0=DEFAULT_CONSTANTS.c0
) -> tuple[ConservativeReal, ConservativeReal]:
    """(m0, M0) with x(1 - m0) <= theta(x) for x >= X0 and theta(x) <= x(1 + M0) for x >= X1.

    M0 = eps(log X1) and m0 = eps(log X0) + c0 (X0^(-1/2) + X0^(-2/3) + X0^(-4/5)).
    """
    l0, l1 = to_iv(log_X0), to_iv(log_X1)
    for name, v in (("X0", l0), ("X1", l1)):
        if lo(v) < 20 - mp.mpf(10) ** -25:
            raise RangeError(f"k = 0 bounds need {name} >= e^20")
    M0 = eps_table.epsilon_at(mid(l1))[0]
    eps0 = eps_table.epsilon_at(mid(l0))[0]
    corr = to_iv(c0) * (iv.exp(-l0 / 2) + iv.exp(-2 * l0 / 3) + iv.exp(-4 * l0 / 5))
    m0 = ConservativeReal.from_interval(eps0.interval + corr, UPPER)
    return m0, M0
