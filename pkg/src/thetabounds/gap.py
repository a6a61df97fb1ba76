"""Upper bounds for psi(x) - theta(x) of the shape a1 * sqrt(x) + a2 * x^(1/3)."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Union

from .errors import DomainError
from .inputs import DEFAULT_CONSTANTS, EpsilonTable
from .numerics import ConservativeReal, UPPER, hi, iv, lo, mid, mp, to_iv

EpsProvider = Union[EpsilonTable, Callable[[object], ConservativeReal]]

# Once a term drops below this fraction of the running sum the remaining terms
# are bounded together instead of summed one by one.
TAIL_CUTOFF = mp.mpf(10) ** -40


def _floor_log2_iv(x) -> int:
    return int(mp.floor(hi(iv.log(x) / iv.log(2))))


def f_sum_log(log_x, n_top: int | None = None) -> ConservativeReal:
    """f(x) = sum_{k=3}^{floor(log2 x)} x^(1/k - 1/3), given log x.

    The terms decrease in k, so once they become negligible the rest of the
    sum is bounded by (remaining count) * (current term).
    """
    lx = to_iv(log_x)
    if n_top is None:
        n_top = int(mp.floor(hi(lx / iv.log(2))))
    if n_top < 3:
        raise DomainError("f(x) needs x >= 8")
    third = iv.mpf(1) / 3
    total = iv.mpf(1)  # the k = 3 term is x^0
    for k in range(4, n_top + 1):
        term = iv.exp(lx * (iv.mpf(1) / k - third))
        if hi(term) < TAIL_CUTOFF * lo(total):
            total += term * (n_top - k + 1) * iv.mpf([0, 1])
            break
        total += term
    return ConservativeReal.from_interval(total, UPPER)


def f_sum(x) -> ConservativeReal:
    """f(x) for a concrete x >= 8 (int, Fraction, decimal string or interval)."""
    if isinstance(x, (int, Fraction)) and x < 8:
        raise DomainError(f"f(x) needs x >= 8, got {x}")
    xi = to_iv(x)
    if lo(xi) < 8:
        raise DomainError(f"f(x) needs x >= 8, got {mp.nstr(lo(xi), 10)}")
    n = x.bit_length() - 1 if isinstance(x, int) else _floor_log2_iv(xi)
    return f_sum_log(iv.log(xi), n)


def eta_log(log_x0, alpha=DEFAULT_CONSTANTS.alpha) -> ConservativeReal:
    """(1 + alpha) * max(f(x0), f(2^(floor(log2 x0) + 1))), with x0 given by its logarithm."""
    lx = to_iv(log_x0)
    if lo(lx) < 9 * lo(iv.log(2)) - mp.mpf(10) ** -25:
        raise DomainError("eta needs x0 >= 2^9")
    n = int(mp.floor(hi(lx / iv.log(2))))
    if alpha is None or Decimal(str(alpha)) < 0:
        raise DomainError("alpha must be non-negative")
    at_x0 = f_sum_log(lx, n)
    at_next = f_sum_log((n + 1) * iv.log(2), n + 1)
    top = at_x0 if at_x0.upper >= at_next.upper else at_next
    return ConservativeReal.from_interval((1 + to_iv(alpha)) * top.interval, UPPER)


def eta(x0, alpha=DEFAULT_CONSTANTS.alpha) -> ConservativeReal:
    """eta for a concrete x0 >= 2^9."""
    if isinstance(x0, int):
        if x0 < 2**9:
            raise DomainError("eta needs x0 >= 2^9")
        n = x0.bit_length() - 1
        at_x0 = f_sum_log(iv.log(x0), n)
        at_next = f_sum_log((n + 1) * iv.log(2), n + 1)
        top = at_x0 if at_x0.upper >= at_next.upper else at_next
        return ConservativeReal.from_interval((1 + to_iv(alpha)) * top.interval, UPPER)
    return eta_log(iv.log(to_iv(x0)), alpha)


@dataclass(frozen=True)
class GapConstants:
    """psi(x) - theta(x) < a1 * x^(1/2) + a2 * x^(1/3) for x >= e^b."""

    b: object
    a1: ConservativeReal
    a2: ConservativeReal


def _epsilon(provider: EpsProvider, b) -> ConservativeReal:
    if isinstance(provider, EpsilonTable):
        return provider.epsilon_at(mid(to_iv(b)))[0]
    return provider(b)


def gap_constants(
    b,
    eps_provider: EpsProvider,
    x1=DEFAULT_CONSTANTS.x1,
    alpha=DEFAULT_CONSTANTS.alpha,
) -> GapConstants:
    """a1 and a2 for the threshold e^b.

    a1 comes from epsilon at the square root scale: below 2 log x1 the whole
    range x^(1/2) <= x1 is covered by epsilon(log x1).
    """
    bi = to_iv(b)
    if lo(bi) < 7:
        raise DomainError("gap constants need b >= 7")
    J = iv.log(x1)
    if hi(bi) <= 2 * lo(J):
        eps = _epsilon(eps_provider, J)
    else:
        eps = _epsilon(eps_provider, bi / 2)
    a1 = ConservativeReal.from_interval(1 + eps.interval, UPPER)
    a2 = _cached_eta(mp.nstr(lo(bi), 40), mp.nstr(hi(bi), 40), str(alpha))
    return GapConstants(b, a1, a2)


@functools.lru_cache(maxsize=4096)
def _cached_eta(b_lo: str, b_hi: str, alpha: str) -> ConservativeReal:
    return eta_log(iv.mpf([b_lo, b_hi]), alpha)
