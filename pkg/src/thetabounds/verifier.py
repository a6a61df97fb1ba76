"""Segmented prime sieve, theta(x) with tracked rounding error, and the D_k maxima.

One pass over the primes up to a limit can serve several consumers at once
(see :class:`SieveScan`): D_k maxima over windows, theta(x) at query points
and the check theta(p) < p - 0.05 sqrt(p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, PreconditionError, ResourceError
from .numerics import ConservativeReal, UPPER, iv, mp

DEFAULT_SEGMENT = 10**8
MAX_SEGMENT = 5 * 10**8  # about 250 MB of sieve flags
CHUNK = 1 << 16  # primes per cumulative-sum block
U = 2.0**-53
LOG_ULPS = 2  # numpy's log is accurate to within this many units in the last place


@dataclass(frozen=True)
class SieveSegment:
    lo: int
    hi: int
    primes: np.ndarray = field(repr=False)  # ascending primes in (lo, hi]


def small_primes(n: int) -> np.ndarray:
    """All primes <= n (plain sieve of Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for q in range(3, math.isqrt(n) + 1, 2):
        if flags[q]:
            flags[q * q :: 2 * q] = False
    return np.flatnonzero(flags).astype(np.int64)


def _odd_primes_in(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Odd primes in (lo, hi]; ``base`` holds every prime up to sqrt(hi)."""
    first = lo + 1 if lo % 2 == 0 else lo + 2
    first = max(first, 3)
    if first > hi:
        return np.zeros(0, dtype=np.int64)
    count = (hi - first) // 2 + 1
    flags = np.ones(count, dtype=bool)
    for q in base[1:]:
        q = int(q)
        if q * q > hi:
            break
        start = max(q * q, (first + q - 1) // q * q)
        if start % 2 == 0:
            start += q
        if start > hi:
            continue
        flags[(start - first) // 2 :: q] = False
    return first + 2 * np.flatnonzero(flags).astype(np.int64)


def sieve_range(a: int, b: int, segment_len: int = DEFAULT_SEGMENT) -> Iterator[SieveSegment]:
    """Primes in (a, b], segment by segment."""
    a, b = int(a), int(b)
    if not 0 <= a < b:
        raise PreconditionError(f"need 0 <= a < b, got ({a}, {b})")
    if segment_len > MAX_SEGMENT:
        raise ResourceError(f"segment length {segment_len} exceeds the memory budget {MAX_SEGMENT}")
    if segment_len < 2:
        raise PreconditionError("segment length must be at least 2")
    base = small_primes(math.isqrt(b) + 1)
    lo = a
    while lo < b:
        hi = min(lo + segment_len, b)
        primes = _odd_primes_in(lo, hi, base)
        if lo < 2 <= hi:
            primes = np.concatenate(([2], primes))
        yield SieveSegment(lo, hi, primes)
        lo = hi


@dataclass
class ThetaAccumulator:
    """theta at the last prime seen, as an exact sum of rounded logarithms plus an error bound."""

    theta: Fraction = Fraction(0)
    abs_err: float = 0.0
    n: int = 0
    last_prime: int = 1

    @property
    def theta_interval(self):
        t = iv.mpf(self.theta.numerator) / self.theta.denominator
        return t + iv.mpf([-self.abs_err, self.abs_err])

    def save(self, path) -> None:
        t = mp.mpf(self.theta.numerator) / self.theta.denominator
        Path(path).write_text(
            f"last_prime\t{self.last_prime}\ntheta\t{self.theta.numerator}/{self.theta.denominator}\n"
            f"theta_decimal\t{mp.nstr(t, 25)}\nabs_err\t{self.abs_err!r}\nn\t{self.n}\n"
        )

    @classmethod
    def load(cls, path) -> "ThetaAccumulator":
        try:
            fields_ = dict(line.split("\t", 1) for line in Path(path).read_text().splitlines() if line)
            return cls(Fraction(fields_["theta"]), float(fields_["abs_err"]), int(fields_["n"]), int(fields_["last_prime"]))
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"bad checkpoint {path}: {exc}") from None


@dataclass
class DkResult:
    """max over primes of (log p_n)^k (p_n - theta(p_{n-1})) / p_n, per k.

    ``upper`` is a float upper bound for the maximum over the whole window;
    ``witness`` keeps theta(p_{n-1}) and its error bound at the maximising
    prime so the value there can be re-evaluated exactly.
    """

    a: int
    b: int
    k_set: tuple[int, ...]
    upper: dict[int, float] = field(default_factory=dict)
    argmax: dict[int, int] = field(default_factory=dict)
    witness: dict[int, tuple[float, float]] = field(default_factory=dict)
    last_prime: int | None = None  # the first prime beyond b, once reached

    @property
    def complete(self) -> bool:
        return self.last_prime is not None

    def at_argmax(self, k: int) -> ConservativeReal:
        """Enclosure of the D_k summand at the maximising prime."""
        p = self.argmax[k]
        t, e = self.witness[k]
        gap = iv.mpf(p) - (iv.mpf(t) + iv.mpf([-e, e]))
        return ConservativeReal.from_interval(iv.log(p) ** k * gap / p, UPPER)

    def value(self, k: int) -> ConservativeReal:
        """Certified D_k: at least the value at the argmax, at most the float screen bound."""
        at = self.at_argmax(k)
        return ConservativeReal(at.lower, max(at.upper, mp.mpf(self.upper[k])), UPPER)

    def extendable(self, k: int) -> bool:
        """Whether D_k < (k+1)^(k+1), the condition for carrying the bound between primes."""
        return self.upper[k] < (k + 1) ** (k + 1)

    def merge(self, other: "DkResult") -> "DkResult":
        """Max-composition of two adjacent windows."""
        out = DkResult(min(self.a, other.a), max(self.b, other.b), self.k_set)
        for k in self.k_set:
            src = self if self.upper[k] >= other.upper[k] else other
            out.upper[k] = src.upper[k]
            out.argmax[k] = src.argmax[k]
            out.witness[k] = src.witness[k]
        out.last_prime = other.last_prime if other.b >= self.b else self.last_prime
        return out


@dataclass
class BiasReport:
    limit: int
    checked: int = 0
    first_violation: int | None = None
    worst_margin: float = math.inf  # min of (p - 0.05 sqrt p - theta(p)) / sqrt(p)
    worst_prime: int | None = None

    @property
    def passed(self) -> bool:
        return self.first_violation is None


class SieveScan:
    """Stream primes once and feed every registered consumer.

    * ``windows``: (a, b) ranges for D_k, scanning primes from the first prime
      above a through the first prime above b.
    * ``theta_points``: x values at which theta(x) is reported.
    * ``bias_from``: if set, check theta(p) < p - 0.05 sqrt(p) for primes in
      [bias_from, limit].
    """

    def __init__(
        self,
        limit: int,
        windows: Sequence[tuple[int, int]] = (),
        k_set: Sequence[int] = tuple(range(6)),
        theta_points: Iterable[float] = (),
        bias_from: int | None = None,
        segment_len: int = DEFAULT_SEGMENT,
        accumulator: ThetaAccumulator | None = None,
    ):
        self.limit = int(limit)
        self.k_set = tuple(sorted(set(k_set)))
        self.windows = [DkResult(int(a), int(b), self.k_set) for a, b in windows]
        for w in self.windows:
            for k in self.k_set:
                w.upper[k] = -math.inf
                w.argmax[k] = 0
        self.points = np.unique(np.asarray(list(theta_points), dtype=np.float64))
        self.theta_values: dict[float, ConservativeReal] = {}
        self.bias = BiasReport(self.limit) if bias_from is not None else None
        self.bias_from = bias_from
        self.segment_len = segment_len
        self.acc = accumulator or ThetaAccumulator()
        self.acc_at_limit: ThetaAccumulator | None = None  # state at the largest prime <= limit
        # sieve far enough to see the first prime above every window end
        self.sieve_to = max([self.limit] + [w.b for w in self.windows]) + 2000

    def run(self) -> "SieveScan":
        start = self.acc.last_prime
        for seg in sieve_range(start, self.sieve_to, self.segment_len):
            for lo in range(0, len(seg.primes), CHUNK):
                chunk = seg.primes[lo : lo + CHUNK]
                cut = int(np.searchsorted(chunk, self.limit, side="right"))
                if 0 < cut < len(chunk):
                    self._feed(chunk[:cut])
                    self._feed(chunk[cut:])
                else:
                    self._feed(chunk)
        for w in self.windows:
            if not w.complete:
                raise PreconditionError(f"window ({w.a}, {w.b}) was not closed by the sieve")
        if self.acc_at_limit is None:
            self.acc_at_limit = replace(self.acc)
        return self

    def _feed(self, primes: np.ndarray) -> None:
        if len(primes) == 0:
            return
        if self.acc_at_limit is None and primes[0] > self.limit:
            self.acc_at_limit = replace(self.acc)
        pf = primes.astype(np.float64)
        logs = np.log(pf)
        base = float(self.acc.theta)
        base_err = float(abs(Fraction(base) - self.acc.theta))
        csum = np.cumsum(logs)
        m = len(logs)
        # Per prime i: the recursive partial sum has error <= i u sum|x|, each log
        # is off by at most LOG_ULPS ulps, and adding base rounds once more.
        steps = np.arange(1, m + 1, dtype=np.float64)
        err_at = self.acc.abs_err + base_err + (steps + 2 * LOG_ULPS) * U * csum + U * (base + csum)
        err_at *= 1 + 1e-12
        theta_at = base + csum  # theta(p_i)
        theta_prev = np.concatenate(([base], theta_at[:-1]))  # theta(p_{i-1})
        err_prev = np.concatenate(([self.acc.abs_err + base_err], err_at[:-1]))

        for w in self.windows:
            self._update_window(w, primes, pf, logs, theta_prev, err_prev)
        if self.points.size:
            self._answer_points(primes, theta_at, err_at)
        if self.bias is not None:
            self._check_bias(primes, pf, theta_at, err_at)

        total = math.fsum(logs)
        self.acc.theta += Fraction(total)
        self.acc.abs_err += (2 * LOG_ULPS + 1) * U * total
        self.acc.n += m
        self.acc.last_prime = int(primes[-1])

    def _update_window(self, w: DkResult, primes, pf, logs, theta_prev, err_prev) -> None:
        if w.complete or primes[-1] <= w.a:
            return
        i0 = int(np.searchsorted(primes, w.a, side="right"))
        i1 = int(np.searchsorted(primes, w.b, side="right"))  # index of the first prime above b
        stop = min(i1 + 1, len(primes))
        if i0 >= stop:
            return
        sl = slice(i0, stop)
        gap_hi = (pf[sl] - theta_prev[sl] + err_prev[sl]) / pf[sl]
        lg = logs[sl]
        for k in self.k_set:
            scale = lg**k if k else 1.0
            hi_vals = scale * gap_hi * (1 + 8 * U * (k + 2))
            j = int(np.argmax(hi_vals))
            if hi_vals[j] > w.upper[k]:
                w.upper[k] = float(hi_vals[j])
                w.argmax[k] = int(primes[i0 + j])
                w.witness[k] = (float(theta_prev[i0 + j]), float(err_prev[i0 + j]))
        if i1 < len(primes):
            w.last_prime = int(primes[i1])

    def _answer_points(self, primes, theta_at, err_at) -> None:
        # theta(x) for x in [p_first, next chunk's first prime) equals theta at the largest prime <= x
        lo_p = primes[0]
        hi_p = primes[-1]
        sel = (self.points >= lo_p) & (self.points < hi_p + 1)
        xs = self.points[sel]
        idx = np.searchsorted(primes, np.floor(xs), side="right") - 1
        for x, i in zip(xs, idx):
            self.theta_values[float(x)] = _enclose(theta_at[i], err_at[i])
        # points in the prime gap after this chunk are answered with this chunk's last theta;
        # a later chunk overwrites them with a more recent theta
        gap_sel = (self.points >= hi_p + 1) & (self.points < hi_p + 2000)
        for x in self.points[gap_sel]:
            self.theta_values[float(x)] = _enclose(theta_at[-1], err_at[-1])

    def _check_bias(self, primes, pf, theta_at, err_at) -> None:
        sel = (primes >= self.bias_from) & (primes <= self.limit)
        if not sel.any():
            return
        p = pf[sel]
        root = np.sqrt(p)
        margin = (p - 0.05 * root - (theta_at[sel] + err_at[sel])) - 8 * U * p
        self.bias.checked += int(sel.sum())
        j = int(np.argmin(margin / root))
        if margin[j] / root[j] < self.bias.worst_margin:
            self.bias.worst_margin = float(margin[j] / root[j])
            self.bias.worst_prime = int(p[j])
        bad = np.flatnonzero(margin <= 0)
        if bad.size and self.bias.first_violation is None:
            self.bias.first_violation = int(p[bad[0]])

    def theta(self, x: float) -> ConservativeReal:
        if x < 2:
            return ConservativeReal.exact(0)
        try:
            return self.theta_values[float(x)]
        except KeyError:
            raise PreconditionError(f"theta({x}) was not requested before the scan") from None


def _enclose(t: float, e: float) -> ConservativeReal:
    return ConservativeReal(mp.mpf(t) - mp.mpf(e), mp.mpf(t) + mp.mpf(e), UPPER)


def dk_scan(
    a: int,
    b: int,
    k_set: Sequence[int],
    theta_in: ThetaAccumulator | None = None,
    segment_len: int = DEFAULT_SEGMENT,
) -> tuple[DkResult, ThetaAccumulator]:
    """D_k over primes from the first prime above a to the first prime above b.

    ``theta_in`` must sit at the largest prime <= a (a fresh accumulator sits
    at 1).  D_k is only meaningful when a > e^(k+1); smaller a is reported but
    not refused, since the carrying argument also works for every x > 1 when
    D_k < (k+1)^(k+1).
    """
    acc = theta_in or ThetaAccumulator()
    if acc.last_prime > a:
        raise PreconditionError(f"accumulator at {acc.last_prime} is past a = {a}")
    advance_to(acc, a, segment_len)
    scan = SieveScan(b, windows=[(a, b)], k_set=k_set, accumulator=acc, segment_len=segment_len)
    scan.run()
    return scan.windows[0], scan.acc_at_limit


def advance_to(acc: ThetaAccumulator, a: int, segment_len: int = DEFAULT_SEGMENT) -> None:
    """Feed the primes in (acc.last_prime, a] into the accumulator."""
    if a <= acc.last_prime:
        return
    for seg in sieve_range(acc.last_prime, a, segment_len):
        for lo in range(0, len(seg.primes), CHUNK):
            chunk = seg.primes[lo : lo + CHUNK]
            if len(chunk):
                logs = np.log(chunk.astype(np.float64))
                total = math.fsum(logs)
                acc.theta += Fraction(total)
                acc.abs_err += (2 * LOG_ULPS + 1) * U * total
                acc.n += len(chunk)
                acc.last_prime = int(chunk[-1])


def bias_check(limit: int, segment_len: int = DEFAULT_SEGMENT) -> BiasReport:
    """theta(p) < p - 0.05 sqrt(p) at every prime p in [599, limit]."""
    if limit < 599:
        raise PreconditionError("the bias check starts at 599; limit must be at least 599")
    return SieveScan(limit, bias_from=599, segment_len=segment_len).run().bias


def emit_dk_tsv(results: Sequence[DkResult], header: Sequence[str] = (), digits: int = 6) -> str:
    from .numerics import present

    lines = [f"# {h}" for h in header]
    ks = results[0].k_set if results else tuple(range(6))
    lines.append("\t".join(["a", "b"] + [f"D{k}" for k in ks] + [f"argmax{k}" for k in ks]))
    for r in results:
        vals = [present(r.at_argmax(k), digits) for k in ks]
        lines.append("\t".join([str(r.a), str(r.b)] + vals + [str(r.argmax[k]) for k in ks]))
    return "\n".join(lines) + "\n"
