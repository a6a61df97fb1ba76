"""Constants epsilon(b) with |psi(x) - x| <= epsilon * x for x >= e^b.

Three routes are provided:

* a closed form valid below the Chebyshev-bias threshold,
* a truncated Perron-formula bound driven by a zero-free region and a
  zero-density estimate (``pt_*``), with a parameter optimiser,
* the smoothed explicit formula with a Logan kernel (``buthe_*``), which needs
  externally supplied constants and a file of zeta-zero ordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Sequence

import numpy as np

from .errors import CoverageError, HypothesisError, RangeError
from .inputs import DEFAULT_CONSTANTS, ZeroDensityRow, ZetaZeroFile
from .numerics import ConservativeReal, UPPER, hi, iv, lo, mid, mp, to_iv

# ---------------------------------------------------------------------------
# small range


def small_range_epsilon(b, c_num="0.94", B_cap=10**19, eps_at_cap="1.93378e-8") -> ConservativeReal:
    """max(c_num * e^(-b/2), eps_at_cap): valid on [e^b, infinity) for log 11 < b <= log B_cap.

    Below ``B_cap`` the bound |psi(x) - x| < c_num * sqrt(x) gives the first
    term; beyond it the cap value takes over.
    """
    bi = to_iv(b)
    if lo(bi) <= mid(iv.log(11)):
        raise RangeError(f"b = {mp.nstr(mid(bi), 10)} must exceed log 11")
    cap = iv.log(B_cap)
    if lo(bi) > hi(cap):
        raise RangeError(f"b = {mp.nstr(mid(bi), 10)} exceeds log B_cap = {mp.nstr(mid(cap), 10)}")
    first = to_iv(c_num) * iv.exp(-bi / 2)
    second = to_iv(eps_at_cap)
    if hi(first) <= lo(second):
        return ConservativeReal.from_interval(second, UPPER)
    if lo(first) >= hi(second):
        return ConservativeReal.from_interval(first, UPPER)
    return ConservativeReal(max(lo(first), lo(second)), max(hi(first), hi(second)), UPPER)


# ---------------------------------------------------------------------------
# truncated Perron sum

DELTA_GRID = tuple(Decimal(n) / 1000 for n in range(1, 26))
LAMBDA_GRID = (Decimal("1.05"), Decimal("1.1"), Decimal("1.2"), Decimal("1.5"), Decimal("2"))
LOG_T_POINTS = 24
GRID_VERSION = "pt-grid-2"


@dataclass(frozen=True)
class PTParams:
    """Parameters of the truncated Perron bound; ``log_T`` stands in for T."""

    delta: Decimal
    lam: Decimal
    log_T: Decimal
    sigma_row: ZeroDensityRow
    H: int = DEFAULT_CONSTANTS.H

    @property
    def K_terms(self) -> int:
        return k_terms(self.log_T, self.lam, self.H)

    def describe(self) -> str:
        return (
            f"delta={self.delta} lambda={self.lam} log_T={self.log_T} "
            f"K={self.K_terms} sigma_row={self.sigma_row.sigma}"
        )


def k_terms(log_T, lam, H) -> int:
    """floor(log(T/H)/log(lambda)) + 1, rounded up if the interval straddles an integer."""
    q = (to_iv(log_T) - iv.log(H)) / iv.log(to_iv(lam))
    return int(mp.floor(hi(q))) + 1


def zero_density_row_for(delta, rows: Sequence[ZeroDensityRow]) -> ZeroDensityRow:
    """Row with the largest sigma not exceeding 1 - delta."""
    target = 1 - Decimal(str(delta))
    usable = [r for r in rows if r.sigma <= target]
    if not usable:
        raise HypothesisError(f"no zero-density row with sigma <= {target}")
    return max(usable, key=lambda r: r.sigma)


def _check_pt(b1, delta, lam, log_T, H, sigma_row=None):
    b1 = to_iv(b1)
    if lo(b1) < 1000:
        raise HypothesisError(f"b1 >= 1000 violated (b1 = {mp.nstr(mid(b1), 8)})")
    d = Decimal(str(delta))
    if not Decimal("0.001") <= d <= Decimal("0.025"):
        raise HypothesisError(f"0.001 <= delta <= 0.025 violated (delta = {d})")
    if not to_iv(lam) > 1:
        raise HypothesisError(f"lambda > 1 violated (lambda = {lam})")
    lt = to_iv(log_T)
    if not lo(lt) > hi(iv.log(H)):
        raise HypothesisError("T > H violated")
    if not hi(lt) < lo(b1):
        raise HypothesisError("T < e^b1 violated")
    if not lo(lt) > hi(iv.log(50)):
        raise HypothesisError("T > 50 violated")
    if sigma_row is not None and sigma_row.sigma > 1 - d:
        raise HypothesisError(f"zero-density row sigma {sigma_row.sigma} exceeds 1 - delta = {1 - d}")


def pt_s0(b2, log_T) -> ConservativeReal:
    """2 b2^2 / T."""
    return ConservativeReal.from_interval(2 * to_iv(b2) ** 2 * iv.exp(-to_iv(log_T)), UPPER)


def pt_s1(b1, delta, log_T) -> ConservativeReal:
    """e^(-delta b1) ((log(T/2pi))^2 / (2 pi) + 1.8642)."""
    lt = to_iv(log_T)
    inner = (lt - iv.log(2 * iv.pi)) ** 2 / (2 * iv.pi) + iv.mpf("1.8642")
    return ConservativeReal.from_interval(iv.exp(-to_iv(delta) * to_iv(b1)) * inner, UPPER)


def pt_s2(b1, delta, lam, K_terms: int, log_T, zd_row: ZeroDensityRow, R=DEFAULT_CONSTANTS.R) -> ConservativeReal:
    """Contribution of zeros above the verification height, split into lambda-adic blocks.

    Block k covers heights in [T/lambda^(k+1), T/lambda^k]; zeros there have
    real part at most 1 - 1/(R log(T/lambda^k)) and their number is bounded by
    the zero-density row.  The exponent of that row is 1 - sigma_row, which is
    at least ``delta`` by the row-selection rule.
    """
    if K_terms < 1:
        raise HypothesisError("K_terms >= 1 violated")
    if zd_row.sigma > 1 - Decimal(str(delta)):
        raise HypothesisError(f"zero-density row sigma {zd_row.sigma} exceeds 1 - delta")
    d_zd = 1 - to_iv(zd_row.sigma)
    c1, c2 = to_iv(zd_row.c1), to_iv(zd_row.c2)
    b1, lt, ll = to_iv(b1), to_iv(log_T), iv.log(to_iv(lam))
    R = to_iv(R)
    e1 = 8 * d_zd / 3
    p1 = 3 + 2 * d_zd
    total = iv.mpf(0)
    for k in range(K_terms):
        L = lt - k * ll
        if lo(L) <= 0:
            raise HypothesisError("log(T / lambda^k) must stay positive")
        density = c1 * iv.exp(e1 * L + p1 * iv.log(L)) + c2 * L**2
        total += iv.exp(-L - b1 / (R * L)) * density
    return ConservativeReal.from_interval(2 * to_iv(lam) * total, UPPER)


def pt_epsilon(b1, b2, params: PTParams, R=DEFAULT_CONSTANTS.R) -> ConservativeReal:
    """s0(b2, T) + s1(b1, delta, T) + s2(...): valid for x in [e^b1, e^b2]."""
    if not to_iv(b1) < to_iv(b2):
        raise HypothesisError("b1 < b2 violated")
    _check_pt(b1, params.delta, params.lam, params.log_T, params.H, params.sigma_row)
    s0 = pt_s0(b2, params.log_T)
    s1 = pt_s1(b1, params.delta, params.log_T)
    s2 = pt_s2(b1, params.delta, params.lam, params.K_terms, params.log_T, params.sigma_row, R)
    return s0 + s1 + s2


def _log_s2_terms(b1: float, L: np.ndarray, row: ZeroDensityRow, R: float) -> np.ndarray:
    """log of the s2 summands (without the 2 lambda factor) at block heights L."""
    d = 1.0 - float(row.sigma)
    t1 = math.log(float(row.c1)) + (8 * d / 3) * L + (3 + 2 * d) * np.log(L)
    t2 = math.log(float(row.c2)) + 2 * np.log(L)
    return -L - b1 / (R * L) + np.logaddexp(t1, t2)


def _float_objective(b1, b2, delta, lam, log_T, row, H, R) -> float:
    """Floating-point estimate of pt_epsilon used only to rank candidates."""
    log_H = math.log(H)
    K = int(math.floor((log_T - log_H) / math.log(lam))) + 1
    L = log_T - np.arange(K) * math.log(lam)
    lt = _log_s2_terms(b1, L, row, R)
    m = lt.max()
    s2 = 2 * lam * math.exp(m) * np.exp(lt - m).sum()
    s0 = 2 * b2**2 * math.exp(-log_T)
    s1 = math.exp(-delta * b1) * ((log_T - math.log(2 * math.pi)) ** 2 / (2 * math.pi) + 1.8642)
    return s0 + s1 + s2


def _lattice_scan(b1, b2, delta, lam, row, H, R, phases=(0.999999, 0.75, 0.5, 0.25)):
    """Best (value, log_T) over all T = H * lambda^(m - 1 + phase) below e^b1.

    With T in that position the block heights are log H + (j - 1 + phase) log
    lambda for j = 1..m, so the s2 sums for every m come from one cumulative
    sum.
    """
    log_H, ll = math.log(H), math.log(lam)
    m_max = int((b1 - log_H) / ll) - 1
    if m_max < 1:
        return math.inf, None
    j = np.arange(1, m_max + 1)
    best = (math.inf, None)
    for phase in phases:
        L = log_H + (j - 1 + phase) * ll
        lt = _log_s2_terms(b1, L, row, R)
        top = lt.max()
        s2 = 2 * lam * np.exp(top) * np.cumsum(np.exp(lt - top))
        log_T = L  # with m blocks the top block height equals log T
        s0 = 2 * b2**2 * np.exp(-log_T)
        s1 = math.exp(-delta * b1) * ((log_T - math.log(2 * math.pi)) ** 2 / (2 * math.pi) + 1.8642)
        total = s0 + s1 + s2
        i = int(np.argmin(total))
        if total[i] < best[0]:
            best = (float(total[i]), float(log_T[i]))
    return best


def pt_optimize(
    b1,
    b2,
    zd_rows: Sequence[ZeroDensityRow],
    H: int = DEFAULT_CONSTANTS.H,
    R=DEFAULT_CONSTANTS.R,
    deltas: Sequence[Decimal] = DELTA_GRID,
    lambdas: Sequence[Decimal] = LAMBDA_GRID,
    log_T_values: Sequence[Decimal] | None = None,
    refine: bool = True,
) -> tuple[ConservativeReal, PTParams]:
    """Minimise pt_epsilon over a fixed grid, then refine on the lambda-adic lattice.

    The coarse stage scans every (delta, lambda, log T) grid point.  The
    refinement exploits that the objective is a sawtooth in log T whose teeth
    sit just below T = H * lambda^m: for each zero-density row (at its largest
    admissible delta) it scans a fine geometric lambda grid and every m at
    once.  The winner is re-evaluated with interval arithmetic; that certified
    value is what is returned.  Ties go to the lexicographically smallest
    (delta, lambda, log_T).
    """
    b1f, b2f, Rf = float(b1), float(b2), float(R)
    log_H = math.log(H)
    if log_T_values is None:
        top = b1f - 1e-6
        log_T_values = [Decimal(repr(log_H + (top - log_H) * (n + 0.5) / LOG_T_POINTS)) for n in range(LOG_T_POINTS)]
    candidates = []
    for delta in deltas:
        try:
            row = zero_density_row_for(delta, zd_rows)
        except HypothesisError:
            continue
        for lam in lambdas:
            for log_T in log_T_values:
                if not log_H < float(log_T) < b1f:
                    continue
                v = _float_objective(b1f, b2f, float(delta), float(lam), float(log_T), row, H, Rf)
                candidates.append((v, delta, lam, Decimal(log_T), row))
    if refine:
        rows_seen = {}
        for delta in deltas:
            try:
                row = zero_density_row_for(delta, zd_rows)
            except HypothesisError:
                continue
            rows_seen[row.sigma] = (max(delta, rows_seen.get(row.sigma, (delta,))[0]), row)
        lam_fine = np.geomspace(1.05, 20.0, 160)
        for delta, row in rows_seen.values():
            for lam in lam_fine:
                lam_d = Decimal(f"{lam:.6f}")
                v, log_T = _lattice_scan(b1f, b2f, float(delta), float(lam_d), row, H, Rf)
                if log_T is not None and log_H < log_T < b1f:
                    candidates.append((v, delta, lam_d, Decimal(f"{log_T:.12f}"), row))
    if not candidates:
        raise HypothesisError("no admissible parameter point (need H < T < e^b1)")
    candidates.sort(key=lambda c: (c[0], c[1], c[2], c[3]))
    for v, delta, lam, log_T, row in candidates[:5]:
        params = PTParams(delta, lam, log_T, row, H)
        try:
            return pt_epsilon(b1, b2, params, R), params
        except HypothesisError:
            continue
    raise HypothesisError("no candidate survived certification")


# ---------------------------------------------------------------------------
# smoothed explicit formula


def logan_kernel(c, eps_smooth, xi):
    """The sharp cut-off kernel l_{c,eps}(xi), an even entire function with l(0) = 1.

    Written with z^2 = (xi eps)^2 - c^2 it equals (c / sinh c) sin(z)/z, using
    sinh(|z|)/|z| when z^2 < 0.
    """
    c, e, x = mp.mpf(c), mp.mpf(eps_smooth), mp.mpf(xi)
    z2 = (x * e) ** 2 - c**2
    scale = c / mp.sinh(c)
    if z2 > 0:
        z = mp.sqrt(z2)
        return scale * mp.sin(z) / z
    if z2 < 0:
        z = mp.sqrt(-z2)
        return scale * mp.sinh(z) / z
    return scale


def _iv_sinh(x):
    return (iv.exp(x) - iv.exp(-x)) / 2


def _logan_kernel_iv(c, e, gamma):
    z2 = (gamma * e) ** 2 - c**2
    scale = c / _iv_sinh(c)
    if lo(z2) > 0:
        z = iv.sqrt(z2)
        return scale * iv.sin(z) / z
    if hi(z2) < 0:
        z = iv.sqrt(-z2)
        return scale * _iv_sinh(z) / z
    # |z| tiny: sin(z)/z and sinh(z)/z both lie in [1 - |z2|/6, 1 + |z2|/6]
    r = max(abs(lo(z2)), abs(hi(z2))) / 6
    return scale * iv.mpf([1 - r, 1 + r])


@dataclass(frozen=True)
class ButheConfig:
    c: Decimal
    eps_smooth: Decimal
    x0: Decimal
    alpha_smooth: Decimal
    nu_abs: Decimal
    mu_plus: Decimal

    @property
    def B0(self):
        e = to_iv(self.eps_smooth)
        return e * iv.exp(-e) * to_iv(self.x0) * to_iv(self.nu_abs) / (2 * to_iv(self.mu_plus))

    def validate(self, zeros: ZetaZeroFile | None = None) -> None:
        if not self.c >= 3:
            raise HypothesisError(f"c >= 3 violated (c = {self.c})")
        if not 0 < self.eps_smooth < Decimal("1e-3"):
            raise HypothesisError(f"0 < eps < 1e-3 violated (eps = {self.eps_smooth})")
        if not self.x0 >= 100:
            raise HypothesisError(f"x0 >= 100 violated (x0 = {self.x0})")
        if not 0 <= self.alpha_smooth < 1:
            raise HypothesisError(f"0 <= alpha < 1 violated (alpha = {self.alpha_smooth})")
        if not (self.nu_abs > 0 and self.mu_plus > 0):
            raise HypothesisError("|nu| and mu_+ must be positive")
        if not lo(self.B0) > 1:
            raise HypothesisError(f"B0 > 1 violated (B0 = {mp.nstr(mid(self.B0), 8)})")
        if zeros is not None and zeros.largest < self.c / self.eps_smooth:
            raise CoverageError(f"zeros file ends at {zeros.largest}, below c/eps = {self.c / self.eps_smooth}")


def buthe_E1(cfg: ButheConfig) -> ConservativeReal:
    e, x0, a = to_iv(cfg.eps_smooth), to_iv(cfg.x0), to_iv(cfg.alpha_smooth)
    nu = to_iv(cfg.nu_abs)
    bracket = (
        2 * e * nu / iv.log(cfg.B0)
        + iv.mpf("2.01") * e / iv.sqrt(x0)
        + iv.log(iv.log(2 * x0**2)) / (2 * x0)
    )
    value = iv.exp(2 * e) * iv.log(iv.exp(e) * x0) * bracket + iv.exp(e * a) - 1
    return ConservativeReal.from_interval(value, UPPER)


def buthe_E2(cfg: ButheConfig) -> ConservativeReal:
    c, e, x0 = to_iv(cfg.c), to_iv(cfg.eps_smooth), to_iv(cfg.x0)
    value = iv.mpf("0.16") * (1 + 1 / x0) / _iv_sinh(c) * iv.exp(iv.mpf("0.71") * iv.sqrt(c * e)) * iv.log(c / e)
    return ConservativeReal.from_interval(value, UPPER)


def _ordinate_interval(g: Decimal):
    ulp = Decimal(1).scaleb(g.as_tuple().exponent)
    return iv.mpf([str(g - ulp), str(g + ulp)])


def buthe_E3(cfg: ButheConfig, zeros: ZetaZeroFile) -> ConservativeReal:
    """(2/sqrt(x0)) * sum over zeros 0 < gamma < c/eps of l(gamma)/gamma, plus 2/x0."""
    c, e, x0 = to_iv(cfg.c), to_iv(cfg.eps_smooth), to_iv(cfg.x0)
    total = iv.mpf(0)
    for g in zeros.below(cfg.c / cfg.eps_smooth):
        gi = _ordinate_interval(g)
        total += _logan_kernel_iv(c, e, gi) / gi
    return ConservativeReal.from_interval(2 / iv.sqrt(x0) * total + 2 / x0, UPPER)


def buthe_epsilon(cfg: ButheConfig, zeros: ZetaZeroFile) -> ConservativeReal:
    """e^(eps alpha) (E1 + E2 + E3): valid for x >= e^(eps alpha) x0."""
    cfg.validate(zeros)
    scale = iv.exp(to_iv(cfg.eps_smooth) * to_iv(cfg.alpha_smooth))
    return (buthe_E1(cfg) + buthe_E2(cfg) + buthe_E3(cfg, zeros)) * ConservativeReal.from_interval(scale)
