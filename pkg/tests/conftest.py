import functools
import math
from decimal import Decimal
from pathlib import Path

import mpmath
import numpy as np
import pytest

from thetabounds.assemble import DkProvider, Providers
from thetabounds.inputs import load_epsilon_table, load_sieve_maxima, load_zero_density
from thetabounds.verifier import SieveScan

FIXTURES = Path(__file__).parent / "fixtures"
SIEVE_LIMIT = 10**9
RNG_SEED = 20241015

# (k, X0, stated constant) rows used as regression fixtures for the assembler
REPAIRED_ROWS = [
    (1, "908994923", "0.001"),
    (2, "3594641", "0.2"),
    (3, "32321", "10"),
    (3, "767135587", "0.5"),
    (4, "2", "151.3"),
]
# requests whose assembled constants are checked against sieve truth below 1e9
SANDWICH_REQUESTS = [(k, x0) for k, x0, _ in REPAIRED_ROWS] + [(0, "2"), (2, "e^20"), (3, "e^20"), (5, "2")]


def read_fixture(name: str) -> list[list[str]]:
    """Data rows of a fixture TSV: comment lines and the header row are dropped."""
    lines = [l for l in (FIXTURES / name).read_text().splitlines() if l and not l.startswith("#")]
    return [l.split("\t") for l in lines[1:]]


def printed_ulp(printed: str) -> Decimal:
    return Decimal(1).scaleb(Decimal(printed).as_tuple().exponent)


def matches_printed(value, printed: str) -> bool:
    """True when ``printed`` is the nearest or the upward rounding of ``value``.

    Published tables mix both conventions, so either is accepted.
    """
    p = Decimal(printed)
    ulp = printed_ulp(printed)
    v = Decimal(mpmath.nstr(value, 40, min_fixed=-mpmath.inf, max_fixed=mpmath.inf))
    return p - ulp < v <= p + ulp / 2


@pytest.fixture(scope="session")
def eps_table():
    return load_epsilon_table()


@pytest.fixture(scope="session")
def zero_density():
    return load_zero_density()


@pytest.fixture(scope="session")
def sieve_rows():
    return load_sieve_maxima()


def _live_windows(sieve_rows):
    """Windows (X0, next published boundary) that the requests above need."""
    starts = sorted({r.a for r in sieve_rows})
    out = []
    for _, x0 in SANDWICH_REQUESTS:
        X0 = math.ceil(math.exp(20)) if x0 == "e^20" else int(x0)
        if X0 in starts:
            continue
        nxt = min(a for a in starts if a > X0)
        out.append((X0, nxt))
    return sorted(set(out))


def integer_root(x: int, n: int) -> int:
    r = int(round(x ** (1.0 / n)))
    while r**n > x:
        r -= 1
    while (r + 1) ** n <= x:
        r += 1
    return r


@functools.cache
def sample_points() -> dict:
    """Reproducible sample points: 10^3 for the psi/theta splitting, 10^3 per sandwich range."""
    rng = np.random.default_rng(RNG_SEED)
    cp = sorted(int(v) for v in rng.integers(2, SIEVE_LIMIT, size=1000))
    sandwich = {}
    for _, x0 in SANDWICH_REQUESTS:
        lo = max(math.ceil(math.exp(20)), 2 if x0 == "e^20" else int(x0))
        sandwich[x0] = sorted(int(v) for v in rng.integers(lo, SIEVE_LIMIT, size=1000))
    return {"cp": cp, "sandwich": sandwich}


@functools.cache
def session_sieve() -> SieveScan:
    """The one sieve pass to 1e9 shared by every sieve-backed test."""
    sieve_rows = load_sieve_maxima()
    points = sample_points()
    published = [(r.a, r.b) for r in sieve_rows if r.b <= SIEVE_LIMIT]
    windows = published + _live_windows(sieve_rows)
    wanted = set()
    for x in points["cp"]:
        wanted.update(integer_root(x, n) for n in range(1, 31))
    for xs in points["sandwich"].values():
        wanted.update(xs)
    return SieveScan(
        SIEVE_LIMIT,
        windows=windows,
        theta_points=sorted(p for p in wanted if p >= 2),
        bias_from=599,
    ).run()


def live_providers() -> Providers:
    """Providers whose unpublished sieve windows come from the session sieve."""
    by_window = {(w.a, w.b): w for w in session_sieve().windows}

    def live(a, b):
        try:
            return by_window[a, b]
        except KeyError:
            raise AssertionError(f"window ({a}, {b}) was not registered with the session sieve") from None

    return Providers(load_epsilon_table(), load_zero_density(), DkProvider(load_sieve_maxima(), live=live))


@pytest.fixture(scope="session")
def random_points():
    return sample_points()


@pytest.fixture(scope="session")
def sieve_1e9():
    return session_sieve()


@pytest.fixture(scope="session")
def providers():
    return live_providers()


@pytest.fixture(scope="session")
def providers_published(eps_table, zero_density, sieve_rows):
    """Providers without live sieving, for tests that stay at published boundaries."""
    return Providers(eps_table, zero_density, DkProvider(sieve_rows))


def psi_of_root(scan: SieveScan, x: int, j: int) -> tuple:
    """Enclosure of psi(x^(1/j)) = sum over m of theta(x^(1/(j m)))."""
    total_lo = total_hi = mpmath.mpf(0)
    m = 1
    while (r := integer_root(x, j * m)) >= 2:
        t = scan.theta(r)
        total_lo += t.lower
        total_hi += t.upper
        m += 1
    return total_lo, total_hi


def prime_power_sandwich_failures(scan: SieveScan, xs) -> list[int]:
    """x where theta(x) escapes psi - psi(x^(1/2)) - psi(x^(1/3)) - psi(x^(1/5 or 1/7))."""
    bad = []
    for x in xs:
        psi = psi_of_root(scan, x, 1)
        roots = {j: psi_of_root(scan, x, j) for j in (2, 3, 5, 7)}
        lower = psi[0] - roots[2][1] - roots[3][1] - roots[5][1]
        upper = psi[1] - roots[2][0] - roots[3][0] - roots[7][0]
        t = scan.theta(x)
        if not (lower <= t.upper and t.lower <= upper):
            bad.append(x)
    return bad


def envelope_failures(scan: SieveScan, k: int, m, M, xs) -> list[int]:
    """x where the sieve theta(x) violates x (1 -+ c / (log x)^k) with c = m or M."""
    bad = []
    for x in xs:
        theta = scan.theta(x)
        scale = mpmath.mpf(x) / mpmath.log(x) ** k
        if theta.upper < x - m * scale or theta.lower > x + M * scale:
            bad.append(x)
    return bad
