"""Global constants and the plain-text data files the bounds are built from."""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field, fields, replace
from decimal import Decimal
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import mpmath

from .errors import DataError, RangeError
from .numerics import ConservativeReal, eval_conservative, iv, mid, mp, to_iv

METHODS = ("TABLE", "SMALL_RANGE", "PT", "BUTHE", "RECOVERED")


@dataclass(frozen=True)
class GlobalConstants:
    H: int = 2445999556030
    R: Decimal = Decimal("5.573412")
    c0: Decimal = Decimal("1.03883")
    alpha: Decimal = Decimal("1.93378e-8")
    x1: int = 10**19
    sieve_limit: int = 7 * 10**11
    K: int = 25000

    @property
    def J(self) -> mpmath.mpf:
        """Log-scale end of the range where theta(x) < x is verified."""
        return mid(iv.log(self.x1))

    @property
    def J0(self) -> mpmath.mpf:
        """Log-scale end of the directly sieved range."""
        return mid(iv.log(self.sieve_limit))

    def with_overrides(self, overrides: dict[str, str]) -> "GlobalConstants":
        kinds = {f.name: f.type for f in fields(self)}
        values = {}
        for key, text in overrides.items():
            if key not in kinds:
                raise DataError(f"unknown constant {key!r}")
            values[key] = int(Decimal(text)) if kinds[key] in ("int", int) else Decimal(text)
        return replace(self, **values)

    def describe(self) -> list[tuple[str, str]]:
        return [(f.name, str(getattr(self, f.name))) for f in fields(self)]


DEFAULT_CONSTANTS = GlobalConstants()


def log_scale(text: str) -> tuple[mpmath.mpf, str]:
    """Parse a log-scale table coordinate such as ``43``, ``2.5e3`` or ``log(1e19)``."""
    text = text.strip()
    try:
        return mp.mpf(Fraction(text).numerator) / Fraction(text).denominator, text
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return mid(eval_conservative(text).interval), text
    except Exception as exc:
        raise DataError(f"cannot parse log-scale value {text!r}: {exc}") from None


@dataclass(frozen=True)
class EpsilonRow:
    """|psi(x) - x| <= epsilon * x for e^b <= x <= e^b_next."""

    b: mpmath.mpf
    b_next: mpmath.mpf
    epsilon: str
    method: str = "TABLE"
    b_label: str = ""
    b_next_label: str = ""

    @property
    def eps(self):
        return to_iv(self.epsilon)

    @property
    def b_interval(self):
        return _label_interval(self.b_label, self.b)

    @property
    def b_next_interval(self):
        return _label_interval(self.b_next_label, self.b_next)

    def as_csv(self) -> str:
        return f"{self.b_label or mp.nstr(self.b, 20)},{self.b_next_label or mp.nstr(self.b_next, 20)},{self.epsilon},{self.method}"


def _label_interval(label: str, value):
    if label:
        try:
            return iv.mpf(Fraction(label).numerator) / Fraction(label).denominator
        except (ValueError, ZeroDivisionError):
            return eval_conservative(label).interval
    return iv.mpf(value)


@dataclass(frozen=True)
class EpsilonTable:
    rows: tuple[EpsilonRow, ...]
    source: str = ""

    def __post_init__(self):
        validate_rows(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    @property
    def starts(self) -> list[mpmath.mpf]:
        return [r.b for r in self.rows]

    @property
    def end(self) -> mpmath.mpf:
        return self.rows[-1].b_next

    def index_of(self, b) -> int:
        """Index of the row whose left endpoint equals ``b``."""
        b = mp.mpf(b) if not isinstance(b, str) else log_scale(b)[0]
        i = bisect.bisect_left(self.starts, b)
        if i < len(self.rows) and abs(self.rows[i].b - b) <= mp.mpf(10) ** (-20) * max(1, abs(b)):
            return i
        raise RangeError(f"{mp.nstr(b, 12)} is not a row of the epsilon table")

    def floor_index(self, b_query) -> int:
        b_query = mp.mpf(b_query)
        if b_query < self.rows[0].b:
            raise RangeError(
                f"log-scale point {mp.nstr(b_query, 10)} is below the table start {mp.nstr(self.rows[0].b, 10)}"
            )
        if b_query >= self.end:
            raise RangeError(f"log-scale point {mp.nstr(b_query, 10)} is beyond the table end {mp.nstr(self.end, 10)}")
        return bisect.bisect_right(self.starts, b_query) - 1

    def epsilon_at(self, b_query) -> tuple[ConservativeReal, EpsilonRow]:
        """Epsilon valid for every x in [e^b_query, e^end].

        Uses the row containing ``b_query``; when a later row carries a larger
        epsilon (a non-monotone table) that larger value is returned so the
        bound stays valid for all larger x covered by the table.
        """
        i = self.floor_index(b_query)
        j = max(range(i, len(self.rows)), key=lambda n: (mp.mpf(self.rows[n].epsilon), -n))
        row = self.rows[j] if mp.mpf(self.rows[j].epsilon) > mp.mpf(self.rows[i].epsilon) else self.rows[i]
        return ConservativeReal.from_interval(row.eps), row

    def truncated(self, end_index: int) -> "EpsilonTable":
        return EpsilonTable(self.rows[:end_index], self.source)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("b,b_next,epsilon,method\n")
        for r in self.rows:
            out.write(r.as_csv() + "\n")
        return out.getvalue()


def validate_rows(rows: Sequence[EpsilonRow]) -> None:
    if not rows:
        raise DataError("epsilon table is empty")
    for n, r in enumerate(rows):
        if not r.b < r.b_next:
            raise DataError(f"row {n} ({r.b_label}): b must be below b_next")
        if not mp.mpf(r.epsilon) > 0:
            raise DataError(f"row {n} ({r.b_label}): epsilon must be positive")
        if r.method not in METHODS:
            raise DataError(f"row {n} ({r.b_label}): unknown method {r.method!r}")
    for n, (r, s) in enumerate(zip(rows, rows[1:])):
        if s.b < r.b_next:
            raise DataError(f"rows {r.b_label or n} and {s.b_label or n + 1} overlap")
        if s.b > r.b_next:
            raise DataError(f"gap between rows {r.b_label or n} and {s.b_label or n + 1}")


def _data_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip() and not line.lstrip().startswith("#"):
            yield lineno, line


def _read_text(path) -> tuple[str, str]:
    if path is None:
        raise DataError("no path given")
    if isinstance(path, str) and path.startswith("package:"):
        name = path.split(":", 1)[1]
        return resources.files("thetabounds.data").joinpath(name).read_text(), path
    p = Path(path)
    try:
        return p.read_text(), str(p)
    except OSError as exc:
        raise DataError(f"cannot read {p}: {exc}") from None


def _csv_records(text: str, where: str, header: Sequence[str]):
    lines = list(_data_lines(text))
    if not lines:
        raise DataError(f"{where}: no data")
    first = [c.strip() for c in lines[0][1].split(",")]
    if first[: len(header)] == list(header):
        lines = lines[1:]
    for lineno, line in lines:
        cells = [c.strip() for c in next(csv.reader([line]))]
        yield lineno, cells


def parse_epsilon_table(text: str, where: str = "<text>") -> EpsilonTable:
    rows = []
    for lineno, cells in _csv_records(text, where, ("b", "b_next", "epsilon", "method")):
        if len(cells) not in (3, 4):
            raise DataError(f"{where}:{lineno}: expected b,b_next,epsilon[,method]")
        try:
            b, b_label = log_scale(cells[0])
            b_next, b_next_label = log_scale(cells[1])
            Decimal(cells[2])
            eps = cells[2].lower()
        except (DataError, ArithmeticError) as exc:
            raise DataError(f"{where}:{lineno}: {exc}") from None
        method = cells[3].upper() if len(cells) == 4 else "TABLE"
        rows.append(EpsilonRow(b, b_next, eps, method, b_label, b_next_label))
    try:
        return EpsilonTable(tuple(rows), where)
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from None


def load_epsilon_table(path="package:epsilon_default.csv") -> EpsilonTable:
    text, where = _read_text(path)
    return parse_epsilon_table(text, where)


@dataclass(frozen=True)
class ZeroDensityRow:
    """N(sigma, T) <= c1 T^(8(1-sigma)/3) (log T)^(5-2 sigma) + c2 (log T)^2."""

    sigma: Decimal
    c1: Decimal
    c2: Decimal


def load_zero_density(path="package:zerodensity.csv") -> tuple[ZeroDensityRow, ...]:
    text, where = _read_text(path)
    rows = []
    for lineno, cells in _csv_records(text, where, ("sigma", "c1", "c2")):
        try:
            sigma, c1, c2 = (Decimal(c) for c in cells)
        except (ValueError, ArithmeticError):
            raise DataError(f"{where}:{lineno}: expected sigma,c1,c2") from None
        if not (Decimal("0.5") <= sigma < 1 and c1 > 0 and c2 > 0):
            raise DataError(f"{where}:{lineno}: values out of range")
        rows.append(ZeroDensityRow(sigma, c1, c2))
    for a, b in zip(rows, rows[1:]):
        if not a.sigma < b.sigma:
            raise DataError(f"{where}: sigma must increase strictly ({a.sigma} then {b.sigma})")
    return tuple(rows)


@dataclass(frozen=True)
class ZetaZeroFile:
    ordinates: tuple[Decimal, ...] = field(repr=False)
    source: str = ""

    @property
    def largest(self) -> Decimal:
        return self.ordinates[-1] if self.ordinates else Decimal(0)

    def below(self, height) -> tuple[Decimal, ...]:
        """Ordinates strictly below ``height``."""
        h = Decimal(str(height))
        return self.ordinates[: bisect.bisect_left(self.ordinates, h)]


def parse_zeros(text: str, where: str = "<text>") -> ZetaZeroFile:
    values = []
    for lineno, line in _data_lines(text):
        for token in line.replace(",", " ").split():
            try:
                values.append(Decimal(token))
            except ArithmeticError:
                raise DataError(f"{where}:{lineno}: bad ordinate {token!r}") from None
    if not values:
        raise DataError(f"{where}: no ordinates")
    if not Decimal(14) < values[0] < Decimal("14.2"):
        raise DataError(f"{where}: first ordinate {values[0]} is not the first zero (expected 14.13...)")
    for n, (a, b) in enumerate(zip(values, values[1:]), 2):
        if not a < b:
            raise DataError(f"{where}: ordinate {n} ({b}) does not exceed its predecessor ({a})")
    return ZetaZeroFile(tuple(values), where)


def load_zeros(path="package:zeros.txt") -> ZetaZeroFile:
    text, where = _read_text(path)
    return parse_zeros(text, where)


@dataclass(frozen=True)
class SieveMaximumRow:
    """Sieve maxima D_0..D_5 over primes in [a, b) (see verifier.dk_scan)."""

    a: int
    b: int
    values: tuple[Decimal, ...]

    def D(self, k: int) -> Decimal:
        return self.values[k]


def load_sieve_maxima(path="package:sieve_maxima.csv") -> tuple[SieveMaximumRow, ...]:
    text, where = _read_text(path)
    rows = []
    for lineno, cells in _csv_records(text, where, ("a", "b")):
        try:
            a, b = (int(Decimal(c)) for c in cells[:2])
            values = tuple(Decimal(c) for c in cells[2:])
        except (ValueError, ArithmeticError):
            raise DataError(f"{where}:{lineno}: expected a,b,D0..D5") from None
        if len(values) != 6 or not a < b:
            raise DataError(f"{where}:{lineno}: expected a < b and six maxima")
        rows.append(SieveMaximumRow(a, b, values))
    return tuple(rows)
