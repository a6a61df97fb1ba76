"""Conservative real arithmetic on top of mpmath interval arithmetic.

Every bound constant in this package is evaluated as an interval at a fixed
working precision and then reported through :class:`ConservativeReal`, which
remembers which end of the interval is the safe one to publish.
"""

from __future__ import annotations

import ast
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Union

import mpmath
from mpmath.ctx_iv import MPIntervalContext
from mpmath.ctx_mp import MPContext

from .errors import DomainError

WORKING_DIGITS = 30

iv = MPIntervalContext()
iv.dps = WORKING_DIGITS
mp = MPContext()
mp.dps = WORKING_DIGITS


def set_working_digits(digits: int) -> None:
    """Change the working precision used by every interval evaluation."""
    if not 6 <= digits <= 60:
        raise ValueError(f"working precision {digits} outside [6, 60]")
    iv.dps = digits
    mp.dps = digits


def working_digits() -> int:
    return iv.dps


class Direction(enum.Enum):
    UPPER_SAFE = "upper"
    LOWER_SAFE = "lower"
    EXACT = "exact"


UPPER = Direction.UPPER_SAFE
LOWER = Direction.LOWER_SAFE


def to_iv(x) -> "iv.mpf":
    """Enclose ``x`` in an interval.

    Strings and integers are enclosed exactly (or as tightly as the working
    precision allows); floats are taken at face value through their shortest
    decimal representation, so ``0.94`` means the decimal 0.94.
    """
    if isinstance(x, ConservativeReal):
        return x.interval
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite input {x!r}")
        return iv.mpf(repr(x))
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    if hasattr(x, "_mpi_"):
        return x
    if hasattr(x, "_mpf_"):
        return iv.mpf(mpmath.mpf(x))
    return iv.mpf(str(x) if not isinstance(x, (int, str)) else x)


def lo(x) -> mpmath.mpf:
    return mp.make_mpf(to_iv(x)._mpi_[0])


def hi(x) -> mpmath.mpf:
    return mp.make_mpf(to_iv(x)._mpi_[1])


def mid(x) -> mpmath.mpf:
    a, b = lo(x), hi(x)
    return mp.fadd(a, b) / 2


@dataclass(frozen=True)
class ConservativeReal:
    """An enclosure ``[lower, upper]`` of a real quantity plus the side to report.

    ``value`` and ``err`` give the midpoint/radius view of the same enclosure;
    ``bound`` is the endpoint that is safe to publish for ``direction``.
    """

    lower: mpmath.mpf
    upper: mpmath.mpf
    direction: Direction = Direction.UPPER_SAFE
    saturated: bool = False

    @classmethod
    def from_interval(cls, x, direction: Direction = UPPER) -> "ConservativeReal":
        x = to_iv(x)
        a, b = mp.make_mpf(x._mpi_[0]), mp.make_mpf(x._mpi_[1])
        saturated = not (mp.isfinite(a) and mp.isfinite(b))
        return cls(a, b, direction, saturated)

    @classmethod
    def exact(cls, x) -> "ConservativeReal":
        return cls.from_interval(x, Direction.EXACT)

    @property
    def interval(self):
        return iv.mpf([self.lower, self.upper])

    @property
    def value(self) -> mpmath.mpf:
        return mp.fadd(self.lower, self.upper) / 2

    @property
    def err(self) -> mpmath.mpf:
        v = self.value
        return max(mp.fsub(self.upper, v, rounding="u"), mp.fsub(v, self.lower, rounding="u"))

    @property
    def bound(self) -> mpmath.mpf:
        """The endpoint to publish: never understates an upper bound, never overstates a lower one."""
        if self.direction is Direction.LOWER_SAFE:
            return self.lower
        if self.direction is Direction.UPPER_SAFE:
            return self.upper
        return self.value

    def with_direction(self, direction: Direction) -> "ConservativeReal":
        return ConservativeReal(self.lower, self.upper, direction, self.saturated)

    def __float__(self) -> float:
        return float(self.bound)

    def __repr__(self) -> str:
        return f"ConservativeReal({present(self, 8)}, {self.direction.value})"

    def _combine(self, other, op) -> "ConservativeReal":
        return ConservativeReal.from_interval(op(self.interval, to_iv(other)), self.direction)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __truediv__(self, other):
        b = to_iv(other)
        if lo(b) <= 0 <= hi(b):
            raise DomainError("division by an interval containing zero")
        return self._combine(b, lambda x, y: x / y)

    def __lt__(self, other):
        return self.bound < _bound_of(other)

    def __le__(self, other):
        return self.bound <= _bound_of(other)

    def __gt__(self, other):
        return self.bound > _bound_of(other)

    def __ge__(self, other):
        return self.bound >= _bound_of(other)


def _bound_of(x):
    return x.bound if isinstance(x, ConservativeReal) else x


def cmax(*values: ConservativeReal) -> ConservativeReal:
    """Upper-safe maximum of several enclosures."""
    if len(values) == 1 and not isinstance(values[0], ConservativeReal):
        values = tuple(values[0])
    return ConservativeReal(
        max(v.lower for v in values),
        max(v.upper for v in values),
        values[0].direction,
        any(v.saturated for v in values),
    )


# ---------------------------------------------------------------------------
# expression evaluation


def _checked_log(x):
    if lo(x) <= 0:
        raise DomainError(f"log of non-positive argument {mp.nstr(lo(x), 8)}")
    return iv.log(x)


def _checked_sqrt(x):
    if lo(x) < 0:
        raise DomainError(f"sqrt of negative argument {mp.nstr(lo(x), 8)}")
    return iv.sqrt(x)


def _checked_div(a, b):
    if lo(b) <= 0 <= hi(b):
        raise DomainError("division by an interval containing zero")
    return a / b


# exp of anything beyond this would need more than ~10^8 bits of exponent;
# such results saturate instead of being computed
EXP_ARG_LIMIT = mp.mpf(10) ** 8


def _checked_exp(x):
    if hi(x) > EXP_ARG_LIMIT:
        low = lo(iv.exp(min(lo(x), EXP_ARG_LIMIT)))
        return iv.mpf([low, mp.inf])
    if lo(x) < -EXP_ARG_LIMIT:
        return iv.mpf([0, hi(iv.exp(max(hi(x), -EXP_ARG_LIMIT)))])
    return iv.exp(x)


def _checked_pow(a, b):
    if lo(b) == hi(b) and hi(b) == int(hi(b)):
        n = int(hi(b))
        size = max(abs(lo(a)), abs(hi(a)))
        if size <= 1 or abs(n) * mp.log(size) <= EXP_ARG_LIMIT:
            return a**n
        if lo(a) <= 0:
            raise DomainError("integer power too large to evaluate for a base that may be non-positive")
    elif lo(a) <= 0:
        raise DomainError("non-integer power of a non-positive base")
    return _checked_exp(b * iv.log(a))


FUNCTIONS: dict[str, Callable] = {
    "exp": _checked_exp,
    "log": _checked_log,
    "sqrt": _checked_sqrt,
    "pow": _checked_pow,
}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: _checked_div,
    ast.Pow: _checked_pow,
}


class _Evaluator(ast.NodeVisitor):
    def __init__(self, source: str, names: Mapping[str, object]):
        self.source = source
        self.names = {"pi": iv.pi, "e": iv.e}
        self.names.update({k: to_iv(v) for k, v in names.items()})

    def generic_visit(self, node):
        raise DomainError(f"unsupported syntax: {type(node).__name__}")

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Constant(self, node):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise DomainError(f"unsupported constant {node.value!r}")
        text = ast.get_source_segment(self.source, node) or repr(node.value)
        return iv.mpf(text)

    def visit_Name(self, node):
        try:
            return self.names[node.id]
        except KeyError:
            raise DomainError(f"unknown name {node.id!r}") from None

    def visit_UnaryOp(self, node):
        x = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return -x
        if isinstance(node.op, ast.UAdd):
            return x
        raise DomainError(f"unsupported operator {type(node.op).__name__}")

    def visit_BinOp(self, node):
        try:
            op = _BINOPS[type(node.op)]
        except KeyError:
            raise DomainError(f"unsupported operator {type(node.op).__name__}") from None
        return op(self.visit(node.left), self.visit(node.right))

    def visit_Call(self, node):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or node.keywords:
            raise DomainError("only exp, log, sqrt and pow calls are allowed")
        args = [self.visit(a) for a in node.args]
        return FUNCTIONS[node.func.id](*args)


Expression = Union[str, Callable[..., object]]


def eval_conservative(expr: Expression, direction: Direction = UPPER, **names) -> ConservativeReal:
    """Evaluate ``expr`` over intervals and wrap the enclosure.

    ``expr`` is either source text using ``+ - * / **``, ``exp``, ``log``,
    ``sqrt`` and ``pow`` (decimal literals are enclosed as decimals, not as
    their binary approximations), or a callable that receives the keyword
    arguments as intervals and returns an interval.

    >>> present(eval_conservative("0.94*exp(-10)"), 6)
    '4.26760e-5'
    """
    if callable(expr):
        result = expr(**{k: to_iv(v) for k, v in names.items()})
    else:
        tree = ast.parse(expr.strip(), mode="eval")
        result = _Evaluator(expr.strip(), names).visit(tree)
    out = ConservativeReal.from_interval(result, direction)
    if mp.isnan(out.lower) or mp.isnan(out.upper):
        raise DomainError(f"expression {expr!r} is undefined on its inputs")
    return out


# ---------------------------------------------------------------------------
# presentation


def _to_fraction(x: mpmath.mpf) -> Fraction:
    sign, man, exp, _ = x._mpf_
    v = Fraction(int(man)) * (Fraction(2) ** exp)
    return -v if sign else v


def _round_sig(v: Fraction, digits: int, mode: str) -> tuple[int, int]:
    """Round ``v > 0`` to ``digits`` significant digits; returns (mantissa, exponent10)."""
    e10 = math.floor(math.log10(v.numerator) - math.log10(v.denominator))
    # correct the float estimate of the decimal exponent
    while Fraction(10) ** e10 > v:
        e10 -= 1
    while Fraction(10) ** (e10 + 1) <= v:
        e10 += 1
    scaled = v / Fraction(10) ** (e10 - digits + 1)
    if mode == "up":
        q = math.ceil(scaled)
    elif mode == "down":
        q = math.floor(scaled)
    else:
        q = round(scaled)
    if q >= 10**digits:
        q //= 10
        e10 += 1
    return q, e10


def format_decimal(mantissa: int, e10: int, digits: int) -> str:
    """Render ``mantissa * 10**(e10 - digits + 1)`` in the table style used throughout."""
    text = str(mantissa)
    if -1 <= e10 <= 3:
        point = e10 + 1
        if point <= 0:
            s = "0." + "0" * (-point) + text
        elif point >= len(text):
            s = text + "0" * (point - len(text))
        else:
            s = text[:point] + "." + text[point:]
        if "." in s:
            s = s.rstrip("0").rstrip(".")
        return s
    body = text[0] + ("." + text[1:] if len(text) > 1 else "")
    return f"{body}e{e10}"


def present(v: ConservativeReal, sig_digits: int = 5) -> str:
    """Decimal text for ``v`` rounded toward its safe side.

    Values with a decimal exponent in [-1, 3] print in plain notation with
    trailing zeros dropped ("0.15", "151.3"); everything else prints as
    compact scientific notation with exactly ``sig_digits`` digits
    ("1.8078e-3").

    A tight enclosure of a short decimal (as produced when a decimal input
    such as 1.93378e-8 is converted to binary) prints as that decimal rather
    than one unit higher.
    """
    if not 3 <= sig_digits <= 12:
        raise ValueError(f"sig_digits {sig_digits} outside [3, 12]")
    if not isinstance(v, ConservativeReal):
        v = ConservativeReal.exact(v)
    if v.saturated:
        return "inf" if v.direction is not Direction.LOWER_SAFE else "-inf"
    x = _to_fraction(v.bound)
    if x == 0:
        return "0"
    negative = x < 0
    mode = {Direction.UPPER_SAFE: "up", Direction.LOWER_SAFE: "down"}.get(v.direction, "nearest")
    if negative:
        mode = {"up": "down", "down": "up"}.get(mode, mode)
    q, e10 = _round_sig(abs(x), sig_digits, mode)
    snapped = _snap(v, sig_digits)
    if snapped is not None:
        q, e10 = snapped
    text = format_decimal(q, e10, sig_digits)
    return "-" + text if negative else text


def _snap(v: ConservativeReal, digits: int):
    """(mantissa, exponent) of a ``digits``-digit decimal inside a near-point enclosure, else None."""
    lower, upper = _to_fraction(v.lower), _to_fraction(v.upper)
    if lower <= 0:
        return None
    if (upper - lower) > upper * Fraction(1, 10 ** (working_digits() - 6)):
        return None
    q, e10 = _round_sig((lower + upper) / 2, digits, "nearest")
    d = Fraction(q) * Fraction(10) ** (e10 - digits + 1)
    return (q, e10) if lower <= d <= upper else None


def parse_decimal(text: str) -> Fraction:
    """Parse table-style decimal text back to an exact rational."""
    return Fraction(text.strip())
