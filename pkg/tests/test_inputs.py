from decimal import Decimal

import pytest

from thetabounds.errors import DataError, RangeError
from thetabounds.inputs import (
    DEFAULT_CONSTANTS,
    load_sieve_maxima,
    load_zero_density,
    load_zeros,
    parse_epsilon_table,
    parse_zeros,
)
from thetabounds.numerics import mp, present


def test_default_constants():
    c = DEFAULT_CONSTANTS
    assert (c.H, c.R, c.c0, c.alpha) == (2445999556030, Decimal("5.573412"), Decimal("1.03883"), Decimal("1.93378e-8"))
    assert abs(c.J - mp.log(10**19)) < 1e-20
    assert abs(c.J0 - mp.log(7 * 10**11)) < 1e-20


def test_overrides_replace_constants():
    c = DEFAULT_CONSTANTS.with_overrides({"R": "5.5666305", "K": "30000"})
    assert str(c.R) == "5.5666305" and c.K == 30000
    with pytest.raises(DataError):
        DEFAULT_CONSTANTS.with_overrides({"bogus": "1"})


def test_floor_lookup_uses_the_row_containing_the_point(eps_table):
    eps, row = eps_table.epsilon_at(30.5)
    assert row.b == 30 and present(eps, 6) == "2.87549e-7"
    eps, row = eps_table.epsilon_at(100)
    assert present(eps, 6) == "2.45299e-12"


def test_lookup_outside_the_table(eps_table):
    with pytest.raises(RangeError):
        eps_table.epsilon_at(19.9)
    with pytest.raises(RangeError):
        eps_table.epsilon_at(eps_table.end + 1)


def test_non_monotone_tables_report_the_suffix_maximum():
    table = parse_epsilon_table("b,b_next,epsilon,method\n20,21,1e-5,TABLE\n21,22,2e-5,TABLE\n22,23,1e-6,TABLE\n")
    eps, row = table.epsilon_at(20)
    assert present(eps, 3) == "2.00e-5" and row.b == 21


@pytest.mark.parametrize(
    "text",
    [
        "b,b_next,epsilon,method\n20,21,1e-5,TABLE\n22,23,1e-6,TABLE\n",  # gap
        "b,b_next,epsilon,method\n20,21,-1e-5,TABLE\n",  # negative
        "b,b_next,epsilon,method\n20,21,1e-5,GUESS\n",  # unknown method
        "b,b_next,epsilon,method\n21,20,1e-5,TABLE\n",  # reversed row
    ],
)
def test_malformed_tables_are_rejected(text):
    with pytest.raises(DataError):
        parse_epsilon_table(text)


def test_zero_density_rows_load(zero_density):
    assert len(zero_density) >= 5
    assert all(0.5 < float(r.sigma) < 1 for r in zero_density)


def test_zeros_file_is_sorted_and_starts_at_the_first_zero():
    zeros = load_zeros()
    assert str(zeros.ordinates[0]).startswith("14.134725141734693")
    assert len(zeros.below(100)) == 29  # N(100) = 29
    assert zeros.largest > 3000


def test_zeros_file_rejects_unsorted_input():
    with pytest.raises(DataError):
        parse_zeros("14.1347\n25.01\n21.02\n")


def test_sieve_maxima_rows(sieve_rows):
    first = sieve_rows[0]
    assert (first.a, first.b) == (1, 100000)
    assert first.D(4) == Decimal("151.224")
    assert load_sieve_maxima() == sieve_rows
