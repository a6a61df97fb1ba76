from decimal import Decimal

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetabounds.errors import CoverageError, HypothesisError, RangeError
from thetabounds.inputs import load_zeros
from thetabounds.numerics import iv, present
from thetabounds.psi_epsilon import (
    ButheConfig,
    PTParams,
    buthe_E2,
    buthe_E3,
    buthe_epsilon,
    logan_kernel,
    pt_epsilon,
    pt_optimize,
    pt_s0,
    pt_s1,
    small_range_epsilon,
    zero_density_row_for,
)

# independent evaluation of 0.16 (1 + 1/x0) / sinh(c) e^(0.71 sqrt(c eps)) log(c/eps)
# at 50 digits for c = 3, eps = 1e-3, x0 = 100
E2_ORACLE = "0.13427348174052895492"


@pytest.mark.parametrize("b, printed", [(20, "4.26760e-5"), (30, "2.87549e-7"), (40, "1.93378e-8")])
def test_small_range_epsilon(b, printed):
    assert present(small_range_epsilon(b), 6) == printed


def test_small_range_epsilon_switches_to_the_cap():
    # 0.94 e^(-b/2) falls below 1.93378e-8 a little after b = 35.2
    assert present(small_range_epsilon(35), 6) == "2.36034e-8"
    assert present(small_range_epsilon(36), 6) == "1.93378e-8"


def test_small_range_epsilon_domain():
    with pytest.raises(RangeError):
        small_range_epsilon(2)
    with pytest.raises(RangeError):
        small_range_epsilon(44)
    assert present(small_range_epsilon(iv.log(10**19)), 6) == "1.93378e-8"


def test_perron_pieces_are_positive_and_shrink_with_T():
    assert pt_s0(3000, 2900).upper < pt_s0(3000, 2800).upper
    assert pt_s1(3000, Decimal("0.01"), 100).upper > 0


def test_zero_density_row_selection(zero_density):
    row = zero_density_row_for(Decimal("0.01"), zero_density)
    assert row.sigma <= Decimal("0.99")
    assert all(r.sigma <= row.sigma for r in zero_density if r.sigma <= Decimal("0.99"))


def test_perron_hypotheses_are_enforced(zero_density):
    row = zero_density_row_for(Decimal("0.01"), zero_density)
    with pytest.raises(HypothesisError):
        pt_epsilon(500, 600, PTParams(Decimal("0.01"), Decimal(2), Decimal(100), row))  # b1 < 1000
    with pytest.raises(HypothesisError):
        pt_epsilon(3000, 3500, PTParams(Decimal("0.05"), Decimal(2), Decimal(100), row))  # delta too large
    with pytest.raises(HypothesisError):
        pt_epsilon(3000, 3500, PTParams(Decimal("0.01"), Decimal(2), Decimal(20), row))  # T below H


def test_single_grid_point_optimum_is_that_point(zero_density):
    d, lam, log_T = Decimal("0.01"), Decimal("1.5"), Decimal("200")
    eps, params = pt_optimize(3000, 3500, zero_density, deltas=[d], lambdas=[lam], log_T_values=[log_T], refine=False)
    direct = pt_epsilon(3000, 3500, PTParams(d, lam, log_T, zero_density_row_for(d, zero_density)))
    assert (params.delta, params.lam, params.log_T) == (d, lam, log_T)
    assert eps.upper == direct.upper


def test_logan_kernel_at_zero_matches_its_series():
    # (c / sinh c) * sinh(c)/c written as a ratio of the two power series
    c = mpmath.mpf(3)
    num = mpmath.nsum(lambda n: c ** (2 * n) / mpmath.factorial(2 * n + 1), [0, mpmath.inf])
    assert abs(logan_kernel(3, "1e-3", 0) - (c / mpmath.sinh(c)) * num) < mpmath.mpf(10) ** -14
    assert abs(logan_kernel(3, "1e-3", 0) - 1) < mpmath.mpf(10) ** -25


def test_logan_kernel_at_the_switch_point():
    with mpmath.workdps(50):
        assert abs(logan_kernel(3, "1e-3", 3000) - 3 / mpmath.sinh(3)) < mpmath.mpf(10) ** -25


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-1e5, max_value=1e5, allow_nan=False))
def test_logan_kernel_is_even_and_bounded(xi):
    v = logan_kernel(3, "1e-3", xi)
    assert v == logan_kernel(3, "1e-3", -xi)
    assert abs(v) <= 1 + mpmath.mpf(10) ** -25


def test_buthe_e2_matches_independent_evaluation():
    cfg = ButheConfig(Decimal(3), Decimal("1e-3"), Decimal(100), Decimal(0), Decimal(1), Decimal(1))
    v = buthe_E2(cfg)
    with mpmath.workdps(50):
        oracle = mpmath.mpf(E2_ORACLE)
        assert v.lower <= oracle * (1 + mpmath.mpf(10) ** -20)
        assert v.upper >= oracle * (1 - mpmath.mpf(10) ** -20)


def test_buthe_e3_with_no_eligible_zeros_is_two_over_x0():
    zeros = load_zeros()
    cfg = ButheConfig(Decimal(3), Decimal("0.5"), Decimal(100), Decimal(0), Decimal(1), Decimal(1))  # c/eps = 6
    assert present(buthe_E3(cfg, zeros), 6) == "2.00000e-2"


def test_buthe_epsilon_desk_scale():
    zeros = load_zeros()
    cfg = ButheConfig(Decimal(3), Decimal("9.9e-4"), Decimal("1e8"), Decimal("0.5"), Decimal(1), Decimal(1))
    total = buthe_epsilon(cfg, zeros)
    assert total.lower > 0
    assert total.upper >= buthe_E2(cfg).upper


def test_buthe_hypotheses():
    zeros = load_zeros()
    with pytest.raises(HypothesisError):
        buthe_epsilon(ButheConfig(Decimal(2), Decimal("1e-4"), Decimal(100), Decimal(0), Decimal(1), Decimal(1)), zeros)
    with pytest.raises(HypothesisError):  # B0 <= 1
        buthe_epsilon(ButheConfig(Decimal(3), Decimal("9.9e-4"), Decimal(100), Decimal(0), Decimal(1), Decimal(10)), zeros)
    with pytest.raises(CoverageError):  # c/eps beyond the zeros file
        buthe_epsilon(ButheConfig(Decimal(3), Decimal("1e-4"), Decimal("1e8"), Decimal(0), Decimal(1), Decimal(1)), zeros)
