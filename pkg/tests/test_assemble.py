import mpmath
import pytest

from conftest import (
    REPAIRED_ROWS,
    SANDWICH_REQUESTS,
    envelope_failures,
    matches_printed,
    prime_power_sandwich_failures,
)
from thetabounds.assemble import BoundRequest, assemble, choose_ell, parse_threshold
from thetabounds.errors import CoverageError, PreconditionError
from thetabounds.numerics import mid, present


def _bound(providers, k, x0, x1=None):
    return assemble(BoundRequest(k, x0, x0 if x1 is None else x1), providers)


def test_k3_from_published_rows(providers_published):
    res = _bound(providers_published, 3, "19035709163", "1")
    assert res.summary() == "m_3=0.15 M_3=2.4334e-2"
    lines = "\n".join(res.trace_lines())
    assert "C_(27,3)" in lines and "5.0540e-2" in lines
    assert "max B_3" in lines


def test_k0_at_e20(providers_published):
    res = _bound(providers_published, 0, "e^20")
    assert matches_printed(res.m_k.upper, "9.1639e-5")
    assert matches_printed(res.M_k.upper, "4.2676e-5")


def test_k0_upper_side_below_the_table(providers_published):
    res = _bound(providers_published, 0, "e^20", "2")
    assert present(res.M_k, 6) == "1.93378e-8"


def test_k2_at_e35_lower_side(providers_published):
    res = _bound(providers_published, 2, "e^35")
    assert abs(res.m_k.upper / mpmath.mpf("5.9773e-5") - 1) < 0.01


@pytest.mark.xfail(strict=True, reason="the stated upper constant repeats the lower one; the B term from e^J gives 3.9502e-5")
def test_k2_at_e35_upper_side(providers_published):
    res = _bound(providers_published, 2, "e^35")
    assert abs(res.M_k.upper / mpmath.mpf("5.9771e-5") - 1) < 0.01


@pytest.mark.parametrize("k, x0, stated", REPAIRED_ROWS, ids=[f"k{k}-{x}" for k, x, _ in REPAIRED_ROWS])
def test_repaired_constants_hold(providers, k, x0, stated):
    res = _bound(providers, k, x0)
    assert res.m_k.upper <= mpmath.mpf(stated)
    assert res.M_k.upper <= mpmath.mpf(stated)


def test_trace_names_every_contribution(providers):
    res = _bound(providers, 3, "32321")
    sides = {t.side for t in res.trace}
    assert sides == {"lower", "upper"}
    names = " ".join(t.name for t in res.trace)
    for part in ("max B_3", "A_3(", "C_(", "D_3(32321,"):
        assert part in names
    # the reported constants are the largest contributions on each side
    assert res.m_k.upper == max(t.value.upper for t in res.trace if t.side == "lower")
    assert res.M_k.upper == max(t.value.upper for t in res.trace if t.side == "upper")


def test_small_threshold_note(providers):
    res = _bound(providers, 4, "2")
    assert any("(k+1)^(k+1)" in n for n in res.notes)


def test_constants_shrink_as_the_threshold_grows(providers_published):
    for k in (1, 3, 5):
        values = [_bound(providers_published, k, f"e^{u}").m_k.upper for u in (28, 32, 36, 44, 60, 200)]
        assert all(a >= b for a, b in zip(values, values[1:])), (k, values)


def test_large_range_only(providers_published):
    res = _bound(providers_published, 2, "e^30000")
    assert res.case_id == (1, 1)
    assert res.ell_choice == (None, None)


def test_truncated_table_never_helps(eps_table, zero_density):
    start = eps_table.floor_index(50)
    _, full, _ = choose_ell(3, start, eps_table, zero_density)
    cut = next(i for i, r in enumerate(eps_table) if r.b_next >= 5000) + 1
    _, shorter, _ = choose_ell(3, start, eps_table.truncated(cut), zero_density)
    assert shorter.upper >= full.upper
    too_short = eps_table.truncated(eps_table.floor_index(500))
    with pytest.raises(CoverageError):
        choose_ell(3, start, too_short, zero_density)


def test_request_validation():
    with pytest.raises(PreconditionError):
        BoundRequest(6, "e^20", "e^20")
    with pytest.raises(PreconditionError):
        parse_threshold("0.5")


def test_threshold_forms_agree():
    a, _ = parse_threshold("e^35")
    b, _ = parse_threshold("exp(35)")
    c, _ = parse_threshold("1e19")
    assert a == b
    with mpmath.workdps(40):
        assert abs(mid(c) - 19 * mpmath.log(10)) < mpmath.mpf(10) ** -25


@pytest.mark.parametrize("k, x0", SANDWICH_REQUESTS, ids=[f"k{k}-{x}" for k, x in SANDWICH_REQUESTS])
def test_bounds_hold_at_sampled_points(providers, sieve_1e9, random_points, k, x0):
    """theta(x) from the sieve lies between the assembled lower and upper envelopes."""
    res = _bound(providers, k, x0)
    assert envelope_failures(sieve_1e9, k, res.m_k.upper, res.M_k.upper, random_points["sandwich"][x0]) == []


def test_theta_inside_the_prime_power_sandwich(sieve_1e9, random_points):
    assert prime_power_sandwich_failures(sieve_1e9, random_points["cp"]) == []
