import io
from decimal import Decimal

import pytest

from conftest import printed_ulp, read_fixture
from thetabounds.cli import EXIT_DATA, EXIT_OK, EXIT_PRECONDITION, build_config, main, parse_config_text
from thetabounds.errors import DataError, PreconditionError
from thetabounds.numerics import set_working_digits, working_digits
from thetabounds.report import write_report
from thetabounds.tables import TableContext, emit_table, parse_grid, parse_windows, table_row_values


@pytest.fixture(autouse=True)
def restore_precision():
    before = working_digits()
    yield
    set_working_digits(before)


@pytest.fixture(scope="module")
def ctx(eps_table, zero_density, sieve_rows):
    return TableContext(eps_table, zero_density, sieve_rows)


def agrees_with_printed(emitted: str, printed: str) -> bool:
    """Emitted cells round up; a printed cell may round to nearest and sit one unit lower."""
    return Decimal(emitted) - Decimal(printed) in (0, printed_ulp(printed))


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def test_grid_parsing():
    labels = [p.label for p in parse_grid("20..22, log(5e10), 30..31:0.5")]
    assert labels == ["20", "21", "22", "log(5e10)", "30", "30.5", "31"]
    with pytest.raises(DataError):
        parse_grid("20..30:0")
    with pytest.raises(DataError):
        parse_grid("foo(3)")
    assert parse_windows("1:1e5,1e5:5e5") == [(1, 100000), (100000, 500000)]
    with pytest.raises(DataError):
        parse_windows("5:2")


def test_ck_table_matches_fixture(ctx):
    rows = table_row_values(emit_table("ck", "20..24,26..31,33..43", ctx))
    printed = {r[0]: r[1:] for r in read_fixture("bias_lower_ck.tsv")}
    for row in rows:
        for got, want in zip(row[1:6], printed[row[0]]):
            assert agrees_with_printed(got, want[:6] + want[7:])


def test_bk_table_matches_fixture(ctx):
    rows = table_row_values(emit_table("bk", None, ctx))
    assert [r[0] for r in rows] == [str(b) for b in range(20, 31)]
    printed = {r[0]: r[1:] for r in read_fixture("middle_range_bk.tsv")}
    for row in rows:
        for got, want in zip(row[2:], printed[row[0]]):
            assert agrees_with_printed(got, want)


def test_empty_grid_gives_header_only(ctx):
    text = emit_table("ak", "", ctx)
    lines = text.splitlines()
    assert all(l.startswith("#") for l in lines)
    assert lines[0] == "# table\tak"
    assert any(l.startswith("# precision") for l in lines)


def test_unknown_table(ctx):
    with pytest.raises(PreconditionError):
        emit_table("nope", None, ctx)


def test_dk_table_from_published_rows(ctx):
    rows = table_row_values(emit_table("dk", "1e9:1e10", ctx))
    assert rows[0][-1] == "published"


def test_tables_are_deterministic(ctx):
    assert emit_table("theta_eps", None, ctx) == emit_table("theta_eps", None, ctx)


def test_report_writes_tables_and_figures(ctx, tmp_path):
    paths = write_report(tmp_path, ctx)
    names = {p.name for p in paths}
    assert {"ak.tsv", "ck.tsv", "epsilon.png", "bias_lower.png"} <= names
    assert "dk.tsv" not in names
    assert all(p.stat().st_size > 0 for p in paths)


def test_cli_bound():
    code, text = run("bound", "--k", "3", "--x0", "19035709163", "--x1", "1", "--no-live-sieve")
    assert code == EXIT_OK
    assert text.splitlines()[0] == "m_3=0.15 M_3=2.4334e-2"


@pytest.mark.parametrize(
    "method, expected",
    [("small", "2.87549e-7"), ("table", "2.87549e-7")],
)
def test_cli_epsilon(method, expected):
    code, text = run("epsilon", "--b", "30", "--method", method)
    assert code == EXIT_OK
    value, provenance = text.splitlines()[:2]
    assert value == expected
    assert provenance.startswith("# ")


def test_cli_tables_to_file(tmp_path):
    out = tmp_path / "ck.tsv"
    assert run("tables", "--id", "ck", "--grid", "27", "--out", str(out))[0] == EXIT_OK
    assert table_row_values(out.read_text())[0][3] == "5.0540e-2"


def test_cli_verify(tmp_path):
    ckpt = tmp_path / "acc.txt"
    code, text = run("verify", "--limit", "1e6", "--emit-dk", "--checkpoint", str(ckpt))
    assert code == EXIT_OK
    assert "passed" in text
    assert "151.224" in text
    assert ckpt.exists()
    code, text = run("verify", "--limit", "2e6", "--checkpoint", str(ckpt), "--resume")
    assert code == EXIT_OK
    assert "primes up to 2000000: 148933" in text


@pytest.mark.parametrize(
    "argv",
    [
        ("bound", "--k", "7", "--x0", "e^20", "--x1", "e^20"),
        ("epsilon", "--b", "2", "--method", "small"),
        ("verify", "--limit", "1"),
        ("tables", "--id", "ak", "--precision", "40"),
    ],
    ids=["k-range", "epsilon-domain", "verify-limit", "precision"],
)
def test_precondition_exit_code(argv):
    assert run(*argv)[0] == EXIT_PRECONDITION


def test_data_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("this line has no equals sign\n")
    assert run("epsilon", "--b", "30", "--config", str(bad))[0] == EXIT_DATA
    missing = tmp_path / "missing.cfg"
    missing.write_text(f"epsilon_csv={tmp_path / 'nowhere.csv'}\n")
    assert run("epsilon", "--b", "30", "--config", str(missing))[0] == EXIT_DATA


def test_config_file_and_environment(tmp_path, monkeypatch):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# local run\nprecision = 20\nc0 = 1.05\n")
    assert parse_config_text(cfg_file.read_text()) == {"precision": "20", "c0": "1.05"}
    monkeypatch.setenv("THETABOUNDS_CONFIG", str(cfg_file))
    cfg = build_config(None)
    assert cfg.precision == 20
    assert str(cfg.constants.c0) == "1.05"
    # flags win over the file
    assert build_config(None, {"precision": "25"}).precision == 25
    with pytest.raises(DataError):
        build_config(None, {"colour": "blue"})


def test_cli_is_deterministic():
    assert run("tables", "--id", "ck", "--grid", "20..22") == run("tables", "--id", "ck", "--grid", "20..22")
