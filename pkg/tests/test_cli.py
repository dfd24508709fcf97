import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from latmesh import cli
from latmesh.errors import PrecisionExhausted


def run(args, tmp_path, capsys):
    code = cli.main([*args, "--output-dir", str(tmp_path)])
    out = capsys.readouterr()
    return code, out.out, out.err


def only(tmp_path, pattern):
    files = sorted(tmp_path.glob(pattern))
    assert len(files) == 1, files
    return files[0]


def test_count_stdout_and_files(tmp_path, capsys):
    code, out, _ = run(["count", "--x", "100"], tmp_path, capsys)
    assert code == 0 and out.strip() == "153"
    csv = only(tmp_path, "count-*.csv")
    assert csv.read_text() == "x,D\n100,153\n"
    assert csv.with_suffix(".json").exists()


@pytest.mark.parametrize(
    "args, header",
    [
        (["count", "--x", "10"], "x,D"),
        (["delta", "--x", "100"], "x,D,main,main_err,delta,delta_err"),
        (
            ["moments", "--T", "100"],
            "T,T0,int_delta,int_delta_err,int_delta_sq,int_delta_sq_err,predicted,ratio,sign_changes,sup_abs_delta",
        ),
        (["gab", "--route", "partial", "--box", "10"], "route,box,value,value_err,tail_bound"),
        (["bproc", "--count", "2"], "A,beta,m1,m2,direct_re,direct_im,trans_re,trans_im,residual"),
    ],
)
def test_exact_headers(args, header, tmp_path, capsys):
    code, _, _ = run(args, tmp_path, capsys)
    assert code == 0
    sub = args[0]
    assert only(tmp_path, f"{sub}-*.csv").read_text().splitlines()[0] == header


def test_every_subcommand_runs(tmp_path, capsys):
    cases = {
        "voronoi": ["--H", "4", "--points", "20", "--x-lo", "1000", "--x-hi", "2000"],
        "gterm": ["--x", "1000", "--H", "5"],
        "quads": ["--box", "6"],
        "sigma1": ["--H", "4", "--box", "40"],
        "sigma2": ["--T", "1000", "--H", "8", "--R", "8"],
        "nearpairs": ["--count", "3"],
        "mingap": ["--M", "10"],
        "roth": ["--H", "1000"],
        "meanvalue": ["--T", "1000"],
        "signchanges": ["--T", "2000"],
        "report": ["--T", "100", "1000"],
    }
    for sub, extra in cases.items():
        out = tmp_path / sub
        code = cli.main([sub, *extra, "--output-dir", str(out)])
        capsys.readouterr()
        assert code == 0, sub
        rows = only(out, f"{sub}-*.csv").read_text().splitlines()
        assert rows[0] == ",".join(cli.HEADERS[sub]) and len(rows) > 1, sub


def test_validation_exit_code(tmp_path, capsys):
    code, _, err = run(["count", "--x", "100", "--a", "2", "--b", "2"], tmp_path, capsys)
    assert code == 2 and "ValidationError" in err
    assert not list(tmp_path.glob("*.csv"))


def test_guard_exit_code_names_guard(tmp_path, capsys):
    code, _, err = run(["quads", "--box", "1000", "--mode", "brute"], tmp_path, capsys)
    assert code == 4 and "BoxTooLarge" in err


def test_precision_exit_code(tmp_path, capsys, monkeypatch):
    def boom(cfg, rep):
        raise PrecisionExhausted("could not certify")

    monkeypatch.setitem(cli.RUNNERS, "count", boom)
    code, _, err = run(["count", "--x", "5"], tmp_path, capsys)
    assert code == 3 and "PrecisionExhausted" in err


def test_max_bits_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LATMESH_MAX_BITS", "128")
    code, _, _ = run(["count", "--x", "10"], tmp_path, capsys)
    assert code == 0
    meta = json.loads(only(tmp_path, "count-*.json").read_text())["meta"]
    assert meta["config"]["bits"] is None
    code, _, err = run(["count", "--x", "10", "--bits", "256"], tmp_path / "b", capsys)
    assert code == 2 and "cap" in err


def test_unknown_keys_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"x": ["10"], "colour": "red"}))
    code, _, err = run(["count", "--config", str(cfg)], tmp_path, capsys)
    assert code == 2 and "colour" in err


@pytest.mark.parametrize("text", ['{"x": ["10"], "bits": NaN}', '{"x": ["10"], "x": ["12"]}', "[1, 2]", "{x: 1}"])
def test_config_must_be_strict_json(text, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(text)
    code, _, _ = run(["count", "--config", str(cfg)], tmp_path, capsys)
    assert code == 2


def test_config_types_checked():
    with pytest.raises(cli.ValidationError):
        cli.resolve_config("count", {"x": ["10"], "threads": "4"}, {})
    with pytest.raises(cli.ValidationError):
        cli.resolve_config("gterm", {"x": ["10"], "order": "c"}, {})


def test_flags_override_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"x": ["10"], "b": "3"}))
    code, out, _ = run(["count", "--config", str(cfg), "--x", "100"], tmp_path, capsys)
    # D_{1,3}(100) = 100 + 12 + 3 + 1, with b from the file and x from the flag
    assert code == 0 and out.strip() == "116"
    meta = json.loads(only(tmp_path, "count-*.json").read_text())["meta"]
    assert meta["config"]["x"] == ["100"] and meta["config"]["b"] == "3"


def test_json_report_contents(tmp_path, capsys):
    run(["delta", "--x", "100", "1000"], tmp_path, capsys)
    doc = json.loads(only(tmp_path, "delta-*.json").read_text())
    meta = doc["meta"]
    assert cli.config_hash(meta["config"]) == meta["config_hash"]
    assert set(meta["versions"]) >= {"latmesh", "python", "numpy", "mpmath", "kernels"}
    assert meta["wall_time_s"] >= 0 and isinstance(meta["escalations"], int)
    assert isinstance(doc["warnings"], list)
    assert doc["rows"][0][4]["rad"] > 0


def test_csv_deterministic_across_threads(tmp_path, capsys):
    blobs = []
    for threads in ("1", "3"):
        out = tmp_path / threads
        assert cli.main(["moments", "--T", "200000", "--threads", threads, "--output-dir", str(out)]) == 0
        blobs.append(only(out, "moments-*.csv").read_bytes())
    capsys.readouterr()
    assert blobs[0] == blobs[1]


def test_plots_written(tmp_path, capsys):
    run(["moments", "--T", "100", "1000", "--plots"], tmp_path, capsys)
    gp = only(tmp_path, "moments-*-ratio_vs_T.gp").read_text()
    assert "set logscale x" in gp and "moments-" in gp
    run(["voronoi", "--H", "2", "4", "--points", "10", "--x-lo", "100", "--x-hi", "200", "--plots"], tmp_path, capsys)
    assert "unset logscale" not in only(tmp_path, "voronoi-*-rms_vs_H.gp").read_text()
    run(["delta", "--x", "100", "200", "--plots"], tmp_path, capsys)
    only(tmp_path, "delta-*-delta_trace.gp")


def test_empty_rows_no_plot(tmp_path):
    rep = cli.Report("moments", cli.HEADERS["moments"])
    assert cli.emit_plots(rep, tmp_path, "moments-x") == []
    assert rep.warnings and not list(tmp_path.iterdir())


def test_output_name_pattern(tmp_path, capsys):
    run(["count", "--x", "5"], tmp_path, capsys)
    name = only(tmp_path, "count-*.csv").name
    assert name.startswith("count-") and name.endswith("Z.csv")


@given(st.fractions(min_value=0, max_value=10**12, max_denominator=2**20))
def test_number_formatting_round_trips(q):
    text = cli._fmt(q)
    assert Fraction(text) == q
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    assert ("/" in text) == (d != 1)


def test_decimal_inputs_echo_as_decimals(tmp_path, capsys):
    _, out, _ = run(["delta", "--x", "12345.5"], tmp_path, capsys)
    assert out.startswith("12345.5 ")
