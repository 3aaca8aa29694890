"""Command-line contract: outputs, files, exit codes, reproducibility."""

import pytest

from ccpnet import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_kv(stdout):
    pairs = {}
    for line in stdout.splitlines():
        for tok in line.split():
            if "=" in tok:
                key, val = tok.split("=", 1)
                pairs.setdefault(key, []).append(val)
    return pairs


# ---------------------------------------------------------------------------
# threshold
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["threshold", "--ce", "bis-2010h1", "--rho", "0"], 461),
        (["threshold", "--ce", "bis-2010h1", "--alpha", "credit=3", "--rho", "0"], 54),
        (["threshold", "--ce", "bis-2010h1", "--alpha", "credit=3", "--rho", "0.1"], 17),
        (["threshold", "--ce", "bis-2010h1", "--alpha", "credit=2", "--rho", "0.2"], 11),
        (["threshold", "--ce", "equal:6", "--rho", "0"], 23),
    ],
)
def test_threshold_values(capsys, argv, expected):
    code, out, _ = run_cli(capsys, *argv)
    assert code == 0
    kv = parse_kv(out)
    assert kv["n_star"] == [str(expected)]
    # three curve rows around the crossing
    assert len(kv["N"]) == 3


def test_threshold_curves_show_crossing(capsys):
    code, out, _ = run_cli(capsys, "threshold", "--ce", "equal:6", "--rho", "0")
    kv = parse_kv(out)
    rows = list(zip(kv["N"], kv["bilateral_ee"], kv["ccp_ee"]))
    at = {int(n): (float(b), float(c)) for n, b, c in rows}
    assert at[23][1] < at[23][0]
    assert at[22][1] >= at[22][0]


def test_threshold_ce_from_file(capsys, tmp_path):
    path = tmp_path / "ce.csv"
    path.write_text(
        "class,exposure\n"
        "commodity,457\nequity,706\nfx,2524\nrates,17533\ncredit,1666\nother,1788\n"
    )
    code, out, _ = run_cli(
        capsys, "threshold", "--ce", str(path), "--cleared", "credit", "--rho", "0"
    )
    assert code == 0
    assert parse_kv(out)["n_star"] == ["461"]


def test_threshold_ce_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("class,exposure\ncredit\n")
    assert run_cli(capsys, "threshold", "--ce", str(bad))[0] == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run_cli(capsys, "threshold", "--ce", str(empty))[0] == 2


def test_threshold_bad_inputs_exit_2(capsys):
    assert run_cli(capsys, "threshold", "--ce", "unknown-set")[0] == 2
    assert run_cli(capsys, "threshold", "--alpha", "nope=3")[0] == 2
    assert run_cli(capsys, "threshold", "--alpha", "credit")[0] == 2
    assert run_cli(capsys, "threshold", "--cleared", "missing")[0] == 2
    assert run_cli(capsys, "threshold", "--ce", "equal:0")[0] == 2
    assert run_cli(capsys, "threshold", "--ce", "equal:six")[0] == 2


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------


def test_surface_single_cell_matches_threshold(capsys, tmp_path):
    out_file = tmp_path / "surf.csv"
    code, out, _ = run_cli(
        capsys,
        "surface",
        "--alpha-grid", "3:3:1",
        "--rho-grid", "0.1:0.1:1",
        "--out", str(out_file),
    )
    assert code == 0
    rows = out_file.read_text().splitlines()
    assert rows[0] == "alpha,rho,n_star"
    assert rows[1].split(",")[2] == "17"


def test_surface_monotone_and_corner(capsys, tmp_path):
    out_file = tmp_path / "surf.csv"
    code, _, _ = run_cli(
        capsys,
        "surface",
        "--alpha-grid", "1:3:5",
        "--rho-grid", "0:0.2:5",
        "--out", str(out_file),
    )
    assert code == 0
    rows = [line.split(",") for line in out_file.read_text().splitlines()[1:]]
    grid = {}
    for alpha, rho, n in rows:
        grid.setdefault(float(alpha), []).append(int(n))
    assert grid[1.0][0] == 461
    for series in grid.values():  # each row of fixed alpha, rho ascending
        assert all(a >= b for a, b in zip(series, series[1:]))


def test_surface_bad_grid_exits_2(capsys, tmp_path):
    code, _, _ = run_cli(
        capsys,
        "surface",
        "--alpha-grid", "1:3",
        "--rho-grid", "0:0.2:5",
        "--out", str(tmp_path / "s.csv"),
    )
    assert code == 2


# ---------------------------------------------------------------------------
# scenarios + report
# ---------------------------------------------------------------------------


def _scen_args(tmp_path, sub="run", *extra):
    return [
        "scenarios",
        "--paths", "1000",
        "--seed", "5",
        "--out", str(tmp_path / sub),
        *extra,
    ]


def test_scenarios_run_and_outputs(capsys, tmp_path):
    code, out, err = run_cli(
        capsys,
        "scenarios",
        "--paths", "20000",
        "--seed", "5",
        "--threads", "2",
        "--out", str(tmp_path / "run"),
    )
    assert code == 0
    kv = parse_kv(out)
    assert kv["scenario"] == ["no_ccp", "irs_ccp", "cds_ccp", "two_ccps", "joint_ccp"]
    ratios = [float(v) for v in kv["total_ee_ratio"]]
    assert ratios[0] == 1.0
    # default flags reproduce the reference reduction ratios
    for got, ref in zip(ratios[1:], (0.74, 1.02, 0.64, 0.56)):
        assert got == pytest.approx(ref, abs=0.02)
    for name in ("file_dump", "file_mean_max", "file_ratios_expected_exposure"):
        assert name in kv
        path = kv[name][0]
        assert open(path).read()
    assert "running 5 scenarios" in err  # progress goes to stderr only


def test_scenarios_byte_identical_across_runs_and_threads(capsys, tmp_path):
    run_cli(capsys, *_scen_args(tmp_path, "a"))
    run_cli(capsys, *_scen_args(tmp_path, "b"))
    run_cli(capsys, *_scen_args(tmp_path, "c", "--threads", "2"))
    ref = (tmp_path / "a" / "report.csv").read_bytes()
    assert (tmp_path / "b" / "report.csv").read_bytes() == ref
    assert (tmp_path / "c" / "report.csv").read_bytes() == ref


def test_scenarios_config_file_with_flag_overrides(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("paths = 1000\nseed = 5\nrho = 0.1\nmirror_dealers = false\n")
    code, out, _ = run_cli(
        capsys,
        "scenarios",
        "--config", str(cfg),
        "--seed", "6",
        "--out", str(tmp_path / "cfg_run"),
    )
    assert code == 0
    text = (tmp_path / "cfg_run" / "report.csv").read_text()
    assert "# seed = 6" in text  # flag overrides config file


def test_scenarios_analytic_ee_invariant_to_paths(capsys, tmp_path):
    """Path count moves the MC estimates and their standard errors, never the
    closed-form expected-exposure columns."""
    run_cli(capsys, "scenarios", "--paths", "1000", "--seed", "5", "--out", str(tmp_path / "p1"))
    run_cli(capsys, "scenarios", "--paths", "2000", "--seed", "5", "--out", str(tmp_path / "p2"))
    a = (tmp_path / "p1" / "analytic_ee.csv").read_bytes()
    b = (tmp_path / "p2" / "analytic_ee.csv").read_bytes()
    assert a == b
    assert (tmp_path / "p1" / "report.csv").read_text() != (
        tmp_path / "p2" / "report.csv"
    ).read_text()


def test_scenarios_t3_run_skips_analytic_table(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, *_scen_args(tmp_path, "t3", "--marginal", "credit=t3")
    )
    assert code == 0
    assert not (tmp_path / "t3" / "analytic_ee.csv").exists()
    assert (tmp_path / "t3" / "report.csv").exists()


def test_scenarios_dump_paths(capsys, tmp_path):
    code, out, _ = run_cli(capsys, *_scen_args(tmp_path, "dump", "--dump-paths"))
    assert code == 0
    kv = parse_kv(out)
    lines = open(kv["file_paths"][0]).read().splitlines()
    assert lines[0] == "scenario,dealer,value"
    assert len(lines) == 1 + 5 * 20 * 1000


def test_scenarios_level_flag(capsys, tmp_path):
    code, _, _ = run_cli(capsys, *_scen_args(tmp_path, "lvl", "--level", "0.95"))
    assert code == 0
    text = (tmp_path / "lvl" / "report.csv").read_text()
    assert "# level = 0.95" in text
    assert run_cli(capsys, *_scen_args(tmp_path, "lvl2", "--level", "1.5"))[0] == 2


def test_scenarios_bad_inputs_exit_2(capsys, tmp_path):
    assert run_cli(capsys, *_scen_args(tmp_path, "x", "--paths", "10"))[0] == 2
    assert run_cli(capsys, *_scen_args(tmp_path, "y", "--beta", "swaps"))[0] == 2
    assert run_cli(capsys, *_scen_args(tmp_path, "z", "--marginal", "credit=cauchy"))[0] == 2
    assert (
        run_cli(capsys, "scenarios", "--notionals", "/missing.csv", "--paths", "1000")[0]
        == 2
    )


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["threshold", "--bogus"])
    assert exc.value.code == 2


def test_report_rerenders_tables(capsys, tmp_path):
    run_cli(capsys, *_scen_args(tmp_path, "orig"))
    code, out, _ = run_cli(
        capsys,
        "report",
        "--dump", str(tmp_path / "orig" / "report.csv"),
        "--out", str(tmp_path / "rerender"),
    )
    assert code == 0
    a = (tmp_path / "orig" / "ratios_expected_exposure.csv").read_text()
    b = (tmp_path / "rerender" / "ratios_expected_exposure.csv").read_text()
    assert _strip_backend(a) == _strip_backend(b)


def _strip_backend(text):
    return "\n".join(l for l in text.splitlines() if not l.startswith("# backend"))


def test_report_missing_dump_exits(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, "report", "--dump", str(tmp_path / "none.csv"), "--out", str(tmp_path)
    )
    assert code == 3  # runtime error: unreadable file
