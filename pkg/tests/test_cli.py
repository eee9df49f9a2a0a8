import pytest

from stokesbc.cli import (ConfigError, StudyConfig, emit_table, main,
                          run_convergence, run_counterexample)
from stokesbc.errors import ConvergenceRecord


def test_counterexample_values():
    report = run_counterexample()
    assert abs(report.flux_exact) <= 1e-12
    assert report.flux_l2 == pytest.approx(3 / 16, abs=1e-12)
    assert report.flux_carstensen == pytest.approx(1 / 8, abs=1e-12)
    assert report.passed
    assert all("PASS" in line for line in report.lines())


@pytest.mark.parametrize("kwargs,fragment", [
    (dict(domain="circle"), "domain"),
    (dict(alpha_sing=-1.5), "alpha"),
    (dict(pairing="p2p0"), "pairing"),
    (dict(projector="clement"), "projector"),
    (dict(compat="local"), "compat"),
    (dict(levels=1), "levels"),
    (dict(quad_degree=0), "quad-degree"),
    (dict(alpha_reg=-1.0), "alpha-reg"),
    (dict(output="json"), "output"),
    (dict(projector="lagrange", alpha_sing=-0.1), "lagrange"),
])
def test_config_validation_messages(kwargs, fragment):
    config = StudyConfig(**kwargs)
    with pytest.raises(ConfigError) as err:
        config.validate()
    assert fragment in str(err.value)


def small_records():
    return [
        ConvergenceRecord(level=1, h=0.5, n_dofs=10,
                          err_l2_velocity=0.04),
        ConvergenceRecord(level=2, h=0.25, n_dofs=34,
                          err_l2_velocity=0.01, eoc_l2_velocity=2.0),
    ]


def test_emit_table_single_record_has_no_eoc():
    text = emit_table(small_records()[:1], "markdown")
    assert "| -" in text


def test_emit_table_rejects_empty():
    with pytest.raises(ValueError):
        emit_table([], "csv")


def test_csv_roundtrip():
    records = small_records()
    text = emit_table(records, "csv")
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    for rec, line in zip(records, lines[1:]):
        fields = dict(zip(header, line.split(",")))
        for name in ("h", "err_l2_velocity"):
            assert float(fields[name]) == pytest.approx(
                getattr(rec, name), rel=1e-11)
        assert int(fields["level"]) == rec.level
        assert int(fields["n_dofs"]) == rec.n_dofs
        if rec.eoc_l2_velocity is None:
            assert fields["eoc_l2_velocity"] == ""
        else:
            assert float(fields["eoc_l2_velocity"]) == pytest.approx(
                rec.eoc_l2_velocity, rel=1e-11)


def test_markdown_expected_row():
    text = emit_table(small_records(), "markdown", expected=1.5)
    assert "1.5000" in text.splitlines()[-1]


def test_run_convergence_deterministic():
    config = StudyConfig(domain="convex", alpha_sing=0.5, levels=2)
    first = emit_table(run_convergence(config), "csv")
    second = emit_table(run_convergence(config), "csv")
    assert first == second


def test_run_convergence_rejects_bad_config():
    with pytest.raises(ConfigError):
        run_convergence(StudyConfig(levels=1))


@pytest.mark.parametrize("projector", ["l2", "carstensen", "lagrange"])
@pytest.mark.parametrize("pairing", ["taylor_hood", "mini"])
def test_run_convergence_all_projectors(projector, pairing):
    config = StudyConfig(domain="convex", alpha_sing=0.5, pairing=pairing,
                         projector=projector, levels=2)
    records = run_convergence(config)
    assert len(records) == 2
    assert records[1].err_l2_velocity < records[0].err_l2_velocity
    assert records[1].eoc_l2_velocity is not None


def test_main_counterexample(capsys):
    assert main(["counterexample"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "3/16" in out and "1/8" in out


def test_main_convergence_csv(tmp_path):
    out = tmp_path / "table.csv"
    code = main(["convergence", "--domain", "convex", "--alpha", "0.5",
                 "--levels", "2", "--output", "csv", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.startswith("level,h,")
    assert "expected" in text.splitlines()[-1]


def test_main_validation_error_exit_code(capsys):
    assert main(["convergence", "--levels", "1"]) == 1
    assert "levels" in capsys.readouterr().err


def test_main_lagrange_rejected_for_rough_data(capsys):
    code = main(["convergence", "--alpha", "-0.1", "--projector", "lagrange",
                 "--levels", "2"])
    assert code == 1


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("domain = convex\nalpha_sing = 0.5\nlevels = 2\n"
                   "output = csv\n# comment\n")
    out1 = tmp_path / "a.csv"
    assert main(["convergence", "--config", str(cfg),
                 "--out", str(out1)]) == 0
    assert out1.read_text().startswith("level,")
    # flag overrides the file value
    out2 = tmp_path / "b.csv"
    assert main(["convergence", "--config", str(cfg), "--levels", "3",
                 "--out", str(out2)]) == 0
    assert out2.read_text().count("\n") == out1.read_text().count("\n") + 1


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("mesh_size = 3\n")
    assert main(["convergence", "--config", str(cfg), "--levels", "2"]) == 1


def test_cli_output_deterministic(tmp_path):
    paths = [tmp_path / "r1.csv", tmp_path / "r2.csv"]
    for p in paths:
        assert main(["convergence", "--domain", "convex", "--alpha", "0.5",
                     "--levels", "2", "--output", "csv",
                     "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
