"""Config grammar, CSV emission, exit codes, and the console entry point."""

import math
import os

import pytest

from markov_curves.curve_model import BUILTIN_GERM_IDS, DomainError
from markov_curves.experiments_cli import (ConfigError, ReportRow,
                                           emit_csv, main,
                                           parse_config_text, run_scenario,
                                           thread_count)

SCAN_CONFIG = """\
# an interval scan small enough for the test suite
[interval_scan]
study = markov_scan
germ = interval_interior
degrees = 3, 5, 7
epsilons = 0.5, 0.25, 0.125, 0.0625
density = 64
"""

GEODESIC_CONFIG = """\
[cusp_geodesic]
study = geodesic_fit
germ = cusp_2_3
"""

CUSP_GERM_TEXT = """\
ambient_dim = 2
k = 2
c_re = 1.0
star_plus = 0
star_minus = 0
point_class = singular
term.2.3 = 1.0
"""


class TestConfigParsing:
    def test_parses_fields(self):
        scenarios = parse_config_text(SCAN_CONFIG)
        assert len(scenarios) == 1
        scan = scenarios[0]
        assert scan.name == "interval_scan"
        assert scan.study == "markov_scan"
        assert scan.degrees == (3, 5, 7)
        assert scan.epsilons == (0.5, 0.25, 0.125, 0.0625)
        assert scan.density == 64
        assert scan.germ is not None

    def test_duplicate_section(self):
        text = SCAN_CONFIG + "\n" + SCAN_CONFIG
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "duplicate scenario" in str(info.value)
        assert info.value.line == 10

    def test_key_outside_section(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text("study = markov_scan\n")
        assert info.value.line == 1
        assert "outside" in str(info.value)

    def test_unknown_key_lists_valid_ones(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text(SCAN_CONFIG + "wobble = 3\n")
        assert "unknown key 'wobble'" in str(info.value)
        assert "degrees" in str(info.value)
        assert info.value.line == 8

    def test_unknown_study_lists_valid_ones(self):
        text = SCAN_CONFIG.replace("markov_scan", "mystery")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "unknown study 'mystery'" in str(info.value)
        assert "geodesic_fit" in str(info.value)

    def test_missing_study(self):
        text = "[scan]\ngerm = interval_interior\n"
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "missing 'study'" in str(info.value)

    def test_missing_germ(self):
        text = "[scan]\nstudy = geodesic_fit\n"
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "missing 'germ'" in str(info.value)

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text(SCAN_CONFIG + "density = 80\n")
        assert "duplicate key 'density'" in str(info.value)

    def test_bad_integer_value(self):
        text = SCAN_CONFIG.replace("density = 64", "density = soup")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "expects an integer" in str(info.value)
        assert info.value.line == 7

    def test_bad_list_entry(self):
        text = SCAN_CONFIG.replace("degrees = 3, 5, 7", "degrees = 3, x, 7")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "comma-separated list" in str(info.value)

    def test_empty_degree_list_rejected(self):
        text = SCAN_CONFIG.replace("degrees = 3, 5, 7", "degrees = ")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert "nonempty degree list" in str(info.value)

    def test_unknown_germ_names_the_valid_ids(self):
        text = SCAN_CONFIG.replace("interval_interior", "moebius")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        message = str(info.value)
        assert "unknown germ id 'moebius'" in message
        for germ_id in BUILTIN_GERM_IDS:
            assert germ_id in message

    def test_germ_file_resolved_relative_to_config(self, tmp_path):
        (tmp_path / "local.germ").write_text(CUSP_GERM_TEXT,
                                             encoding="utf-8")
        text = GEODESIC_CONFIG.replace("cusp_2_3", "local.germ")
        scenarios = parse_config_text(text, base_dir=str(tmp_path))
        assert scenarios[0].germ.multiplicity == 2

    def test_broken_germ_file_reports_position(self, tmp_path):
        (tmp_path / "broken.germ").write_text("k = \n", encoding="utf-8")
        text = GEODESIC_CONFIG.replace("cusp_2_3", "broken.germ")
        with pytest.raises(ConfigError) as info:
            parse_config_text(text, base_dir=str(tmp_path))
        assert "broken.germ" in str(info.value)
        assert info.value.line == 3


class TestEmitCsv:
    def test_header_only_for_no_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_bytes() == (
            b"scenario,study,degree,epsilon,value,fitted_exponent,slack,"
            b"status\r\n")

    def test_sorted_with_fit_rows_last(self, tmp_path):
        rows = [
            ReportRow("b", "markov_scan", None, None, 1.0),
            ReportRow("a", "markov_scan", 5, 0.5, 2.0),
            ReportRow("a", "markov_scan", 3, 0.25, 3.0),
            ReportRow("a", "markov_scan", 3, None, 4.0),
        ]
        path = emit_csv(rows, tmp_path / "rows.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        firsts = [line.split(",")[0] for line in lines[1:]]
        assert firsts == ["a", "a", "a", "b"]
        assert lines[1].startswith("a,markov_scan,3,0.25")
        assert lines[2].startswith("a,markov_scan,3,,")
        assert lines[3].startswith("a,markov_scan,5,0.5")

    def test_seventeen_significant_digits(self, tmp_path):
        rows = [ReportRow("x", "markov_scan", 3, 1.0 / 3.0, 2.0)]
        path = emit_csv(rows, tmp_path / "digits.csv")
        text = path.read_text(encoding="utf-8")
        assert "0.33333333333333331" in text
        assert ",3," in text

    def test_crlf_line_endings(self, tmp_path):
        rows = [ReportRow("x", "markov_scan", 1, 0.5, 1.0)]
        path = emit_csv(rows, tmp_path / "crlf.csv")
        blob = path.read_bytes()
        assert blob.count(b"\r\n") == 2
        assert b"\n" not in blob.replace(b"\r\n", b"")

    def test_quotes_embedded_commas(self, tmp_path):
        rows = [ReportRow("a,b", "markov_scan", 1, 0.5, 1.0)]
        path = emit_csv(rows, tmp_path / "quoted.csv")
        assert '"a,b"' in path.read_text(encoding="utf-8")


def test_report_row_rejects_unknown_status():
    with pytest.raises(DomainError):
        ReportRow("x", "markov_scan", status="mystery")


class TestThreadCount:
    def test_default_is_cpu_count(self, monkeypatch):
        monkeypatch.delenv("MARKOV_CURVES_THREADS", raising=False)
        assert thread_count() == (os.cpu_count() or 1)

    def test_explicit_value(self, monkeypatch):
        monkeypatch.setenv("MARKOV_CURVES_THREADS", "3")
        assert thread_count() == 3

    def test_rejects_garbage(self, monkeypatch):
        monkeypatch.setenv("MARKOV_CURVES_THREADS", "abc")
        with pytest.raises(ConfigError) as info:
            thread_count()
        assert info.value.source == "<environment>"

    def test_rejects_negative(self, monkeypatch):
        monkeypatch.setenv("MARKOV_CURVES_THREADS", "-2")
        with pytest.raises(ConfigError):
            thread_count()


class TestRunScenario:
    def write_config(self, tmp_path, text=SCAN_CONFIG):
        path = tmp_path / "scan.cfg"
        path.write_text(text, encoding="utf-8")
        return path

    def test_scan_writes_both_reports(self, tmp_path):
        config = self.write_config(tmp_path)
        out = tmp_path / "out"
        assert run_scenario(config, out_dir=out) == 0
        raw = (out / "interval_scan_raw.csv").read_text(encoding="utf-8")
        fit = (out / "interval_scan_fit.csv").read_text(encoding="utf-8")
        raw_lines = raw.splitlines()
        assert len(raw_lines) == 1 + 3 * 4
        assert raw_lines[0] == ("scenario,study,degree,epsilon,value,"
                                "fitted_exponent,slack,status")
        assert sum(line.endswith(",excluded") for line in raw_lines[1:]) == 3
        fit_lines = fit.splitlines()
        assert len(fit_lines) == 2
        alpha_deg = float(fit_lines[1].split(",")[5])
        assert abs(alpha_deg - 1.0) < 0.1

    def test_rerun_is_byte_identical(self, tmp_path):
        config = self.write_config(tmp_path)
        first, second = tmp_path / "one", tmp_path / "two"
        assert run_scenario(config, out_dir=first) == 0
        assert run_scenario(config, out_dir=second) == 0
        for name in ("interval_scan_raw.csv", "interval_scan_fit.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_study_filter_mismatch_is_config_error(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        assert run_scenario(config, out_dir=tmp_path,
                            study_filter="hcp_fit") == 2
        assert "no scenario with study" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_scenario(tmp_path / "nope.cfg", out_dir=tmp_path) == 2
        assert "config error" in capsys.readouterr().err

    def test_numeric_failure_names_scenario(self, tmp_path, capsys):
        text = SCAN_CONFIG.replace("density = 64", "density = 2")
        config = self.write_config(tmp_path, text)
        assert run_scenario(config, out_dir=tmp_path) == 3
        err = capsys.readouterr().err
        assert "interval_scan" in err
        assert "scaling cell degree=" in err

    def test_geodesic_fit_recovers_multiplicity(self, tmp_path):
        config = self.write_config(tmp_path, GEODESIC_CONFIG)
        assert run_scenario(config, out_dir=tmp_path,
                            study_filter="geodesic_fit") == 0
        fit = (tmp_path / "cusp_geodesic_fit.csv").read_text(
            encoding="utf-8").splitlines()
        slope = float(fit[1].split(",")[5])
        assert abs(slope - 2.0) <= 0.05

    def test_bad_thread_env_is_config_error(self, tmp_path, monkeypatch,
                                            capsys):
        monkeypatch.setenv("MARKOV_CURVES_THREADS", "abc")
        config = self.write_config(tmp_path)
        assert run_scenario(config, out_dir=tmp_path) == 2
        assert "MARKOV_CURVES_THREADS" in capsys.readouterr().err

    def test_threaded_run_matches_serial(self, tmp_path, monkeypatch):
        config = self.write_config(tmp_path)
        serial, threaded = tmp_path / "serial", tmp_path / "threaded"
        monkeypatch.setenv("MARKOV_CURVES_THREADS", "1")
        assert run_scenario(config, out_dir=serial) == 0
        monkeypatch.setenv("MARKOV_CURVES_THREADS", "4")
        assert run_scenario(config, out_dir=threaded) == 0
        name = "interval_scan_raw.csv"
        assert (serial / name).read_bytes() == (threaded / name).read_bytes()


class TestMain:
    def test_list_germs(self, capsys):
        assert main(["list-germs"]) == 0
        printed = capsys.readouterr().out.split()
        assert printed == list(BUILTIN_GERM_IDS)

    def test_bad_config_exits_two(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("[scan]\nstudy = mystery\n", encoding="utf-8")
        assert main(["markov-scan", "--config", str(config)]) == 2
        assert "unknown study" in capsys.readouterr().err

    def test_scan_through_entry_point(self, tmp_path):
        config = tmp_path / "scan.cfg"
        config.write_text(SCAN_CONFIG, encoding="utf-8")
        out = tmp_path / "reports"
        code = main(["markov-scan", "--config", str(config),
                     "--out-dir", str(out)])
        assert code == 0
        assert (out / "interval_scan_raw.csv").exists()
        assert (out / "interval_scan_fit.csv").exists()

    def test_green_eval_segment_closed_form(self, tmp_path):
        config = tmp_path / "green.cfg"
        config.write_text(
            "[seg]\nstudy = green_eval\ngerm = interval_interior\n"
            "degrees = 8\nepsilons = 0.5\ndensity = 60\n",
            encoding="utf-8")
        code = main(["green-eval", "--config", str(config),
                     "--out-dir", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "seg_raw.csv").read_text(
            encoding="utf-8").splitlines()
        assert len(lines) == 1 + 3
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[7] == "ok"
            assert abs(float(cells[6])) <= 0.02 + 1e-9 + abs(
                math.log(1.0 / math.cos(math.pi / 16)) / 8.0)

    def test_hcp_fit_boundary_window(self, tmp_path):
        config = tmp_path / "hcp.cfg"
        config.write_text(
            "[edge]\nstudy = hcp_fit\ngerm = interval_boundary\n",
            encoding="utf-8")
        code = main(["hcp-fit", "--config", str(config),
                     "--out-dir", str(tmp_path)])
        assert code == 0
        fit = (tmp_path / "edge_fit.csv").read_text(
            encoding="utf-8").splitlines()
        alpha = float(fit[1].split(",")[5])
        assert abs(alpha - 0.5) <= 0.03
