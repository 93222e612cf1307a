import io
import json
import logging
from fractions import Fraction

import numpy as np

from src.config_manager import ConfigManager
from src.logging_utils import ANSI, ColoredFormatter, setup_logging
from src.report_writer import ReportWriter, dumps_report, rows_to_csv


def test_default_config_is_created(tmp_path):
    path = tmp_path / "config.ini"
    config = ConfigManager(str(path))
    assert path.exists()
    assert config.get_antichain_config()["capacity_cap"] == 10 ** 8
    assert config.get_verify_config()["k_range"] == (6, 16)
    assert config.get_quantization_config()["seed"] == 12345
    assert config.get_spectral_config()["root_tolerance"] == 1e-10
    assert config.get_logging_config() == {"level": "WARNING", "log_file": "quantization_log.txt"}


def test_missing_keys_fall_back(tmp_path):
    path = tmp_path / "partial.ini"
    path.write_text("[Verify]\nk_min = 8\n\n[Logging]\nlevel = DEBUG ; noisy\n")
    config = ConfigManager(str(path))
    assert config.get_verify_config()["k_range"] == (8, 16)
    assert config.get_verify_config()["bands"]["band_limit"] == 3.0
    assert config.get_logging_config()["level"] == "DEBUG"


def test_numeric_logging_level(tmp_path):
    path = tmp_path / "numeric.ini"
    path.write_text("[Logging]\nlevel = 10  # debug\nlog_file = run.log ; here\n")
    logging_config = ConfigManager(str(path)).get_logging_config()
    assert logging_config == {"level": 10, "log_file": "run.log"}
    root = setup_logging(logging_config["level"], None)
    assert root.level == logging.DEBUG
    setup_logging("WARNING", None)


def test_dumps_report_handles_numeric_types():
    text = dumps_report({
        "fraction": Fraction(1, 4),
        "array": np.array([1.5, 2.0]),
        "integer": np.int64(3),
        "flag": np.bool_(True),
        "vertices": {3, 1},
    })
    report = json.loads(text)
    assert report == {"fraction": 0.25, "array": [1.5, 2.0], "integer": 3, "flag": True, "vertices": [1, 3],
                      "schema_version": "1.0"}
    assert text == dumps_report(json.loads(text))


def test_rows_to_csv():
    text = rows_to_csv([{"k": 1, "t_k": None, "x": 0.1}, {"k": 2, "t_k": 0.5, "extra": "y"}], ["k", "t_k"])
    assert text.splitlines() == ["k,t_k,x,extra", "1,,0.1,", "2,0.5,,y"]


def test_report_writer(tmp_path):
    writer = ReportWriter(str(tmp_path / "reports"))
    path = writer.write_json("analyze", {"b": 1, "a": 2})
    with open(path) as f:
        assert list(json.load(f)) == ["a", "b", "schema_version"]
    assert writer.write_csv("rows", [{"k": 1}]).endswith("rows.csv")

    stream = io.StringIO()
    assert ReportWriter().write_csv("rows", [{"k": 1}], stream=stream) is None
    assert stream.getvalue() == "k\n1\n"


def test_colored_formatter():
    formatter = ColoredFormatter()
    record = logging.LogRecord("Spectral", logging.WARNING, __file__, 1, "radius %s", (0.5,), None)
    assert formatter.format(record) == f"{ANSI.YELLOW}WARNING:Spectral:{ANSI.RESET} radius 0.5"
    other = logging.LogRecord("other", logging.INFO, __file__, 1, "plain", (), None)
    assert formatter.format(other) == "INFO:other:plain"


def test_setup_logging_writes_the_log_file(tmp_path):
    log_file = tmp_path / "run.log"
    root = setup_logging("INFO", str(log_file))
    logging.getLogger("Harness").info("hello")
    for handler in root.handlers:
        handler.flush()
    assert "INFO:Harness:hello" in log_file.read_text()
    setup_logging("WARNING", None, debug=True)
    assert root.level == logging.DEBUG
