"""Command implementations behind main.py; each returns (report, exit code)."""

import logging
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .antichain import theorem_ratio_series
from .config_manager import ConfigManager
from .constants import CAPACITY_CAP, DEFAULT_SEED, DEPTH_OFFSET, SCHEMA_VERSION
from .errors import CapacityError, InfeasibleLayoutError, ModelFormatError
from .geometry_quantize import dimension_estimates, error_curve, realize
from .markov_model import MarkovSystem, validate_system
from .model_loader import load_model
from .report_writer import ReportWriter
from .spectral import analyze_system
from .verification import VerificationSuite, VerifySettings

logger = logging.getLogger("Harness")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_IO_ERROR = 2

ANTICHAIN_COLUMNS = ["r", "k", "phi", "l1", "l2", "sum_energy", "sum_dim", "t_k", "R_k", "U_k"]
QUANTIZE_COLUMNS = ["r", "k", "n", "lower", "upper", "corrected_ratio", "uncorrected_ratio", "iterations",
                    "discrete", "integration_depth"]


@dataclass
class RunConfig:
    model_path: str
    r: List[float] = field(default_factory=lambda: [1.0])
    k_range: Tuple[int, int] = (6, 16)
    depth_offset: int = DEPTH_OFFSET
    capacity_cap: int = CAPACITY_CAP
    output_dir: Optional[str] = None
    seed: int = DEFAULT_SEED
    refine: bool = False
    quantize_k_range: Optional[Tuple[int, int]] = None
    config_path: str = "config.ini"

    def __post_init__(self):
        if not self.r or any(value <= 0 for value in self.r):
            raise ValueError("Every order r must be positive")
        if self.k_range[0] < 1 or self.k_range[0] > self.k_range[1]:
            raise ValueError(f"Empty or invalid k range {self.k_range}")
        if self.depth_offset < 0:
            raise ValueError("Depth offset must be >= 0")

    @property
    def ks(self) -> range:
        return range(self.k_range[0], self.k_range[1] + 1)

    def settings(self, config: Optional[ConfigManager] = None) -> VerifySettings:
        """Verification settings from the config file, overridden by this run's flags"""
        config = config or ConfigManager(self.config_path)
        verify = config.get_verify_config()
        antichain = config.get_antichain_config()
        quantization = config.get_quantization_config()
        bands = verify['bands']
        return VerifySettings(
            k_range=self.k_range,
            quantize_k_range=self.quantize_k_range or verify['quantize_k_range'],
            band_limit=bands['band_limit'],
            growth_band_limit=bands['growth_band_limit'],
            depth_ratio_limit=bands['depth_ratio_limit'],
            transient_range=verify['transient_range'],
            row_sum_h_max=verify['row_sum_h_max'],
            depth_offset=self.depth_offset,
            capacity_cap=self.capacity_cap,
            materialize_cap=min(antichain['materialize_cap'], self.capacity_cap),
            lloyd_max_iter=quantization['lloyd_max_iter'],
            lloyd_tolerance=quantization['lloyd_tolerance'],
            monte_carlo_samples=quantization['monte_carlo_samples'],
            seed=self.seed,
        )


def _load(run: RunConfig) -> Tuple[Optional[MarkovSystem], Optional[dict]]:
    try:
        return load_model(run.model_path), None
    except OSError as e:
        logger.error("Cannot read model %s: %s", run.model_path, e)
        return None, {"error": f"I/O error: {e}", "model": run.model_path}
    except ModelFormatError as e:
        logger.error("Malformed model %s: %s", run.model_path, e)
        return None, {"error": f"format error: {e}", "model": run.model_path}


def _report(command: str, system: MarkovSystem, **content) -> dict:
    report = {"command": command, "model": system.name, "schema_version": SCHEMA_VERSION}
    report.update(content)
    return report


def _emit(run: RunConfig, stem: str, report: dict, stream=None):
    ReportWriter(run.output_dir).write_json(stem, report, stream or sys.stdout)


def _invalid(run: RunConfig, command: str, system: MarkovSystem, stream=None) -> Optional[Tuple[dict, int]]:
    validation = validate_system(system)
    if validation.ok:
        return None
    report = _report(command, system, validation=validation.to_dict())
    _emit(run, command, report, stream)
    return report, EXIT_FAILURE


def cmd_validate(run: RunConfig, stream=None) -> Tuple[dict, int]:
    system, error = _load(run)
    if system is None:
        return error, EXIT_IO_ERROR
    validation = validate_system(system)
    report = _report("validate", system, **validation.to_dict())
    _emit(run, "validate", report, stream)
    for violation in validation.violations:
        logger.warning("%s: %s", system.name, violation)
    return report, EXIT_OK if validation.ok else EXIT_FAILURE


def cmd_analyze(run: RunConfig, stream=None) -> Tuple[dict, int]:
    system, error = _load(run)
    if system is None:
        return error, EXIT_IO_ERROR
    invalid = _invalid(run, "analyze", system, stream)
    if invalid:
        return invalid

    report = _report("analyze", system, analyses=[analyze_system(system, r).to_dict() for r in run.r])
    _emit(run, "analyze", report, stream)
    return report, EXIT_OK


def cmd_antichain(run: RunConfig, stream=None) -> Tuple[dict, int]:
    system, error = _load(run)
    if system is None:
        return error, EXIT_IO_ERROR
    invalid = _invalid(run, "antichain", system, stream)
    if invalid:
        return invalid

    rows = []
    for r in run.r:
        analysis = analyze_system(system, r)
        for row in theorem_ratio_series(system, r, run.ks, analysis, capacity_cap=run.capacity_cap):
            rows.append(dict(row.to_dict(), r=r))
    ReportWriter(run.output_dir).write_csv("antichain", rows, ANTICHAIN_COLUMNS, stream or sys.stdout)
    return _report("antichain", system, rows=rows), EXIT_OK


def cmd_quantize(run: RunConfig, stream=None) -> Tuple[dict, int]:
    system, error = _load(run)
    if system is None:
        return error, EXIT_IO_ERROR
    invalid = _invalid(run, "quantize", system, stream)
    if invalid:
        return invalid

    try:
        rz = realize(system)
    except InfeasibleLayoutError as e:
        logger.error("No 1-D layout for %s: %s", system.name, e)
        report = _report("quantize", system, error=str(e))
        _emit(run, "quantize", report, stream)
        return report, EXIT_FAILURE

    settings = run.settings()
    k_range = run.quantize_k_range or run.k_range
    rows, dimensions = [], []
    try:
        for r in run.r:
            analysis = analyze_system(system, r)
            curve = error_curve(system, r, range(k_range[0], k_range[1] + 1), refine=run.refine,
                                depth_offset=run.depth_offset, analysis=analysis, rz=rz,
                                materialize_cap=settings.materialize_cap, lloyd_max_iter=settings.lloyd_max_iter,
                                lloyd_tolerance=settings.lloyd_tolerance)
            rows.extend(dict(row.to_dict(), r=r) for row in curve)
            dimensions.extend(dict(d.to_dict(), r=r) for d in dimension_estimates(curve, r, analysis.s_r))
    except CapacityError as e:
        logger.error("Quantization of %s exceeds capacity: %s", system.name, e)
        report = _report("quantize", system, error=str(e))
        _emit(run, "quantize", report, stream)
        return report, EXIT_FAILURE

    writer = ReportWriter(run.output_dir)
    writer.write_csv("quantize", rows, QUANTIZE_COLUMNS, stream or sys.stdout)
    report = _report("quantize", system, realization=rz.to_dict(), dimension_estimates=dimensions, rows=rows)
    if run.output_dir:
        writer.write_json("quantize", report)
    return report, EXIT_OK


def cmd_verify(run: RunConfig, stream=None) -> Tuple[dict, int]:
    system, error = _load(run)
    if system is None:
        return error, EXIT_IO_ERROR

    settings = run.settings()
    results = [VerificationSuite(system, r, settings).run() for r in run.r]
    ok = all(result.ok for result in results)
    report = _report("verify", system, ok=ok, suites=[result.to_dict() for result in results])
    _emit(run, "verify", report, stream)
    for result in results:
        for check in result.checks:
            if check.passed is False:
                logger.warning("r=%s check %s failed: %s", result.r, check.name, check.measured or check.reason)
    return report, EXIT_OK if ok else EXIT_FAILURE


COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "antichain": cmd_antichain,
    "quantize": cmd_quantize,
    "verify": cmd_verify,
}
