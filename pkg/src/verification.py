"""
Verification suite: every check measures something on a model and compares it
against an explicit band or tolerance. Geometry checks are skipped, with a
reason, when the model has no one-dimensional layout.
"""

import logging
import math
from dataclasses import dataclass, field
from math import comb
from numbers import Real
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .antichain import (
    component_antichain_sums,
    enumerate_antichain,
    theorem_ratio_series,
)
from .constants import (
    BAND_LIMIT,
    CAPACITY_CAP,
    DEFAULT_SEED,
    DEPTH_OFFSET,
    DEPTH_RATIO_LIMIT,
    GROWTH_BAND_LIMIT,
    LLOYD_MAX_ITER,
    LLOYD_TOLERANCE,
    MATERIALIZE_CAP,
    MONTE_CARLO_SAMPLES,
    ROW_SUM_H_MAX,
    ROW_SUM_SLACK,
    SLOPE_RELATIVE_TOLERANCE,
    TRANSIENT_N_MAX,
    TRANSIENT_N_MIN,
)
from .errors import CapacityError, InfeasibleLayoutError, QuantizationError
from .geometry_quantize import (
    Codebook,
    antichain_codebook,
    antichain_upper_bound,
    build_discretization,
    discretize,
    error_curve,
    estimate_on,
    fit_slope,
    lloyd_refine,
    monte_carlo_error,
    optimal_two_point,
    realize,
)
from .graph_analysis import CriticalStructure, enumerate_chains, transient_sum
from .markov_model import MarkovSystem, eta_bounds, validate_system
from .spectral import SystemAnalysis, analyze_system, row_sum_bounds, spectral_radius, weight_matrix

logger = logging.getLogger("Verifier")

ROOT_CHECK_TOLERANCE = 1e-8
GLOBAL_ROOT_TOLERANCE = 1e-8
BRUTE_FORCE_LENGTH = 12
PHI_STEP_LIMIT = 400.0
EIGEN_SUM_RELATIVE_SLACK = 1e-6
BRACKET_FORMULA_TOLERANCE = 1e-12
ORACLE_DEPTH = 10
ORACLE_TOLERANCE = 1e-9
TRANSIENT_CONVERGENCE = 1e-3


@dataclass
class CheckResult:
    name: str
    band: str
    passed: Optional[bool]
    measured: Dict[str, Any] = field(default_factory=dict)
    reason: str = ""

    @property
    def status(self) -> str:
        if self.passed is None:
            return "skip"
        return "pass" if self.passed else "fail"

    def to_dict(self):
        data = {"name": self.name, "band": self.band, "status": self.status, "measured": self.measured}
        if self.reason:
            data["reason"] = self.reason
        return data


@dataclass
class VerificationSuiteResult:
    model: str
    r: float
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(check.passed is not False for check in self.checks)

    def check(self, name: str) -> CheckResult:
        for result in self.checks:
            if result.name == name:
                return result
        raise KeyError(name)

    def to_dict(self):
        return {"model": self.model, "r": self.r, "ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


@dataclass
class VerifySettings:
    k_range: Tuple[int, int] = (6, 16)
    quantize_k_range: Tuple[int, int] = (4, 9)
    band_limit: float = BAND_LIMIT
    growth_band_limit: float = GROWTH_BAND_LIMIT
    depth_ratio_limit: float = DEPTH_RATIO_LIMIT
    transient_range: Tuple[int, int] = (TRANSIENT_N_MIN, TRANSIENT_N_MAX)
    row_sum_h_max: int = ROW_SUM_H_MAX
    depth_offset: int = DEPTH_OFFSET
    capacity_cap: int = CAPACITY_CAP
    materialize_cap: int = MATERIALIZE_CAP
    lloyd_max_iter: int = LLOYD_MAX_ITER
    lloyd_tolerance: float = LLOYD_TOLERANCE
    monte_carlo_samples: int = MONTE_CARLO_SAMPLES
    seed: int = DEFAULT_SEED

    @property
    def ks(self) -> range:
        return range(self.k_range[0], self.k_range[1] + 1)

    @property
    def quantize_ks(self) -> range:
        return range(self.quantize_k_range[0], self.quantize_k_range[1] + 1)


def band_ratio(values: Sequence[float]) -> float:
    """max/min of a positive sequence"""
    values = [float(v) for v in values]
    if not values or min(values) <= 0:
        return math.inf
    return max(values) / min(values)


class VerificationSuite:
    def __init__(self, system: MarkovSystem, r: Real, settings: Optional[VerifySettings] = None):
        self.system = system
        self.r = float(r)
        self.settings = settings or VerifySettings()
        self.analysis: Optional[SystemAnalysis] = None
        self.series = None
        self._curve = None

    def run(self) -> VerificationSuiteResult:
        result = VerificationSuiteResult(model=self.system.name, r=self.r)

        validity = self.check_model_validity()
        result.checks.append(validity)
        if not validity.passed:
            logger.warning("Model %s is invalid; remaining checks skipped", self.system.name)
            return result

        self.analysis = analyze_system(self.system, self.r)
        symbolic: List[Callable[[], CheckResult]] = [
            self.check_root_consistency,
            self.check_global_root,
            self.check_critical_structure,
            self.check_eigenvector_row_sums,
            self.check_transient_decay,
            self.check_antichain_growth,
            self.check_component_antichain_bounds,
            self.check_chain_growth,
            self.check_log_correction,
        ]
        for check in symbolic:
            result.checks.append(self._guarded(check))

        try:
            rz = realize(self.system)
        except InfeasibleLayoutError as e:
            for name in ("quantization-bracket", "lloyd-monotone", "lloyd-oracle", "power-law-slope",
                         "corrected-band"):
                result.checks.append(CheckResult(name, "n/a", None, reason=f"infeasible layout: {e}"))
            return result

        geometric: List[Callable] = [
            self.check_quantization_bracket,
            self.check_lloyd_monotone,
            self.check_lloyd_oracle,
            self.check_power_law_slope,
            self.check_corrected_band,
        ]
        for check in geometric:
            result.checks.append(self._guarded(check, rz))

        logger.info("Verification of %s at r=%s: %s", self.system.name, self.r, "ok" if result.ok else "failed")
        return result

    def _guarded(self, check, *args) -> CheckResult:
        name = check.__name__[len("check_"):].replace("_", "-")
        try:
            outcome = check(*args)
        except CapacityError as e:
            logger.warning("Check %s skipped: %s", name, e)
            return CheckResult(name, "n/a", None, reason=f"capacity: {e}")
        except QuantizationError as e:
            logger.error("Check %s failed with %s", name, e)
            return CheckResult(name, "n/a", False, reason=str(e))
        logger.debug("Check %s: %s", outcome.name, outcome.status)
        return outcome

    # --- Symbolic checks ---

    def check_model_validity(self) -> CheckResult:
        report = validate_system(self.system)
        return CheckResult("model-validity", "no violations", report.ok, {"violations": report.violations})

    def check_root_consistency(self) -> CheckResult:
        measured = {}
        passed = True
        solutions = {"global": self.analysis.global_solution}
        solutions.update({
            f"component-{c}": s for c, s in self.analysis.component_solutions.items()
            if s is not None and not s.subcritical
        })
        for label, solution in solutions.items():
            psi = spectral_radius(weight_matrix(self.system, self.r, solution.root, solution.vertices))
            measured[label] = {"s_r": solution.root, "psi": psi}
            passed &= abs(psi - 1.0) <= ROOT_CHECK_TOLERANCE
        return CheckResult("root-consistency", f"|Psi(s_r) - 1| <= {ROOT_CHECK_TOLERANCE:g}", passed, measured)

    def check_global_root(self) -> CheckResult:
        global_root = self.analysis.global_solution.root
        component_max = self.analysis.critical.s_r_global
        difference = abs(global_root - component_max)
        return CheckResult(
            "global-root", f"|s_r - max_H s_r(H)| <= {GLOBAL_ROOT_TOLERANCE:g}",
            difference <= GLOBAL_ROOT_TOLERANCE,
            {"global_root": global_root, "component_max": component_max, "difference": difference},
        )

    def _brute_force_t_r(self, cs: CriticalStructure, max_length: int) -> int:
        # (vertex, visited critical components) states cover all words up to max_length
        condensation = cs.condensation
        states = set()
        for v in range(1, self.system.n_vertices + 1):
            c = condensation.component_of(v)
            states.add((v, frozenset([c]) if cs.is_critical(c) else frozenset()))
        best = max(len(s) for _, s in states)
        for _ in range(max_length - 1):
            following = set()
            for v, seen in states:
                for j in self.system.adjacency[v - 1]:
                    c = condensation.component_of(j + 1)
                    following.add((j + 1, seen | {c} if cs.is_critical(c) else seen))
            states = following
            best = max([best] + [len(s) for _, s in states])
        return best

    def check_critical_structure(self) -> CheckResult:
        cs = self.analysis.critical
        chain_counts = {l: len(enumerate_chains(cs, l)) for l in range(1, cs.m_r + 1)}
        # chains lie on one DAG path and are subsets of the critical set
        bounded = (
            chain_counts.get(1, 0) == cs.m_r
            and all(count <= comb(cs.m_r, l) for l, count in chain_counts.items())
            and all(count == 0 for l, count in chain_counts.items() if l > cs.t_r)
        )
        brute = self._brute_force_t_r(cs, BRUTE_FORCE_LENGTH)
        passed = 1 <= cs.t_r <= cs.m_r and bounded and brute == cs.t_r
        return CheckResult(
            "critical-structure",
            f"1 <= T_r <= M_r, card(chains_1) = M_r, card(chains_l) <= C(M_r, l), no chains longer than T_r, "
            f"T_r equals brute force over words of length <= {BRUTE_FORCE_LENGTH}",
            passed,
            {"M_r": cs.m_r, "T_r": cs.t_r, "brute_force_T_r": brute,
             "chain_counts": {str(l): n for l, n in chain_counts.items()}},
        )

    def check_eigenvector_row_sums(self) -> CheckResult:
        measured = {}
        passed = True
        for c in self.analysis.critical.critical_set:
            component = self.analysis.condensation.components[c]
            bounds = row_sum_bounds(self.system, self.r, component, self.settings.row_sum_h_max,
                                    s=self.analysis.component_solutions[c].root)
            within = bounds.within(ROW_SUM_SLACK)
            measured[f"component-{c}"] = bounds.to_dict()
            passed &= within
        return CheckResult(
            "eigenvector-row-sums",
            f"all h-step sums in [C1 - {ROW_SUM_SLACK:g}, C2 + {ROW_SUM_SLACK:g}], h <= {self.settings.row_sum_h_max}",
            passed, measured,
        )

    def check_transient_decay(self) -> CheckResult:
        cs = self.analysis.critical
        band = f"sum(n+1)/sum(n) settles below 1 (change <= {TRANSIENT_CONVERGENCE:g}) over n in {list(self.settings.transient_range)}"
        if not cs.transient_set:
            return CheckResult("transient-decay", band, True, {"transient_set": []})

        n_min, n_max = self.settings.transient_range
        sums = [transient_sum(self.system, cs, n) for n in range(n_min, n_max + 2)]
        if sums[0] == 0.0:
            return CheckResult("transient-decay", band, True, {"transient_set": sorted(cs.transient_set), "sum": 0.0})
        ratios = [b / a if a > 0 else 0.0 for a, b in zip(sums, sums[1:])]
        settled = abs(ratios[-1] - ratios[-2]) <= TRANSIENT_CONVERGENCE
        return CheckResult(
            "transient-decay", band, ratios[-1] < 1.0 and settled,
            {"transient_set": sorted(cs.transient_set), "first_ratio": ratios[0], "last_ratio": ratios[-1]},
        )

    def _series(self):
        if self.series is None:
            self.series = theorem_ratio_series(self.system, self.r, self.settings.ks, self.analysis,
                                               capacity_cap=self.settings.capacity_cap)
        return self.series

    def check_antichain_growth(self) -> CheckResult:
        series = self._series()
        growth = [math.log(row.phi) / row.k for row in series]
        depth_ratios = [row.l2 / row.l1 for row in series]
        steps = [b.phi / a.phi for a, b in zip(series, series[1:])]

        eta_lower = float(eta_bounds(self.system, self.r)[0])
        weights_ok = True
        masses_ok = True
        for k in self.settings.ks:
            antichain = enumerate_antichain(self.system, self.r, k, self.analysis,
                                            capacity_cap=self.settings.capacity_cap)
            masses_ok &= antichain.total_mass == 1
            threshold = float(antichain.threshold)
            for a in antichain.classes:
                weight = float(a.weight)
                weights_ok &= weight < threshold * (1 + 1e-12) and weight >= threshold * eta_lower * (1 - 1e-12)

        passed = (
            band_ratio(growth) <= self.settings.growth_band_limit
            and all(row.l1 <= row.l2 for row in series)
            and max(depth_ratios) <= self.settings.depth_ratio_limit
            and all(step <= PHI_STEP_LIMIT for step in steps)
            and weights_ok and masses_ok
        )
        return CheckResult(
            "antichain-growth",
            f"max/min log(phi)/k <= {self.settings.growth_band_limit}, l2/l1 <= {self.settings.depth_ratio_limit}, "
            f"phi_(k+1)/phi_k <= {PHI_STEP_LIMIT:g}, eta^(k+1) <= weight < eta^k, total mass 1",
            passed,
            {"growth_band": band_ratio(growth), "max_depth_ratio": max(depth_ratios),
             "max_phi_step": max(steps, default=1.0), "weights_in_band": weights_ok, "masses_exact": masses_ok},
        )

    def check_component_antichain_bounds(self) -> CheckResult:
        measured = {}
        passed = True
        for c in self.analysis.critical.critical_set:
            solution = self.analysis.component_solutions[c]
            component = self.analysis.condensation.components[c]
            right = solution.right_eigenvector
            low, high = right.sum() / right.max(), right.sum() / right.min()
            sums = component_antichain_sums(self.system, self.r, component, self.settings.ks, self.analysis,
                                            capacity_cap=self.settings.capacity_cap)
            inside = all(low * (1 - EIGEN_SUM_RELATIVE_SLACK) <= v <= high * (1 + EIGEN_SUM_RELATIVE_SLACK)
                         for v in sums.values())
            measured[f"component-{c}"] = {"lower": float(low), "upper": float(high),
                                          "min_sum": min(sums.values()), "max_sum": max(sums.values())}
            passed &= inside
        return CheckResult("component-antichain-bounds",
                           f"sums in [sum(v)/max v, sum(v)/min v] up to relative {EIGEN_SUM_RELATIVE_SLACK:g}",
                           passed, measured)

    def check_chain_growth(self) -> CheckResult:
        series = self._series()
        cs = self.analysis.critical
        limit = self.settings.band_limit
        measured = {}

        totals = [row.sum_dim / row.k ** (cs.t_r - 1) for row in series]
        measured["sum_dim_band"] = band_ratio(totals)
        passed = measured["sum_dim_band"] <= limit

        for l in range(2, cs.m_r + 1):
            for chain in enumerate_chains(cs, l):
                label = "-".join(str(c) for c in chain)
                values = [row.lambdas.get(label, 0.0) / row.k ** (l - 1) for row in series]
                measured[f"lambda_{label}_band"] = band_ratio(values)
                passed &= band_ratio(values) <= limit

        return CheckResult("chain-growth", f"max/min of S_k/k^(T_r-1) and lambda_k/k^(l-1) <= {limit}",
                           passed, measured)

    def check_log_correction(self) -> CheckResult:
        series = self._series()
        t_r = self.analysis.critical.t_r
        limit = self.settings.band_limit
        corrected = [row.ratio for row in series]
        uncorrected = [row.uncorrected for row in series]
        measured = {"corrected_band": band_ratio(corrected), "uncorrected_band": band_ratio(uncorrected)}

        if t_r == 1:
            passed = measured["uncorrected_band"] <= limit
            band = f"max/min U_k <= {limit}"
        else:
            increasing = all(b > a for a, b in zip(uncorrected, uncorrected[1:]))
            growth = uncorrected[-1] / uncorrected[0]
            measured.update({"uncorrected_increasing": increasing, "uncorrected_growth": growth})
            passed = measured["corrected_band"] <= limit and increasing and growth > limit
            band = f"max/min R_k <= {limit}; U_k increasing by a factor > {limit}"
        return CheckResult("log-correction", band, passed, measured)

    # --- Geometric checks ---

    def _error_curve(self, rz):
        if self._curve is None:
            self._curve = error_curve(self.system, self.r, self.settings.quantize_ks,
                                      depth_offset=self.settings.depth_offset, analysis=self.analysis, rz=rz,
                                      materialize_cap=self.settings.materialize_cap)
        return self._curve

    def check_quantization_bracket(self, rz) -> CheckResult:
        curve = self._error_curve(rz)
        ordered = all(row.lower <= row.discrete <= row.upper for row in curve)

        formula_gaps = []
        for k in self.settings.quantize_ks:
            antichain = enumerate_antichain(self.system, self.r, k, self.analysis, materialize=True,
                                            materialize_cap=self.settings.materialize_cap)
            estimate = estimate_on(discretize(rz, antichain), antichain_codebook(rz, antichain), self.r, "antichain")
            formula_gaps.append(abs(estimate.upper - antichain_upper_bound(antichain)) + estimate.lower)
        formula_ok = max(formula_gaps) <= BRACKET_FORMULA_TOLERANCE

        k = self.settings.quantize_k_range[0]
        antichain = enumerate_antichain(self.system, self.r, k, self.analysis, materialize=True,
                                        materialize_cap=self.settings.materialize_cap)
        codebook = antichain_codebook(rz, antichain)
        mean, error = monte_carlo_error(rz, self.system, codebook, self.r, self.settings.monte_carlo_samples,
                                        self.settings.seed)
        first = curve[0]
        sandwich = first.lower - 3 * error <= mean <= first.upper + 3 * error

        return CheckResult(
            "quantization-bracket",
            f"lower <= upper; midpoint codebook bound within {BRACKET_FORMULA_TOLERANCE:g}; "
            f"Monte Carlo inside bracket +- 3 standard errors",
            ordered and formula_ok and sandwich,
            {"ordered": ordered, "max_formula_gap": max(formula_gaps), "monte_carlo_mean": mean,
             "monte_carlo_error": error, "bracket": [first.lower, first.upper], "seed": self.settings.seed},
        )

    def check_lloyd_monotone(self, rz) -> CheckResult:
        band = "upper bound non-increasing across Lloyd iterations"
        if self.r < 1:
            return CheckResult("lloyd-monotone", band, None, reason="Lloyd refinement needs r >= 1")
        k = self.settings.quantize_k_range[0]
        antichain = enumerate_antichain(self.system, self.r, k, self.analysis, materialize=True,
                                        materialize_cap=self.settings.materialize_cap)
        depth = k + self.settings.depth_offset
        result = lloyd_refine(rz, self.system, antichain_codebook(rz, antichain), self.r, depth,
                              self.settings.lloyd_max_iter, self.settings.lloyd_tolerance, self.analysis,
                              materialize_cap=self.settings.materialize_cap)
        uppers = [estimate.upper for estimate in result.trace]
        monotone = all(b <= a for a, b in zip(uppers, uppers[1:]))
        return CheckResult("lloyd-monotone", band, monotone,
                           {"k": k, "iterations": result.iterations, "first_upper": uppers[0],
                            "last_upper": uppers[-1]})

    def check_lloyd_oracle(self, rz) -> CheckResult:
        band = f"best Lloyd 2-point error equals brute force within {ORACLE_TOLERANCE:g}"
        if self.r != 2.0:
            return CheckResult("lloyd-oracle", band, None, reason="the two-point oracle is evaluated at r = 2")
        discretization = build_discretization(rz, self.system, self.r, ORACLE_DEPTH, self.analysis,
                                              self.settings.materialize_cap)
        _, oracle = optimal_two_point(rz, self.system, ORACLE_DEPTH, self.r, discretization=discretization)

        cumulative = np.cumsum(discretization.masses)
        starts = [
            (discretization.midpoints[0], discretization.midpoints[-1]),
            tuple(discretization.midpoints[np.searchsorted(cumulative, q * cumulative[-1])] for q in (0.25, 0.75)),
        ]
        best = math.inf
        for start in starts:
            codebook = Codebook(np.array(start))
            if codebook.size < 2:
                continue
            result = lloyd_refine(rz, self.system, codebook, self.r, ORACLE_DEPTH,
                                  self.settings.lloyd_max_iter, self.settings.lloyd_tolerance,
                                  discretization=discretization)
            best = min(best, result.final.discrete)
        gap = abs(best - oracle.discrete)
        return CheckResult("lloyd-oracle", band, gap <= ORACLE_TOLERANCE,
                           {"oracle": oracle.discrete, "lloyd": best, "difference": gap, "depth": ORACLE_DEPTH})

    def check_power_law_slope(self, rz) -> CheckResult:
        target = self.analysis.exponents.power
        band = f"slope of log(upper) vs log(n) within {SLOPE_RELATIVE_TOLERANCE:.0%} of {target:.6g}"
        if self.analysis.critical.t_r != 1:
            return CheckResult("power-law-slope", band, None, reason="log correction present (T_r >= 2)")
        curve = self._error_curve(rz)
        slope = fit_slope([row.n for row in curve], [row.upper for row in curve])
        passed = abs(slope - target) <= SLOPE_RELATIVE_TOLERANCE * abs(target)
        return CheckResult("power-law-slope", band, passed, {"slope": slope, "target": target})

    def check_corrected_band(self, rz) -> CheckResult:
        band = "max/min of corrected ratio < max/min of uncorrected ratio"
        if self.analysis.critical.t_r < 2:
            return CheckResult("corrected-band", band, None, reason="no log correction (T_r = 1)")
        curve = self._error_curve(rz)
        corrected = band_ratio([row.corrected_ratio for row in curve])
        uncorrected = band_ratio([row.uncorrected_ratio for row in curve])
        return CheckResult("corrected-band", band, corrected < uncorrected,
                           {"corrected_band": corrected, "uncorrected_band": uncorrected})


def verify_system(system: MarkovSystem, r: Real, settings: Optional[VerifySettings] = None) -> VerificationSuiteResult:
    return VerificationSuite(system, r, settings).run()
