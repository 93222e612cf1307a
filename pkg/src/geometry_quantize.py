"""
One-dimensional realization of the cylinder sets and quantization on it.

Template i occupies [2(i-1), 2(i-1)+1]. Errors are bracketed by
discretizing the measure over the cylinders of a deep antichain: every
point of J_sigma lies within c_sigma/2 of its midpoint.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .antichain import Antichain, enumerate_antichain
from .constants import (
    DEFAULT_SEED,
    DEPTH_OFFSET,
    LLOYD_MAX_ITER,
    LLOYD_TOLERANCE,
    MATERIALIZE_CAP,
    MONTE_CARLO_MIN_LENGTH,
    MONTE_CARLO_SAMPLES,
    TEMPLATE_SPACING,
    TERNARY_TOLERANCE,
)
from .errors import CapacityError, InfeasibleLayoutError, InvalidWordError, UnsupportedOrderError
from .markov_model import MarkovSystem
from .spectral import SystemAnalysis, analyze_system

logger = logging.getLogger("Quantizer")


@dataclass(eq=False)
class Realization:
    n_vertices: int
    offsets: Tuple[Tuple[Optional[Fraction], ...], ...]
    ratios: Tuple[Tuple[Fraction, ...], ...]
    gaps: Tuple[Optional[Fraction], ...]
    row_separation: Tuple[float, ...]
    sep_t: float
    offset_array: np.ndarray = field(repr=False)
    ratio_array: np.ndarray = field(repr=False)

    @property
    def root_intervals(self) -> List[Tuple[float, float]]:
        return [(TEMPLATE_SPACING * i, TEMPLATE_SPACING * i + 1.0) for i in range(self.n_vertices)]

    def child_layout(self, i: int) -> List[Tuple[int, Fraction, Fraction]]:
        """(child, relative left, relative right) inside template i, 1-based"""
        row = []
        for j in range(self.n_vertices):
            offset = self.offsets[i - 1][j]
            if offset is not None:
                row.append((j + 1, offset, offset + self.ratios[i - 1][j]))
        return row

    def to_dict(self):
        return {
            "sep_t": self.sep_t,
            "row_separation": list(self.row_separation),
            "root_intervals": [list(iv) for iv in self.root_intervals],
            "layouts": {
                str(i): [[j, float(a), float(b)] for j, a, b in self.child_layout(i)]
                for i in range(1, self.n_vertices + 1)
            },
        }


def realize(system: MarkovSystem) -> Realization:
    """Children in target order, equal gaps, flush to both template ends"""
    n = system.n_vertices
    offsets: List[Tuple[Optional[Fraction], ...]] = []
    gaps: List[Optional[Fraction]] = []
    separation: List[float] = []

    for i in range(n):
        children = system.adjacency[i]
        ratios = [system.c[i][j] for j in children]
        total = sum(ratios, Fraction(0))
        if total >= 1:
            raise InfeasibleLayoutError(f"Row {i + 1}: child ratios sum to {float(total):.12g} >= 1")

        row: List[Optional[Fraction]] = [None] * n
        if len(children) >= 2:
            gap = (1 - total) / (len(children) - 1)
            separation.append(float(gap / max(ratios)))
        else:
            gap = None
            separation.append(math.inf)
        position = Fraction(0)
        for j, ratio in zip(children, ratios):
            row[j] = position
            position += ratio + (gap or 0)
        offsets.append(tuple(row))
        gaps.append(gap)

    offset_array = np.array([[float(v) if v is not None else np.nan for v in row] for row in offsets])
    return Realization(
        n_vertices=n,
        offsets=tuple(offsets),
        ratios=system.c,
        gaps=tuple(gaps),
        row_separation=tuple(separation),
        sep_t=min(separation),
        offset_array=offset_array,
        ratio_array=system.c_array,
    )


def cylinder_interval(rz: Realization, word: Sequence[int]) -> Tuple[Fraction, Fraction]:
    """(left endpoint, length c_sigma) of J_sigma, exactly"""
    word = tuple(word)
    if not word:
        raise ValueError("The empty word has no cylinder interval")
    for v in word:
        if not 1 <= v <= rz.n_vertices:
            raise InvalidWordError(f"Vertex {v} outside 1..{rz.n_vertices} in word {word}")

    left = Fraction(int(TEMPLATE_SPACING) * (word[0] - 1))
    length = Fraction(1)
    for a, b in zip(word, word[1:]):
        offset = rz.offsets[a - 1][b - 1]
        if offset is None:
            raise InvalidWordError(f"({a},{b}) is not an edge; word {word} is not admissible")
        left += length * offset
        length *= rz.ratios[a - 1][b - 1]
    return left, length


@dataclass(eq=False)
class Codebook:
    points: np.ndarray

    def __post_init__(self):
        self.points = np.unique(np.asarray(self.points, dtype=float))
        if self.points.size == 0:
            raise ValueError("A codebook needs at least one point")

    @property
    def size(self) -> int:
        return int(self.points.size)

    def to_dict(self):
        return {"size": self.size, "points": self.points.tolist()}


@dataclass(frozen=True)
class ErrorEstimate:
    n: int
    r: float
    lower: float
    discrete: float
    upper: float
    method: str
    integration_depth: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self):
        return {
            "n": self.n, "r": self.r, "lower": self.lower, "discrete": self.discrete,
            "upper": self.upper, "method": self.method, "integration_depth": self.integration_depth,
        }


@dataclass(eq=False)
class Discretization:
    """Midpoints, lengths and masses of the cylinders of one antichain, sorted by midpoint"""
    depth: int
    midpoints: np.ndarray
    lengths: np.ndarray
    masses: np.ndarray

    def __len__(self):
        return int(self.midpoints.size)


def cylinder_arrays(rz: Realization, antichain: Antichain) -> Tuple[np.ndarray, np.ndarray]:
    """Left endpoints and lengths of the materialized words, in the antichain's flat order"""
    if not antichain.materialized:
        raise CapacityError(f"Antichain k={antichain.k} with phi={antichain.phi} was not materialized")
    cylinders = antichain.cylinders

    vertex = cylinders.vertices[0]
    left = TEMPLATE_SPACING * vertex.astype(float)
    length = np.ones(vertex.size)
    lefts, lengths = [left[cylinders.emitted[0]]], [length[cylinders.emitted[0]]]
    for level in range(1, len(cylinders.vertices)):
        parent = cylinders.parents[level]
        child = cylinders.vertices[level]
        source = vertex[parent]
        left = left[parent] + length[parent] * rz.offset_array[source, child]
        length = length[parent] * rz.ratio_array[source, child]
        vertex = child
        flags = cylinders.emitted[level]
        lefts.append(left[flags])
        lengths.append(length[flags])
    return np.concatenate(lefts), np.concatenate(lengths)


def discretize(rz: Realization, antichain: Antichain) -> Discretization:
    left, length = cylinder_arrays(rz, antichain)
    midpoints = left + length / 2.0
    order = np.argsort(midpoints, kind="stable")
    return Discretization(
        depth=antichain.k,
        midpoints=midpoints[order],
        lengths=length[order],
        masses=antichain.cylinders.mass[order],
    )


def antichain_codebook(rz: Realization, antichain: Antichain) -> Codebook:
    """Midpoints of J_sigma over the antichain"""
    left, length = cylinder_arrays(rz, antichain)
    return Codebook(left + length / 2.0)


def antichain_upper_bound(antichain: Antichain) -> float:
    """2^-r * sum mu(J_sigma) c_sigma^r, the error bound of the midpoint codebook"""
    if not antichain.materialized:
        raise CapacityError(f"Antichain k={antichain.k} with phi={antichain.phi} was not materialized")
    cylinders = antichain.cylinders
    return float(2.0 ** -antichain.r * np.sum(cylinders.mass * cylinders.c_length ** antichain.r))


def _nearest_distance(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    index = np.searchsorted(points, x)
    below = points[np.clip(index - 1, 0, points.size - 1)]
    above = points[np.clip(index, 0, points.size - 1)]
    return np.minimum(np.abs(x - below), np.abs(x - above))


def estimate_on(discretization: Discretization, codebook: Codebook, r: Real, method: str) -> ErrorEstimate:
    r = float(r)
    distance = _nearest_distance(codebook.points, discretization.midpoints)
    half = discretization.lengths / 2.0
    masses = discretization.masses
    return ErrorEstimate(
        n=codebook.size,
        r=r,
        lower=float(np.sum(masses * np.maximum(distance - half, 0.0) ** r)),
        discrete=float(np.sum(masses * distance ** r)),
        upper=float(np.sum(masses * (distance + half) ** r)),
        method=method,
        integration_depth=discretization.depth,
    )


def build_discretization(
    rz: Realization,
    system: MarkovSystem,
    r: Real,
    depth: int,
    analysis: Optional[SystemAnalysis] = None,
    materialize_cap: int = MATERIALIZE_CAP,
) -> Discretization:
    antichain = enumerate_antichain(system, r, depth, analysis, materialize=True, materialize_cap=materialize_cap)
    if not antichain.materialized:
        raise CapacityError(f"Integration depth {depth} needs {antichain.phi} cylinders (cap {materialize_cap})")
    return discretize(rz, antichain)


def integrate_error(
    rz: Realization,
    system: MarkovSystem,
    codebook: Codebook,
    r: Real,
    depth: int,
    analysis: Optional[SystemAnalysis] = None,
    materialize_cap: int = MATERIALIZE_CAP,
    method: str = "antichain",
) -> ErrorEstimate:
    """Rigorous bracket [lower, upper] on the r-th power quantization error of ``codebook``"""
    discretization = build_discretization(rz, system, r, depth, analysis, materialize_cap)
    return estimate_on(discretization, codebook, r, method)


def _assign(points: np.ndarray, midpoints: np.ndarray) -> np.ndarray:
    # a midpoint on a cell boundary goes to the lower index
    boundaries = (points[:-1] + points[1:]) / 2.0
    return np.searchsorted(boundaries, midpoints, side="left")


def _cell_objective(x: float, midpoints: np.ndarray, masses: np.ndarray, r: float) -> float:
    return float(np.sum(masses * np.abs(midpoints - x) ** r))


def _cell_center(midpoints: np.ndarray, masses: np.ndarray, r: float) -> float:
    """Minimizer of sum m |x - y|^r over one cell; midpoints are sorted"""
    if r == 2.0:
        return float(np.dot(masses, midpoints) / masses.sum())
    if r == 1.0:
        cumulative = np.cumsum(masses)
        return float(midpoints[np.searchsorted(cumulative, cumulative[-1] / 2.0, side="left")])

    low, high = float(midpoints[0]), float(midpoints[-1])
    while high - low > TERNARY_TOLERANCE:
        a = low + (high - low) / 3.0
        b = high - (high - low) / 3.0
        if _cell_objective(a, midpoints, masses, r) <= _cell_objective(b, midpoints, masses, r):
            high = b
        else:
            low = a
    return (low + high) / 2.0


def _lloyd_step(points: np.ndarray, discretization: Discretization, r: float) -> np.ndarray:
    cells = _assign(points, discretization.midpoints)
    centers = []
    empty = 0
    for index in range(points.size):
        # cells are contiguous because midpoints are sorted
        start = np.searchsorted(cells, index, side="left")
        stop = np.searchsorted(cells, index, side="right")
        masses = discretization.masses[start:stop]
        if stop == start or masses.sum() <= 0:
            empty += 1
            continue
        centers.append(_cell_center(discretization.midpoints[start:stop], masses, r))

    centers = list(np.unique(np.array(centers, dtype=float)))
    missing = points.size - len(centers)
    if missing:
        logger.debug("Lloyd step: %d empty or merged cell(s), respawning", missing)
        taken = set(centers)
        for index in np.argsort(-discretization.masses, kind="stable"):
            if missing == 0:
                break
            candidate = float(discretization.midpoints[index])
            if candidate not in taken:
                centers.append(candidate)
                taken.add(candidate)
                missing -= 1
    return np.sort(np.array(centers, dtype=float))


@dataclass(eq=False)
class LloydResult:
    codebook: Codebook
    trace: List[ErrorEstimate]

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    @property
    def final(self) -> ErrorEstimate:
        return self.trace[-1]


def lloyd_refine(
    rz: Realization,
    system: MarkovSystem,
    codebook: Codebook,
    r: Real,
    depth: int,
    max_iter: int = LLOYD_MAX_ITER,
    tolerance: float = LLOYD_TOLERANCE,
    analysis: Optional[SystemAnalysis] = None,
    discretization: Optional[Discretization] = None,
    materialize_cap: int = MATERIALIZE_CAP,
) -> LloydResult:
    """
    Alternate nearest-point assignment and per-cell center updates.

    An iteration is kept only if the upper bound does not increase, so the
    trace of upper bounds is non-increasing.
    """
    r = float(r)
    if r < 1.0:
        raise UnsupportedOrderError(f"Lloyd refinement needs r >= 1, got {r}")
    if discretization is None:
        discretization = build_discretization(rz, system, r, depth, analysis, materialize_cap)

    points = codebook.points.copy()
    trace = [estimate_on(discretization, codebook, r, "lloyd")]
    for iteration in range(max_iter):
        candidate = _lloyd_step(points, discretization, r)
        estimate = estimate_on(discretization, Codebook(candidate), r, "lloyd")
        previous = trace[-1]
        if estimate.upper > previous.upper:
            logger.debug("Lloyd iteration %d would raise the upper bound; stopping", iteration + 1)
            break
        points = candidate
        trace.append(estimate)
        logger.debug("Lloyd iteration %d: upper %.15g, discrete %.15g", iteration + 1, estimate.upper,
                     estimate.discrete)
        if previous.upper - estimate.upper <= tolerance * previous.upper:
            break
    return LloydResult(codebook=Codebook(points), trace=trace)


def optimal_two_point(
    rz: Realization,
    system: MarkovSystem,
    depth: int,
    r: Real = 2,
    analysis: Optional[SystemAnalysis] = None,
    discretization: Optional[Discretization] = None,
) -> Tuple[Codebook, ErrorEstimate]:
    """Best 2-point codebook for the discretized measure, by trying every contiguous split"""
    r = float(r)
    if discretization is None:
        discretization = build_discretization(rz, system, r, depth, analysis)
    x, m = discretization.midpoints, discretization.masses
    if x.size < 2:
        raise ValueError("Need at least two cylinders for a two-point codebook")

    best_cost, best_points = math.inf, None
    if r == 2.0:
        cm, cmx, cmxx = np.cumsum(m), np.cumsum(m * x), np.cumsum(m * x * x)
        total_m, total_mx, total_mxx = cm[-1], cmx[-1], cmxx[-1]
        for split in range(1, x.size):
            lm, lmx, lmxx = cm[split - 1], cmx[split - 1], cmxx[split - 1]
            rm, rmx, rmxx = total_m - lm, total_mx - lmx, total_mxx - lmxx
            if lm <= 0 or rm <= 0:
                continue
            cost = (lmxx - lmx * lmx / lm) + (rmxx - rmx * rmx / rm)
            if cost < best_cost:
                best_cost, best_points = cost, (lmx / lm, rmx / rm)
    else:
        for split in range(1, x.size):
            a = _cell_center(x[:split], m[:split], r)
            b = _cell_center(x[split:], m[split:], r)
            cost = _cell_objective(a, x[:split], m[:split], r) + _cell_objective(b, x[split:], m[split:], r)
            if cost < best_cost:
                best_cost, best_points = cost, (a, b)

    codebook = Codebook(np.array(best_points))
    return codebook, estimate_on(discretization, codebook, r, "optimal")


def monte_carlo_error(
    rz: Realization,
    system: MarkovSystem,
    codebook: Codebook,
    r: Real,
    samples: int = MONTE_CARLO_SAMPLES,
    seed: int = DEFAULT_SEED,
    min_length: float = MONTE_CARLO_MIN_LENGTH,
) -> Tuple[float, float]:
    """Mean and standard error of d(x, codebook)^r for x drawn from mu"""
    rng = np.random.default_rng(seed)
    r = float(r)
    cumulative = np.cumsum(system.p_array, axis=1)
    cumulative /= cumulative[:, -1:]

    vertex = rng.choice(system.n_vertices, size=samples, p=system.chi_array / system.chi_array.sum())
    left = TEMPLATE_SPACING * vertex.astype(float)
    length = np.ones(samples)
    while length.max() >= min_length:
        u = rng.random(samples)
        following = (u[:, None] >= cumulative[vertex]).sum(axis=1)
        left = left + length * rz.offset_array[vertex, following]
        length = length * rz.ratio_array[vertex, following]
        vertex = following

    values = _nearest_distance(codebook.points, left + length * rng.random(samples)) ** r
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


@dataclass(frozen=True)
class CurveRow:
    k: int
    n: int
    lower: float
    discrete: float
    upper: float
    corrected_ratio: float
    uncorrected_ratio: float
    iterations: int
    integration_depth: int

    def to_dict(self):
        return {
            "k": self.k, "n": self.n, "lower": self.lower, "discrete": self.discrete, "upper": self.upper,
            "corrected_ratio": self.corrected_ratio, "uncorrected_ratio": self.uncorrected_ratio,
            "iterations": self.iterations, "integration_depth": self.integration_depth,
        }


def feasible_depth(
    system: MarkovSystem,
    r: Real,
    k: int,
    depth_offset: int,
    analysis: SystemAnalysis,
    materialize_cap: int = MATERIALIZE_CAP,
) -> int:
    """Largest depth in k..k+depth_offset whose antichain fits under the cap"""
    depth = k + depth_offset
    while depth > k and enumerate_antichain(system, r, depth, analysis).phi > materialize_cap:
        depth -= 1
    if depth < k + depth_offset:
        logger.warning("Integration depth for k=%d reduced from %d to %d by the materialization cap",
                       k, k + depth_offset, depth)
    return depth


def error_curve(
    system: MarkovSystem,
    r: Real,
    k_range: Iterable[int],
    refine: bool = False,
    depth_offset: int = DEPTH_OFFSET,
    analysis: Optional[SystemAnalysis] = None,
    rz: Optional[Realization] = None,
    materialize_cap: int = MATERIALIZE_CAP,
    lloyd_max_iter: int = LLOYD_MAX_ITER,
    lloyd_tolerance: float = LLOYD_TOLERANCE,
) -> List[CurveRow]:
    """Brackets on e_{n,r}^r at n = phi_{k,r}, using midpoint codebooks of Lambda_{k,r}"""
    if analysis is None:
        analysis = analyze_system(system, r)
    if rz is None:
        rz = realize(system)
    r = float(r)
    s_r, t_r = analysis.s_r, analysis.critical.t_r
    log_exponent = (t_r - 1) * (1.0 + r / s_r)
    if refine and r < 1.0:
        logger.warning("Lloyd refinement needs r >= 1; reporting unrefined midpoint codebooks at r=%g", r)
        refine = False

    rows = []
    for k in k_range:
        antichain = enumerate_antichain(system, r, k, analysis, materialize=True, materialize_cap=materialize_cap)
        codebook = antichain_codebook(rz, antichain)
        depth = feasible_depth(system, r, k, depth_offset, analysis, materialize_cap)
        discretization = build_discretization(rz, system, r, depth, analysis, materialize_cap)

        iterations = 0
        if refine:
            result = lloyd_refine(rz, system, codebook, r, depth, lloyd_max_iter, lloyd_tolerance,
                                  discretization=discretization)
            codebook, estimate, iterations = result.codebook, result.final, result.iterations
        else:
            estimate = estimate_on(discretization, codebook, r, "antichain")

        n = codebook.size
        uncorrected = estimate.upper * n ** (r / s_r)
        rows.append(CurveRow(
            k=k,
            n=n,
            lower=estimate.lower,
            discrete=estimate.discrete,
            upper=estimate.upper,
            corrected_ratio=uncorrected / math.log(n) ** log_exponent,
            uncorrected_ratio=uncorrected,
            iterations=iterations,
            integration_depth=depth,
        ))
        logger.info("k=%d n=%d: e^r in [%.6g, %.6g] at depth %d", k, n, estimate.lower, estimate.upper, depth)
    return rows


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)"""
    slope, _ = np.polyfit(np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float)), 1)
    return float(slope)


@dataclass(frozen=True)
class DimensionEstimate:
    k: int
    n: int
    lower_dimension: Optional[float]
    upper_dimension: Optional[float]
    coefficient: float

    def to_dict(self):
        return {
            "k": self.k, "n": self.n, "lower_dimension": self.lower_dimension,
            "upper_dimension": self.upper_dimension, "coefficient": self.coefficient,
        }


def _dimension(n: int, bracket: float, r: float) -> Optional[float]:
    if bracket <= 0 or n < 2:
        return None
    log_e = math.log(bracket) / r
    if log_e >= 0:
        return None
    return math.log(n) / -log_e


def dimension_estimates(curve: Sequence[CurveRow], r: Real, s_r: float) -> List[DimensionEstimate]:
    """Empirical quantization dimension from each bracket and n^(r/s_r) * upper"""
    r = float(r)
    return [
        DimensionEstimate(
            k=row.k,
            n=row.n,
            lower_dimension=_dimension(row.n, row.lower, r),
            upper_dimension=_dimension(row.n, row.upper, r),
            coefficient=row.upper * row.n ** (r / s_r),
        )
        for row in curve
    ]
