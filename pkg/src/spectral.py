"""Weight matrices A(s), their Perron roots Psi(s) and the roots s_r."""

import logging
from dataclasses import dataclass, field
from numbers import Real
from typing import Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from .constants import (
    CRITICAL_TOLERANCE,
    MAX_BRACKET_DOUBLINGS,
    MAX_POWER_ITERATIONS,
    RADIUS_TOLERANCE,
    ROOT_TOLERANCE,
    ROW_SUM_H_MAX,
    SUBCRITICAL_PROBE,
)
from .errors import NoCycleError, NoRootError
from .graph_analysis import Condensation, CriticalStructure, coefficient_regime, critical_structure, scc_condensation
from .markov_model import MarkovSystem

logger = logging.getLogger("Spectral")


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """b_ij(s) = (p_ij c_ij^r)^(s/(s+r)) restricted to ``vertices`` (1-based, row order)"""
    vertices: Tuple[int, ...]
    entries: np.ndarray
    s: float
    r: float


def _scope_vertices(system: MarkovSystem, scope: Optional[Iterable[int]]) -> Tuple[int, ...]:
    if scope is None:
        return tuple(range(1, system.n_vertices + 1))
    vertices = tuple(sorted(set(int(v) for v in scope)))
    for v in vertices:
        if not 1 <= v <= system.n_vertices:
            raise IndexError(f"Vertex {v} outside 1..{system.n_vertices}")
    return vertices


def weight_matrix(system: MarkovSystem, r: Real, s: float, scope: Optional[Iterable[int]] = None) -> WeightMatrix:
    if r <= 0:
        raise ValueError("r must be positive")
    if s < 0:
        raise ValueError("s must be non-negative")
    vertices = _scope_vertices(system, scope)
    index = np.array(vertices, dtype=int) - 1
    p = system.p_array[np.ix_(index, index)]
    c = system.c_array[np.ix_(index, index)]
    mask = p > 0

    entries = np.zeros_like(p)
    # exponent 0 gives the 0/1 adjacency pattern
    entries[mask] = (p[mask] * c[mask] ** float(r)) ** (s / (s + float(r)))
    return WeightMatrix(vertices=vertices, entries=entries, s=float(s), r=float(r))


def _perron(block: np.ndarray, tolerance: float, max_iterations: int) -> Tuple[float, np.ndarray]:
    """Radius and positive right vector of an irreducible block, by power iteration on block + I"""
    size = block.shape[0]
    if size == 1:
        return float(block[0, 0]), np.ones(1)

    shifted = block + np.eye(size)
    x = np.full(size, 1.0 / size)
    low = high = 0.0
    for iteration in range(max_iterations):
        y = shifted @ x
        ratios = y / x
        low, high = ratios.min(), ratios.max()
        x = y / y.sum()
        if high - low <= tolerance * high:
            break
    else:
        logger.warning("Power iteration stopped after %d steps with gap %.3g", max_iterations, high - low)
    return float((low + high) / 2.0 - 1.0), x


def _blocks(entries: np.ndarray) -> List[List[int]]:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(entries.shape[0]))
    rows, cols = np.nonzero(entries)
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return [sorted(c) for c in nx.strongly_connected_components(graph)]


def spectral_radius(
    matrix: Union[WeightMatrix, np.ndarray],
    tolerance: float = RADIUS_TOLERANCE,
    max_iterations: int = MAX_POWER_ITERATIONS,
) -> float:
    """Max over the SCC diagonal blocks of each block's Perron root"""
    entries = matrix.entries if isinstance(matrix, WeightMatrix) else np.asarray(matrix, dtype=float)
    if entries.size == 0:
        return 0.0
    radius = 0.0
    for block_index in _blocks(entries):
        block = entries[np.ix_(block_index, block_index)]
        if not block.any():
            continue
        radius = max(radius, _perron(block, tolerance, max_iterations)[0])
    return radius


@dataclass(eq=False)
class SpectralSolution:
    vertices: Tuple[int, ...]
    r: float
    root: float
    subcritical: bool
    evaluations: Dict[float, float] = field(default_factory=dict, repr=False)
    left_eigenvector: Optional[np.ndarray] = None
    right_eigenvector: Optional[np.ndarray] = None

    @property
    def psi_at_root(self) -> float:
        return self.evaluations.get(self.root, float("nan"))

    def to_dict(self):
        data = {
            "vertices": list(self.vertices),
            "r": self.r,
            "s_r": self.root,
            "subcritical": self.subcritical,
            "psi_at_root": self.psi_at_root,
        }
        if self.left_eigenvector is not None:
            data["left_eigenvector"] = self.left_eigenvector.tolist()
        return data


def solve_sr(
    system: MarkovSystem,
    r: Real,
    scope: Optional[Iterable[int]] = None,
    root_tolerance: float = ROOT_TOLERANCE,
    radius_tolerance: float = RADIUS_TOLERANCE,
    max_iterations: int = MAX_POWER_ITERATIONS,
    subcritical_probe: float = SUBCRITICAL_PROBE,
) -> SpectralSolution:
    """
    Solve Psi(s) = 1 by bisection.

    Psi is strictly decreasing in s on any scope with a cycle. When it is
    already below 1 at the probe point the root is reported as 0 and the
    solution is flagged subcritical.
    """
    vertices = _scope_vertices(system, scope)
    if not weight_matrix(system, r, 0.0, vertices).entries.any():
        raise NoCycleError(f"Scope {list(vertices)} has no edges")

    evaluations: Dict[float, float] = {}

    def psi(s: float) -> float:
        if s not in evaluations:
            evaluations[s] = spectral_radius(weight_matrix(system, r, s, vertices), radius_tolerance, max_iterations)
        return evaluations[s]

    if psi(subcritical_probe) < 1.0:
        psi(0.0)
        logger.info("Scope %s is subcritical at r=%s; root set to 0", list(vertices), r)
        solution = SpectralSolution(vertices, float(r), 0.0, True, evaluations)
        _attach_eigenvectors(solution, system, radius_tolerance, max_iterations)
        return solution

    low, high = subcritical_probe, 1.0
    doublings = 0
    while psi(high) >= 1.0:
        low = high
        high *= 2.0
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise NoRootError(f"Psi stays >= 1 up to s={high:g} on scope {list(vertices)}")

    while high - low > root_tolerance:
        middle = (low + high) / 2.0
        if psi(middle) >= 1.0:
            low = middle
        else:
            high = middle
        logger.debug("Bisection bracket [%.12g, %.12g]", low, high)

    root = (low + high) / 2.0
    psi(root)
    solution = SpectralSolution(vertices, float(r), root, False, evaluations)
    _attach_eigenvectors(solution, system, radius_tolerance, max_iterations)
    return solution


def _attach_eigenvectors(solution: SpectralSolution, system: MarkovSystem, tolerance: float, max_iterations: int):
    entries = weight_matrix(system, solution.r, solution.root, solution.vertices).entries
    if len(_blocks(entries)) != 1 or not entries.any():
        return
    solution.right_eigenvector = _perron(entries, tolerance, max_iterations)[1]
    left = _perron(entries.T, tolerance, max_iterations)[1]
    solution.left_eigenvector = left / left.sum()


def component_eigenvectors(
    system: MarkovSystem,
    r: Real,
    component: Iterable[int],
    s: Optional[float] = None,
    tolerance: float = RADIUS_TOLERANCE,
) -> Tuple[np.ndarray, np.ndarray]:
    """Left and right Perron vectors of A_H(s), each normalised to unit sum"""
    vertices = _scope_vertices(system, component)
    if s is None:
        s = solve_sr(system, r, vertices).root
    entries = weight_matrix(system, r, s, vertices).entries
    if len(_blocks(entries)) != 1 or not entries.any():
        raise NoCycleError(f"Component {list(vertices)} is not an irreducible block with a cycle")
    right = _perron(entries, tolerance, MAX_POWER_ITERATIONS)[1]
    left = _perron(entries.T, tolerance, MAX_POWER_ITERATIONS)[1]
    return left / left.sum(), right / right.sum()


@dataclass(eq=False)
class RowSumBounds:
    vertices: Tuple[int, ...]
    c1: float
    c2: float
    left_eigenvector: np.ndarray
    sums: np.ndarray = field(repr=False)

    @property
    def h_max(self) -> int:
        return self.sums.shape[0]

    def within(self, slack: float) -> bool:
        return bool(np.all(self.sums >= self.c1 - slack) and np.all(self.sums <= self.c2 + slack))

    def to_dict(self):
        return {
            "vertices": list(self.vertices),
            "C1": self.c1,
            "C2": self.c2,
            "left_eigenvector": self.left_eigenvector.tolist(),
            "h_max": self.h_max,
            "min_sum": float(self.sums.min()),
            "max_sum": float(self.sums.max()),
        }


def row_sum_bounds(
    system: MarkovSystem,
    r: Real,
    component: Iterable[int],
    h_max: int = ROW_SUM_H_MAX,
    s: Optional[float] = None,
) -> RowSumBounds:
    """
    Column sums sum_j c^(h)_jp of the h-step matrices of A_H(s_r), h = 1..h_max.

    The matrix is divided by its own radius first so that the left vector is
    invariant up to the radius tolerance rather than the root tolerance.
    """
    vertices = _scope_vertices(system, component)
    if s is None:
        s = solve_sr(system, r, vertices).root
    left, _ = component_eigenvectors(system, r, vertices, s)

    entries = weight_matrix(system, r, s, vertices).entries
    entries = entries / spectral_radius(entries)

    sums = np.empty((h_max, len(vertices)))
    power = np.eye(len(vertices))
    for h in range(h_max):
        power = power @ entries
        sums[h] = power.sum(axis=0)

    return RowSumBounds(
        vertices=vertices,
        c1=float(left.min() / left.max()),
        c2=float(left.max() / left.min()),
        left_eigenvector=left,
        sums=sums,
    )


@dataclass(frozen=True)
class PredictedExponents:
    """Power and log exponents of e_{n,r}^r and the antichain growth constants"""
    power: float
    log: float
    xi: float
    zeta: float

    def to_dict(self):
        return {"power_exponent": self.power, "log_exponent": self.log, "xi_r": self.xi, "zeta_r": self.zeta}


def predicted_exponents(s_r: float, t_r: int, r: Real) -> PredictedExponents:
    r = float(r)
    return PredictedExponents(
        power=-r / s_r,
        log=(t_r - 1) * (1.0 + r / s_r),
        xi=s_r / (s_r + 2.0 * r),
        zeta=2.0 * s_r / (2.0 * s_r + r),
    )


@dataclass(eq=False)
class SystemAnalysis:
    r: float
    condensation: Condensation
    global_solution: SpectralSolution
    component_solutions: Dict[int, Optional[SpectralSolution]]
    critical: CriticalStructure
    bounds: Tuple[float, float]
    exponents: PredictedExponents

    @property
    def s_r(self) -> float:
        return self.critical.s_r_global

    def to_dict(self):
        return {
            "r": self.r,
            "condensation": self.condensation.to_dict(),
            "global_root": self.global_solution.root,
            "components": [
                {
                    "index": c,
                    "vertices": sorted(self.condensation.components[c]),
                    "s_r": self.critical.per_component[c],
                    "trivial": self.condensation.acyclic[c],
                    "subcritical": bool(solution.subcritical) if solution is not None else False,
                    "critical": self.critical.is_critical(c),
                }
                for c, solution in sorted(self.component_solutions.items())
            ],
            "critical": self.critical.to_dict(),
            "row_sum_bounds": {"C1": self.bounds[0], "C2": self.bounds[1]},
            "predicted_exponents": self.exponents.to_dict(),
            "coefficient_regime": coefficient_regime(self.critical),
        }


def analyze_system(
    system: MarkovSystem,
    r: Real,
    root_tolerance: float = ROOT_TOLERANCE,
    radius_tolerance: float = RADIUS_TOLERANCE,
    critical_tolerance: float = CRITICAL_TOLERANCE,
    subcritical_probe: float = SUBCRITICAL_PROBE,
) -> SystemAnalysis:
    """Solve every non-trivial component and the full graph, then build the critical structure"""
    condensation = scc_condensation(system)
    options = dict(root_tolerance=root_tolerance, radius_tolerance=radius_tolerance,
                   subcritical_probe=subcritical_probe)

    component_solutions: Dict[int, Optional[SpectralSolution]] = {}
    for index, component in enumerate(condensation.components):
        if condensation.acyclic[index]:
            component_solutions[index] = None
            continue
        component_solutions[index] = solve_sr(system, r, component, **options)

    global_solution = solve_sr(system, r, None, **options)
    roots = {c: (s.root if s is not None else 0.0) for c, s in component_solutions.items()}
    cs = critical_structure(system, r, roots, condensation, critical_tolerance)

    c1, c2 = 1.0, 1.0
    for c in cs.critical_set:
        left = component_solutions[c].left_eigenvector
        if left is None:
            continue
        c1 = min(c1, float(left.min() / left.max()))
        c2 = max(c2, float(left.max() / left.min()))

    if abs(global_solution.root - cs.s_r_global) > 1e-8:
        logger.warning("Global root %.12g differs from the component maximum %.12g",
                       global_solution.root, cs.s_r_global)

    return SystemAnalysis(
        r=float(r),
        condensation=condensation,
        global_solution=global_solution,
        component_solutions=component_solutions,
        critical=cs,
        bounds=(c1, c2),
        exponents=predicted_exponents(cs.s_r_global, cs.t_r, r),
    )
