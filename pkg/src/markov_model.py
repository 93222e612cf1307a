"""Markov-type measure model on a graph-directed set.

Probabilities and ratios are stored as exact fractions; ``p_array`` and
``c_array`` give the float view used by the numerical modules. Vertices are
1-based in every public function.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .constants import MIN_OUT_DEGREE, STOCHASTIC_TOLERANCE
from .errors import InvalidWordError, ModelFormatError

logger = logging.getLogger("MarkovModel")

Word = Tuple[int, ...]
Number = Union[Fraction, float]


def to_fraction(value) -> Fraction:
    """Parse '1/3', '0.5', ints, floats or Fractions into an exact Fraction"""
    if isinstance(value, bool):
        raise ModelFormatError(f"Boolean is not a valid number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # repr() keeps short decimals such as 0.1 exact
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ModelFormatError(f"Cannot parse number {value!r}: {e}") from e
    raise ModelFormatError(f"Unsupported number type {type(value).__name__}")


def is_integral(r: Real) -> bool:
    return float(r).is_integer()


def rational_power(x: Fraction, r: Real) -> Number:
    """x**r, exact when r is integral, float otherwise"""
    if is_integral(r):
        return x ** int(r)
    return float(x) ** float(r)


@dataclass(frozen=True)
class MarkovSystem:
    """Row-stochastic P, ratio matrix C and initial distribution chi"""
    n_vertices: int
    p: Tuple[Tuple[Fraction, ...], ...]
    c: Tuple[Tuple[Fraction, ...], ...]
    chi: Tuple[Fraction, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.n_vertices
        if not isinstance(n, int) or n < 1:
            raise ModelFormatError(f"n_vertices must be a positive integer, got {n!r}")
        for label, matrix in (("p", self.p), ("c", self.c)):
            if len(matrix) != n or any(len(row) != n for row in matrix):
                raise ModelFormatError(f"Matrix {label} must be {n}x{n}")
        if len(self.chi) != n:
            raise ModelFormatError(f"chi must have length {n}")

    @classmethod
    def from_matrices(cls, p: Sequence[Sequence], c: Sequence[Sequence], chi: Sequence, name=""):
        return cls(
            n_vertices=len(chi),
            p=tuple(tuple(to_fraction(v) for v in row) for row in p),
            c=tuple(tuple(to_fraction(v) for v in row) for row in c),
            chi=tuple(to_fraction(v) for v in chi),
            name=name,
        )

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int, object, object]], chi: Sequence, name=""):
        """Build from (from, to, p, c) tuples with 1-based vertices"""
        p = [[Fraction(0)] * n for _ in range(n)]
        c = [[Fraction(0)] * n for _ in range(n)]
        for i, j, p_ij, c_ij in edges:
            if not (1 <= i <= n and 1 <= j <= n):
                raise ModelFormatError(f"Edge ({i},{j}) uses a vertex outside 1..{n}")
            p[i - 1][j - 1] = to_fraction(p_ij)
            c[i - 1][j - 1] = to_fraction(c_ij)
        return cls.from_matrices(p, c, chi, name=name)

    @cached_property
    def p_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.p], dtype=float)

    @cached_property
    def c_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.c], dtype=float)

    @cached_property
    def chi_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.chi], dtype=float)

    @cached_property
    def edges(self) -> Tuple[Tuple[int, int], ...]:
        """All (i, j) with p_ij > 0, 1-based, lexicographic"""
        return tuple(
            (i + 1, j + 1)
            for i in range(self.n_vertices)
            for j in range(self.n_vertices)
            if self.p[i][j] > 0
        )

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        """0-based successor lists, used by the enumeration engines"""
        return tuple(
            tuple(j for j in range(self.n_vertices) if self.p[i][j] > 0)
            for i in range(self.n_vertices)
        )

    def to_dict(self):
        return {
            "n": self.n_vertices,
            "edges": [
                {"from": i, "to": j, "p": str(self.p[i - 1][j - 1]), "c": str(self.c[i - 1][j - 1])}
                for i, j in self.edges
            ],
            "chi": [str(v) for v in self.chi],
        }


@dataclass(frozen=True)
class PathWeight:
    p_weight: Fraction
    c_weight: Fraction
    measure_weight: Fraction


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"ok": self.ok, "violations": list(self.violations)}


def _format_number(value: Fraction) -> str:
    return f"{float(value):.12g}"


def validate_system(system: MarkovSystem) -> ValidationReport:
    """Check every model invariant; violations are returned, not raised"""
    report = ValidationReport()
    n = system.n_vertices

    for i in range(n):
        row_p = system.p[i]
        for j in range(n):
            p_ij, c_ij = row_p[j], system.c[i][j]
            if p_ij < 0 or p_ij > 1:
                report.violations.append(
                    f"entry ({i + 1},{j + 1}): p = {_format_number(p_ij)} outside [0,1]")
            if c_ij < 0 or c_ij >= 1:
                report.violations.append(
                    f"entry ({i + 1},{j + 1}): c = {_format_number(c_ij)} outside [0,1)")
            if (p_ij > 0) != (c_ij > 0):
                report.violations.append(
                    f"entry ({i + 1},{j + 1}): c > 0 must hold exactly when p > 0")

        total = sum(row_p, Fraction(0))
        if abs(float(total - 1)) > STOCHASTIC_TOLERANCE:
            report.violations.append(f"row {i + 1} sums to {_format_number(total)}")

        degree = sum(1 for v in row_p if v > 0)
        if degree < MIN_OUT_DEGREE:
            report.violations.append(f"row {i + 1} has out-degree {degree} < {MIN_OUT_DEGREE}")

    for i, chi_i in enumerate(system.chi):
        if chi_i <= 0:
            report.violations.append(f"chi_{i + 1} = {_format_number(chi_i)} must be > 0")
    chi_total = sum(system.chi, Fraction(0))
    if abs(float(chi_total - 1)) > STOCHASTIC_TOLERANCE:
        report.violations.append(f"chi sums to {_format_number(chi_total)}")

    if report.violations:
        logger.info("Model has %d violation(s)", len(report.violations))
    return report


def successors(system: MarkovSystem, i: int) -> Tuple[int, ...]:
    """Vertices j with p_ij > 0 in ascending order"""
    if not 1 <= i <= system.n_vertices:
        raise IndexError(f"Vertex {i} outside 1..{system.n_vertices}")
    return tuple(j + 1 for j in system.adjacency[i - 1])


def check_word(system: MarkovSystem, word: Sequence[int]) -> Word:
    """Return the word as a tuple, raising InvalidWordError when it is not in Omega*"""
    word = tuple(int(v) for v in word)
    n = system.n_vertices
    for v in word:
        if not 1 <= v <= n:
            raise InvalidWordError(f"Vertex {v} outside 1..{n} in word {word}")
    for a, b in zip(word, word[1:]):
        if system.p[a - 1][b - 1] <= 0:
            raise InvalidWordError(f"({a},{b}) is not an edge; word {word} is not admissible")
    return word


def path_weight(system: MarkovSystem, word: Sequence[int]) -> PathWeight:
    """Exact p_sigma, c_sigma and the mu-mass chi_{sigma_1} p_sigma of the cylinder"""
    word = check_word(system, word)
    if not word:
        return PathWeight(Fraction(1), Fraction(1), Fraction(1))

    p_weight = Fraction(1)
    c_weight = Fraction(1)
    for a, b in zip(word, word[1:]):
        p_weight *= system.p[a - 1][b - 1]
        c_weight *= system.c[a - 1][b - 1]
    return PathWeight(p_weight, c_weight, system.chi[word[0] - 1] * p_weight)


def eta_bounds(system: MarkovSystem, r: Real) -> Tuple[Number, Number]:
    """(min p * (min c)^r, max p * (max c)^r) taken over edges"""
    p_values = [system.p[i - 1][j - 1] for i, j in system.edges]
    c_values = [system.c[i - 1][j - 1] for i, j in system.edges]
    lower = min(p_values) * rational_power(min(c_values), r)
    upper = max(p_values) * rational_power(max(c_values), r)
    return lower, upper


def edge_weight(system: MarkovSystem, r: Real) -> List[List[Number]]:
    """One-step weights p_ij * c_ij^r (0 off the edge set)"""
    n = system.n_vertices
    weights: List[List[Number]] = [[0] * n for _ in range(n)]
    for i, j in system.edges:
        weights[i - 1][j - 1] = system.p[i - 1][j - 1] * rational_power(system.c[i - 1][j - 1], r)
    return weights


def level_mass(system: MarkovSystem, k: int) -> Fraction:
    """Sum over Omega_k of chi_{sigma_1} p_sigma, computed exactly"""
    if k < 1:
        raise ValueError("k must be >= 1")
    vector = list(system.chi)
    n = system.n_vertices
    for _ in range(k - 1):
        vector = [
            sum((vector[i] * system.p[i][j] for i in range(n)), Fraction(0))
            for j in range(n)
        ]
    return sum(vector, Fraction(0))
