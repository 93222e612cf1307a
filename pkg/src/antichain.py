"""
Threshold antichains Lambda_{k,r} and the sums built on them.

Words that share their last vertex, the multiset of edge weight classes
they used and the ordered tuple of critical components they visited have
the same weight, depth and future. The enumeration keeps one state per
such group (with a count and an exact mass), so sums stay exact and cheap
even when the antichain itself has millions of words. Word arrays are only
built on request, level by level with numpy.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import CAPACITY_CAP, MATERIALIZE_CAP, ROOT_TOLERANCE, TIE_GUARD
from .errors import CapacityError, NoRootError
from .graph_analysis import Chain, CriticalStructure, enumerate_chains
from .markov_model import MarkovSystem, Word, eta_bounds, is_integral, rational_power
from .spectral import SystemAnalysis, analyze_system

logger = logging.getLogger("Antichain")

Number = Union[Fraction, float]


class WeightClasses:
    """Distinct one-step weights p_ij c_ij^r and the class of every edge"""

    def __init__(self, system: MarkovSystem, r: Real, vertices: Optional[Iterable[int]] = None):
        self.exact = is_integral(r)
        allowed = set(range(system.n_vertices)) if vertices is None else {v - 1 for v in vertices}
        values: List[Number] = []
        lookup: Dict[Number, int] = {}
        self.edge_class: Dict[Tuple[int, int], int] = {}

        for i, j in system.edges:
            a, b = i - 1, j - 1
            if a not in allowed or b not in allowed:
                continue
            weight = system.p[a][b] * rational_power(system.c[a][b], r)
            if not self.exact:
                weight = float(weight)
            if weight not in lookup:
                lookup[weight] = len(values)
                values.append(weight)
            self.edge_class[(a, b)] = lookup[weight]

        self.values = tuple(values)
        self.logs = np.array([math.log(float(v)) for v in values], dtype=float)
        self._cache: Dict[Tuple[Tuple[int, ...], Number], bool] = {}

    def __len__(self):
        return len(self.values)

    def log_weight(self, counts: Sequence[int]) -> float:
        return float(np.dot(self.logs, counts)) if len(counts) else 0.0

    def exact_weight(self, counts: Sequence[int]) -> Number:
        weight: Number = Fraction(1) if self.exact else 1.0
        for value, n in zip(self.values, counts):
            if n:
                weight *= value ** n
        return weight

    def below_threshold(self, counts: Tuple[int, ...], threshold: Number, log_threshold: float, guard: float) -> bool:
        """True when the weight is strictly below the threshold; ties are not below"""
        key = (counts, threshold)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        difference = self.log_weight(counts) - log_threshold
        if difference < -guard:
            result = True
        elif difference > guard:
            result = False
        elif self.exact and isinstance(threshold, Fraction):
            result = self.exact_weight(counts) < threshold
        else:
            # no exact value to fall back on, so treat the band as a tie
            result = False
        self._cache[key] = result
        return result


@dataclass(frozen=True)
class AntichainClass:
    """Words of Lambda_{k,r} sharing last vertex, class counts and visited chain"""
    last_vertex: int
    counts: Tuple[int, ...]
    chain: Chain
    depth: int
    count: int
    mass: Fraction
    weight: Number


@dataclass(eq=False)
class CylinderSet:
    """
    Materialized words, stored as per-level parent pointers.

    ``levels[d]`` holds the (parent index, 0-based vertex) arrays of every
    word of length d + 1 that was generated; the emitted rows are flagged in
    ``emitted[d]``. The flat arrays list the emitted words in (level, index)
    order.
    """
    parents: List[np.ndarray]
    vertices: List[np.ndarray]
    emitted: List[np.ndarray]
    mass: np.ndarray
    weight: np.ndarray
    c_length: np.ndarray
    depth: np.ndarray
    chain_id: np.ndarray
    chain_labels: List[Chain]

    def __len__(self):
        return int(self.mass.shape[0])

    def words(self) -> List[Word]:
        result: List[Word] = []
        for level, flags in enumerate(self.emitted):
            for index in np.flatnonzero(flags):
                word = []
                d, i = level, int(index)
                while d >= 0:
                    word.append(int(self.vertices[d][i]) + 1)
                    i = int(self.parents[d][i])
                    d -= 1
                result.append(tuple(reversed(word)))
        return result


@dataclass(eq=False)
class Antichain:
    k: int
    r: float
    s_r: float
    threshold: Number
    phi: int
    depth_min: int
    depth_max: int
    sum_energy: Number
    sum_dim: float
    total_mass: Fraction
    chain_sums: Dict[Chain, float]
    classes: Tuple[AntichainClass, ...] = field(repr=False)
    cylinders: Optional[CylinderSet] = field(default=None, repr=False)

    @property
    def materialized(self) -> bool:
        return self.cylinders is not None

    def words(self) -> List[Word]:
        if self.cylinders is None:
            raise CapacityError(f"Antichain k={self.k} with phi={self.phi} was not materialized")
        return self.cylinders.words()

    def to_dict(self):
        return {
            "k": self.k,
            "r": self.r,
            "phi": self.phi,
            "depth_min": self.depth_min,
            "depth_max": self.depth_max,
            "sum_energy": float(self.sum_energy),
            "sum_dim": self.sum_dim,
            "total_mass": float(self.total_mass),
            "materialized": self.materialized,
        }


def _advance_chain(chain: Chain, component: int, critical: Sequence[bool]) -> Chain:
    if critical[component] and component not in chain:
        return chain + (component,)
    return chain


def _aggregate(
    system: MarkovSystem,
    classes: WeightClasses,
    threshold: Number,
    vertices: Sequence[int],
    vertex_component: Sequence[int],
    critical: Sequence[bool],
    tie_guard: float,
    capacity_cap: int,
) -> List[AntichainClass]:
    log_threshold = math.log(float(threshold))
    n_classes = len(classes)
    allowed = {v - 1 for v in vertices}

    frontier: Dict[Tuple[int, Tuple[int, ...], Chain], Tuple[int, Fraction]] = {}
    for v in sorted(allowed):
        key = (v, (0,) * n_classes, _advance_chain((), vertex_component[v], critical))
        frontier[key] = (1, system.chi[v])

    emitted: Dict[Tuple[int, Tuple[int, ...], Chain], Tuple[int, Fraction]] = {}
    depth = 1
    while frontier:
        depth += 1
        following: Dict[Tuple[int, Tuple[int, ...], Chain], Tuple[int, Fraction]] = {}
        for (v, counts, chain), (count, mass) in frontier.items():
            for j in system.adjacency[v]:
                if j not in allowed:
                    continue
                cls = classes.edge_class[(v, j)]
                new_counts = counts[:cls] + (counts[cls] + 1,) + counts[cls + 1:]
                key = (j, new_counts, _advance_chain(chain, vertex_component[j], critical))
                target = emitted if classes.below_threshold(new_counts, threshold, log_threshold, tie_guard) else following
                old_count, old_mass = target.get(key, (0, Fraction(0)))
                target[key] = (old_count + count, old_mass + mass * system.p[v][j])
        if len(following) > capacity_cap:
            raise CapacityError(f"Enumeration frontier has {len(following)} states at depth {depth}")
        logger.debug("Depth %d: %d open state(s), %d emitted state(s)", depth, len(following), len(emitted))
        frontier = following

    return [
        AntichainClass(
            last_vertex=v + 1,
            counts=counts,
            chain=chain,
            depth=sum(counts) + 1,
            count=count,
            mass=mass,
            weight=classes.exact_weight(counts),
        )
        for (v, counts, chain), (count, mass) in sorted(emitted.items())
    ]


def _materialize(
    system: MarkovSystem,
    classes: WeightClasses,
    threshold: Number,
    vertex_component: Sequence[int],
    critical: Sequence[bool],
    tie_guard: float,
) -> CylinderSet:
    n = system.n_vertices
    n_classes = len(classes)
    log_threshold = math.log(float(threshold))

    degree = np.array([len(system.adjacency[v]) for v in range(n)], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(degree)[:-1]]).astype(np.int64)
    flat_target = np.array([j for v in range(n) for j in system.adjacency[v]], dtype=np.int64)
    flat_class = np.array([classes.edge_class[(v, j)] for v in range(n) for j in system.adjacency[v]], dtype=np.int64)
    flat_p = np.array([float(system.p[v][j]) for v in range(n) for j in system.adjacency[v]])
    flat_c = np.array([float(system.c[v][j]) for v in range(n) for j in system.adjacency[v]])

    chain_labels: List[Chain] = []
    chain_index: Dict[Chain, int] = {}
    transitions: Dict[Tuple[int, int], int] = {}

    def chain_id(chain: Chain) -> int:
        if chain not in chain_index:
            chain_index[chain] = len(chain_labels)
            chain_labels.append(chain)
        return chain_index[chain]

    def advance(ids: np.ndarray, targets: np.ndarray) -> np.ndarray:
        pairs = ids * n + targets
        unique, inverse = np.unique(pairs, return_inverse=True)
        mapped = np.empty(len(unique), dtype=np.int64)
        for u, pair in enumerate(unique.tolist()):
            if pair not in transitions:
                old, vertex = divmod(pair, n)
                transitions[pair] = chain_id(_advance_chain(chain_labels[old], vertex_component[vertex], critical))
            mapped[u] = transitions[pair]
        return mapped[inverse]

    roots = np.arange(n, dtype=np.int64)
    parents = [np.full(n, -1, dtype=np.int64)]
    vertices = [roots]
    emitted_flags = [np.zeros(n, dtype=bool)]

    open_index = roots.copy()
    open_vertex = roots.copy()
    open_counts = np.zeros((n, n_classes), dtype=np.int64)
    open_log = np.zeros(n)
    open_mass = system.chi_array.copy()
    open_length = np.ones(n)
    open_chain = np.array([chain_id(_advance_chain((), vertex_component[v], critical)) for v in range(n)],
                          dtype=np.int64)

    out_mass, out_weight, out_length, out_depth, out_chain = [], [], [], [], []
    depth = 1
    while open_index.size:
        depth += 1
        repeat = degree[open_vertex]
        source = np.repeat(np.arange(open_index.size), repeat)
        position = np.arange(source.size) - np.repeat(np.cumsum(repeat) - repeat, repeat)
        edge = offsets[open_vertex[source]] + position

        child_vertex = flat_target[edge]
        child_class = flat_class[edge]
        child_counts = open_counts[source].copy()
        child_counts[np.arange(source.size), child_class] += 1
        child_log = open_log[source] + classes.logs[child_class]
        child_mass = open_mass[source] * flat_p[edge]
        child_length = open_length[source] * flat_c[edge]
        child_chain = advance(open_chain[source], child_vertex)

        difference = child_log - log_threshold
        below = difference < -tie_guard
        band = np.flatnonzero(np.abs(difference) <= tie_guard)
        if band.size:
            unique, inverse = np.unique(child_counts[band], axis=0, return_inverse=True)
            verdict = np.array([
                classes.below_threshold(tuple(int(x) for x in row), threshold, log_threshold, tie_guard)
                for row in unique
            ], dtype=bool)
            below[band] = verdict[np.asarray(inverse).reshape(-1)]

        parents.append(open_index[source])
        vertices.append(child_vertex)
        emitted_flags.append(below)

        out_mass.append(child_mass[below])
        out_weight.append(np.exp(child_log[below]))
        out_length.append(child_length[below])
        out_depth.append(np.full(int(below.sum()), depth, dtype=np.int64))
        out_chain.append(child_chain[below])

        keep = ~below
        # parent pointers refer to positions within the stored level
        open_index = np.flatnonzero(keep)
        open_vertex = child_vertex[keep]
        open_counts = child_counts[keep]
        open_log = child_log[keep]
        open_mass = child_mass[keep]
        open_length = child_length[keep]
        open_chain = child_chain[keep]
        logger.debug("Materialized depth %d: %d open word(s)", depth, open_index.size)

    return CylinderSet(
        parents=parents,
        vertices=vertices,
        emitted=emitted_flags,
        mass=np.concatenate(out_mass) if out_mass else np.zeros(0),
        weight=np.concatenate(out_weight) if out_weight else np.zeros(0),
        c_length=np.concatenate(out_length) if out_length else np.zeros(0),
        depth=np.concatenate(out_depth) if out_depth else np.zeros(0, dtype=np.int64),
        chain_id=np.concatenate(out_chain) if out_chain else np.zeros(0, dtype=np.int64),
        chain_labels=chain_labels,
    )


def _critical_flags(cs: CriticalStructure) -> List[bool]:
    return [cs.is_critical(c) for c in range(cs.condensation.n_components)]


def _summarize(
    k: int,
    r: Real,
    s_r: float,
    threshold: Number,
    found: List[AntichainClass],
) -> Antichain:
    exponent = s_r / (s_r + float(r))
    phi = sum(a.count for a in found)
    energy: Number = sum((a.count * a.weight for a in found), Fraction(0) if isinstance(threshold, Fraction) else 0.0)
    dim_terms = [a.count * math.exp(exponent * math.log(float(a.weight))) for a in found]

    chain_terms: Dict[Chain, List[float]] = {}
    for a, term in zip(found, dim_terms):
        chain_terms.setdefault(a.chain, []).append(term)

    return Antichain(
        k=k,
        r=float(r),
        s_r=s_r,
        threshold=threshold,
        phi=phi,
        depth_min=min((a.depth for a in found), default=0),
        depth_max=max((a.depth for a in found), default=0),
        sum_energy=energy,
        sum_dim=math.fsum(dim_terms),
        total_mass=sum((a.mass for a in found), Fraction(0)),
        chain_sums={chain: math.fsum(terms) for chain, terms in sorted(chain_terms.items())},
        classes=tuple(found),
    )


def enumerate_antichain(
    system: MarkovSystem,
    r: Real,
    k: int,
    analysis: Optional[SystemAnalysis] = None,
    materialize: bool = False,
    capacity_cap: int = CAPACITY_CAP,
    materialize_cap: int = MATERIALIZE_CAP,
    tie_guard: float = TIE_GUARD,
) -> Antichain:
    """
    Words whose weight p c^r first drops strictly below eta_r^k.

    Sums are always computed. Word arrays are attached only when
    ``materialize`` is set and phi fits under both caps; otherwise the
    returned antichain carries sums only.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if r <= 0:
        raise ValueError("r must be positive")
    if analysis is None:
        analysis = analyze_system(system, r)
    cs = analysis.critical
    critical = _critical_flags(cs)

    threshold = eta_bounds(system, r)[0] ** k
    classes = WeightClasses(system, r)
    found = _aggregate(system, classes, threshold, range(1, system.n_vertices + 1),
                       cs.condensation.vertex_component, critical, tie_guard, capacity_cap)
    antichain = _summarize(k, r, analysis.s_r, threshold, found)
    logger.info("k=%d r=%s: phi=%d, depths %d..%d", k, r, antichain.phi, antichain.depth_min, antichain.depth_max)

    if materialize:
        if antichain.phi > min(materialize_cap, capacity_cap):
            logger.warning("phi=%d exceeds the materialization cap %d; returning sums only",
                           antichain.phi, min(materialize_cap, capacity_cap))
        else:
            antichain.cylinders = _materialize(system, classes, threshold, cs.condensation.vertex_component,
                                               critical, tie_guard)
    return antichain


def implicit_exponent(antichain: Antichain, r: Optional[Real] = None, tolerance: float = ROOT_TOLERANCE) -> float:
    """t with sum over the antichain of (p c^r)^(t/(t+r)) = 1"""
    r = antichain.r if r is None else float(r)
    if antichain.phi < 2 or float(antichain.sum_energy) >= 1.0:
        raise NoRootError(f"Antichain k={antichain.k} cannot reach 1 from above (phi={antichain.phi})")

    counts = np.array([a.count for a in antichain.classes], dtype=float)
    logs = np.array([math.log(float(a.weight)) for a in antichain.classes])

    def total(t: float) -> float:
        return float(np.dot(counts, np.exp(logs * (t / (t + r)))))

    low, high = 0.0, 1.0
    while total(high) > 1.0:
        low, high = high, high * 2.0
    while high - low > tolerance:
        middle = (low + high) / 2.0
        if total(middle) > 1.0:
            low = middle
        else:
            high = middle
    return (low + high) / 2.0


@dataclass(frozen=True)
class ChainSum:
    chain: Chain
    value: float
    k: int
    r: float

    @property
    def length(self) -> int:
        return len(self.chain)

    @property
    def label(self) -> str:
        return "-".join(str(c) for c in self.chain)


@dataclass(eq=False)
class ChainDecomposition:
    k: int
    r: float
    residual: float
    chains: Tuple[ChainSum, ...]

    def by_length(self) -> Dict[int, float]:
        totals: Dict[int, List[float]] = {0: [self.residual]}
        for chain_sum in self.chains:
            totals.setdefault(chain_sum.length, []).append(chain_sum.value)
        return {l: math.fsum(values) for l, values in sorted(totals.items())}

    def total(self) -> float:
        return math.fsum([self.residual] + [c.value for c in self.chains])

    def value(self, chain: Sequence[int]) -> float:
        for chain_sum in self.chains:
            if chain_sum.chain == tuple(chain):
                return chain_sum.value
        return 0.0


def chain_decomposition(
    system: MarkovSystem,
    r: Real,
    antichain: Antichain,
    cs: CriticalStructure,
) -> ChainDecomposition:
    """Split sum_dim by the ordered tuple of critical components each word visits"""
    residual = antichain.chain_sums.get((), 0.0)
    chains = []
    for chain, value in antichain.chain_sums.items():
        if not chain:
            continue
        if chain not in enumerate_chains(cs, len(chain)):
            logger.warning("Word class visits %s, which is not an ordered chain of %s", chain, system.name or "model")
        chains.append(ChainSum(chain=chain, value=value, k=antichain.k, r=float(r)))
    return ChainDecomposition(k=antichain.k, r=float(r), residual=residual, chains=tuple(chains))


@dataclass(frozen=True)
class SeriesRow:
    k: int
    phi: int
    l1: int
    l2: int
    sum_energy: float
    sum_dim: float
    t_k: Optional[float]
    ratio: float
    uncorrected: float
    lambdas: Dict[str, float] = field(compare=False)

    def to_dict(self):
        row = {
            "k": self.k, "phi": self.phi, "l1": self.l1, "l2": self.l2,
            "sum_energy": self.sum_energy, "sum_dim": self.sum_dim, "t_k": self.t_k,
            "R_k": self.ratio, "U_k": self.uncorrected,
        }
        row.update({f"lambda_{label}": value for label, value in self.lambdas.items()})
        return row


def theorem_ratio_series(
    system: MarkovSystem,
    r: Real,
    k_range: Iterable[int],
    analysis: Optional[SystemAnalysis] = None,
    capacity_cap: int = CAPACITY_CAP,
    tie_guard: float = TIE_GUARD,
) -> List[SeriesRow]:
    """Per k: phi, depth extremes, both sums, t_k and the normalized ratios R_k, U_k"""
    if analysis is None:
        analysis = analyze_system(system, r)
    s_r, t_r = analysis.s_r, analysis.critical.t_r
    log_exponent = (t_r - 1) * (1.0 + float(r) / s_r)

    rows = []
    for k in k_range:
        antichain = enumerate_antichain(system, r, k, analysis, capacity_cap=capacity_cap, tie_guard=tie_guard)
        log_phi = math.log(antichain.phi)
        uncorrected = math.exp(float(r) / s_r * log_phi + math.log(float(antichain.sum_energy)))
        try:
            t_k = implicit_exponent(antichain)
        except NoRootError as e:
            logger.warning("No implicit exponent at k=%d: %s", k, e)
            t_k = None
        decomposition = chain_decomposition(system, r, antichain, analysis.critical)
        rows.append(SeriesRow(
            k=k,
            phi=antichain.phi,
            l1=antichain.depth_min,
            l2=antichain.depth_max,
            sum_energy=float(antichain.sum_energy),
            sum_dim=antichain.sum_dim,
            t_k=t_k,
            ratio=uncorrected / log_phi ** log_exponent,
            uncorrected=uncorrected,
            lambdas={c.label: c.value for c in decomposition.chains},
        ))
    return rows


def component_antichain_sums(
    system: MarkovSystem,
    r: Real,
    component: Iterable[int],
    k_range: Iterable[int],
    analysis: Optional[SystemAnalysis] = None,
    tie_guard: float = TIE_GUARD,
    capacity_cap: int = CAPACITY_CAP,
) -> Dict[int, float]:
    """Sums of (p c^r)^(s_r/(s_r+r)) over threshold antichains of words staying inside one component"""
    if analysis is None:
        analysis = analyze_system(system, r)
    vertices = tuple(sorted(component))
    exponent = analysis.s_r / (analysis.s_r + float(r))
    classes = WeightClasses(system, r, vertices)
    if not len(classes):
        raise NoRootError(f"Component {list(vertices)} has no internal edges")

    no_chains = [False] * analysis.condensation.n_components
    sums = {}
    for k in k_range:
        threshold = eta_bounds(system, r)[0] ** k
        found = _aggregate(system, classes, threshold, vertices, analysis.condensation.vertex_component,
                           no_chains, tie_guard, capacity_cap)
        sums[k] = math.fsum(a.count * math.exp(exponent * math.log(float(a.weight))) for a in found)
    return sums
