"""Strongly connected components, the condensation order and the critical
structure (M_r, T_r, chains, transient set) built on top of them."""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from numbers import Real
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .constants import CRITICAL_TOLERANCE
from .errors import ChainLengthError, InvalidWordError
from .markov_model import MarkovSystem

logger = logging.getLogger("GraphAnalysis")

Chain = Tuple[int, ...]


@dataclass(frozen=True)
class Condensation:
    """SCCs numbered by smallest vertex, plus the DAG they induce"""
    components: Tuple[FrozenSet[int], ...]
    dag_edges: Tuple[Tuple[int, int], ...]
    topo_order: Tuple[int, ...]
    acyclic: Tuple[bool, ...]
    vertex_component: Tuple[int, ...]
    edges: FrozenSet[Tuple[int, int]] = field(repr=False)
    descendants: Tuple[FrozenSet[int], ...] = field(repr=False)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def component_of(self, vertex: int) -> int:
        return self.vertex_component[vertex - 1]

    def reaches(self, a: int, b: int) -> bool:
        """True when a precedes b, i.e. a path leads from component a to component b"""
        return b in self.descendants[a]

    def is_trivial(self, component: int) -> bool:
        return self.acyclic[component]

    def to_dict(self):
        return {
            "components": [sorted(c) for c in self.components],
            "dag_edges": [list(e) for e in self.dag_edges],
            "topo_order": list(self.topo_order),
            "trivial": list(self.acyclic),
        }


def scc_condensation(system: MarkovSystem) -> Condensation:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(1, system.n_vertices + 1))
    graph.add_edges_from(system.edges)

    components = sorted(
        (frozenset(c) for c in nx.strongly_connected_components(graph)),
        key=min,
    )
    vertex_component = [0] * system.n_vertices
    for index, component in enumerate(components):
        for v in component:
            vertex_component[v - 1] = index

    dag = nx.DiGraph()
    dag.add_nodes_from(range(len(components)))
    for i, j in system.edges:
        a, b = vertex_component[i - 1], vertex_component[j - 1]
        if a != b:
            dag.add_edge(a, b)

    edge_set = frozenset(system.edges)
    acyclic = tuple(
        len(c) == 1 and (min(c), min(c)) not in edge_set
        for c in components
    )
    condensation = Condensation(
        components=tuple(components),
        dag_edges=tuple(sorted(dag.edges())),
        topo_order=tuple(nx.lexicographical_topological_sort(dag)),
        acyclic=acyclic,
        vertex_component=tuple(vertex_component),
        edges=edge_set,
        descendants=tuple(frozenset(nx.descendants(dag, c)) for c in range(len(components))),
    )
    logger.debug("Condensation of %s: %d component(s), dag edges %s",
                 system.name or "model", len(components), condensation.dag_edges)
    return condensation


@dataclass(frozen=True)
class CriticalStructure:
    r: float
    s_r_global: float
    per_component: Tuple[float, ...]
    critical_set: Tuple[int, ...]
    m_r: int
    t_r: int
    chains: Dict[int, Tuple[Chain, ...]] = field(repr=False, compare=False)
    transient_set: FrozenSet[int]
    condensation: Condensation = field(repr=False)

    def is_critical(self, component: int) -> bool:
        return component in self.critical_set

    def to_dict(self):
        return {
            "r": self.r,
            "s_r": self.s_r_global,
            "s_r_per_component": list(self.per_component),
            "critical_components": list(self.critical_set),
            "M_r": self.m_r,
            "T_r": self.t_r,
            "chains": {str(l): [list(c) for c in chains] for l, chains in self.chains.items()},
            "transient_set": sorted(self.transient_set),
        }


def _longest_critical_path(condensation: Condensation, critical: Sequence[bool]) -> int:
    best: Dict[int, int] = {}
    for node in condensation.topo_order:
        predecessors = [a for a, b in condensation.dag_edges if b == node]
        inherited = max((best[a] for a in predecessors), default=0)
        best[node] = inherited + (1 if critical[node] else 0)
    return max(best.values(), default=0)


def _chains_of_length(condensation: Condensation, critical_set: Sequence[int], l: int) -> Tuple[Chain, ...]:
    position = {c: i for i, c in enumerate(condensation.topo_order)}
    ordered = sorted(critical_set, key=position.__getitem__)
    chains = [
        combo for combo in combinations(ordered, l)
        if all(condensation.reaches(a, b) for a, b in zip(combo, combo[1:]))
    ]
    return tuple(chains)


def critical_structure(
    system: MarkovSystem,
    r: Real,
    per_component_s: Union[Mapping[int, float], Sequence[float]],
    condensation: Optional[Condensation] = None,
    tolerance: float = CRITICAL_TOLERANCE,
) -> CriticalStructure:
    """
    Assemble M_r, T_r, the chains and F from per-component roots.

    Trivial components are assigned 0 and are never critical, whatever the
    caller passed for them.
    """
    if condensation is None:
        condensation = scc_condensation(system)
    if isinstance(per_component_s, Mapping):
        lookup = dict(per_component_s)
    else:
        lookup = dict(enumerate(per_component_s))

    values = tuple(
        0.0 if condensation.acyclic[c] else float(lookup.get(c, 0.0))
        for c in range(condensation.n_components)
    )
    s_global = max(values)
    critical_flags = [
        (not condensation.acyclic[c]) and values[c] >= s_global - tolerance
        for c in range(condensation.n_components)
    ]
    critical_set = tuple(c for c, flag in enumerate(critical_flags) if flag)
    t_r = _longest_critical_path(condensation, critical_flags)
    chains = {l: _chains_of_length(condensation, critical_set, l) for l in range(1, len(critical_set) + 1)}

    transient = frozenset(
        v for v in range(1, system.n_vertices + 1)
        if condensation.component_of(v) not in critical_set
    )
    logger.info("r=%s: s_r=%.12g, critical components %s, M_r=%d, T_r=%d",
                r, s_global, critical_set, len(critical_set), t_r)
    return CriticalStructure(
        r=float(r),
        s_r_global=s_global,
        per_component=values,
        critical_set=critical_set,
        m_r=len(critical_set),
        t_r=t_r,
        chains=chains,
        transient_set=transient,
        condensation=condensation,
    )


def enumerate_chains(cs: CriticalStructure, l: int) -> Tuple[Chain, ...]:
    """All strictly ordered l-tuples of critical components"""
    if not 1 <= l <= cs.m_r:
        raise ChainLengthError(f"Chain length {l} outside 1..{cs.m_r}")
    return cs.chains[l]


def t_r_of_path(cs: CriticalStructure, word: Sequence[int]) -> int:
    condensation = cs.condensation
    n = len(condensation.vertex_component)
    word = tuple(word)
    for v in word:
        if not 1 <= v <= n:
            raise InvalidWordError(f"Vertex {v} outside 1..{n} in word {word}")
    for a, b in zip(word, word[1:]):
        if (a, b) not in condensation.edges:
            raise InvalidWordError(f"({a},{b}) is not an edge; word {word} is not admissible")
    visited = {condensation.component_of(v) for v in word}
    return sum(1 for c in visited if cs.is_critical(c))


def transient_sum(system: MarkovSystem, cs: CriticalStructure, n: int, s: Optional[float] = None) -> float:
    """Sum over words of length n inside F of (p c^r)^(s/(s+r)), by matrix powers"""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not cs.transient_set:
        return 0.0
    s = cs.s_r_global if s is None else float(s)
    r = cs.r
    exponent = s / (s + r)

    index = np.array(sorted(cs.transient_set), dtype=int) - 1
    p = system.p_array[np.ix_(index, index)]
    c = system.c_array[np.ix_(index, index)]
    mask = p > 0
    block = np.zeros_like(p)
    block[mask] = (p[mask] * c[mask] ** r) ** exponent

    vector = np.ones(len(index))
    for _ in range(n - 1):
        vector = block @ vector
    return float(vector.sum())


def coefficient_regime(cs: CriticalStructure) -> str:
    """'finite' when critical components are pairwise incomparable"""
    return "finite" if cs.t_r == 1 else "infinite"


def critical_components_visited(cs: CriticalStructure, word: Sequence[int]) -> List[int]:
    """Critical components in the order the word first enters them"""
    seen: List[int] = []
    for v in word:
        c = cs.condensation.component_of(v)
        if cs.is_critical(c) and c not in seen:
            seen.append(c)
    return seen
