import json
import os
from typing import Any, Dict, Optional, Tuple

from .errors import ModelFormatError
from .markov_model import MarkovSystem


class ModelValidator:
    """Structural checks for model JSON documents before they are parsed"""

    @staticmethod
    def validate_document(document: Dict[str, Any]) -> Tuple[bool, Optional[str]]:
        """
        Validate a model document for required fields and proper structure

        Args:
            document: The decoded JSON object

        Returns:
            (is_valid, error_message)
        """
        if not isinstance(document, dict):
            return False, "Model must be a JSON object"

        required_fields = ['n', 'edges', 'chi']
        for field in required_fields:
            if field not in document:
                return False, f"Missing required field: {field}"

        n = document['n']
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            return False, "Field n must be a positive integer"

        if not isinstance(document['edges'], list):
            return False, "Edges must be an array"
        for index, edge in enumerate(document['edges']):
            is_valid, error = ModelValidator.validate_edge(edge, n)
            if not is_valid:
                return False, f"Edge {index}: {error}"

        chi = document['chi']
        if not isinstance(chi, list) or len(chi) != n:
            return False, f"Field chi must be an array of length {n}"
        if not all(ModelValidator._is_number_like(v) for v in chi):
            return False, "Entries of chi must be numbers or rational strings"

        return True, None

    @staticmethod
    def validate_edge(edge: Dict[str, Any], n: int) -> Tuple[bool, Optional[str]]:
        """Validate one edge record"""
        if not isinstance(edge, dict):
            return False, "Edge must be an object"

        required_fields = ['from', 'to', 'p', 'c']
        for field in required_fields:
            if field not in edge:
                return False, f"Missing required field in edge: {field}"

        for field in ('from', 'to'):
            vertex = edge[field]
            if not isinstance(vertex, int) or isinstance(vertex, bool) or not 1 <= vertex <= n:
                return False, f"Invalid vertex in '{field}': {vertex!r}"

        for field in ('p', 'c'):
            if not ModelValidator._is_number_like(edge[field]):
                return False, f"Invalid number in '{field}': {edge[field]!r}"

        return True, None

    @staticmethod
    def _is_number_like(value: Any) -> bool:
        if isinstance(value, bool):
            return False
        return isinstance(value, (int, float, str))


def parse_model(document: Dict[str, Any], name: str = "") -> MarkovSystem:
    """Turn a validated JSON document into a MarkovSystem"""
    is_valid, error = ModelValidator.validate_document(document)
    if not is_valid:
        raise ModelFormatError(error)

    seen = set()
    edges = []
    for edge in document['edges']:
        pair = (edge['from'], edge['to'])
        if pair in seen:
            # exactly one edge from i to j
            raise ModelFormatError(f"Duplicate edge {pair}")
        seen.add(pair)
        edges.append((edge['from'], edge['to'], edge['p'], edge['c']))

    return MarkovSystem.from_edges(document['n'], edges, document['chi'], name=name)


def load_model(path: str) -> MarkovSystem:
    """Read and parse a model file; I/O problems propagate as OSError"""
    with open(path, 'r') as file:
        content = file.read()
    try:
        document = json.loads(content)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Model file {path} is not valid JSON: {e}") from e

    name = os.path.splitext(os.path.basename(path))[0]
    return parse_model(document, name=name)
