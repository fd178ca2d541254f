"""Network topology: parsing, validation, and closed-neighborhood queries.

Nodes are dense integers 0..N-1. Graphs are undirected, connected, and
carry no explicit self-loops; self-inclusion enters only through the
closed neighborhood N_i' = {i} union neighbors(i).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np


class NetworkError(ValueError):
    """Raised when a network document or topology fails validation."""


class Network:
    """Undirected connected graph with precomputed closed-neighborhood arrays.

    Edges are normalized to (min, max) pairs and stored sorted. The CSR
    arrays index the closed neighborhoods (node itself first is not
    guaranteed; neighbors are listed in increasing node id).
    """

    def __init__(self, node_count: int, edges, _check_connected: bool = True):
        if not isinstance(node_count, (int, np.integer)) or node_count < 1:
            raise NetworkError(f"node count must be a positive integer, got {node_count!r}")
        n = int(node_count)
        seen = set()
        normalized = []
        for e in edges:
            pair = tuple(e)
            if len(pair) != 2:
                raise NetworkError(f"edge {e!r} is not a pair")
            a, b = int(pair[0]), int(pair[1])
            if a == b:
                raise NetworkError(f"self-loop edge ({a},{b}) is not allowed")
            if not (0 <= a < n and 0 <= b < n):
                raise NetworkError(f"edge ({a},{b}) references a node outside 0..{n - 1}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise NetworkError(f"duplicate edge {key}")
            seen.add(key)
            normalized.append(key)
        self.node_count = n
        self.edges = tuple(sorted(normalized))

        nbrs: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        self._neighbors = tuple(tuple(sorted(v)) for v in nbrs)

        if _check_connected and not self._is_connected():
            raise NetworkError("graph is not connected")

        # closed neighborhoods as CSR, node ids ascending within each row
        indptr = np.zeros(n + 1, dtype=np.int64)
        indices = []
        for i in range(n):
            closed = sorted((i, *self._neighbors[i]))
            indices.extend(closed)
            indptr[i + 1] = len(indices)
        self._indptr = indptr
        self._indices = np.asarray(indices, dtype=np.int64)

        a_mat = np.zeros((n, n), dtype=np.int8)
        for i in range(n):
            a_mat[i, self._indices[indptr[i]:indptr[i + 1]]] = 1
        self._self_adjacency = a_mat

    def _is_connected(self) -> bool:
        n = self.node_count
        seen = np.zeros(n, dtype=bool)
        queue = deque([0])
        seen[0] = True
        reached = 1
        while queue:
            u = queue.popleft()
            for v in self._neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    reached += 1
                    queue.append(v)
        return reached == n

    @classmethod
    def _unvalidated(cls, node_count: int, edges) -> "Network":
        # Test support: builds possibly-disconnected topologies.
        return cls(node_count, edges, _check_connected=False)

    def neighbors(self, i: int):
        if not (0 <= i < self.node_count):
            raise NetworkError(f"node id {i} outside 0..{self.node_count - 1}")
        return self._neighbors[i]

    def closed_csr(self):
        """(indptr, indices) over closed neighborhoods, shared read-only."""
        return self._indptr, self._indices

    def closed_degrees(self) -> np.ndarray:
        return np.diff(self._indptr).astype(np.int64)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        return (
            isinstance(other, Network)
            and self.node_count == other.node_count
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.node_count, self.edges))

    def __repr__(self):
        return f"Network(node_count={self.node_count}, edges={len(self.edges)})"


@dataclass
class SelfAdjacency:
    """Binary matrix with A[i, j] = 1 iff j is in the closed neighborhood of i."""

    matrix: np.ndarray


def closed_neighborhood(net: Network, i: int) -> set:
    """{i} union neighbors(i); never empty."""
    return {i, *net.neighbors(i)}


def self_adjacency(net: Network) -> SelfAdjacency:
    """Symmetric 0/1 matrix with unit diagonal; row i supports N_i'."""
    return SelfAdjacency(net._self_adjacency.copy())


def builtin_network(kind: str, n: int) -> Network:
    """Canonical test topologies: 'line' (path), 'star' (hub = node 0), 'circle'."""
    if kind == "line":
        if n < 1:
            raise NetworkError("line network needs n >= 1")
        return Network(n, [(i, i + 1) for i in range(n - 1)])
    if kind == "star":
        if n < 2:
            raise NetworkError("star network needs n >= 2")
        return Network(n, [(0, i) for i in range(1, n)])
    if kind == "circle":
        if n < 3:
            raise NetworkError("circle network needs n >= 3")
        return Network(n, [(i, (i + 1) % n) for i in range(n)])
    raise NetworkError(f"unknown builtin kind {kind!r} (expected line, star, or circle)")


def _coerce_counts(value, n: int, field: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        arr = np.full(n, float(value))
    elif isinstance(value, list):
        if len(value) != n:
            raise NetworkError(f"{field} must have {n} entries, got {len(value)}")
        arr = np.asarray([float(v) for v in value])
    else:
        raise NetworkError(f"{field} must be a number or a list of numbers")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise NetworkError(f"{field} entries must be positive finite numbers")
    return arr


def load_network_document(text: str):
    """Parse a network document into (Network, initial_red, initial_black).

    Document grammar (JSON):
        {"nodes": N, "edges": [[a, b], ...],
         "initial_red": scalar-or-list, "initial_black": scalar-or-list}

    The initial ball fields are optional and default to 10 per node; a
    scalar means the same count for every node.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"network document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise NetworkError("network document must be a JSON object")
    unknown = set(doc) - {"nodes", "edges", "initial_red", "initial_black"}
    if unknown:
        raise NetworkError(f"unknown document keys: {sorted(unknown)}")
    if "nodes" not in doc:
        raise NetworkError("network document is missing 'nodes'")
    if "edges" not in doc:
        raise NetworkError("network document is missing 'edges'")
    if not isinstance(doc["edges"], list):
        raise NetworkError("'edges' must be a list of [a, b] pairs")
    net = Network(doc["nodes"], doc["edges"])
    red = _coerce_counts(doc.get("initial_red", 10), net.node_count, "initial_red")
    black = _coerce_counts(doc.get("initial_black", 10), net.node_count, "initial_black")
    return net, red, black


def parse_network(text: str) -> Network:
    """Parse and validate the network document, returning the topology only."""
    net, _, _ = load_network_document(text)
    return net
