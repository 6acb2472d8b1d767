"""Intrinsic distances and the geodesic Voronoi partition of a domain.

Distances are exact shortest paths on the sample graph (multi-source
Dijkstra); the partition assigns every sample to its intrinsically
nearest handle, ties to the lowest handle id, and derives the two
per-handle metrics that size basis supports: the cell radius r_d
(farthest cell member) and the separation r_h (nearest other handle,
minimal non-zero so handles sharing samples don't collapse it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .domain import SampleDomain
from .errors import DegenerateInput, EmptySources, UncoveredComponent
from .handles import validate_handles
from .parallel import map_ordered


@dataclass(frozen=True)
class DistanceField:
    """Per-sample shortest-path distance to a source set; +inf if unreachable."""

    source_set: frozenset
    distance: np.ndarray


def multi_source_distances(domain: SampleDomain, sources) -> DistanceField:
    src = sorted({int(s) for s in sources})
    if not src:
        raise EmptySources("at least one source sample required")
    n = domain.num_points
    for s in src:
        if not 0 <= s < n:
            raise DegenerateInput(f"source index {s} outside domain of {n} samples")
    dist = dijkstra(domain.graph, directed=False, indices=src, min_only=True)
    return DistanceField(source_set=frozenset(src), distance=dist)


def compute_handle_fields(domain: SampleDomain, handles, cache=None) -> dict:
    """Distance field per handle id, reusing any cached fields.

    A handle's field depends only on the domain and its own samples, so
    cached entries survive changes to the rest of the handle set.
    """
    fields = dict(cache) if cache else {}
    missing = [h for h in handles if h.id not in fields]
    computed = map_ordered(
        lambda h: multi_source_distances(domain, h.sample_indices).distance, missing)
    for h, d in zip(missing, computed):
        fields[h.id] = d
    return fields


@dataclass(frozen=True)
class VoronoiPartition:
    handle_ids: tuple                 # ascending
    cell_of: np.ndarray               # (N,) handle id owning each sample
    r_d: dict                         # id -> cell radius
    r_h: dict                         # id -> minimal non-zero separation
    adjacency: frozenset              # {(lo_id, hi_id)} cells sharing a graph edge

    def delta(self, hid: int) -> float:
        return self.r_d[hid] - self.r_h[hid]

    def violations(self):
        """Handles where the support condition r_d < r <= r_h is unsatisfiable."""
        return [hid for hid in self.handle_ids if self.r_d[hid] >= self.r_h[hid]]


def voronoi_partition(domain: SampleDomain, handles, *, fields=None) -> VoronoiPartition:
    """Geodesic Voronoi partition sited at the handles.

    Ties in cell ownership break to the lowest handle id so repeated
    runs are bit-identical. Raises UncoveredComponent when a connected
    component holds no handle.
    """
    handles = list(handles)
    if not handles:
        raise DegenerateInput("at least one handle required")
    validate_handles(domain, handles)
    if fields is None:
        fields = compute_handle_fields(domain, handles)

    order = sorted(handles, key=lambda h: h.id)
    ids = np.array([h.id for h in order])
    dmat = np.vstack([fields[h.id] for h in order])  # (H, N)

    owner_row = np.argmin(dmat, axis=0)  # first minimum = lowest id
    nearest = dmat[owner_row, np.arange(dmat.shape[1])]
    if np.any(np.isinf(nearest)):
        bad = int(np.argmax(np.isinf(nearest)))
        comp = int(domain.component_id[bad])
        raise UncoveredComponent(
            f"connected component {comp} (e.g. sample {bad}) is unreachable from every handle")
    cell_of = ids[owner_row]

    r_d = {}
    for row, h in enumerate(order):
        mask = owner_row == row
        r_d[h.id] = float(dmat[row, mask].max()) if mask.any() else 0.0

    r_h = {}
    for row, h in enumerate(order):
        best = np.inf
        for other in order:
            if other.id == h.id:
                continue
            d = float(dmat[row, list(other.sample_indices)].min())
            if d > 0.0 and d < best:
                best = d
        r_h[h.id] = best

    ca = cell_of[domain.edge_a]
    cb = cell_of[domain.edge_b]
    cross = ca != cb
    lo = np.minimum(ca[cross], cb[cross])
    hi = np.maximum(ca[cross], cb[cross])
    adjacency = frozenset(zip(lo.tolist(), hi.tolist()))

    return VoronoiPartition(
        handle_ids=tuple(ids.tolist()), cell_of=cell_of,
        r_d=r_d, r_h=r_h, adjacency=adjacency)


@dataclass(frozen=True)
class HandleGraph:
    """Dual (Delaunay) graph of the Voronoi partition: nodes are handles."""

    node_ids: tuple
    edges: frozenset                  # {(lo_id, hi_id)}
    neighbors: dict                   # id -> tuple of adjacent ids
    isolated: frozenset               # nodes with no adjacent cell


def delaunay_graph(partition: VoronoiPartition) -> HandleGraph:
    nbr = {hid: set() for hid in partition.handle_ids}
    for a, b in partition.adjacency:
        nbr[a].add(b)
        nbr[b].add(a)
    neighbors = {hid: tuple(sorted(s)) for hid, s in nbr.items()}
    isolated = frozenset(hid for hid, s in neighbors.items() if not s)
    return HandleGraph(
        node_ids=partition.handle_ids, edges=partition.adjacency,
        neighbors=neighbors, isolated=isolated)


def bellman_ford_reference(num_points: int, edges, sources) -> np.ndarray:
    """Independent O(V*E) relaxation oracle for shortest-path tests."""
    dist = np.full(num_points, np.inf)
    for s in sources:
        dist[s] = 0.0
    edges = list(edges)
    for _ in range(num_points):
        changed = False
        for a, b, ln in edges:
            if dist[a] + ln < dist[b]:
                dist[b] = dist[a] + ln
                changed = True
            if dist[b] + ln < dist[a]:
                dist[a] = dist[b] + ln
                changed = True
        if not changed:
            break
    return dist
