"""Point-sampled deformation domains.

A domain is a dense point sampling of the region to deform plus a
k-nearest-neighbor graph whose edge lengths are Euclidean distances;
shortest paths on the graph approximate intrinsic distance inside the
region. The graph is rebuilt from ``k`` whenever a domain is loaded,
never serialized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DegenerateInput, DuplicatePoints

# below any sane sampling density; guards exact duplicates only
COINCIDENCE_TOL = 1e-12

DEFAULT_K = {2: 8, 3: 12}


def default_k(dim: int) -> int:
    return DEFAULT_K.get(dim, 8)


@dataclass(frozen=True)
class SamplePoint:
    index: int
    position: np.ndarray


@dataclass
class SampleDomain:
    """Immutable point sampling with its neighbor graph.

    ``edge_a``/``edge_b`` hold each undirected edge once with a < b;
    ``graph`` is the symmetric CSR matrix used for shortest paths.
    Instances are safe to share across threads; ``insert_points``
    returns a new domain instead of mutating.
    """

    dim: int
    positions: np.ndarray          # (N, dim) float64
    k: int
    edge_a: np.ndarray             # (E,) int64, a < b
    edge_b: np.ndarray             # (E,) int64
    edge_len: np.ndarray           # (E,) float64
    component_id: np.ndarray       # (N,) int
    n_components: int
    graph: csr_matrix = field(repr=False)
    _kdtree: cKDTree = field(repr=False)

    @property
    def num_points(self) -> int:
        return self.positions.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edge_a.shape[0]

    def point(self, index: int) -> SamplePoint:
        return SamplePoint(index, self.positions[index])

    def edges(self):
        """Iterate (a, b, length) tuples, a < b."""
        for a, b, ln in zip(self.edge_a, self.edge_b, self.edge_len):
            yield int(a), int(b), float(ln)

    def neighbors(self, index: int) -> np.ndarray:
        g = self.graph
        return g.indices[g.indptr[index]:g.indptr[index + 1]]

    def kdtree(self) -> cKDTree:
        return self._kdtree


def _finite_positions(positions) -> np.ndarray:
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] not in (2, 3):
        raise DegenerateInput(f"positions must be (N, 2) or (N, 3), got {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise DegenerateInput("non-finite sample position")
    return pos


def _assemble(dim: int, pos: np.ndarray, k: int, a: np.ndarray, b: np.ndarray) -> SampleDomain:
    n = pos.shape[0]
    # canonical undirected edge set, deduplicated
    lo = np.minimum(a, b).astype(np.int64)
    hi = np.maximum(a, b).astype(np.int64)
    key = lo * n + hi
    _, uniq = np.unique(key, return_index=True)
    lo, hi = lo[uniq], hi[uniq]
    lengths = np.linalg.norm(pos[lo] - pos[hi], axis=1)

    ra = np.concatenate([lo, hi])
    rb = np.concatenate([hi, lo])
    rl = np.concatenate([lengths, lengths])
    graph = csr_matrix((rl, (ra, rb)), shape=(n, n))

    n_comp, comp = connected_components(graph, directed=False)
    pos = pos.copy()
    pos.setflags(write=False)
    return SampleDomain(
        dim=dim, positions=pos, k=k,
        edge_a=lo, edge_b=hi, edge_len=lengths,
        component_id=comp, n_components=int(n_comp),
        graph=graph, _kdtree=cKDTree(pos),
    )


def build_domain(positions, k: int | None = None) -> SampleDomain:
    """Build a domain whose edges are the symmetric closure of each point's
    k nearest Euclidean neighbors.

    Raises DegenerateInput for < 2 points and DuplicatePoints when two
    samples coincide within COINCIDENCE_TOL.
    """
    pos = _finite_positions(positions)
    n, dim = pos.shape
    if n < 2:
        raise DegenerateInput("need at least 2 sample points")
    if k is None:
        k = default_k(dim)
    if k < 1:
        raise DegenerateInput("k must be >= 1")

    tree = cKDTree(pos)
    dup = tree.query_pairs(COINCIDENCE_TOL)
    if dup:
        a, b = sorted(dup)[0]
        raise DuplicatePoints(f"samples {a} and {b} coincide within {COINCIDENCE_TOL}")

    kk = min(k + 1, n)
    _, idx = tree.query(pos, k=kk)
    src = np.repeat(np.arange(n), kk - 1)
    dst = idx[:, 1:].ravel()
    return _assemble(dim, pos, k, src, dst)


def insert_points(domain: SampleDomain, new_positions, k: int | None = None):
    """Append points, linking each to its k nearest pre-existing samples.

    Positions coinciding with an existing sample (or an earlier new one)
    within COINCIDENCE_TOL are snapped to that index instead of inserted.
    Returns (new_domain, indices) with one index per input position; the
    input domain is untouched.
    """
    new_pos = _finite_positions(new_positions)
    if new_pos.shape[1] != domain.dim:
        raise DegenerateInput(f"expected dim {domain.dim}, got {new_pos.shape[1]}")
    if k is None:
        k = domain.k

    n_old = domain.num_points
    tree = domain.kdtree()
    kk = min(k, n_old)

    appended: list[np.ndarray] = []
    indices: list[int] = []
    add_a: list[np.ndarray] = []
    add_b: list[np.ndarray] = []
    for p in new_pos:
        d, nearest = tree.query(p, k=1)
        if d < COINCIDENCE_TOL:
            indices.append(int(nearest))
            continue
        hit = None
        for j, q in enumerate(appended):
            if np.linalg.norm(p - q) < COINCIDENCE_TOL:
                hit = n_old + j
                break
        if hit is not None:
            indices.append(hit)
            continue
        new_index = n_old + len(appended)
        _, nb = tree.query(p, k=kk)
        nb = np.atleast_1d(nb)
        appended.append(p)
        indices.append(new_index)
        add_a.append(np.full(kk, new_index, dtype=np.int64))
        add_b.append(nb.astype(np.int64))

    if not appended:
        return domain, indices

    pos = np.vstack([domain.positions, np.array(appended)])
    a = np.concatenate([domain.edge_a] + add_a)
    b = np.concatenate([domain.edge_b] + add_b)
    new_domain = _assemble(domain.dim, pos, domain.k, a, b)
    return new_domain, indices


def save_domain(domain: SampleDomain, path) -> None:
    doc = {"dim": domain.dim, "points": domain.positions.tolist(), "k": domain.k}
    Path(path).write_text(json.dumps(doc))


def load_domain(path) -> SampleDomain:
    doc = json.loads(Path(path).read_text())
    return domain_from_doc(doc)


def domain_from_doc(doc: dict) -> SampleDomain:
    """Build a domain from the JSON document form {dim, points, k?}."""
    if isinstance(doc, list):  # bare point list
        doc = {"points": doc}
    pts = np.asarray(doc["points"], dtype=np.float64)
    dim = int(doc.get("dim", pts.shape[1] if pts.ndim == 2 else 0))
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DegenerateInput("points do not match declared dim")
    k = doc.get("k")
    return build_domain(pts, int(k) if k is not None else None)
