"""Virtual handle insertion and transform propagation.

When a handle's cell radius r_d reaches its separation r_h, no support
radius can both cover the cell and keep other handles outside, so the
greedy insertion loop repeatedly picks the worst handle (largest
delta/r_d with delta = r_d - r_h), plants a virtual point handle at the
farthest sample of its cell and refreshes the partition. Each step
leaves the picked handle's r_h untouched while strictly shrinking its
r_d, and the loop ends when every delta <= 0.

Virtual handles have no user transform; harmonic fields on the dual
handle graph (value 1 at one real handle, 0 at the others, discrete
mean-value in between) distribute the real rigid transforms over them
as normalized quaternion/translation averages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_BASIS
from .distance import (HandleGraph, compute_handle_fields,
                       multi_source_distances, voronoi_partition)
from .domain import SampleDomain
from .errors import (DegenerateBlend, DegenerateInput, InsertionBudgetExceeded,
                     IsolatedVirtualHandle, NonConvergence, NonRigidRealTransform)
from .handles import KIND_VIRTUAL, Handle
from .transforms import HandleTransform

HARMONIC_TOL = 1e-10
HARMONIC_MAX_ITER = 100_000


@dataclass(frozen=True)
class InsertionStep:
    handle_id: int          # the handle whose cell received the virtual site
    inserted_index: int     # sample index of the new virtual handle
    score: float            # max delta/r_d before this insertion
    r_d_before: float
    r_h_before: float
    r_d_after: float
    r_h_after: float


@dataclass
class InsertionTrace:
    steps: list
    final_handles: list
    final_partition: object = None
    score_monotone: bool = True

    @property
    def num_inserted(self) -> int:
        return len(self.steps)

    def to_json(self) -> str:
        return json.dumps([
            {"handle": s.handle_id, "inserted_index": s.inserted_index, "score": s.score}
            for s in self.steps])


def default_insertion_budget(num_handles: int) -> int:
    return 10 * num_handles + 100


def insert_virtual_handles(domain: SampleDomain, handles,
                           max_insertions: int | None = None,
                           default_basis=None, *,
                           fields: dict | None = None) -> InsertionTrace:
    """Greedy insertion until r_d <= r_h on every handle.

    Ties (equal scores, equal farthest distances) break to the lowest
    handle id / sample index so traces are reproducible. The returned
    trace carries the expanded handle list, the final partition and the
    per-step metrics backing the r_d-shrinks / r_h-fixed guarantee.
    """
    handles = sorted(handles, key=lambda h: h.id)
    if not handles:
        raise DegenerateInput("at least one handle required")
    if max_insertions is None:
        max_insertions = default_insertion_budget(len(handles))
    if default_basis is None:
        default_basis = DEFAULT_BASIS

    fields = compute_handle_fields(domain, handles, cache=fields)
    partition = voronoi_partition(domain, handles, fields=fields)
    next_id = max(h.id for h in handles) + 1

    steps: list[InsertionStep] = []
    scores: list[float] = []
    while True:
        ids = partition.handle_ids
        deltas = np.array([partition.delta(h) for h in ids])
        if not np.any(deltas > 0.0):
            break
        if len(steps) >= max_insertions:
            raise InsertionBudgetExceeded(
                f"insertion loop exceeded budget of {max_insertions}")

        rd = np.array([partition.r_d[h] for h in ids])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rd > 0.0, deltas / rd, -np.inf)
        row = int(np.argmax(ratio))  # first max = lowest id
        hm = ids[row]
        score = float(ratio[row])

        cell = np.flatnonzero(partition.cell_of == hm)
        dist = fields[hm][cell]
        far = cell[dist == dist.max()]
        site = int(far.min())

        virtual = Handle(id=next_id, kind=KIND_VIRTUAL, sample_indices=(site,),
                         basis=default_basis)
        next_id += 1
        handles.append(virtual)
        fields[virtual.id] = multi_source_distances(domain, (site,)).distance

        rd_before = partition.r_d[hm]
        rh_before = partition.r_h[hm]
        partition = voronoi_partition(domain, handles, fields=fields)
        steps.append(InsertionStep(
            handle_id=hm, inserted_index=site, score=score,
            r_d_before=rd_before, r_h_before=rh_before,
            r_d_after=partition.r_d[hm], r_h_after=partition.r_h[hm]))
        scores.append(score)

    monotone = all(b <= a for a, b in zip(scores, scores[1:]))
    return InsertionTrace(steps=steps, final_handles=handles,
                          final_partition=partition, score_monotone=monotone)


@dataclass(frozen=True)
class HarmonicFields:
    """One field per real handle over all handle-graph nodes, plus their sum."""

    node_ids: tuple
    real_ids: tuple
    values: np.ndarray        # (num_real, num_nodes) in [0, 1]
    varpi_sum: np.ndarray     # (num_nodes,)
    iterations: int

    def field_of(self, real_id: int) -> dict:
        row = self.real_ids.index(real_id)
        return {nid: float(v) for nid, v in zip(self.node_ids, self.values[row])}


def solve_harmonic_fields(handle_graph: HandleGraph, real_handle_ids) -> HarmonicFields:
    """Iterative uniform-Laplacian averaging with real handles pinned.

    Field i is 1 at real handle i, 0 at the other real handles; virtual
    nodes start at 0 and are replaced by their neighbor mean until the
    largest per-node change drops below HARMONIC_TOL.
    """
    node_ids = tuple(handle_graph.node_ids)
    real_ids = tuple(sorted(set(int(r) for r in real_handle_ids)))
    for r in real_ids:
        if r not in node_ids:
            raise DegenerateInput(f"real handle {r} not a node of the handle graph")
    pos = {nid: i for i, nid in enumerate(node_ids)}
    n = len(node_ids)
    virtual = [nid for nid in node_ids if nid not in real_ids]

    # reachability: every virtual node must see a real one
    seen = set(real_ids)
    frontier = list(real_ids)
    while frontier:
        nid = frontier.pop()
        for nb in handle_graph.neighbors[nid]:
            if nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    unreachable = [nid for nid in virtual if nid not in seen]
    if unreachable:
        raise IsolatedVirtualHandle(
            f"virtual handles {unreachable} are unreachable from every real handle")

    values = np.zeros((len(real_ids), n))
    for row, rid in enumerate(real_ids):
        values[row, pos[rid]] = 1.0

    if virtual:
        v_rows = [pos[nid] for nid in virtual]
        nb_lists = [[pos[nb] for nb in handle_graph.neighbors[nid]] for nid in virtual]
        degs = np.array([len(nb) for nb in nb_lists], dtype=np.float64)
        iterations = 0
        while True:
            iterations += 1
            means = np.stack([values[:, nb].sum(axis=1) for nb in nb_lists], axis=1) / degs
            change = np.abs(means - values[:, v_rows]).max()
            values[:, v_rows] = means
            if change < HARMONIC_TOL:
                break
            if iterations >= HARMONIC_MAX_ITER:
                raise NonConvergence(
                    f"harmonic solve stuck at change {change:.3e} after {iterations} iterations")
    else:
        iterations = 0

    return HarmonicFields(node_ids=node_ids, real_ids=real_ids, values=values,
                          varpi_sum=values.sum(axis=0), iterations=iterations)


def propagate_transforms(fields: HarmonicFields, real_transforms: dict) -> dict:
    """Blend real rigid transforms onto virtual handles (normalized
    quaternion/translation averages weighted by the harmonic fields).

    Real handles keep their input transforms verbatim; all quaternions
    are aligned to the lowest-id real handle's hemisphere before
    averaging so antipodal encodings of the same rotation cannot cancel.
    """
    for rid in fields.real_ids:
        if rid not in real_transforms:
            raise DegenerateInput(f"missing transform for real handle {rid}")
        if not real_transforms[rid].is_rigid:
            raise NonRigidRealTransform(
                f"real handle {rid} has a non-rigid transform; "
                "propagation blends quaternions and needs rigidity")

    ref = real_transforms[fields.real_ids[0]]
    dim = ref.dim
    quats = []
    for rid in fields.real_ids:
        q = real_transforms[rid].quaternion
        if np.dot(q, ref.quaternion) < 0.0:
            q = -q
        quats.append(q)
    quats = np.vstack(quats)                                  # (R, 4)
    trans = np.vstack([real_transforms[r].translation for r in fields.real_ids])

    out = dict(real_transforms)
    for col, nid in enumerate(fields.node_ids):
        if nid in fields.real_ids:
            continue
        w = fields.values[:, col]
        wsum = fields.varpi_sum[col]
        if wsum <= 1e-12:
            raise DegenerateBlend(f"virtual handle {nid} has vanishing field sum")
        q = (w @ quats) / wsum
        t = (w @ trans) / wsum
        norm = np.linalg.norm(q)
        if norm < 1e-6:
            raise DegenerateBlend(
                f"blended quaternion at virtual handle {nid} has norm {norm:.3e}")
        out[nid] = HandleTransform.from_rigid(q / norm, t)
    return out
