"""Linear blending deformation and its verification scans.

A sample's new position is the weight-blended combination of every
handle's transform applied to it. Partition of unity makes uniform
transforms exact; large rotations are applied progressively as short
rigid increments whose composition equals the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import SampleDomain, build_domain
from .errors import DegenerateInput, MissingTransform
from .transforms import HandleTransform, RigidMotion
from .weights import WeightField, compute_weights


@dataclass
class DeformationResult:
    positions: np.ndarray
    metadata: dict = field(default_factory=dict)


def _blend(positions: np.ndarray, fld: WeightField, transforms: dict) -> np.ndarray:
    for hid in fld.handle_ids:
        if hid not in transforms:
            raise MissingTransform(f"no transform for handle {hid}")
    out = np.zeros_like(positions)
    mat = fld.matrix.tocsc()
    for col, hid in enumerate(fld.handle_ids):
        tr = transforms[hid]
        start, end = mat.indptr[col], mat.indptr[col + 1]
        rows = mat.indices[start:end]
        w = mat.data[start:end]
        if rows.size == 0:
            continue
        out[rows] += w[:, None] * tr.apply(positions[rows])
    return out


def deform(domain: SampleDomain, fld: WeightField, transforms: dict) -> DeformationResult:
    """One linear-blending pass over all samples."""
    positions = _blend(domain.positions, fld, transforms)
    if not np.all(np.isfinite(positions)):
        raise DegenerateInput("deformation produced non-finite positions")
    return DeformationResult(positions=positions, metadata={
        "regime": fld.regime,
        "handle_set_hash": fld.metadata.get("handle_set_hash"),
        "passes": 1,
    })


def deform_progressive(domain: SampleDomain, fld: WeightField, targets: dict,
                       step_angle: float = 2.0, policy: str = "frozen",
                       handles=None, alpha: float = 1.0,
                       on_pass=None) -> DeformationResult:
    """Apply rigid targets as a sequence of small increments.

    Targets are RigidMotion values (winding preserved) or rigid
    HandleTransforms (minimal angle). The pass count is the largest
    ceil(rotation/step_angle) over the handles; each handle follows the
    interpolated path (rotation scaled on its axis, translation scaled
    linearly), and per-pass increments are consecutive-path quotients so
    their composition is exactly the target. Weight policy: "frozen"
    reuses the input field on moving positions; "recompute" rebuilds the
    graph and the weights from the deformed positions before every pass.
    """
    if step_angle <= 0.0:
        raise DegenerateInput(f"step_angle must be positive, got {step_angle}")
    if policy not in ("frozen", "recompute"):
        raise DegenerateInput(f"unknown weight policy {policy!r}")
    if policy == "recompute" and handles is None:
        raise DegenerateInput("recompute policy needs the handle list")

    motions = {}
    passes = 1
    for hid in fld.handle_ids:
        if hid not in targets:
            raise MissingTransform(f"no transform for handle {hid}")
        tgt = targets[hid]
        motion = tgt if isinstance(tgt, RigidMotion) else RigidMotion.from_transform(tgt)
        motions[hid] = motion
        passes = max(passes, int(np.ceil(abs(np.degrees(motion.angle)) / step_angle)))

    positions = domain.positions
    current = fld
    for j in range(1, passes + 1):
        if policy == "recompute" and j > 1:
            moved = build_domain(positions, k=domain.k)
            current = compute_weights(moved, handles, alpha)
        increments = {}
        for hid, motion in motions.items():
            g_now = motion.scaled(j / passes)
            g_prev = motion.scaled((j - 1) / passes)
            m = g_now.matrix @ np.linalg.inv(g_prev.matrix)
            increments[hid] = HandleTransform.from_matrix(m)
        positions = _blend(positions, current, increments)
        if not np.all(np.isfinite(positions)):
            raise DegenerateInput(f"pass {j} produced non-finite positions")
        if on_pass is not None:
            on_pass(j, positions)

    return DeformationResult(positions=positions, metadata={
        "regime": fld.regime,
        "handle_set_hash": fld.metadata.get("handle_set_hash"),
        "passes": passes,
        "policy": policy,
    })


@dataclass
class LocalMaximaReport:
    """Strict graph-local maxima per handle, outside its own samples and
    its single-coverage plateau."""

    offenders: dict                  # handle id -> sorted list of sample indices

    @property
    def clean(self) -> bool:
        return not any(self.offenders.values())


def scan_local_maxima(domain: SampleDomain, fld: WeightField, handles) -> LocalMaximaReport:
    """Flag samples whose weight beats every graph neighbor.

    Equal-value plateaus count only when all their outside neighbors are
    strictly lower; the handle's own samples, exact single-coverage
    (w = 1) samples and zero plateaus are excluded.
    """
    ea, eb = domain.edge_a, domain.edge_b
    n = domain.num_points
    by_id = {h.id: h for h in handles}
    offenders = {}
    for hid in fld.handle_ids:
        v = fld.handle_column(hid)
        maxnb = np.full(n, -np.inf)
        np.maximum.at(maxnb, ea, v[eb])
        np.maximum.at(maxnb, eb, v[ea])

        excluded = np.zeros(n, dtype=bool)
        excluded[list(by_id[hid].sample_indices)] = True
        excluded |= v == 1.0
        excluded |= v == 0.0

        weak = v >= maxnb
        flagged: list[int] = []
        visited = np.zeros(n, dtype=bool)
        adj = domain.graph
        for p in np.flatnonzero(weak):
            if visited[p]:
                continue
            # plateau component of equal value through weak-max samples
            level = v[p]
            comp = [int(p)]
            visited[p] = True
            stack = [int(p)]
            while stack:
                u = stack.pop()
                for nb in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                    if not visited[nb] and weak[nb] and v[nb] == level:
                        visited[nb] = True
                        comp.append(int(nb))
                        stack.append(int(nb))
            comp_set = set(comp)
            is_max = True
            for u in comp:
                for nb in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                    if int(nb) not in comp_set and not v[nb] < level:
                        is_max = False
                        break
                if not is_max:
                    break
            if is_max and not any(excluded[u] for u in comp):
                flagged.extend(comp)
        offenders[hid] = sorted(flagged)
    return LocalMaximaReport(offenders=offenders)


def mirror_permutation(domain: SampleDomain, axis: int, value: float,
                       tol: float = 1e-9) -> np.ndarray:
    """Sample permutation of the reflection coordinate[axis] -> 2*value - x.

    Raises DegenerateInput when the sample set is not mirror-closed.
    """
    mirrored = domain.positions.copy()
    mirrored[:, axis] = 2.0 * value - mirrored[:, axis]
    d, idx = domain.kdtree().query(mirrored, k=1)
    if np.max(d) > tol:
        bad = int(np.argmax(d))
        raise DegenerateInput(
            f"sample {bad} has no mirror partner within {tol}")
    return idx.astype(np.int64)
