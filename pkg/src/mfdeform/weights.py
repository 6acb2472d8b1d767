"""Closed-form blending weights.

Each handle carries a basis evaluated on normalized intrinsic distance;
normalizing the per-handle basis values by their sum yields weights
that are non-negative, sum to one, interpolate handles (compact regime)
and vanish outside supports. Supports are sized from the Voronoi
metrics: r = (1-alpha) r_d + alpha r_h, which is only satisfiable while
r_d < r_h; otherwise virtual handles must be inserted first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix

from .basis import BezierBasis, GaussianBasis, eval_bezier, eval_gaussian
from .distance import (DistanceField, VoronoiPartition, compute_handle_fields,
                       multi_source_distances, voronoi_partition)
from .domain import COINCIDENCE_TOL, SampleDomain
from .errors import (DegenerateInput, EmptyDomain, UncoveredSample,
                     UnresolvedSupportViolation)
from .handles import Handle, handle_set_hash, validate_handles

GAUSSIAN_TRUNCATE = 1e-14
DENOMINATOR_GUARD = 1e-300

REGIME_INTERPOLATING = "interpolating"
REGIME_APPROXIMATING = "approximating"


def support_radii(partition: VoronoiPartition, alpha: float = 1.0):
    """Per-handle support radius for the shape factor alpha in (0, 1].

    Returns (radii, violating) where violating lists handles with
    r_d >= r_h, for which no radius can both cover the cell and respect
    the separation; callers resolve those by virtual handle insertion.
    """
    if not 0.0 < alpha <= 1.0:
        raise DegenerateInput(f"alpha must be in (0, 1], got {alpha}")
    radii = {}
    for hid in partition.handle_ids:
        rd, rh = partition.r_d[hid], partition.r_h[hid]
        radii[hid] = (1.0 - alpha) * rd + alpha * rh
    return radii, partition.violations()


def handle_distance_field(domain: SampleDomain, handle: Handle) -> DistanceField:
    """Intrinsic distance to the handle's nearest sample (point or polyline)."""
    return multi_source_distances(domain, handle.sample_indices)


@dataclass
class WeightField:
    """Sparse per-sample weights over an ordered handle-id list."""

    handle_ids: tuple
    matrix: csr_matrix          # (num_samples, num_handles)
    regime: str
    metadata: dict = field(default_factory=dict)

    @property
    def num_samples(self) -> int:
        return self.matrix.shape[0]

    def column_of(self, hid: int) -> int:
        return self.handle_ids.index(hid)

    def sample_weights(self, sample: int) -> np.ndarray:
        return np.asarray(self.matrix[sample].todense()).ravel()

    def handle_column(self, hid: int) -> np.ndarray:
        col = self.column_of(hid)
        return np.asarray(self.matrix[:, col].todense()).ravel()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _basis_rows(domain, handles_sorted, fields, radii, partition):
    """(H, N) basis values, handles in id order; sets handle.support_r."""
    rows = []
    gaussian_rows = []
    for row, h in enumerate(handles_sorted):
        d = fields[h.id]
        if isinstance(h.basis, GaussianBasis):
            r_norm = partition.r_h[h.id]
            with np.errstate(invalid="ignore"):
                t = d / r_norm
            t[np.isnan(t)] = np.inf  # unreachable stays uncovered
            rows.append(eval_gaussian(h.basis, t))
            gaussian_rows.append(row)
            h.support_r = np.inf
        else:
            r = h.support_override if h.support_override is not None else radii[h.id]
            if not r > 0.0:
                raise UnresolvedSupportViolation(
                    f"handle {h.id} has non-positive support radius {r}")
            with np.errstate(invalid="ignore"):
                t = d / r
            t[np.isnan(t)] = np.inf
            rows.append(eval_bezier(h.basis, t))
            h.support_r = float(r)
    return np.vstack(rows), gaussian_rows


def compute_weights(domain: SampleDomain, handles, alpha: float = 1.0, *,
                    partition: VoronoiPartition | None = None,
                    fields: dict | None = None) -> WeightField:
    """Normalized blending weights for every sample.

    Compact (Bezier) handles require the support condition to be
    resolved (no handle with r_d > r_h); any Gaussian handle switches
    the whole field into the approximating regime where the condition
    is waived. Raises UncoveredSample if some sample lies outside every
    support.
    """
    handles = sorted(handles, key=lambda h: h.id)
    if not handles:
        raise DegenerateInput("at least one handle required")
    validate_handles(domain, handles)

    fields = compute_handle_fields(domain, handles, cache=fields)
    if partition is None:
        partition = voronoi_partition(domain, handles, fields=fields)
    radii, _ = support_radii(partition, alpha)

    has_gaussian = any(isinstance(h.basis, GaussianBasis) for h in handles)
    has_bezier = any(isinstance(h.basis, BezierBasis) for h in handles)
    if not has_gaussian:
        unsatisfiable = [hid for hid in partition.handle_ids
                         if partition.r_d[hid] > partition.r_h[hid]]
        if unsatisfiable:
            raise UnresolvedSupportViolation(
                f"handles {unsatisfiable} have r_d > r_h; insert virtual handles first")

    phi, gaussian_rows = _basis_rows(domain, handles, fields, radii, partition)

    raw_denom = phi.sum(axis=0)
    if gaussian_rows:
        truncated = phi.copy()
        truncated[truncated < GAUSSIAN_TRUNCATE] = 0.0
        denom = truncated.sum(axis=0)
        # keep raw values where truncation alone emptied a sample
        dead = (denom == 0.0) & (raw_denom >= DENOMINATOR_GUARD)
        if np.any(dead):
            truncated[:, dead] = phi[:, dead]
            denom[dead] = raw_denom[dead]
        phi = truncated
    else:
        denom = raw_denom

    if np.any(denom < DENOMINATOR_GUARD):
        bad = int(np.argmax(denom < DENOMINATOR_GUARD))
        raise UncoveredSample(
            f"sample {bad} is outside every handle support (zero blending denominator)")

    weights = phi / denom
    matrix = csr_matrix(weights.T)
    matrix.eliminate_zeros()

    regime = REGIME_APPROXIMATING if has_gaussian else REGIME_INTERPOLATING
    meta = {
        "alpha": alpha,
        "radii": {h.id: h.support_r for h in handles},
        "mixed_bases": has_gaussian and has_bezier,
        "handle_set_hash": handle_set_hash(handles),
    }
    return WeightField(
        handle_ids=tuple(h.id for h in handles), matrix=matrix,
        regime=regime, metadata=meta)


def weights_at_query(field: WeightField, domain: SampleDomain, query,
                     k: int = 4) -> np.ndarray:
    """Weights at an arbitrary point by reciprocal-distance blending of
    the k Euclidean-nearest samples; exact on samples themselves."""
    if domain.num_points == 0:
        raise EmptyDomain("domain has no samples")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (domain.dim,) or not np.all(np.isfinite(q)):
        raise DegenerateInput(f"query must be a finite {domain.dim}-vector")
    tree = domain.kdtree()
    d, i = tree.query(q, k=1)
    if d < COINCIDENCE_TOL:
        return field.sample_weights(int(i))
    kk = min(k, domain.num_points)
    d, idx = tree.query(q, k=kk)
    d = np.atleast_1d(d)
    idx = np.atleast_1d(idx)
    inv = 1.0 / d
    coeff = inv / inv.sum()
    out = np.zeros(len(field.handle_ids))
    for c, j in zip(coeff, idx):
        out += c * field.sample_weights(int(j))
    return out / out.sum()


# --- export formats -------------------------------------------------------

MFW_MAGIC = b"MFW1"


def save_weights_csv(field: WeightField, path) -> None:
    """Dense CSV: header "sample,<handle ids...>", 17 significant digits."""
    dense = field.dense()
    with open(path, "w") as fh:
        fh.write("sample," + ",".join(str(h) for h in field.handle_ids) + "\n")
        for i, row in enumerate(dense):
            fh.write(str(i) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")


def load_weights_csv(path):
    """Returns (handle_ids, dense matrix)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        ids = tuple(int(v) for v in header[1:])
        rows = [[float(v) for v in line.strip().split(",")[1:]] for line in fh if line.strip()]
    return ids, np.asarray(rows, dtype=np.float64)


def save_weights_binary(field: WeightField, path) -> None:
    """MFW1: magic, LE u32 sample count, LE u32 handle count, row-major f64."""
    dense = np.ascontiguousarray(field.dense(), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MFW_MAGIC)
        fh.write(struct.pack("<II", dense.shape[0], dense.shape[1]))
        fh.write(dense.tobytes())


def load_weights_binary(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != MFW_MAGIC:
        raise DegenerateInput(f"{path} is not an MFW1 weight file")
    ns, nh = struct.unpack("<II", blob[4:12])
    mat = np.frombuffer(blob[12:], dtype="<f8")
    if mat.size != ns * nh:
        raise DegenerateInput("MFW1 payload size mismatch")
    return mat.reshape(ns, nh).astype(np.float64)
