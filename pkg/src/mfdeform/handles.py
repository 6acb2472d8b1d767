"""Handles: user-controlled frames bound to domain samples.

A point handle occupies a single sample; a segment handle is a sampled
polyline (a set of samples sharing one transform). Virtual handles are
engine-inserted point handles. Handle positions from a handle file are
snapped onto existing samples or inserted as new ones, since handles
must be graph nodes for intrinsic distances to reach them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import DEFAULT_BASIS, basis_from_spec, basis_to_spec
from .domain import SampleDomain, insert_points
from .errors import DegenerateInput

KIND_POINT = "real-point"
KIND_SEGMENT = "real-segment"
KIND_VIRTUAL = "virtual"


@dataclass
class Handle:
    id: int
    kind: str
    sample_indices: tuple
    basis: object = field(default_factory=lambda: DEFAULT_BASIS)
    support_override: float | None = None  # user-pinned radius, else sized per alpha
    support_r: float | None = None          # effective radius, set by weight computation

    def __post_init__(self):
        if not self.sample_indices:
            raise DegenerateInput(f"handle {self.id} has no samples")
        self.sample_indices = tuple(int(i) for i in self.sample_indices)
        if self.kind == KIND_POINT and len(self.sample_indices) != 1:
            raise DegenerateInput(f"point handle {self.id} must have exactly one sample")

    @property
    def is_virtual(self) -> bool:
        return self.kind == KIND_VIRTUAL


def validate_handles(domain: SampleDomain, handles) -> None:
    n = domain.num_points
    seen = set()
    for h in handles:
        if h.id in seen:
            raise DegenerateInput(f"duplicate handle id {h.id}")
        seen.add(h.id)
        for s in h.sample_indices:
            if not 0 <= s < n:
                raise DegenerateInput(f"handle {h.id} references sample {s} outside domain")


def handle_set_hash(handles) -> str:
    import hashlib
    payload = json.dumps(
        [[h.id, h.kind, list(h.sample_indices), basis_to_spec(h.basis)] for h in handles],
        sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def bind_handle_specs(domain: SampleDomain, specs, default_basis=None):
    """Resolve handle file entries against a domain.

    Entries referencing positions are snapped/inserted into the domain
    (handles are part of the sample set); entries referencing sample
    indices bind directly. Returns (domain, handles); the domain is a
    new value when samples were inserted.
    """
    if default_basis is None:
        default_basis = DEFAULT_BASIS

    needed = []
    for spec in specs:
        if "position" in spec:
            needed.append(np.asarray(spec["position"], dtype=np.float64)[None, :])
        elif "positions" in spec:
            needed.append(np.asarray(spec["positions"], dtype=np.float64))
    if needed:
        domain, mapped = insert_points(domain, np.vstack(needed))
    cursor = 0

    handles = []
    for i, spec in enumerate(specs):
        hid = int(spec.get("id", i))
        basis = basis_from_spec(spec["basis"]) if "basis" in spec else default_basis
        if "sample" in spec:
            idx = (int(spec["sample"]),)
        elif "samples" in spec:
            idx = tuple(int(s) for s in spec["samples"])
        elif "position" in spec:
            idx = (mapped[cursor],)
            cursor += 1
        elif "positions" in spec:
            count = len(spec["positions"])
            idx = tuple(mapped[cursor:cursor + count])
            cursor += count
        else:
            raise DegenerateInput(f"handle entry {i} has no samples or positions")
        if "kind" in spec:  # round-tripped file, keeps virtual handles virtual
            kind = spec["kind"]
        else:
            declared = spec.get("type", "point" if len(idx) == 1 else "segment")
            kind = KIND_POINT if declared == "point" else KIND_SEGMENT
        handles.append(Handle(id=hid, kind=kind, sample_indices=idx, basis=basis))

    validate_handles(domain, handles)
    return domain, handles


def load_handle_file(domain: SampleDomain, path):
    """Load a handle file; returns (domain, handles, options).

    File form: {"handles":[...], "alpha"?, "default_basis"?, "mirror"?}
    or a bare list of handle entries.
    """
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, list):
        doc = {"handles": doc}
    default_basis = None
    if "default_basis" in doc:
        default_basis = basis_from_spec(doc["default_basis"])
    domain, handles = bind_handle_specs(domain, doc["handles"], default_basis)
    options = {
        "alpha": float(doc.get("alpha", 1.0)),
        "mirror": doc.get("mirror"),
        "default_basis": default_basis,
    }
    return domain, handles, options


def handles_to_doc(handles, domain: SampleDomain | None = None) -> dict:
    entries = []
    for h in handles:
        entry = {
            "id": h.id,
            "type": "point" if len(h.sample_indices) == 1 else "segment",
            "kind": h.kind,
            "samples": list(h.sample_indices),
            "basis": basis_to_spec(h.basis),
        }
        if domain is not None:
            entry["positions"] = domain.positions[list(h.sample_indices)].tolist()
        entries.append(entry)
    return {"handles": entries}
