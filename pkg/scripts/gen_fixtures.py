#!/usr/bin/env python3
"""Regenerate the bundled fixture files under fixtures/."""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from conftest import disk_positions, line_positions, mirrored_disk_fixture

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def write(name, doc):
    path = ROOT / name
    path.write_text(json.dumps(doc))
    print(f"wrote {path}")


def main():
    ROOT.mkdir(exist_ok=True)

    write("line_domain.json", {"dim": 2, "points": line_positions(), "k": 2})
    write("line_far_handles.json", {"handles": [
        {"id": 0, "type": "point", "sample": 2},
        {"id": 1, "type": "point", "sample": 8},
    ]})
    write("line_close_handles.json", {"handles": [
        {"id": 0, "type": "point", "sample": 2},
        {"id": 1, "type": "point", "sample": 3},
    ]})
    write("line_poses.json", [
        {"handle": 0, "quaternion": [1, 0, 0, 0], "translation": [1.0, 0.0]},
        {"handle": 1, "quaternion": [1, 0, 0, 0], "translation": [-1.0, 0.0]},
    ])

    # disk with three well-separated ring handles; k=16 keeps the discrete
    # weight field free of graph-noise local maxima
    pts = disk_positions(3000, seed=3)
    write("disk_domain.json", {"dim": 2, "points": pts.tolist(), "k": 16})
    ring = 0.5 * np.array([[1.0, 0.0], [-0.5, 0.87], [-0.5, -0.87]])
    write("disk_handles.json", {"handles": [
        {"id": i, "type": "point", "position": p.tolist()} for i, p in enumerate(ring)
    ]})
    write("disk_poses.json", [
        {"handle": 0, "angle_deg": 25.0, "center": ring[0].tolist()},
        {"handle": 1, "quaternion": [1, 0, 0, 0], "translation": [0.1, -0.1]},
    ])

    # crowded handles on the same disk: exercises virtual insertion
    crowd = np.array([[0.3, 0.1], [0.45, -0.1], [0.55, 0.15], [0.42, 0.3]])
    write("disk_crowded_handles.json", {"handles": [
        {"id": i, "type": "point", "position": p.tolist()} for i, p in enumerate(crowd)
    ]})

    # mirror-symmetric disk with its mirror map (check's symmetry row)
    domain, handles = mirrored_disk_fixture()
    write("mirrored_domain.json",
          {"dim": 2, "points": domain.positions.tolist(), "k": domain.k})
    write("mirrored_handles.json", {
        "mirror": {"axis": 0, "value": 0.0},
        "handles": [
            {"id": h.id, "type": "point",
             "position": domain.positions[h.sample_indices[0]].tolist()}
            for h in handles
        ],
    })


if __name__ == "__main__":
    main()
