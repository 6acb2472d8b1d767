"""Shared fixture builders: deterministic domains and handle layouts."""

import numpy as np
import pytest

from mfdeform import Handle, build_domain, insert_points
from mfdeform.handles import KIND_POINT


def line_positions(n=11, spacing=1.0):
    return [[i * spacing, 0.0] for i in range(n)]


@pytest.fixture
def line_domain():
    """Integer line x = 0..10, k=2."""
    return build_domain(line_positions(), k=2)


def point_handle(hid, sample):
    return Handle(id=hid, kind=KIND_POINT, sample_indices=(sample,))


@pytest.fixture
def far_handles():
    """x=2 / x=8 on the line: support condition already satisfied."""
    return [point_handle(0, 2), point_handle(1, 8)]


@pytest.fixture
def close_handles():
    """x=2 / x=3 on the line: classic violating pair."""
    return [point_handle(0, 2), point_handle(1, 3)]


def disk_positions(n, seed, radius=1.0):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    th = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def annulus_positions(n, seed, r_in=0.5, r_out=1.0):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.random(n) * (r_out**2 - r_in**2) + r_in**2)
    th = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def disk_fixture(n, seed, num_handles, annulus=False, k=None):
    """Random 2D domain plus distinct point handles at random samples."""
    pos = annulus_positions(n, seed) if annulus else disk_positions(n, seed)
    domain = build_domain(pos, k=k)
    rng = np.random.default_rng(seed + 1)
    picks = rng.choice(n, size=num_handles, replace=False)
    handles = [point_handle(i, int(s)) for i, s in enumerate(sorted(picks))]
    return domain, handles


def crowded_disk_fixture(n=3000, seed=3, k=16):
    """Disk with four handles crowding one side; insertion resolves them.

    k=16 keeps graph distances smooth enough that the discrete weight
    field matches the continuous one's no-local-maxima behavior (coarse
    k-NN graphs on random samplings produce ~1e-3 spurious bumps in the
    flat basis tails near handle origins).
    """
    domain = build_domain(disk_positions(n, seed), k=k)
    crowd = np.array([[0.3, 0.1], [0.45, -0.1], [0.55, 0.15], [0.42, 0.3]])
    domain, idx = insert_points(domain, crowd)
    handles = [point_handle(i, s) for i, s in enumerate(idx)]
    return domain, handles


def ring_disk_fixture(n=3000, seed=3, k=16):
    """Disk with three well-separated ring handles; no insertion needed."""
    domain = build_domain(disk_positions(n, seed), k=k)
    ring = 0.5 * np.array([[1.0, 0.0], [-0.5, 0.87], [-0.5, -0.87]])
    domain, idx = insert_points(domain, ring)
    handles = [point_handle(i, s) for i, s in enumerate(idx)]
    return domain, handles


def mirrored_annulus_fixture(n_half=600, seed=7):
    """Mirror-symmetric annulus (about x=0) with 8 ring handles.

    Samples avoid the axis so the mirror permutation is a clean
    involution; the handle ring is mirror-closed and far enough apart
    that no virtual insertion is needed.
    """
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n_half:
        r = np.sqrt(rng.random() * (1.0 - 0.25) + 0.25)
        th = 2.0 * np.pi * rng.random()
        x, y = r * np.cos(th), r * np.sin(th)
        if x > 0.02:
            pts.append([x, y])
    half = np.asarray(pts)
    mirrored = half.copy()
    mirrored[:, 0] = -mirrored[:, 0]
    positions = np.vstack([half, mirrored])

    domain = build_domain(positions)
    angles = np.radians(22.5 + 45.0 * np.arange(8))
    ring = 0.75 * np.column_stack([np.cos(angles), np.sin(angles)])
    domain, idx = insert_points(domain, ring)
    handles = [point_handle(i, s) for i, s in enumerate(idx)]
    return domain, handles


def mirrored_disk_fixture(n_half=1500, seed=7, k=16):
    """Mirror-symmetric disk (about x=0) with a 6-ring plus center handle.

    Handles are far enough apart that no virtual insertion is needed and
    the k=16 graph keeps the local-maxima scan clean, so the fixture can
    carry every invariant row of `mfdeform check` at once.
    """
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n_half:
        r = np.sqrt(rng.random())
        th = 2.0 * np.pi * rng.random()
        x, y = r * np.cos(th), r * np.sin(th)
        if x > 0.02:
            pts.append([x, y])
    half = np.asarray(pts)
    mirrored = half.copy()
    mirrored[:, 0] = -mirrored[:, 0]
    domain = build_domain(np.vstack([half, mirrored]), k=k)

    angles = np.radians(60.0 * np.arange(6))
    sites = 0.62 * np.column_stack([np.cos(angles), np.sin(angles)])
    domain, idx = insert_points(domain, np.vstack([sites, [[0.0, 0.0]]]))
    handles = [point_handle(i, s) for i, s in enumerate(idx)]
    return domain, handles


def bar_fixture(total=4765, seed=11, length=10.0):
    """3D bar along z, centered on the z axis, with end handles on the axis."""
    rng = np.random.default_rng(seed)
    body = np.column_stack([
        rng.random(total - 2) - 0.5,
        rng.random(total - 2) - 0.5,
        rng.random(total - 2) * length,
    ])
    domain = build_domain(body)
    ends = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, length]])
    domain, idx = insert_points(domain, ends)
    handles = [point_handle(0, idx[0]), point_handle(1, idx[1])]
    assert domain.num_points == total
    return domain, handles
