import numpy as np
import pytest

from mfdeform import (HandleTransform, delaunay_graph,
                      insert_virtual_handles, propagate_transforms,
                      solve_harmonic_fields)
from mfdeform.distance import HandleGraph
from mfdeform.errors import (DegenerateBlend, InsertionBudgetExceeded,
                             IsolatedVirtualHandle, NonRigidRealTransform)
from mfdeform.handles import KIND_VIRTUAL

from conftest import disk_fixture, point_handle


def make_graph(edges, nodes):
    nbr = {n: set() for n in nodes}
    for a, b in edges:
        nbr[a].add(b)
        nbr[b].add(a)
    return HandleGraph(
        node_ids=tuple(nodes), edges=frozenset(edges),
        neighbors={n: tuple(sorted(s)) for n, s in nbr.items()},
        isolated=frozenset(n for n, s in nbr.items() if not s))


def test_close_handle_trace(line_domain, close_handles):
    trace = insert_virtual_handles(line_domain, close_handles)
    first = trace.steps[0]
    # hand trace: handle 1 has delta/r_d = 6/7, beats handle 0's 1/2;
    # its farthest cell sample is x=10
    assert first.handle_id == 1
    assert first.inserted_index == 10
    assert abs(first.score - 6 / 7) < 1e-12
    assert [s.inserted_index for s in trace.steps] == [10, 6, 0]
    assert trace.score_monotone
    part = trace.final_partition
    assert all(part.delta(h) <= 0.0 for h in part.handle_ids)
    for h in trace.final_handles[len(close_handles):]:
        assert h.kind == KIND_VIRTUAL
        assert len(h.sample_indices) == 1


def test_no_insertion_when_satisfied(line_domain, far_handles):
    trace = insert_virtual_handles(line_domain, far_handles)
    assert trace.steps == []
    assert trace.final_handles == far_handles


def test_proposition_one_per_step():
    domain, handles = disk_fixture(1200, seed=13, num_handles=3)
    trace = insert_virtual_handles(domain, handles)
    assert trace.num_inserted > 0
    for step in trace.steps:
        assert step.r_d_after < step.r_d_before      # strictly reduced
        assert step.r_h_after == step.r_h_before     # untouched
    part = trace.final_partition
    assert all(part.delta(h) <= 0.0 for h in part.handle_ids)


def test_insertion_sites_are_distinct():
    domain, handles = disk_fixture(900, seed=17, num_handles=4)
    trace = insert_virtual_handles(domain, handles)
    sites = [s.inserted_index for s in trace.steps]
    assert len(sites) == len(set(sites))


def test_insertion_is_deterministic():
    domain, handles = disk_fixture(900, seed=17, num_handles=4)
    def run():
        fresh = [point_handle(h.id, h.sample_indices[0]) for h in handles]
        trace = insert_virtual_handles(domain, fresh)
        return [(s.handle_id, s.inserted_index, s.score) for s in trace.steps]
    assert run() == run()


def test_budget_exceeded(line_domain, close_handles):
    with pytest.raises(InsertionBudgetExceeded):
        insert_virtual_handles(line_domain, close_handles, max_insertions=1)


def test_single_handle_never_inserts(line_domain):
    trace = insert_virtual_handles(line_domain, [point_handle(0, 4)])
    assert trace.steps == []


def test_trace_json(line_domain, close_handles):
    import json
    trace = insert_virtual_handles(line_domain, close_handles)
    doc = json.loads(trace.to_json())
    assert doc[0] == {"handle": 1, "inserted_index": 10, "score": 6 / 7}


def test_harmonic_constant_single_real():
    graph = make_graph([(0, 1), (1, 2)], [0, 1, 2])
    fields = solve_harmonic_fields(graph, [0])
    np.testing.assert_allclose(fields.values, 1.0, atol=1e-8)
    assert fields.values[0, 0] == 1.0  # boundary pinned exactly
    np.testing.assert_allclose(fields.varpi_sum, 1.0, atol=1e-8)


def test_harmonic_path_midpoint():
    graph = make_graph([(0, 2), (2, 1)], [0, 1, 2])  # real 0 - virtual 2 - real 1
    fields = solve_harmonic_fields(graph, [0, 1])
    assert abs(fields.field_of(0)[2] - 0.5) < 1e-9
    assert abs(fields.field_of(1)[2] - 0.5) < 1e-9
    assert fields.field_of(0)[0] == 1.0 and fields.field_of(0)[1] == 0.0


def test_harmonic_path_two_virtuals():
    # real 0 - v2 - v3 - real 1: exact solution (2/3, 1/3)
    graph = make_graph([(0, 2), (2, 3), (3, 1)], [0, 1, 2, 3])
    fields = solve_harmonic_fields(graph, [0, 1])
    assert abs(fields.field_of(0)[2] - 2 / 3) < 1e-9
    assert abs(fields.field_of(0)[3] - 1 / 3) < 1e-9
    assert abs(fields.field_of(1)[2] - 1 / 3) < 1e-9


def test_harmonic_maximum_principle_and_mean_value():
    rng = np.random.default_rng(23)
    nodes = list(range(12))
    edges = set()
    for i in range(1, 12):
        edges.add((int(rng.integers(0, i)), i))
    for _ in range(6):
        a, b = rng.integers(0, 12, 2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    graph = make_graph(sorted(edges), nodes)
    fields = solve_harmonic_fields(graph, [0, 1, 2])
    assert fields.values.min() >= 0.0 and fields.values.max() <= 1.0
    for row in range(fields.values.shape[0]):
        for nid in nodes[3:]:
            col = fields.node_ids.index(nid)
            nb = [fields.node_ids.index(m) for m in graph.neighbors[nid]]
            mean = fields.values[row, nb].mean()
            assert abs(fields.values[row, col] - mean) <= 1e-8


def test_isolated_virtual_raises():
    graph = make_graph([(0, 1)], [0, 1, 2])  # virtual 2 disconnected
    with pytest.raises(IsolatedVirtualHandle):
        solve_harmonic_fields(graph, [0, 1])


def test_harmonic_nonconvergence(monkeypatch):
    import mfdeform.virtual as virtual_mod
    from mfdeform.errors import NonConvergence
    monkeypatch.setattr(virtual_mod, "HARMONIC_MAX_ITER", 2)
    # a 6-virtual chain cannot settle below 1e-10 in two sweeps
    nodes = list(range(8))
    edges = [(i, i + 1) for i in range(7)]
    graph = make_graph(edges, nodes)
    with pytest.raises(NonConvergence):
        solve_harmonic_fields(graph, [0, 7])


def test_propagate_uniform_transform():
    graph = make_graph([(0, 2), (2, 1)], [0, 1, 2])
    fields = solve_harmonic_fields(graph, [0, 1])
    theta = np.radians(33.0)
    tr = HandleTransform.from_rigid(
        [np.cos(theta / 2), 0, 0, np.sin(theta / 2)], [0.3, -0.7])
    out = propagate_transforms(fields, {0: tr, 1: tr})
    assert out[0] is tr and out[1] is tr  # real handles verbatim
    assert np.abs(out[2].matrix - tr.matrix).max() <= 1e-9


def test_propagate_translation_average():
    graph = make_graph([(0, 2), (2, 1)], [0, 1, 2])
    fields = solve_harmonic_fields(graph, [0, 1])
    a = HandleTransform.from_rigid([1, 0, 0, 0], [1.0, 0.0])
    b = HandleTransform.from_rigid([1, 0, 0, 0], [0.0, 1.0])
    out = propagate_transforms(fields, {0: a, 1: b})
    assert np.abs(out[2].translation - [0.5, 0.5]).max() <= 1e-9
    assert np.abs(out[2].quaternion - [1, 0, 0, 0]).max() <= 1e-12


def test_propagate_opposite_rotations_cancel():
    graph = make_graph([(0, 2), (2, 1)], [0, 1, 2])
    fields = solve_harmonic_fields(graph, [0, 1])
    plus = HandleTransform.from_rigid(
        [np.cos(np.radians(10)), 0, 0, np.sin(np.radians(10))], [0.0, 0.0])
    minus = HandleTransform.from_rigid(
        [np.cos(np.radians(10)), 0, 0, -np.sin(np.radians(10))], [0.0, 0.0])
    out = propagate_transforms(fields, {0: plus, 1: minus})
    assert np.abs(out[2].matrix - np.eye(3)).max() <= 1e-12


def test_propagate_hemisphere_alignment():
    graph = make_graph([(0, 2), (2, 1)], [0, 1, 2])
    fields = solve_harmonic_fields(graph, [0, 1])
    theta = np.radians(40.0)
    q = np.array([np.cos(theta / 2), 0, 0, np.sin(theta / 2)])
    a = HandleTransform.from_rigid(q, [0.0, 0.0])
    b = HandleTransform.from_rigid(-q, [0.0, 0.0])  # same rotation, flipped sign
    out = propagate_transforms(fields, {0: a, 1: b})
    assert np.abs(out[2].linear - a.linear).max() <= 1e-12


def test_propagate_rejects_affine():
    graph = make_graph([(0, 2), (2, 1)], [0, 1, 2])
    fields = solve_harmonic_fields(graph, [0, 1])
    shear = np.eye(3)
    shear[0, 1] = 0.4
    with pytest.raises(NonRigidRealTransform):
        propagate_transforms(fields, {
            0: HandleTransform.from_matrix(shear),
            1: HandleTransform.identity(2)})


def test_propagate_degenerate_blend():
    # hemisphere alignment cannot flip quaternions orthogonal to the
    # reference; a +180/-180 pair about z then cancels exactly
    from mfdeform.virtual import HarmonicFields
    fields = HarmonicFields(
        node_ids=(0, 1, 2, 3), real_ids=(0, 1, 2),
        values=np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.5],
            [0.0, 0.0, 1.0, 0.5],
        ]),
        varpi_sum=np.array([1.0, 1.0, 1.0, 1.0]), iterations=1)
    ref = HandleTransform.identity(2)
    plus = HandleTransform.from_rigid([0, 0, 0, 1.0], [0.0, 0.0])
    minus = HandleTransform.from_rigid([0, 0, 0, -1.0], [0.0, 0.0])
    with pytest.raises(DegenerateBlend):
        propagate_transforms(fields, {0: ref, 1: plus, 2: minus})


def test_propagation_permutation_invariance():
    domain, handles = disk_fixture(700, seed=29, num_handles=3)
    trace = insert_virtual_handles(domain, handles)
    part = trace.final_partition
    graph = delaunay_graph(part)
    fields = solve_harmonic_fields(graph, [h.id for h in handles])
    rng = np.random.default_rng(0)
    poses = {}
    for h in handles:
        th = rng.uniform(-0.5, 0.5)
        poses[h.id] = HandleTransform.from_rigid(
            [np.cos(th / 2), 0, 0, np.sin(th / 2)], rng.uniform(-1, 1, 2))
    out = propagate_transforms(fields, poses)
    assert set(out) == {h.id for h in trace.final_handles}
