import warnings

import numpy as np
import pytest

from conftest import bfs_labels, dijkstra
from perclab import rng
from perclab.cluster import (arrival_points, bfs_distances, chemical_distance, conductance_profile,
                             label_clusters)
from perclab.errors import EmptyCluster, EmptyShell
from perclab.lattice import BondConfig, BoxGeometry, sample_config


def test_full_lattice_single_cluster():
    cl = label_clusters(sample_config(BoxGeometry(2, 8, "periodic"), 1.0, 0))
    assert cl.size == 64
    assert set(cl.local_degrees.tolist()) == {4}


def test_empty_configuration_warns():
    with pytest.warns(EmptyCluster):
        cl = label_clusters(sample_config(BoxGeometry(2, 4), 0.0, 0))
    assert cl.size == 1 and cl.degenerate
    assert len(cl.component_sizes()) == 16


def test_hand_example_two_components():
    # component A: 5 sites in an L shape, component B: 3 sites in a row
    bonds = [((0, 0), 0), ((1, 0), 0), ((2, 0), 0), ((0, 0), 1),
             ((0, 3), 0), ((1, 3), 0)]
    cfg = BondConfig.from_bonds(BoxGeometry(2, 4, centered=False), bonds)
    cl = label_clusters(cfg)
    sizes = sorted(cl.component_sizes().values(), reverse=True)
    assert sizes[:2] == [5, 3] and sum(sizes) == 16
    assert np.array_equal(cl.labels, bfs_labels(cfg))
    assert cl.size == 5


@pytest.mark.parametrize("trial", range(20))
def test_union_find_matches_bfs(trial):
    key = rng.derive_key(123, trial)
    side = int(rng.integers(key, 0, 60)[0]) + 4
    p = float(rng.uniforms(key, 1)[0])
    boundary = "periodic" if trial % 2 else "free"
    cfg = sample_config(BoxGeometry(2, side, boundary), p, trial)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyCluster)
        cl = label_clusters(cfg)
    assert np.array_equal(cl.labels, bfs_labels(cfg))


def test_cluster_invariants():
    cl = label_clusters(sample_config(BoxGeometry(3, 10, "periodic"), 0.4, 8))
    nb = cl.neighbors
    for s in range(0, len(nb), 11):
        for y in cl.adjacency(s):
            assert s in cl.adjacency(y)
    assert (cl.local_degrees >= 1).all()
    dist = bfs_distances(cl, int(cl.sites[0]))
    assert (dist[cl.sites] >= 0).all()


def test_giant_tie_breaks_to_smallest_site():
    cfg = BondConfig.from_bonds(BoxGeometry(2, 5, centered=False), [((3, 3), 0), ((0, 0), 0)])
    cl = label_clusters(cfg)
    assert cl.giant == 0


def test_chemical_distance_basics():
    g = BoxGeometry(2, 7)
    cl = label_clusters(sample_config(g, 1.0, 0))
    a, b = g.index((-3, 1)), g.index((2, -2))
    assert chemical_distance(cl, a, a) == 0
    assert chemical_distance(cl, a, b) == 8
    cfg = BondConfig.from_bonds(g, [((0, 0), 0)])
    cl2 = label_clusters(cfg)
    assert chemical_distance(cl2, g.index((0, 0)), g.index((3, 3))) is None


def test_forced_detour_matches_dijkstra():
    # 5x5 full lattice with the middle column cut except at the top row
    g = BoxGeometry(2, 5)
    full = sample_config(g, 1.0, 0).bits.copy()
    for y in range(-2, 2):
        full[g.index((-1, y)) * 2 + 0] = False
    cfg = BondConfig(g, full)
    cl = label_clusters(cfg)
    a, b = g.index((-1, -2)), g.index((0, -2))
    dist = chemical_distance(cl, a, b)
    assert dist == dijkstra(cl, a, b)
    assert dist == 1 + 2 * 4          # up 4, across, down 4


def test_chemical_distance_symmetry_and_triangle():
    cl = label_clusters(sample_config(BoxGeometry(2, 20, "periodic"), 0.7, 3))
    key = rng.derive_key(9)
    pick = cl.sites[rng.integers(key, np.arange(30, dtype=np.uint64), cl.size)]
    for i in range(0, 30, 3):
        x, y, z = (int(s) for s in pick[i:i + 3])
        dxy = chemical_distance(cl, x, y)
        assert dxy == chemical_distance(cl, y, x) == dijkstra(cl, x, y)
        assert dxy <= chemical_distance(cl, x, z) + chemical_distance(cl, z, y)


def test_arrival_points():
    cl = label_clusters(sample_config(BoxGeometry(2, 9), 1.0, 0))
    assert arrival_points(cl, 1, 4) == [1, 2, 3, 4]
    g = BoxGeometry(2, 13)
    # cluster: origin -> up -> right along row 1 -> down to 2e and 5e
    bonds = [((0, 0), 1)] + [((x, 1), 0) for x in range(0, 5)] + [((2, 0), 1), ((5, 0), 1)]
    cl = label_clusters(BondConfig.from_bonds(g, bonds))
    assert arrival_points(cl, (1, 0), 6) == [2, 5]
    oracle = [k for k in range(1, 7) if cl.in_giant(g.index((k, 0)))]
    assert arrival_points(cl, (1, 0), 6) == oracle


def _brute_conductance(cl, R):
    g = cl.geometry
    inside = set(int(s) for s in cl.sites if np.abs(g.coords(int(s))).max() <= R)
    out = mass = 0
    for s in inside:
        for y in cl.adjacency(s):
            mass += 1
            out += y not in inside
    return out / mass


def test_conductance_block_example():
    cl = label_clusters(sample_config(BoxGeometry(2, 5), 1.0, 0))
    row = conductance_profile(cl, [1])[0]
    assert row.boundary_edges == 12 and row.stationary_mass == 36
    assert row.phi == pytest.approx(1 / 3, abs=1e-15)
    assert row.phi == _brute_conductance(cl, 1)


def test_conductance_whole_torus_is_zero():
    cl = label_clusters(sample_config(BoxGeometry(2, 9, "periodic"), 0.8, 2))
    assert conductance_profile(cl, [4])[0].phi == 0.0


def test_conductance_random_matches_brute_force():
    cl = label_clusters(sample_config(BoxGeometry(2, 21), 0.7, 4))
    for row in conductance_profile(cl, [2, 5, 8]):
        assert row.phi == pytest.approx(_brute_conductance(cl, row.R), abs=1e-15)


def test_conductance_empty_shell():
    cfg = BondConfig.from_bonds(BoxGeometry(2, 9), [((3, 3), 0)])
    cl = label_clusters(cfg)
    with pytest.raises(EmptyShell):
        conductance_profile(cl, [1])


def test_isoperimetric_scaling():
    cfg = sample_config(BoxGeometry(2, 161), 0.75, 31)
    cl = label_clusters(cfg)
    rows = conductance_profile(cl, [8, 16, 32, 64])
    scaled = [r.phi * r.volume ** 0.5 for r in rows]
    assert min(scaled) > 0.5
