import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perclab.cluster import arrival_points, label_clusters
from perclab.errors import CorruptHeader, NoArrival, NonPeriodicShift, VersionMismatch
from perclab.lattice import (BondConfig, BoxGeometry, decode_config, induced_shift, sample_config,
                             shift_config)


@pytest.mark.parametrize("d,side,boundary", [(2, 5, "free"), (3, 4, "free"), (2, 6, "periodic"),
                                             (3, 3, "periodic"), (1, 7, "free")])
def test_bond_count(d, side, boundary):
    g = BoxGeometry(d, side, boundary)
    expected = d * side ** d if boundary == "periodic" else d * side ** (d - 1) * (side - 1)
    assert g.bond_count == expected
    assert g.n_slots == d * side ** d


def test_canonical_index_round_trip():
    g = BoxGeometry(3, 5)
    for slot in range(0, g.n_slots, 7):
        site, axis = divmod(slot, g.d)
        assert site * g.d + axis == slot
        c = g.coords(site)
        assert g.index(c) == site


@pytest.mark.parametrize("p,frac", [(1.0, 1.0), (0.0, 0.0)])
def test_degenerate_probabilities(p, frac):
    cfg = sample_config(BoxGeometry(2, 9), p, 3)
    assert cfg.density == frac


def test_density_within_binomial_error():
    g = BoxGeometry(2, 512)
    cfg = sample_config(g, 0.75, 2024)
    sigma = np.sqrt(0.75 * 0.25 / g.bond_count)
    assert abs(cfg.density - 0.75) < 4 * sigma


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_density_million_bonds(p):
    g = BoxGeometry(2, 708, "periodic")          # 1,002,528 bonds
    cfg = sample_config(g, p, 99)
    sigma = np.sqrt(p * (1 - p) / g.bond_count)
    assert abs(cfg.density - p) < 5 * sigma


def test_resampling_is_deterministic_across_threads():
    g = BoxGeometry(2, 1100)                       # spans several sampling chunks
    a = sample_config(g, 0.6, 17, threads=1)
    b = sample_config(g, 0.6, 17, threads=4)
    assert a == b
    assert sample_config(g, 0.6, 18) != a


def test_shift_by_zero_and_period():
    g = BoxGeometry(2, 8, "periodic")
    cfg = sample_config(g, 0.5, 1)
    assert shift_config(cfg, (0, 0)) == cfg
    assert shift_config(cfg, (8, 0)) == cfg
    assert shift_config(cfg, (0, -16)) == cfg


@given(st.tuples(st.integers(-9, 9), st.integers(-9, 9)), st.tuples(st.integers(-9, 9), st.integers(-9, 9)))
@settings(max_examples=30, deadline=None)
def test_shift_group_action(x, y):
    g = BoxGeometry(2, 6, "periodic")
    cfg = sample_config(g, 0.5, 4)
    both = shift_config(shift_config(cfg, x), y)
    assert both == shift_config(cfg, np.add(x, y))


def test_shift_hand_example():
    g = BoxGeometry(2, 3, "periodic", centered=False)
    cfg = BondConfig.from_bonds(g, [((0, 0), 0)])
    out = shift_config(cfg, (1, 0))
    expect = BondConfig.from_bonds(g, [((2, 0), 0)])
    assert out == expect
    assert out.open_count == 1


def test_shift_requires_torus():
    cfg = sample_config(BoxGeometry(2, 4), 0.5, 0)
    with pytest.raises(NonPeriodicShift):
        shift_config(cfg, (1, 0))


def test_induced_shift_full_lattice():
    cfg = sample_config(BoxGeometry(2, 6, "periodic"), 1.0, 0)
    cl = label_clusters(cfg)
    for e in (1, -1, 2, -2):
        shifted, n = induced_shift(cfg, cl, e)
        assert n == 1
        assert shifted == cfg


def _ladder_with_gap():
    """Torus of side 7 whose giant cluster avoids e and 2e but contains 3e."""
    g = BoxGeometry(2, 7, "periodic")
    bonds = []
    for x in range(-3, 4):           # the whole row x_2 = 1 and x_2 = -1 ...
        bonds.append(((x, 1), 0))
        bonds.append(((x, -1), 0))
    for x in (0, 3, -3, -2):         # ... joined through the axis at x = 0, 3, -3, -2
        bonds.append(((x, 0), 1))
        bonds.append(((x, -1), 1))
    return BondConfig.from_bonds(g, bonds)


def test_induced_shift_explicit_gap():
    cfg = _ladder_with_gap()
    cl = label_clusters(cfg)
    g = cfg.geometry
    assert cl.in_giant(g.origin)
    assert not cl.in_giant(g.index((1, 0))) and not cl.in_giant(g.index((2, 0)))
    shifted, n = induced_shift(cfg, cl, (1, 0))
    assert n == 3
    assert label_clusters(shifted).origin_in_giant
    assert shifted == shift_config(cfg, (3, 0))


def test_induced_shift_iterates_to_arrivals():
    g = BoxGeometry(2, 24, "periodic")
    from perclab.experiments import sample_environment
    cfg, cl, _ = sample_environment(g, 0.7, 12)
    arrivals = arrival_points(cl, 1, 23)
    total, cur = 0, cfg
    sums = []
    for _ in range(len(arrivals)):
        cur, n = induced_shift(cur, label_clusters(cur), 1)
        total += n
        sums.append(total)
    assert sums == arrivals


def test_no_arrival():
    g = BoxGeometry(2, 5, "periodic")
    cfg = BondConfig.from_bonds(g, [((0, 0), 1)])
    cl = label_clusters(cfg)
    with pytest.raises(NoArrival):
        induced_shift(cfg, cl, 1)


@pytest.mark.parametrize("geom", [BoxGeometry(2, 13), BoxGeometry(3, 5, "periodic"),
                                  BoxGeometry.slab(2, 3), BoxGeometry(2, 4, centered=False)])
def test_binary_round_trip(geom):
    cfg = sample_config(geom, 0.37, 2 ** 63 + 5)
    spec = {"command": "generate", "seed": 5}
    data = cfg.to_bytes(spec)
    back, meta = decode_config(data)
    assert back == cfg
    assert meta == spec
    assert np.array_equal(back.bits, cfg.bits)
    assert decode_config(cfg.to_bytes())[1] is None


def test_binary_errors():
    data = sample_config(BoxGeometry(2, 6), 0.5, 1).to_bytes()
    with pytest.raises(CorruptHeader):
        decode_config(data[:10])
    with pytest.raises(CorruptHeader):
        decode_config(data[:-1])
    with pytest.raises(CorruptHeader):
        decode_config(b"XXXX1" + data[5:])
    with pytest.raises(VersionMismatch):
        decode_config(b"PERC2" + data[5:])
