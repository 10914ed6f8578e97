import dataclasses
import math

import numpy as np
import pytest

from isar_rcs import (GateSpec, ImageGrid, PointScatterer, Scenario, backproject, extract_rcs,
                      gate_image, sweep_statistics, synthesize_measurement, two_point_experiment)
from isar_rcs.extraction import (bp_gain, extract_from_image, find_clusters, nearest_rank,
                                 power_mean_db, repropagate)

from conftest import crandn


def test_gate_generous_radius_keeps_image(rng):
    grid = ImageGrid.square(0.2, 0.01)
    x = crandn(rng, grid.size)
    np.testing.assert_array_equal(gate_image(x, grid, GateSpec((0.0, 0.0), radius=1.0)), x)


def test_gate_smaller_than_spacing_keeps_one_pixel(rng):
    grid = ImageGrid.square(0.2, 0.01)
    x = crandn(rng, grid.size)
    g = gate_image(x, grid, GateSpec((0.03, -0.05), radius=0.004))
    j = grid.index_of(0.03, -0.05)
    assert np.count_nonzero(g) == 1 and g[j] == x[j]


def test_gate_two_point_scene_membership(grid, geom, op):
    y = synthesize_measurement([PointScatterer(-0.15, 0), PointScatterer(0.15, 0)], geom)
    img = backproject(y, grid, geom, "hann", op)
    gate = GateSpec((0.15, 0.0), radius=0.1)
    g = gate_image(img, grid, gate)
    px, py = grid.points()
    dist = np.hypot(px - 0.15, py)
    assert not np.any(g[dist > 0.1])
    np.testing.assert_array_equal(g[dist <= 0.1], img[dist <= 0.1])
    near_a = np.hypot(px + 0.15, py) < 0.1
    assert not np.any(g[near_a])
    np.testing.assert_array_equal(gate_image(g, grid, gate), g)


def test_gate_errors():
    grid = ImageGrid.square(0.2, 0.01)
    with pytest.raises(ValueError):
        gate_image(np.ones(grid.size), grid, GateSpec((1.0, 0.0)))
    with pytest.raises(ValueError):
        gate_image(np.ones(grid.size), grid, GateSpec((0.005, 0.005), radius=0.001))
    with pytest.raises(ValueError):
        GateSpec((0.0, 0.0), radius=0.0)


@pytest.mark.parametrize("pos", [(0.0, 0.0), (0.07, -0.03), (-0.1, 0.1)])
def test_extract_single_pixel(pos):
    grid = ImageGrid.square(0.2, 0.01)
    gate = GateSpec(pos, radius=0.05)
    x = np.zeros(grid.size, complex)
    x[grid.index_of(*pos)] = 0.0316228
    assert extract_rcs(gate_image(x, grid, gate), grid, gate) == pytest.approx(-30.0, abs=1e-3)
    x[grid.index_of(*pos)] = 1.0 * np.exp(0.4j)
    assert extract_rcs(x, grid, gate) == pytest.approx(0.0, abs=1e-12)


def test_extract_all_zero_is_minus_inf():
    grid = ImageGrid.square(0.2, 0.01)
    assert extract_rcs(np.zeros(grid.size), grid, GateSpec((0, 0))) == -np.inf


def test_extract_phase_invariant(rng):
    grid = ImageGrid.square(0.2, 0.01)
    x = crandn(rng, grid.size)
    gate = GateSpec((0.02, 0.01))
    a = extract_rcs(x, grid, gate)
    assert extract_rcs(x * np.exp(2.1j), grid, gate) == pytest.approx(a, abs=1e-10)


def test_repropagate_matches_forward_sample(grid, geom, op, rng):
    # the eval sample (15 GHz, 0 deg) is not on the grid, so build a one-sample operator
    from isar_rcs import IsarOperator, MeasurementGeometry
    x = crandn(rng, grid.size)
    one = IsarOperator(grid, MeasurementGeometry([15e9], [0.3]))
    val = repropagate(x, grid, GateSpec((0, 0), eval_angle=0.3))
    assert val == pytest.approx(one.matvec(x)[0], rel=1e-12)


@pytest.mark.parametrize("window", ["none", "hann"])
@pytest.mark.parametrize("pos,dbsm_true", [((0.1, -0.2), 0.0), ((-0.25, 0.13), -30.0)])
def test_lone_scatterer_bp_extraction(grid, geom, op, window, pos, dbsm_true):
    y = synthesize_measurement([PointScatterer.from_dbsm(*pos, dbsm_true)], geom)
    img = backproject(y, grid, geom, window, op)
    gate = GateSpec(pos, radius=0.1)
    gain = bp_gain(grid, geom, gate, window, op)
    assert extract_rcs(gate_image(img, grid, gate), grid, gate, gain) == pytest.approx(
        dbsm_true, abs=0.2)


def test_bp_gain_off_grid_scatterer(grid, geom, op):
    pos = (0.1234, -0.0567)
    y = synthesize_measurement([PointScatterer(*pos, 0.5)], geom)
    sc = dataclasses.replace(Scenario(), window="none")
    val = extract_from_image(backproject(y, grid, geom, "none", op), sc, "bp", pos, op)
    assert val == pytest.approx(20 * math.log10(0.5), abs=0.2)


def test_two_point_bp(grid, geom, op):
    assert len(two_point_experiment(0.15, "bp", op=op).peaks) == 2
    assert len(two_point_experiment(0.05, "bp", op=op).peaks) == 1


def test_two_point_rejects_bad_input():
    with pytest.raises(ValueError):
        two_point_experiment(0.0, "bp")
    with pytest.raises(ValueError):
        two_point_experiment(0.1, "music")


def test_find_clusters():
    grid = ImageGrid.square(0.1, 0.01)
    img = np.zeros(grid.size)
    img[grid.index_of(-0.03, 0)] = 1.0
    img[grid.index_of(-0.02, 0.01)] = 1.0  # diagonal neighbour: same cluster
    img[grid.index_of(0.03, 0)] = 0.5
    img[grid.index_of(0.0, -0.04)] = 1e-5  # below -40 dB
    cl = find_clusters(img, grid, -40.0)
    assert len(cl) == 2
    assert cl[0][:3] == pytest.approx((-0.025, 0.005, 2))
    assert cl[1][:3] == pytest.approx((0.03, 0.0, 1))
    assert find_clusters(np.zeros(grid.size), grid) == []


def test_nearest_rank_oracle():
    vals = [5.0, 1.0, 4.0, 2.0, 3.0, 9.0, 8.0, 7.0, 6.0, 10.0]
    assert nearest_rank(vals, 0.10) == 1.0
    assert nearest_rank(vals, 0.90) == 9.0
    assert nearest_rank(vals, 0.15) == 2.0
    assert nearest_rank([-np.inf, 0.0, 1.0], 0.1) == -np.inf


def test_power_mean():
    assert power_mean_db([-30.0, -30.0]) == pytest.approx(-30.0)
    assert power_mean_db([0.0, -np.inf]) == pytest.approx(10 * math.log10(0.5))
    assert power_mean_db([-10.0, -20.0]) == pytest.approx(10 * math.log10(0.055))


def test_lone_scatterer_sweep_is_rotation_invariant():
    sc = dataclasses.replace(Scenario(), reference_dbsm=-np.inf)
    stats = sweep_statistics(0.3, "bp", sc)
    assert stats.values_dbsm.size == 360
    assert np.ptp(stats.values_dbsm) <= 0.1
    assert stats.p10_dbsm <= stats.p90_dbsm


def test_sweep_deterministic_and_order_independent():
    sc = Scenario()
    a = sweep_statistics(0.25, "bp", sc, n_positions=8, jobs=1)
    b = sweep_statistics(0.25, "bp", sc, n_positions=8, jobs=2)
    np.testing.assert_array_equal(a.values_dbsm, b.values_dbsm)
    assert (a.mean_dbsm, a.p10_dbsm, a.p90_dbsm) == (b.mean_dbsm, b.p10_dbsm, b.p90_dbsm)
    np.testing.assert_array_equal(a.positions_deg, 45.0 * np.arange(8))


def test_sweep_rejects_bad_input():
    with pytest.raises(ValueError):
        sweep_statistics(0.0, "bp")
    with pytest.raises(ValueError):
        sweep_statistics(0.3, "fft")
