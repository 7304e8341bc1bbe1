"""Cell layout, uniform drops, association, and the bounded random walk."""

import math

import numpy as np
import pytest

from beampower.config import ConfigError, NetworkConfig
from beampower.geometry import (
    associate,
    build_layout,
    drop_ues,
    mobility_step_m,
    reflect_into_cell,
    step_mobility,
    uniform_disk_point,
)


def test_two_site_line_spacing():
    # neighbor spacing is 1.5x the cell radius for both bearers
    voice = build_layout(NetworkConfig(q=0), m=1)
    assert voice.sites[0].x == 0.0 and voice.sites[0].y == 0.0
    assert voice.sites[1].x == pytest.approx(525.0)
    data = build_layout(NetworkConfig(q=1, m_list=(4,)), m=4)
    assert data.sites[1].x == pytest.approx(225.0)
    assert len(data.sites) == 2


def test_ring_layout_neighbor_spacing():
    cfg = NetworkConfig(q=1, l_bs=4, m_list=(4,))
    layout = build_layout(cfg, m=4)
    pts = [(s.x, s.y) for s in layout.sites]
    d01 = math.dist(pts[0], pts[1])
    assert d01 == pytest.approx(layout.intersite_m)
    # ring is equispaced: consecutive distances all equal
    for i in range(4):
        assert math.dist(pts[i], pts[(i + 1) % 4]) == pytest.approx(d01)


def test_degenerate_radius_rejected():
    with pytest.raises(ConfigError):
        NetworkConfig(q=0, cell_radius_m=0.0)
    with pytest.raises(ConfigError):
        NetworkConfig(q=0, l_bs=1)


def test_disk_drop_radial_cdf():
    # uniform area density: P(distance <= d) = (d/r)^2; check sup-norm < 1%
    rng = np.random.default_rng(11)
    r = 350.0
    n = 100_000
    d = np.empty(n)
    for i in range(n):
        x, y = uniform_disk_point(rng, 0.0, 0.0, r)
        d[i] = math.hypot(x, y)
    d.sort()
    emp = np.arange(1, n + 1) / n
    ana = (d / r) ** 2
    assert np.max(np.abs(emp - ana)) < 0.01


def test_drop_determinism_and_membership():
    layout = build_layout(NetworkConfig(q=0), m=1)
    ues_a = drop_ues(layout, 10, 0, 5.0, np.random.default_rng(3))
    ues_b = drop_ues(layout, 10, 0, 5.0, np.random.default_rng(3))
    assert [(u.x, u.y) for u in ues_a] == [(u.x, u.y) for u in ues_b]
    assert len(ues_a) == 20
    for u in ues_a:
        site = layout.site(u.serving_bs)
        assert math.hypot(u.x - site.x, u.y - site.y) <= layout.cell_radius_m + 1e-9


def test_drop_count_cap():
    layout = build_layout(NetworkConfig(q=0), m=1)
    with pytest.raises(ValueError):
        drop_ues(layout, 11, 0, 5.0, np.random.default_rng(0))


def test_associate_matches_argmin_scan():
    layout = build_layout(NetworkConfig(q=1, l_bs=3, m_list=(4,)), m=4)
    rng = np.random.default_rng(5)
    for _ in range(200):
        x = rng.uniform(-500, 500)
        y = rng.uniform(-500, 500)
        dists = [math.hypot(x - s.x, y - s.y) for s in layout.sites]
        assert associate(x, y, layout) == int(np.argmin(dists))


def test_associate_midpoint_tie_lowest_id():
    layout = build_layout(NetworkConfig(q=0), m=1)
    mid = layout.sites[1].x / 2.0
    assert associate(mid, 0.0, layout) == 0


def test_mobility_displacement_magnitude():
    # 2 km/h for one 1 ms step
    assert mobility_step_m(2.0, 1e-3) == pytest.approx(5.5556e-4, rel=1e-4)
    assert mobility_step_m(0.0, 1e-3) == 0.0


def test_zero_speed_is_fixed_point():
    layout = build_layout(NetworkConfig(q=0), m=1)
    ue = drop_ues(layout, 1, 0, 0.0, np.random.default_rng(1))[0]
    moved = step_mobility(ue, layout, 1e-3, np.random.default_rng(2))
    assert (moved.x, moved.y) == (ue.x, ue.y)


def test_walk_never_leaves_cell():
    cfg = NetworkConfig(q=1, m_list=(4,))
    layout = build_layout(cfg, m=4)
    rng = np.random.default_rng(7)
    ue = drop_ues(layout, 1, 1, 2.0, rng)[0]
    site = layout.site(ue.serving_bs)
    # exaggerated speed so reflections actually trigger
    for _ in range(20_000):
        ue = step_mobility(ue, layout, 1.0, rng)
        assert math.hypot(ue.x - site.x, ue.y - site.y) <= layout.cell_radius_m + 1e-9


def test_reflection_folds_radially():
    site = build_layout(NetworkConfig(q=0), m=1).sites[0]
    # point 400 m out of a 350 m cell folds back to 300 m on the same ray
    x, y = reflect_into_cell(400.0, 0.0, site, 350.0)
    assert (x, y) == (pytest.approx(300.0), pytest.approx(0.0))
    # interior points pass through untouched
    assert reflect_into_cell(10.0, -20.0, site, 350.0) == (10.0, -20.0)
