"""Cell layout, user drops and random-direction mobility."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError, NetworkConfig

BAND_SUB6 = "sub6"
BAND_MMWAVE = "mmwave"


@dataclass(frozen=True)
class BsSite:
    """A base-station site at a fixed position."""

    id: int
    x: float
    y: float
    max_power_dbm: float
    m: int            # antenna count
    band: str         # "sub6" or "mmwave"


@dataclass(frozen=True)
class Ue:
    """A user terminal. ``serving_bs`` is frozen for the lifetime of a drop."""

    id: int
    x: float
    y: float
    speed_kmh: float
    serving_bs: int
    q: int


@dataclass(frozen=True)
class Layout:
    sites: tuple[BsSite, ...]
    cell_radius_m: float
    intersite_m: float

    def site(self, sid: int) -> BsSite:
        return self.sites[sid]


def build_layout(config: NetworkConfig, m: int | None = None) -> Layout:
    """Place L sites with neighbour spacing R = intersite_factor * r.

    Two sites sit on a line; more sit on a ring with chord spacing R.
    """
    r = config.cell_radius_m
    big_r = config.intersite_m
    if r <= 0:
        raise ConfigError(f"cell radius must be positive, got {r}")
    if config.l_bs < 2:
        raise ConfigError(f"need at least two sites, got {config.l_bs}")
    if m is None:
        m = config.m_list[0]
    band = BAND_SUB6 if config.q == 0 else BAND_MMWAVE
    positions = []
    if config.l_bs == 2:
        positions = [(0.0, 0.0), (big_r, 0.0)]
    else:
        ring = big_r / (2.0 * math.sin(math.pi / config.l_bs))
        for k in range(config.l_bs):
            ang = 2.0 * math.pi * k / config.l_bs
            positions.append((ring * math.cos(ang), ring * math.sin(ang)))
    sites = tuple(
        BsSite(id=k, x=px, y=py, max_power_dbm=config.max_power_dbm, m=m, band=band)
        for k, (px, py) in enumerate(positions)
    )
    return Layout(sites=sites, cell_radius_m=r, intersite_m=big_r)


def uniform_disk_point(rng: np.random.Generator, cx: float, cy: float, r: float):
    """Uniform point on the disk of radius r centred at (cx, cy)."""
    rad = r * math.sqrt(rng.random())
    ang = 2.0 * math.pi * rng.random()
    return cx + rad * math.cos(ang), cy + rad * math.sin(ang)


def associate(x: float, y: float, layout: Layout) -> int:
    """Nearest-site rule; ties go to the lowest site id."""
    best, best_d2 = 0, float("inf")
    for s in layout.sites:
        d2 = (x - s.x) ** 2 + (y - s.y) ** 2
        if d2 < best_d2 - 1e-12:
            best, best_d2 = s.id, d2
    return best


def drop_ues(layout: Layout, n_per_bs: int, q: int, speed_kmh: float,
             rng: np.random.Generator, n_ue_max: int = 10) -> list[Ue]:
    """Drop ``n_per_bs`` UEs uniformly over each cell disk.

    The serving site is then set by the nearest-site rule, which in the
    overlap region may differ from the disk the UE was dropped in.
    """
    if not 1 <= n_per_bs <= n_ue_max:
        raise ConfigError(f"n_per_bs must be in [1, {n_ue_max}], got {n_per_bs}")
    ues = []
    uid = 0
    for s in layout.sites:
        for _ in range(n_per_bs):
            x, y = uniform_disk_point(rng, s.x, s.y, layout.cell_radius_m)
            ues.append(Ue(id=uid, x=x, y=y, speed_kmh=speed_kmh,
                          serving_bs=associate(x, y, layout), q=q))
            uid += 1
    return ues


def mobility_step_m(speed_kmh: float, dt_s: float) -> float:
    """Displacement per step for a speed in km/h."""
    return speed_kmh / 3.6 * dt_s


def step_mobility(ue: Ue, layout: Layout, dt_s: float, rng: np.random.Generator) -> Ue:
    """One random-direction move, reflected at the serving-cell boundary."""
    ang = rng.uniform(0.0, 2.0 * math.pi)
    step = mobility_step_m(ue.speed_kmh, dt_s)
    x = ue.x + step * math.cos(ang)
    y = ue.y + step * math.sin(ang)
    x, y = reflect_into_cell(x, y, layout.site(ue.serving_bs), layout.cell_radius_m)
    return replace(ue, x=x, y=y)


def reflect_into_cell(x: float, y: float, site: BsSite, r: float):
    """Radial reflection at the cell-disk boundary (steps are << r)."""
    dx, dy = x - site.x, y - site.y
    d = math.hypot(dx, dy)
    if d <= r or d == 0.0:
        return x, y
    scale = (2.0 * r - d) / d
    return site.x + dx * scale, site.y + dy * scale
