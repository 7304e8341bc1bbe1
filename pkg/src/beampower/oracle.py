"""Exhaustive joint search over transmit powers and beams.

The point of this module is an unarguable reference optimum, so candidates
are enumerated one by one and scored through the same SINR arithmetic the
engines use -- no pruning, no shortcuts.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Sequence

from .channel import BeamCodebook
from .radio import CodeRateMap, RadioState, effective_sinr_db, sinr_db


@dataclass(frozen=True)
class SearchSpace:
    """Per-BS power grid (absolute dBm levels) and shared beam codebook."""

    power_grid_dbm: tuple
    codebook: BeamCodebook
    l_bs: int = 2

    @property
    def n_candidates(self) -> int:
        return (len(self.power_grid_dbm) * len(self.codebook)) ** self.l_bs


@dataclass(frozen=True)
class BruteForceResult:
    powers_dbm: tuple
    beams: tuple
    objective_db: float          # sum over UEs of effective SINR (dB)
    eff_sinrs_db: tuple
    feasible: bool               # every UE at or above the target
    n_evaluated: int


def brute_force(channels: Sequence, space: SearchSpace, q: int,
                code_map: CodeRateMap, noise_mw: float,
                gamma_target_db: float | None = None) -> BruteForceResult:
    """Maximise the sum of per-UE effective SINRs over the full grid.

    Candidates are scanned in lexicographic (p_0, n_0, p_1, n_1, ...)
    order and only a strictly better objective replaces the incumbent, so
    ties resolve to the lexicographically smallest assignment.
    """
    l_bs = space.l_bs
    grid = space.power_grid_dbm
    n_beams = len(space.codebook)
    best = None
    n_eval = 0
    per_bs = list(itertools.product(range(len(grid)), range(n_beams)))
    for combo in itertools.product(per_bs, repeat=l_bs):
        powers = tuple(grid[pi] for pi, _ in combo)
        beams = tuple(ni for _, ni in combo)
        state = RadioState(powers_dbm=powers, beams=beams, channels=channels,
                           codebook=space.codebook, noise_mw=noise_mw, q=q)
        effs = tuple(effective_sinr_db(sinr_db(state, u), q, code_map)
                     for u in range(l_bs))
        obj = sum(effs)
        n_eval += 1
        if best is None or obj > best[0]:
            best = (obj, powers, beams, effs)
    obj, powers, beams, effs = best
    feasible = (gamma_target_db is None
                or all(e >= gamma_target_db for e in effs))
    return BruteForceResult(powers_dbm=powers, beams=beams, objective_db=obj,
                            eff_sinrs_db=effs, feasible=feasible,
                            n_evaluated=n_eval)


def brute_force_per_step(channel_steps: Sequence, space: SearchSpace, q: int,
                         code_map: CodeRateMap, noise_mw: float,
                         gamma_target_db: float | None = None
                         ) -> tuple[list[BruteForceResult], float]:
    """Re-optimise at every step of a channel trace; returns results and the
    total sweep wall time (compute only)."""
    results = []
    elapsed = 0.0
    for channels in channel_steps:
        t0 = time.perf_counter()
        res = brute_force(channels, space, q, code_map, noise_mw, gamma_target_db)
        elapsed += time.perf_counter() - t0
        results.append(res)
    return results, elapsed
