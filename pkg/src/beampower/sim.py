"""Two-cell episode machinery: environment, decision engines, the episode
loop, run-level metrics and CSV trace emission.

Conventions
-----------
* BS 0 is "l" (serves UE 0), BS 1 is "b" (serves UE 1); the action register
  addresses them as described in :mod:`beampower.radio`.
* One UE is active per BS.  UEs are dropped once per run; their random walk
  carries across episodes and does not depend on any engine decision, so
  every engine sees bit-identical mobility and channel traces for the same
  (config, seed).
* All per-episode randomness (fading, shadowing, walk directions) comes
  from a substream keyed by (seed, episode); the walk always advances
  through the full frame even if the radio loop aborts early.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .agents import (Experience, PolicyState, QNetwork, QTable, ReplayBuffer,
                     decay_epsilon, normalize_state, select_action, sgd_step,
                     tabular_update)
from .channel import (ChannelModel, build_codebook, noise_power_dbm,
                      realize_channel, draw_link_fading)
from .config import ConfigError, NetworkConfig
from .geometry import (Layout, associate, build_layout, mobility_step_m,
                       reflect_into_cell, uniform_disk_point)
from .oracle import SearchSpace, brute_force
from .radio import (CodeRateMap, RadioState, db_to_lin, decode_action,
                    apply_power_cmd, effective_sinr_db, fpa_power_dbm,
                    reward_value, sinr_db, step_beam, sum_rate)

IDX_ELL = 0
IDX_B = 1

_STREAM_DROP = 101
_STREAM_EPISODE = 202
_STREAM_AGENT = 303

ENGINES = ("fpa", "tabular", "dqn", "brute_force")


@dataclass(frozen=True)
class StepRecord:
    t: int
    action: int | None
    reward: float
    sinr_db: tuple               # (l, b)
    eff_sinr_db: tuple           # (l, b)
    powers_dbm: tuple
    beams: tuple
    loss: float | None


@dataclass
class EpisodeResult:
    index: int
    steps: list
    converged: bool
    aborted: bool
    wall_time_s: float
    decision_time_s: float

    @property
    def total_reward(self) -> float:
        return sum(s.reward for s in self.steps)

    def eff_sinr_samples(self) -> list[float]:
        return [g for s in self.steps for g in s.eff_sinr_db]

    def eff_sinr_pairs(self) -> list[tuple]:
        return [s.eff_sinr_db for s in self.steps]


class TwoCellEnv:
    """Downlink environment with two mutually interfering cells."""

    def __init__(self, config: NetworkConfig, m: int, seed: int):
        self.config = config
        self.m = m
        self.seed = seed
        self.q = config.q
        self.layout = build_layout(config, m)
        self.codebook = build_codebook(m, config.d_over_lambda, config.codebook_centered)
        self.chan_model = ChannelModel.from_config(config)
        self.noise_dbm = noise_power_dbm(config.bandwidth_hz, config.noise_figure_db)
        self.noise_mw = db_to_lin(self.noise_dbm)
        self.code_map = CodeRateMap.from_config(config)
        self.gamma_target_db = config.gamma_target_db(m)
        self.gamma_min_db = config.gamma_min_db
        self.t_steps = config.frame_steps
        self._step_m = mobility_step_m(config.ue_speed_kmh, config.dt_s)

        # one active UE per site; episode 0, 1, ... each re-drop positions
        # from their own substream, this initial drop only makes the object
        # usable before begin_episode (and covers the T=0 edge case)
        rng = np.random.default_rng(np.random.SeedSequence((seed, _STREAM_DROP)))
        self._positions = []
        for site in self.layout.sites:
            while True:
                x, y = uniform_disk_point(rng, site.x, site.y, config.cell_radius_m)
                if associate(x, y, self.layout) == site.id:
                    break
            self._positions.append((x, y))
        self.n_ues = len(self._positions)

        if config.initial_power_dbm is not None:
            p0 = config.initial_power_dbm
        elif self.q == 0:
            p0 = fpa_power_dbm(config.n_prb_total, config.n_prb_ue, config.max_power_dbm)
        else:
            p0 = config.max_power_dbm
        self.initial_power_dbm = p0
        self.powers_dbm = [p0] * self.n_ues
        self.beams = [0] * self.n_ues

        self.episode = -1
        self._traj = None            # (n_ues, T+1, 2)
        self._fading = None          # [ue][bs]
        self._chan_cache = {}

    # ---- episode lifecycle -------------------------------------------------

    def begin_episode(self, episode: int | None = None) -> int:
        """Re-drop the UEs, draw fading, and precompute the full random walk.

        Every episode is an independent trial: positions, path angles, and
        fading all come from a substream keyed by (seed, episode), so the
        trace of episode k is the same whichever engine drove the run and
        episode k can be reconstructed without replaying 0..k-1.  Transmit
        powers and beam indices are the agent's to carry across episodes.
        """
        self.episode = self.episode + 1 if episode is None else episode
        rng = np.random.default_rng(
            np.random.SeedSequence((self.seed, _STREAM_EPISODE, self.episode)))
        t = self.t_steps
        self._positions = []
        for site in self.layout.sites:
            while True:
                x, y = uniform_disk_point(rng, site.x, site.y,
                                          self.config.cell_radius_m)
                if associate(x, y, self.layout) == site.id:
                    break
            self._positions.append((x, y))
        traj = np.empty((self.n_ues, t + 1, 2))
        for u in range(self.n_ues):
            angles = rng.uniform(0.0, 2.0 * math.pi, size=t)
            site = self.layout.site(u)
            x, y = self._positions[u]
            traj[u, 0] = (x, y)
            for k in range(t):
                x += self._step_m * math.cos(angles[k])
                y += self._step_m * math.sin(angles[k])
                x, y = reflect_into_cell(x, y, site, self.config.cell_radius_m)
                traj[u, k + 1] = (x, y)
        self._fading = [[draw_link_fading(self.chan_model, rng)
                         for _ in self.layout.sites] for _ in range(self.n_ues)]
        self._traj = traj
        self._chan_cache = {}
        return self.episode

    # ---- per-step views ----------------------------------------------------

    def _state_at(self, pos_idx: int) -> np.ndarray:
        p = self._traj[:, pos_idx]
        return np.array([p[IDX_ELL, 0], p[IDX_ELL, 1], p[IDX_B, 0], p[IDX_B, 1],
                         self.powers_dbm[IDX_ELL], self.powers_dbm[IDX_B],
                         float(self.beams[IDX_ELL]), float(self.beams[IDX_B])])

    def observe(self, k: int) -> np.ndarray:
        """Raw state after the k-th move (UEs move, then the agent acts)."""
        return self._state_at(k + 1)

    def observe_next(self, k: int) -> np.ndarray:
        return self._state_at(min(k + 2, self.t_steps))

    def channels(self, k: int):
        """channels[ue][bs] at step k, realised from the episode fading."""
        if k not in self._chan_cache:
            pos = self._traj[:, k + 1]
            self._chan_cache[k] = [
                [realize_channel(self.chan_model, self._fading[u][b.id], b,
                                 pos[u, 0], pos[u, 1], self.m)
                 for b in self.layout.sites]
                for u in range(self.n_ues)]
        return self._chan_cache[k]

    def radio_state(self, k: int) -> RadioState:
        return RadioState(powers_dbm=tuple(self.powers_dbm), beams=tuple(self.beams),
                          channels=self.channels(k), codebook=self.codebook,
                          noise_mw=self.noise_mw, q=self.q)

    def sinrs_db(self, k: int) -> tuple:
        state = self.radio_state(k)
        return tuple(sinr_db(state, u) for u in range(self.n_ues))

    # ---- command application ----------------------------------------------

    def apply_register(self, a: int) -> None:
        cmd = decode_action(a, self.q)
        cfg = self.config
        self.powers_dbm[IDX_B] = apply_power_cmd(
            self.powers_dbm[IDX_B], cmd.dp_b_db, cfg.max_power_dbm, cfg.power_floor_dbm)
        self.powers_dbm[IDX_ELL] = apply_power_cmd(
            self.powers_dbm[IDX_ELL], cmd.dp_ell_db, cfg.max_power_dbm, cfg.power_floor_dbm)
        if self.q == 1:
            self.beams[IDX_ELL] = step_beam(self.beams[IDX_ELL], cmd.dbeam_ell, self.m)
            self.beams[IDX_B] = step_beam(self.beams[IDX_B], cmd.dbeam_b, self.m)

    def set_levels(self, powers_dbm: Sequence[float], beams: Sequence[int]) -> None:
        self.powers_dbm = list(powers_dbm)
        self.beams = [int(n) % self.m for n in beams]


def replay_episode_channels(config: NetworkConfig, m: int, seed: int,
                            episode_index: int) -> list:
    """Reconstruct the channel sets of one episode of a (config, seed) run.

    Positions, walk, and fading are engine-independent functions of
    (config, m, seed, episode), so this reproduces exactly what any engine
    saw during that episode.
    """
    env = TwoCellEnv(config, m, seed)
    env.begin_episode(episode_index)
    return [env.channels(k) for k in range(env.t_steps)]


# ---------------------------------------------------------------------------
# decision engines


class FpaEngine:
    """Fixed power allocation: constant per-PRB power share, no coordination."""

    name = "fpa"

    def __init__(self, config: NetworkConfig, env: TwoCellEnv, seed: int):
        self.power_dbm = fpa_power_dbm(config.n_prb_total, config.n_prb_ue,
                                       config.max_power_dbm)

    def begin_episode(self, env: TwoCellEnv) -> None:
        env.set_levels([self.power_dbm] * env.n_ues, [0] * env.n_ues)

    def act(self, env, k, s_raw):
        return None

    def learn(self, s_raw, a, r, s_next_raw, terminal):
        return None

    def finish_episode(self, bonus: float) -> None:
        pass


class BruteForceEngine:
    """Exhaustive re-optimisation of absolute powers and beams every step."""

    name = "brute_force"

    def __init__(self, config: NetworkConfig, env: TwoCellEnv, seed: int):
        self.space = SearchSpace(power_grid_dbm=tuple(config.oracle_power_grid),
                                 codebook=env.codebook, l_bs=env.n_ues)
        self.last = None

    def begin_episode(self, env: TwoCellEnv) -> None:
        pass

    def act(self, env, k, s_raw):
        res = brute_force(env.channels(k), self.space, env.q, env.code_map,
                          env.noise_mw, env.gamma_target_db)
        env.set_levels(res.powers_dbm, res.beams)
        self.last = res
        return None

    def learn(self, s_raw, a, r, s_next_raw, terminal):
        return None

    def finish_episode(self, bonus: float) -> None:
        pass


class DqnEngine:
    """Replay-trained Q-network over the joint action register."""

    name = "dqn"

    def __init__(self, config: NetworkConfig, env: TwoCellEnv, seed: int):
        self.rng = np.random.default_rng(np.random.SeedSequence((seed, _STREAM_AGENT)))
        self.net = QNetwork.initialize(self.rng, n_in=config.n_states,
                                       width=config.net_width, n_out=config.n_actions)
        self.policy = PolicyState.from_config(config)
        self.buffer = ReplayBuffer(config.replay_capacity)
        self.n_mb = config.minibatch
        self.eta = config.learning_rate
        self.layout = env.layout
        self.m = env.m
        self.p_max = config.max_power_dbm
        self._last_norm = None

    def _norm(self, raw):
        return normalize_state(raw, self.layout, self.m, self.p_max)

    def begin_episode(self, env: TwoCellEnv) -> None:
        pass

    def act(self, env, k, s_raw):
        decay_epsilon(self.policy)
        self._last_norm = self._norm(s_raw)
        return select_action(self.net, self._last_norm, self.policy, self.rng)

    def learn(self, s_raw, a, r, s_next_raw, terminal):
        self.buffer.push(Experience(self._last_norm, a, r,
                                    self._norm(s_next_raw), terminal))
        if len(self.buffer) < self.n_mb:
            return None
        batch = self.buffer.sample(self.n_mb, self.rng)
        _, loss = sgd_step(self.net, batch, self.policy.discount, self.eta)
        return loss

    def finish_episode(self, bonus: float) -> None:
        self.buffer.adjust_last_reward(bonus)


class TabularEngine:
    """Discretised Q-learning over the same state and action space."""

    name = "tabular"

    def __init__(self, config: NetworkConfig, env: TwoCellEnv, seed: int):
        self.rng = np.random.default_rng(np.random.SeedSequence((seed, _STREAM_AGENT)))
        self.table = QTable(n_dims=config.n_states, bins=config.tabular_bins,
                            n_actions=config.n_actions)
        self.policy = PolicyState.from_config(config)
        self.alpha = config.tabular_alpha
        self.layout = env.layout
        self.m = env.m
        self.p_max = config.max_power_dbm
        self._last_idx = None
        self._last_update = None

    def _index(self, raw):
        return self.table.state_index(
            normalize_state(raw, self.layout, self.m, self.p_max))

    def begin_episode(self, env: TwoCellEnv) -> None:
        pass

    def act(self, env, k, s_raw):
        decay_epsilon(self.policy)
        self._last_idx = self._index(s_raw)
        if self.rng.random() < self.policy.epsilon:
            return int(self.rng.integers(self.table.n_actions))
        row = self.table.values[self._last_idx]
        best = np.flatnonzero(row == row.max())
        # break value ties at random: the table starts all-zero and a fixed
        # tie-break would hard-wire one register until rewards arrive
        return int(self.rng.choice(best))

    def learn(self, s_raw, a, r, s_next_raw, terminal):
        s_idx = self._last_idx
        tabular_update(self.table.values, s_idx, a, r, self._index(s_next_raw),
                       self.alpha, self.policy.discount)
        self._last_update = (s_idx, a)
        return None

    def finish_episode(self, bonus: float) -> None:
        # the update for the final step already ran; the target is linear in
        # r, so adding alpha * bonus reproduces the patched update exactly
        if self._last_update is not None:
            s_idx, a = self._last_update
            self.table.values[s_idx, a] += self.alpha * bonus


def make_engine(name: str, config: NetworkConfig, env: TwoCellEnv, seed: int):
    try:
        cls = {"fpa": FpaEngine, "brute_force": BruteForceEngine,
               "dqn": DqnEngine, "tabular": TabularEngine}[name]
    except KeyError:
        raise ConfigError(f"unknown engine {name!r}, expected one of {ENGINES}")
    return cls(config, env, seed)


# ---------------------------------------------------------------------------
# episode loop


def run_episode(env: TwoCellEnv, engine, t_steps: int | None = None,
                targets: tuple | None = None) -> EpisodeResult:
    """One frame of T steps: observe, act, score, learn.

    The episode aborts (with the reward overwritten by r_min) as soon as any
    UE's effective SINR falls below gamma_min; if instead the final step
    meets the target for every UE, r_max is added to the final reward and
    patched into the engine's stored experience.
    """
    cfg = env.config
    if t_steps is None:
        t_steps = env.t_steps
    gamma_target, gamma_min = targets if targets is not None \
        else (env.gamma_target_db, env.gamma_min_db)
    episode_index = env.begin_episode()
    engine.begin_episode(env)

    records: list[StepRecord] = []
    aborted = False
    all_meet = True
    decision_s = 0.0
    wall0 = time.perf_counter()
    for k in range(t_steps):
        s_raw = env.observe(k)
        t0 = time.perf_counter()
        a = engine.act(env, k, s_raw)
        decision_s += time.perf_counter() - t0
        if a is not None:
            env.apply_register(a)
        g_ell, g_b = env.sinrs_db(k)
        eff_ell = effective_sinr_db(g_ell, env.q, env.code_map)
        eff_b = effective_sinr_db(g_b, env.q, env.code_map)
        if a is not None:
            r = reward_value(a, g_b, g_ell, env.q)
        else:
            r = (g_b + g_ell) if env.q == 1 else 0.0
        abort = min(eff_ell, eff_b) < gamma_min
        if abort:
            r = cfg.r_min
        terminal = abort or k == t_steps - 1
        s_next_raw = env.observe_next(k)
        t0 = time.perf_counter()
        loss = engine.learn(s_raw, a, r, s_next_raw, terminal)
        decision_s += time.perf_counter() - t0
        records.append(StepRecord(t=k, action=a, reward=r,
                                  sinr_db=(g_ell, g_b), eff_sinr_db=(eff_ell, eff_b),
                                  powers_dbm=tuple(env.powers_dbm),
                                  beams=tuple(env.beams), loss=loss))
        if abort:
            aborted = True
            break
        if not (eff_ell >= gamma_target and eff_b >= gamma_target):
            all_meet = False

    if records and not aborted:
        last = records[-1]
        if min(last.eff_sinr_db) >= gamma_target:
            records[-1] = replace(last, reward=last.reward + cfg.r_max)
            engine.finish_episode(cfg.r_max)

    converged = t_steps > 0 and not aborted and len(records) == t_steps and all_meet
    return EpisodeResult(index=episode_index, steps=records, converged=converged,
                         aborted=aborted,
                         wall_time_s=time.perf_counter() - wall0,
                         decision_time_s=decision_s)


@dataclass
class RunResult:
    engine: str
    m: int
    seed: int
    episodes: list
    zeta: int | None             # 1-based first converged episode
    wall_time_s: float
    decision_time_s: float
    steps_total: int
    candidates_per_step: int | None = None


def run_experiment(config: NetworkConfig, m: int, seed: int, engine_name: str,
                   episode_cap: int | None = None,
                   stop_on_convergence: bool = True) -> RunResult:
    """Run episodes until the target holds for a whole frame, or the cap."""
    if m not in config.m_list:
        raise ConfigError(f"M={m} is not in the configured m_list {config.m_list}")
    env = TwoCellEnv(config, m, seed)
    engine = make_engine(engine_name, config, env, seed)
    cap = episode_cap if episode_cap is not None else config.episode_cap
    episodes = []
    for _ in range(cap):
        res = run_episode(env, engine)
        episodes.append(res)
        if stop_on_convergence and res.converged:
            break
    zeta = convergence_episode(episodes)
    cands = engine.space.n_candidates if isinstance(engine, BruteForceEngine) else None
    return RunResult(engine=engine_name, m=m, seed=seed, episodes=episodes,
                     zeta=zeta,
                     wall_time_s=sum(e.wall_time_s for e in episodes),
                     decision_time_s=sum(e.decision_time_s for e in episodes),
                     steps_total=sum(len(e.steps) for e in episodes),
                     candidates_per_step=cands)


# ---------------------------------------------------------------------------
# run-level metrics


def convergence_episode(results: Sequence[EpisodeResult]) -> int | None:
    """1-based index of the first episode that held the target for a full
    frame; None if none did."""
    for i, r in enumerate(results):
        if r.converged:
            return i + 1
    return None


def best_complete_episode(results: Sequence[EpisodeResult]) -> EpisodeResult | None:
    """Highest-total-reward non-aborted episode (earliest on ties)."""
    best = None
    for r in results:
        if r.aborted or not r.steps:
            continue
        if best is None or r.total_reward > best.total_reward:
            best = r
    return best


def sum_rate_summary(results: Sequence[EpisodeResult]) -> tuple:
    """(max episode sum rate, 1-based episode index), or (None, None) if
    every episode aborted."""
    best_rate, best_idx = None, None
    for i, r in enumerate(results):
        if r.aborted or not r.steps:
            continue
        rate = sum_rate(r.eff_sinr_pairs())
        if best_rate is None or rate > best_rate:
            best_rate, best_idx = rate, i + 1
    return best_rate, best_idx


def ccdf(samples: Sequence[float], thresholds: Sequence[float] | None = None,
         n_points: int = 101) -> np.ndarray:
    """Empirical P(X > x) on a uniform dB grid spanning the samples."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one sample")
    if thresholds is None:
        lo, hi = float(x.min()), float(x.max())
        thresholds = np.linspace(lo, hi, n_points) if hi > lo else np.array([lo])
    t = np.asarray(thresholds, dtype=float)
    probs = np.array([(x > thr).mean() for thr in t])
    return np.column_stack([t, probs])


def throughput_and_frame_loss(zeta: int, t_frame_ms: float, payload_bits: float,
                              activity: float) -> tuple:
    """Payload rate over the episodes spent converging, and the voice frames
    lost while doing so: (payload/(T*zeta) in bits/s, ceil(activity*zeta))."""
    if zeta < 1:
        raise ValueError(f"convergence episode must be >= 1, got {zeta}")
    throughput = payload_bits / (t_frame_ms * 1e-3 * zeta)
    lost = math.ceil(round(activity * zeta, 9))
    return throughput, lost


def backhaul_messages_per_episode(config: NetworkConfig, n_ues: int,
                                  t_steps: int) -> int:
    """Measurement reports relayed per episode: g * L * N_UE per step."""
    return config.meas_per_step * config.l_bs * n_ues * t_steps


# ---------------------------------------------------------------------------
# CSV traces

TRACE_COLUMNS = ("t", "engine", "q", "m", "seed", "episode", "action_hex",
                 "p_ell_dbm", "p_b_dbm", "beam_ell", "beam_b",
                 "sinr_ell_db", "sinr_b_db", "eff_sinr_ell_db", "eff_sinr_b_db",
                 "reward", "loss")

SUMMARY_COLUMNS = ("engine", "m", "seed", "q", "episodes", "steps", "zeta",
                   "converged", "aborted_episodes", "best_episode",
                   "max_sum_rate", "throughput_bps", "lost_voice_frames",
                   "backhaul_msgs_per_episode", "candidates_per_step",
                   "decision_time_s", "wall_time_s", "ccdf_file")

# wall-clock columns are excluded from reproducibility comparisons
TIMING_COLUMNS = ("decision_time_s", "wall_time_s")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def trace_header(config: NetworkConfig, layout: Layout) -> list[str]:
    lines = ["# beampower trace v1",
             f"# config_hash = {config.config_hash()}"]
    for ln in config.to_text().strip().splitlines():
        lines.append(f"# cfg {ln}")
    for s in layout.sites:
        lines.append(f"# layout site{s.id} = {_fmt(s.x)},{_fmt(s.y)}")
    lines.append(f"# layout r = {_fmt(layout.cell_radius_m)}")
    lines.append(f"# layout R = {_fmt(layout.intersite_m)}")
    return lines


def trace_rows(run: RunResult, config: NetworkConfig) -> list[str]:
    rows = []
    for ep in run.episodes:
        for s in ep.steps:
            rows.append(",".join([
                str(s.t), run.engine, str(config.q), str(run.m), str(run.seed),
                str(ep.index),
                "" if s.action is None else format(s.action, "x"),
                _fmt(s.powers_dbm[IDX_ELL]), _fmt(s.powers_dbm[IDX_B]),
                str(s.beams[IDX_ELL]), str(s.beams[IDX_B]),
                _fmt(s.sinr_db[0]), _fmt(s.sinr_db[1]),
                _fmt(s.eff_sinr_db[0]), _fmt(s.eff_sinr_db[1]),
                _fmt(s.reward), _fmt(s.loss),
            ]))
    return rows


def write_trace(path, run: RunResult, config: NetworkConfig, layout: Layout) -> None:
    lines = trace_header(config, layout)
    lines.append(",".join(TRACE_COLUMNS))
    lines.extend(trace_rows(run, config))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path) -> tuple[NetworkConfig, list[dict]]:
    cfg_lines = []
    rows = []
    header = None
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("# cfg "):
                cfg_lines.append(line[len("# cfg "):])
                continue
            if line.startswith("#") or not line:
                continue
            if header is None:
                header = line.split(",")
                if tuple(header) != TRACE_COLUMNS:
                    raise ValueError(f"unexpected trace columns in {path}")
                continue
            vals = line.split(",")
            row = dict(zip(header, vals))
            for key in ("t", "q", "m", "seed", "episode", "beam_ell", "beam_b"):
                row[key] = int(row[key])
            for key in ("p_ell_dbm", "p_b_dbm", "sinr_ell_db", "sinr_b_db",
                        "eff_sinr_ell_db", "eff_sinr_b_db", "reward"):
                row[key] = float(row[key])
            row["loss"] = float(row["loss"]) if row["loss"] else None
            row["action"] = int(row["action_hex"], 16) if row["action_hex"] else None
            rows.append(row)
    config = NetworkConfig.from_text("\n".join(cfg_lines))
    return config, rows


def episodes_from_rows(rows: Sequence[dict], config: NetworkConfig,
                       m: int) -> list[EpisodeResult]:
    """Rebuild EpisodeResult objects (sans timings) from trace rows."""
    gamma_target = config.gamma_target_db(m)
    gamma_min = config.gamma_min_db
    t_steps = config.frame_steps
    groups: dict[int, list] = {}
    for row in rows:
        groups.setdefault(row["episode"], []).append(row)
    episodes = []
    for idx in sorted(groups):
        steps = [StepRecord(t=r["t"], action=r["action"], reward=r["reward"],
                            sinr_db=(r["sinr_ell_db"], r["sinr_b_db"]),
                            eff_sinr_db=(r["eff_sinr_ell_db"], r["eff_sinr_b_db"]),
                            powers_dbm=(r["p_ell_dbm"], r["p_b_dbm"]),
                            beams=(r["beam_ell"], r["beam_b"]),
                            loss=r["loss"])
                 for r in sorted(groups[idx], key=lambda r: r["t"])]
        aborted = min(steps[-1].eff_sinr_db) < gamma_min
        converged = (t_steps > 0 and not aborted and len(steps) == t_steps
                     and all(min(s.eff_sinr_db) >= gamma_target for s in steps))
        episodes.append(EpisodeResult(index=idx, steps=steps, converged=converged,
                                      aborted=aborted, wall_time_s=0.0,
                                      decision_time_s=0.0))
    return episodes


def summarize_episodes(config: NetworkConfig, m: int, seed: int, engine: str,
                       episodes: Sequence[EpisodeResult],
                       decision_time_s: float = 0.0, wall_time_s: float = 0.0,
                       candidates_per_step: int | None = None,
                       ccdf_file: str = "") -> dict:
    """One summary row; everything except the timing columns derives from
    the trace alone."""
    zeta = convergence_episode(episodes)
    max_rate, best_rate_idx = sum_rate_summary(episodes)
    best = best_complete_episode(episodes)
    throughput = lost = None
    if zeta is not None:
        throughput, lost = throughput_and_frame_loss(
            zeta, config.frame_steps * config.step_ms, config.payload_bits,
            config.voice_activity)
        if config.q == 1:
            lost = None
    n_ues = config.l_bs  # one active UE per BS
    return {
        "engine": engine, "m": m, "seed": seed, "q": config.q,
        "episodes": len(episodes),
        "steps": sum(len(e.steps) for e in episodes),
        "zeta": zeta,
        "converged": zeta is not None,
        "aborted_episodes": sum(1 for e in episodes if e.aborted),
        "best_episode": None if best is None else best.index + 1,
        "max_sum_rate": max_rate,
        "throughput_bps": throughput,
        "lost_voice_frames": lost,
        "backhaul_msgs_per_episode": backhaul_messages_per_episode(
            config, n_ues, config.frame_steps),
        "candidates_per_step": candidates_per_step,
        "decision_time_s": decision_time_s,
        "wall_time_s": wall_time_s,
        "ccdf_file": ccdf_file,
    }


def summarize_run(config: NetworkConfig, run: RunResult, ccdf_file: str = "") -> dict:
    return summarize_episodes(config, run.m, run.seed, run.engine, run.episodes,
                              decision_time_s=run.decision_time_s,
                              wall_time_s=run.wall_time_s,
                              candidates_per_step=run.candidates_per_step,
                              ccdf_file=ccdf_file)


def summary_lines(rows: Sequence[dict]) -> list[str]:
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS))
    return lines


def read_summary(path) -> list[dict]:
    rows = []
    header = None
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(dict(zip(header, line.split(","))))
    return rows
