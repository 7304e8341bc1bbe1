"""Experiment configuration: radio parameters, learning hyperparameters, run matrix.

A config can be built programmatically or loaded from a plain ``key = value``
text file.  Parameters that differ between the two bearer types (sub-6 GHz
voice, q=0, and mmWave data, q=1) default to the value for the selected
bearer when left unset.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Raised for invalid configuration files or values."""


ALLOWED_M = (1, 4, 8, 16, 32, 64)
ALLOWED_ENGINES = ("fpa", "tabular", "dqn", "brute_force")

# (voice, data) defaults for bearer-dependent parameters.
_BEARER_DEFAULTS = {
    "cell_radius_m": (350.0, 150.0),
    "carrier_mhz": (2100.0, 28000.0),
    "tx_gain_dbi": (11.0, 3.0),
    "p_los": (0.9, 0.8),
    "n_paths_nlos": (15, 4),
    "ue_speed_kmh": (5.0, 2.0),
    "frame_steps": (20, 10),
    "bandwidth_hz": (180e3, 100e6),
    "eps_min": (0.15, 0.10),
    "m_list": ((1,), (4,)),
}


@dataclass
class NetworkConfig:
    """All tunables for a run.  Unset bearer-dependent fields resolve per ``q``."""

    # bearer: 0 = sub-6 GHz voice, 1 = mmWave data
    q: int = 0

    # geometry
    l_bs: int = 2
    cell_radius_m: float | None = None
    intersite_factor: float = 1.5
    n_ue_max: int = 10
    n_ues_per_bs: int = 1

    # radio
    max_power_dbm: float = 46.0
    carrier_mhz: float | None = None
    tx_gain_dbi: float | None = None
    ue_gain_dbi: float = 0.0
    p_los: float | None = None
    n_paths_nlos: int | None = None
    ue_speed_kmh: float | None = None
    frame_steps: int | None = None
    step_ms: float = 1.0
    m_list: tuple[int, ...] | None = None

    # antenna array / codebook
    d_over_lambda: float = 0.5
    codebook_centered: bool = True

    # close-in path loss (mmWave)
    ci_exp_los: float = 2.0
    ci_exp_nlos: float = 3.0
    ci_shadow_los_db: float = 4.0
    ci_shadow_nlos_db: float = 8.0

    # COST231-Hata path loss (sub-6, urban)
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5
    cost231_shadow_db: float = 8.0
    cost231_correction_db: float = 3.0

    # receiver noise
    noise_figure_db: float = 9.0
    bandwidth_hz: float | None = None

    # SINR targets
    gamma_target_voice_db: float = 3.0
    gamma_min_db: float = -3.0
    gamma0_bf_db: float = 5.0

    # learning
    discount: float = 0.995
    eps_initial: float = 1.0
    eps_decay: float = 0.9995
    eps_min: float | None = None
    n_states: int = 8
    n_actions: int = 16
    net_width: int = 24
    net_depth: int = 2
    minibatch: int = 32
    learning_rate: float = 0.003
    replay_capacity: int = 10_000
    r_min: float = -50.0
    r_max: float = 10.0
    tabular_alpha: float = 0.2
    tabular_bins: int = 4

    # adaptive code rate (voice)
    code_rate_thresholds_db: tuple[float, ...] = (0.0, 5.0)
    code_rate_betas: tuple[float, ...] = (1.0 / 3.0, 0.5, 1.0)
    amr_rate_kbps: float = 23.85
    voice_activity: float = 0.8

    # power allocation
    n_prb_total: int = 100
    n_prb_ue: int = 10
    power_floor_dbm: float | None = 0.0
    initial_power_dbm: float | None = None

    # exhaustive-search baseline
    oracle_power_grid: tuple[float, ...] = (40.0, 42.0, 44.0, 46.0)

    # run matrix
    engines: tuple[str, ...] = ("dqn",)
    seeds: tuple[int, ...] = (1,)
    episode_cap: int = 2000
    payload_bits: float = 1e4
    meas_per_step: int = 1

    def __post_init__(self):
        self._resolve()
        self._validate()

    def _resolve(self):
        if self.q not in (0, 1):
            raise ConfigError(f"q must be 0 (voice) or 1 (data), got {self.q!r}")
        for name, pair in _BEARER_DEFAULTS.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, pair[self.q])
        # normalise list-ish fields to tuples
        for name in ("m_list", "seeds", "engines", "oracle_power_grid",
                     "code_rate_thresholds_db", "code_rate_betas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def _validate(self):
        if self.l_bs < 2:
            raise ConfigError(f"l_bs must be >= 2, got {self.l_bs}")
        if self.cell_radius_m <= 0:
            raise ConfigError(f"cell_radius_m must be positive, got {self.cell_radius_m}")
        if not 0 < self.intersite_factor < 2:
            # r > R/2 is required so neighbouring cells overlap and every
            # point of the plane between sites is covered
            raise ConfigError(f"intersite_factor must be in (0, 2), got {self.intersite_factor}")
        for m in self.m_list:
            if m not in ALLOWED_M:
                raise ConfigError(f"m_list entry {m} not in {ALLOWED_M}")
        if self.q == 0 and self.m_list != (1,):
            raise ConfigError("voice bearer (q=0) uses a single antenna: m_list must be (1,)")
        if self.q == 1 and 1 in self.m_list:
            raise ConfigError("data bearer (q=1) requires M > 1")
        for e in self.engines:
            if e not in ALLOWED_ENGINES:
                raise ConfigError(f"unknown engine {e!r}, expected one of {ALLOWED_ENGINES}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not 1 <= self.n_ues_per_bs <= self.n_ue_max:
            raise ConfigError(
                f"n_ues_per_bs must be in [1, {self.n_ue_max}], got {self.n_ues_per_bs}")
        if self.minibatch < 1:
            raise ConfigError(f"minibatch must be >= 1, got {self.minibatch}")
        # hidden width rule: H = sqrt((|A| + 2) * N_mb)
        want = math.sqrt((self.n_actions + 2) * self.minibatch)
        if abs(self.net_width - want) > 1e-9:
            raise ConfigError(
                f"net_width={self.net_width} violates the width rule "
                f"sqrt((n_actions+2)*minibatch) = {want:g}")
        if self.net_depth != 2:
            raise ConfigError(f"net_depth must be 2, got {self.net_depth}")
        if not 0 <= self.eps_min <= self.eps_initial <= 1:
            raise ConfigError("need 0 <= eps_min <= eps_initial <= 1")
        if not 0 < self.eps_decay <= 1:
            raise ConfigError(f"eps_decay must be in (0, 1], got {self.eps_decay}")
        if not 0 <= self.discount < 1:
            raise ConfigError(f"discount must be in [0, 1), got {self.discount}")
        if len(self.code_rate_betas) != len(self.code_rate_thresholds_db) + 1:
            raise ConfigError("code_rate_betas must have one more entry than thresholds")
        betas = self.code_rate_betas
        if any(b2 < b1 for b1, b2 in zip(betas, betas[1:])):
            raise ConfigError("code_rate_betas must be non-decreasing")
        if any(not (1.0 / 3.0 - 1e-12 <= b <= 1.0) for b in betas):
            raise ConfigError("code rates must lie in [1/3, 1]")
        if any(t2 <= t1 for t1, t2 in
               zip(self.code_rate_thresholds_db, self.code_rate_thresholds_db[1:])):
            raise ConfigError("code_rate_thresholds_db must be strictly increasing")
        if not self.oracle_power_grid:
            raise ConfigError("oracle_power_grid must be non-empty")
        if any(p > self.max_power_dbm + 1e-9 for p in self.oracle_power_grid):
            raise ConfigError("oracle_power_grid may not exceed max_power_dbm")
        if self.episode_cap < 1:
            raise ConfigError(f"episode_cap must be >= 1, got {self.episode_cap}")
        if self.frame_steps < 0:
            raise ConfigError(f"frame_steps must be >= 0, got {self.frame_steps}")
        if not 1 <= self.n_prb_ue <= self.n_prb_total:
            raise ConfigError("need 1 <= n_prb_ue <= n_prb_total")
        if not 0 <= self.voice_activity <= 1:
            raise ConfigError(f"voice_activity must be in [0, 1], got {self.voice_activity}")
        if self.tabular_bins < 1:
            raise ConfigError(f"tabular_bins must be >= 1, got {self.tabular_bins}")

    # ---- derived quantities ------------------------------------------------

    @property
    def intersite_m(self) -> float:
        return self.intersite_factor * self.cell_radius_m

    @property
    def dt_s(self) -> float:
        return self.step_ms * 1e-3

    def gamma_target_db(self, m: int) -> float:
        """Per-UE SINR target: 3 dB for voice, gamma0 + 10*log10(M) under beamforming."""
        if self.q == 0:
            return self.gamma_target_voice_db
        return self.gamma0_bf_db + 10.0 * math.log10(m)

    def replace(self, **kw) -> "NetworkConfig":
        """Copy with fields overridden; the copy is re-validated."""
        return dataclasses.replace(self, **kw)

    # ---- serialisation -----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in sorted(dataclasses.fields(self), key=lambda f: f.name):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]

    @classmethod
    def from_text(cls, text: str) -> "NetworkConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"unknown config key: {key!r}")
            kw[key] = _parse_value(key, value.strip())
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "NetworkConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        return cls.from_text(p.read_text())


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# per-field scalar parsers; tuple fields list their element parser
_FIELD_TYPES = {
    "q": int, "l_bs": int, "cell_radius_m": float, "intersite_factor": float,
    "n_ue_max": int, "n_ues_per_bs": int, "max_power_dbm": float,
    "carrier_mhz": float, "tx_gain_dbi": float, "ue_gain_dbi": float,
    "p_los": float, "n_paths_nlos": int, "ue_speed_kmh": float,
    "frame_steps": int, "step_ms": float, "m_list": (int,),
    "d_over_lambda": float, "codebook_centered": bool,
    "ci_exp_los": float, "ci_exp_nlos": float,
    "ci_shadow_los_db": float, "ci_shadow_nlos_db": float,
    "bs_height_m": float, "ue_height_m": float,
    "cost231_shadow_db": float, "cost231_correction_db": float,
    "noise_figure_db": float, "bandwidth_hz": float,
    "gamma_target_voice_db": float, "gamma_min_db": float, "gamma0_bf_db": float,
    "discount": float, "eps_initial": float, "eps_decay": float, "eps_min": float,
    "n_states": int, "n_actions": int, "net_width": int, "net_depth": int,
    "minibatch": int, "learning_rate": float, "replay_capacity": int,
    "r_min": float, "r_max": float, "tabular_alpha": float, "tabular_bins": int,
    "code_rate_thresholds_db": (float,), "code_rate_betas": (float,),
    "amr_rate_kbps": float, "voice_activity": float,
    "n_prb_total": int, "n_prb_ue": int,
    "power_floor_dbm": float, "initial_power_dbm": float,
    "oracle_power_grid": (float,),
    "engines": (str,), "seeds": (int,),
    "episode_cap": int, "payload_bits": float, "meas_per_step": int,
}


def _parse_scalar(kind, token: str, key: str):
    token = token.strip()
    if kind is bool:
        if token.lower() in ("true", "1", "yes"):
            return True
        if token.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {token!r}")
    if kind is str:
        return token
    try:
        return kind(token)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {token!r} as {kind.__name__}") from exc


def _parse_value(key: str, value: str):
    kind = _FIELD_TYPES[key]
    if value.lower() == "none":
        return None
    if isinstance(kind, tuple):
        if not value:
            return ()
        return tuple(_parse_scalar(kind[0], tok, key) for tok in value.split(","))
    return _parse_scalar(kind, value, key)
