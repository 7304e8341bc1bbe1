"""Steering vectors, beam codebooks, path loss and multipath channel draws.

The array is a uniform linear array along the x-axis, so departure angles
live in [0, pi] (measured from the array axis).  A narrowband geometric
channel toward a UE is

    h = (sqrt(M) / rho) * sum_p alpha_p * a(theta_p)

with per-path complex gains alpha_p, departure angles theta_p and an
amplitude path-loss ratio rho (rho**2 is the linear power loss, antenna
gains folded in), so that E[||h||^2] = M / rho**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, NetworkConfig
from .geometry import BsSite

# codebook sizes the channel layer accepts (experiment configs restrict
# further; the small sizes exist for exhaustive cross-checks)
CODEBOOK_SIZES = (1, 2, 4, 8, 16, 32, 64)


def steering_vector(theta: float, m: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """ULA steering vector, entries exp(j*2*pi*d/lambda*m*cos(theta))/sqrt(M).

    :param theta: departure angle in radians, measured from the array axis
    :param m: number of antenna elements
    :param d_over_lambda: element spacing in wavelengths
    """
    if m < 1:
        raise ValueError(f"antenna count must be >= 1, got {m}")
    kd = 2.0 * math.pi * d_over_lambda
    idx = np.arange(m)
    return np.exp(1j * kd * idx * math.cos(theta)) / math.sqrt(m)


@dataclass(frozen=True)
class BeamCodebook:
    """M steering beams at fixed quantised angles."""

    m: int
    angles: np.ndarray          # (M,)
    beams: np.ndarray           # (M, M) complex, row n = beam n

    def __len__(self) -> int:
        return self.m

    def beam(self, n: int) -> np.ndarray:
        return self.beams[n]


def build_codebook(m: int, d_over_lambda: float = 0.5,
                   centered: bool = True) -> BeamCodebook:
    """Quantise [0, pi] into M beams.

    Centred bins place beam n at (n + 1/2)*pi/M; the edge-aligned variant
    uses n*pi/M instead.
    """
    if m not in CODEBOOK_SIZES:
        raise ConfigError(f"unsupported codebook size {m}, expected one of {CODEBOOK_SIZES}")
    if centered:
        angles = (np.arange(m) + 0.5) * math.pi / m
    else:
        angles = np.arange(m) * math.pi / m
    beams = np.stack([steering_vector(t, m, d_over_lambda) for t in angles])
    return BeamCodebook(m=m, angles=angles, beams=beams)


# ---------------------------------------------------------------------------
# path loss


@dataclass(frozen=True)
class PathLossModel:
    """Either COST231-Hata (sub-6, urban) or a close-in model (mmWave)."""

    kind: str                   # "cost231" or "close_in"
    carrier_mhz: float
    exp_los: float = 2.0
    exp_nlos: float = 3.0
    shadow_los_db: float = 4.0
    shadow_nlos_db: float = 8.0
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5
    urban_correction_db: float = 3.0

    @classmethod
    def cost231(cls, carrier_mhz: float = 2100.0, bs_height_m: float = 30.0,
                ue_height_m: float = 1.5, shadow_db: float = 8.0,
                urban_correction_db: float = 3.0) -> "PathLossModel":
        return cls(kind="cost231", carrier_mhz=carrier_mhz,
                   shadow_los_db=shadow_db, shadow_nlos_db=shadow_db,
                   bs_height_m=bs_height_m, ue_height_m=ue_height_m,
                   urban_correction_db=urban_correction_db)

    @classmethod
    def close_in(cls, carrier_mhz: float = 28000.0, exp_los: float = 2.0,
                 exp_nlos: float = 3.0, shadow_los_db: float = 4.0,
                 shadow_nlos_db: float = 8.0) -> "PathLossModel":
        return cls(kind="close_in", carrier_mhz=carrier_mhz, exp_los=exp_los,
                   exp_nlos=exp_nlos, shadow_los_db=shadow_los_db,
                   shadow_nlos_db=shadow_nlos_db)

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "PathLossModel":
        if config.q == 0:
            return cls.cost231(config.carrier_mhz, config.bs_height_m,
                               config.ue_height_m, config.cost231_shadow_db,
                               config.cost231_correction_db)
        return cls.close_in(config.carrier_mhz, config.ci_exp_los, config.ci_exp_nlos,
                            config.ci_shadow_los_db, config.ci_shadow_nlos_db)


def path_loss_db(model: PathLossModel, distance_m: float, los: bool = True,
                 rng: np.random.Generator | None = None) -> float:
    """Median path loss in dB, plus one log-normal shadowing draw if rng given.

    close_in:  PL = 32.4 + 20*log10(f_GHz) + 10*n*log10(d/1m)
    cost231:   urban Hata extension with the standard mobile-height correction
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if model.kind == "close_in":
        n = model.exp_los if los else model.exp_nlos
        f_ghz = model.carrier_mhz / 1e3
        pl = 32.4 + 20.0 * math.log10(f_ghz) + 10.0 * n * math.log10(distance_m)
        sigma = model.shadow_los_db if los else model.shadow_nlos_db
    elif model.kind == "cost231":
        f = model.carrier_mhz
        hb, hm = model.bs_height_m, model.ue_height_m
        a_hm = (1.1 * math.log10(f) - 0.7) * hm - (1.56 * math.log10(f) - 0.8)
        pl = (46.3 + 33.9 * math.log10(f) - 13.82 * math.log10(hb) - a_hm
              + (44.9 - 6.55 * math.log10(hb)) * math.log10(distance_m / 1e3)
              + model.urban_correction_db)
        sigma = model.shadow_los_db
    else:
        raise ValueError(f"unknown path loss model kind {model.kind!r}")
    if rng is not None:
        pl += rng.normal(0.0, sigma)
    return pl


def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float = 9.0) -> float:
    """Thermal noise power over the signal bandwidth: -174 dBm/Hz + 10log10(BW) + NF."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    return -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


# ---------------------------------------------------------------------------
# multipath channel


@dataclass(frozen=True)
class ChannelModel:
    """Everything needed to draw a link realisation."""

    path_loss: PathLossModel
    p_los: float
    n_paths_nlos: int
    d_over_lambda: float = 0.5
    tx_gain_dbi: float = 0.0
    ue_gain_dbi: float = 0.0

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "ChannelModel":
        return cls(path_loss=PathLossModel.from_config(config),
                   p_los=config.p_los, n_paths_nlos=config.n_paths_nlos,
                   d_over_lambda=config.d_over_lambda,
                   tx_gain_dbi=config.tx_gain_dbi, ue_gain_dbi=config.ue_gain_dbi)


@dataclass(frozen=True)
class LinkFading:
    """Per-episode random state of one BS->UE link.

    LOS links carry a single unit-modulus gain and take their departure
    angle from the instantaneous geometry; NLOS links carry fixed angles.
    """

    los: bool
    gains: np.ndarray                # (N_p,) complex
    aods: np.ndarray | None          # (N_p,) for NLOS, None for LOS
    shadow_db: float


@dataclass(frozen=True)
class ChannelRealization:
    """Assembled channel vector plus the quantities it was built from."""

    h: np.ndarray                    # (M,) complex
    paths: tuple                     # ((gain, aod), ...)
    rho: float                       # amplitude path-loss ratio (rho**2 = power loss)
    los: bool
    n_paths: int


def draw_link_fading(model: ChannelModel, rng: np.random.Generator) -> LinkFading:
    """One stochastic draw: LOS coin, shadowing, and NLOS gains/angles."""
    los = bool(rng.random() < model.p_los)
    sigma = model.path_loss.shadow_los_db if los else model.path_loss.shadow_nlos_db
    shadow = float(rng.normal(0.0, sigma))
    if los:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        gains = np.array([np.exp(1j * phase)])
        aods = None
    else:
        n_p = model.n_paths_nlos
        aods = rng.uniform(0.0, math.pi, size=n_p)
        gains = (rng.normal(size=n_p) + 1j * rng.normal(size=n_p)) / math.sqrt(2.0 * n_p)
    return LinkFading(los=los, gains=gains, aods=aods, shadow_db=shadow)


def bearing(site: BsSite, x: float, y: float) -> float:
    """Departure angle of (x, y) seen from the site, folded into [0, pi]."""
    return abs(math.atan2(y - site.y, x - site.x))


def realize_channel(model: ChannelModel, fading: LinkFading, site: BsSite,
                    ue_x: float, ue_y: float, m: int) -> ChannelRealization:
    """Build the channel vector at the current UE position.

    Path loss follows the instantaneous distance; the LOS angle follows the
    instantaneous bearing, so the channel tracks the mobility.
    """
    d = math.hypot(ue_x - site.x, ue_y - site.y)
    pl = path_loss_db(model.path_loss, d, fading.los)
    pl_eff = pl + fading.shadow_db - model.tx_gain_dbi - model.ue_gain_dbi
    rho = 10.0 ** (pl_eff / 20.0)
    if fading.los:
        aods = np.array([bearing(site, ue_x, ue_y)])
    else:
        aods = fading.aods
    h = np.zeros(m, dtype=complex)
    for g, aod in zip(fading.gains, aods):
        h += g * steering_vector(aod, m, model.d_over_lambda)
    h *= math.sqrt(m) / rho
    return ChannelRealization(h=h, paths=tuple(zip(fading.gains, aods)),
                              rho=rho, los=fading.los, n_paths=len(fading.gains))


def sample_channel(model: ChannelModel, site: BsSite, ue_x: float, ue_y: float,
                   m: int, rng: np.random.Generator) -> ChannelRealization:
    """Draw fading and realise the channel in one go."""
    return realize_channel(model, draw_link_fading(model, rng), site, ue_x, ue_y, m)
