"""Link-level arithmetic: received power, SINR, power/beam commands, the
4-bit joint action register and its reward, and the sum-rate metric.

Register layout (bit i of the register value is a[i], bit 0 the LSB):

  q=0 (voice):  2-bit power code for BS b on a[0,1], for BS l on a[2,3],
                with field value 2*a[i] + a[j] and codes
                00 -> -3 dB, 01 -> -1 dB, 10 -> +1 dB, 11 -> +3 dB.
  q=1 (data):   a[0]: BS b power -1/+1 dB,  a[1]: BS l power -1/+1 dB,
                a[2]: BS l beam step down/up, a[3]: BS b beam step down/up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import BeamCodebook
from .config import NetworkConfig

POWER_CODES_DB = (-3.0, -1.0, 1.0, 3.0)
N_ACTIONS = 16


def db_to_lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


def lin_to_db(lin: float) -> float:
    return 10.0 * math.log10(lin)


# ---------------------------------------------------------------------------
# received power and SINR


def rx_power_mw(p_tx_dbm: float, h: np.ndarray, f: np.ndarray) -> float:
    """P_rx = P_tx(linear mW) * |h^H f|^2."""
    if h.shape != f.shape:
        raise ValueError(f"channel/beam shape mismatch: {h.shape} vs {f.shape}")
    return db_to_lin(p_tx_dbm) * abs(np.vdot(h, f)) ** 2


@dataclass
class RadioState:
    """Snapshot of both links at one step.

    UE j is served by BS ``serving[j]`` (defaults to BS j); every other BS
    interferes.
    """

    powers_dbm: tuple
    beams: tuple
    channels: Sequence            # channels[ue][bs] -> ChannelRealization
    codebook: BeamCodebook
    noise_mw: float
    q: int
    serving: tuple = ()

    def __post_init__(self):
        if not self.serving:
            self.serving = tuple(range(len(self.powers_dbm)))


def sinr_db(state: RadioState, ue: int) -> float:
    """Serving power over noise plus inter-cell interference, in dB."""
    srv = state.serving[ue]
    num = rx_power_mw(state.powers_dbm[srv], state.channels[ue][srv].h,
                      state.codebook.beam(state.beams[srv]))
    den = state.noise_mw
    for b in range(len(state.powers_dbm)):
        if b == srv:
            continue
        den += rx_power_mw(state.powers_dbm[b], state.channels[ue][b].h,
                           state.codebook.beam(state.beams[b]))
    return lin_to_db(num / den)


@dataclass(frozen=True)
class CodeRateMap:
    """SINR-indexed code rate beta; lower SINR picks a stronger code."""

    thresholds_db: tuple = (0.0, 5.0)
    betas: tuple = (1.0 / 3.0, 0.5, 1.0)
    codec_rate_kbps: float = 23.85
    activity: float = 0.8

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "CodeRateMap":
        return cls(thresholds_db=config.code_rate_thresholds_db,
                   betas=config.code_rate_betas,
                   codec_rate_kbps=config.amr_rate_kbps,
                   activity=config.voice_activity)

    def beta(self, sinr: float) -> float:
        for t, b in zip(self.thresholds_db, self.betas):
            if sinr < t:
                return b
        return self.betas[-1]

    def gain_db(self, sinr: float) -> float:
        return 10.0 * math.log10(1.0 / self.beta(sinr))


def effective_sinr_db(sinr: float, q: int, code_map: CodeRateMap) -> float:
    """Voice links get the coding gain 10*log10(1/beta); data links do not."""
    if q == 1:
        return sinr
    return sinr + code_map.gain_db(sinr)


# ---------------------------------------------------------------------------
# transmit power control


def fpa_power_dbm(n_prb_total: int, n_prb_ue: int, p_max_dbm: float = 46.0) -> float:
    """Fixed power allocation: an equal share of P_max per resource block."""
    if not 1 <= n_prb_ue <= n_prb_total:
        raise ValueError(f"need 1 <= n_prb_ue <= n_prb_total, got {n_prb_ue}/{n_prb_total}")
    return p_max_dbm - 10.0 * math.log10(n_prb_total) + 10.0 * math.log10(n_prb_ue)


def apply_power_cmd(p_dbm: float, delta_db: float, p_max_dbm: float = 46.0,
                    p_floor_dbm: float | None = None) -> float:
    """Apply a +-1/+-3 dB command, clamped at P_max (and optionally floored)."""
    if delta_db not in (-3.0, -1.0, 1.0, 3.0):
        raise ValueError(f"power command must be one of +-1, +-3 dB, got {delta_db}")
    p = min(p_max_dbm, p_dbm + delta_db)
    if p_floor_dbm is not None:
        p = max(p_floor_dbm, p)
    return p


def step_beam(n: int, direction: int, m: int) -> int:
    """Circular codebook step: (n +- 1) mod M."""
    if direction not in (-1, 1):
        raise ValueError(f"beam step must be -1 or +1, got {direction}")
    return (n + direction) % m


# ---------------------------------------------------------------------------
# action register


def pcode(field: int) -> float:
    """2-bit power code -> dB delta."""
    if not 0 <= field <= 3:
        raise ValueError(f"power-code field must be in [0, 3], got {field}")
    return POWER_CODES_DB[field]


@dataclass(frozen=True)
class JointCommand:
    """Decoded register: power deltas in dB, beam steps in {-1, 0, +1}."""

    dp_b_db: float
    dp_ell_db: float
    dbeam_ell: int = 0
    dbeam_b: int = 0


def _bit(a: int, i: int) -> int:
    return (a >> i) & 1


def decode_action(a: int, q: int) -> JointCommand:
    """Decode the 4-bit register for the given bearer."""
    if not 0 <= a < N_ACTIONS:
        raise ValueError(f"action register must be in [0, {N_ACTIONS - 1}], got {a}")
    if q not in (0, 1):
        raise ValueError(f"bearer flag must be 0 or 1, got {q}")
    if q == 0:
        dp_b = pcode(2 * _bit(a, 0) + _bit(a, 1))
        dp_ell = pcode(2 * _bit(a, 2) + _bit(a, 3))
        return JointCommand(dp_b_db=dp_b, dp_ell_db=dp_ell)
    dp_b = 1.0 if _bit(a, 0) else -1.0
    dp_ell = 1.0 if _bit(a, 1) else -1.0
    dbeam_ell = 1 if _bit(a, 2) else -1
    dbeam_b = 1 if _bit(a, 3) else -1
    return JointCommand(dp_b_db=dp_b, dp_ell_db=dp_ell,
                        dbeam_ell=dbeam_ell, dbeam_b=dbeam_b)


def encode_action(cmd: JointCommand, q: int) -> int:
    """Inverse of decode_action; rejects commands the register cannot express."""
    if q == 0:
        if cmd.dbeam_ell or cmd.dbeam_b:
            raise ValueError("voice register carries no beam commands")
        fb = POWER_CODES_DB.index(cmd.dp_b_db)
        fe = POWER_CODES_DB.index(cmd.dp_ell_db)
        return ((fb >> 1) & 1) | ((fb & 1) << 1) | (((fe >> 1) & 1) << 2) | ((fe & 1) << 3)
    if cmd.dp_b_db not in (-1.0, 1.0) or cmd.dp_ell_db not in (-1.0, 1.0):
        raise ValueError("data register power deltas are +-1 dB")
    if cmd.dbeam_ell not in (-1, 1) or cmd.dbeam_b not in (-1, 1):
        raise ValueError("data register always steps both beams")
    a = 0
    a |= 1 if cmd.dp_b_db > 0 else 0
    a |= (1 if cmd.dp_ell_db > 0 else 0) << 1
    a |= (1 if cmd.dbeam_ell > 0 else 0) << 2
    a |= (1 if cmd.dbeam_b > 0 else 0) << 3
    return a


def reward_value(a: int, gamma_b_db: float, gamma_ell_db: float, q: int) -> float:
    """Joint reward: power-code difference for voice, post-action SINR sum for data."""
    if q == 0:
        return pcode(2 * _bit(a, 0) + _bit(a, 1)) - pcode(2 * _bit(a, 2) + _bit(a, 3))
    return gamma_b_db + gamma_ell_db


# ---------------------------------------------------------------------------
# rate metric


def sum_rate(eff_sinr_db_steps: Sequence[Sequence[float]]) -> float:
    """Average over steps of the Shannon sum rate, SINRs given in dB.

    C = (1/T) * sum_t sum_j log2(1 + 10**(gamma_eff[t][j] / 10))
    """
    t_steps = len(eff_sinr_db_steps)
    if t_steps == 0:
        raise ValueError("need at least one step to compute a sum rate")
    total = 0.0
    for step in eff_sinr_db_steps:
        for g in step:
            total += math.log2(1.0 + db_to_lin(g))
    return total / t_steps
