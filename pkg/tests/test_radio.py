"""SINR arithmetic, the adaptive code-rate map, and the 4-bit action register."""

import math

import numpy as np
import pytest

from beampower.channel import ChannelRealization, build_codebook
from beampower.config import NetworkConfig
from beampower.radio import (
    N_ACTIONS,
    POWER_CODES_DB,
    CodeRateMap,
    JointCommand,
    RadioState,
    apply_power_cmd,
    db_to_lin,
    decode_action,
    effective_sinr_db,
    encode_action,
    fpa_power_dbm,
    lin_to_db,
    pcode,
    reward_value,
    rx_power_mw,
    sinr_db,
    step_beam,
    sum_rate,
)


def _voice_map() -> CodeRateMap:
    return CodeRateMap.from_config(NetworkConfig(q=0))


def test_db_round_trip():
    for v in (-40.0, 0.0, 17.5):
        assert lin_to_db(db_to_lin(v)) == pytest.approx(v)


def test_rx_power_known_case():
    # 0 dBm into a unit channel aligned with a single-antenna beam -> 1 mW
    h = np.array([1.0 + 0.0j])
    f = np.array([1.0 + 0.0j])
    assert rx_power_mw(0.0, h, f) == pytest.approx(1.0)
    assert rx_power_mw(10.0, h, f) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        rx_power_mw(0.0, h, np.ones(2, dtype=complex))


def _chan(amp: float) -> ChannelRealization:
    h = np.array([amp + 0.0j])
    return ChannelRealization(h=h, paths=(), rho=1.0, los=True, n_paths=1)


def _two_cell_state(p0=40.0, p1=40.0):
    """Hand-sized single-antenna two-cell state with known gains."""
    cb = build_codebook(1)
    # channels[ue][bs]: serving power gain 1, cross power gain 0.1
    serve, cross = _chan(1.0), _chan(0.31622776601683794)
    channels = [[serve, cross], [cross, serve]]
    return RadioState(powers_dbm=(p0, p1), beams=(0, 0), channels=channels,
                      codebook=cb, noise_mw=1.0, q=0)


def test_sinr_hand_computed():
    # UE0: S = 10^4, I = 10^3, N = 1 -> 10*log10(10^4/(10^3+1))
    st = _two_cell_state()
    expect = 10.0 * math.log10(1e4 / (1e3 + 1.0))
    assert sinr_db(st, 0) == pytest.approx(expect)
    assert sinr_db(st, 1) == pytest.approx(expect)


def test_sinr_monotone_in_powers():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p0 = rng.uniform(20, 44)
        p1 = rng.uniform(20, 44)
        base = sinr_db(_two_cell_state(p0, p1), 0)
        assert sinr_db(_two_cell_state(p0 + 1, p1), 0) > base
        assert sinr_db(_two_cell_state(p0, p1 + 1), 0) < base


def test_code_rate_map_betas():
    cm = _voice_map()
    assert cm.beta(-2.0) == pytest.approx(1.0 / 3.0)
    assert cm.beta(0.0) == pytest.approx(0.5)
    assert cm.beta(3.0) == pytest.approx(0.5)
    assert cm.beta(5.0) == pytest.approx(1.0)
    assert cm.beta(20.0) == pytest.approx(1.0)


def test_effective_sinr_adds_repetition_gain():
    cm = _voice_map()
    # 1/3 rate -> +4.77 dB, 1/2 rate -> +3.01 dB, full rate unchanged
    assert effective_sinr_db(-5.0, 0, cm) == pytest.approx(-5.0 + 4.7712, abs=1e-3)
    assert effective_sinr_db(2.0, 0, cm) == pytest.approx(2.0 + 3.0103, abs=1e-3)
    assert effective_sinr_db(7.0, 0, cm) == pytest.approx(7.0)
    # data bearer never gets the bonus
    assert effective_sinr_db(-5.0, 1, cm) == pytest.approx(-5.0)


def test_fpa_share():
    assert fpa_power_dbm(100, 10) == pytest.approx(36.0)
    assert fpa_power_dbm(100, 1) == pytest.approx(26.0)
    assert fpa_power_dbm(100, 100) == pytest.approx(46.0)


def test_power_command_clamps():
    assert apply_power_cmd(45.5, 1.0) == 46.0
    assert apply_power_cmd(46.0, 3.0) == 46.0
    assert apply_power_cmd(44.0, -3.0) == 41.0
    assert apply_power_cmd(1.0, -3.0, p_floor_dbm=0.0) == 0.0
    assert apply_power_cmd(1.0, -3.0, p_floor_dbm=None) == -2.0
    with pytest.raises(ValueError):
        apply_power_cmd(40.0, 2.0)


def test_power_never_exceeds_ceiling_under_random_commands():
    rng = np.random.default_rng(8)
    p = 46.0
    for _ in range(10_000):
        p = apply_power_cmd(p, rng.choice((-3.0, -1.0, 1.0, 3.0)), p_floor_dbm=0.0)
        assert 0.0 <= p <= 46.0


def test_beam_stepping_wraps():
    assert step_beam(0, -1, 8) == 7
    assert step_beam(7, 1, 8) == 0
    assert step_beam(3, 1, 8) == 4
    assert step_beam(0, 1, 1) == 0


def test_pcode_values():
    assert [pcode(i) for i in range(4)] == [-3.0, -1.0, 1.0, 3.0]
    assert POWER_CODES_DB == (-3.0, -1.0, 1.0, 3.0)


def test_register_round_trip_all_actions():
    for q in (0, 1):
        for a in range(N_ACTIONS):
            cmd = decode_action(a, q)
            assert encode_action(cmd, q) == a


def test_register_voice_fields():
    # both power fields read as 2-bit codes into the +/-1, +/-3 dB table
    cmd = decode_action(0b0011, 0)
    assert cmd.dp_b_db == 3.0 and cmd.dp_ell_db == -3.0
    assert cmd.dbeam_b == 0 and cmd.dbeam_ell == 0
    cmd = decode_action(0b1111, 0)
    assert cmd.dp_b_db == 3.0 and cmd.dp_ell_db == 3.0


def test_register_data_fields():
    cmd = decode_action(0b1111, 1)
    assert cmd.dp_b_db == 1.0 and cmd.dp_ell_db == 1.0
    assert cmd.dbeam_ell == 1 and cmd.dbeam_b == 1
    cmd = decode_action(0b0000, 1)
    assert cmd.dp_b_db == -1.0 and cmd.dp_ell_db == -1.0
    assert cmd.dbeam_ell == -1 and cmd.dbeam_b == -1


def test_reward_spot_values():
    # voice: reward favours boosting the serving cell over the interferer
    assert reward_value(0b0011, 0.0, 0.0, 0) == pytest.approx(6.0)
    assert reward_value(0b1010, 0.0, 0.0, 0) == pytest.approx(0.0)
    # data: reward is the sum of the two measured SINRs
    assert reward_value(5, 12.5, 7.5, 1) == pytest.approx(20.0)


def test_sum_rate_known_value():
    assert sum_rate([(10.0, 10.0)]) == pytest.approx(6.91886, abs=1e-4)
    # averaged across steps
    two = sum_rate([(10.0, 10.0), (10.0, 10.0)])
    assert two == pytest.approx(6.91886, abs=1e-4)
    with pytest.raises(ValueError):
        sum_rate([])


def test_joint_command_is_hashable_record():
    c = JointCommand(dp_b_db=1.0, dp_ell_db=-1.0, dbeam_ell=1, dbeam_b=-1)
    assert c == JointCommand(1.0, -1.0, 1, -1)
