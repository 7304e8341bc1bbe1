"""Two-cell downlink simulator with learned joint beamforming and power control."""

from .config import ConfigError, NetworkConfig
from .geometry import BsSite, Layout, Ue, associate, build_layout, drop_ues, step_mobility
from .channel import (BeamCodebook, ChannelModel, ChannelRealization, PathLossModel,
                      build_codebook, noise_power_dbm, path_loss_db, sample_channel,
                      steering_vector)
from .radio import (CodeRateMap, JointCommand, RadioState, apply_power_cmd,
                    decode_action, effective_sinr_db, encode_action, fpa_power_dbm,
                    pcode, reward_value, rx_power_mw, sinr_db, step_beam, sum_rate)
from .agents import (Experience, PolicyState, QNetwork, QTable, ReplayBuffer,
                     TrainingDiverged, bellman_target, decay_epsilon, load_weights,
                     normalize_state, save_weights, select_action, sgd_step,
                     tabular_update)
from .oracle import BruteForceResult, SearchSpace, brute_force, brute_force_per_step
from .sim import (EpisodeResult, RunResult, StepRecord, TwoCellEnv, ccdf,
                  convergence_episode, best_complete_episode, make_engine,
                  replay_episode_channels, run_episode, run_experiment,
                  sum_rate_summary, summarize_run, throughput_and_frame_loss)

__version__ = "0.1.0"
