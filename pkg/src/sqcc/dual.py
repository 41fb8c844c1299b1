"""Tap-and-amplify receiver.

Bob splits off a fraction 1 - t of the received light to decode the BPSK
bit, removes the decoded displacement from the retained arm and sends the
zero-mean remainder through the quantum scissor.
"""
from __future__ import annotations

import numpy as np

from .baseline import ChannelModel, ProtocolConfig, RateReport, log_half_erfc_sqrt, phase_noise_term
from .errors import DomainError
from .scissor import scissor_key_rate

EXACT_DECODE_ALPHA = 1e6


def _check_t(t):
    if not 0 < t <= 1:
        raise DomainError(f"tap transmissivity must lie in (0, 1], got {t!r}")


def tap_noise_b(config: ProtocolConfig, channel: ChannelModel, t: float) -> float:
    eta = (1 - t) * channel.T
    return eta * (config.variance - 1 + channel.excess_noise + phase_noise_term(config)) + 1


def log_tap_ber(config: ProtocolConfig, channel: ChannelModel, t: float) -> float:
    _check_t(t)
    eta = (1 - t) * channel.T
    if eta == 0 or config.alpha == 0:
        return float(np.log(0.5))
    return log_half_erfc_sqrt(eta * config.alpha ** 2 / (2 * tap_noise_b(config, channel, t)))


def tap_ber(config: ProtocolConfig, channel: ChannelModel, t: float) -> float:
    return float(np.exp(log_tap_ber(config, channel, t)))


def is_exact_decode(config: ProtocolConfig) -> bool:
    return config.alpha >= EXACT_DECODE_ALPHA and config.phase_noise == 0


def residual_channel(config: ProtocolConfig, channel: ChannelModel, t: float) -> tuple[ChannelModel, float]:
    """Effective channel seen by the retained arm and the log tap BER.

    A wrong decision leaves a displacement 2 sqrt(tT) alpha at Bob.  Its
    variance contribution 4 tT alpha^2 e_tap, referred back through tT,
    becomes 4 alpha^2 e_tap of input excess noise.  The product is taken in
    log space so that alpha ~ 1e12 never forms exp(alpha^2).
    """
    lt = log_tap_ber(config, channel, t)
    if config.alpha > 0:
        eps_tap = float(np.exp(np.log(4.0) + 2 * np.log(config.alpha) + lt))
    else:
        eps_tap = 0.0
    eps = channel.excess_noise + phase_noise_term(config) + eps_tap
    return ChannelModel(t * channel.T, eps), lt


def dual_key_rate(config: ProtocolConfig, channel: ChannelModel, gain: float, t: float) -> RateReport:
    eff, lt = residual_channel(config, channel, t)
    inner = ProtocolConfig(config.variance, 0.0, config.theta, 0.0, config.reconciliation)
    rep = scissor_key_rate(inner, eff, gain)
    rep.ber = float(np.exp(lt))
    rep.log_ber = lt
    rep.extra.update(tap_transmissivity=t, residual_excess_noise=eff.excess_noise,
                     exact_decode=is_exact_decode(config))
    return rep
