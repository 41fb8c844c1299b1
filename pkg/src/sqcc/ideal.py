"""Ideal noiseless linear amplifier g^n acting on Bob's received mode.

g^n maps a Gaussian state to a Gaussian state.  Working with the
Husimi Q function, Q(beta) ~ exp(-r^T M r / 2) with M = (Sigma + I)^-1
(quadratures r of Bob scaled by g), so per quadrature

    M' = G M G - (g^2 - 1)/2 P_B,   G = diag(1, g),

where P_B projects on Bob.  The output is normalizable only while M' is
positive definite.  Means follow from mu' = M'^-1 G M mu.  The output
covariance is then re-read as a non-amplified SQCC state with primed
parameters (V', T', eps0', alpha').
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gaussian as gc
from .baseline import (ChannelModel, ProtocolConfig, RateReport, channel_cov, ber_noise_from_log,
                       log_half_erfc_sqrt)
from .errors import DomainError, GainOutOfDomain


@dataclass(frozen=True)
class EffectiveParams:
    alpha_eff: float
    variance_eff: float
    transmissivity_eff: float
    excess_noise_eff: float
    chi_eff: float
    # raw post-amplifier moments (x quadrature of each mode)
    a: float
    b: float
    c: float
    mean_a: float
    mean_b: float


def amplify_moments(a, b, c, mean_b, gain):
    """Gaussian moments after g^n on Bob for the (a, b, c) form with Bob mean along x.

    Returns (a', b', c', mean_a', mean_b').  Raises GainOutOfDomain if the amplified
    state is not normalizable.
    """
    if gain < 1:
        raise DomainError("ideal NLA gain must be >= 1")
    g2 = gain * gain
    det = (a + 1) * (b + 1) - c * c
    if det <= 0:
        raise GainOutOfDomain("input covariance is singular")
    # M = (Sigma + I)^-1 for the x block
    m11, m22, m12 = (b + 1) / det, (a + 1) / det, -c / det
    n11 = m11
    n12 = gain * m12
    n22 = g2 * m22 - (g2 - 1) / 2
    detn = n11 * n22 - n12 * n12
    if not (n22 > 0 and detn > 0):
        raise GainOutOfDomain(f"M' not positive definite at g={gain!r}")
    s11, s22, s12 = n22 / detn, n11 / detn, -n12 / detn
    # mu' = M'^-1 G M mu with mu = (0, mean_b)
    u1, u2 = m12 * mean_b, gain * m22 * mean_b
    mean_a2 = s11 * u1 + s12 * u2
    mean_b2 = s12 * u1 + s22 * u2
    a2, b2 = s11 - 1, s22 - 1
    # p quadrature has c -> -c and identical diagonals, so the form is preserved
    return a2, b2, s12, mean_a2, mean_b2


def effective_params(config: ProtocolConfig, channel: ChannelModel, gain: float) -> EffectiveParams:
    cov = channel_cov(config, channel)
    mean_b = np.sqrt(channel.T) * config.alpha
    a2, b2, c2, ma2, m2 = amplify_moments(cov.a, cov.b, cov.c, mean_b, gain)
    if not (a2 > 1 and b2 >= 1 - gc.TOL):
        if not (config.variance == 1 and abs(a2 - 1) < gc.TOL):
            raise GainOutOfDomain(f"amplified variances non-physical: a'={a2!r}, b'={b2!r}")
    V2 = a2
    if V2 > 1:
        T2 = c2 * c2 / (V2 * V2 - 1)
    else:
        T2 = channel.T * gain * gain
    if not (np.isfinite(T2) and T2 > 0):
        raise GainOutOfDomain("effective transmissivity non-physical")
    chi2 = b2 / T2 - V2
    alpha2 = abs(m2) / np.sqrt(T2)
    eps2 = chi2 - (1 - T2) / T2 - alpha2 ** 2 * config.phase_noise
    try:
        gc.TwoModeCovariance(a2, b2, c2)
    except Exception as exc:
        raise GainOutOfDomain(str(exc)) from exc
    return EffectiveParams(float(alpha2), float(V2), float(T2), float(eps2), float(chi2),
                           float(a2), float(b2), float(c2), float(ma2), float(m2))


def _log_ber_eff(p: EffectiveParams) -> float:
    # T' alpha'^2 / B^ID with B^ID = T'(V' + chi') = b'
    return log_half_erfc_sqrt(p.mean_b ** 2 / (2 * p.b))


def ideal_ber(config: ProtocolConfig, channel: ChannelModel, gain: float) -> float:
    return float(np.exp(_log_ber_eff(effective_params(config, channel, gain))))


def ideal_key_rate(config: ProtocolConfig, channel: ChannelModel, gain: float) -> RateReport:
    p = effective_params(config, channel, gain)
    lec = _log_ber_eff(p)
    eb = ber_noise_from_log(p.alpha_eff, lec)
    try:
        cov = gc.TwoModeCovariance(p.a, p.b + p.transmissivity_eff * eb, p.c)
    except Exception as exc:
        raise GainOutOfDomain(str(exc)) from exc
    pref = 1.0 / (gain * gain)
    I = gc.mutual_information(cov)
    chi = gc.holevo_bound(cov)
    K = gc.key_rate(cov, config.reconciliation, pref)
    return RateReport(I, chi, K, float(np.exp(lec)), pref, eb, cov, lec, effective=p)
