"""First-order quantum scissor at Bob's receiver.

The success probability, output displacement and output variance are
evaluated at the *received* x-quadrature displacement a = sqrt(T) * alpha.  R and S are built from the channel parameters.

A and C (Alice's variance and the Alice-Bob correlation of the heralded
state) come from a closed form.  It averages the scissor action on a
displaced thermal state over Alice's Gaussian modulation.  The Fock oracle
in ``sqcc.fock`` checks it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gaussian as gc
from .baseline import (ChannelModel, ProtocolConfig, RateReport, ber_noise_from_log, log_half_erfc_sqrt,
                       total_excess_noise)
from .errors import DomainError, NonPhysicalCovariance, NumericUnderflow


def gain_to_tau(gain: float) -> float:
    if not gain > 0:
        raise DomainError("scissor gain must be positive")
    return 1.0 / (1.0 + gain * gain)


def tau_to_gain(tau: float) -> float:
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    return float(np.sqrt((1 - tau) / tau))


@dataclass(frozen=True)
class ScissorPoint:
    tau: float
    gain: float
    r_param: float
    s_param: float

    @classmethod
    def build(cls, gain, V, T, eps):
        R = 2 + T * (V + eps - 1)
        return cls(gain_to_tau(gain), float(gain), R, R + 2)


@dataclass(frozen=True)
class ScissorMoments:
    success_prob: float
    displacement: float
    bob_variance: float
    alice_variance: float
    correlation: float
    displacement_sq: float = None


def _terms(a2, point):
    tau, R, S = point.tau, point.r_param, point.s_param
    u = np.exp(a2 / (2 * S) - a2 / (2 * R))  # <= 1
    q = tau * (a2 - 2 * S) + S * S
    return tau, R, S, u, q


def scissor_success_prob(alpha: float, point: ScissorPoint) -> float:
    """Single-pattern heralding probability at received displacement alpha."""
    a2 = alpha * alpha
    tau, R, S, u, q = _terms(a2, point)
    log_pref = -a2 / (2 * S)
    inner = 4 * q / S ** 3 - 2 * (1 - tau) * u / R
    if inner <= 0 or log_pref + np.log(inner) < np.log(1e-300):
        raise NumericUnderflow(f"scissor success probability underflows at alpha={alpha!r}")
    return float(min(np.exp(log_pref) * inner, 1.0))


def scissor_displacement_sq(alpha: float, point: ScissorPoint) -> float:
    a2 = alpha * alpha
    tau, R, S, u, q = _terms(a2, point)
    den = 2 * R * q - S ** 3 * (1 - tau) * u
    return float(16 * a2 * (1 - tau) * tau * R * R * S * S / (den * den))


def scissor_bob_variance(alpha: float, point: ScissorPoint, theta: float = 0.0) -> float:
    """x-quadrature variance of the heralded output.

    The closed form with the cos^2 term dropped is the variance across the
    displacement direction.  Along x the squared mean projection is removed.
    """
    a2 = alpha * alpha
    tau, R, S, u, q = _terms(a2, point)
    num = -3 * S ** 4 * (1 - tau) * u + 2 * R * S * (tau * (a2 - 2 * S) - S * S * (2 * tau - 3))
    den = 2 * R * S * q - S ** 4 * (1 - tau) * u
    b_perp = num / den
    return float(b_perp - scissor_displacement_sq(alpha, point) * np.cos(theta) ** 2)


def _gauss_moment(m, s2, n):
    # E[z^n] for z ~ N(m, s2)
    return (1.0, m, m * m + s2, m ** 3 + 3 * m * s2, m ** 4 + 6 * m * m * s2 + 3 * s2 * s2)[n]


def _closed_form(V, T, eps, alpha, theta, tau):
    """Heralded joint moments from averaging over Alice's modulation.

    Alice draws y ~ N(0, (V-1) I) in x-mean units and sends z = y + alpha u.
    Bob receives a displaced thermal state of amplitude sqrt(T) z / 2 and
    thermal occupation N = T eps / 2.  The scissor output density elements
    are Gaussians in z, so moments reduce to tilted Gaussian averages.
    """
    v = V - 1.0
    N = T * eps / 2
    dh, d0 = 1 + N / 2, 1 + N
    kh, k0 = T / (8 * dh), T / (4 * d0)
    ux, up = alpha * np.cos(theta), alpha * np.sin(theta)
    # binomial coefficients of (z_x - ux)^j
    expand = {0: (1.0,), 1: (-ux, 1.0), 2: (ux * ux, -2 * ux, 1.0)}

    def expect(k, j, kind):
        # E[y_x^j h(z) exp(-k |z|^2)] with h in {1, z_x, |z|^2}
        f = 1 + 2 * k * v
        Z = np.exp(-k * alpha * alpha / f) / f
        mx, mp, s2 = ux / f, up / f, v / f
        tot = 0.0
        for i, coef in enumerate(expand[j]):
            if kind == "1":
                tot += coef * _gauss_moment(mx, s2, i)
            elif kind == "zx":
                tot += coef * _gauss_moment(mx, s2, i + 1)
            else:
                tot += coef * (_gauss_moment(mx, s2, i + 2) + _gauss_moment(mx, s2, i) * (mp * mp + s2))
        return Z * tot

    def weight(j):
        r11 = (1 - tau) * (expect(kh, j, "1") / dh - expect(k0, j, "1") / d0)
        r00 = (tau / 2) / dh * ((1 + N / (2 * dh)) * expect(kh, j, "1") + T / (8 * dh * dh) * expect(kh, j, "z2"))
        return r00 + r11, r11

    def coherence(j):
        return 0.5 * np.sqrt(tau * (1 - tau)) * np.sqrt(T) / dh ** 2 * expect(kh, j, "zx")

    P, r11 = weight(0)
    dx = coherence(0) / P
    if v > 0:
        ey = weight(1)[0] / P
        var_y = weight(2)[0] / P - ey * ey
        A = (V + 1) / v * var_y - 1
        C = np.sqrt((V + 1) / v) * (coherence(1) / P - ey * dx)
    else:
        A, C = 1.0, 0.0
    return dict(P=P, dx=dx, Bx=1 + 2 * r11 / P - dx * dx, A=A, C=C)


def scissor_moments(config: ProtocolConfig, channel: ChannelModel, gain: float) -> ScissorMoments:
    V, T = config.variance, channel.T
    eps = total_excess_noise(config, channel)
    point = ScissorPoint.build(gain, V, T, eps)
    a_rx = np.sqrt(T) * config.alpha
    P = scissor_success_prob(a_rx, point)
    d2 = scissor_displacement_sq(a_rx, point)
    B = scissor_bob_variance(a_rx, point, config.theta)
    cf = _closed_form(V, T, eps, config.alpha, config.theta, point.tau)
    return ScissorMoments(P, float(np.sqrt(d2)), B, float(cf["A"]), float(cf["C"]), d2)


def scissor_ber(moments: ScissorMoments) -> float:
    return float(np.exp(_log_ber(moments)))


def _log_ber(m: ScissorMoments) -> float:
    d2 = m.displacement_sq if m.displacement_sq is not None else m.displacement ** 2
    return log_half_erfc_sqrt(d2 / (2 * m.bob_variance))


def scissor_key_rate(config: ProtocolConfig, channel: ChannelModel, gain: float) -> RateReport:
    m = scissor_moments(config, channel, gain)
    lec = _log_ber(m)
    eb = ber_noise_from_log(m.displacement, lec)
    cov = gc.TwoModeCovariance(m.alice_variance, m.bob_variance + channel.T * eb, m.correlation)
    pref = 2 * m.success_prob
    if not 0 < pref <= 1:
        raise NonPhysicalCovariance(f"heralding probability {pref!r} out of range")
    I = gc.mutual_information(cov)
    chi = gc.holevo_bound(cov)
    K = gc.key_rate(cov, config.reconciliation, pref)
    return RateReport(I, chi, K, float(np.exp(lec)), pref, eb, cov, lec, effective=m)
