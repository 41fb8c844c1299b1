"""Non-amplified SQCC protocol: channel, BPSK error rate, key rate, photon budget."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import log_ndtr

from . import gaussian as gc
from .errors import DomainError

_LOG4 = np.log(4.0)


@dataclass(frozen=True)
class ChannelModel:
    transmissivity: float
    excess_noise: float = 0.0
    loss_db: float = None

    def __post_init__(self):
        T = self.transmissivity
        if not 0 < T <= 1:
            raise DomainError(f"transmissivity must lie in (0, 1], got {T!r}")
        if self.excess_noise < 0:
            raise DomainError("excess noise must be nonnegative")
        L = -10 * np.log10(T)
        if self.loss_db is None:
            object.__setattr__(self, "loss_db", float(L) + 0.0)
        elif abs(10 ** (-self.loss_db / 10) - T) > 1e-12:
            raise DomainError("loss_db and transmissivity disagree")

    @classmethod
    def from_loss_db(cls, loss_db: float, excess_noise: float = 0.0) -> "ChannelModel":
        if loss_db < 0:
            raise DomainError("loss must be nonnegative")
        return cls(10 ** (-loss_db / 10), excess_noise, float(loss_db))

    @property
    def T(self):
        return self.transmissivity


@dataclass(frozen=True)
class ProtocolConfig:
    variance: float
    alpha: float = 0.0
    theta: float = 0.0
    phase_noise: float = 0.0
    reconciliation: float = 0.95

    def __post_init__(self):
        if not self.variance >= 1:
            raise DomainError(f"variance must be >= 1, got {self.variance!r}")
        if not self.alpha >= 0:
            raise DomainError("alpha must be nonnegative")
        if self.phase_noise < 0:
            raise DomainError("phase noise must be nonnegative")
        if not 0 <= self.reconciliation <= 1:
            raise DomainError("reconciliation efficiency must lie in [0, 1]")

    def with_(self, **kw) -> "ProtocolConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class QosTarget:
    min_key_rate: float
    max_ber: float

    def __post_init__(self):
        if not self.min_key_rate > 0:
            raise DomainError("K0 must be positive")
        if not 0 < self.max_ber < 1:
            raise DomainError("e_C0 must lie in (0, 1)")


@dataclass
class RateReport:
    mutual_information: float
    holevo: float
    key_rate: float
    ber: float
    success_prob: float
    ber_noise: float
    covariance: gc.TwoModeCovariance = None
    log_ber: float = None
    effective: object = None
    extra: dict = field(default_factory=dict)

    @property
    def T_eff(self):
        cov = self.covariance
        if cov is None or cov.a <= 1:
            return float("nan")
        return cov.c ** 2 / (cov.a ** 2 - 1)


def phase_noise_term(config: ProtocolConfig) -> float:
    return config.alpha ** 2 * config.phase_noise


def total_excess_noise(config: ProtocolConfig, channel: ChannelModel) -> float:
    return channel.excess_noise + phase_noise_term(config)


def channel_cov(config: ProtocolConfig, channel: ChannelModel) -> gc.TwoModeCovariance:
    V, T = config.variance, channel.T
    chi = (1 - T) / T + total_excess_noise(config, channel)
    return gc.TwoModeCovariance(V, T * (V + chi), np.sqrt(T * (V * V - 1)))


def total_noise_b(config: ProtocolConfig, channel: ChannelModel) -> float:
    return channel.T * (config.variance - 1 + total_excess_noise(config, channel)) + 1


def log_half_erfc_sqrt(snr_half):
    """log(0.5 * erfc(sqrt(x))), accurate deep into the tail."""
    return float(log_ndtr(-np.sqrt(2.0 * snr_half)))


def log_ber(config: ProtocolConfig, channel: ChannelModel) -> float:
    B = total_noise_b(config, channel)
    return log_half_erfc_sqrt(channel.T * config.alpha ** 2 / (2 * B))


def ber(config: ProtocolConfig, channel: ChannelModel) -> float:
    """Hard-decision BPSK error rate of Bob's x quadrature."""
    return float(np.exp(log_ber(config, channel)))


def ber_noise_from_log(alpha: float, log_ec: float) -> float:
    if alpha == 0:
        return 0.0
    return float(np.exp(_LOG4 + 2 * np.log(alpha) + log_ec))


def ber_noise(alpha: float, e_c: float) -> float:
    """Excess noise left by reversing a wrongly decoded displacement."""
    if not 0 <= e_c <= 0.5:
        raise DomainError("e_C must lie in [0, 0.5]")
    if e_c == 0 or alpha == 0:
        return 0.0
    return ber_noise_from_log(alpha, np.log(e_c))


def sqcc_key_rate(config: ProtocolConfig, channel: ChannelModel) -> RateReport:
    lec = log_ber(config, channel)
    eb = ber_noise_from_log(config.alpha, lec)
    base = channel_cov(config, channel)
    cov = gc.TwoModeCovariance(base.a, base.b + channel.T * eb, base.c)
    I = gc.mutual_information(cov)
    chi = gc.holevo_bound(cov)
    K = gc.key_rate(cov, config.reconciliation, 1.0)
    return RateReport(I, chi, K, float(np.exp(lec)), 1.0, eb, cov, lec)


def mean_photon(alpha: float, variance: float) -> float:
    if variance < 1 or alpha < 0:
        raise DomainError("need variance >= 1 and alpha >= 0")
    return alpha ** 2 + 2 * variance


# --- minimum photon budget -------------------------------------------------

@dataclass(frozen=True)
class PhotonGrid:
    alpha_min: float = 1e-3
    alpha_max: float = 1e2
    n_alpha: int = 121
    V_min: float = 1.0
    V_max: float = 20.0
    n_V: int = 96
    max_iter: int = 60
    shrink: float = 0.5

    def alphas(self):
        return np.concatenate([[0.0], np.geomspace(self.alpha_min, self.alpha_max, self.n_alpha)])

    def variances(self):
        return np.linspace(self.V_min, self.V_max, self.n_V)


@dataclass
class PhotonBudgetResult:
    min_photons: float
    arg_alpha: float
    arg_variance: float
    feasible: bool
    regime: str = None
    key_rate: float = float("nan")
    ber: float = float("nan")


def regime_label(e_c: float, alpha: float = None, alpha_split: float = 1.0) -> str:
    if e_c < 1e-2:
        return "large-alpha"
    if e_c > 0.4:
        return "small-alpha"
    return "large-alpha" if (alpha or 0.0) >= alpha_split else "small-alpha"


@dataclass
class PhotonScan:
    alphas: np.ndarray
    variances: np.ndarray
    key_rate: np.ndarray
    ber: np.ndarray

    def nbar(self):
        return self.alphas[:, None] ** 2 + 2 * self.variances[None, :]

    def feasible(self, qos: QosTarget):
        return (self.key_rate >= qos.min_key_rate) & (self.ber <= qos.max_ber)


def _evaluate(alpha, V, channel, sigma, beta, theta):
    rep = sqcc_key_rate(ProtocolConfig(V, alpha, theta, sigma, beta), channel)
    return rep.key_rate, rep.ber


def photon_scan(channel: ChannelModel, sigma=1e-6, beta=0.95, theta=0.0,
                grid: PhotonGrid = PhotonGrid()) -> PhotonScan:
    al, vs = grid.alphas(), grid.variances()
    K = np.zeros((al.size, vs.size))
    E = np.zeros_like(K)
    for i, a in enumerate(al):
        for j, v in enumerate(vs):
            K[i, j], E[i, j] = _evaluate(a, v, channel, sigma, beta, theta)
    return PhotonScan(al, vs, K, E)


def min_photon_search(channel: ChannelModel, qos: QosTarget, sigma=1e-6, beta=0.95, theta=0.0,
                      grid: PhotonGrid = PhotonGrid(), scan: PhotonScan = None) -> PhotonBudgetResult:
    """Smallest mean photon number meeting both QoS targets.

    Coarse scan over (alpha, V) then a compass search on n-bar with the
    QoS constraints as a barrier.  Never raises for infeasible targets.
    """
    if scan is None:
        scan = photon_scan(channel, sigma, beta, theta, grid)
    ok = scan.feasible(qos)
    if not ok.any():
        return PhotonBudgetResult(float("nan"), float("nan"), float("nan"), False)
    nb = np.where(ok, scan.nbar(), np.inf)
    # argmin picks the first minimum in (alpha, V) order, so ties go to smaller alpha
    i, j = np.unravel_index(np.argmin(nb), nb.shape)
    x = np.array([scan.alphas[i], scan.variances[j]])

    def feasible_at(p):
        a, v = p
        if a < 0 or v < grid.V_min or v > grid.V_max or a > grid.alpha_max:
            return None
        K, e = _evaluate(a, v, channel, sigma, beta, theta)
        if K >= qos.min_key_rate and e <= qos.max_ber:
            return K, e
        return None

    best = feasible_at(x)
    if best is None:  # grid value recomputed identically, so this is defensive
        best = (scan.key_rate[i, j], scan.ber[i, j])
    # step sizes: one coarse cell per axis
    da = (scan.alphas[min(i + 1, scan.alphas.size - 1)] - scan.alphas[max(i - 1, 0)]) / 2 or grid.alpha_min
    dv = (grid.V_max - grid.V_min) / max(grid.n_V - 1, 1)
    steps = np.array([da, dv])
    f = mean_photon(*x)
    for _ in range(grid.max_iter):
        moved = False
        for k in range(2):
            for sgn in (-1.0, 1.0):
                y = x.copy()
                y[k] += sgn * steps[k]
                if y[0] < 0:
                    y[0] = 0.0
                fy = mean_photon(max(y[0], 0.0), max(y[1], 1.0)) if y[1] >= 1 else np.inf
                if fy < f:
                    r = feasible_at(y)
                    if r is not None:
                        x, f, best, moved = y, fy, r, True
        if not moved:
            steps *= grid.shrink
    K, e = best
    return PhotonBudgetResult(float(f), float(x[0]), float(x[1]), True, regime_label(e, x[0]), float(K), float(e))
