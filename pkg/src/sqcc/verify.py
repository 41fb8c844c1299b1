"""Oracle-versus-analytic regression suites driven by ``sqcc oracle-check``."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import fock as F
from . import gaussian as gc
from .baseline import ChannelModel, ProtocolConfig, total_excess_noise
from .errors import GainOutOfDomain, TruncationError
from .ideal import effective_params
from .scissor import ScissorPoint, _closed_form, scissor_bob_variance, scissor_displacement_sq, scissor_success_prob

SUITES = ("scissor", "ideal-nla", "gaussian-core")
REL_FLOOR = 1e-9
CONVERGED = 1e-10


@dataclass
class Deviation:
    suite: str
    quantity: str
    max_rel_dev: float
    tolerance: float
    n_points: int

    @property
    def passed(self):
        return bool(self.max_rel_dev < self.tolerance)


def rel_dev(x, y, floor=REL_FLOOR):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.max(np.abs(x - y) / np.maximum(np.abs(y), floor)))


def _converged(run, D0, D_max=60, step=5):
    """Run at D and D + step until the outputs agree; returns the larger run."""
    D = D0
    prev = None
    while D <= D_max:
        try:
            cur = run(D)
        except TruncationError:
            prev, D = None, D + step
            continue
        if prev is not None and rel_dev(cur, prev, 1e-6) < CONVERGED:
            return cur, D
        prev, D = cur, D + step
    raise TruncationError(f"no convergence up to D={D_max}")


# --- scissor --------------------------------------------------------------------

def scissor_grid():
    return list(itertools.product((0.0, 0.06, 0.12), (1.0, 3.0, 10.0), (10.0, 30.0, 50.0), (1.05, 1.2)))


def scissor_oracle(V, T, eps, alpha, tau, D):
    """[P1, P2, d^2, B_x, A_x, |C_x|] from the Fock simulation (theta = 0)."""
    s = F.build_tmsv(F.tmsv_lambda(V), (D, D))
    s = F.displace(s, 1, alpha / 2)
    r = F.thermal_loss(s, 1, T, eps)
    o1, o2, p1, p2 = F.scissor_apply(r, 1, tau)
    m = F.moments(o2)
    return np.array([p1, p2, m.mean[2] ** 2 + m.mean[3] ** 2, m.covariance[2, 2], m.covariance[0, 0],
                     abs(m.covariance[0, 2])])


def scissor_point(args):
    (alpha, g, L, V), e0, sigma, D0 = args
    ch = ChannelModel.from_loss_db(L, e0)
    cfg = ProtocolConfig(V, alpha, 0.0, sigma)
    eps = total_excess_noise(cfg, ch)
    pt = ScissorPoint.build(g, V, ch.T, eps)
    orc, _ = _converged(lambda D: scissor_oracle(V, ch.T, eps, alpha, pt.tau, D), D0)
    a_rx = np.sqrt(ch.T) * alpha
    cf = _closed_form(V, ch.T, eps, alpha, 0.0, pt.tau)
    ana = np.array([scissor_success_prob(a_rx, pt), scissor_success_prob(a_rx, pt),
                    scissor_displacement_sq(a_rx, pt), scissor_bob_variance(a_rx, pt, 0.0), cf["A"], abs(cf["C"])])
    return orc, ana


def run_scissor(e0=0.03, sigma=1e-6, D0=20, executor=None):
    jobs = [(p, e0, sigma, D0) for p in scissor_grid()]
    mapper = executor.map if executor is not None else map
    res = list(mapper(scissor_point, jobs))
    orc = np.array([r[0] for r in res])
    ana = np.array([r[1] for r in res])
    names = ["P_pattern1", "P_pattern2", "d2", "B", "A", "C"]
    tols = [1e-6, 1e-6, 1e-6, 1e-6, 1e-8, 1e-8]
    return [Deviation("scissor", n, rel_dev(orc[:, k], ana[:, k]), tol, len(res))
            for k, (n, tol) in enumerate(zip(names, tols))]


# --- ideal NLA ----------------------------------------------------------------------

def ideal_points(n=100, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        V = rng.uniform(1.05, 1.5)
        alpha = rng.uniform(0.0, 0.3)
        g = rng.uniform(1.0, 2.0)
        L = rng.uniform(3.0, 20.0)
        e0 = rng.uniform(0.0, 0.05)
        try:
            effective_params(ProtocolConfig(V, alpha), ChannelModel.from_loss_db(L, e0), g)
        except GainOutOfDomain:
            continue
        out.append((V, alpha, g, L, e0))
    return out


def ideal_oracle(V, T, e0, alpha, g, D):
    s = F.build_tmsv(F.tmsv_lambda(V), (D, D))
    s = F.displace(s, 1, alpha / 2)
    r = F.thermal_loss(s, 1, T, e0)
    o = F.ideal_nla_apply(r, 1, g)
    m = F.moments(o)
    return np.concatenate([m.mean, m.covariance.ravel()])


def ideal_point(args):
    (V, alpha, g, L, e0), D0 = args
    ch = ChannelModel.from_loss_db(L, e0)
    p = effective_params(ProtocolConfig(V, alpha), ch, g)
    pred = np.concatenate([[p.mean_a, 0.0, p.mean_b, 0.0],
                           gc.TwoModeCovariance(p.a, p.b, p.c).matrix().ravel()])
    orc, _ = _converged(lambda D: ideal_oracle(V, ch.T, e0, alpha, g, D), D0)
    return orc, pred


def run_ideal(n=100, seed=0, D0=20, executor=None):
    jobs = [(p, D0) for p in ideal_points(n, seed)]
    mapper = executor.map if executor is not None else map
    res = list(mapper(ideal_point, jobs))
    orc = np.array([r[0] for r in res])
    pred = np.array([r[1] for r in res])
    return [Deviation("ideal-nla", "mean", rel_dev(orc[:, :4], pred[:, :4]), 1e-6, len(res)),
            Deviation("ideal-nla", "covariance", rel_dev(orc[:, 4:], pred[:, 4:]), 1e-6, len(res))]


# --- gaussian core --------------------------------------------------------------------

def random_covariances(n=1000, seed=0):
    """Random physical (a, b, c) triples, accepted by the uncertainty relation V + i Omega >= 0."""
    rng = np.random.default_rng(seed)
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    out = []
    while len(out) < n:
        a, b = 1 + rng.exponential(3.0, size=2)
        c = rng.uniform(-1, 1) * np.sqrt((a - 1) * (b + 1)) * 1.2
        m = np.array([[a, 0, c, 0], [0, a, 0, -c], [c, 0, b, 0], [0, -c, 0, b]])
        if np.linalg.eigvalsh(m + 1j * omega).min() < 1e-9:
            continue
        out.append((a, b, c))
    return out


def run_gaussian(n=1000, seed=0, executor=None):
    dev = 0.0
    for a, b, c in random_covariances(n, seed):
        cov = gc.TwoModeCovariance(a, b, c)
        dev = max(dev, rel_dev(gc.symplectic_eigenvalues(cov), gc.symplectic_eigenvalues_bruteforce(cov)))
    return [Deviation("gaussian-core", "symplectic_eigenvalues", dev, 1e-10, n)]


def run_suite(name, executor=None, **kw):
    if name == "scissor":
        return run_scissor(executor=executor, **kw)
    if name == "ideal-nla":
        return run_ideal(executor=executor, **kw)
    if name == "gaussian-core":
        return run_gaussian(executor=executor, **kw)
    raise ValueError(f"unknown suite {name!r}")
