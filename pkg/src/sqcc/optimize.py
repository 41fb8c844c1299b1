"""Key-rate optimization over free receiver/transmitter parameters and loss sweeps."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

from . import gaussian as gc
from .baseline import (ChannelModel, PhotonBudgetResult, PhotonGrid, PhotonScan, ProtocolConfig, QosTarget, mean_photon,
                       min_photon_search, photon_scan, sqcc_key_rate, _evaluate)
from .dual import dual_key_rate
from .errors import EmptyFeasibleSet, SQCCError
from .ideal import ideal_key_rate
from .scissor import scissor_key_rate

VARIANTS = ("baseline", "ideal", "scissor", "dual")
REL_TIE = 1e-12


@dataclass(frozen=True)
class SearchGrid:
    V_min: float = 1.001
    V_max: float = 20.0
    n_V: int = 40
    g_min: float = 1.0
    g_max: float = None  # adaptive per variant when None
    n_g: int = 41
    t_min: float = 0.5
    t_max: float = 1 - 1e-6
    n_t: int = 9
    max_iter: int = 60
    shrink: float = 0.5

    def __post_init__(self):
        if not (1 < self.V_min < self.V_max):
            raise ValueError("need 1 < V_min < V_max")
        if self.g_max is not None and not self.g_min < self.g_max:
            raise ValueError("need g_min < g_max")
        if not 0 < self.t_min < self.t_max < 1:
            raise ValueError("need 0 < t_min < t_max < 1")
        if min(self.n_V, self.n_g, self.n_t) < 2:
            raise ValueError("each axis needs at least two points")
        if not 0 < self.shrink < 1 or self.max_iter < 0:
            raise ValueError("bad refinement settings")

    def gain_max(self, variant, T):
        if self.g_max is not None:
            return self.g_max
        return 10.0 / math.sqrt(T) if variant == "ideal" else 100.0


@dataclass
class SweepRecord:
    loss_db: float
    alpha: float
    variant: str
    V_opt: float
    g_opt: float
    t_opt: float
    key_rate: float
    ber: float
    g2T: float
    T_eff: float
    plob: float
    failed: bool = False
    message: str = ""
    on_boundary: tuple = ()
    exceeds_plob: bool = False

    CSV_FIELDS = ("loss_db", "alpha", "variant", "V_opt", "g_opt", "t_opt", "key_rate", "ber", "g2T",
                  "T_eff", "plob")

    def row(self):
        return [getattr(self, k) for k in self.CSV_FIELDS]

    def as_dict(self):
        d = asdict(self)
        d["on_boundary"] = list(self.on_boundary)
        return d


def evaluate(variant, config: ProtocolConfig, channel: ChannelModel, V, g=1.0, t=1.0):
    """RateReport for one parameter choice; raises on domain errors."""
    cfg = config.with_(variance=V)
    if variant == "baseline":
        return sqcc_key_rate(cfg, channel)
    if variant == "ideal":
        return ideal_key_rate(cfg, channel, g)
    if variant == "scissor":
        return scissor_key_rate(cfg, channel, g)
    if variant == "dual":
        return dual_key_rate(cfg, channel, g, t)
    raise ValueError(f"unknown variant {variant!r}")


class _Objective:
    """Maps search coordinates to (K, report) with domain errors scored as -inf."""

    def __init__(self, variant, config, channel, grid):
        self.variant, self.config, self.channel = variant, config, channel
        T = channel.T
        # V is searched in log10(V - 1): optima range from V ~ 1.1 to the box edge
        lo = [math.log10(grid.V_min - 1)]
        hi = [math.log10(grid.V_max - 1)]
        n = [grid.n_V]
        if variant in ("ideal", "scissor", "dual"):
            lo.append(math.log10(grid.g_min))
            hi.append(math.log10(grid.gain_max(variant, T)))
            n.append(grid.n_g)
        if variant == "dual":
            # coordinate is log10(1 - t); larger t sits at the lower end
            lo.append(math.log10(1 - grid.t_max))
            hi.append(math.log10(1 - grid.t_min))
            n.append(grid.n_t)
        self.lo, self.hi, self.n = np.array(lo), np.array(hi), n
        self.cache = {}

    def params(self, u):
        V = 1.0 + 10.0 ** float(u[0])
        g = 10.0 ** float(u[1]) if len(u) > 1 else 1.0
        t = 1.0 - 10.0 ** float(u[2]) if len(u) > 2 else 1.0
        return V, g, t

    def __call__(self, u):
        key = tuple(float(x) for x in u)
        if key in self.cache:
            return self.cache[key]
        V, g, t = self.params(u)
        try:
            rep = evaluate(self.variant, self.config, self.channel, V, g, t)
            val = (rep.key_rate, rep)
        except (SQCCError, FloatingPointError, ZeroDivisionError):
            val = (-math.inf, None)
        self.cache[key] = val
        return val

    def axes(self):
        return [np.linspace(l, h, k) for l, h, k in zip(self.lo, self.hi, self.n)]


def _better(Ka, pa, Kb, pb):
    """True when candidate a beats b: higher K, then smaller g, smaller V, larger t."""
    if Kb == -math.inf:
        return Ka > Kb or (Ka == Kb and _tiebreak(pa) < _tiebreak(pb))
    if Ka == -math.inf:
        return False
    scale = max(abs(Ka), abs(Kb))
    if abs(Ka - Kb) > REL_TIE * scale:
        return Ka > Kb
    return _tiebreak(pa) < _tiebreak(pb)


def _tiebreak(p):
    V, g, t = p
    return (g, V, -t)


def optimize_point(variant, config: ProtocolConfig, channel: ChannelModel, grid: SearchGrid = SearchGrid(),
                   hint=None) -> SweepRecord:
    """Coarse grid scan followed by a compass search (shrink factor grid.shrink)."""
    obj = _Objective(variant, config, channel, grid)
    axes = obj.axes()
    best_u, best_K = None, -math.inf
    for u in itertools.product(*axes):
        K, _ = obj(u)
        if best_u is None or _better(K, obj.params(u), best_K, obj.params(best_u)):
            best_u, best_K = np.array(u), K
    if best_K == -math.inf:
        raise EmptyFeasibleSet(f"{variant}: every grid point failed at L={channel.loss_db} dB")
    if hint is not None:
        hu = _to_coords(variant, hint)
        hu = np.clip(hu, obj.lo, obj.hi)
        K, _ = obj(hu)
        if _better(K, obj.params(hu), best_K, obj.params(best_u)):
            best_u, best_K = hu, K
    steps = np.array([(h - l) / (k - 1) for l, h, k in zip(obj.lo, obj.hi, obj.n)])
    x, fx = best_u.copy(), best_K
    for _ in range(grid.max_iter):
        cand_u, cand_K = None, None
        for k in range(len(x)):
            for sgn in (-1.0, 1.0):
                y = x.copy()
                y[k] = min(max(y[k] + sgn * steps[k], obj.lo[k]), obj.hi[k])
                if y[k] == x[k]:
                    continue
                K, _ = obj(y)
                if cand_u is None or _better(K, obj.params(y), cand_K, obj.params(cand_u)):
                    cand_u, cand_K = y, K
        improved = cand_u is not None and cand_K > fx and abs(cand_K - fx) > REL_TIE * max(abs(fx), abs(cand_K))
        if improved:
            x, fx = cand_u, cand_K
        else:
            steps = steps * grid.shrink
    K, rep = obj(x)
    V, g, t = obj.params(x)
    bound = tuple(bool(np.isclose(x[k], obj.lo[k]) or np.isclose(x[k], obj.hi[k])) for k in range(len(x)))
    return make_record(variant, config, channel, V, g, t, rep, bound)


def _to_coords(variant, hint):
    V, g, t = hint
    u = [math.log10(max(V - 1, 1e-300))]
    if variant in ("ideal", "scissor", "dual"):
        u.append(math.log10(g))
    if variant == "dual":
        u.append(math.log10(max(1 - t, 1e-300)))
    return np.array(u, dtype=float)


def _plob(T):
    return gc.plob_bound(T) if T < 1 else math.inf


def make_record(variant, config, channel, V, g, t, rep, bound=()):
    T = channel.T
    plob = _plob(T)
    K = rep.key_rate
    return SweepRecord(loss_db=channel.loss_db, alpha=config.alpha, variant=variant, V_opt=V, g_opt=g,
                       t_opt=t, key_rate=K, ber=rep.ber, g2T=g * g * T, T_eff=rep.T_eff, plob=plob,
                       on_boundary=bound, exceeds_plob=K > plob + 1e-12)


def failed_record(variant, config, channel, msg):
    nan = math.nan
    return SweepRecord(channel.loss_db, config.alpha, variant, nan, nan, nan, 0.0, nan, nan, nan,
                       _plob(channel.T), failed=True, message=msg)


@dataclass(frozen=True)
class SweepFixed:
    excess_noise: float = 0.03
    phase_noise: float = 1e-6
    reconciliation: float = 0.95
    theta: float = 0.0


def sweep_chain(variant, alpha, losses, fixed: SweepFixed, grid: SearchGrid, warm_start=True):
    """One alpha, losses visited in ascending order with warm-start hints."""
    order = sorted(range(len(losses)), key=lambda i: losses[i])
    out = [None] * len(losses)
    hint = None
    cfg = ProtocolConfig(grid.V_min, alpha, fixed.theta, fixed.phase_noise, fixed.reconciliation)
    for i in order:
        ch = ChannelModel.from_loss_db(losses[i], fixed.excess_noise)
        try:
            rec = optimize_point(variant, cfg, ch, grid, hint if warm_start else None)
            hint = (rec.V_opt, rec.g_opt, rec.t_opt)
        except SQCCError as exc:
            rec = failed_record(variant, cfg, ch, str(exc))
        out[i] = rec
    return out


def _chain_job(args):
    return sweep_chain(*args)


def loss_sweep(variant, alpha_list, loss_grid, fixed: SweepFixed = SweepFixed(), grid: SearchGrid = SearchGrid(),
               warm_start=True, executor=None):
    """Optimized records for every (alpha, loss) pair, alpha-major order.

    Each alpha is an independent chain so results do not depend on how
    chains are distributed over workers.
    """
    jobs = [(variant, a, list(loss_grid), fixed, grid, warm_start) for a in alpha_list]
    mapper = executor.map if executor is not None else map
    out = []
    for recs in mapper(_chain_job, jobs):
        out.extend(recs)
    return out


# --- photon budget landscape -------------------------------------------------

def _scan_row(args):
    alpha, variances, channel, sigma, beta, theta = args
    K = np.empty(len(variances))
    E = np.empty(len(variances))
    for j, v in enumerate(variances):
        K[j], E[j] = _evaluate(alpha, v, channel, sigma, beta, theta)
    return K, E


def parallel_photon_scan(channel, fixed: SweepFixed, grid: PhotonGrid, executor=None) -> PhotonScan:
    al, vs = grid.alphas(), grid.variances()
    jobs = [(a, vs, channel, fixed.phase_noise, fixed.reconciliation, fixed.theta) for a in al]
    mapper = executor.map if executor is not None else map
    rows = list(mapper(_scan_row, jobs))
    return PhotonScan(al, vs, np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))


def photon_landscape(channel, k0_list, ec0_list, fixed: SweepFixed = SweepFixed(), grid: PhotonGrid = PhotonGrid(),
                     executor=None):
    """Matrix [i][j] of PhotonBudgetResult for K0 = k0_list[i], e_C0 = ec0_list[j]."""
    scan = parallel_photon_scan(channel, fixed, grid, executor)
    out = []
    for k0 in k0_list:
        row = []
        for ec0 in ec0_list:
            if k0 > _plob(channel.T):
                row.append(PhotonBudgetResult(math.nan, math.nan, math.nan, False))
                continue
            row.append(min_photon_search(channel, QosTarget(k0, ec0), fixed.phase_noise, fixed.reconciliation,
                                         fixed.theta, grid, scan))
        out.append(row)
    return out


@dataclass
class FeasibleRegion:
    size: int
    min_photons: float
    ber_at_min: float
    alpha_at_min: float
    V_at_min: float
    ber_range: tuple
    alpha_range: tuple


def feasible_regions(scan: PhotonScan, qos: QosTarget):
    """Connected components (4-neighbour) of the feasible (alpha, V) cells."""
    mask = scan.feasible(qos)
    labels, n = ndimage.label(mask)
    nb = scan.nbar()
    out = []
    for k in range(1, n + 1):
        sel = labels == k
        cells = np.where(sel, nb, np.inf)
        i, j = np.unravel_index(np.argmin(cells), cells.shape)
        ai = np.where(sel.any(axis=1))[0]
        out.append(FeasibleRegion(int(sel.sum()), float(nb[i, j]), float(scan.ber[i, j]), float(scan.alphas[i]),
                                  float(scan.variances[j]), (float(scan.ber[sel].min()), float(scan.ber[sel].max())),
                                  (float(scan.alphas[ai.min()]), float(scan.alphas[ai.max()]))))
    out.sort(key=lambda r: r.min_photons)
    return out
