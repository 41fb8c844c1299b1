"""Truncated Fock-basis simulator used as ground truth for the analytic models.

States are ``FockTensor`` objects.  A pure state stores amplitudes with one
axis per mode.  A density operator stores the ket axes followed by the bra
axes.  Quadratures follow x = a + a^dag and p = -i(a - a^dag), so vacuum
variance is 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh, expm

from .errors import DomainError, TruncationError, ZeroProbability

NORM_TOL = 1e-10


@dataclass
class FockTensor:
    data: np.ndarray
    is_density: bool = False

    @property
    def mode_dims(self) -> tuple:
        d = self.data.shape
        return d[: len(d) // 2] if self.is_density else d

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    def trace(self) -> float:
        if self.is_density:
            n = int(np.prod(self.mode_dims))
            return float(np.real(np.trace(self.data.reshape(n, n))))
        return float(np.sum(np.abs(self.data) ** 2))

    def matrix(self) -> np.ndarray:
        n = int(np.prod(self.mode_dims))
        return self.to_density().data.reshape(n, n)

    def to_density(self) -> "FockTensor":
        if self.is_density:
            return self
        psi = self.data
        return FockTensor(np.multiply.outer(psi, psi.conj()), True)

    def normalized(self) -> "FockTensor":
        tr = self.trace()
        if tr <= 0:
            raise ZeroProbability("cannot normalize a zero state")
        scale = tr if self.is_density else np.sqrt(tr)
        return FockTensor(self.data / scale, self.is_density)


@dataclass
class GaussianMoments:
    mean: np.ndarray
    covariance: np.ndarray


# --- state preparation -----------------------------------------------------

def vacuum(dims) -> FockTensor:
    psi = np.zeros(tuple(dims), dtype=complex)
    psi[(0,) * len(dims)] = 1.0
    return FockTensor(psi)


def build_tmsv(lam: float, dims=(20, 20)) -> FockTensor:
    if not 0 <= lam < 1:
        raise DomainError("lambda must lie in [0, 1)")
    D = min(dims)
    if lam > 0 and lam ** (2 * D) > NORM_TOL:
        raise TruncationError(f"TMSV tail {lam ** (2 * D):.2e} exceeds tolerance at D={D}")
    psi = np.zeros(tuple(dims), dtype=complex)
    n = np.arange(D)
    psi[n, n] = np.sqrt(1 - lam * lam) * lam ** n
    return FockTensor(psi / np.linalg.norm(psi))


def tmsv_lambda(V: float) -> float:
    return float(np.sqrt((V - 1) / (V + 1)))


def thermal_state(variance: float, D: int) -> FockTensor:
    nbar = (variance - 1) / 2
    q = nbar / (nbar + 1)
    p = (1 - q) * q ** np.arange(D)
    if q > 0 and q ** D > NORM_TOL:
        raise TruncationError("thermal tail exceeds tolerance")
    return FockTensor(np.diag(p / p.sum()).astype(complex), True)


def coherent_amplitudes(amp: complex, D: int) -> np.ndarray:
    n = np.arange(D)
    from scipy.special import gammaln
    mag = np.exp(-abs(amp) ** 2 / 2 + n * np.log(abs(amp) + 1e-300) - gammaln(n + 1) / 2)
    if amp == 0:
        mag = (n == 0).astype(float)
    return mag * np.exp(1j * np.angle(amp) * n)


# --- single-mode operators -------------------------------------------------

def annihilation(D: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, D)), 1).astype(complex)


def displacement_matrix(amp: complex, D: int, pad: int = 40) -> np.ndarray:
    """exp(amp a^dag - amp* a) computed in a padded space and cropped."""
    a = annihilation(D + pad)
    return expm(amp * a.conj().T - np.conj(amp) * a)[:D, :D]


def apply_mode_op(state: FockTensor, mode: int, K: np.ndarray) -> FockTensor:
    """K acting on one mode; K may change that mode's dimension."""
    n = state.n_modes
    if not state.is_density:
        out = np.moveaxis(np.tensordot(K, state.data, axes=([1], [mode])), 0, mode)
        return FockTensor(out)
    rho = np.moveaxis(np.tensordot(K, state.data, axes=([1], [mode])), 0, mode)
    rho = np.moveaxis(np.tensordot(K.conj(), rho, axes=([1], [n + mode])), 0, n + mode)
    return FockTensor(rho, True)


def apply_channel(state: FockTensor, mode: int, kraus) -> FockTensor:
    rho = state.to_density()
    out = None
    for K in kraus:
        r = apply_mode_op(rho, mode, K).data
        out = r if out is None else out + r
    return FockTensor(out, True)


def displace(state: FockTensor, mode: int, amp: complex) -> FockTensor:
    D = state.mode_dims[mode]
    out = apply_mode_op(state, mode, displacement_matrix(amp, D))
    before, after = state.trace(), out.trace()
    if abs(before - after) > 1e-8 * before:
        raise TruncationError(f"displacement lost norm {before - after:.2e}")
    return out


# --- beamsplitter ----------------------------------------------------------

@lru_cache(maxsize=64)
def beamsplitter(eta: float, d1: int, d2: int) -> np.ndarray:
    """U[o1, o2, i1, i2] for a beamsplitter of transmissivity eta.

    Heisenberg action a1 -> sqrt(eta) a1 + sqrt(1-eta) a2.  Each fixed total
    photon number block is exponentiated exactly, so the tensor is unitary
    on the supplied input space without truncation error.
    """
    theta = np.arccos(np.sqrt(eta))
    dout = d1 + d2 - 1
    U = np.zeros((dout, dout, d1, d2))
    for N in range(d1 + d2 - 1):
        k = np.arange(N + 1)  # photons in mode 1
        # generator theta (a1^dag a2 - a1 a2^dag) in the |k, N-k> basis
        up = np.sqrt((k[:-1] + 1) * (N - k[:-1]))
        gen = np.zeros((N + 1, N + 1))
        gen[k[:-1] + 1, k[:-1]] = up
        gen -= gen.T
        block = expm(theta * gen)
        kin = k[(k < d1) & (N - k < d2)]
        U[k[:, None], N - k[:, None], kin[None, :], N - kin[None, :]] = block[:, kin]
    return U


# --- channels ---------------------------------------------------------------

def _env_dim(nbar, tol=1e-13):
    if nbar <= 0:
        return 1
    q = nbar / (nbar + 1)
    return int(np.ceil(np.log(tol) / np.log(q))) + 1


def thermal_loss(state: FockTensor, mode: int, T: float, eps0: float, out_dim: int = None) -> FockTensor:
    """Couple a mode to a thermal environment on a transmissivity-T beamsplitter.

    The environment variance W = 1 + T eps0 / (1 - T) gives output variance
    T V + (1 - T) W.  Kraus operators <l|U|m> conserve total photon number,
    so each shifts the Fock index by m - l.  All Kraus maps with the same
    shift are applied together as one elementwise product.
    """
    if not 0 < T <= 1:
        raise DomainError("transmissivity must lie in (0, 1]")
    if T == 1:
        if eps0 > 0:
            raise DomainError("no finite environment realizes excess noise at T = 1")
        return state.to_density()
    rho = state.to_density()
    D = rho.mode_dims[mode]
    Dout = out_dim or D
    W = 1 + T * eps0 / (1 - T)
    nb = (W - 1) / 2
    DE = _env_dim(nb)
    q = nb / (nb + 1) if nb > 0 else 0.0
    pm = (1 - q) * q ** np.arange(DE)
    U = beamsplitter(float(T), D, DE)  # U[o_sys, o_env, i_sys, i_env]
    # k[l, m, n_in] = sqrt(p_m) <n_in + m - l, l| U |n_in, m>
    n = rho.n_modes
    data = np.moveaxis(rho.data, (mode, n + mode), (-2, -1))
    out = np.zeros(data.shape[:-2] + (Dout, Dout), dtype=complex)
    n_in = np.arange(D)
    shifts = {}
    for l in range(U.shape[1]):
        for m in range(DE):
            s = m - l
            n_out = n_in + s
            valid = (n_out >= 0) & (n_out < min(Dout, U.shape[0]))
            if not valid.any():
                continue
            vec = np.zeros(D)
            vec[valid] = np.sqrt(pm[m]) * U[n_out[valid], l, n_in[valid], m]
            if not np.any(vec):
                continue
            shifts.setdefault(s, []).append(vec)
    for s, vecs in shifts.items():
        V = np.array(vecs)
        M = V.T @ V  # sum over Kraus of k(c) k(d), real
        src = np.arange(D)
        dst = src + s
        ok = (dst >= 0) & (dst < Dout)
        si, di = src[ok], dst[ok]
        out[..., di[:, None], di[None, :]] += M[np.ix_(si, si)] * data[..., si[:, None], si[None, :]]
    out = np.moveaxis(out, (-2, -1), (mode, n + mode))
    res = FockTensor(out, True)
    lost = rho.trace() - res.trace()
    if lost > 1e-8:
        raise TruncationError(f"thermal loss pushed {lost:.2e} of the trace above D={Dout}")
    return res


# --- amplifiers ---------------------------------------------------------------

def scissor_kraus(tau: float, D: int):
    """Kraus operators (2 x D) of the two accepted heralding patterns.

    Ancillas |phi> = sqrt(1-tau)|0,1> - sqrt(tau)|1,0> on (e, f).  Ancilla e
    meets the input on a balanced beamsplitter whose outputs are detected;
    f carries the output.  Pattern 1 is (on, off) and pattern 2 is (off, on).
    """
    U = beamsplitter(0.5, D, 2)  # [c, d, b, e]
    phi = np.array([[0.0, np.sqrt(1 - tau)], [-np.sqrt(tau), 0.0]])  # phi[e, f]
    A = np.einsum("cdbe,ef->cdfb", U, phi)
    k1 = [A[k, 0] for k in range(1, A.shape[0])]
    k2 = [A[0, k] for k in range(1, A.shape[1])]
    return k1, k2


def scissor_apply(state: FockTensor, mode: int, tau: float):
    """Returns (state1, state2, p1, p2) for the two accepted patterns."""
    D = state.mode_dims[mode]
    k1, k2 = scissor_kraus(tau, D)
    out = []
    for kraus in (k1, k2):
        s = apply_channel(state, mode, kraus)
        out.append(s)
    p1, p2 = out[0].trace() / state.trace(), out[1].trace() / state.trace()
    if min(p1, p2) < 1e-300:
        raise ZeroProbability("heralding pattern with vanishing probability")
    return out[0].normalized(), out[1].normalized(), p1, p2


def ideal_nla_apply(state: FockTensor, mode: int, gain: float) -> FockTensor:
    D = state.mode_dims[mode]
    # scale by g^(n - D + 1) to keep entries bounded; normalization removes it
    op = np.diag(np.exp((np.arange(D) - (D - 1)) * np.log(gain))).astype(complex)
    out = apply_mode_op(state, mode, op)
    tr = out.trace()
    if not tr > 0:
        raise TruncationError("amplified state vanished")
    out = out.normalized()
    top = photon_distribution(out, mode)[-2:].sum()
    if top > 1e-8:
        raise TruncationError(f"amplified state has {top:.2e} weight in the top Fock levels")
    return out


# --- readout -------------------------------------------------------------------

def photon_distribution(state: FockTensor, mode: int) -> np.ndarray:
    rho = reduced(state, [mode])
    return np.real(np.diag(rho))


def reduced(state: FockTensor, keep) -> np.ndarray:
    """Reduced density matrix on the listed modes, as a square matrix."""
    rho = state.to_density()
    n = rho.n_modes
    letters = "abcdefgh"
    ket = list(letters[:n])
    bra = list(letters[:n].upper())
    for m in range(n):
        if m not in keep:
            bra[m] = ket[m]
    out = "".join(ket[m] for m in keep) + "".join(bra[m] for m in keep)
    r = np.einsum("".join(ket) + "".join(bra) + "->" + out, rho.data)
    d = int(np.prod([rho.mode_dims[m] for m in keep]))
    return r.reshape(d, d)


def _expect(rho: FockTensor, ops: dict) -> complex:
    """Tr[rho prod_m op_m] with op_m acting on mode m."""
    s = rho
    for m, op in ops.items():
        s = FockTensor(np.moveaxis(np.tensordot(op, s.data, axes=([1], [m])), 0, m), True)
    return complex(np.trace(s.matrix()))


def moments(state: FockTensor) -> GaussianMoments:
    """Quadrature means and symmetrized covariance from normal-ordered moments."""
    rho = state.to_density().normalized()
    n = rho.n_modes
    a = [annihilation(d) for d in rho.mode_dims]
    ad = [x.conj().T for x in a]
    mean = np.zeros(2 * n)
    m1 = [_expect(rho, {i: a[i]}) for i in range(n)]
    for i in range(n):
        mean[2 * i] = 2 * m1[i].real
        mean[2 * i + 1] = 2 * m1[i].imag
    cov = np.zeros((2 * n, 2 * n))
    for i in range(n):
        aa = _expect(rho, {i: a[i] @ a[i]})
        nn = _expect(rho, {i: ad[i] @ a[i]}).real
        cov[2 * i, 2 * i] = 2 * aa.real + 2 * nn + 1
        cov[2 * i + 1, 2 * i + 1] = -2 * aa.real + 2 * nn + 1
        cov[2 * i, 2 * i + 1] = cov[2 * i + 1, 2 * i] = 2 * aa.imag
        for j in range(i + 1, n):
            z = _expect(rho, {i: a[i], j: a[j]})
            w = _expect(rho, {i: a[i], j: ad[j]})
            blk = np.array([[2 * (z + w).real, 2 * (z.imag - w.imag)],
                            [2 * (z.imag + w.imag), 2 * (w - z).real]])
            cov[2 * i:2 * i + 2, 2 * j:2 * j + 2] = blk
            cov[2 * j:2 * j + 2, 2 * i:2 * i + 2] = blk.T
    cov -= np.outer(mean, mean)
    return GaussianMoments(mean, cov)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits of a density matrix (FockTensor or square array)."""
    m = rho.matrix() if isinstance(rho, FockTensor) else np.asarray(rho)
    m = (m + m.conj().T) / 2
    ev = eigh(m, eigvals_only=True)
    ev = ev[ev > 1e-16]
    ev = ev / ev.sum()
    return float(-np.sum(ev * np.log2(ev)))


def holevo_gaussian(state: FockTensor) -> float:
    """chi_EB for a two-mode Gaussian state (A, B) with Eve purifying it.

    S(E) = S(AB) for the purification.  After Bob heterodynes with outcome
    beta the state of AE is pure, so S(E|beta) = S(A|beta).  For Gaussian
    states that entropy does not depend on beta, so beta = 0 suffices.
    """
    rho = state.to_density().normalized()
    DA, DB = rho.mode_dims
    s_ab = von_neumann_entropy(rho)
    cond = rho.data[:, 0, :, 0]
    cond = cond / np.trace(cond)
    return s_ab - von_neumann_entropy(cond)


def heterodyne_rates(state: FockTensor, half_width=None, n_grid=41):
    """(I_het, chi) of a two-mode state computed without a Gaussian assumption.

    I_het is the mutual information between heterodyne outcomes on A and B,
    from a Riemann sum of the joint Husimi function.  chi averages the
    conditional entropy of A over Bob's heterodyne outcomes.
    """
    rho = state.to_density().normalized()
    DA, DB = rho.mode_dims
    mom = moments(rho)
    out = []
    grids = []
    for k, D in enumerate((DA, DB)):
        sd = np.sqrt(max(mom.covariance[2 * k, 2 * k], mom.covariance[2 * k + 1, 2 * k + 1]))
        w = half_width or 4.5 * (sd + 1) / 2 + abs(mom.mean[2 * k]) / 2 + abs(mom.mean[2 * k + 1]) / 2
        ax = np.linspace(-w, w, n_grid)
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        amps = (X + 1j * Y).ravel()
        C = np.array([coherent_amplitudes(z, D) for z in amps])  # |z> coefficients
        grids.append((C, (ax[1] - ax[0]) ** 2))
    (CA, dA), (CB, dB) = grids
    r = rho.data
    X = np.einsum("ia,abcd->ibcd", CA.conj(), r)
    Y = np.einsum("ibcd,ic->ibd", X, CA)
    Q = np.real(np.einsum("ibd,jb,jd->ij", Y, CB.conj(), CB)) / np.pi ** 2
    Q = np.clip(Q, 1e-300, None)
    mass = Q.sum() * dA * dB
    Q = Q / mass
    qa = Q.sum(1) * dB
    qb = Q.sum(0) * dA
    I = float(np.sum(Q * np.log2(Q / np.outer(qa, qb))) * dA * dB)
    # chi = S(AB) - E_beta S(A | beta)
    s_ab = von_neumann_entropy(rho)
    cond_ent = 0.0
    for j in range(CB.shape[0]):
        v = CB[j]
        ra = np.einsum("b,abcd,d->ac", v.conj(), r, v)
        p = np.real(np.trace(ra)) / np.pi
        if p > 1e-14:
            cond_ent += p * von_neumann_entropy(ra / np.trace(ra)) * dB
    chi = s_ab - cond_ent
    return I, chi, mass
