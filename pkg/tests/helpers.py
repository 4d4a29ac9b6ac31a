"""Monte-Carlo estimators of the receive-side power metrics.

These work directly from the raw channel matrices and the defining receive
equations (symbol and noise draws pushed through the two propagation paths),
so they are independent of the closed-form implementations they check.
"""

import numpy as np

from isacsim.channel import ChannelSet
from isacsim.sysmodel import BeamformerSet, HybridRisSpec, RisState


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _propagate(x, direct_row, scatter_row, omega, h_br):
    """Receive samples for transmit draws x (draws, M) at one user/target."""
    u_in = x @ h_br.T  # (draws, N) incident at the RIS
    reflected = (u_in * omega[None, :]) @ scatter_row.conj()
    return x @ direct_row.conj() + reflected


def mc_user_sinr(ch, ris, bf, k, sigma2, draws=100_000, seed=0, chunk=20_000):
    rng = np.random.default_rng(seed)
    ell = ris.spec.n_active
    nu = np.sqrt(ris.spec.nu2)
    m = bf.C.shape[0]
    kk = bf.C.shape[1]
    num = 0.0
    den = 0.0
    left = draws
    while left > 0:
        c = min(chunk, left)
        left -= c
        d = crandn(rng, (c, kk))
        t = crandn(rng, (c, m))
        x_sig = np.outer(d[:, k], bf.C[:, k])
        x_rest = d @ bf.C.T - x_sig + t @ bf.S.T
        y_sig = _propagate(x_sig, ch.h_bu[k], ch.h_ru[k], ris.omega, ch.H_br)
        n_ris = nu * crandn(rng, (c, ell))
        ris_noise = (n_ris * ris.omega[None, :ell]) @ ch.h_ru[k, :ell].conj()
        awgn = np.sqrt(sigma2) * crandn(rng, c)
        y_rest = _propagate(x_rest, ch.h_bu[k], ch.h_ru[k], ris.omega, ch.H_br) + ris_noise + awgn
        num += float(np.sum(np.abs(y_sig) ** 2))
        den += float(np.sum(np.abs(y_rest) ** 2))
    return num / den


def mc_target_illumination(ch, ris, bf, m_idx, draws=100_000, seed=0, chunk=20_000):
    rng = np.random.default_rng(seed)
    m = bf.C.shape[0]
    kk = bf.C.shape[1]
    acc = 0.0
    left = draws
    while left > 0:
        c = min(chunk, left)
        left -= c
        x = crandn(rng, (c, kk)) @ bf.C.T + crandn(rng, (c, m)) @ bf.S.T
        y = _propagate(x, ch.g_bt[m_idx], ch.g_rt[m_idx], ris.omega, ch.H_br)
        acc += float(np.sum(np.abs(y) ** 2))
    return acc / draws


def mc_target_ris_noise(ch, ris, m_idx, draws=100_000, seed=0, chunk=50_000):
    rng = np.random.default_rng(seed)
    ell = ris.spec.n_active
    nu = np.sqrt(ris.spec.nu2)
    acc = 0.0
    left = draws
    while left > 0:
        c = min(chunk, left)
        left -= c
        n_ris = nu * crandn(rng, (c, ell))
        y = (n_ris * ris.omega[None, :ell]) @ ch.g_rt[m_idx, :ell].conj()
        acc += float(np.sum(np.abs(y) ** 2))
    return acc / draws


def mc_ris_output_power(ch, ris, bf, draws=100_000, seed=0, chunk=20_000):
    rng = np.random.default_rng(seed)
    ell = ris.spec.n_active
    nu = np.sqrt(ris.spec.nu2)
    m = bf.C.shape[0]
    kk = bf.C.shape[1]
    acc = 0.0
    left = draws
    while left > 0:
        c = min(chunk, left)
        left -= c
        x = crandn(rng, (c, kk)) @ bf.C.T + crandn(rng, (c, m)) @ bf.S.T
        u_in = x @ ch.H_br[:ell].T
        out = (u_in + nu * crandn(rng, (c, ell))) * ris.omega[None, :ell]
        acc += float(np.sum(np.abs(out) ** 2))
    return acc / draws


def synthetic_channels(rng, m, n, k, t, scale=1.0) -> ChannelSet:
    """Order-unity random channels; physical pathloss is irrelevant for the
    estimator cross-checks and O(1) entries keep every term comparable."""
    return ChannelSet(
        H_br=scale * crandn(rng, (n, m)),
        h_bu=scale * crandn(rng, (k, m)),
        h_ru=scale * crandn(rng, (k, n)),
        g_bt=scale * crandn(rng, (t, m)),
        g_rt=scale * crandn(rng, (t, n)),
    ).validate()


def random_ris_state(rng, spec: HybridRisSpec) -> RisState:
    """Valid random state: active magnitudes in (0, eta], passive unit."""
    n, ell = spec.n_elements, spec.n_active
    phases = np.exp(2j * np.pi * rng.uniform(size=n))
    mags = np.ones(n)
    mags[:ell] = spec.eta * rng.uniform(0.25, 1.0, size=ell)
    return RisState(mags * phases, spec).validate()


def random_beamformers(rng, m, k, p_t) -> BeamformerSet:
    """Random beamformers scaled so Tr(R) equals p_t exactly."""
    c = crandn(rng, (m, k))
    s = crandn(rng, (m, m))
    tr = float(np.sum(np.abs(c) ** 2) + np.sum(np.abs(s) ** 2))
    g = np.sqrt(p_t / tr)
    return BeamformerSet(g * c, g * s).validate(p_t=p_t)
