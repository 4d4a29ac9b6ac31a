"""Hybrid-RIS state, effective channels, and the scalar system metrics.

The RIS has N elements of which the first L are active (amplitude up to eta,
injecting noise of power nu2 each); the rest are passive unit-modulus
reflectors.  Effective channels fold the reflected path into the direct one,
and every metric here (SINR, illumination, RIS noise powers, RIS output
power) is a deterministic function of one channel realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import RangeError, ValidationError

_MAG_TOL = 1e-9


@dataclass(frozen=True)
class HybridRisSpec:
    n_elements: int
    n_active: int
    eta: float  # max active amplitude gain, linear
    nu2: float  # per-active-element noise power, mW

    def validate(self):
        if not (0 <= self.n_active <= self.n_elements):
            raise RangeError(f"need 0 <= L <= N, got L={self.n_active} N={self.n_elements}")
        if self.n_active > 0 and self.eta < 1.0:
            raise RangeError(f"active amplitude gain must be >= 1, got {self.eta}")
        if self.nu2 < 0:
            raise RangeError(f"RIS noise power must be >= 0, got {self.nu2}")
        return self


@dataclass
class RisState:
    """RIS coefficient vector together with its hardware spec.

    is_null marks the deliberate all-zero no-RIS configuration, which is the
    only state allowed to break the magnitude invariants.
    """

    omega: np.ndarray
    spec: HybridRisSpec
    is_null: bool = False

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=complex).reshape(-1)

    def validate(self):
        self.spec.validate()
        if self.omega.shape != (self.spec.n_elements,):
            raise ValidationError(
                f"omega has length {self.omega.shape[0]}, spec says N={self.spec.n_elements}"
            )
        if self.is_null:
            if np.any(self.omega != 0):
                raise ValidationError("null state must be all-zero")
            return self
        ell = self.spec.n_active
        mags = np.abs(self.omega)
        if np.any(mags[:ell] > self.spec.eta + _MAG_TOL):
            raise ValidationError("active coefficient exceeds amplitude cap")
        if np.any(np.abs(mags[ell:] - 1.0) > _MAG_TOL):
            raise ValidationError("passive coefficient is not unit modulus")
        return self


def null_ris_state(spec: HybridRisSpec) -> RisState:
    return RisState(np.zeros(spec.n_elements, dtype=complex), spec, is_null=True).validate()


@dataclass
class BeamformerSet:
    """Communication beamformers C (M x K) and sensing beamformers S (M x M)."""

    C: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=complex)
        self.S = np.asarray(self.S, dtype=complex)

    @property
    def R(self):
        return self.C @ self.C.conj().T + self.S @ self.S.conj().T

    def validate(self, p_t=None):
        if self.C.ndim != 2 or self.S.ndim != 2:
            raise ValidationError("beamformer arrays must be 2-D")
        if self.C.shape[0] != self.S.shape[0] or self.S.shape[0] != self.S.shape[1]:
            raise ValidationError(f"inconsistent beamformer shapes {self.C.shape} {self.S.shape}")
        r = self.R
        if np.max(np.abs(r - r.conj().T)) > 1e-9 * (1 + np.max(np.abs(r))):
            raise ValidationError("covariance is not Hermitian")
        tr = float(np.real(np.trace(r)))
        if float(np.linalg.eigvalsh((r + r.conj().T) / 2)[0]) < -1e-9 * (1 + tr):
            raise ValidationError("covariance is not PSD")
        if p_t is not None and tr > p_t + 1e-6:
            raise ValidationError(f"Tr(R)={tr} exceeds the power budget {p_t}")
        return self


@dataclass(frozen=True)
class DesignConfig:
    """Static design parameters, all powers in linear mW."""

    p_t: float
    gamma: float  # SINR threshold, linear
    r_max: float  # per-target RIS-noise cap, mW
    sigma2: float  # receiver noise, mW
    p_max: float = math.inf  # RIS output budget; redundant by the power bound
    n_rand: int = 200
    max_iterations: int = 10
    tolerance: float = 1e-3

    def validate(self):
        for name in ("p_t", "gamma", "sigma2", "p_max"):
            if not getattr(self, name) > 0:
                raise RangeError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.r_max < 0:
            raise RangeError(f"r_max must be >= 0, got {self.r_max}")
        if self.n_rand < 0 or self.max_iterations < 1 or self.tolerance <= 0:
            raise RangeError("bad iteration controls")
        return self


def _check_dims(ch: ChannelSet, ris: RisState):
    if ch.H_br.shape[0] != ris.omega.shape[0]:
        raise ValidationError(
            f"channel has N={ch.H_br.shape[0]} RIS elements, state has {ris.omega.shape[0]}"
        )


def effective_user_channel(ch: ChannelSet, ris: RisState, k) -> np.ndarray:
    """h_k with h_k^H = h_bu,k^H + h_ru,k^H diag(omega) H_br."""
    _check_dims(ch, ris)
    if not 0 <= k < ch.h_bu.shape[0]:
        raise ValidationError(f"user index {k} out of range")
    hH = ch.h_bu[k].conj() + (ch.h_ru[k].conj() * ris.omega) @ ch.H_br
    return hH.conj()


def effective_target_channel(ch: ChannelSet, ris: RisState, m) -> np.ndarray:
    """g_m with g_m^H = g_bt,m^H + g_rt,m^H diag(omega) H_br."""
    _check_dims(ch, ris)
    if not 0 <= m < ch.g_bt.shape[0]:
        raise ValidationError(f"target index {m} out of range")
    gH = ch.g_bt[m].conj() + (ch.g_rt[m].conj() * ris.omega) @ ch.H_br
    return gH.conj()


def user_ris_noise(ch: ChannelSet, ris: RisState, k) -> float:
    """z_k: RIS noise power forwarded to user k by the active elements."""
    ell = ris.spec.n_active
    w = ris.omega[:ell]
    return float(ris.spec.nu2 * np.sum(np.abs(ch.h_ru[k, :ell]) ** 2 * np.abs(w) ** 2))


def target_ris_noise(ch: ChannelSet, ris: RisState, m) -> float:
    """r_m: RIS noise power arriving at target m."""
    _check_dims(ch, ris)
    ell = ris.spec.n_active
    w = ris.omega[:ell]
    return float(ris.spec.nu2 * np.sum(np.abs(ch.g_rt[m, :ell]) ** 2 * np.abs(w) ** 2))


def user_sinr(ch: ChannelSet, ris: RisState, bf: BeamformerSet, k, sigma2) -> float:
    h = effective_user_channel(ch, ris, k)
    gains_c = np.abs(h.conj() @ bf.C) ** 2
    gains_s = np.abs(h.conj() @ bf.S) ** 2
    signal = float(gains_c[k])
    interference = float(np.sum(gains_c) - gains_c[k] + np.sum(gains_s))
    return signal / (interference + user_ris_noise(ch, ris, k) + sigma2)


def target_illumination(ch: ChannelSet, ris: RisState, bf: BeamformerSet, m) -> float:
    g = effective_target_channel(ch, ris, m)
    return float(np.real(g.conj() @ bf.R @ g))


def ris_output_power(ch: ChannelSet, ris: RisState, bf: BeamformerSet) -> float:
    """Total radiated power of the active elements, signal plus own noise."""
    _check_dims(ch, ris)
    ell = ris.spec.n_active
    if ell == 0:
        return 0.0
    rows = ch.H_br[:ell]  # row i is h_br,i^H
    r = bf.R
    per_elem = np.real(np.einsum("im,mn,in->i", rows, r, rows.conj())) + ris.spec.nu2
    return float(np.sum(np.abs(ris.omega[:ell]) ** 2 * per_elem))


def theorem1_bound(spec: HybridRisSpec, zeta_br, p_t, rho, m_antennas) -> float:
    """Upper bound on the RIS output power from the channel statistics."""
    ell = spec.n_active
    factor = (rho * m_antennas + 1.0) / (rho + 1.0)
    return ell * spec.eta ** 2 * (zeta_br * p_t * factor + spec.nu2)


def worst_case_illumination(ch: ChannelSet, ris: RisState, bf: BeamformerSet):
    """(min illumination over targets, index of the first minimizer)."""
    vals = np.array(
        [target_illumination(ch, ris, bf, m) for m in range(ch.g_bt.shape[0])]
    )
    idx = int(np.argmin(vals))
    return float(vals[idx]), idx


def dbm_to_mw(x_dbm) -> float:
    return 10.0 ** (x_dbm / 10.0)


def mw_to_dbm(x_mw) -> float:
    if x_mw < 0:
        raise ValidationError(f"negative power {x_mw} has no dBm value")
    return 10.0 * math.log10(x_mw) if x_mw > 0 else -math.inf
