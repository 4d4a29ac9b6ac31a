"""RIS coefficient subproblem: lifted SDP over V = v v^H plus randomization.

With the beamformers held fixed, every quantity of interest (illumination,
SINR numerator and denominator, forwarded noise) is a quadratic form in the
stacked vector v = [omega; 1], so the design relaxes to an SDP over V with
per-element diagonal constraints.  Rank-1 solutions are recovered by Gaussian
randomization with elementwise projection back onto the modulus constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import SolverError
from .sdp_core import (
    Constraint,
    SdpProblem,
    SolverOptions,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    solve,
)
from .sysmodel import BeamformerSet, DesignConfig, HybridRisSpec, RisState

_SOLVER_OPTS = SolverOptions(gap_tol=1e-8, feas_tol=1e-8, max_iterations=200)

# relative slack when screening randomized candidates against the SINR and
# forwarded-noise constraints
_SCREEN_SLACK = 1e-6


@dataclass
class LiftedMatrices:
    """Hermitian (N+1)x(N+1) quadratic-form matrices in v = [omega; 1].

    T: (num_targets, N+1, N+1), illumination at each target
    E: (num_targets, N+1, N+1), RIS noise forwarded toward each target
    A: (num_users, N+1, N+1), own-signal power of each user
    B: (num_users, N+1, N+1), interference-plus-RIS-noise of each user
    """

    T: np.ndarray
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @property
    def dim(self) -> int:
        return self.T.shape[1]


def _lift_column(ris_row: np.ndarray, direct_row: np.ndarray, col: np.ndarray, h_br: np.ndarray):
    """Lifted vector for one receiver row pair and one beamformer column.

    Chosen so |v^H lifted|^2 with v = [omega; 1] reproduces the effective
    channel gain |h^H col|^2 of the direct form.
    """
    b = h_br @ col
    return np.concatenate([ris_row * b.conj(), [np.conj(direct_row.conj() @ col)]])


def build_lifted(
    ch: ChannelSet,
    bf: BeamformerSet,
    spec: HybridRisSpec,
    sigma2: float,
    nu2: float,
) -> LiftedMatrices:
    """Assemble the quadratic-form matrices for a fixed beamformer set."""
    n = ch.H_br.shape[0]
    num_k = ch.h_bu.shape[0]
    num_t = ch.g_bt.shape[0]
    n1 = n + 1
    cols = [bf.C[:, j] for j in range(bf.C.shape[1])]
    sens = [bf.S[:, j] for j in range(bf.S.shape[1])]
    act = spec.n_active

    def noise_diag(ris_row):
        d = np.zeros(n1)
        d[:act] = nu2 * np.abs(ris_row[:act]) ** 2
        return np.diag(d).astype(complex)

    t_mats = np.zeros((num_t, n1, n1), dtype=complex)
    e_mats = np.zeros((num_t, n1, n1), dtype=complex)
    for m in range(num_t):
        acc = np.zeros((n1, n1), dtype=complex)
        for col in cols + sens:
            vec = _lift_column(ch.g_rt[m], ch.g_bt[m], col, ch.H_br)
            acc += np.outer(vec, vec.conj())
        t_mats[m] = acc
        e_mats[m] = noise_diag(ch.g_rt[m])

    a_mats = np.zeros((num_k, n1, n1), dtype=complex)
    b_mats = np.zeros((num_k, n1, n1), dtype=complex)
    for k in range(num_k):
        own = _lift_column(ch.h_ru[k], ch.h_bu[k], cols[k], ch.H_br)
        a_mats[k] = np.outer(own, own.conj())
        acc = noise_diag(ch.h_ru[k])
        for j, col in enumerate(cols):
            if j == k:
                continue
            vec = _lift_column(ch.h_ru[k], ch.h_bu[k], col, ch.H_br)
            acc += np.outer(vec, vec.conj())
        for col in sens:
            vec = _lift_column(ch.h_ru[k], ch.h_bu[k], col, ch.H_br)
            acc += np.outer(vec, vec.conj())
        b_mats[k] = acc

    return LiftedMatrices(T=t_mats, E=e_mats, A=a_mats, B=b_mats)


def assemble_ris_sdp(lifted: LiftedMatrices, cfg: DesignConfig, spec: HybridRisSpec) -> SdpProblem:
    """Epigraph SDP over V: max t subject to the lifted constraint rows.

    Illumination rows are scaled by meta["illum_scale"] so the epigraph
    scalar is order one regardless of the physical power level.
    """
    n1 = lifted.dim
    n = n1 - 1
    num_t = lifted.T.shape[0]
    num_k = lifted.A.shape[0]

    s_t = float(np.max(np.abs(lifted.T))) if num_t else 1.0
    if s_t <= 0:
        s_t = 1.0

    cons = []
    for m in range(num_t):
        cons.append(Constraint({"V": lifted.T[m] / s_t}, {"t": -1.0}, 0.0, ">=", f"illum{m}"))
    for k in range(num_k):
        mat = lifted.A[k] - cfg.gamma * lifted.B[k]
        cons.append(Constraint({"V": mat}, {}, cfg.gamma * cfg.sigma2, ">=", f"sinr{k}"))
    for m in range(num_t):
        cons.append(Constraint({"V": lifted.E[m]}, {}, cfg.r_max, "<=", f"ris_noise{m}"))
    for i in range(n):
        e = np.zeros((n1, n1))
        e[i, i] = 1.0
        if i < spec.n_active:
            cons.append(Constraint({"V": e}, {}, spec.eta**2, "<=", f"diag{i}"))
        else:
            cons.append(Constraint({"V": e}, {}, 1.0, "==", f"diag{i}"))
    e = np.zeros((n1, n1))
    e[n, n] = 1.0
    cons.append(Constraint({"V": e}, {}, 1.0, "==", "diag_last"))

    return SdpProblem(
        blocks=[("V", n1)],
        scalars=["t"],
        objective_matrices={},
        objective_scalars={"t": 1.0},
        sense="maximize",
        constraints=cons,
        meta={"illum_scale": s_t},
    )


def _quad(mats: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Real quadratic forms v^H M v for a stack of Hermitian matrices."""
    if mats.shape[0] == 0:
        return np.zeros(0)
    return np.real(np.einsum("i,kij,j->k", v.conj(), mats, v))


def _feasible(lifted: LiftedMatrices, cfg: DesignConfig, v: np.ndarray) -> bool:
    a = _quad(lifted.A, v)
    b = _quad(lifted.B, v)
    if np.any(a < cfg.gamma * (b + cfg.sigma2) * (1.0 - _SCREEN_SLACK)):
        return False
    e = _quad(lifted.E, v)
    return bool(np.all(e <= cfg.r_max * (1.0 + _SCREEN_SLACK)))


def _objective(lifted: LiftedMatrices, v: np.ndarray) -> float:
    return float(np.min(_quad(lifted.T, v)))


def _project(u: np.ndarray, spec: HybridRisSpec) -> np.ndarray:
    """Elementwise projection onto the modulus constraints."""
    out = u.astype(complex).copy()
    act = spec.n_active
    mag = np.abs(out[:act])
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > spec.eta, spec.eta / np.where(mag > 0, mag, 1.0), 1.0)
    out[:act] *= scale
    mag = np.abs(out[act:])
    out[act:] = np.where(mag > 1e-300, out[act:] / np.where(mag > 0, mag, 1.0), 1.0)
    return out


def gaussian_randomization(
    v_opt: np.ndarray,
    lifted: LiftedMatrices,
    cfg: DesignConfig,
    spec: HybridRisSpec,
    incumbent: RisState,
    *,
    seed: int = 0,
):
    """Rank-1 recovery by sampling CN(0, V_tilde) and projecting.

    Draws cfg.n_rand candidates from the top-left NxN covariance, projects
    each onto the modulus constraints, screens against the SINR and
    forwarded-noise rows, and returns the best feasible candidate by
    worst-case illumination.  The incumbent competes in the pool whenever it
    is itself feasible; with no feasible candidate the incumbent is returned
    unchanged and flagged.

    Returns (RisState, info) with info keys "objective", "fallback",
    "n_feasible".  Each candidate has its own child seed, so the result does
    not depend on evaluation order.
    """
    n = lifted.dim - 1
    vt = (v_opt[:n, :n] + v_opt[:n, :n].conj().T) / 2.0
    vals, vecs = np.linalg.eigh(vt)
    vals = np.clip(vals, 0.0, None)
    factor = vecs * np.sqrt(vals)[None, :]

    inc_v = np.concatenate([incumbent.omega, [1.0]])
    inc_obj = _objective(lifted, inc_v)
    inc_ok = _feasible(lifted, cfg, inc_v)

    best_state = None
    best_obj = -np.inf
    n_feasible = 0
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(cfg.n_rand) if cfg.n_rand else []
    for child in children:
        rng = np.random.default_rng(child)
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        u = _project(factor @ z, spec)
        v = np.concatenate([u, [1.0]])
        if not _feasible(lifted, cfg, v):
            continue
        n_feasible += 1
        obj = _objective(lifted, v)
        if obj > best_obj:
            best_obj = obj
            best_state = RisState(u, spec)

    if best_state is None:
        return incumbent, {"objective": inc_obj, "fallback": True, "n_feasible": 0}
    if inc_ok and inc_obj >= best_obj:
        return incumbent, {"objective": inc_obj, "fallback": False, "n_feasible": n_feasible}
    return best_state, {"objective": best_obj, "fallback": False, "n_feasible": n_feasible}


def _design_ris(ch: ChannelSet, bf: BeamformerSet, cfg: DesignConfig, spec: HybridRisSpec, incumbent: RisState, *, seed=0):
    """build -> assemble -> solve -> randomize.

    Returns (RisState, achieved, relaxed, info).  An infeasible relaxation
    falls back to the incumbent with the fallback flag set; other solver
    failures raise.
    """
    lifted = build_lifted(ch, bf, spec, cfg.sigma2, spec.nu2)
    prob = assemble_ris_sdp(lifted, cfg, spec)
    sol = solve(prob, _SOLVER_OPTS)
    if sol.status == STATUS_INFEASIBLE:
        inc_v = np.concatenate([incumbent.omega, [1.0]])
        info = {"objective": _objective(lifted, inc_v), "fallback": True, "n_feasible": 0}
        return incumbent, info["objective"], float("nan"), info
    if sol.status != STATUS_OPTIMAL:
        raise SolverError(f"RIS subproblem ended with status {sol.status}")
    relaxed = sol.scalar_values["t"] * prob.meta["illum_scale"]
    state, info = gaussian_randomization(sol.block_values["V"], lifted, cfg, spec, incumbent, seed=seed)
    return state, info["objective"], relaxed, info


def design_ris(ch: ChannelSet, bf: BeamformerSet, cfg: DesignConfig, spec: HybridRisSpec, incumbent: RisState, *, seed=0):
    """Full subproblem: returns (RisState, achieved worst-case illumination)."""
    state, achieved, _, _ = _design_ris(ch, bf, cfg, spec, incumbent, seed=seed)
    return state, achieved
