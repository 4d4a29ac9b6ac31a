"""Transmit beamformer subproblem: SDP relaxation and rank-1 recovery.

For a fixed RIS state the max-min illumination design relaxes to an SDP over
the covariance R and per-user matrices C_k, with the SINR constraint written
in the standard linear form.  The recovered rank-1 communication beamformers
preserve both the objective (which depends on R only) and every SINR
constraint, so no penalty or resolve step is needed.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelSet
from .errors import DegenerateBeamformer, InfeasibleError, NotPSD, SolverError
from .sdp_core import (
    Constraint,
    SdpProblem,
    SolverOptions,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    solve,
)
from .sysmodel import (
    BeamformerSet,
    DesignConfig,
    RisState,
    effective_target_channel,
    effective_user_channel,
    user_ris_noise,
    worst_case_illumination,
)

# tighter than the recovery tolerances downstream (1e-6 relative objective
# agreement, 1e-4 relative SINR slack) by two orders, which keeps those checks
# comfortable without demanding convergence below the Schur noise floor
_SOLVER_OPTS = SolverOptions(gap_tol=1e-8, feas_tol=1e-8, max_iterations=200)


def _hermitize(a):
    return (a + a.conj().T) / 2.0


def assemble_bf_sdp(ch: ChannelSet, ris: RisState, cfg: DesignConfig) -> SdpProblem:
    """Lower the beamformer design to a block SDP.

    Blocks are R, C_1..C_K, and a residual block Q tied to R - sum_k C_k by
    M^2 real equality constraints (one per real/imaginary entry of the upper
    triangle); Q's PSD cone membership is exactly the R - sum C_k >= 0
    condition.  Illumination rows are scaled by meta["illum_scale"] so the
    epigraph variable is order one; SINR rows are scaled by the receiver
    noise.
    """
    cfg.validate()
    m = ch.H_br.shape[1]
    num_k = ch.h_bu.shape[0]
    num_t = ch.g_bt.shape[0]
    h = [effective_user_channel(ch, ris, k) for k in range(num_k)]
    g = [effective_target_channel(ch, ris, t) for t in range(num_t)]

    s_g = cfg.p_t * max(float(np.linalg.norm(gm) ** 2) for gm in g)
    if s_g <= 0:
        s_g = 1.0

    blocks = [("R", m)] + [(f"C{k + 1}", m) for k in range(num_k)] + [("Q", m)]
    cons = []
    for t in range(num_t):
        a = _hermitize(np.outer(g[t], g[t].conj())) / s_g
        cons.append(Constraint({"R": a}, {"t": -1.0}, 0.0, ">=", f"illum{t}"))
    for k in range(num_k):
        hk = _hermitize(np.outer(h[k], h[k].conj())) / cfg.sigma2
        zk = user_ris_noise(ch, ris, k)
        cons.append(
            Constraint(
                {"R": -hk, f"C{k + 1}": (1.0 + 1.0 / cfg.gamma) * hk},
                {},
                (zk + cfg.sigma2) / cfg.sigma2,
                ">=",
                f"sinr{k}",
            )
        )
    cons.append(Constraint({"R": np.eye(m)}, {}, cfg.p_t, "<=", "power"))

    csum_names = [f"C{k + 1}" for k in range(num_k)]
    for p in range(m):
        for q in range(p, m):
            e = np.zeros((m, m))
            e[p, q] += 0.5
            e[q, p] += 0.5
            terms = {"Q": e, "R": -e}
            terms.update({name: e for name in csum_names})
            cons.append(Constraint(terms, {}, 0.0, "==", f"couple_re{p}_{q}"))
            if p < q:
                b = np.zeros((m, m), dtype=complex)
                b[p, q] = 0.5j
                b[q, p] = -0.5j
                terms = {"Q": b, "R": -b}
                terms.update({name: b for name in csum_names})
                cons.append(Constraint(terms, {}, 0.0, "==", f"couple_im{p}_{q}"))

    return SdpProblem(
        blocks=blocks,
        scalars=["t"],
        objective_matrices={},
        objective_scalars={"t": 1.0},
        sense="maximize",
        constraints=cons,
        meta={"illum_scale": s_g, "num_users": num_k, "num_targets": num_t},
    )


def recover_rank1(solution, ch: ChannelSet, ris: RisState) -> np.ndarray:
    """Rank-1 communication beamformers c_k = C_k h_k / sqrt(h_k^H C_k h_k).

    By Cauchy-Schwarz the outer product of the result is dominated by C_k, and
    the user's own effective-channel gain is preserved exactly, which is what
    keeps the SINR constraints satisfied after recovery.
    """
    num_k = ch.h_bu.shape[0]
    m = ch.H_br.shape[1]
    cols = np.zeros((m, num_k), dtype=complex)
    for k in range(num_k):
        chat = _hermitize(solution.block_values[f"C{k + 1}"])
        hk = effective_user_channel(ch, ris, k)
        quad = float(np.real(hk.conj() @ chat @ hk))
        guard = 1e-12 * float(np.real(np.trace(chat)))
        if quad <= guard:
            raise DegenerateBeamformer(
                f"user {k}: channel-aligned power {quad:.3e} under guard {guard:.3e}"
            )
        cols[:, k] = chat @ hk / np.sqrt(quad)
    return cols


def recover_sensing(solution, comm_cols: np.ndarray) -> np.ndarray:
    """Factor the leftover covariance R - sum_k c_k c_k^H into S S^H.

    Eigenvalue square root instead of strict Cholesky: eigenvalues within
    -1e-8*(1+Tr R) of zero are clipped, anything lower means the upstream
    solve failed and raises NotPSD.
    """
    rhat = _hermitize(solution.block_values["R"])
    resid = _hermitize(rhat - comm_cols @ comm_cols.conj().T)
    tr = float(np.real(np.trace(rhat)))
    vals, vecs = np.linalg.eigh(resid)
    if float(vals[0]) < -1e-8 * (1.0 + tr):
        raise NotPSD(f"residual covariance has eigenvalue {vals[0]:.3e}")
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)[None, :]


def _design(ch: ChannelSet, ris: RisState, cfg: DesignConfig):
    """assemble -> solve -> recover; returns (bf, achieved, relaxed, solution)."""
    prob = assemble_bf_sdp(ch, ris, cfg)
    sol = solve(prob, _SOLVER_OPTS)
    if sol.status == STATUS_INFEASIBLE:
        raise InfeasibleError("beamformer subproblem infeasible at the requested SINR")
    if sol.status != STATUS_OPTIMAL:
        raise SolverError(f"beamformer subproblem ended with status {sol.status}")
    cols = recover_rank1(sol, ch, ris)
    s_mat = recover_sensing(sol, cols)
    bf = BeamformerSet(cols, s_mat)
    achieved, _ = worst_case_illumination(ch, ris, bf)
    relaxed = sol.scalar_values["t"] * prob.meta["illum_scale"]
    return bf, achieved, relaxed, sol


def design_beamformers(ch: ChannelSet, ris: RisState, cfg: DesignConfig):
    """Full subproblem: returns (BeamformerSet, achieved worst-case illumination)."""
    bf, achieved, _, _ = _design(ch, ris, cfg)
    return bf, achieved
