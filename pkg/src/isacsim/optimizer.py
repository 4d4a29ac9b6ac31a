"""Alternating design loop and the baseline schemes built on top of it.

The joint beamformer/RIS problem is nonconvex, so the design alternates
between the two convex relaxations: transmit beamformers for a frozen RIS
state, then RIS coefficients for the frozen beamformers.  An explicit
best-so-far pair is tracked across half-steps so that a late randomization
miss can never degrade the returned solution.

A (beamformer, RIS) pair is certified feasible in two ways.  After a
beamformer half-step the SDP itself enforces the power budget and every
user SINR for the current coefficients, so the pair is feasible as soon as
the coefficients respect the forwarded-noise caps (those depend on omega
alone).  After a randomization that did not fall back, the winning
candidate was screened against all constraints directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bf_design import _design as _bf_step
from .channel import ChannelSet
from .errors import InfeasibleError, IsacSimError, ValidationError
from .ris_design import _design_ris
from .sysmodel import (
    BeamformerSet,
    DesignConfig,
    HybridRisSpec,
    RisState,
    null_ris_state,
    target_ris_noise,
    user_sinr,
)

SCHEMES = ("hybrid", "passive", "random", "noris")

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_FALLBACK = "fallback"
STATUS_ERROR = "error"

# matches the candidate screening slack in ris_design
_NOISE_SLACK = 1e-6


@dataclass
class IterationRecord:
    """One full round of the alternation.

    Objectives are worst-case target illumination in mW.  bf_relaxed and
    ris_relaxed are the SDP optimal values (upper bounds); bf_recovered and
    ris_randomized are what the recovered rank-1 solutions actually achieve.
    RIS fields are nan for rounds where that half-step did not run.
    """

    bf_relaxed: float
    bf_recovered: float
    ris_relaxed: float = math.nan
    ris_randomized: float = math.nan
    min_sinr: float = math.nan
    ris_fallback: bool = False
    best_so_far: float = -math.inf


@dataclass
class AlternationTrace:
    records: list = field(default_factory=list)
    bf: BeamformerSet | None = None
    ris: RisState | None = None
    objective: float = math.nan
    status: str = STATUS_OK
    note: str = ""

    @property
    def iterations(self):
        return len(self.records)

    def best_curve(self):
        return [r.best_so_far for r in self.records]


def initialize_ris(spec: HybridRisSpec, seed) -> RisState:
    """Random starting point: uniform phases, amplitudes at their caps.

    Active elements start at the full gain eta, passive ones at unit
    modulus.  Deterministic for a given seed.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, spec.n_elements)
    mags = np.ones(spec.n_elements)
    mags[: spec.n_active] = spec.eta
    return RisState(mags * np.exp(1j * phases), spec).validate()


def _noise_caps_ok(ch: ChannelSet, ris: RisState, cfg: DesignConfig) -> bool:
    """Whether omega alone satisfies every forwarded-noise cap."""
    num_targets = ch.g_bt.shape[0]
    return all(
        target_ris_noise(ch, ris, m) <= cfg.r_max * (1.0 + _NOISE_SLACK)
        for m in range(num_targets)
    )


def _min_sinr(ch: ChannelSet, ris: RisState, bf: BeamformerSet, sigma2) -> float:
    k_users = ch.h_bu.shape[0]
    if k_users == 0:
        return math.inf
    return min(user_sinr(ch, ris, bf, k, sigma2) for k in range(k_users))


def alternate(ch: ChannelSet, cfg: DesignConfig, spec: HybridRisSpec, seed) -> AlternationTrace:
    """Run the alternating design from a random RIS starting point.

    Stops early once the recovered beamformer objective changes by less
    than cfg.tolerance (relative) between consecutive rounds.  Module
    failures end the loop and are reported through the trace status; they
    never propagate as exceptions.
    """
    cfg.validate()
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(cfg.max_iterations + 1)
    ris = initialize_ris(spec, children[0])
    ris_caps_ok = _noise_caps_ok(ch, ris, cfg)

    trace = AlternationTrace(ris=ris)
    best_obj = -math.inf
    best_pair = None
    prev_recovered = None

    for it in range(cfg.max_iterations):
        try:
            bf, recovered, bf_relaxed, _ = _bf_step(ch, ris, cfg)
        except InfeasibleError as exc:
            if best_pair is None:
                trace.status = STATUS_INFEASIBLE
                trace.note = str(exc)
            else:
                trace.note = f"beamformer step infeasible at round {it + 1}"
            break
        except IsacSimError as exc:
            if best_pair is None:
                trace.status = STATUS_ERROR
                trace.note = f"{type(exc).__name__}: {exc}"
            else:
                trace.note = f"beamformer step failed at round {it + 1}: {exc}"
            break

        # the SDP certifies power and SINR against the current omega, so the
        # pair is feasible whenever omega respects the noise caps
        if ris_caps_ok and recovered > best_obj:
            best_obj = recovered
            best_pair = (bf, ris)
        rec = IterationRecord(bf_relaxed=bf_relaxed, bf_recovered=recovered)

        try:
            ris_new, randomized, ris_relaxed, info = _design_ris(
                ch, bf, cfg, spec, ris, seed=children[it + 1]
            )
        except IsacSimError as exc:
            rec.best_so_far = best_obj
            trace.records.append(rec)
            trace.note = f"RIS step failed at round {it + 1}: {exc}"
            break

        rec.ris_relaxed = ris_relaxed
        rec.ris_randomized = randomized
        rec.ris_fallback = info["fallback"]
        if not info["fallback"]:
            ris = ris_new
            ris_caps_ok = True  # screened against the caps directly
            if randomized > best_obj:
                best_obj = randomized
                best_pair = (bf, ris)
        rec.min_sinr = _min_sinr(ch, ris, bf, cfg.sigma2)
        rec.best_so_far = best_obj
        trace.records.append(rec)

        if prev_recovered is not None:
            if abs(recovered - prev_recovered) < cfg.tolerance * (1.0 + abs(prev_recovered)):
                break
        prev_recovered = recovered

    if best_pair is not None:
        trace.bf, trace.ris = best_pair
        trace.objective = best_obj
        trace.status = STATUS_OK
    elif trace.status == STATUS_OK:
        # beamformers exist but no round ever certified a feasible pair
        trace.status = STATUS_FALLBACK
        if trace.records:
            trace.bf = bf
            trace.ris = ris
            trace.objective = trace.records[-1].bf_recovered
    return trace


def _single_pass(ch: ChannelSet, cfg: DesignConfig, ris: RisState) -> AlternationTrace:
    """One beamformer design against a fixed RIS state, no RIS update."""
    trace = AlternationTrace(ris=ris)
    try:
        bf, recovered, bf_relaxed, _ = _bf_step(ch, ris, cfg)
    except InfeasibleError as exc:
        trace.status = STATUS_INFEASIBLE
        trace.note = str(exc)
        return trace
    except IsacSimError as exc:
        trace.status = STATUS_ERROR
        trace.note = f"{type(exc).__name__}: {exc}"
        return trace
    if not _noise_caps_ok(ch, ris, cfg):
        trace.status = STATUS_FALLBACK
        trace.note = "fixed RIS state violates a forwarded-noise cap"
    trace.records.append(
        IterationRecord(
            bf_relaxed=bf_relaxed,
            bf_recovered=recovered,
            ris_randomized=recovered,
            min_sinr=_min_sinr(ch, ris, bf, cfg.sigma2),
            best_so_far=recovered,
        )
    )
    trace.bf = bf
    trace.objective = recovered
    return trace


def run_scheme(scheme: str, ch: ChannelSet, cfg: DesignConfig, spec: HybridRisSpec, seed) -> AlternationTrace:
    """Dispatch one of the comparison schemes.

    hybrid   full alternation with the given active/passive split
    passive  full alternation with every element forced passive
    random   one beamformer design against frozen random passive phases
    noris    one beamformer design with the surface switched off
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    if scheme == "hybrid":
        return alternate(ch, cfg, spec, seed)
    passive = HybridRisSpec(spec.n_elements, 0, 1.0, spec.nu2)
    if scheme == "passive":
        return alternate(ch, cfg, passive, seed)
    if scheme == "random":
        return _single_pass(ch, cfg, initialize_ris(passive, seed))
    return _single_pass(ch, cfg, null_ris_state(spec))
