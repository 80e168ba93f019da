"""Alternating optimization over (allocation, precoders, RIS phases)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..channels import ChannelSet, RisPhases, user_channels
from ..config import SystemConfig
from ..metrics import EhReport, PrecoderSet, RateAllocation, RateReport, eh_report
from .allocation import solve_allocation
from .common import (DesignState, SchemeVariant, SubproblemInfeasible, baseline_configure,
                     check_design, eh_threshold)
from .phases import optimize_phases
from .precoder import dinkelbach_precoders, restore_feasibility

logger = logging.getLogger(__name__)


@dataclass
class AoResult:
    status: str  # "ok" | "failed"
    state: DesignState | None = None
    report: RateReport | None = None
    eh: EhReport | None = None
    iterations: int = 0
    trace: list = field(default_factory=list)
    reason: str = ""
    start: str = "mrt"

    @property
    def see(self) -> float:
        return self.report.see if self.report is not None else float("nan")


def mrt_precoders(ch: ChannelSet, phases: RisPhases, cfg: SystemConfig, variant: SchemeVariant,
                  power_fraction: float = 0.9) -> PrecoderSet:
    """Maximum-ratio directions with the power split evenly across active streams."""
    v = user_channels(ch, phases)
    unit = v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
    n_streams = len(variant.private_users) + int(variant.use_common)
    per_stream = np.sqrt(power_fraction * cfg.p_max_w / n_streams)
    p_p = np.zeros_like(unit)
    for k in variant.private_users:
        p_p[k] = per_stream * unit[k]
    p_c = np.zeros(ch.n_t, complex)
    if variant.use_common:
        d = unit.sum(axis=0)
        p_c = per_stream * d / np.linalg.norm(d)
    return PrecoderSet(p_c, p_p)


def initial_state(ch: ChannelSet, cfg: SystemConfig, variant: SchemeVariant,
                  phases: RisPhases, rng: np.random.Generator, max_attempts: int = 4) -> DesignState | None:
    """MRT start scaled toward the EH target, then phase-1 restoration.

    Retries with fresh random phases when restoration fails.
    """
    alloc = (RateAllocation(np.asarray(variant.fixed_alloc)) if variant.fixed_alloc is not None
             else RateAllocation.uniform(cfg.k_users))
    required = eh_threshold(cfg)
    for attempt in range(max_attempts):
        if attempt:
            phases = RisPhases.random(ch.m_ris, rng)
        prec = mrt_precoders(ch, phases, cfg, variant)
        harvested = eh_report(ch, phases, prec, cfg).p_eh_sum
        if harvested < required:
            boost = min(np.sqrt(required / max(harvested, 1e-300)), np.sqrt(cfg.p_max_w / prec.total_power))
            prec = prec.scaled(boost)
        state = restore_feasibility(DesignState(alloc, prec, phases), ch, cfg, variant)
        if state is not None:
            return state
        logger.debug("initialization attempt %d failed", attempt)
    return None


def _evaluate(state: DesignState, ch, cfg, variant):
    report, r_c, ok = check_design(ch, state.phases, state.prec, state.alloc, cfg, variant, state.r_c)
    return report, r_c, ok


def alternating_optimize(ch: ChannelSet, cfg: SystemConfig, variant: SchemeVariant | None = None,
                         *, init_phases: RisPhases | None = None, seed: int | None = None,
                         start: DesignState | None = None,
                         phase_hook: Callable[[RisPhases], RisPhases] | None = None) -> AoResult:
    """Run the AO loop on one channel realization.

    ``phase_hook`` (testing aid) replaces the phase block's output before the
    monotonicity safeguard sees it.
    """
    variant = variant or baseline_configure(cfg, cfg.scheme, ch)
    rng = np.random.default_rng(seed)
    phases = init_phases if init_phases is not None else RisPhases.random(ch.m_ris, rng)
    trace: list = []
    if start is not None:
        state = restore_feasibility(start, ch, cfg, variant)
    else:
        state = initial_state(ch, cfg, variant, phases, rng)
    if state is None:
        return AoResult("failed", trace=trace, reason="no feasible starting point (EH / common-rate)")

    report, state.r_c, _ = _evaluate(state, ch, cfg, variant)
    eta = report.see
    trace.append({"stage": "ao", "iter": 0, "eta": eta, "reverted": False})
    first = True
    iterations = 0
    for i in range(1, cfg.max_iters_outer + 1):
        iterations = i
        prev_state = state.copy()
        if variant.fixed_alloc is None:
            state.alloc = solve_allocation(report)
            report, _, _ = _evaluate(state, ch, cfg, variant)
        state.zeta = 0.0 if first else report.r_sec_min
        first = False
        try:
            state = dinkelbach_precoders(state, ch, cfg, variant, trace)
        except SubproblemInfeasible as exc:
            logger.debug("precoder block stopped: %s", exc)
            state = prev_state
            break
        prev_phases, prev_r_c = state.phases, state.r_c
        state = optimize_phases(state, ch, cfg, variant, trace, rng=rng)
        if phase_hook is not None:
            state.phases = phase_hook(state.phases)
        report, r_c, ok = _evaluate(state, ch, cfg, variant)
        reverted = False
        if not ok or report.see < eta:
            state.phases, state.r_c = prev_phases, prev_r_c
            report, r_c, ok = _evaluate(state, ch, cfg, variant)
            reverted = True
        stalled = not ok or report.see < eta
        if stalled:
            # the precoder block itself lost ground; keep the previous design
            state = prev_state
            report, r_c, ok = _evaluate(state, ch, cfg, variant)
        state.r_c = r_c
        eta_new = report.see
        state.eta = eta_new
        trace.append({"stage": "ao", "iter": i, "eta": eta_new, "reverted": reverted,
                      "lambda": state.lam, "zeta": state.zeta})
        converged = stalled or abs(eta_new - eta) <= cfg.tol_outer
        eta = eta_new
        if converged:
            break

    report, r_c, ok = _evaluate(state, ch, cfg, variant)
    if not ok:
        return AoResult("failed", state, report, eh_report(ch, state.phases, state.prec, cfg),
                        iterations, trace, "final design violates constraints")
    state.r_c = r_c
    state.eta = report.see
    return AoResult("ok", state, report, eh_report(ch, state.phases, state.prec, cfg), iterations, trace)


def warm_start_from_private(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                            common_fraction: float = 0.1) -> DesignState:
    """Seed a rate-splitting design from a private-only one.

    A fraction of the power moves to a common stream pointed along the sum of
    the normalized effective user channels.
    """
    v = user_channels(ch, state.phases)
    d = (v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)).sum(axis=0)
    d /= np.linalg.norm(d)
    power = state.prec.total_power
    prec = PrecoderSet(d * np.sqrt(common_fraction * power), state.prec.p_p * np.sqrt(1 - common_fraction))
    return DesignState(RateAllocation.uniform(cfg.k_users), prec, state.phases)


def optimize_design(ch: ChannelSet, cfg: SystemConfig, variant: SchemeVariant, seed: int | None = None) -> AoResult:
    """Scheme-level driver.

    Rate splitting gets a second start seeded from the private-only optimum,
    and the better ground-truth SEE wins. The other schemes run once.
    """
    first = alternating_optimize(ch, cfg, variant, seed=seed)
    if not (variant.use_common and len(variant.private_users) == cfg.k_users):
        return first
    private_only = baseline_configure(cfg, "SDMA", ch)
    base = alternating_optimize(ch, cfg, private_only, seed=seed)
    if base.status != "ok":
        return first
    second = alternating_optimize(ch, cfg, variant, seed=seed,
                                  start=warm_start_from_private(base.state, ch, cfg))
    second.start = "private-warm"
    candidates = [r for r in (first, second) if r.status == "ok"]
    if not candidates:
        return first
    return max(candidates, key=lambda r: r.see)
