"""RIS phase block: penalized SCA over the relaxed phase vector ``|s_m| <= 1``.

With precoders fixed, every received amplitude is affine in ``s``:
``v_k^H q = t^H s`` for users and ``u_j^H q = c + t^H s`` for UEHRs, where
``c = h_bj^H q`` is the direct-link part.
"""
from __future__ import annotations

import logging

import numpy as np

from ..channels import ChannelSet, RisPhases
from ..conic import ConicProgram, SolveResult, encode_quad_le_affine, solve, total
from ..config import SystemConfig
from ..metrics import PrecoderSet, all_sinrs
from ..taylor import gamma_coeffs, psi_coeffs, theta_coeffs, vartheta_coeffs
from .common import DesignState, SchemeVariant, check_design, eh_threshold, private_term_active

logger = logging.getLogger(__name__)

_SILENT = 1e-12


def phase_t_vectors(ch: ChannelSet, prec_q: PrecoderSet):
    """Stream-indexed t-vectors and direct terms, stream 0 = common, 1+k = private k.

    Returns ``(t_user, t_eve, c_eve)`` with shapes (K, K+1, M), (J, K+1, M), (J, K+1).
    """
    q = np.vstack([prec_q.p_c[None], prec_q.p_p])  # (K+1, N_t)
    gq = ch.g_bs_ris @ q.T  # (M, K+1)
    t_user = (ch.g_user.conj()[:, None, :] * gq.T[None]).conj()
    t_eve = (ch.h_uehr.conj()[:, None, :] * gq.T[None]).conj()
    c_eve = ch.h_direct.conj() @ q.T
    return t_user, t_eve, c_eve


def build_phase_program(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                        variant: SchemeVariant, penalty_c: float) -> ConicProgram:
    sigma2 = cfg.sigma2_w
    sig = np.sqrt(sigma2)
    q = PrecoderSet(state.prec.p_c / sig, state.prec.p_p / sig)
    s0 = state.phases.s
    g_c, g_c_eve, g_p, g_p_eve = all_sinrs(ch, state.phases, q, 1.0)
    t_user, t_eve, c_eve = phase_t_vectors(ch, q)
    k_users, j_uehrs, m = ch.k_users, ch.j_uehrs, ch.m_ris
    priv = variant.private_users
    streams = ([0] if variant.use_common else []) + [1 + k for k in priv]
    a = state.alloc.a if variant.fixed_alloc is None else np.asarray(variant.fixed_alloc)

    prog = ConicProgram()
    s = prog.variable("s", m, complex=True)
    for i in range(m):
        prog.add_soc(1.0, [s[i]], f"modulus[{i}]")

    def user_amp(k, x):
        return s.inner(t_user[k, x])

    def eve_amp(j, x):
        return s.inner(t_eve[j, x]) + c_eve[j, x]

    def eve_power_lb(j, x):
        w, const = vartheta_coeffs(c_eve[j, x], t_eve[j, x], s0)
        return (s.inner(t_eve[j, x]) * w).real + const

    def eve_exact(j, x):
        return abs(c_eve[j, x] + np.vdot(t_eve[j, x], s0)) ** 2

    # EH: sum over UEHRs and streams of the tangent lower bounds
    harvested = total(eve_power_lb(j, x) for j in range(j_uehrs) for x in streams)
    prog.add_ge(harvested, eh_threshold(cfg) / sigma2 * (1 + 1e-7), "eh")

    common_secrecy = 0.0
    if variant.use_common:
        rho_c = prog.variable("rho_c", lb=0.0)
        rho0 = float(g_c.min())
        for k in range(k_users):
            w, cx = psi_coeffs(t_user[k, 0], s0, rho0)
            psi = (user_amp(k, 0) * w).real + cx * rho_c.e
            encode_quad_le_affine(prog, [user_amp(k, 1 + l) for l in priv], psi - 1.0, f"common_sinr[{k}]")
        x_c = prog.variable("x_c")
        prog.add_exp(x_c.e * np.log(2), 1.0, 1.0 + rho_c.e, "log_common")
        r_c = prog.variable("r_c")
        prog.add_ge(r_c.e, cfg.r_c_min, "rate_min")
        prog.add_le(r_c.e, x_c.e, "rate_decodable")
        rho_e_c = prog.variable("rho_e_c", lb=0.0)
        rho_e0 = float(g_c_eve.max())
        for j in range(j_uehrs):
            xi = prog.variable(f"xi_c{j}", lb=0.0)
            xi0 = sum(eve_exact(j, x) for x in streams if x != 0) + 1.0
            prog.add_le(xi.e, total(eve_power_lb(j, x) for x in streams if x != 0) + 1.0, f"eve_common_interf[{j}]")
            lin, const = theta_coeffs(xi0, rho_e0)
            encode_quad_le_affine(prog, [eve_amp(j, 0), (xi.e - rho_e_c.e) * 0.5],
                                  lin * (xi.e + rho_e_c.e) + const, f"eve_common[{j}]")
        r_c0 = state.r_c if state.r_c is not None else max(cfg.r_c_min, np.log2(1 + rho_e0))
        slope, icpt = gamma_coeffs(r_c0)
        prog.add_ge(slope * r_c.e + icpt, 1.0 + rho_e_c.e, "rate_secure")
        f_e_c = prog.variable("f_e_c")
        slope, icpt = gamma_coeffs(np.log2(1 + rho_e0))
        prog.add_ge(slope * f_e_c.e + icpt, 1.0 + rho_e_c.e, "eve_common_rate")
        prog.add_ge(x_c.e, f_e_c.e, "common_secrecy_nonneg")
        common_secrecy = x_c.e - f_e_c.e

    rate_terms = {}
    common0 = 0.0
    if variant.use_common:
        common0 = max(0.0, float(np.log2(1 + g_c.min()) - np.log2(1 + g_c_eve.max())))
    for k in priv:
        if not private_term_active(g_p[k], g_p_eve[:, k].max(), a[k] * common0):
            continue
        rho_p = prog.variable(f"rho_p{k}", lb=0.0)
        x_p = prog.variable(f"x_p{k}")
        own0 = abs(np.vdot(t_user[k, 1 + k], s0)) ** 2
        if own0 <= _SILENT or g_p[k] <= 0:
            prog.add_eq(rho_p.e, 0.0, f"private_off[{k}]")
        else:
            w, cx = psi_coeffs(t_user[k, 1 + k], s0, float(g_p[k]))
            psi = (user_amp(k, 1 + k) * w).real + cx * rho_p.e
            others = [user_amp(k, 1 + l) for l in priv if l != k]
            encode_quad_le_affine(prog, others, psi - 1.0, f"private_sinr[{k}]")
        prog.add_exp(x_p.e * np.log(2), 1.0, 1.0 + rho_p.e, f"log_private[{k}]")
        rho_e_p = prog.variable(f"rho_e_p{k}", lb=0.0)
        rho_e0 = float(g_p_eve[:, k].max())
        for j in range(j_uehrs):
            xi = prog.variable(f"xi_p{j}_{k}", lb=0.0)
            others = [x for x in streams if x != 1 + k]
            xi0 = sum(eve_exact(j, x) for x in others) + 1.0
            prog.add_le(xi.e, total(eve_power_lb(j, x) for x in others) + 1.0, f"eve_private_interf[{j},{k}]")
            lin, const = theta_coeffs(xi0, rho_e0)
            encode_quad_le_affine(prog, [eve_amp(j, 1 + k), (xi.e - rho_e_p.e) * 0.5],
                                  lin * (xi.e + rho_e_p.e) + const, f"eve_private[{j},{k}]")
        f_e_p = prog.variable(f"f_e_p{k}")
        slope, icpt = gamma_coeffs(np.log2(1 + rho_e0))
        prog.add_ge(slope * f_e_p.e + icpt, 1.0 + rho_e_p.e, f"eve_private_rate[{k}]")
        rate_terms[k] = x_p.e - f_e_p.e

    zeta = prog.variable("zeta")
    for k in range(k_users):
        prog.add_le(zeta.e, a[k] * common_secrecy + rate_terms.get(k, 0.0), f"secrecy[{k}]")
    # linearized penalty C * (2 Re{s0^H s} - ||s0||^2)
    penalty = (s.inner(s0) * 2.0).real - float(np.vdot(s0, s0).real)
    prog.maximize(zeta.e + penalty_c * penalty)
    return prog


def phase_subproblem(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                     variant: SchemeVariant, penalty_c: float) -> SolveResult:
    return solve(build_phase_program(state, ch, cfg, variant, penalty_c))


def screen_phases(state: DesignState, ch: ChannelSet, cfg: SystemConfig, variant: SchemeVariant,
                  n_candidates: int, rng: np.random.Generator, keep: int = 1) -> list[tuple[float, RisPhases]]:
    """Top ``keep`` feasible random unit-modulus candidates, best first."""
    scored = []
    for _ in range(n_candidates):
        cand = RisPhases.random(ch.m_ris, rng)
        rep, _, ok = check_design(ch, cand, state.prec, state.alloc, cfg, variant)
        if ok:
            scored.append((rep.r_sec_min, cand))
    scored.sort(key=lambda item: -item[0])
    return scored[:keep]


def _penalty_sca(state: DesignState, ch, cfg, variant, trace, max_escalations, start_tag):
    """One penalized SCA run; returns the best feasible projected iterate and its value."""
    report, r_c, ok = check_design(ch, state.phases, state.prec, state.alloc, cfg, variant, state.r_c, 1e-7)
    best = state.copy(r_c=r_c if ok else state.r_c)
    best_value = report.r_sec_min if ok else -np.inf
    scale = max(abs(report.r_sec_min), 0.1)
    penalty_c = cfg.penalty_c0 * scale / ch.m_ris
    current = state.copy(r_c=best.r_c)
    zeta_prev = report.r_sec_min
    failed = False
    for escalation in range(max_escalations + 1):
        for t in range(cfg.max_iters_inner):
            res = phase_subproblem(current, ch, cfg, variant, penalty_c)
            if not res.ok:
                logger.debug("phase subproblem %s: %s", res.status.value, res.diagnostic)
                failed = True
                break
            relaxed = RisPhases(res["s"])
            projected = relaxed.projected()
            rep, r_c, ok = check_design(ch, projected, state.prec, state.alloc, cfg, variant, res.values.get("r_c"), 1e-7)
            if ok and rep.r_sec_min > best_value:
                best = state.copy(phases=projected, r_c=r_c, zeta=rep.r_sec_min)
                best_value = rep.r_sec_min
            zeta = res["zeta"]
            if trace is not None:
                trace.append({"stage": "phase", "start": start_tag, "iter": t, "escalation": escalation,
                              "zeta": zeta, "penalty": penalty_c, "projected_zeta": rep.r_sec_min,
                              "min_modulus": float(np.abs(relaxed.s).min()), "residual": res.residual})
            current = current.copy(phases=relaxed, r_c=res.values.get("r_c"))
            if abs(zeta - zeta_prev) <= cfg.tol_inner:
                zeta_prev = zeta
                break
            zeta_prev = zeta
        if failed or np.max(1 - np.abs(current.phases.s)) <= 1e-3:
            break
        penalty_c *= cfg.penalty_growth
    return best, best_value


def optimize_phases(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                    variant: SchemeVariant, trace: list | None = None,
                    max_escalations: int = 5, screen: int = 256, starts: int = 3,
                    rng: np.random.Generator | None = None) -> DesignState:
    """Penalty SCA over the phases, returning the best unit-modulus iterate.

    Every solver iterate is projected to the unit circle and re-evaluated with
    the ground-truth metrics; the best feasible projection (the input phases
    included) is returned, so the result never worsens the secrecy rate.

    The landscape is multimodal, so ``screen`` random candidates are scored
    first and up to ``starts`` of the best ones that beat the input seed
    additional SCA runs.
    """
    best, best_value = _penalty_sca(state, ch, cfg, variant, trace, max_escalations, "current")
    if screen > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        current_value = check_design(ch, state.phases, state.prec, state.alloc, cfg, variant, state.r_c)[0].r_sec_min
        for n, (value, cand) in enumerate(screen_phases(state, ch, cfg, variant, screen, rng, starts)):
            if value <= current_value:
                break
            r_c = check_design(ch, cand, state.prec, state.alloc, cfg, variant, state.r_c)[1]
            alt, alt_value = _penalty_sca(state.copy(phases=cand, r_c=r_c), ch, cfg, variant, trace,
                                          max_escalations, f"screened{n}")
            if alt_value > best_value:
                best, best_value = alt, alt_value
    return best
