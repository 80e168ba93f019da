"""Precoder block: Dinkelbach outer loop around an SCA conic subproblem.

Inside the subproblem every power is measured in units of the noise power, so
precoder variables are ``q = p / sigma`` and the noise term is 1.
"""
from __future__ import annotations

import logging

import numpy as np

from ..channels import ChannelSet, uehr_channels, user_channels
from ..conic import ConicProgram, SolveResult, encode_quad_le_affine, encode_quad_over_var, solve, total
from ..config import SystemConfig
from ..metrics import PrecoderSet, all_sinrs
from ..taylor import gamma_coeffs, phi_coeffs, psi_coeffs
from .common import DesignState, SchemeVariant, SubproblemInfeasible, check_design, eh_threshold

logger = logging.getLogger(__name__)

# signal power (noise units) below which a stream counts as switched off
_SILENT = 1e-12
_RATE_MARGIN = 1e-6


def _expansion(state: DesignState, ch: ChannelSet, cfg: SystemConfig):
    sig = np.sqrt(cfg.sigma2_w)
    q_c = state.prec.p_c / sig
    q_p = state.prec.p_p / sig
    v = user_channels(ch, state.phases)
    u = uehr_channels(ch, state.phases)
    sinr = all_sinrs(ch, state.phases, PrecoderSet(q_c, q_p), 1.0)
    return q_c, q_p, v, u, sinr


def build_precoder_program(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                           variant: SchemeVariant, lam: float = 0.0, feasibility: bool = False):
    """Assemble the convexified precoder problem around ``state``.

    With ``feasibility=True`` the secrecy objective is replaced by the total
    slack on the common-rate and EH rows (phase-1 restoration).
    """
    q0_c, q0_p, v, u, (g_c, g_c_eve, g_p, g_p_eve) = _expansion(state, ch, cfg)
    k_users, n_t = q0_p.shape
    j_uehrs = u.shape[0]
    priv = variant.private_users
    a = state.alloc.a if variant.fixed_alloc is None else np.asarray(variant.fixed_alloc)
    sigma2 = cfg.sigma2_w

    prog = ConicProgram()
    qc = prog.variable("q_c", n_t, complex=True) if variant.use_common else None
    qp = {k: prog.variable(f"q_p{k}", n_t, complex=True) for k in priv}
    tau = prog.variable("tau", lb=0.0, ub=cfg.p_max_w / sigma2)
    encode_quad_le_affine(prog, [e for var in ([qc] if qc else []) + list(qp.values())
                                 for e in var.entries()], tau.e, "power")

    streams = ([("c", qc, q0_c)] if qc else []) + [(k, qp[k], q0_p[k]) for k in priv]

    def phi_u(j, key):
        """Lower bound of |u_j^H q|^2 for stream ``key``."""
        _, var, q0 = next(s for s in streams if s[0] == key)
        w, const = phi_coeffs(u[j], q0)
        return (var.inner(u[j]) * w).real + const

    slack_c = slack_eh = None
    if feasibility:
        slack_eh = prog.variable("slack_eh", lb=0.0)
        if qc:
            slack_c = prog.variable("slack_c", lb=0.0)

    # EH row: sum_j (sum over streams) Phi >= Omega^-1(E_h)
    thr = eh_threshold(cfg) / sigma2
    harvested = total(phi_u(j, key) for j in range(j_uehrs) for key, _, _ in streams)
    if feasibility:
        prog.add_ge(harvested + slack_eh.e * thr, thr * (1 + 1e-6), "eh")
    else:
        prog.add_ge(harvested, thr * (1 + 1e-7), "eh")

    rate_terms = {}
    common_secrecy = 0.0
    if qc:
        rho_c = prog.variable("rho_c", lb=0.0)
        rho0 = float(g_c.min())
        if rho0 <= 0:
            raise SubproblemInfeasible("common stream silent at the expansion point")
        for k in range(k_users):
            w, cx = psi_coeffs(v[k], q0_c, rho0)
            psi = (qc.inner(v[k]) * w).real + cx * rho_c.e
            encode_quad_le_affine(prog, [qp[l].inner(v[k]) for l in priv], psi - 1.0, f"common_sinr[{k}]")
        x_c = prog.variable("x_c")
        prog.add_exp(x_c.e * np.log(2), 1.0, 1.0 + rho_c.e, "log_common")
        r_c = prog.variable("r_c")
        if feasibility:
            prog.add_ge(r_c.e + slack_c.e, cfg.r_c_min + _RATE_MARGIN, "rate_min")
            prog.add_le(r_c.e, x_c.e + slack_c.e - _RATE_MARGIN, "rate_decodable")
        else:
            prog.add_ge(r_c.e, cfg.r_c_min, "rate_min")
            prog.add_le(r_c.e, x_c.e, "rate_decodable")
        rho_e_c = prog.variable("rho_e_c", lb=0.0)
        for j in range(j_uehrs):
            interference = total(phi_u(j, l) for l in priv) + 1.0
            encode_quad_over_var(prog, [qc.inner(u[j])], rho_e_c, interference, f"eve_common[{j}]")
        r_c0 = state.r_c if state.r_c is not None else max(cfg.r_c_min, np.log2(1 + g_c_eve.max()))
        slope, icpt = gamma_coeffs(r_c0)
        prog.add_ge(slope * r_c.e + icpt, 1.0 + rho_e_c.e, "rate_secure")
        if not feasibility:
            f_e_c = prog.variable("f_e_c")
            slope, icpt = gamma_coeffs(np.log2(1 + g_c_eve.max()))
            prog.add_ge(slope * f_e_c.e + icpt, 1.0 + rho_e_c.e, "eve_common_rate")
            prog.add_ge(x_c.e, f_e_c.e, "common_secrecy_nonneg")
            common_secrecy = x_c.e - f_e_c.e

    if not feasibility:
        # private secrecy enters unclamped: a negative term still carries a
        # gradient toward securing that stream
        for k in priv:
            rho_p = prog.variable(f"rho_p{k}", lb=0.0)
            x_p = prog.variable(f"x_p{k}")
            own0 = abs(np.vdot(v[k], q0_p[k])) ** 2
            if own0 <= _SILENT or g_p[k] <= 0:
                prog.add_eq(rho_p.e, 0.0, f"private_off[{k}]")
            else:
                w, cx = psi_coeffs(v[k], q0_p[k], float(g_p[k]))
                psi = (qp[k].inner(v[k]) * w).real + cx * rho_p.e
                others = [qp[l].inner(v[k]) for l in priv if l != k]
                encode_quad_le_affine(prog, others, psi - 1.0, f"private_sinr[{k}]")
            prog.add_exp(x_p.e * np.log(2), 1.0, 1.0 + rho_p.e, f"log_private[{k}]")
            rho_e_p = prog.variable(f"rho_e_p{k}", lb=0.0)
            for j in range(j_uehrs):
                interference = total(phi_u(j, key) for key, _, _ in streams if key != k) + 1.0
                encode_quad_over_var(prog, [qp[k].inner(u[j])], rho_e_p, interference,
                                     f"eve_private[{j},{k}]")
            f_e_p = prog.variable(f"f_e_p{k}")
            slope, icpt = gamma_coeffs(np.log2(1 + g_p_eve[:, k].max()))
            prog.add_ge(slope * f_e_p.e + icpt, 1.0 + rho_e_p.e, f"eve_private_rate[{k}]")
            rate_terms[k] = x_p.e - f_e_p.e

        zeta = prog.variable("zeta")
        for k in range(k_users):
            bound = a[k] * common_secrecy + rate_terms.get(k, 0.0)
            prog.add_le(zeta.e, bound, f"secrecy[{k}]")
        prog.maximize(zeta.e - lam * (cfg.varrho * sigma2 * tau.e + cfg.p0_w))
    else:
        prog.minimize(slack_eh.e + (slack_c.e if slack_c else 0.0))
    return prog


def _precoders_from(res: SolveResult, variant: SchemeVariant, cfg: SystemConfig, shape) -> PrecoderSet:
    sig = np.sqrt(cfg.sigma2_w)
    k_users, n_t = shape
    p_c = res["q_c"] * sig if variant.use_common else np.zeros(n_t, complex)
    p_p = np.zeros((k_users, n_t), complex)
    for k in variant.private_users:
        p_p[k] = res[f"q_p{k}"] * sig
    prec = PrecoderSet(p_c, p_p)
    excess = prec.total_power / cfg.p_max_w
    if excess > 1:  # interior-point round-off on the power ball
        prec = prec.scaled(1 / np.sqrt(excess))
    return prec


def precoder_subproblem(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                        variant: SchemeVariant, lam: float = 0.0) -> SolveResult:
    return solve(build_precoder_program(state, ch, cfg, variant, lam))


def restore_feasibility(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                        variant: SchemeVariant, max_iters: int = 30) -> DesignState | None:
    """Phase-1 SCA driving the common-rate and EH slacks to zero.

    Returns a state feasible under the ground-truth checks, or ``None``.
    """
    state = state.copy()
    prev_slack = np.inf
    for _ in range(max_iters):
        _, r_c, ok = check_design(ch, state.phases, state.prec, state.alloc, cfg, variant, state.r_c)
        if ok:
            state.r_c = r_c
            return state
        try:
            res = solve(build_precoder_program(state, ch, cfg, variant, feasibility=True))
        except SubproblemInfeasible:
            return None
        if not res.ok:
            logger.debug("feasibility restoration failed: %s %s", res.status, res.diagnostic)
            return None
        state.prec = _precoders_from(res, variant, cfg, state.prec.p_p.shape)
        state.r_c = res.values.get("r_c")
        if res.objective > 1e-3 and res.objective > 0.999 * prev_slack:
            return None  # stalled with a sizable violation
        prev_slack = res.objective
    _, r_c, ok = check_design(ch, state.phases, state.prec, state.alloc, cfg, variant, state.r_c)
    if ok:
        state.r_c = r_c
        return state
    return None


def dinkelbach_precoders(state: DesignState, ch: ChannelSet, cfg: SystemConfig,
                         variant: SchemeVariant, trace: list | None = None) -> DesignState:
    """Dinkelbach iterations; each solves the SCA subproblem at the current point.

    ``state.zeta`` seeds the first ratio, so a fresh state starts from a pure
    secrecy-rate maximization.
    """
    state = state.copy()
    denom = cfg.varrho * state.prec.total_power + cfg.p0_w
    lam = state.zeta / denom
    zeta_prev = state.zeta
    for t in range(cfg.max_iters_inner):
        res = precoder_subproblem(state, ch, cfg, variant, lam)
        if not res.ok:
            if t == 0:
                raise SubproblemInfeasible(f"precoder subproblem {res.status.value}: {res.diagnostic}")
            logger.debug("precoder subproblem failed at t=%d (%s); keeping last iterate", t, res.status)
            break
        prec = _precoders_from(res, variant, cfg, state.prec.p_p.shape)
        _, r_c, ok = check_design(ch, state.phases, prec, state.alloc, cfg, variant, res.values.get("r_c"))
        if not ok:
            logger.debug("precoder iterate violates ground-truth constraints; stopping")
            if t == 0:
                raise SubproblemInfeasible("first precoder iterate infeasible")
            break
        zeta = res["zeta"]
        state.prec, state.r_c, state.zeta, state.lam = prec, r_c, zeta, lam
        if trace is not None:
            trace.append({"stage": "precoder", "iter": t, "zeta": zeta, "lambda": lam,
                          "objective": res.objective, "residual": res.residual})
        lam = zeta / (cfg.varrho * prec.total_power + cfg.p0_w)
        if abs(zeta - zeta_prev) <= cfg.tol_inner:
            break
        zeta_prev = zeta
    return state
