"""Design state, scheme variants and the shared ground-truth checks."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..channels import ChannelSet, RisPhases
from ..config import Scheme, SystemConfig
from ..metrics import (PrecoderSet, RateAllocation, RateReport, eh_inverse, eh_report,
                       secrecy_report)


class SubproblemInfeasible(RuntimeError):
    """A convexified subproblem had no feasible point (or the solver gave up)."""


@dataclass(frozen=True)
class SchemeVariant:
    """Which streams exist and whether the allocation is optimized.

    SDMA drops the common stream; NOMA sends the weakest user's whole message on
    the common stream (``a`` one-hot, that user's private stream removed).
    """

    scheme: Scheme
    use_common: bool
    private: tuple[bool, ...]
    fixed_alloc: tuple[float, ...] | None = None

    @property
    def private_users(self) -> list[int]:
        return [k for k, on in enumerate(self.private) if on]


def baseline_configure(cfg: SystemConfig, scheme: Scheme | str, ch: ChannelSet | None = None) -> SchemeVariant:
    scheme = Scheme(scheme)
    k = cfg.k_users
    if scheme is Scheme.RSMA:
        return SchemeVariant(scheme, True, (True,) * k)
    if scheme is Scheme.SDMA:
        return SchemeVariant(scheme, False, (True,) * k, tuple(np.full(k, 1.0 / k)))
    if ch is None:
        raise ValueError("NOMA needs the channel realization to pick the weakest user")
    # phase-independent cascaded gain ||diag(g_k^H) G_b||_F
    strength = np.linalg.norm(ch.cascaded_user().reshape(k, -1), axis=1)
    weak = int(np.argmin(strength))
    alloc = np.zeros(k)
    alloc[weak] = 1.0
    private = tuple(i != weak for i in range(k))
    return SchemeVariant(scheme, True, private, tuple(alloc))


@dataclass
class DesignState:
    alloc: RateAllocation
    prec: PrecoderSet
    phases: RisPhases
    r_c: float | None = None
    aux: dict[str, Any] = field(default_factory=dict)
    lam: float = 0.0
    zeta: float = 0.0
    eta: float = 0.0

    def copy(self, **changes) -> "DesignState":
        return dataclasses.replace(self, aux=dict(self.aux), **changes)


def common_rate_window(report: RateReport, cfg: SystemConfig) -> tuple[float, float]:
    lo, hi = report.common_rate_bracket
    return max(lo, cfg.r_c_min), hi


def pick_common_rate(report: RateReport, cfg: SystemConfig, previous: float | None) -> float | None:
    """Feasible ``r_c`` closest to ``previous``; ``None`` when the window is empty."""
    lo, hi = common_rate_window(report, cfg)
    if lo > hi:
        return None
    return lo if previous is None else float(np.clip(previous, lo, hi))


def check_design(ch, phases, prec, alloc, cfg: SystemConfig, variant: SchemeVariant,
                 r_c_prev: float | None = None, rel_tol: float = 1e-7):
    """Ground-truth evaluation; returns ``(report, r_c, feasible)``."""
    report = secrecy_report(ch, phases, prec, alloc, cfg)
    eh = eh_report(ch, phases, prec, cfg)
    ok = prec.total_power <= cfg.p_max_w * (1 + rel_tol) and eh.p_eh_sum >= eh.required * (1 - rel_tol)
    r_c = None
    if variant.use_common:
        r_c = pick_common_rate(report, cfg, r_c_prev)
        ok = ok and r_c is not None
    return report, r_c, ok


def eh_threshold(cfg: SystemConfig) -> float:
    return eh_inverse(cfg.e_h_joule, cfg.eh)


def private_term_active(gamma_p: float, gamma_p_eve_max: float, common_share: float) -> bool:
    """Which lower bound of ``[x]^+`` to use for a private secrecy term.

    ``[x]^+ >= x`` and ``[x]^+ >= 0`` both hold; the tight one at the expansion
    point is chosen. When the private stream is insecure and the user has no
    common share the ``x`` branch is kept, otherwise the objective would be flat.
    """
    x0 = np.log2(1 + gamma_p) - np.log2(1 + gamma_p_eve_max)
    return x0 >= 0 or common_share <= 0
