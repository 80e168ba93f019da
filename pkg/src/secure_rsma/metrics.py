"""Ground-truth evaluators: SINRs, secrecy rates, harvested power, SEE.

All rates are in bits/s/Hz (log base 2).  The [x]^+ clamp on secrecy terms is
applied here; optimizers work with unclamped surrogates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, RisPhases, uehr_channels, user_channels
from .config import EhConstants, SystemConfig


@dataclass(frozen=True)
class PrecoderSet:
    p_c: np.ndarray  # (N_t,)
    p_p: np.ndarray  # (K, N_t)

    @classmethod
    def zeros(cls, n_t: int, k: int) -> "PrecoderSet":
        return cls(np.zeros(n_t, complex), np.zeros((k, n_t), complex))

    @property
    def total_power(self) -> float:
        return float(np.vdot(self.p_c, self.p_c).real + np.sum(np.abs(self.p_p) ** 2))

    def scaled(self, factor: float) -> "PrecoderSet":
        return PrecoderSet(self.p_c * factor, self.p_p * factor)


@dataclass(frozen=True)
class RateAllocation:
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, float)
        if np.any(a < -1e-9) or np.any(a > 1 + 1e-9) or abs(a.sum() - 1) > 1e-9:
            raise ValueError(f"allocation must lie on the simplex (got {a})")
        object.__setattr__(self, "a", a)

    @classmethod
    def uniform(cls, k: int) -> "RateAllocation":
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True)
class RateReport:
    gamma_c: np.ndarray  # (K,)
    gamma_c_eve: np.ndarray  # (J,)
    gamma_p: np.ndarray  # (K,)
    gamma_p_eve: np.ndarray  # (J, K)
    r_c_sec: float
    r_p_sec: np.ndarray
    r_sec: np.ndarray
    r_sec_min: float
    see: float

    @property
    def common_rate_bracket(self) -> tuple[float, float]:
        """``(log2(1 + max_j gamma_c_eve), log2(1 + min_k gamma_c))``."""
        return float(np.log2(1 + self.gamma_c_eve.max())), float(np.log2(1 + self.gamma_c.min()))


@dataclass(frozen=True)
class EhReport:
    p_eh: np.ndarray
    p_eh_sum: float
    harvested: float
    required: float
    meets_eh: bool


def _gains(ch: ChannelSet, s: RisPhases, prec: PrecoderSet):
    v = user_channels(ch, s)
    u = uehr_channels(ch, s)
    # |x^H p|^2 with rows of v / u as x
    user_c = np.abs(v.conj() @ prec.p_c) ** 2  # (K,)
    user_p = np.abs(v.conj() @ prec.p_p.T) ** 2  # (K, K): [k, l]
    eve_c = np.abs(u.conj() @ prec.p_c) ** 2  # (J,)
    eve_p = np.abs(u.conj() @ prec.p_p.T) ** 2  # (J, K)
    return user_c, user_p, eve_c, eve_p


def sinr_common_user(ch, s, prec, k, sigma2):
    user_c, user_p, _, _ = _gains(ch, s, prec)
    return float(user_c[k] / (user_p[k].sum() + sigma2))


def sinr_common_eve(ch, s, prec, j, sigma2):
    _, _, eve_c, eve_p = _gains(ch, s, prec)
    return float(eve_c[j] / (eve_p[j].sum() + sigma2))


def sinr_private_user(ch, s, prec, k, sigma2):
    _, user_p, _, _ = _gains(ch, s, prec)
    return float(user_p[k, k] / (user_p[k].sum() - user_p[k, k] + sigma2))


def sinr_private_eve(ch, s, prec, j, k, sigma2):
    _, _, eve_c, eve_p = _gains(ch, s, prec)
    return float(eve_p[j, k] / (eve_c[j] + eve_p[j].sum() - eve_p[j, k] + sigma2))


def all_sinrs(ch: ChannelSet, s: RisPhases, prec: PrecoderSet, sigma2: float):
    """Vectorized ``(gamma_c, gamma_c_eve, gamma_p, gamma_p_eve)``."""
    user_c, user_p, eve_c, eve_p = _gains(ch, s, prec)
    tot_user_p = user_p.sum(axis=1)
    gamma_c = user_c / (tot_user_p + sigma2)
    own = np.diag(user_p)
    gamma_p = own / (tot_user_p - own + sigma2)
    tot_eve_p = eve_p.sum(axis=1)
    gamma_c_eve = eve_c / (tot_eve_p + sigma2)
    gamma_p_eve = eve_p / (eve_c[:, None] + tot_eve_p[:, None] - eve_p + sigma2)
    return gamma_c, gamma_c_eve, gamma_p, gamma_p_eve


def see_value(r_sec_min: float, prec: PrecoderSet, cfg: SystemConfig) -> float:
    return r_sec_min / (cfg.varrho * prec.total_power + cfg.p0_w)


def secrecy_report(ch, s, prec, alloc: RateAllocation, cfg: SystemConfig) -> RateReport:
    gamma_c, gamma_c_eve, gamma_p, gamma_p_eve = all_sinrs(ch, s, prec, cfg.sigma2_w)
    r_c_sec = max(np.log2(1 + gamma_c.min()) - np.log2(1 + gamma_c_eve.max()), 0.0)
    r_p_sec = np.maximum(np.log2(1 + gamma_p) - np.log2(1 + gamma_p_eve.max(axis=0)), 0.0)
    r_sec = alloc.a * r_c_sec + r_p_sec
    r_min = float(r_sec.min())
    return RateReport(gamma_c, gamma_c_eve, gamma_p, gamma_p_eve, float(r_c_sec), r_p_sec,
                      r_sec, r_min, see_value(r_min, prec, cfg))


def eh_forward(x, eh: EhConstants):
    """Harvested power ``Omega(x)`` for received power ``x`` (watts)."""
    x = np.asarray(x, float)
    out = eh.phi / (eh.k1p * (1 + np.exp(-eh.b0 * (x - eh.b1)))) - eh.k2p
    return float(out) if out.ndim == 0 else out


def eh_inverse(x: float, eh: EhConstants) -> float:
    """Received power needed to harvest ``x`` watts."""
    if not 0 <= x < eh.saturation:
        raise ValueError(f"eh_inverse domain is [0, {eh.saturation}); got {x}")
    return float(eh.b1 - np.log(eh.phi / (eh.k1p * (x + eh.k2p)) - 1) / eh.b0)


def eh_report(ch, s, prec, cfg: SystemConfig) -> EhReport:
    u = uehr_channels(ch, s)
    p_eh = np.abs(u.conj() @ prec.p_c) ** 2 + (np.abs(u.conj() @ prec.p_p.T) ** 2).sum(axis=1)
    total = float(p_eh.sum())
    required = eh_inverse(cfg.e_h_joule, cfg.eh)
    return EhReport(p_eh, total, eh_forward(total, cfg.eh), required, total >= required)
