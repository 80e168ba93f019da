"""Rician channel realizations for the BS -> RIS -> ground links.

RNG draw order for a given seed (fixed so seeds are reproducible):

1. user positions (if not explicit), then UEHR positions, uniform in disks;
2. NLoS parts of ``G_b``, ``g_1..g_K``, ``h_1..h_J``, ``h_b1..h_bJ``.

Each CN(0, 1) entry is drawn as a ``standard_normal(..., 2)`` pair (re, im)
scaled by ``1/sqrt(2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SystemConfig


@dataclass(frozen=True)
class RisPhases:
    s: np.ndarray

    @classmethod
    def from_angles(cls, theta) -> "RisPhases":
        return cls(np.exp(1j * np.asarray(theta, dtype=float)))

    @classmethod
    def ones(cls, m: int) -> "RisPhases":
        return cls(np.ones(m, dtype=complex))

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> "RisPhases":
        return cls.from_angles(rng.uniform(0.0, 2 * np.pi, m))

    @property
    def theta(self) -> np.ndarray:
        return np.mod(np.angle(self.s), 2 * np.pi)

    def projected(self) -> "RisPhases":
        """Unit-modulus projection ``s_m / |s_m|`` (zero entries map to 1)."""
        mag = np.abs(self.s)
        s = np.where(mag > 0, self.s / np.where(mag > 0, mag, 1.0), 1.0)
        return RisPhases(s)


@dataclass(frozen=True)
class ChannelSet:
    g_bs_ris: np.ndarray  # (M, N_t)
    g_user: np.ndarray  # (K, M)
    h_uehr: np.ndarray  # (J, M)
    h_direct: np.ndarray  # (J, N_t)
    d_user: np.ndarray
    d_uehr: np.ndarray
    d_bs: float
    d_direct: np.ndarray
    user_xy: np.ndarray
    uehr_xy: np.ndarray

    @property
    def n_t(self) -> int:
        return self.g_bs_ris.shape[1]

    @property
    def m_ris(self) -> int:
        return self.g_bs_ris.shape[0]

    @property
    def k_users(self) -> int:
        return self.g_user.shape[0]

    @property
    def j_uehrs(self) -> int:
        return self.h_uehr.shape[0]

    def cascaded_user(self) -> np.ndarray:
        """``B_k = diag(g_k^H) G_b`` for every user, shape (K, M, N_t)."""
        return self.g_user.conj()[:, :, None] * self.g_bs_ris[None]

    def cascaded_uehr(self) -> np.ndarray:
        return self.h_uehr.conj()[:, :, None] * self.g_bs_ris[None]


def ula_response(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response ``exp(j pi m sin(angle))``, m = 0..n-1."""
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def _azimuth(src, dst) -> float:
    d = np.asarray(dst, float) - np.asarray(src, float)
    return float(np.arctan2(d[1], d[0]))


def _drop_in_disk(rng, center, radius, count) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=count))
    phi = rng.uniform(0.0, 2 * np.pi, size=count)
    return np.asarray(center, float) + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def _cn(rng, shape) -> np.ndarray:
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def _rician(los, nlos, k_factor):
    if np.isinf(k_factor):
        return los
    return np.sqrt(k_factor / (k_factor + 1)) * los + np.sqrt(1 / (k_factor + 1)) * nlos


def generate_channels(cfg: SystemConfig, seed: int) -> ChannelSet:
    rng = np.random.default_rng(seed)
    geo = cfg.geometry
    n_t, m, k_users, j_uehrs = cfg.n_t, cfg.m_ris, cfg.k_users, cfg.j_uehrs
    if geo.user_xy is None:
        user_xy = _drop_in_disk(rng, geo.user_center_xy, geo.user_radius_m, k_users)
    else:
        user_xy = np.asarray(geo.user_xy, float)
    if geo.uehr_xy is None:
        uehr_xy = _drop_in_disk(rng, geo.uehr_center_xy, geo.uehr_radius_m, j_uehrs)
    else:
        uehr_xy = np.asarray(geo.uehr_xy, float)

    q = np.asarray(geo.uav_xy, float)
    bs = np.asarray(geo.bs_xy, float)
    h2 = geo.uav_height_m**2
    d_bs = float(np.sqrt(np.sum((q - bs) ** 2) + h2))
    d_user = np.sqrt(np.sum((user_xy - q) ** 2, axis=1) + h2)
    d_uehr = np.sqrt(np.sum((uehr_xy - q) ** 2, axis=1) + h2)
    # ground-to-ground direct link; floored at 1 m
    d_direct = np.maximum(np.sqrt(np.sum((uehr_xy - bs) ** 2, axis=1)), 1.0)

    nlos_g = _cn(rng, (m, n_t))
    nlos_user = _cn(rng, (k_users, m))
    nlos_uehr = _cn(rng, (j_uehrs, m))
    nlos_direct = _cn(rng, (j_uehrs, n_t))

    def loss(d):
        return (np.asarray(d) / cfg.pathloss_ref_m) ** (-cfg.alpha / 2)

    k_ris = cfg.rician_k_ris_link
    los_g = np.outer(ula_response(m, _azimuth(q, bs)), ula_response(n_t, _azimuth(bs, q)).conj())
    g_bs_ris = _rician(los_g, nlos_g, k_ris) * loss(d_bs)
    g_user = np.stack([
        _rician(ula_response(m, _azimuth(q, user_xy[k])), nlos_user[k], k_ris) * loss(d_user[k])
        for k in range(k_users)
    ])
    h_uehr = np.stack([
        _rician(ula_response(m, _azimuth(q, uehr_xy[j])), nlos_uehr[j], k_ris) * loss(d_uehr[j])
        for j in range(j_uehrs)
    ])
    h_direct = np.stack([
        _rician(ula_response(n_t, _azimuth(bs, uehr_xy[j])), nlos_direct[j], cfg.rician_k_direct)
        * loss(d_direct[j])
        for j in range(j_uehrs)
    ])
    return ChannelSet(g_bs_ris, g_user, h_uehr, h_direct, d_user, d_uehr, d_bs, d_direct,
                      user_xy, uehr_xy)


def effective_user_channel(ch: ChannelSet, s: RisPhases, k: int) -> np.ndarray:
    """``v_k`` with ``v_k^H = g_k^H diag(s) G_b``."""
    if not 0 <= k < ch.k_users:
        raise IndexError(f"user index {k} out of range")
    return ((ch.g_user[k].conj() * s.s) @ ch.g_bs_ris).conj()


def combined_uehr_channel(ch: ChannelSet, s: RisPhases, j: int) -> np.ndarray:
    """``u_j`` with ``u_j^H = h_bj^H + h_j^H diag(s) G_b``."""
    if not 0 <= j < ch.j_uehrs:
        raise IndexError(f"UEHR index {j} out of range")
    return ch.h_direct[j] + ((ch.h_uehr[j].conj() * s.s) @ ch.g_bs_ris).conj()


def user_channels(ch: ChannelSet, s: RisPhases) -> np.ndarray:
    """All ``v_k`` stacked, shape (K, N_t)."""
    return ((ch.g_user.conj() * s.s) @ ch.g_bs_ris).conj()


def uehr_channels(ch: ChannelSet, s: RisPhases) -> np.ndarray:
    """All ``u_j`` stacked, shape (J, N_t)."""
    return ch.h_direct + ((ch.h_uehr.conj() * s.s) @ ch.g_bs_ris).conj()


def t_vector(ch_vec: np.ndarray, g_b: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``t = (diag(v^H) G_b w)^*`` so that ``v^H diag(s) G_b w = t^H s``."""
    ch_vec = np.asarray(ch_vec)
    g_b = np.atleast_2d(g_b)
    w = np.asarray(w)
    if g_b.shape != (ch_vec.shape[0], w.shape[0]):
        raise ValueError(f"dimension mismatch: v {ch_vec.shape}, G_b {g_b.shape}, w {w.shape}")
    return (ch_vec.conj() * (g_b @ w)).conj()


# Channel dump: one .npz; every complex array stored as float64 with a trailing
# (re, im) axis, real arrays stored as-is.
_COMPLEX_FIELDS = ("g_bs_ris", "g_user", "h_uehr", "h_direct")


def save_channels(ch: ChannelSet, path: str | Path) -> None:
    arrays = {}
    for name, value in vars(ch).items():
        value = np.asarray(value)
        if name in _COMPLEX_FIELDS:
            value = np.stack([value.real, value.imag], axis=-1)
        arrays[name] = value
    np.savez(path, **arrays)


def load_channels(path: str | Path) -> ChannelSet:
    with np.load(path) as data:
        kwargs = {}
        for name in data.files:
            value = data[name]
            if name in _COMPLEX_FIELDS:
                value = value[..., 0] + 1j * value[..., 1]
            kwargs[name] = float(value) if name == "d_bs" else value
    return ChannelSet(**kwargs)
