import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from secure_rsma import RisPhases, generate_channels, default_config
from secure_rsma.channels import (ChannelSet, combined_uehr_channel, effective_user_channel,
                                  load_channels, save_channels, t_vector, uehr_channels,
                                  ula_response, user_channels)
from secure_rsma.config import Geometry


def random_channels(rng, n_t=3, m=5, k=2, j=2) -> ChannelSet:
    cn = lambda *s: (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
    return ChannelSet(cn(m, n_t), cn(k, m), cn(j, m), cn(j, n_t), np.ones(k), np.ones(j), 1.0,
                      np.ones(j), np.zeros((k, 2)), np.zeros((j, 2)))


def test_phases_from_angles_unit_modulus(rng):
    s = RisPhases.from_angles(rng.uniform(0, 2 * np.pi, 50))
    assert np.max(np.abs(np.abs(s.s) - 1)) < 1e-12
    assert np.allclose(RisPhases.from_angles(s.theta).s, s.s)
    relaxed = RisPhases(np.array([0.5, 0.3j, -0.2 + 0.1j]))
    # unit modulus up to floating-point rounding of s / |s|
    assert np.max(np.abs(np.abs(relaxed.projected().s) - 1)) <= 1e-15


def test_pure_nlos_has_unit_entry_variance():
    cfg = default_config().replace(m_ris=4, rician_k_ris_link=0.0)
    samples = []
    for seed in range(2500):  # 2500 draws x 4 entries = 1e4 samples
        ch = generate_channels(cfg, seed)
        scale = (ch.d_user[0] / cfg.pathloss_ref_m) ** (-cfg.alpha / 2)
        samples.append(ch.g_user[0] / scale)
    var = np.var(np.concatenate(samples))
    assert abs(var - 1) < 0.05


def test_huge_k_factor_gives_los():
    cfg = default_config().replace(rician_k_ris_link=1e9)
    ch = generate_channels(cfg, 3)
    q = np.asarray(cfg.geometry.uav_xy)
    for k in range(cfg.k_users):
        d = ch.user_xy[k] - q
        los = ula_response(cfg.m_ris, np.arctan2(d[1], d[0]))
        expected = los * (ch.d_user[k] / cfg.pathloss_ref_m) ** (-cfg.alpha / 2)
        assert np.linalg.norm(ch.g_user[k] - expected) <= 1e-4 * np.linalg.norm(expected)


def test_user_below_uav_scaling():
    geo = Geometry(user_xy=((1000.0, 0.0), (1000.0, 0.0)))
    cfg = default_config().replace(geometry=geo, rician_k_ris_link=1e9, pathloss_ref_m=1.0)
    ch = generate_channels(cfg, 0)
    assert ch.d_user[0] == 100.0
    assert np.linalg.norm(ch.g_user[0]) / np.sqrt(cfg.m_ris) == pytest.approx(100 ** -1.25, rel=1e-4)


def test_generation_is_bitwise_reproducible(cfg):
    a, b = generate_channels(cfg, 99), generate_channels(cfg, 99)
    for name in vars(a):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = generate_channels(cfg, 100)
    assert not np.array_equal(a.g_user, c.g_user)


def test_distances_include_height(cfg, channels):
    q = np.asarray(cfg.geometry.uav_xy)
    expected = np.sqrt(np.sum((channels.user_xy - q) ** 2, axis=1) + cfg.geometry.uav_height_m**2)
    assert np.allclose(channels.d_user, expected)
    assert np.all(channels.d_uehr >= cfg.geometry.uav_height_m)
    for name in ("g_bs_ris", "g_user", "h_uehr", "h_direct"):
        assert np.all(np.isfinite(getattr(channels, name)))


def test_pathloss_monotone_in_distance():
    near = Geometry(user_xy=((900.0, 0.0), (900.0, 0.0)))
    far = Geometry(user_xy=((0.0, 0.0), (0.0, 0.0)))
    base = default_config()
    power = {}
    for tag, geo in (("near", near), ("far", far)):
        cfg = base.replace(geometry=geo)
        power[tag] = np.mean([np.sum(np.abs(generate_channels(cfg, s).g_user[0]) ** 2) for s in range(400)])
    assert power["near"] > power["far"]


def test_single_element_effective_channel(rng):
    ch = random_channels(rng, n_t=3, m=1)
    v = effective_user_channel(ch, RisPhases.ones(1), 0)
    assert np.allclose(v.conj(), np.conj(ch.g_user[0, 0]) * ch.g_bs_ris[0])


def test_effective_channel_matches_triple_product(rng):
    ch = random_channels(rng)
    s = RisPhases.random(5, rng)
    for k in range(2):
        direct = ch.g_user[k].conj() @ np.diag(s.s) @ ch.g_bs_ris
        assert np.allclose(effective_user_channel(ch, s, k).conj(), direct)
    assert np.allclose(user_channels(ch, s)[1], effective_user_channel(ch, s, 1))


def test_global_phase_leaves_magnitudes(rng):
    ch = random_channels(rng)
    s = RisPhases.random(5, rng)
    rotated = RisPhases(s.s * np.exp(1j * 0.7))
    p = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    for k in range(2):
        a = abs(np.vdot(effective_user_channel(ch, s, k), p))
        b = abs(np.vdot(effective_user_channel(ch, rotated, k), p))
        assert a == pytest.approx(b, rel=1e-12)


def test_combined_uehr_channel_cases(rng):
    ch = random_channels(rng)
    s = RisPhases.random(5, rng)
    no_ris = ChannelSet(ch.g_bs_ris, ch.g_user, np.zeros_like(ch.h_uehr), ch.h_direct, *list(vars(ch).values())[4:])
    assert np.allclose(combined_uehr_channel(no_ris, s, 0), ch.h_direct[0])
    no_direct = ChannelSet(ch.g_bs_ris, ch.g_user, ch.h_uehr, np.zeros_like(ch.h_direct), *list(vars(ch).values())[4:])
    u = combined_uehr_channel(no_direct, RisPhases.ones(5), 1)
    assert np.allclose(u.conj(), ch.h_uehr[1].conj() @ ch.g_bs_ris)
    direct = ch.h_direct[0].conj() + ch.h_uehr[0].conj() @ np.diag(s.s) @ ch.g_bs_ris
    assert np.allclose(combined_uehr_channel(ch, s, 0).conj(), direct)
    assert np.allclose(uehr_channels(ch, s)[0], combined_uehr_channel(ch, s, 0))


def test_index_errors(rng):
    ch = random_channels(rng)
    with pytest.raises(IndexError):
        effective_user_channel(ch, RisPhases.ones(5), 2)
    with pytest.raises(IndexError):
        combined_uehr_channel(ch, RisPhases.ones(5), -1)


def test_t_vector_small_cases(rng):
    g_b = rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3))
    v = np.array([0.3 - 0.4j])
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.allclose(t_vector(v, g_b, w), np.conj(np.conj(v[0]) * (g_b[0] @ w)))
    assert np.array_equal(t_vector(rng.standard_normal(4), rng.standard_normal((4, 2)), np.zeros(2)), np.zeros(4))
    with pytest.raises(ValueError, match="dimension"):
        t_vector(np.ones(3), np.ones((4, 2)), np.ones(2))


def test_t_vector_agrees_with_effective_channel(rng):
    ch = random_channels(rng)
    s = RisPhases.random(5, rng)
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    t = t_vector(ch.g_user[0], ch.g_bs_ris, w)
    assert np.vdot(t, s.s) == pytest.approx(np.vdot(effective_user_channel(ch, s, 0), w), rel=1e-12)


complex_arrays = lambda shape: hnp.arrays(np.complex128, shape, elements=st.complex_numbers(
    max_magnitude=10, allow_nan=False, allow_infinity=False))


@given(v=complex_arrays(6), g_b=complex_arrays((6, 3)), w=complex_arrays(3),
       theta=hnp.arrays(np.float64, 6, elements=st.floats(0, 2 * np.pi)))
def test_t_vector_identity_property(v, g_b, w, theta):
    s = np.exp(1j * theta)
    lhs = np.vdot(t_vector(v, g_b, w), s)
    rhs = v.conj() @ np.diag(s) @ g_b @ w
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, np.sum(np.abs(v)[:, None] * np.abs(g_b) * np.abs(w)))


def test_channel_dump_round_trip(tmp_path, channels):
    path = tmp_path / "ch.npz"
    save_channels(channels, path)
    back = load_channels(path)
    for name in vars(channels):
        assert np.array_equal(np.asarray(getattr(back, name)), np.asarray(getattr(channels, name)))
