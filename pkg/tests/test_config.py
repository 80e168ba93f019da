import math

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from secure_rsma.config import (ConfigError, EhConstants, Scheme, SystemConfig, config_from_dict,
                                dbm_to_watt, derive_trial_seed, load_config, default_config,
                                parse_sweep, save_config, watt_to_dbm)


def write_yaml(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_shipped_default_file_matches_builtin(tmp_path):
    from pathlib import Path

    shipped = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"
    cfg = load_config(shipped)
    assert cfg == default_config()
    assert (cfg.n_t, cfg.k_users, cfg.j_uehrs, cfg.m_ris) == (4, 2, 2, 16)
    assert cfg.alpha == 2.5 and cfg.p0_w == 1.0 and cfg.e_h_joule == 0.01
    assert cfg.sigma2_w == pytest.approx(1e-3, rel=1e-15)
    assert cfg.r_c_min == 0.5


def test_alpha_below_two_rejected(tmp_path):
    with pytest.raises(ConfigError, match="alpha >= 2 violated"):
        load_config(write_yaml(tmp_path, {"alpha": 1.5}))


def test_omitted_varrho_defaults_to_one(tmp_path):
    assert load_config(write_yaml(tmp_path, {"n_t": 8})).varrho == 1.0


@pytest.mark.parametrize("field,value", [
    ("p_max_w", 0.0), ("sigma2_w", -1.0), ("p0_w", -0.1), ("tol_inner", 0.0),
    ("tol_outer", -1e-3), ("penalty_growth", 1.0),
])
def test_invariant_violations_name_the_field(field, value):
    with pytest.raises(ConfigError, match=field):
        SystemConfig(**{field: value})


@pytest.mark.parametrize("field", ["n_t", "m_ris", "k_users", "j_uehrs"])
def test_counts_must_be_positive(field):
    with pytest.raises(ConfigError, match=field):
        SystemConfig(**{field: 0})


def test_eh_target_at_saturation_rejected():
    with pytest.raises(ConfigError, match="saturation"):
        SystemConfig(e_h_joule=0.024)


def test_unknown_field_and_bad_yaml(tmp_path):
    with pytest.raises(ConfigError, match="unknown config field"):
        config_from_dict({"antennas": 4})
    bad = tmp_path / "bad.yaml"
    bad.write_text("n_t: [1, 2\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(bad)


def test_dbm_conversion_exact_points():
    assert dbm_to_watt(0.0) == 1e-3
    assert dbm_to_watt(30.0) == 1.0
    assert watt_to_dbm(1.0) == 30.0
    cfg = config_from_dict({"p_max_dbm": 20, "sigma2_dbm": 0})
    assert cfg.p_max_w == pytest.approx(0.1) and cfg.sigma2_w == 1e-3


def test_dbm_and_watt_keys_are_exclusive():
    with pytest.raises(ConfigError, match="only one"):
        config_from_dict({"p_max_dbm": 10, "p_max_w": 0.01})


def test_eh_saturation_form():
    eh = EhConstants.from_saturation(0.024, 150.0, 0.014)
    assert eh.saturation == pytest.approx(0.024, rel=1e-12)
    # Omega(0) = phi/(k1(1+e^{b0 b1})) - k2 must vanish
    omega0 = eh.phi / (eh.k1p * (1 + math.exp(eh.b0 * eh.b1))) - eh.k2p
    assert abs(omega0) < 1e-15
    cfg = config_from_dict({"eh": {"saturation_w": 0.03, "b0": 100, "b1": 0.02}})
    assert cfg.eh.saturation == pytest.approx(0.03)


def test_geometry_block_and_explicit_positions():
    cfg = config_from_dict({"geometry": {"uav_height_m": 50, "user_xy": [[0, 0], [10, 10]]}})
    assert cfg.geometry.uav_height_m == 50.0
    assert cfg.geometry.user_xy == ((0.0, 0.0), (10.0, 10.0))
    with pytest.raises(ConfigError):
        config_from_dict({"geometry": {"uav_height_m": 0}})
    with pytest.raises(ConfigError, match="user_xy"):
        config_from_dict({"k_users": 3, "geometry": {"user_xy": [[0, 0]]}})
    # changing K drops positions that no longer fit
    assert cfg.replace(k_users=3).geometry.user_xy is None


def test_scheme_parsing():
    assert config_from_dict({"scheme": "sdma"}).scheme is Scheme.SDMA
    with pytest.raises(ConfigError, match="unknown scheme"):
        config_from_dict({"scheme": "OMA"})


@given(n_t=st.integers(1, 16), m=st.integers(1, 64), p_dbm=st.floats(-10, 40),
       alpha=st.floats(2.0, 4.0), seed=st.integers(0, 2**63 - 1))
def test_save_load_round_trip(tmp_path_factory, n_t, m, p_dbm, alpha, seed):
    cfg = default_config().replace(n_t=n_t, m_ris=m, p_max_w=dbm_to_watt(p_dbm),
                                         alpha=alpha, master_seed=seed)
    path = tmp_path_factory.mktemp("rt") / "c.yaml"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_trial_seeds_deterministic_and_distinct():
    assert derive_trial_seed(7, 3) == derive_trial_seed(7, 3)
    assert derive_trial_seed(7, 0) != derive_trial_seed(7, 1)
    seeds = {derive_trial_seed(2024, i) for i in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**64 for s in seeds)
    with pytest.raises(ValueError):
        derive_trial_seed(1, -1)


def test_parse_sweep():
    assert parse_sweep(["n_t=2,4,8", "p_max_dbm=10,20.5"]) == {"n_t": [2, 4, 8], "p_max_dbm": [10, 20.5]}
    for bad in ["n_t", "nonsense=1,2", "n_t="]:
        with pytest.raises(ConfigError):
            parse_sweep([bad])


def test_to_dict_is_plain_yaml():
    d = default_config().to_dict()
    text = yaml.safe_dump(d)
    assert yaml.safe_load(text) == d
    assert np.isclose(d["p_max_w"], 0.01)
