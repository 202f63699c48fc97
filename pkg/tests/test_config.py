import pytest

from uavmec.config import ConfigError, SimConfig, desk_scale, dump_config, dbm_to_watts, full_scale, load_config


def test_defaults_are_full_scale():
    cfg = full_scale()
    assert (cfg.n_ues, cfg.n_uavs, cfg.horizon_T, cfg.batch_K) == (50, 3, 20, 256)
    assert cfg.hidden == (400, 300, 200, 200)
    assert cfg.tx_power_P_n == pytest.approx(dbm_to_watts(20))
    assert cfg.initial_poses() == [(10, 10), (90, 90), (10, 90)]


def test_desk_scale():
    cfg = desk_scale()
    assert (cfg.n_ues, cfg.n_uavs, cfg.hidden, cfg.batch_K, cfg.episodes_e_max) == (20, 2, (64, 64), 64, 500)
    assert (cfg.lr_actor, cfg.lr_critic) == (3e-4, 1e-3)
    assert cfg.state_len == 2 * cfg.obs_len


def test_round_trip(tmp_path):
    cfg = desk_scale(seed=7, data_unit="kilobit", gamma=0.9)
    path = tmp_path / "c.ini"
    dump_config(cfg, path)
    assert load_config(path) == cfg
    assert load_config(path, seed=3).seed == 3


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[sim]\nn_uav = 3\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_section_rejected(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[other]\nn_uavs = 3\n")
    with pytest.raises(ConfigError):
        load_config(path)


@pytest.mark.parametrize("change", [
    {"n_uavs": 0}, {"R_u": 25.0}, {"d_max": 200.0}, {"data_range": (14, 10)},
    {"data_unit": "parsec"}, {"actor_reg": -1.0}, {"lr_actor": 0.0},
])
def test_validation(change):
    with pytest.raises(ConfigError):
        SimConfig(**change)


def test_hash_ignores_run_control_only():
    a = desk_scale()
    assert a.config_hash() == a.replace(episodes_e_max=3, checkpoint_every=1).config_hash()
    assert a.config_hash() != a.replace(gamma=0.9).config_hash()
    assert a.config_hash() != a.replace(seed=1).config_hash()
