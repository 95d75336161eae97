import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kaontwf.errors import ConfigError, ValidationError
from kaontwf.params import CONFIG_KEYS, KaonPhysics, derive, load_physics


def test_defaults_lifetimes(physics):
    assert physics.tau_s == 8.92e-11
    assert physics.tau_l == 5.17e-8


def test_defaults_epsilon(physics):
    assert abs(physics.epsilon) == pytest.approx(2.228e-3, rel=1e-12)
    assert math.degrees(np.angle(physics.epsilon)) == pytest.approx(43.5, rel=1e-12)
    assert physics.delta_m * physics.tau_s == pytest.approx(0.472)


def test_tau_l_shorter_than_tau_s_rejected():
    with pytest.raises(ValidationError):
        load_physics({"tau_l_seconds": 1e-12}, use_defaults=True)


def test_missing_field_names_it():
    doc = {k: 1.0 for k in CONFIG_KEYS if k != "abs_epsilon"}
    with pytest.raises(ConfigError) as err:
        load_physics(doc)
    assert err.value.field == "abs_epsilon"


def test_ill_typed_field_names_it():
    with pytest.raises(ConfigError) as err:
        load_physics({"abs_epsilon": "abc"}, use_defaults=True)
    assert err.value.field == "abs_epsilon"


def test_defaults_key_in_document():
    assert load_physics({"defaults": "true"}) == KaonPhysics.default()


def test_config_file_roundtrip(tmp_path, physics):
    path = tmp_path / "phys.cfg"
    path.write_text("# kaon constants\n" + "\n".join(f"{k} = {v!r}" for k, v in physics.to_config().items()))
    back = load_physics(path)
    assert back.tau_s == physics.tau_s
    assert abs(back.epsilon - physics.epsilon) < 1e-15


@pytest.mark.parametrize("field,value", [("abs_epsilon", 0.2), ("gamma_k1_2pi_over_gamma_s", 1.5),
                                          ("gamma_k2_3pi_over_gamma_l", 0.0)])
def test_invariants_enforced(field, value):
    with pytest.raises(ValidationError):
        load_physics({field: value}, use_defaults=True)


def test_derive_defaults(physics):
    d = derive(physics)
    assert d.gamma_s == pytest.approx(1.121e10, rel=1e-3)
    assert d.ratio_sl == pytest.approx(579.6, rel=1e-4)
    assert d.e_s.mass == 0.0
    assert d.e_s.half_width == 0.5
    assert d.e_l.mass == pytest.approx(0.472)


def test_derive_symmetric_case():
    p = load_physics({"tau_s_seconds": 1.0, "tau_l_seconds": 1.0}, use_defaults=True)
    d = derive(p)
    assert d.gamma_s == d.gamma_l == 1.0


@given(st.floats(1e-12, 1e-9), st.floats(1.0, 1e4))
def test_ratio_identity(tau_s, ratio):
    p = load_physics({"tau_s_seconds": tau_s, "tau_l_seconds": tau_s * ratio}, use_defaults=True)
    d = derive(p)
    assert d.ratio_sl * d.gamma_l == pytest.approx(d.gamma_s, rel=1e-14)
    assert derive(p) == d
