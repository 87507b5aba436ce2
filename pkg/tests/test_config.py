import json
import pytest
from microgrid.config import (Modes, Scenario, load_config, parse_value, ConfigParseException, ValidationException)


def setup_module(module):
    print('setup_module      module:%s' % module.__name__)


def test_defaults():
    scenario = Scenario({})
    assert scenario.mode == Modes.BLOCKCHAIN
    assert scenario.ders_per_feeder == [0, 4, 4, 4, 4, 4, 4]
    assert scenario.n_feeders == 7
    assert scenario.u_total == 24
    assert scenario.t_tc == 900
    assert scenario.block_period == 10
    assert scenario.blocks_per_period() == 90
    assert scenario.lock_offset() == pytest.approx(810)
    assert scenario.credit_per_der == 10000
    assert scenario.joins == []

def test_default_alphas_grow_with_distance():
    alphas = Scenario({}).alphas()
    assert len(alphas) == 7
    assert alphas[0] == pytest.approx(0.0008)
    assert alphas[6] == pytest.approx(0.0056)

def test_explicit_alphas():
    scenario = Scenario({'ders_per_feeder': [2, 2], 'grid': {'alphas': [0.001, 0.006]}})
    assert scenario.alphas() == [0.001, 0.006]

def test_cost_params():
    params = Scenario({}).cost_params()
    assert params.n_b == 90
    assert params.u_total == 24
    assert params.n_peers == 3
    assert params.p_b == pytest.approx(1 / 24)

def test_droop_params():
    params = Scenario({'grid': {'gamma': 0.004}}).droop_params()
    assert params.gamma == 0.004
    assert params.v_max == 1.05

def test_override():
    scenario = Scenario({'seed': 1})
    changed = scenario.override('network.n_peers', 2)
    assert changed.network['n_peers'] == 2
    assert scenario.network['n_peers'] == 3
    assert changed.seed == 1

def test_joins_sorted():
    scenario = Scenario({'joins': [{'feeder': 3, 'period': 9}, {'feeder': 2, 'period': 4}]})
    assert scenario.joins == [(4, 2), (9, 3)]

def test_int_accepted_for_float():
    assert Scenario({'t_tc': 1200}).t_tc == 1200.0

def test_to_dict_round_trip():
    scenario = Scenario({'mode': 'centralized', 'seed': 4})
    assert Scenario(scenario.to_dict()).to_dict() == scenario.to_dict()
    assert json.loads(json.dumps(scenario.to_dict())) == scenario.to_dict()

def test_load_config(tmp_path):
    path = tmp_path / 'scenario.json'
    path.write_text(json.dumps({'mode': 'no_control', 'periods': 4}))
    scenario = load_config(str(path))
    assert scenario.mode == Modes.NO_CONTROL
    assert scenario.periods == 4

def test_parse_value():
    assert parse_value('3') == 3
    assert parse_value('0.5') == 0.5
    assert parse_value('[1, 2]') == [1, 2]
    assert parse_value('hash') == 'hash'



############## Negative Testing ##############

def test_lock_fraction_out_of_range():
    try:
        Scenario({'lock_fraction': 1.5})
        assert False
    except ValidationException as e:
        assert e.path == 'lock_fraction'

def test_unknown_key():
    try:
        Scenario({'grid': {'foo': 1}})
        assert False
    except ValidationException as e:
        assert e.path == 'grid.foo'
        assert 'grid.foo' in str(e)

def test_wrong_type():
    with pytest.raises(ValidationException):
        Scenario({'periods': 'ten'})
    with pytest.raises(ValidationException):
        Scenario({'grid': 3})

def test_short_control_period():
    with pytest.raises(ValidationException):
        Scenario({'t_tc': 50, 'block_period': 10})

def test_too_many_peers():
    with pytest.raises(ValidationException):
        Scenario({'ders_per_feeder': [3], 'network': {'n_peers': 3}})
    assert Scenario({'mode': 'centralized', 'ders_per_feeder': [3], 'network': {'n_peers': 3}}).u_total == 3

def test_bad_alphas():
    with pytest.raises(ValidationException):
        Scenario({'ders_per_feeder': [2, 2], 'grid': {'alphas': [0.006, 0.001]}})
    with pytest.raises(ValidationException):
        Scenario({'ders_per_feeder': [2, 2], 'grid': {'alphas': [0.001]}})

def test_bad_join():
    with pytest.raises(ValidationException):
        Scenario({'periods': 5, 'joins': [{'feeder': 1, 'period': 5}]})
    with pytest.raises(ValidationException):
        Scenario({'joins': [{'feeder': 9, 'period': 1}]})

def test_bad_droop():
    with pytest.raises(ValidationException):
        Scenario({'grid': {'v_min': 1.01}})

def test_unknown_mode():
    with pytest.raises(ValidationException):
        Scenario({'mode': 'gossip'})

def test_override_unknown_path():
    with pytest.raises(ValidationException):
        Scenario({}).override('network.fanout', 2)

def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigParseException):
        load_config(str(tmp_path / 'missing.json'))

def test_invalid_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"mode": ')
    with pytest.raises(ConfigParseException):
        load_config(str(path))

def test_config_not_an_object(tmp_path):
    path = tmp_path / 'list.json'
    path.write_text('[1, 2]')
    with pytest.raises(ConfigParseException):
        load_config(str(path))
