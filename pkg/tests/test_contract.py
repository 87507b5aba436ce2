import pytest
from dataclasses import replace
from microgrid.chain import AbstractPow, Block
from microgrid.contract import (GENESIS_HASH, UpdateKind, Phase, RejectReason, Verdict, ACCEPT, KeyRing,
                                make_update, validate_update, apply_update, genesis_states, apply_updates,
                                replay_chain, InvalidChainException)
from microgrid.credits import DerId, CreditLedger


u1, u2, u3 = DerId(1, 1), DerId(1, 2), DerId(1, 3)
keyring = KeyRing(b'network-secret')


def setup_module(module):
    print('setup_module      module:%s' % module.__name__)


def fresh():
    stubs = {der: keyring.stub_for(der) for der in (u1, u2, u3)}
    state = genesis_states({1: CreditLedger({u1: 10, u2: 10})})[1]
    return state, stubs

def step(state, upd):
    verdict = validate_update(state, upd, keyring)
    assert verdict == ACCEPT
    return apply_update(state, upd)

def linked(updates_per_block):
    sealer = AbstractPow()
    blocks = []
    parent = GENESIS_HASH
    for height, updates in enumerate(updates_per_block, start=1):
        unsealed = Block(parent, height, u1, float(height), tuple(updates))
        block = Block(parent, height, u1, float(height), tuple(updates), sealer.seal(unsealed.header()))
        blocks.append(block)
        parent = block.hash
    return blocks


def test_make_update_signs_and_counts_nonces():
    _, stubs = fresh()
    first = make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1])
    second = make_update(UpdateKind.LOCK, u1, 1, 0, None, stubs[u1])
    assert (first.nonce, second.nonce) == (0, 1)
    assert keyring.verify(first) and keyring.verify(second)
    assert first.digest != second.digest

def test_genesis_state():
    state, _ = fresh()
    assert state.phase == Phase.COLLECTING
    assert state.period == 0
    assert state.escrow == 0
    assert state.elected is None
    assert state.holdings() == 20

def test_full_round():
    state, stubs = fresh()
    state = step(state, make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1]))
    state = step(state, make_update(UpdateKind.DEMAND, u2, 1, 0, 5, stubs[u2]))
    assert state.escrow == 7
    assert state.ledger.entries == {u1: 8, u2: 5}
    assert state.holdings() == 20

    state = step(state, make_update(UpdateKind.LOCK, u2, 1, 0, None, stubs[u2]))
    assert state.phase == Phase.LOCKED
    assert state.elected == u1
    assert state.elected_for(0) == u1

    state = step(state, make_update(UpdateKind.WITHDRAW, u1, 1, 0, None, stubs[u1]))
    assert state.phase == Phase.COLLECTING
    assert state.period == 1
    assert state.escrow == 0
    assert state.ledger.entries == {u1: 15, u2: 5}
    assert state.elected_for(0) == u1
    assert state.elected_for(1) is None
    assert state.holdings() == 20

def test_only_first_lock_counts():
    state, stubs = fresh()
    state = step(state, make_update(UpdateKind.DEMAND, u2, 1, 0, 5, stubs[u2]))
    state = step(state, make_update(UpdateKind.LOCK, u1, 1, 0, None, stubs[u1]))
    late = make_update(UpdateKind.LOCK, u2, 1, 0, None, stubs[u2])
    assert validate_update(state, late, keyring) == Verdict(RejectReason.WRONG_PHASE)

def test_demand_after_lock_rejected():
    state, stubs = fresh()
    state = step(state, make_update(UpdateKind.LOCK, u1, 1, 0, None, stubs[u1]))
    late = make_update(UpdateKind.DEMAND, u2, 1, 0, 1, stubs[u2])
    assert validate_update(state, late, keyring).reason == RejectReason.WRONG_PHASE

def test_lock_without_demands_falls_back():
    state, stubs = fresh()
    state = step(state, make_update(UpdateKind.LOCK, u2, 1, 0, None, stubs[u2]))
    assert state.elected == u1
    state = step(state, make_update(UpdateKind.WITHDRAW, u1, 1, 0, None, stubs[u1]))
    assert state.period == 1
    assert state.ledger.entries == {u1: 10, u2: 10}

def test_lock_without_demands_keeps_previous_vsc():
    state, stubs = fresh()
    state = step(state, make_update(UpdateKind.DEMAND, u2, 1, 0, 0, stubs[u2]))
    state = step(state, make_update(UpdateKind.LOCK, u1, 1, 0, None, stubs[u1]))
    state = step(state, make_update(UpdateKind.WITHDRAW, u2, 1, 0, None, stubs[u2]))
    state = step(state, make_update(UpdateKind.LOCK, u1, 1, 1, None, stubs[u1]))
    assert state.elected == u2

def test_zero_credit_joiner_may_demand_zero():
    state, stubs = fresh()
    upd = make_update(UpdateKind.DEMAND, u3, 1, 0, 0, stubs[u3])
    state = step(state, upd)
    assert state.ledger.get(u3) == 0
    assert state.demands.demands[u3] == 0

def test_apply_updates_skips_invalid():
    state, stubs = fresh()
    demand = make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1])
    duplicate = make_update(UpdateKind.DEMAND, u1, 1, 0, 3, stubs[u1])
    stranger = make_update(UpdateKind.DEMAND, DerId(4, 1), 4, 0, 1, keyring.stub_for(DerId(4, 1)))
    states = apply_updates({1: state}, [demand, duplicate, stranger], keyring)
    assert states[1].demands.demands == {u1: 2}
    assert 4 not in states

def test_replay_chain():
    state, stubs = fresh()
    blocks = linked([
        [make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1]),
         make_update(UpdateKind.DEMAND, u2, 1, 0, 5, stubs[u2])],
        [],
        [make_update(UpdateKind.LOCK, u1, 1, 0, None, stubs[u1]),
         make_update(UpdateKind.LOCK, u2, 1, 0, None, stubs[u2])],
        [make_update(UpdateKind.WITHDRAW, u1, 1, 0, None, stubs[u1])],
    ])
    states = replay_chain(blocks, {1: state}, keyring)
    assert states[1].ledger.entries == {u1: 15, u2: 5}
    assert states[1].period == 1
    assert replay_chain(blocks, {1: state}, keyring) == states

def test_replay_empty_chain():
    state, _ = fresh()
    assert replay_chain([], {1: state}) == {1: state}

def test_replay_skips_duplicate_demand():
    state, stubs = fresh()
    demand = make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1])
    states = replay_chain(linked([[demand], [demand]]), {1: state}, keyring)
    assert states[1].escrow == 2
    assert states[1].ledger.get(u1) == 8



############## Negative Testing ##############

def test_overdraft_rejected():
    state, stubs = fresh()
    upd = make_update(UpdateKind.DEMAND, u1, 1, 0, 11, stubs[u1])
    assert validate_update(state, upd, keyring).reason == RejectReason.OVERDRAFT

def test_wrong_period_rejected():
    state, stubs = fresh()
    upd = make_update(UpdateKind.DEMAND, u1, 1, 3, 1, stubs[u1])
    assert validate_update(state, upd, keyring).reason == RejectReason.WRONG_PERIOD

def test_wrong_feeder_rejected():
    state, _ = fresh()
    outsider = DerId(2, 1)
    upd = make_update(UpdateKind.DEMAND, outsider, 1, 0, 1, keyring.stub_for(outsider))
    assert validate_update(state, upd, keyring).reason == RejectReason.WRONG_FEEDER

def test_withdraw_by_loser_rejected():
    state, stubs = fresh()
    state = step(state, make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1]))
    state = step(state, make_update(UpdateKind.DEMAND, u2, 1, 0, 5, stubs[u2]))
    state = step(state, make_update(UpdateKind.LOCK, u1, 1, 0, None, stubs[u1]))
    upd = make_update(UpdateKind.WITHDRAW, u2, 1, 0, None, stubs[u2])
    assert validate_update(state, upd, keyring).reason == RejectReason.NOT_ELECTED

def test_withdraw_before_lock_rejected():
    state, stubs = fresh()
    upd = make_update(UpdateKind.WITHDRAW, u1, 1, 0, None, stubs[u1])
    assert validate_update(state, upd, keyring).reason == RejectReason.WRONG_PHASE

def test_tampered_update_rejected():
    state, stubs = fresh()
    upd = make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stubs[u1])
    forged = replace(upd, amount=0)
    assert not keyring.verify(forged)
    assert validate_update(state, forged, keyring).reason == RejectReason.BAD_AUTH

def test_foreign_key_rejected():
    state, _ = fresh()
    stub = KeyRing(b'other-secret').stub_for(u1)
    upd = make_update(UpdateKind.DEMAND, u1, 1, 0, 2, stub)
    assert validate_update(state, upd, keyring).reason == RejectReason.BAD_AUTH

def test_bad_update_arguments():
    _, stubs = fresh()
    with pytest.raises(ValueError):
        make_update('Transfer', u1, 1, 0, None, stubs[u1])
    with pytest.raises(ValueError):
        make_update(UpdateKind.DEMAND, u1, 1, 0, None, stubs[u1])
    with pytest.raises(ValueError):
        make_update(UpdateKind.LOCK, u1, 1, 0, 3, stubs[u1])

def test_unlinked_chain():
    state, _ = fresh()
    blocks = linked([[], []])
    try:
        replay_chain([blocks[1]], {1: state})
        assert False
    except InvalidChainException:
        assert True
