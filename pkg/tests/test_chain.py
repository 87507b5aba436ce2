import pytest
import numpy as np
from dataclasses import replace
from microgrid.agent import RoundStatus, make_agent
from microgrid.chain import (Block, AbstractPow, HashPow, ChainView, StateCache, pow_backend, next_block_delay,
                             MAX_BLOCK_UPDATES)
from microgrid.contract import GENESIS_HASH, UpdateKind, Phase, KeyRing, make_update, genesis_states, replay_chain
from microgrid.credits import DerId, CreditLedger


u1, u2, u3 = DerId(1, 1), DerId(1, 2), DerId(1, 3)
keyring = KeyRing(b'network-secret')


def setup_module(module):
    print('setup_module      module:%s' % module.__name__)


def new_cache():
    return StateCache(genesis_states({1: CreditLedger({u1: 100, u2: 100, u3: 100})}), keyring)

def demand(der, amount, period=0, stub=None):
    return make_update(UpdateKind.DEMAND, der, 1, period, amount, stub or keyring.stub_for(der))


def test_block_delay_mean():
    rng = np.random.default_rng(1)
    # block_period 10 s shared by 24 miners
    rate = (1 / 24) / 10
    delays = [next_block_delay(rng, rate) for _ in range(100000)]
    assert np.mean(delays) == pytest.approx(240, rel=0.02)
    assert min(delays) > 0

def test_empty_block_is_valid():
    view = ChainView(new_cache())
    block = view.assemble_block(u1, 5.0)
    assert block.updates == ()
    assert block.parent_hash == GENESIS_HASH
    assert view.verify_block(block)
    change = view.receive_block(block)
    assert change.changed
    assert view.height == 1
    assert view.states == view.cache.states[GENESIS_HASH]

def test_block_takes_mempool_in_first_seen_order():
    view = ChainView(new_cache())
    updates = [demand(u2, 3), demand(u1, 4), demand(u3, 5)]
    for upd in updates:
        assert view.add_update(upd)
    assert not view.add_update(updates[0])
    block = view.assemble_block(u1, 1.0)
    assert list(block.updates) == updates
    view.receive_block(block)
    assert view.mempool == {}
    assert not view.add_update(updates[1])
    assert view.state(1).demands.demands == {u2: 3, u1: 4, u3: 5}

def test_block_size_limit():
    view = ChainView(new_cache(), max_block_updates=2)
    updates = [demand(u2, 3), demand(u1, 4), demand(u3, 5)]
    for upd in updates:
        view.add_update(upd)
    block = view.assemble_block(u1, 1.0)
    assert list(block.updates) == updates[:2]
    view.receive_block(block)
    assert view.pending() == updates[2:]
    assert MAX_BLOCK_UPDATES == 256

def test_orphan_buffering():
    miner = ChainView(new_cache())
    first = miner.assemble_block(u1, 1.0)
    miner.receive_block(first)
    second = miner.assemble_block(u1, 2.0)
    miner.receive_block(second)

    view = ChainView(miner.cache)
    change = view.receive_block(second)
    assert not change.changed
    assert view.height == 0
    change = view.receive_block(first)
    assert view.tip == second.hash
    assert change.new_tip == second.hash
    assert view.orphans == {}

def test_fork_tie_keeps_first_seen_and_reorg_restores_updates():
    cache = new_cache()
    view_a, view_b = ChainView(cache), ChainView(cache)
    pending = demand(u3, 7)
    view_a.add_update(pending)
    a1 = view_a.assemble_block(u1, 1.0)
    view_a.receive_block(a1)
    b1 = view_b.assemble_block(u2, 1.5)
    view_b.receive_block(b1)
    b2 = view_b.assemble_block(u2, 2.0)
    view_b.receive_block(b2)

    change = view_a.receive_block(b1)
    assert not change.changed
    assert view_a.tip == a1.hash
    assert view_a.forks == 1

    change = view_a.receive_block(b2)
    assert change.reorg_depth == 1
    assert view_a.tip == b2.hash
    assert view_a.reorgs == 1
    assert pending.digest in view_a.mempool
    assert view_a.state(1).demands.demands == {}

    view_b.receive_block(a1)
    assert view_b.tip == view_a.tip

def test_canonical_chain_replays_to_view_states():
    cache = new_cache()
    view = ChainView(cache)
    stubs = {der: keyring.stub_for(der) for der in (u1, u2, u3)}
    for der, amount in ((u1, 5), (u2, 1), (u3, 9)):
        view.add_update(demand(der, amount, stub=stubs[der]))
        view.receive_block(view.assemble_block(der, 1.0))
    view.add_update(make_update(UpdateKind.LOCK, u3, 1, 0, None, stubs[u3]))
    view.receive_block(view.assemble_block(u3, 2.0))

    chain = view.canonical_chain()
    assert [block.height for block in chain] == [1, 2, 3, 4]
    states = replay_chain(chain, cache.states[GENESIS_HASH], keyring)
    assert states == view.states
    assert view.state(1).phase == Phase.LOCKED
    assert view.state(1).elected == u2

def test_sync_from():
    cache = new_cache()
    source = ChainView(cache)
    for t in range(5):
        source.receive_block(source.assemble_block(u1, float(t)))
    source.add_update(demand(u2, 1))
    joiner = ChainView(cache)
    joiner.sync_from(source)
    assert joiner.tip == source.tip
    assert len(joiner.mempool) == 1

def test_hash_pow():
    pow = HashPow(difficulty_bits=6)
    view = ChainView(new_cache(), pow)
    block = view.assemble_block(u1, 3.0)
    assert pow.check(block)
    assert int(block.hash, 16) >= 0
    assert view.receive_block(block).changed

def test_pow_backend():
    assert isinstance(pow_backend('abstract'), AbstractPow)
    assert pow_backend('hash', 4).difficulty_bits == 4

def test_agent_round_lifecycle():
    cache = new_cache()
    agent = make_agent(u1, cache, AbstractPow(), keyring, np.random.default_rng(0), 0.01, 256)
    assert agent.round_status(0) == RoundStatus.READY
    assert agent.round_status(1) == RoundStatus.WAIT
    upd = agent.demand(0, np.random.default_rng(3))
    assert upd.kind == UpdateKind.DEMAND and 0 <= upd.amount <= 100
    assert agent.demand(0, np.random.default_rng(3)) is None
    assert agent.lock(0).kind == UpdateKind.LOCK
    assert agent.lock(0) is None

    block, change = agent.mine(10.0)
    assert change.new_tip == block.hash
    assert agent.elected_for(0) == u1
    assert agent.round_status(0) == RoundStatus.MISSED
    # the round of period 0 is collected before t = 0
    assert agent.withdraw(-5.0, 900) is None
    withdraw = agent.withdraw(0.0, 900)
    assert withdraw.kind == UpdateKind.WITHDRAW
    agent.mine(20.0)
    assert agent.contract().period == 1
    assert agent.contract().ledger.get(u1) == 100
    assert agent.next_wakeup(20.0) > 20.0

def test_reorg_keeps_lock_and_withdraw_together():
    cache = new_cache()
    agent = make_agent(u1, cache, AbstractPow(), keyring, np.random.default_rng(0), 0.01, 256)
    agent.demand(0, np.random.default_rng(3))
    agent.lock(0)
    agent.mine(10.0)
    agent.withdraw(0.0, 900)
    agent.mine(20.0)
    assert agent.contract().period == 1

    rival = ChainView(cache)
    blocks = []
    for t in (11.0, 21.0, 31.0):
        blocks.append(rival.assemble_block(u2, t))
        rival.receive_block(blocks[-1])
    for block in blocks:
        agent.view.receive_block(block)
    assert agent.view.tip == blocks[-1].hash
    assert agent.view.max_reorg_depth == 2
    assert agent.contract().phase == Phase.COLLECTING
    assert agent.contract().period == 0
    assert [upd.kind for upd in agent.view.pending()] == [UpdateKind.DEMAND, UpdateKind.LOCK, UpdateKind.WITHDRAW]

    agent.mine(40.0)
    state = agent.contract()
    assert state.period == 1 and state.phase == Phase.COLLECTING
    assert state.escrow == 0
    assert state.ledger.get(u1) == 100
    assert agent.resend(40.0, 900) == []

def test_agent_signs_lost_withdraw_again():
    agent = make_agent(u1, new_cache(), AbstractPow(), keyring, np.random.default_rng(0), 0.01, 256)
    agent.demand(0, np.random.default_rng(3))
    agent.lock(0)
    agent.mine(10.0)
    first = agent.withdraw(0.0, 900)
    assert agent.withdraw(0.0, 900) is None
    assert agent.resend(0.0, 900) == []

    agent.view.mempool.clear()
    updates = agent.resend(0.0, 900)
    assert [upd.kind for upd in updates] == [UpdateKind.WITHDRAW]
    assert updates[0].digest != first.digest
    agent.mine(20.0)
    assert agent.contract().period == 1
    assert agent.contract().escrow == 0

def test_agent_signs_lost_demand_and_lock_again():
    agent = make_agent(u1, new_cache(), AbstractPow(), keyring, np.random.default_rng(0), 0.01, 256)
    amount = agent.demand(0, np.random.default_rng(3)).amount
    agent.lock(0)
    agent.view.mempool.clear()

    updates = agent.resend(-100.0, 900)
    assert [upd.kind for upd in updates] == [UpdateKind.DEMAND, UpdateKind.LOCK]
    assert updates[0].amount == amount
    assert agent.resend(-100.0, 900) == []
    agent.mine(-50.0)
    assert agent.contract().phase == Phase.LOCKED
    assert agent.contract().demands.demands == {u1: amount}

def test_agent_without_updates_resends_nothing():
    agent = make_agent(u2, new_cache(), AbstractPow(), keyring, np.random.default_rng(0), 0.01, 256)
    assert agent.resend(0.0, 900) == []

def test_pruned_states_are_replayed():
    cache = new_cache()
    view = ChainView(cache)
    stubs = {der: keyring.stub_for(der) for der in (u1, u2)}
    view.add_update(demand(u1, 5, stub=stubs[u1]))
    view.receive_block(view.assemble_block(u1, 1.0))
    view.add_update(demand(u2, 2, stub=stubs[u2]))
    for t in range(2, 6):
        view.receive_block(view.assemble_block(u1, float(t)))
    expected = view.states

    assert cache.prune(view.height + 1) == 5
    assert list(cache.states) == [GENESIS_HASH]
    assert view.states == expected
    assert view.state(1).demands.demands == {u1: 5, u2: 2}
    view.receive_block(view.assemble_block(u1, 9.0))
    assert view.height == 6

def test_prune_first_seen():
    view = ChainView(new_cache())
    old, recent, pending = demand(u1, 1), demand(u2, 1), demand(u3, 1)
    view.add_update(old)
    view.receive_block(view.assemble_block(u1, 1.0))
    view.add_update(recent)
    view.receive_block(view.assemble_block(u1, 2.0))
    view.add_update(pending)

    assert view.prune(1) == 1
    assert set(view.first_seen) == {recent.digest, pending.digest}
    assert view.pending() == [pending]
    assert not view.add_update(old)
    assert view.first_seen[old.digest] > view.first_seen[pending.digest]



############## Negative Testing ##############

def test_tampered_block_rejected():
    view = ChainView(new_cache())
    view.add_update(demand(u1, 5))
    block = view.assemble_block(u1, 1.0)
    forged = replace(block, updates=(replace(block.updates[0], amount=0),))
    assert not view.verify_block(forged)
    assert not view.receive_block(forged).changed
    assert view.height == 0

def test_bad_pow_rejected():
    view = ChainView(new_cache())
    block = replace(view.assemble_block(u1, 1.0), pow='abstract:00')
    assert not view.verify_block(block)

def test_wrong_height_rejected():
    view = ChainView(new_cache())
    block = view.assemble_block(u1, 1.0)
    sealer = AbstractPow()
    unsealed = Block(GENESIS_HASH, 2, u1, 1.0)
    assert not view.verify_block(replace(unsealed, pow=sealer.seal(unsealed.header())))
    assert view.verify_block(block)

def test_bad_block_rate():
    with pytest.raises(ValueError):
        next_block_delay(np.random.default_rng(0), 0)

def test_unknown_pow_backend():
    try:
        pow_backend('stake')
        assert False
    except ValueError:
        assert True
