'''
Private blockchain carrying the contract updates

Every agent keeps its own ChainView: all blocks it has received, the head of
its canonical chain (longest chain, first-seen head on ties) and a mempool of
updates not yet in that chain. Miners are the DERs themselves and earn no
reward; a block simply takes everything in the miner's mempool.

Proof of work comes in two flavours:
 * abstract: block times come from an exponential race and the pow field is a
   token derived from the header, so runs are fast and reproducible
 * hash: same block times, but the pow field is a real nonce whose header hash
   falls below a fixed target
'''
from dataclasses import dataclass, field
from functools import cached_property
import hashlib
import json
import logging

from microgrid.contract import GENESIS_HASH, apply_update, apply_updates, validate_update


logger = logging.getLogger(__name__)

MAX_BLOCK_UPDATES = 256


@dataclass(frozen=True)
class Block:
    parent_hash: str
    height: int
    miner: object
    timestamp: float
    updates: tuple = field(default=())
    pow: str = ''

    def header(self):
        '''
        Returns the serialized header the pow commits to
        '''
        return json.dumps({
            'parent': self.parent_hash,
            'height': self.height,
            'miner': str(self.miner),
            'timestamp': repr(float(self.timestamp)),
            'updates': [upd.digest for upd in self.updates],
        }, sort_keys=True).encode('utf-8')

    @cached_property
    def hash(self):
        return hashlib.sha256(self.header() + b'|' + self.pow.encode('utf-8')).hexdigest()

    def to_json(self):
        return {
            'height': self.height,
            'hash': self.hash,
            'parent': self.parent_hash,
            'miner': str(self.miner),
            'n_updates': len(self.updates),
            'updates': [upd.to_json() for upd in self.updates],
        }


class AbstractPow:
    '''
    Block timing is drawn from the exponential race; the pow token only binds
    the block to its header
    '''
    name = 'abstract'

    def seal(self, header):
        return 'abstract:' + hashlib.sha256(b'pow|' + header).hexdigest()[:32]

    def check(self, block):
        return block.pow == self.seal(block.header())


class HashPow:
    '''
    Real hash puzzle at a fixed, low difficulty: sha256(header | nonce) must
    start with `difficulty_bits` zero bits
    '''
    name = 'hash'

    def __init__(self, difficulty_bits=8):
        self.difficulty_bits = difficulty_bits
        self.target = 1 << (256 - difficulty_bits)

    def _value(self, header, nonce):
        return int(hashlib.sha256(header + b'|' + str(nonce).encode('utf-8')).hexdigest(), 16)

    def seal(self, header):
        nonce = 0
        while self._value(header, nonce) >= self.target:
            nonce += 1
        return str(nonce)

    def check(self, block):
        return block.pow.isdigit() and self._value(block.header(), int(block.pow)) < self.target


def pow_backend(name, difficulty_bits=8):
    if name == AbstractPow.name:
        return AbstractPow()
    if name == HashPow.name:
        return HashPow(difficulty_bits)
    raise ValueError('unknown mining backend {}'.format(name))


def next_block_delay(rng, agent_rate):
    '''
    Returns the time in seconds until the agent finds its next block

    :param rng: the agent's mining stream
    :param agent_rate: blocks per second of this agent, i.e. p_b / block_period
    '''
    if agent_rate <= 0:
        raise ValueError('agent rate must be positive, got {}'.format(agent_rate))
    return float(rng.exponential(1.0 / agent_rate))


class StateCache:
    '''
    Contract states after each block, keyed by block hash. Replay is a pure
    function of the chain, so agents of one simulation share the cache.
    '''
    def __init__(self, genesis, keyring=None):
        self.keyring = keyring
        self.states = {GENESIS_HASH: dict(genesis)}
        self.heights = {GENESIS_HASH: 0}

    def after(self, block, parent_states):
        states = self.states.get(block.hash)
        if states is None:
            # empty blocks share their parent's states
            states = apply_updates(parent_states, block.updates, self.keyring) if block.updates else parent_states
            self.states[block.hash] = states
            self.heights[block.hash] = block.height
        return states

    def prune(self, below):
        '''
        Drops the states of every block under height `below`; genesis stays.
        Returns the number of entries dropped.
        '''
        stale = [h for h, height in self.heights.items() if 0 < height < below]
        for h in stale:
            del self.states[h]
            del self.heights[h]
        return len(stale)


@dataclass
class TipChange:
    old_tip: str
    new_tip: str
    reorg_depth: int = 0

    @property
    def changed(self):
        return self.old_tip != self.new_tip


class ChainView:
    '''
    One agent's copy of the blockchain
    '''
    def __init__(self, cache, pow=None, max_block_updates=MAX_BLOCK_UPDATES):
        '''
        :param cache: StateCache holding the genesis states
        :param pow: AbstractPow or HashPow
        :param max_block_updates: largest number of updates per block
        '''
        self.cache = cache
        self.pow = pow or AbstractPow()
        self.keyring = cache.keyring
        self.max_block_updates = max_block_updates

        self.blocks = {}
        self.heights = {GENESIS_HASH: 0}
        self.tip = GENESIS_HASH
        self.orphans = {}
        self.mempool = {}
        self.first_seen = {}
        self.sequence = 0
        self.included = {}

        self.children = {}
        self.forks = 0
        self.reorgs = 0
        self.max_reorg_depth = 0
        self.max_mempool = 0

    @property
    def height(self):
        return self.heights[self.tip]

    @property
    def states(self):
        '''
        Contract states of every feeder at the canonical tip
        '''
        return self.states_at(self.tip)

    def state(self, feeder):
        return self.states.get(feeder)

    def states_at(self, block_hash):
        '''
        Returns the contract states after a stored block, replaying from the
        nearest ancestor still held by the cache
        '''
        missing = []
        cursor = block_hash
        while cursor not in self.cache.states:
            missing.append(self.blocks[cursor])
            cursor = self.blocks[cursor].parent_hash
        states = self.cache.states[cursor]
        for block in reversed(missing):
            states = self.cache.after(block, states)
        return states

    def add_update(self, upd):
        '''
        Stores a gossiped update in the mempool unless the canonical chain
        already holds it. Returns True if the mempool grew.
        '''
        digest = upd.digest
        if digest not in self.first_seen:
            self.first_seen[digest] = self.sequence
            self.sequence += 1
        if digest in self.included or digest in self.mempool:
            return False
        self.mempool[digest] = upd
        self.max_mempool = max(self.max_mempool, len(self.mempool))
        return True

    def pending(self):
        '''
        Returns the mempool updates in first-seen order
        '''
        return [self.mempool[d] for d in sorted(self.mempool, key=self.first_seen.__getitem__)]

    def has_pending(self, kind, feeder, period, author=None):
        '''
        Returns True if the mempool holds an update of `kind` for the round of
        `period` on `feeder`, by `author` if given
        '''
        return any(upd.kind == kind and upd.feeder == feeder and upd.period == period
                   and (author is None or upd.author == author)
                   for upd in self.mempool.values())

    def prune(self, depth):
        '''
        Forgets the first-seen rank of updates that are neither pending nor
        carried by the last `depth` blocks of the canonical chain. Returns the
        number of entries dropped.
        '''
        keep = set(self.mempool)
        cursor = self.tip
        for _ in range(depth):
            if cursor == GENESIS_HASH:
                break
            block = self.blocks[cursor]
            keep.update(upd.digest for upd in block.updates)
            cursor = block.parent_hash
        before = len(self.first_seen)
        self.first_seen = {digest: rank for digest, rank in self.first_seen.items() if digest in keep}
        return before - len(self.first_seen)

    def assemble_block(self, miner, now):
        '''
        Returns a sealed block extending the tip with the oldest mempool updates
        '''
        updates = tuple(self.pending()[:self.max_block_updates])
        unsealed = Block(self.tip, self.height + 1, miner, now, updates)
        return Block(self.tip, self.height + 1, miner, now, updates, self.pow.seal(unsealed.header()))

    def verify_block(self, block):
        '''
        Returns True if the block's parent is known, its height follows the
        parent, its updates are authentic and its pow is valid
        '''
        if block.parent_hash not in self.heights:
            return False
        if block.height != self.heights[block.parent_hash] + 1:
            return False
        if self.keyring is not None and not all(self.keyring.verify(upd) for upd in block.updates):
            return False
        return self.pow.check(block)

    def receive_block(self, block):
        '''
        Verifies and stores a block received from the network, buffering it
        if its parent has not arrived yet. Returns the TipChange.
        '''
        change = TipChange(self.tip, self.tip)
        if block.hash in self.heights:
            return change

        if block.parent_hash not in self.heights:
            self.orphans.setdefault(block.parent_hash, []).append(block)
            logger.debug(f'buffering orphan {block.hash[:12]} at height {block.height}')
            return change

        queue = [block]
        while queue:
            current = queue.pop(0)
            if current.hash in self.heights:
                continue
            if not self.verify_block(current):
                logger.debug(f'rejecting invalid block {current.hash[:12]}')
                continue
            step = self.extend_chain(current)
            if step.changed:
                change = TipChange(change.old_tip, step.new_tip, max(change.reorg_depth, step.reorg_depth))
            queue.extend(self.orphans.pop(current.hash, []))
        return change

    def extend_chain(self, block):
        '''
        Stores a verified block and applies the longest-chain rule. On a reorg,
        updates of abandoned blocks that are still valid return to the mempool.
        Returns the TipChange.
        '''
        self.cache.after(block, self.states_at(block.parent_hash))

        if self.children.get(block.parent_hash):
            self.forks += 1
        self.blocks[block.hash] = block
        self.heights[block.hash] = block.height
        self.children.setdefault(block.parent_hash, []).append(block)

        old_tip = self.tip
        if block.height <= self.height:
            return TipChange(old_tip, old_tip)

        abandoned, adopted = self._paths(old_tip, block.hash)
        self.tip = block.hash

        for b in adopted:
            for upd in b.updates:
                self.included[upd.digest] = b.hash
                self.mempool.pop(upd.digest, None)
        for b in abandoned:
            for upd in b.updates:
                if self.included.get(upd.digest) == b.hash:
                    del self.included[upd.digest]

        depth = len(abandoned)
        if depth:
            self.reorgs += 1
            self.max_reorg_depth = max(self.max_reorg_depth, depth)
            logger.debug(f'reorg of depth {depth} to {block.hash[:12]} at height {block.height}')
            # abandoned updates are checked in chain order, each on top of the ones kept before it
            states = dict(self.states)
            for b in reversed(abandoned):
                for upd in b.updates:
                    state = states.get(upd.feeder)
                    if upd.digest in self.included or state is None:
                        continue
                    if validate_update(state, upd, self.keyring).accepted:
                        states[upd.feeder] = apply_update(state, upd)
                        self.add_update(upd)

        return TipChange(old_tip, self.tip, depth)

    def canonical_chain(self):
        '''
        Returns the blocks of the canonical chain, genesis child first
        '''
        chain = []
        cursor = self.tip
        while cursor != GENESIS_HASH:
            block = self.blocks[cursor]
            chain.append(block)
            cursor = block.parent_hash
        chain.reverse()
        return chain

    def sync_from(self, other):
        '''
        Copies every block known to another view, in height order; used when a
        DER joins the network
        '''
        # stable sort keeps arrival order within a height
        for block in sorted(other.blocks.values(), key=lambda b: b.height):
            self.receive_block(block)
        for upd in other.pending():
            self.add_update(upd)

    def _paths(self, old_tip, new_tip):
        '''
        Returns (abandoned, adopted) blocks between the two tips and their
        common ancestor, adopted in chain order
        '''
        abandoned, adopted = [], []
        a, b = old_tip, new_tip
        while self.heights[b] > self.heights[a]:
            adopted.append(self.blocks[b])
            b = self.blocks[b].parent_hash
        while self.heights[a] > self.heights[b]:
            abandoned.append(self.blocks[a])
            a = self.blocks[a].parent_hash
        while a != b:
            abandoned.append(self.blocks[a])
            adopted.append(self.blocks[b])
            a = self.blocks[a].parent_hash
            b = self.blocks[b].parent_hash
        adopted.reverse()
        return abandoned, adopted

    def __repr__(self):
        return 'ChainView(height={}, tip={}, mempool={})'.format(self.height, self.tip[:12], len(self.mempool))
