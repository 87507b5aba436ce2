'''
Per-feeder smart contract electing the VSC

The contract runs one round per control period k:

 1. Credit sending: every DER of the feeder sends a Demand, which moves the
    demanded credit from its ledger entry into the contract escrow.
 2. Contract lock: at a fixed instant every DER sends a Lock. The first Lock
    included in the chain closes the round and elects the VSC; later Locks
    of the round are dead.
 3. Credit receiving: the elected DER sends a Withdraw, collecting the escrow.
    The contract then opens the round of period k+1.

The state is never stored; every agent derives it by replaying the updates of
its canonical chain, so equal chains give equal states.
'''
from dataclasses import dataclass, replace
from functools import cached_property
import hashlib
import hmac
import logging

from microgrid.credits import DemandVector, elect_vsc


logger = logging.getLogger(__name__)

# parent of the first block of every chain
GENESIS_HASH = '0' * 64


class UpdateKind:
    DEMAND = 'Demand'
    LOCK = 'Lock'
    WITHDRAW = 'Withdraw'

    ALL = (DEMAND, LOCK, WITHDRAW)


class Phase:
    COLLECTING = 'COLLECTING'
    LOCKED = 'LOCKED'
    SETTLED = 'SETTLED'


class RejectReason:
    WRONG_PHASE = 'WrongPhase'
    WRONG_PERIOD = 'WrongPeriod'
    WRONG_FEEDER = 'WrongFeeder'
    OVERDRAFT = 'Overdraft'
    DUPLICATE_DEMAND = 'DuplicateDemand'
    NOT_ELECTED = 'NotElected'
    BAD_AUTH = 'BadAuth'


class Verdict:
    '''
    Outcome of validate_update: accepted, or rejected with a RejectReason
    '''
    def __init__(self, reason=None):
        self.reason = reason

    @property
    def accepted(self):
        return self.reason is None

    def __bool__(self):
        return self.accepted

    def __eq__(self, other):
        return isinstance(other, Verdict) and self.reason == other.reason

    def __repr__(self):
        return 'accept' if self.accepted else 'reject({})'.format(self.reason)

ACCEPT = Verdict()


@dataclass(frozen=True)
class ContractUpdate:
    kind: str
    author: object
    feeder: int
    period: int
    amount: object
    nonce: int
    auth_tag: str

    def payload(self):
        '''
        Returns the bytes covered by the auth tag
        '''
        amount = '' if self.amount is None else str(self.amount)
        return '|'.join([self.kind, str(self.author), str(self.feeder), str(self.period),
                         amount, str(self.nonce)]).encode('utf-8')

    @cached_property
    def digest(self):
        return hashlib.sha256(self.payload() + b'|' + self.auth_tag.encode('utf-8')).hexdigest()

    def to_json(self):
        return {'kind': self.kind, 'author': str(self.author), 'period': self.period, 'amount': self.amount}


class KeyRing:
    '''
    Stand-in for public-key certification of contract updates: every DER holds
    a pre-shared key derived from the network secret, and an update's auth tag
    is a keyed digest of its fields.
    '''
    def __init__(self, secret):
        self.secret = secret if isinstance(secret, bytes) else str(secret).encode('utf-8')

    def key_for(self, der):
        return hmac.new(self.secret, str(der).encode('utf-8'), hashlib.sha256).digest()

    def stub_for(self, der):
        return KeyStub(der, self.key_for(der))

    def verify(self, update):
        expected = _tag(self.key_for(update.author), update.payload())
        return hmac.compare_digest(expected, update.auth_tag)


class KeyStub:
    '''
    Signing side of one DER: its key and its next nonce
    '''
    def __init__(self, der, key):
        self.der = der
        self.key = key
        self.next_nonce = 0

    def __repr__(self):
        return 'KeyStub({}, nonce={})'.format(self.der, self.next_nonce)


@dataclass(frozen=True)
class ContractState:
    '''
    State of one feeder's contract. `period` is the control period whose round
    is open or locked; `elected` is the VSC of the last locked round and is
    kept after settlement so it can serve as fallback.
    '''
    feeder: int
    period: int
    phase: str
    demands: DemandVector
    elected: object
    escrow: int
    ledger: object

    def elected_for(self, period):
        '''
        Returns the VSC the contract elected for `period`, or None if the
        round of that period is not locked yet in this state
        '''
        if self.period == period and self.phase == Phase.LOCKED:
            return self.elected
        if self.period == period + 1 and self.phase == Phase.COLLECTING and self.elected is not None:
            return self.elected
        return None

    def holdings(self):
        '''
        Returns ledger credits plus escrow, constant for the whole run
        '''
        return sum(self.ledger.entries.values()) + self.escrow



def make_update(kind, author, feeder, period, amount, keystub):
    '''
    Returns a ContractUpdate signed with keystub, consuming its next nonce

    :param amount: credit demanded; required for Demand, None otherwise
    '''
    if kind not in UpdateKind.ALL:
        raise ValueError('unknown update kind {}'.format(kind))
    if (amount is not None) != (kind == UpdateKind.DEMAND):
        raise ValueError('amount must be given for Demand updates only')

    nonce = keystub.next_nonce
    keystub.next_nonce += 1
    unsigned = ContractUpdate(kind, author, feeder, period, amount, nonce, '')
    return replace(unsigned, auth_tag=_tag(keystub.key, unsigned.payload()))


def validate_update(state, upd, keyring=None):
    '''
    Returns the Verdict of applying upd to state

    :param keyring: KeyRing checking the auth tag; None skips the check
    '''
    if keyring is not None and not keyring.verify(upd):
        return Verdict(RejectReason.BAD_AUTH)
    if upd.feeder != state.feeder or upd.author.feeder != state.feeder:
        return Verdict(RejectReason.WRONG_FEEDER)

    if upd.kind == UpdateKind.DEMAND:
        if state.phase != Phase.COLLECTING:
            return Verdict(RejectReason.WRONG_PHASE)
        if upd.period != state.period:
            return Verdict(RejectReason.WRONG_PERIOD)
        if upd.author in state.demands.demands:
            return Verdict(RejectReason.DUPLICATE_DEMAND)
        if upd.amount is None or upd.amount < 0 or upd.amount > state.ledger.get(upd.author):
            return Verdict(RejectReason.OVERDRAFT)
        return ACCEPT

    if upd.kind == UpdateKind.LOCK:
        if state.phase != Phase.COLLECTING:
            return Verdict(RejectReason.WRONG_PHASE)
        if upd.period != state.period:
            return Verdict(RejectReason.WRONG_PERIOD)
        return ACCEPT

    if upd.kind == UpdateKind.WITHDRAW:
        if state.phase != Phase.LOCKED:
            return Verdict(RejectReason.WRONG_PHASE)
        if upd.period != state.period:
            return Verdict(RejectReason.WRONG_PERIOD)
        if upd.author != state.elected:
            return Verdict(RejectReason.NOT_ELECTED)
        return ACCEPT

    return Verdict(RejectReason.WRONG_PHASE)


def apply_update(state, upd):
    '''
    Returns the state after upd; upd must have been accepted by validate_update
    '''
    if upd.kind == UpdateKind.DEMAND:
        ledger = state.ledger.with_der(upd.author)
        entries = dict(ledger.entries)
        entries[upd.author] -= upd.amount
        return replace(state,
                       demands=state.demands.with_demand(upd.author, upd.amount),
                       escrow=state.escrow + upd.amount,
                       ledger=type(ledger)(entries, ledger.total - upd.amount))

    if upd.kind == UpdateKind.LOCK:
        if len(state.demands):
            elected = elect_vsc(state.demands)
        else:
            # nobody demanded: keep the previous VSC
            elected = state.elected if state.elected is not None else min(state.ledger.ders())
        return replace(state, phase=Phase.LOCKED, elected=elected)

    # Withdraw: settle, then open the round of the next period
    ledger = state.ledger.with_der(state.elected)
    entries = dict(ledger.entries)
    entries[state.elected] += state.escrow
    return replace(state,
                   period=state.period + 1,
                   phase=Phase.COLLECTING,
                   demands=DemandVector(state.period + 1),
                   escrow=0,
                   ledger=type(ledger)(entries, ledger.total + state.escrow))


def genesis_states(ledgers, first_period=0):
    '''
    Returns the contract state of every feeder before any update

    :param ledgers: dict of feeder index to its CreditLedger
    '''
    return {feeder: ContractState(feeder, first_period, Phase.COLLECTING, DemandVector(first_period),
                                  None, 0, ledger)
            for feeder, ledger in ledgers.items()}


def apply_updates(states, updates, keyring=None):
    '''
    Returns the states after folding updates in order; invalid updates and
    updates for unknown feeders are skipped
    '''
    result = dict(states)
    for upd in updates:
        state = result.get(upd.feeder)
        if state is None:
            logger.debug(f'skipping update for unknown feeder {upd.feeder}')
            continue
        verdict = validate_update(state, upd, keyring)
        if verdict.accepted:
            result[upd.feeder] = apply_update(state, upd)
        else:
            logger.debug(f'skipping {upd.kind} by {upd.author} for k={upd.period}: {verdict}')
    return result


def replay_chain(blocks, genesis, keyring=None):
    '''
    Returns the contract state of every feeder after replaying the canonical
    chain `blocks` (genesis child first) over the genesis states

    :raises InvalidChainException: if the blocks are not linked
    '''
    states = dict(genesis)
    parent_hash = GENESIS_HASH
    parent_height = 0
    for block in blocks:
        if block.parent_hash != parent_hash or block.height != parent_height + 1:
            raise InvalidChainException('block {} at height {} does not extend {}'.format(
                block.hash[:12], block.height, parent_hash[:12]))
        states = apply_updates(states, block.updates, keyring)
        parent_hash = block.hash
        parent_height = block.height
    return states


def _tag(key, payload):
    return hmac.new(key, payload, hashlib.sha256).hexdigest()



########## Exceptions ##########
class InvalidChainException(Exception):
    pass
