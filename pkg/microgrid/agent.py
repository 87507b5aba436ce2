'''
A DER taking part in the blockchain coordination

The agent keeps its ChainView and signs its own contract updates. It reads
every decision off its local replay of the contract: it demands only once
the round of the period is open, locks only a round that is still
collecting and withdraws only a round that elected itself. After a reorg it
signs again whatever of its own updates the canonical chain lost.
'''
import logging

from microgrid.chain import ChainView, next_block_delay
from microgrid.contract import Phase, UpdateKind, make_update
from microgrid.credits import draw_demand


logger = logging.getLogger(__name__)


class RoundStatus:
    READY = 'ready'
    WAIT = 'wait'
    MISSED = 'missed'


class DerAgent:
    def __init__(self, der, view, keystub, mining_rng, mining_rate):
        '''
        :param der: DerId of the agent
        :param view: the agent's ChainView
        :param keystub: KeyStub signing the agent's updates
        :param mining_rng: numpy Generator of the agent's mining stream
        :param mining_rate: blocks per second found by this agent
        '''
        self.der = der
        self.view = view
        self.keystub = keystub
        self.mining_rng = mining_rng
        self.mining_rate = mining_rate

        self.demanded = {}
        self.locked = set()

    @property
    def feeder(self):
        return self.der.feeder

    def contract(self):
        return self.view.state(self.feeder)

    def round_status(self, period):
        '''
        Returns READY if the local contract collects the round of `period`,
        WAIT if it still runs an earlier round and MISSED if it moved past it
        '''
        state = self.contract()
        if state is None or state.period < period:
            return RoundStatus.WAIT
        if state.period == period and state.phase == Phase.COLLECTING:
            return RoundStatus.READY
        return RoundStatus.MISSED

    def demand(self, period, rng):
        '''
        Returns the signed Demand for `period`, drawn from the settled credit
        of the agent, or None if the round is not open or already demanded
        '''
        if period in self.demanded or self.round_status(period) != RoundStatus.READY:
            return None
        credit = self.contract().ledger.get(self.der)
        amount = draw_demand(credit, rng)
        self.demanded[period] = amount
        return self._sign(UpdateKind.DEMAND, period, amount)

    def lock(self, period):
        '''
        Returns the signed Lock for `period`, or None if the round is not
        collecting or the agent already locked it
        '''
        if period in self.locked or self.round_status(period) != RoundStatus.READY:
            return None
        self.locked.add(period)
        return self._sign(UpdateKind.LOCK, period, None)

    def withdraw(self, now, t_tc):
        '''
        Returns the signed Withdraw collecting the escrow of a locked round
        that elected this agent, once that round's control period started
        '''
        state = self.contract()
        if state is None or state.phase != Phase.LOCKED or state.elected != self.der:
            return None
        if now < state.period * t_tc:
            return None
        if self.view.has_pending(UpdateKind.WITHDRAW, self.feeder, state.period, self.der):
            return None
        return self._sign(UpdateKind.WITHDRAW, state.period, None)

    def resend(self, now, t_tc):
        '''
        Returns the updates the agent signs after its canonical chain changed:
        the Demand and Lock of the open round if the agent sent them before
        and neither the chain nor the mempool holds them any more, and the
        Withdraw of a round that elected the agent
        '''
        state = self.contract()
        if state is None:
            return []
        updates = []
        if state.phase == Phase.COLLECTING:
            period = state.period
            amount = self.demanded.get(period)
            if (amount is not None and self.der not in state.demands.demands
                    and not self.view.has_pending(UpdateKind.DEMAND, self.feeder, period, self.der)):
                amount = min(amount, state.ledger.get(self.der))
                logger.info(f'{self.der} signs its Demand for k={period} again after a reorg')
                updates.append(self._sign(UpdateKind.DEMAND, period, amount))
            if period in self.locked and not self.view.has_pending(UpdateKind.LOCK, self.feeder, period):
                logger.info(f'{self.der} signs its Lock for k={period} again after a reorg')
                updates.append(self._sign(UpdateKind.LOCK, period, None))
        else:
            upd = self.withdraw(now, t_tc)
            if upd is not None:
                updates.append(upd)
        return updates

    def elected_for(self, period):
        state = self.contract()
        return None if state is None else state.elected_for(period)

    def next_wakeup(self, now):
        return now + next_block_delay(self.mining_rng, self.mining_rate)

    def mine(self, now):
        '''
        Returns the block the agent just found, already accepted locally, and
        the TipChange of its view
        '''
        block = self.view.assemble_block(self.der, now)
        return block, self.view.receive_block(block)

    def _sign(self, kind, period, amount):
        upd = make_update(kind, self.der, self.feeder, period, amount, self.keystub)
        self.view.add_update(upd)
        logger.debug(f'{self.der} sends {kind} for k={period}' + ('' if amount is None else f' amount={amount}'))
        return upd

    def __repr__(self):
        return 'DerAgent({}, {})'.format(self.der, self.view)



def make_agent(der, cache, pow, keyring, mining_rng, mining_rate, max_block_updates):
    '''
    Returns a DerAgent with a fresh ChainView on the shared state cache
    '''
    view = ChainView(cache, pow, max_block_updates)
    return DerAgent(der, view, keyring.stub_for(der), mining_rng, mining_rate)
