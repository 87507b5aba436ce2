'''
Communication cost accounting

The simulation counts every link transmission against its sender, per
control window, split by category. Closed-form models give the expected
cost per agent and control period of the blockchain coordination, its
lower bound (one peer, no relaying) and of the centralized authority, so
the measured and modelled costs can be compared.
'''
from collections import defaultdict
import logging
import math

import pandas as pd

from microgrid.contract import UpdateKind
from microgrid.netsim import MessageKind


logger = logging.getLogger(__name__)


class CostCategory:
    OWN_UPDATE = 'own_update'
    OWN_CONTROL = 'own_control'
    RELAY_UPDATE = 'relay_update'
    OWN_BLOCK = 'own_block'
    RELAY_BLOCK = 'relay_block'
    UPLINK = 'uplink'
    DOWNLINK = 'downlink'

    ALL = (OWN_UPDATE, OWN_CONTROL, RELAY_UPDATE, OWN_BLOCK, RELAY_BLOCK, UPLINK, DOWNLINK)
    BLOCKCHAIN = (OWN_UPDATE, OWN_CONTROL, RELAY_UPDATE, OWN_BLOCK, RELAY_BLOCK)


COLUMNS = ['period', 'agent', 'peers'] + ['{}_bits'.format(c) for c in CostCategory.ALL] + \
          ['total_bits', 'analytic_bc', 'analytic_lb', 'analytic_c']


class CostModelParams:
    '''
    Message lengths in bits and the mining figures of the cost models
    '''
    def __init__(self, n_peers=3, l_u=800, l_b=8000, l_w=64, l_c=64, l_mu=64, n_b=90, u_total=24, p_b=None):
        '''
        :param n_peers: N, peers of an agent
        :param l_u: length of a contract update
        :param l_b: length of a block
        :param l_w: length of a demand sent to the authority
        :param l_c: length of a credit status sent by the authority
        :param l_mu: length of a mode command sent by the authority
        :param n_b: blocks per control period
        :param u_total: number of DERs
        :param p_b: probability that a block comes from a given agent, 1/u_total by default
        '''
        for name, value in (('n_peers', n_peers), ('l_u', l_u), ('l_b', l_b), ('l_w', l_w),
                            ('l_c', l_c), ('l_mu', l_mu), ('n_b', n_b), ('u_total', u_total)):
            if value < 0:
                raise ValueError('{} must be non-negative, got {}'.format(name, value))
        self.n_peers = n_peers
        self.l_u = l_u
        self.l_b = l_b
        self.l_w = l_w
        self.l_c = l_c
        self.l_mu = l_mu
        self.n_b = n_b
        self.u_total = u_total
        self.p_b = 1.0 / u_total if p_b is None else p_b
        if not 0 <= self.p_b <= 1:
            raise ValueError('p_b must lie in [0, 1], got {}'.format(self.p_b))

    def with_peers(self, n_peers):
        return CostModelParams(n_peers, self.l_u, self.l_b, self.l_w, self.l_c, self.l_mu,
                               self.n_b, self.u_total, self.p_b)

    def __repr__(self):
        return str(self.__dict__)



def analytic_cost_blockchain(params, j_rc, j_rb):
    '''
    Returns the expected bits an agent sends per control period:
    N L_u + J_rc + p_b N_b N L_b + J_rb

    :param j_rc: bits spent relaying other agents' updates
    :param j_rb: bits spent relaying other agents' blocks
    '''
    n = params.n_peers
    return n * params.l_u + j_rc + params.p_b * params.n_b * n * params.l_b + j_rb


def analytic_cost_lower_bound(params):
    '''
    Returns L_u + N_b L_b / U_total, the cost of an agent with a single peer
    that relays nothing
    '''
    return params.l_u + params.n_b * params.l_b / params.u_total


def analytic_cost_centralized(params):
    '''
    Returns L_w + L_c + L_mu
    '''
    return params.l_w + params.l_c + params.l_mu


def cost_curve(params, u_values):
    '''
    Returns a DataFrame of the lower bound and the centralized cost over a
    range of fleet sizes
    '''
    rows = []
    for u_total in u_values:
        scaled = CostModelParams(params.n_peers, params.l_u, params.l_b, params.l_w, params.l_c,
                                 params.l_mu, params.n_b, u_total)
        rows.append({
            'u_total': int(u_total),
            'analytic_lb': analytic_cost_lower_bound(scaled),
            'analytic_c': analytic_cost_centralized(scaled),
        })
    return pd.DataFrame(rows, columns=['u_total', 'analytic_lb', 'analytic_c'])


class CostCounters:
    '''
    Bits sent per (control window, agent, category). Window w covers
    [w T_tc, (w + 1) T_tc); the warm-up window before t = 0 is -1.
    '''
    def __init__(self, period_length):
        self.period_length = period_length
        self.bits = defaultdict(int)
        self.messages = defaultdict(int)

    def window(self, t):
        return int(math.floor(t / self.period_length))

    def record(self, agent, category, bits, t):
        if bits < 0:
            raise ValueError('cannot record {} bits'.format(bits))
        if category not in CostCategory.ALL:
            raise ValueError('unknown cost category {}'.format(category))
        key = (self.window(t), agent, category)
        self.bits[key] += bits
        self.messages[key] += 1

    def record_transmission(self, sender, msg, t):
        '''
        Records one link transmission of a gossiped message
        '''
        own = sender == msg.origin
        if msg.kind == MessageKind.BLOCK:
            category = CostCategory.OWN_BLOCK if own else CostCategory.RELAY_BLOCK
        elif not own:
            category = CostCategory.RELAY_UPDATE
        elif msg.body.kind == UpdateKind.DEMAND:
            category = CostCategory.OWN_UPDATE
        else:
            category = CostCategory.OWN_CONTROL
        self.record(sender, category, msg.size_bits, t)

    def total(self):
        return sum(self.bits.values())

    def agents(self):
        return sorted({agent for _, agent, _ in self.bits})

    def to_frame(self, periods, agents, joined=None):
        '''
        Returns one row per (period, agent) with the bits of each category,
        zeros included; an agent in `joined` has rows from its join window on
        '''
        joined = joined or {}
        rows = []
        for period in periods:
            for agent in agents:
                if period < joined.get(agent, period):
                    continue
                row = {'period': period, 'agent': str(agent)}
                for category in CostCategory.ALL:
                    row['{}_bits'.format(category)] = self.bits.get((period, agent, category), 0)
                rows.append(row)
        return pd.DataFrame(rows, columns=['period', 'agent'] + ['{}_bits'.format(c) for c in CostCategory.ALL])

    def __repr__(self):
        return 'CostCounters(entries={}, bits={})'.format(len(self.bits), self.total())


def empirical_cost_report(counters, params, periods, agents, degrees=None, joined=None):
    '''
    Returns (DataFrame, summary) comparing measured costs with the models

    Each row carries the measured bits of one agent in one period, and the
    analytic blockchain cost evaluated with the measured relay terms. N is
    the agent's number of peers in the topology.

    :param counters: CostCounters of the run
    :param params: CostModelParams
    :param periods: the control windows to report
    :param agents: all agents that took part
    :param degrees: dict of agent to number of peers; params.n_peers if absent
    :param joined: dict of agent to the first window it took part in
    '''
    periods = list(periods)
    if not periods:
        raise ValueError('cost report needs at least one period')
    degrees = degrees or {}

    frame = counters.to_frame(periods, agents, joined)
    frame['peers'] = frame['agent'].map({str(a): degrees.get(a, params.n_peers) for a in agents})
    frame['total_bits'] = frame[['{}_bits'.format(c) for c in CostCategory.ALL]].sum(axis=1)
    frame['analytic_bc'] = [
        analytic_cost_blockchain(params.with_peers(n), rc, rb)
        for n, rc, rb in zip(frame['peers'], frame['relay_update_bits'], frame['relay_block_bits'])]
    frame['analytic_lb'] = analytic_cost_lower_bound(params)
    frame['analytic_c'] = analytic_cost_centralized(params)
    frame = frame[COLUMNS]

    summary = summarize_costs(frame, params)
    logger.info(f'fleet mean {summary["fleet_mean_bits"]:.1f} bits per agent and period over {len(periods)} periods')
    return frame, summary


def summarize_costs(frame, params):
    '''
    Returns the cost summary of a cost report frame: the measured fleet
    mean, the models, and the relative error of the measured own-update and
    own-block bits against their modelled terms
    '''
    expected_update = frame['peers'] * params.l_u
    expected_block = params.p_b * params.n_b * frame['peers'] * params.l_b
    own_update = frame['own_update_bits']
    own_block = frame['own_block_bits']

    def relative_error(measured, expected):
        if measured.sum() == 0 or expected.sum() == 0:
            return None
        return float(abs(measured.sum() - expected.sum()) / expected.sum())

    return {
        'fleet_mean_bits': float(frame['total_bits'].mean()),
        'min_agent_period_bits': float(frame['total_bits'].min()),
        'mean_own_block_bits': float(own_block.mean()),
        'expected_own_block_bits': float(expected_block.mean()),
        'own_update_rel_error': relative_error(own_update, expected_update),
        'own_block_rel_error': relative_error(own_block, expected_block),
        'analytic_bc_mean': float(frame['analytic_bc'].mean()),
        'analytic_lb': analytic_cost_lower_bound(params),
        'analytic_c': analytic_cost_centralized(params),
    }
