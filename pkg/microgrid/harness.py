'''
Runs a scenario in one of three coordination modes

 * centralized: an authority collects every DER's demand, elects the VSC of
   each feeder and sends back modes and credit status
 * blockchain: every DER runs the contract through the private blockchain,
   exchanging updates and blocks with its peers over the simulated network
 * no_control: every DER runs as CSC at capacity

Every mode steps the grid at the same instants and records, for each
instant, the voltage with the elected VSCs and the voltage the grid would
have without control. The RunReport is computed from those traces only, so
it can be rebuilt from the emitted files.
'''
import logging
import math

import pandas as pd

from microgrid import streams
from microgrid.agent import RoundStatus, make_agent
from microgrid.chain import StateCache, pow_backend
from microgrid.config import Modes
from microgrid.contract import KeyRing, Phase, genesis_states
from microgrid.costs import (COLUMNS as COST_COLUMNS, CostCategory, CostCounters, cost_curve,
                             empirical_cost_report, summarize_costs)
from microgrid.credits import (ControlHistory, DemandVector, DerId, draw_demand, elect_vsc,
                               fairness_gap, initial_ledger, settle_credits)
from microgrid.grid import SECONDS_PER_DAY, DerUnit, Mode, build_feeders, step_grid
from microgrid.netsim import (ControlPhase, Deliver, EventQueue, GossipNetwork, GridStep, Message,
                              MessageKind, MineWakeup, build_topology)


logger = logging.getLogger(__name__)

VOLTAGE_COLUMNS = ['time', 'feeder', 'voltage_pu', 'voltage_no_control_pu', 'vsc', 'curtailment_kw', 'saturated']
ELECTION_COLUMNS = ['period', 'feeder', 'elected', 'ders', 'demands', 'desync']
DAILY_COLUMNS = ['day', 'feeder', 'trace', 'min', 'q1', 'median', 'q3', 'max']

# fleet sizes of the analytic cost curve
COST_CURVE_SIZES = range(4, 41)


class Phases:
    DEMAND = 'demand'
    LOCK = 'lock'
    BOUNDARY = 'boundary'
    JOIN = 'join'


class GridRecorder:
    '''
    Steps the grid with and without control at every grid timestep and
    collects the voltage trace
    '''
    def __init__(self, scenario):
        self.scenario = scenario
        self.params = scenario.droop_params()
        self.profile = scenario.profile_params()
        grid = scenario.grid
        self.feeders = build_feeders(scenario.ders_per_feeder, scenario.alphas(), self.der_unit,
                                     scenario.households, grid['household_base'], grid['v_pcc'])
        self.rows = []
        self._clear_sky = {}

    def der_unit(self, feeder, unit):
        grid = self.scenario.grid
        return DerUnit(DerId(feeder, unit), grid['rated'], grid['s_max'])

    def next_der(self, feeder):
        '''
        Returns the DerId the next DER joining `feeder` gets
        '''
        return DerId(feeder, len(self.feeders[feeder - 1].ders) + 1)

    def add_der(self, der):
        index = der.feeder - 1
        self.feeders[index] = self.feeders[index].with_der(self.der_unit(der.feeder, der.unit))

    def clear_sky(self, day):
        '''
        Returns the PV scaling of a day; the first day is clear
        '''
        if day not in self._clear_sky:
            if day == 0:
                self._clear_sky[day] = 1.0
            else:
                rng = streams.fork(self.scenario.seed, streams.WEATHER, day)
                self._clear_sky[day] = float(rng.uniform(self.scenario.grid['clear_sky_min'], 1.0))
        return self._clear_sky[day]

    def step(self, t, vscs):
        '''
        :param vscs: dict of feeder index to the DerId acting as VSC
        '''
        clear_sky = self.clear_sky(int(t // SECONDS_PER_DAY))
        modes = {der: Mode.VSC for der in vscs.values()}
        controlled = step_grid(self.feeders, modes, t, self.params, self.profile, clear_sky)
        free = step_grid(self.feeders, {}, t, self.params, self.profile, clear_sky) if modes else controlled

        for feeder in self.feeders:
            der = vscs.get(feeder.index)
            unit = controlled.ders.get(der)
            self.rows.append({
                'time': t,
                'feeder': feeder.index,
                'voltage_pu': controlled.voltages[feeder.index],
                'voltage_no_control_pu': free.voltages[feeder.index],
                'vsc': '' if der is None else str(der),
                'curtailment_kw': 0.0 if unit is None else unit.g - unit.p,
                'saturated': int(feeder.index in controlled.saturated),
            })

    def frame(self):
        return pd.DataFrame(self.rows, columns=VOLTAGE_COLUMNS)


class RunReport:
    '''
    Outcome of a run, computed from its traces

    :ivar voltage: voltage trace, one row per grid timestep and feeder
    :ivar elections: one row per control period and feeder with a VSC
    :ivar costs: cost report, one row per control period and agent
    '''
    def __init__(self, scenario, voltage, elections, costs, chain_dump=(), chain_stats=None):
        self.scenario = scenario
        self.mode = scenario.mode
        self.seed = scenario.seed
        self.voltage = voltage
        self.elections = elections
        self.costs = costs
        self.cost_curve = cost_curve(scenario.cost_params(), COST_CURVE_SIZES)
        self.chain_dump = list(chain_dump)
        self.chain_stats = dict(chain_stats or {})

        grid = scenario.grid
        minutes = scenario.grid_step / 60.0
        controlled = voltage['voltage_pu']
        free = voltage['voltage_no_control_pu']

        self.fairness = fairness_by_feeder(elections)
        self.desyncs = int(elections['desync'].sum()) if len(elections) else 0
        self.overvoltage_minutes = float((controlled > grid['v_max']).sum() * minutes)
        self.overvoltage_minutes_no_control = float((free > grid['v_max']).sum() * minutes)
        self.undervoltage_minutes = float((controlled < grid['v_min']).sum() * minutes)
        self.undervoltage_minutes_no_control = float((free < grid['v_min']).sum() * minutes)
        self.overvoltage_by_feeder = {
            str(feeder): float((group['voltage_pu'] > grid['v_max']).sum() * minutes)
            for feeder, group in voltage.groupby('feeder')}
        self.daily_stats = daily_voltage_stats(voltage)
        self.ramp = voltage_ramp(voltage, scenario.profile_params(), 'voltage_pu')
        self.ramp_no_control = voltage_ramp(voltage, scenario.profile_params(), 'voltage_no_control_pu')
        self.cost_summary = summarize_costs(costs, scenario.cost_params()) if len(costs) else {}

    def elected_table(self):
        '''
        Returns the elected VSC per period (rows) and feeder (columns)
        '''
        return self.elections.pivot(index='period', columns='feeder', values='elected')

    def max_fairness_gap(self):
        return max(self.fairness.values()) if self.fairness else None

    def summary(self):
        return {
            'mode': self.mode,
            'seed': self.seed,
            'periods': self.scenario.periods,
            'u_total': self.scenario.u_total,
            'fairness_gap': self.fairness,
            'max_fairness_gap': self.max_fairness_gap(),
            'desyncs': self.desyncs,
            'overvoltage_minutes': self.overvoltage_minutes,
            'overvoltage_minutes_no_control': self.overvoltage_minutes_no_control,
            'overvoltage_minutes_by_feeder': self.overvoltage_by_feeder,
            'undervoltage_minutes': self.undervoltage_minutes,
            'undervoltage_minutes_no_control': self.undervoltage_minutes_no_control,
            'max_voltage': float(self.voltage['voltage_pu'].max()),
            'max_voltage_no_control': float(self.voltage['voltage_no_control_pu'].max()),
            'voltage_ramp': self.ramp,
            'voltage_ramp_no_control': self.ramp_no_control,
            'costs': self.cost_summary,
            'chain': self.chain_stats,
        }

    def __repr__(self):
        return 'RunReport(mode={}, seed={}, max_fairness_gap={}, desyncs={})'.format(
            self.mode, self.seed, self.max_fairness_gap(), self.desyncs)



def fairness_by_feeder(elections):
    '''
    Returns the fairness gap of every feeder of an election trace
    '''
    gaps = {}
    for feeder, group in elections.groupby('feeder', sort=True):
        ders = set()
        for listed in group['ders']:
            ders.update(DerId.parse(d) for d in str(listed).split(';') if d)
        history = ControlHistory(int(feeder), ders, [DerId.parse(e) for e in group['elected']])
        gaps[str(feeder)] = fairness_gap(history)
    return gaps


def daily_voltage_stats(voltage):
    '''
    Returns min, quartiles and max of the voltage per day and feeder, for
    the controlled and the uncontrolled trace
    '''
    frame = voltage.assign(day=(voltage['time'] // SECONDS_PER_DAY).astype(int))
    rows = []
    for (day, feeder), group in frame.groupby(['day', 'feeder'], sort=True):
        for trace, column in (('control', 'voltage_pu'), ('no_control', 'voltage_no_control_pu')):
            q = group[column].quantile([0.0, 0.25, 0.5, 0.75, 1.0]).tolist()
            rows.append({'day': int(day), 'feeder': int(feeder), 'trace': trace,
                         'min': q[0], 'q1': q[1], 'median': q[2], 'q3': q[3], 'max': q[4]})
    return pd.DataFrame(rows, columns=DAILY_COLUMNS)


def voltage_ramp(voltage, profile, column):
    '''
    Returns the mean absolute voltage change between consecutive timesteps of
    a feeder, over the timesteps where PV produces
    '''
    time_of_day = voltage['time'] % SECONDS_PER_DAY
    sunny = (time_of_day > profile.sunrise) & (time_of_day < profile.sunset)
    steps = voltage.sort_values(['feeder', 'time']).groupby('feeder')[column].diff().abs()
    steps = steps[sunny.reindex(steps.index) & steps.notna()]
    return float(steps.mean()) if len(steps) else 0.0


def build_report(scenario, voltage, elections, costs, chain_dump=(), chain_stats=None):
    return RunReport(scenario, voltage, elections, costs, chain_dump, chain_stats)


def initial_ledgers(scenario):
    '''
    Returns the initial CreditLedger of every feeder
    '''
    ledgers = {}
    for feeder, count in enumerate(scenario.ders_per_feeder, start=1):
        ders = [DerId(feeder, unit) for unit in range(1, count + 1)]
        rng = streams.fork(scenario.seed, streams.LEDGER, feeder)
        ledgers[feeder] = initial_ledger(ders, scenario.credit_per_der, rng)
    return ledgers


def demand_stream(scenario, der, period):
    return streams.fork(scenario.seed, streams.DEMAND, der.feeder, der.unit, period)


def election_row(period, feeder, elected, ders, demands, desync=False):
    return {
        'period': period,
        'feeder': feeder,
        'elected': str(elected),
        'ders': ';'.join(str(der) for der in sorted(ders)),
        'demands': ';'.join('{}:{}'.format(der, amount) for der, amount in sorted(demands.items())),
        'desync': int(desync),
    }


def _joins_by_period(scenario):
    joins = {}
    for period, feeder in scenario.joins:
        joins.setdefault(period, []).append(feeder)
    return joins


def _require_mode(scenario, mode):
    if scenario.mode != mode:
        raise ValueError('scenario mode is {}, expected {}'.format(scenario.mode, mode))


def _step_period(recorder, scenario, period, vscs, step_index):
    '''
    Steps the grid over control period `period`; returns the next step index
    '''
    end = (period + 1) * scenario.t_tc
    while step_index * scenario.grid_step < end:
        recorder.step(step_index * scenario.grid_step, vscs)
        step_index += 1
    return step_index


def run_no_control(scenario):
    '''
    Runs every DER as CSC at capacity over the whole scenario
    '''
    _require_mode(scenario, Modes.NO_CONTROL)
    logger.info(f'running without control: K={scenario.periods} seed={scenario.seed}')

    recorder = GridRecorder(scenario)
    joins = _joins_by_period(scenario)
    step_index = 0
    for period in range(scenario.periods):
        for feeder in joins.get(period, ()):
            recorder.add_der(recorder.next_der(feeder))
        step_index = _step_period(recorder, scenario, period, {}, step_index)

    return build_report(scenario, recorder.frame(), pd.DataFrame(columns=ELECTION_COLUMNS),
                        pd.DataFrame(columns=COST_COLUMNS))


def run_centralized(scenario):
    '''
    Runs the central authority: every period it collects one demand per DER,
    elects the VSC of each feeder and settles the credits
    '''
    _require_mode(scenario, Modes.CENTRALIZED)
    logger.info(f'running centralized: K={scenario.periods} U_total={scenario.u_total} seed={scenario.seed}')

    params = scenario.cost_params()
    recorder = GridRecorder(scenario)
    counters = CostCounters(scenario.t_tc)
    ledgers = initial_ledgers(scenario)
    joins = _joins_by_period(scenario)
    agents = [der for ledger in ledgers.values() for der in ledger.ders()]
    joined = {}
    elections = []
    vscs = {}
    step_index = 0

    for period in range(scenario.periods):
        t = period * scenario.t_tc
        for feeder, ledger in ledgers.items():
            if not ledger.ders():
                continue
            demands = DemandVector(period)
            for der in ledger.ders():
                demands = demands.with_demand(der, draw_demand(ledger.get(der), demand_stream(scenario, der, period)))
                counters.record(der, CostCategory.UPLINK, params.l_w, t)
            elected = elect_vsc(demands)
            ledgers[feeder] = settle_credits(ledger, demands, elected)
            for der in ledger.ders():
                counters.record(der, CostCategory.DOWNLINK, params.l_mu + params.l_c, t)
            vscs[feeder] = elected
            elections.append(election_row(period, feeder, elected, ledger.ders(), demands.demands))

        for feeder in joins.get(period, ()):
            der = recorder.next_der(feeder)
            recorder.add_der(der)
            ledgers[feeder] = ledgers[feeder].with_der(der)
            agents.append(der)
            joined[der] = period + 1
            logger.info(f'DER {der} joined at period {period}')

        step_index = _step_period(recorder, scenario, period, vscs, step_index)

    costs, _ = empirical_cost_report(counters, params, range(scenario.periods), agents, joined=joined)
    return build_report(scenario, recorder.frame(), pd.DataFrame(elections, columns=ELECTION_COLUMNS), costs)


class BlockchainSimulation:
    '''
    Event-driven run of the blockchain coordination

    The round of control period k is collected during [(k-1) T, k T), so the
    simulation starts one period early. Demands are sent at jittered instants
    of the window, Locks at the lock instant, and at k T every agent reads the
    elected VSC off its own chain. The elected agent then withdraws the escrow.
    '''
    def __init__(self, scenario):
        _require_mode(scenario, Modes.BLOCKCHAIN)
        self.scenario = scenario
        self.seed = scenario.seed
        self.t_tc = scenario.t_tc
        self.end = scenario.periods * self.t_tc
        self.params = scenario.cost_params()

        chain = scenario.chain
        network = scenario.network
        self.recorder = GridRecorder(scenario)
        self.counters = CostCounters(self.t_tc)
        self.queue = EventQueue(start=-self.t_tc)
        self.keyring = KeyRing(streams.fork(self.seed, streams.KEYS).bytes(32))
        ledgers = initial_ledgers(scenario)
        self.cache = StateCache(genesis_states(ledgers), self.keyring)
        self.pow = pow_backend(chain['pow'], chain['difficulty_bits'])
        # aggregate rate of the initial fleet is one block per block period
        self.mining_rate = 1.0 / (scenario.u_total * scenario.block_period)

        self.agents = {}
        self.member_since = {}
        self.joined = {}
        for feeder, ledger in sorted(ledgers.items()):
            for der in ledger.ders():
                self.agents[der] = self._new_agent(der)
                self.member_since[der] = 0
        self.reference = min(self.agents)

        self.topology = build_topology(list(self.agents), network['n_peers'],
                                       streams.fork(self.seed, streams.TOPOLOGY), network['max_attempts'])
        self.network = GossipNetwork(self.topology, streams.fork(self.seed, streams.LATENCY),
                                     network['lat_min'], network['lat_max'], self.counters.record_transmission)
        logger.info(f'{self.topology}')

        self.vscs = {}
        self.elections = []
        self.desyncs = 0
        self.step_index = 0

    def run(self):
        logger.info(f'running blockchain: K={self.scenario.periods} U_total={self.scenario.u_total} '
                    f'seed={self.seed} pow={self.pow.name}')
        for period, feeder in self.scenario.joins:
            self.queue.schedule(period * self.t_tc, ControlPhase(feeder, Phases.JOIN, period))
        self.queue.schedule(0.0, ControlPhase(0, Phases.BOUNDARY, 0))
        self.queue.schedule(0.0, GridStep(0.0))
        self._schedule_window(0)
        for der in sorted(self.agents):
            self.queue.schedule(self.agents[der].next_wakeup(self.queue.now), MineWakeup(der))

        while True:
            event = self.queue.pop_next()
            if event.time >= self.end:
                break
            self._dispatch(event.payload)

        return self._report()

    def feeder_agents(self, feeder):
        return [self.agents[der] for der in sorted(self.agents) if der.feeder == feeder]

    def _new_agent(self, der):
        chain = self.scenario.chain
        rng = streams.fork(self.seed, streams.MINING, der.feeder, der.unit)
        return make_agent(der, self.cache, self.pow, self.keyring, rng, self.mining_rate, chain['max_block_updates'])

    def _dispatch(self, payload):
        if isinstance(payload, Deliver):
            self._on_deliver(payload)
        elif isinstance(payload, MineWakeup):
            self._on_mine(payload.agent)
        elif isinstance(payload, GridStep):
            self._on_grid_step()
        elif payload.phase == Phases.DEMAND:
            self._on_demand(payload)
        elif payload.phase == Phases.LOCK:
            self._on_lock(payload)
        elif payload.phase == Phases.BOUNDARY:
            self._on_boundary(payload.period)
        elif payload.phase == Phases.JOIN:
            self._on_join(payload.feeder, payload.period)

    def _schedule_window(self, period):
        '''
        Schedules the Demand and Lock timers of every member for the round
        of `period`
        '''
        start = (period - 1) * self.t_tc
        lock_offset = self.scenario.lock_offset()
        spread = lock_offset - self.scenario.lock_guard
        for der in sorted(self.agents):
            jitter = streams.fork(self.seed, streams.JITTER, der.feeder, der.unit, period).uniform(0.0, spread)
            self.queue.schedule(start + jitter, ControlPhase(der.feeder, Phases.DEMAND, period, der))
            self.queue.schedule(start + lock_offset, ControlPhase(der.feeder, Phases.LOCK, period, der))

    def _send(self, agent, upd):
        self.network.broadcast(Message(MessageKind.UPDATE, upd, self.params.l_u, agent.der), self.queue)

    def _poll(self, agent):
        for upd in agent.resend(self.queue.now, self.t_tc):
            self._send(agent, upd)

    def _prune(self):
        '''
        Drops the gossip and chain bookkeeping no reorg or flood can reach
        any more
        '''
        depth = math.ceil(2 * self.scenario.blocks_per_period())
        views = [agent.view for agent in self.agents.values()]
        dropped = self.network.prune(self.queue.now - self.t_tc)
        dropped += sum(view.prune(depth) for view in views)
        dropped += self.cache.prune(min(view.height for view in views) - depth)
        logger.debug(f'pruned {dropped} entries at t={self.queue.now}')

    def _on_deliver(self, deliver):
        if not self.network.accept(deliver, self.queue):
            return
        agent = self.agents[deliver.to]
        if deliver.msg.kind == MessageKind.UPDATE:
            agent.view.add_update(deliver.msg.body)
        elif agent.view.receive_block(deliver.msg.body).changed:
            self._poll(agent)

    def _on_mine(self, der):
        agent = self.agents[der]
        block, change = agent.mine(self.queue.now)
        self.network.broadcast(Message(MessageKind.BLOCK, block, self.params.l_b, der), self.queue)
        if change.changed:
            self._poll(agent)
        self.queue.schedule(agent.next_wakeup(self.queue.now), MineWakeup(der))

    def _on_demand(self, phase):
        agent = self.agents[phase.agent]
        status = agent.round_status(phase.period)
        if status == RoundStatus.READY:
            upd = agent.demand(phase.period, demand_stream(self.scenario, agent.der, phase.period))
            if upd is not None:
                self._send(agent, upd)
        elif status == RoundStatus.WAIT:
            retry = self.queue.now + self.scenario.block_period
            if retry < (phase.period - 1) * self.t_tc + self.scenario.lock_offset():
                self.queue.schedule(retry, phase)
            else:
                logger.warning(f'{agent.der} gives up its demand for k={phase.period}: round never opened')
        else:
            logger.warning(f'{agent.der} missed the round of k={phase.period}')

    def _on_lock(self, phase):
        agent = self.agents[phase.agent]
        status = agent.round_status(phase.period)
        if status == RoundStatus.READY:
            upd = agent.lock(phase.period)
            if upd is not None:
                self._send(agent, upd)
        elif status == RoundStatus.WAIT:
            retry = self.queue.now + self.scenario.block_period
            if retry < phase.period * self.t_tc:
                self.queue.schedule(retry, phase)
            else:
                logger.warning(f'{agent.der} cannot lock k={phase.period} before its control period')

    def _on_boundary(self, period):
        '''
        Actuates control period `period`: every agent of a feeder reads the
        elected VSC from its own chain; the previous VSC stays on if they do
        not all agree
        '''
        for feeder in sorted({der.feeder for der in self.agents}):
            agents = [a for a in self.feeder_agents(feeder) if self.member_since[a.der] <= period]
            members = [a.der for a in agents]
            if not members:
                continue
            readings = {agent.elected_for(period) for agent in agents}
            reference = agents[0].contract()

            if len(readings) == 1 and None not in readings:
                elected = readings.pop()
                desync = False
            else:
                elected = self.vscs.get(feeder, min(members))
                desync = True
                self.desyncs += 1
                logger.warning(f'DesyncDetected on feeder {feeder} at k={period}: agents read '
                               f'{sorted(str(r) for r in readings)}, keeping {elected}')
                if self.desyncs > self.scenario.desync_budget:
                    raise DesyncBudgetExceeded('{} desyncs exceed the budget of {}'.format(
                        self.desyncs, self.scenario.desync_budget))

            locked = reference.period == period and reference.phase == Phase.LOCKED
            demands = reference.demands.demands if locked else {}
            self.vscs[feeder] = elected
            self.elections.append(election_row(period, feeder, elected, members, demands, desync))

        for der in sorted(self.agents):
            self._poll(self.agents[der])
        self._prune()

        if period + 1 < self.scenario.periods:
            self._schedule_window(period + 1)
            self.queue.schedule((period + 1) * self.t_tc, ControlPhase(0, Phases.BOUNDARY, period + 1))

    def _on_join(self, feeder, period):
        '''
        Brings a new DER online: zero credit, N random links, a chain copied
        from a peer and a PV unit on its feeder
        '''
        der = self.recorder.next_der(feeder)
        agent = self._new_agent(der)
        rng = streams.fork(self.seed, streams.TOPOLOGY, der.feeder, der.unit)
        self.topology.join(der, self.scenario.network['n_peers'], rng)
        agent.view.sync_from(self.agents[self.topology.neighbours(der)[0]].view)

        self.agents[der] = agent
        self.member_since[der] = period + 1
        self.joined[der] = period
        self.recorder.add_der(der)
        self.queue.schedule(agent.next_wakeup(self.queue.now), MineWakeup(der))
        logger.info(f'DER {der} joined at period {period} with peers {[str(p) for p in self.topology.neighbours(der)]}')

    def _on_grid_step(self):
        self.recorder.step(self.step_index * self.scenario.grid_step, self.vscs)
        self.step_index += 1
        t = self.step_index * self.scenario.grid_step
        if t < self.end:
            self.queue.schedule(t, GridStep(t))

    def chain_stats(self):
        view = self.agents[self.reference].view
        views = [agent.view for agent in self.agents.values()]
        return {
            'blocks': view.height,
            'stale_blocks': len(view.blocks) - view.height,
            'forks': view.forks,
            'reorgs': view.reorgs,
            'max_reorg_depth': max(v.max_reorg_depth for v in views),
            'max_mempool': max(v.max_mempool for v in views),
            'tips_agree': len({v.tip for v in views}) == 1,
            'duplicates': self.network.duplicates,
        }

    def _report(self):
        agents = sorted(self.agents)
        degrees = {der: self.topology.degree(der) for der in agents}
        costs, _ = empirical_cost_report(self.counters, self.params, range(self.scenario.periods), agents,
                                         degrees, self.joined)
        stats = self.chain_stats()
        logger.info(f'chain height {stats["blocks"]}, {stats["stale_blocks"]} stale blocks, '
                    f'{stats["reorgs"]} reorgs, {self.desyncs} desyncs')
        chain_dump = [block.to_json() for block in self.agents[self.reference].view.canonical_chain()]
        return build_report(self.scenario, self.recorder.frame(),
                            pd.DataFrame(self.elections, columns=ELECTION_COLUMNS), costs, chain_dump, stats)


def run_blockchain(scenario):
    '''
    Runs the blockchain coordination of the scenario
    '''
    return BlockchainSimulation(scenario).run()


def run(scenario):
    '''
    Runs the scenario in its configured mode and returns the RunReport
    '''
    runners = {
        Modes.CENTRALIZED: run_centralized,
        Modes.BLOCKCHAIN: run_blockchain,
        Modes.NO_CONTROL: run_no_control,
    }
    report = runners[scenario.mode](scenario)
    logger.info(f'{report}')
    return report



########## Exceptions ##########
class DesyncBudgetExceeded(Exception):
    pass
