'''
Discrete-event kernel and peer-to-peer gossip layer

Events are ordered by (time, seq); seq is a global counter so events at the
same instant pop in the order they were scheduled. The network floods two
message kinds over a random connected topology: contract updates and blocks.
Each agent forwards a message the first time it sees it, to every peer but
the one it came from; later copies are dropped.
'''
from dataclasses import dataclass, field
import heapq
import itertools
import logging

import networkx as nx


logger = logging.getLogger(__name__)


class MessageKind:
    UPDATE = 'UpdateMsg'
    BLOCK = 'BlockMsg'


@dataclass(frozen=True)
class Message:
    kind: str
    body: object
    size_bits: int
    origin: object

    @property
    def digest(self):
        return self.body.digest if self.kind == MessageKind.UPDATE else self.body.hash


@dataclass(frozen=True)
class MineWakeup:
    agent: object


@dataclass(frozen=True)
class Deliver:
    msg: Message
    to: object
    sender: object


@dataclass(frozen=True)
class ControlPhase:
    '''
    Protocol timer: `phase` is one of the harness phases (demand, lock,
    boundary, join), `agent` is None for feeder- or grid-wide timers
    '''
    feeder: int
    phase: str
    period: int
    agent: object = None


@dataclass(frozen=True)
class GridStep:
    t: float


@dataclass(order=True)
class Event:
    time: float
    seq: int
    payload: object = field(compare=False)


class EventQueue:
    '''
    Priority queue of events with a monotone clock
    '''
    def __init__(self, start=0.0):
        self._heap = []
        self._seq = itertools.count()
        self.now = start

    def schedule(self, time, payload):
        if time < self.now:
            raise ScheduleInPastException('cannot schedule at {} before now {}'.format(time, self.now))
        event = Event(time, next(self._seq), payload)
        heapq.heappush(self._heap, event)
        return event

    def pop_next(self):
        if not self._heap:
            raise EndOfSimulation('event queue is empty at t={}'.format(self.now))
        event = heapq.heappop(self._heap)
        self.now = event.time
        return event

    def peek_time(self):
        return self._heap[0].time if self._heap else None

    def __len__(self):
        return len(self._heap)


class Topology:
    '''
    Symmetric peer graph of the agents
    '''
    def __init__(self, graph, n_peers):
        self.graph = graph
        self.n_peers = n_peers
        self._neighbours = {}

    @property
    def peers(self):
        return {agent: self.neighbours(agent) for agent in sorted(self.graph.nodes)}

    def neighbours(self, agent):
        if agent not in self._neighbours:
            self._neighbours[agent] = sorted(self.graph.neighbors(agent))
        return self._neighbours[agent]

    def degree(self, agent):
        return self.graph.degree(agent)

    def edges(self):
        return self.graph.number_of_edges()

    def is_connected(self):
        return nx.is_connected(self.graph)

    def join(self, agent, n_peers, rng):
        '''
        Connects a newly joined agent to n_peers random existing agents
        '''
        existing = sorted(self.graph.nodes)
        picks = rng.choice(len(existing), size=min(n_peers, len(existing)), replace=False)
        self.graph.add_node(agent)
        for index in sorted(int(i) for i in picks):
            self.graph.add_edge(agent, existing[index])
        self._neighbours.clear()

    def __repr__(self):
        return 'Topology(agents={}, edges={}, N={})'.format(self.graph.number_of_nodes(), self.edges(), self.n_peers)


def build_topology(agents, n_peers, rng, max_attempts=100):
    '''
    Returns a random connected Topology in which every agent picked n_peers
    distinct random neighbours (so each degree is at least n_peers)

    :param agents: agent identifiers, in a deterministic order
    :param n_peers: N, peers each agent selects
    :param rng: numpy Generator of the topology stream
    :raises InfeasibleTopologyException: if no connected graph was drawn
    '''
    agents = sorted(agents)
    if n_peers < 1 or n_peers >= len(agents):
        raise InfeasibleTopologyException('need 1 <= N < U_total, got N={} U_total={}'.format(n_peers, len(agents)))

    for attempt in range(max_attempts):
        graph = nx.Graph()
        graph.add_nodes_from(agents)
        for index, agent in enumerate(agents):
            others = [i for i in range(len(agents)) if i != index]
            for pick in rng.choice(others, size=n_peers, replace=False):
                graph.add_edge(agent, agents[int(pick)])
        if nx.is_connected(graph):
            return Topology(graph, n_peers)
        logger.warning(f'topology attempt {attempt + 1} not connected, resampling')

    raise InfeasibleTopologyException('no connected topology after {} attempts'.format(max_attempts))


def sample_latency(rng, lat_min=0.01, lat_max=0.1):
    '''
    Returns a link latency in seconds, uniform in [lat_min, lat_max]
    '''
    if lat_max == lat_min:
        return float(lat_min)
    return float(rng.uniform(lat_min, lat_max))


class FloodTrace:
    '''
    Outcome of flooding one message: who received it when, and how many
    transmissions and dropped duplicates it cost
    '''
    def __init__(self, origin=None):
        self.origin = origin
        self.first_delivery = {}
        self.transmissions = []
        self.duplicates = 0

    @property
    def deliveries(self):
        return len(self.first_delivery)

    def forwards(self):
        '''
        Returns the number of transmissions made by agents other than the origin
        '''
        return sum(1 for deliver in self.transmissions if deliver.sender != self.origin)

    def __repr__(self):
        return 'FloodTrace(deliveries={}, transmissions={}, duplicates={})'.format(
            self.deliveries, len(self.transmissions), self.duplicates)


def gossip(msg, origin, topo, rng, lat_min=0.01, lat_max=0.1, start=0.0):
    '''
    Floods msg from origin over topo and returns the FloodTrace. Uses the same
    relay rule as the live simulation (GossipNetwork).
    '''
    trace = FloodTrace(origin)
    queue = EventQueue(start)
    seen = {origin}

    def send(sender, exclude, now):
        for peer in topo.neighbours(sender):
            if peer == exclude:
                continue
            deliver = Deliver(msg, peer, sender)
            trace.transmissions.append(deliver)
            queue.schedule(now + sample_latency(rng, lat_min, lat_max), deliver)

    send(origin, None, start)
    while len(queue):
        event = queue.pop_next()
        deliver = event.payload
        if deliver.to in seen:
            trace.duplicates += 1
            continue
        seen.add(deliver.to)
        trace.first_delivery[deliver.to] = event.time
        send(deliver.to, deliver.sender, event.time)
    return trace


class GossipNetwork:
    '''
    Live flooding over a topology, scheduling Deliver events on the
    simulation queue and reporting every link transmission to `on_transmit`
    '''
    def __init__(self, topology, rng, lat_min=0.01, lat_max=0.1, on_transmit=None):
        self.topology = topology
        self.rng = rng
        self.lat_min = lat_min
        self.lat_max = lat_max
        self.on_transmit = on_transmit
        self.seen = {}
        self.duplicates = 0

    def broadcast(self, msg, queue):
        '''
        Sends a message created by msg.origin to all its peers
        '''
        self.seen.setdefault(msg.origin, {})[msg.digest] = queue.now
        self._send(msg, msg.origin, None, queue)

    def accept(self, deliver, queue):
        '''
        Handles a Deliver event. Returns True on first receipt, after relaying
        the message; returns False for a duplicate.
        '''
        seen = self.seen.setdefault(deliver.to, {})
        if deliver.msg.digest in seen:
            self.duplicates += 1
            return False
        seen[deliver.msg.digest] = queue.now
        self._send(deliver.msg, deliver.to, deliver.sender, queue)
        return True

    def prune(self, before):
        '''
        Forgets the messages every agent first saw before time `before`; a
        flood must have died out by then. Returns the number of entries dropped.
        '''
        dropped = 0
        for agent, seen in self.seen.items():
            kept = {digest: t for digest, t in seen.items() if t >= before}
            dropped += len(seen) - len(kept)
            self.seen[agent] = kept
        return dropped

    def _send(self, msg, sender, exclude, queue):
        for peer in self.topology.neighbours(sender):
            if peer == exclude:
                continue
            if self.on_transmit is not None:
                self.on_transmit(sender, msg, queue.now)
            queue.schedule(queue.now + sample_latency(self.rng, self.lat_min, self.lat_max),
                           Deliver(msg, peer, sender))



########## Exceptions ##########
class InfeasibleTopologyException(Exception):
    pass

class EndOfSimulation(Exception):
    pass

class ScheduleInPastException(Exception):
    pass
