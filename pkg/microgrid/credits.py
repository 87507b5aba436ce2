'''
The credit economy used to elect the voltage regulator (VSC) of a feeder

Each control period every DER of a feeder demands an amount of credit to
operate as VSC in the next period. The DER with the lowest demand is elected
and collects all demands of the period, so DERs that recently regulated hold
more credit, demand more and are less likely to be elected again. Over time
every DER ends up regulating for roughly the same share of periods.

All functions here are pure; they are shared by the central authority and by
every replica of the smart contract.

Credits are integers in milli-credit units, so the total is conserved exactly.
'''
from dataclasses import dataclass
import numpy as np


@dataclass(frozen=True, order=True)
class DerId:
    '''
    Identifies a DER by its feeder and its unit index within the feeder.
    Ordering is feeder-major, then unit; it is the election tie-break.
    '''
    feeder: int
    unit: int

    def __str__(self):
        return '{}.{}'.format(self.feeder, self.unit)

    @classmethod
    def parse(cls, text):
        '''
        Inverse of str(), e.g. "3.2" -> DerId(3, 2)
        '''
        feeder, unit = str(text).split('.')
        return cls(int(feeder), int(unit))


class CreditLedger:
    '''
    Credit status of every DER of one feeder, plus the constant total C
    '''
    def __init__(self, entries, total=None):
        '''
        :param entries: dict of DerId to non-negative integer credit
        :param total: expected total; defaults to the sum of entries
        '''
        for der, amount in entries.items():
            _check_credit(amount, der)
        self.entries = dict(entries)
        self.total = sum(self.entries.values()) if total is None else total

        if sum(self.entries.values()) != self.total:
            raise OverdraftException('ledger entries sum to {}, expected {}'.format(
                sum(self.entries.values()), self.total))

    def get(self, der):
        # DERs that joined after genesis start with no credit
        return self.entries.get(der, 0)

    def ders(self):
        return sorted(self.entries)

    def with_der(self, der):
        '''
        Returns a copy that also holds der with zero credit
        '''
        entries = dict(self.entries)
        entries.setdefault(der, 0)
        return CreditLedger(entries, self.total)

    def __eq__(self, other):
        return isinstance(other, CreditLedger) and self.entries == other.entries and self.total == other.total

    def __repr__(self):
        return str({str(k): v for k, v in sorted(self.entries.items())})


class DemandVector:
    '''
    Credit demanded by each DER for control period `period`
    '''
    def __init__(self, period, demands=None):
        self.period = period
        self.demands = dict(demands or {})

    def with_demand(self, der, amount):
        demands = dict(self.demands)
        demands[der] = amount
        return DemandVector(self.period, demands)

    def total(self):
        return sum(self.demands.values())

    def __len__(self):
        return len(self.demands)

    def __eq__(self, other):
        return isinstance(other, DemandVector) and self.period == other.period and self.demands == other.demands

    def __repr__(self):
        return 'DemandVector(k={}, {})'.format(
            self.period, {str(k): v for k, v in sorted(self.demands.items())})


class ControlHistory:
    '''
    Mode history M of one feeder: one row per DER, one column per period.
    Column k is the indicator vector of the VSC elected for period k, so each
    column sums to exactly one.
    '''
    def __init__(self, feeder, ders, elected=()):
        '''
        :param feeder: feeder index
        :param ders: DerIds of the feeder, in row order
        :param elected: the VSC of each recorded period, in period order
        '''
        self.feeder = feeder
        self.ders = tuple(sorted(ders))
        self.elected = tuple(elected)

    @property
    def periods(self):
        return len(self.elected)

    def with_der(self, der):
        '''
        Returns a copy with a row for a DER that joined mid-run
        '''
        if der in self.ders:
            return self
        return ControlHistory(self.feeder, self.ders + (der,), self.elected)

    def modes(self):
        '''
        Returns M as a numpy array of shape (U_f, K)
        '''
        index = {der: row for row, der in enumerate(self.ders)}
        matrix = np.zeros((len(self.ders), len(self.elected)), dtype=np.int8)
        for column, der in enumerate(self.elected):
            matrix[index[der], column] = 1
        return matrix

    def row_sums(self):
        counts = dict.fromkeys(self.ders, 0)
        for der in self.elected:
            counts[der] += 1
        return counts

    def __repr__(self):
        return 'ControlHistory(feeder={}, ders={}, K={})'.format(
            self.feeder, [str(d) for d in self.ders], self.periods)



def draw_demand(credit, rng):
    '''
    Returns a demand drawn uniformly from the integers {0, ..., credit}

    :param credit: current credit status of the DER
    :param rng: numpy Generator, usually the DER's stream for the period
    '''
    _check_credit(credit)
    if credit == 0:
        return 0
    return int(rng.integers(0, credit, endpoint=True))


def elect_vsc(demands):
    '''
    Returns the DerId with the lowest demand; ties go to the smallest DerId
    '''
    if len(demands) == 0:
        raise EmptyDemandSetException('no demands for period {}'.format(demands.period))
    return min(demands.demands.items(), key=lambda item: (item[1], item[0]))[0]


def settle_credits(ledger, demands, elected):
    '''
    Returns the ledger after the period: every demander pays its demand and
    the elected DER collects the sum of all demands
    '''
    if elected not in demands.demands:
        raise EmptyDemandSetException('{} did not demand in period {}'.format(elected, demands.period))

    entries = dict(ledger.entries)
    for der, amount in demands.demands.items():
        _check_credit(amount, der)
        if amount > ledger.get(der):
            raise OverdraftException('{} demands {} but holds {}'.format(der, amount, ledger.get(der)))
        entries[der] = ledger.get(der) - amount

    entries[elected] += demands.total()
    return CreditLedger(entries, ledger.total)


def record_period(history, elected):
    '''
    Returns the history with one more column, the indicator vector of elected
    '''
    if elected.feeder != history.feeder or elected not in history.ders:
        raise ValueError('{} is not a DER of feeder {}'.format(elected, history.feeder))
    return ControlHistory(history.feeder, history.ders, history.elected + (elected,))


def fairness_gap(history):
    '''
    Returns max over DERs of |share of periods as VSC - 1/U_f|, which is zero
    when every DER regulated for exactly the same number of periods
    '''
    if history.periods == 0:
        raise ValueError('fairness gap needs at least one recorded period')
    share = 1.0 / len(history.ders)
    return max(abs(count / history.periods - share) for count in history.row_sums().values())


def initial_ledger(ders, per_der, rng):
    '''
    Returns a ledger holding C = len(ders) * per_der milli-credits distributed
    at random over the DERs

    Entries are the gaps between sorted uniform cut points of [0, C].
    '''
    ders = sorted(ders)
    total = len(ders) * per_der
    if not ders:
        return CreditLedger({}, 0)

    cuts = np.sort(rng.integers(0, total, size=len(ders) - 1, endpoint=True))
    bounds = np.concatenate(([0], cuts, [total]))
    amounts = np.diff(bounds)
    return CreditLedger({der: int(a) for der, a in zip(ders, amounts)}, total)


def _check_credit(amount, der=None):
    if int(amount) != amount or amount < 0:
        raise NegativeCreditException('credit of {} must be a non-negative integer, got {}'.format(
            der if der is not None else 'DER', amount))



########## Exceptions ##########
class EmptyDemandSetException(Exception):
    pass

class OverdraftException(Exception):
    pass

class NegativeCreditException(Exception):
    pass
