'''
Scenario configuration

A scenario is a JSON object with a few top-level keys and the nested groups
grid, profile, chain, network and costs. Missing keys take the defaults
below, which describe the residential case study: seven feeders, 24 PV units,
15 minute control periods and 10 second blocks over one day.
'''
import copy
import json
import logging

from microgrid.costs import CostModelParams
from microgrid.grid import DroopParams, ProfileParams, DomainException


logger = logging.getLogger(__name__)


class Modes:
    CENTRALIZED = 'centralized'
    BLOCKCHAIN = 'blockchain'
    NO_CONTROL = 'no_control'

    ALL = (CENTRALIZED, BLOCKCHAIN, NO_CONTROL)


DEFAULTS = {
    'mode': Modes.BLOCKCHAIN,
    'seed': 0,
    'periods': 96,
    't_tc': 900.0,
    'block_period': 10.0,
    'lock_fraction': 0.9,
    'lock_guard': 30.0,
    'grid_step': 60.0,
    'ders_per_feeder': [0, 4, 4, 4, 4, 4, 4],
    'households_per_feeder': 10,
    'credit_per_der': 10000,
    'desync_budget': 5,
    'joins': [],
    'grid': {
        'v_ref': 1.0,
        'gamma': 0.005,
        'v_min': 0.95,
        'v_max': 1.05,
        'v_pcc': 1.0,
        'alpha_step': 0.0008,
        'alphas': None,
        'rated': 4.0,
        's_max': 5.0,
        'household_base': 0.6,
        'clear_sky_min': 0.5,
    },
    'profile': {
        'sunrise_h': 5.0,
        'sunset_h': 21.0,
        'morning_peak': 0.8,
        'morning_h': 7.5,
        'morning_width_h': 1.5,
        'evening_peak': 1.5,
        'evening_h': 19.0,
        'evening_width_h': 2.0,
    },
    'chain': {
        'pow': 'abstract',
        'difficulty_bits': 8,
        'max_block_updates': 256,
    },
    'network': {
        'n_peers': 3,
        'lat_min': 0.01,
        'lat_max': 0.1,
        'max_attempts': 100,
    },
    'costs': {
        'l_u': 800,
        'l_b': 8000,
        'l_w': 64,
        'l_c': 64,
        'l_mu': 64,
    },
}

# keys whose default is None and the types they accept
NULLABLE = {'grid.alphas': list}


class Scenario:
    '''
    Validated scenario configuration
    '''
    def __init__(self, values=None):
        '''
        :param values: (partial) configuration dict; missing keys take DEFAULTS
        :raises ValidationException: on unknown keys or invalid values
        '''
        self.values = _merge(DEFAULTS, values or {}, '')
        validate(self.values)

    @classmethod
    def from_dict(cls, values):
        return cls(values)

    def get(self, path):
        '''
        Returns the value at a dotted path such as "network.n_peers"
        '''
        node = self.values
        for part in path.split('.'):
            if not isinstance(node, dict) or part not in node:
                raise ValidationException('unknown key', path)
            node = node[part]
        return node

    def override(self, path, value):
        '''
        Returns a new Scenario with the value at a dotted path replaced
        '''
        self.get(path)
        values = copy.deepcopy(self.values)
        node = values
        parts = path.split('.')
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
        return Scenario(values)

    def to_dict(self):
        return copy.deepcopy(self.values)

    @property
    def mode(self):
        return self.values['mode']

    @property
    def seed(self):
        return self.values['seed']

    @property
    def periods(self):
        return self.values['periods']

    @property
    def t_tc(self):
        return float(self.values['t_tc'])

    @property
    def block_period(self):
        return float(self.values['block_period'])

    @property
    def lock_fraction(self):
        return self.values['lock_fraction']

    @property
    def lock_guard(self):
        return float(self.values['lock_guard'])

    @property
    def grid_step(self):
        return float(self.values['grid_step'])

    @property
    def ders_per_feeder(self):
        return list(self.values['ders_per_feeder'])

    @property
    def n_feeders(self):
        return len(self.values['ders_per_feeder'])

    @property
    def u_total(self):
        return sum(self.values['ders_per_feeder'])

    @property
    def households(self):
        return self.values['households_per_feeder']

    @property
    def credit_per_der(self):
        return self.values['credit_per_der']

    @property
    def desync_budget(self):
        return self.values['desync_budget']

    @property
    def joins(self):
        return sorted((join['period'], join['feeder']) for join in self.values['joins'])

    @property
    def grid(self):
        return self.values['grid']

    @property
    def chain(self):
        return self.values['chain']

    @property
    def network(self):
        return self.values['network']

    def blocks_per_period(self):
        '''
        Returns N_b, the expected number of blocks per control period
        '''
        return self.t_tc / self.block_period

    def lock_offset(self):
        '''
        Returns the seconds into a collection window at which Locks are sent
        '''
        return self.lock_fraction * self.t_tc

    def alphas(self):
        '''
        Returns the sensitivity of each feeder, feeder 1 first
        '''
        if self.grid['alphas'] is not None:
            return list(self.grid['alphas'])
        return [self.grid['alpha_step'] * f for f in range(1, self.n_feeders + 1)]

    def droop_params(self):
        grid = self.grid
        return DroopParams(grid['v_ref'], grid['gamma'], grid['v_min'], grid['v_max'])

    def profile_params(self):
        profile = self.values['profile']
        return ProfileParams(
            sunrise=profile['sunrise_h'] * 3600, sunset=profile['sunset_h'] * 3600,
            morning_peak=profile['morning_peak'], morning_time=profile['morning_h'] * 3600,
            morning_width=profile['morning_width_h'] * 3600,
            evening_peak=profile['evening_peak'], evening_time=profile['evening_h'] * 3600,
            evening_width=profile['evening_width_h'] * 3600)

    def cost_params(self):
        costs = self.values['costs']
        return CostModelParams(self.network['n_peers'], costs['l_u'], costs['l_b'], costs['l_w'],
                               costs['l_c'], costs['l_mu'], self.blocks_per_period(), max(self.u_total, 1))

    def __repr__(self):
        return 'Scenario(mode={}, seed={}, K={}, U_total={})'.format(self.mode, self.seed, self.periods, self.u_total)



def load_config(path):
    '''
    Returns the Scenario of a JSON configuration file

    :raises ConfigParseException: if the file cannot be read or is not a JSON object
    :raises ValidationException: if a key is unknown or a value is invalid
    '''
    try:
        with open(path, mode='r', encoding='utf-8') as f:
            values = json.load(f)
    except OSError as e:
        raise ConfigParseException('cannot read {}: {}'.format(path, e)) from e
    except json.JSONDecodeError as e:
        raise ConfigParseException('{} is not valid JSON: {}'.format(path, e)) from e

    if not isinstance(values, dict):
        raise ConfigParseException('{} must hold a JSON object'.format(path))
    logger.info(f'loaded scenario {path}')
    return Scenario(values)


def parse_value(text):
    '''
    Parses a command-line value as JSON, falling back to the raw string
    '''
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def validate(values):
    '''
    Checks the cross-field rules of a merged configuration
    '''
    def require(condition, path, message):
        if not condition:
            raise ValidationException(message, path)

    require(values['mode'] in Modes.ALL, 'mode', 'must be one of {}'.format(', '.join(Modes.ALL)))
    require(isinstance(values['seed'], int) and values['seed'] >= 0, 'seed', 'must be a non-negative integer')
    require(isinstance(values['periods'], int) and values['periods'] >= 1, 'periods', 'must be at least 1')
    require(values['block_period'] > 0, 'block_period', 'must be positive')
    require(values['t_tc'] >= 10 * values['block_period'], 't_tc', 'must be at least 10 block periods')
    require(0 < values['lock_fraction'] < 1, 'lock_fraction', 'must lie strictly between 0 and 1')
    require(0 <= values['lock_guard'] < values['lock_fraction'] * values['t_tc'], 'lock_guard',
            'must be non-negative and shorter than the lock offset')
    require(values['grid_step'] > 0, 'grid_step', 'must be positive')
    require(isinstance(values['credit_per_der'], int) and values['credit_per_der'] >= 1,
            'credit_per_der', 'must be a positive integer')
    require(isinstance(values['desync_budget'], int) and values['desync_budget'] >= 0,
            'desync_budget', 'must be a non-negative integer')
    require(isinstance(values['households_per_feeder'], int) and values['households_per_feeder'] >= 0,
            'households_per_feeder', 'must be a non-negative integer')

    ders = values['ders_per_feeder']
    require(len(ders) >= 1 and all(isinstance(n, int) and n >= 0 for n in ders), 'ders_per_feeder',
            'must list a non-negative DER count per feeder')
    u_total = sum(ders)
    require(u_total >= 1, 'ders_per_feeder', 'must hold at least one DER')

    for index, join in enumerate(values['joins']):
        path = 'joins[{}]'.format(index)
        require(isinstance(join, dict) and set(join) == {'feeder', 'period'}, path, 'must be {feeder, period}')
        require(1 <= join['feeder'] <= len(ders), path + '.feeder', 'unknown feeder')
        require(ders[join['feeder'] - 1] > 0, path + '.feeder', 'feeder has no DER to coordinate with')
        require(0 <= join['period'] < values['periods'], path + '.period', 'must lie in [0, periods)')

    grid = values['grid']
    try:
        DroopParams(grid['v_ref'], grid['gamma'], grid['v_min'], grid['v_max'])
    except DomainException as e:
        raise ValidationException(str(e), 'grid') from e
    require(grid['alpha_step'] > 0, 'grid.alpha_step', 'must be positive')
    if grid['alphas'] is not None:
        alphas = grid['alphas']
        require(len(alphas) == len(ders), 'grid.alphas', 'needs one value per feeder')
        require(all(a > 0 for a in alphas), 'grid.alphas', 'must be positive')
        require(all(a < b for a, b in zip(alphas, alphas[1:])), 'grid.alphas', 'must increase with distance')
    require(0 < grid['rated'] <= grid['s_max'], 'grid.rated', 'must be positive and at most s_max')
    require(grid['household_base'] >= 0, 'grid.household_base', 'must be non-negative')
    require(0 <= grid['clear_sky_min'] <= 1, 'grid.clear_sky_min', 'must lie in [0, 1]')

    profile = values['profile']
    require(0 <= profile['sunrise_h'] < profile['sunset_h'] <= 24, 'profile.sunrise_h',
            'need 0 <= sunrise < sunset <= 24')

    chain = values['chain']
    require(chain['pow'] in ('abstract', 'hash'), 'chain.pow', 'must be abstract or hash')
    require(1 <= chain['difficulty_bits'] <= 24, 'chain.difficulty_bits', 'must lie in [1, 24]')
    require(chain['max_block_updates'] >= 1, 'chain.max_block_updates', 'must be positive')

    network = values['network']
    require(network['n_peers'] >= 1, 'network.n_peers', 'must be at least 1')
    if values['mode'] == Modes.BLOCKCHAIN:
        require(network['n_peers'] < u_total, 'network.n_peers', 'must be smaller than the number of DERs')
    require(0 <= network['lat_min'] <= network['lat_max'], 'network.lat_min', 'need 0 <= lat_min <= lat_max')
    require(network['lat_max'] < values['block_period'], 'network.lat_max', 'must be below the block period')
    require(network['max_attempts'] >= 1, 'network.max_attempts', 'must be positive')

    for key, length in values['costs'].items():
        require(isinstance(length, int) and length >= 0, 'costs.' + key, 'must be a non-negative integer')


def _merge(defaults, values, prefix):
    '''
    Returns defaults updated with values, rejecting unknown keys and
    values whose type does not match the default
    '''
    merged = copy.deepcopy(defaults)
    for key, value in values.items():
        path = prefix + key
        if key not in defaults:
            raise ValidationException('unknown key', path)
        default = defaults[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ValidationException('must be an object', path)
            merged[key] = _merge(default, value, path + '.')
        elif default is None:
            if value is not None and not isinstance(value, NULLABLE[path]):
                raise ValidationException('must be null or a {}'.format(NULLABLE[path].__name__), path)
            merged[key] = value
        else:
            merged[key] = _check_type(default, value, path)
    return merged


def _check_type(default, value, path):
    if isinstance(default, bool) or isinstance(value, bool):
        if not isinstance(value, bool) or not isinstance(default, bool):
            raise ValidationException('has the wrong type', path)
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise ValidationException('must be a number', path)
        return float(value)
    if not isinstance(value, type(default)):
        raise ValidationException('must be a {}'.format(type(default).__name__), path)
    return value



########## Exceptions ##########
class ConfigParseException(Exception):
    pass

class ValidationException(Exception):
    def __init__(self, message, path=None):
        super().__init__('{}: {}'.format(path, message) if path else message)
        self.path = path
