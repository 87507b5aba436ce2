'''
Simplified electrical model of the LV grid

Each feeder is reduced to a linear voltage sensitivity: its voltage is the
PCC voltage plus alpha_f times the net active power injected on the feeder.
Farther feeders have a larger alpha_f, so they see larger voltage rises when
PV output exceeds household consumption.

In CSC mode a DER outputs all its available power g. The DER elected VSC
follows the droop law v = v_ref - gamma * (g - p) and curtails its output p
to the point where its droop voltage meets the feeder voltage.
'''
from dataclasses import dataclass, field, replace
import logging
import math


logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400

# numerical tolerance of the power/voltage invariants
TOLERANCE = 1e-9


class Mode:
    CSC = 'CSC'
    VSC = 'VSC'


class DroopParams:
    '''
    Droop law parameters shared by every VSC of the grid
    '''
    def __init__(self, v_ref=1.0, gamma=0.005, v_min=0.95, v_max=1.05):
        '''
        :param v_ref: reference voltage in PU
        :param gamma: droop parameter in PU per kW of curtailment
        :param v_min: lowest tolerable voltage in PU
        :param v_max: highest tolerable voltage in PU
        '''
        if not v_min < v_ref < v_max:
            raise DomainException('need v_min < v_ref < v_max, got {} {} {}'.format(v_min, v_ref, v_max))
        if gamma <= 0:
            raise DomainException('gamma must be positive, got {}'.format(gamma))
        self.v_ref = v_ref
        self.gamma = gamma
        self.v_min = v_min
        self.v_max = v_max

    def __repr__(self):
        return str(self.__dict__)


class ProfileParams:
    '''
    Shape of the synthetic PV and household consumption profiles.
    Times are seconds of the day.
    '''
    def __init__(self, sunrise=5 * 3600, sunset=21 * 3600,
                 morning_peak=0.8, morning_time=7.5 * 3600, morning_width=1.5 * 3600,
                 evening_peak=1.5, evening_time=19 * 3600, evening_width=2 * 3600):
        if not 0 <= sunrise < sunset <= SECONDS_PER_DAY:
            raise DomainException('need 0 <= sunrise < sunset <= 86400, got {} {}'.format(sunrise, sunset))
        self.sunrise = sunrise
        self.sunset = sunset
        self.morning_peak = morning_peak
        self.morning_time = morning_time
        self.morning_width = morning_width
        self.evening_peak = evening_peak
        self.evening_time = evening_time
        self.evening_width = evening_width

    @property
    def solar_noon(self):
        return (self.sunrise + self.sunset) / 2

    def __repr__(self):
        return str(self.__dict__)


@dataclass(frozen=True)
class DerUnit:
    '''
    A PV unit: available power g, setpoint p, reactive power q (kW / kVAr)
    '''
    id: object
    rated: float = 4.0
    s_max: float = 5.0
    g: float = 0.0
    p: float = 0.0
    q: float = 0.0
    mode: str = Mode.CSC


@dataclass(frozen=True)
class FeederModel:
    '''
    One LV feeder: its sensitivity alpha (PU per kW), the PCC voltage, its
    DERs and the number of households it supplies
    '''
    index: int
    alpha: float
    v_pcc: float = 1.0
    ders: tuple = ()
    households: int = 10
    household_base: float = 0.6

    def with_der(self, unit):
        return replace(self, ders=self.ders + (unit,))


@dataclass(frozen=True)
class VscSetpoint:
    p: float
    voltage: float
    saturated: bool


@dataclass(frozen=True)
class GridSnapshot:
    '''
    State of the grid at one simulation timestep
    '''
    time: float
    voltages: dict
    ders: dict
    loads: dict
    saturated: tuple = field(default=())

    def max_voltage(self):
        return max(self.voltages.values())



def droop_voltage(g, p, params):
    '''
    Returns the VSC output voltage v_ref - gamma * (g - p)
    '''
    return params.v_ref - params.gamma * (g - p)


def reactive_power(p, s_max):
    '''
    Returns the reactive power left under the apparent power limit,
    sqrt(s_max^2 - p^2)
    '''
    if p > s_max + TOLERANCE:
        raise DomainException('active power {} exceeds apparent power limit {}'.format(p, s_max))
    return math.sqrt(max(s_max * s_max - p * p, 0.0))


def feeder_voltage(net_injection, feeder):
    '''
    Returns v_pcc + alpha_f * net_injection, net_injection being the DER
    output minus the household load of the feeder in kW
    '''
    return feeder.v_pcc + feeder.alpha * net_injection


def solve_vsc_setpoint(feeder, vsc, params, load=0.0):
    '''
    Returns the VscSetpoint where the droop characteristic of vsc meets the
    feeder voltage, clamped to [0, g]

    The VSC only curtails to counter a voltage above v_ref; at or below v_ref it
    runs at capacity.

    :param feeder: FeederModel whose other DERs already hold their setpoints
    :param vsc: the DerUnit acting as VSC, with its current capacity g
    :param params: DroopParams
    :param load: household load of the feeder in kW
    '''
    other = sum(unit.p for unit in feeder.ders if unit.id != vsc.id)
    x = other - load
    alpha, gamma, g = feeder.alpha, params.gamma, vsc.g

    if g <= 0:
        p = 0.0
    elif feeder_voltage(x + g, feeder) <= params.v_ref:
        p = g
    elif abs(alpha - gamma) < TOLERANCE:
        # both characteristics parallel; the VSC gives up all it can
        p = 0.0
    else:
        p_hat = (params.v_ref - gamma * g - feeder.v_pcc - alpha * x) / (alpha - gamma)
        p = min(max(p_hat, 0.0), g)

    voltage = feeder_voltage(x + p, feeder)
    saturated = p == 0.0 and g > 0 and voltage > params.v_max
    return VscSetpoint(p, voltage, saturated)


def pv_profile(t, rated, profile=None):
    '''
    Returns the clear-sky PV output at second of day t: zero outside
    [sunrise, sunset], rising as sin^2 to `rated` at solar noon
    '''
    profile = profile or ProfileParams()
    if not 0 <= t < SECONDS_PER_DAY:
        raise DomainException('time of day {} out of range'.format(t))
    if t <= profile.sunrise or t >= profile.sunset:
        return 0.0
    phase = (t - profile.sunrise) / (profile.sunset - profile.sunrise)
    return rated * math.sin(math.pi * phase) ** 2


def load_profile(t, base, profile=None):
    '''
    Returns the consumption of one household at second of day t: a base load
    with a morning and an evening peak
    '''
    profile = profile or ProfileParams()
    if not 0 <= t < SECONDS_PER_DAY:
        raise DomainException('time of day {} out of range'.format(t))

    def bump(height, centre, width):
        return height * math.exp(-0.5 * ((t - centre) / width) ** 2)

    return base * (1.0
                   + bump(profile.morning_peak, profile.morning_time, profile.morning_width)
                   + bump(profile.evening_peak, profile.evening_time, profile.evening_width))


def step_grid(feeders, modes, t, params, profile=None, clear_sky=1.0):
    '''
    Returns the GridSnapshot at simulation time t

    :param feeders: list of FeederModel
    :param modes: dict of DerId to Mode; DERs not listed run as CSC
    :param t: seconds since scenario start (the scenario starts at midnight)
    :param params: DroopParams
    :param profile: ProfileParams
    :param clear_sky: factor in [0, 1] scaling the PV output of the day
    '''
    profile = profile or ProfileParams()
    time_of_day = t % SECONDS_PER_DAY

    voltages = {}
    loads = {}
    units = {}
    saturated = []

    for feeder in feeders:
        vscs = [unit for unit in feeder.ders if modes.get(unit.id) == Mode.VSC]
        if len(vscs) > 1:
            raise DomainException('feeder {} has {} VSCs'.format(feeder.index, len(vscs)))

        load = feeder.households * load_profile(time_of_day, feeder.household_base, profile)
        current = tuple(
            replace(unit, g=pv_profile(time_of_day, unit.rated, profile) * clear_sky, q=0.0, mode=Mode.CSC)
            for unit in feeder.ders)
        current = tuple(replace(unit, p=unit.g) for unit in current)
        live = replace(feeder, ders=current)

        if vscs:
            vsc = next(unit for unit in current if unit.id == vscs[0].id)
            setpoint = solve_vsc_setpoint(live, vsc, params, load)
            vsc = replace(vsc, p=setpoint.p, q=reactive_power(setpoint.p, vsc.s_max), mode=Mode.VSC)
            current = tuple(vsc if unit.id == vsc.id else unit for unit in current)
            if setpoint.saturated:
                logger.debug(f'curtailment saturated on feeder {feeder.index} at t={t}')
                saturated.append(feeder.index)

        for unit in current:
            units[unit.id] = unit
        loads[feeder.index] = load
        voltages[feeder.index] = feeder_voltage(sum(unit.p for unit in current) - load, feeder)

    return GridSnapshot(t, voltages, units, loads, tuple(saturated))


def build_feeders(ders_per_feeder, alphas, der_factory, households=10, household_base=0.6, v_pcc=1.0):
    '''
    Returns the list of FeederModel of a grid

    :param ders_per_feeder: number of DERs on each feeder, feeder 1 first
    :param alphas: sensitivity of each feeder, feeder 1 first
    :param der_factory: callable (feeder, unit) -> DerUnit
    '''
    feeders = []
    for index, (count, alpha) in enumerate(zip(ders_per_feeder, alphas), start=1):
        if alpha <= 0:
            raise DomainException('alpha of feeder {} must be positive'.format(index))
        units = tuple(der_factory(index, unit) for unit in range(1, count + 1))
        feeders.append(FeederModel(index, alpha, v_pcc, units, households, household_base))
    return feeders



########## Exceptions ##########
class DomainException(Exception):
    pass
