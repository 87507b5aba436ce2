'''
Seeded random streams

Every random draw in a simulation comes from one root seed. Streams are
forked by a namespace and a key (e.g. the DER and the control period), so a
draw never depends on how many draws other components made before it.
That is what makes a centralized run and a blockchain run see the very same
demand for the same DER in the same period.
'''
import numpy as np


LEDGER = 1
DEMAND = 2
MINING = 3
LATENCY = 4
TOPOLOGY = 5
JITTER = 6
WEATHER = 7
KEYS = 8


def fork(seed, namespace, *key):
    '''
    Returns a numpy Generator for the given root seed, namespace and key

    :param seed: root seed of the scenario
    :param namespace: one of the module constants (LEDGER, DEMAND, ...)
    :param key: non-negative integers identifying the stream within the
        namespace, e.g. (feeder, unit, period)
    '''
    spawn_key = (namespace,) + tuple(int(k) for k in key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)))
