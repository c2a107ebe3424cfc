"""Deterministic random-stream derivation.

Every random draw in an audit comes from a counter-based Philox generator
whose 128-bit key encodes (master_seed, namespace, measurement, trial).
Streams are therefore independent of execution order: trial 7 of
measurement 3 produces the same draws whether it runs first, last, or in
another process.
"""

import numpy as np

# Key namespaces. Keeping these disjoint guarantees that e.g. the stream
# used to initialise a model never collides with a trial stream.
NS_MEASUREMENT = 0
NS_TRIAL = 1
NS_CALIBRATION_TRIAL = 2
NS_CALIBRATION_SETUP = 3

_MASK64 = (1 << 64) - 1


def stream(master_seed, namespace, measurement=0, trial=0):
    """Return a fresh Generator for the given (namespace, measurement, trial).

    The low key word packs namespace (8 bits), measurement (24 bits) and
    trial (32 bits); the high word is the master seed reduced to 64 bits.
    """
    if not 0 <= namespace < 256:
        raise ValueError(f"namespace out of range: {namespace}")
    if not 0 <= measurement < (1 << 24):
        raise ValueError(f"measurement index out of range: {measurement}")
    if not 0 <= trial < (1 << 32):
        raise ValueError(f"trial index out of range: {trial}")
    low = (namespace << 56) | (measurement << 32) | trial
    key = ((master_seed & _MASK64) << 64) | low
    return np.random.Generator(np.random.Philox(key=key))
