import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and an integer path.

    Streams for distinct keys are independent, and a given (seed, key) yields
    the same numbers on every platform and in every execution order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
