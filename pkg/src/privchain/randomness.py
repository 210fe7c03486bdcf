"""Randomness sources.

Every function that samples takes an ``rng`` argument exposing
``randbelow(n)`` and ``token_bytes(n)``. The default is the :mod:`secrets`
module. :class:`SeededRandom` gives reproducible runs for simulations and
tests; it is not suitable for protecting real secrets.
"""

import hashlib
import random
import secrets


class SeededRandom(random.Random):
    def __init__(self, seed):
        if isinstance(seed, str):
            seed = seed.encode()
        if isinstance(seed, bytes):
            seed = int.from_bytes(hashlib.sha256(seed).digest(), "big")
        super().__init__(seed)

    def randbelow(self, n: int) -> int:
        return self.randrange(n)

    def token_bytes(self, n: int) -> bytes:
        return self.randbytes(n)


system_random = secrets
