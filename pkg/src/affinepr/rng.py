"""Seed handling and derived random streams.

Every stochastic routine in the package takes either an explicit
:class:`RngSpec` / ``numpy.random.Generator`` or an integer seed.  Monte Carlo
drivers derive one independent child seed per trial with :func:`mix`, so a
run's outputs depend only on the base seed and the trial index — never on how
many workers executed the trials or in what order they finished.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Fixed sub-stream tags, kept distinct so one trial seed can feed several
# independent draws (instance generation, initial point, power iteration).
STREAM_INIT = 0x1D12
STREAM_POWER = 0x9077
STREAM_PROBE = 0x5A3B

SEED_ENV_VAR = "APR_SEED"


def splitmix64(x: int) -> int:
    """One splitmix64 finalizer round; a bijection on 64-bit integers."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix(base_seed: int, index: int) -> int:
    """Derive the ``index``-th child seed from ``base_seed``.

    Distinct (base, index) pairs map to distinct outputs for indices below
    2**64 because splitmix64 is a bijection applied to distinct states.
    """
    if index < 0:
        raise ValueError("derivation index must be >= 0")
    return splitmix64((splitmix64(base_seed & _MASK64) + index) & _MASK64)


@dataclass(frozen=True)
class RngSpec:
    """A reproducible random source: a base seed plus a derivation rule."""

    seed: int

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator seeded from this spec."""
        return np.random.default_rng(self.seed)

    def derive(self, index: int) -> "RngSpec":
        """Child spec for trial / sub-stream ``index``."""
        return RngSpec(mix(self.seed, index))


def as_generator(rng: "RngSpec | np.random.Generator | int | None") -> np.random.Generator:
    """Coerce any accepted random-source argument to a Generator."""
    if rng is None:
        return np.random.default_rng(0)
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng))
    raise ValueError(f"not a usable random source: {rng!r}")


def resolve_seed(seed: "int | None", default: int = 0) -> int:
    """Pick the effective base seed: APR_SEED env var > explicit > default."""
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip():
        try:
            return int(env, 0)
        except ValueError as exc:
            raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    if seed is not None:
        return int(seed)
    return default
