"""
src/tools/variates.py

Seeded random streams and GE-type / exponential variates.

The GE (generalized exponential) distribution used for both interarrival and
service times is the two-phase form

    F(t) = 1 - tau * exp(-tau * rate * t),   tau = 2 / (scv + 1)

i.e. an atom of mass 1 - tau at zero and an exponential tail with rate
tau * rate. A stream of GE gaps has mean 1/rate and squared coefficient of
variation scv; runs of zero gaps are the bursts (geometric batch sizes with
mean 1/tau).

Streams are numpy PCG64 generators keyed by a SeedSequence. A replication is
keyed by (base_seed, spawn_key) and every random concern inside it owns a
child stream, so identical seeds give bit-identical variate sequences.
"""

import math
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# ================== CONFIG ==================
UNIFORM_BLOCK_SIZE = 4096  # uniforms pulled from numpy per refill
MAX_SEED = 2**64 - 1


class InvalidParameterError(ValueError):
    """Raised for rates, SCVs or sizes outside their domain"""


class GEParams(BaseModel):
    """Rate + SCV pair defining a GE variate (arrivals and services)"""

    model_config = ConfigDict(frozen=True)

    rate: float = Field(gt=0, description="events per second")
    scv: float = Field(default=1.0, ge=1, description="squared coefficient of variation")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate


class Rng:
    """
    Single-owner uniform source over numpy's PCG64.

    Uniforms are drawn in blocks and handed out one at a time; the open
    interval (0, 1) is enforced by skipping exact zeros (numpy never returns 1).
    """

    def __init__(self, seed: Union[int, np.random.SeedSequence] = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            if not 0 <= int(seed) <= MAX_SEED:
                raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
            self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))
        self._block: list = []
        self._pos = 0

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator (for vectorised draws)"""
        return self._gen

    def substream(self, index: int) -> "Rng":
        """Child stream keyed by spawn_key + (index,); independent of draws made so far"""
        child = np.random.SeedSequence(
            entropy=self._seq.entropy,
            spawn_key=tuple(self._seq.spawn_key) + (int(index),),
        )
        return Rng(child)

    def uniform(self) -> float:
        while True:
            if self._pos >= len(self._block):
                self._block = self._gen.random(UNIFORM_BLOCK_SIZE).tolist()
                self._pos = 0
            u = self._block[self._pos]
            self._pos += 1
            if u > 0.0:
                return u


def replication_seed(base_seed: int, key: Sequence[int]) -> np.random.SeedSequence:
    """
    Seed of one replication: SeedSequence(entropy=base_seed, spawn_key=key).

    SeedSequence hashes (entropy, spawn_key) into the generator state, so
    neighbouring keys give statistically independent streams.
    """
    if not 0 <= int(base_seed) <= MAX_SEED:
        raise InvalidParameterError(f"base seed must be a 64-bit unsigned integer, got {base_seed}")
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))


def _check(params: GEParams) -> None:
    # model_construct() bypasses pydantic validation, so re-check here
    if not params.rate > 0:
        raise InvalidParameterError(f"rate must be > 0, got {params.rate}")
    if not params.scv >= 1:
        raise InvalidParameterError(f"GE requires scv >= 1, got {params.scv}")


def ge_tau(params: GEParams) -> float:
    """Mixing probability tau = 2 / (scv + 1), in (0, 1]"""
    _check(params)
    return 2.0 / (params.scv + 1.0)


def exp_sample(rate: float, rng: Rng) -> float:
    """Exponential duration by inverse transform: -ln(u) / rate"""
    if not rate > 0:
        raise InvalidParameterError(f"rate must be > 0, got {rate}")
    return -math.log(rng.uniform()) / rate


class GESampler:
    """GE draws for fixed params; tau and the tail rate are computed once"""

    __slots__ = ("tau", "tail_rate", "rng")

    def __init__(self, params: GEParams, rng: Rng):
        self.tau = ge_tau(params)
        self.tail_rate = self.tau * params.rate
        self.rng = rng

    def __call__(self) -> float:
        rng = self.rng
        # tau == 1 is the pure exponential; no branch draw so the stream matches exp_sample
        if self.tau < 1.0 and rng.uniform() >= self.tau:
            return 0.0
        return -math.log(rng.uniform()) / self.tail_rate


def ge_sample(params: GEParams, rng: Rng) -> float:
    """
    One GE duration: 0 with probability 1 - tau, otherwise
    exp_sample(tau * rate).
    """
    return GESampler(params, rng)()


def ge_samples(params: GEParams, rng: Rng, size: int, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Vectorised GE draws, same distribution as ge_sample"""
    if size < 0:
        raise InvalidParameterError(f"size must be >= 0, got {size}")
    tau = ge_tau(params)
    gen = rng.generator
    samples = np.zeros(size) if out is None else out
    samples[:] = 0.0
    if tau >= 1.0:
        mask = np.ones(size, dtype=bool)
    else:
        mask = gen.random(size) < tau
    samples[mask] = gen.exponential(1.0 / (tau * params.rate), int(mask.sum()))
    return samples


def sample_scv(samples: np.ndarray) -> float:
    """Empirical squared coefficient of variation"""
    mean = float(np.mean(samples))
    if mean == 0.0:
        raise InvalidParameterError("SCV undefined for an all-zero sample")
    return float(np.var(samples)) / (mean * mean)
