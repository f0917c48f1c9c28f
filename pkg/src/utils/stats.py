"""
Replication statistics: sample mean and Student-t confidence interval.
"""

from typing import Sequence, Tuple

import numpy as np
import scipy.stats as st

CONFIDENCE = 0.95


def mean_ci(values: Sequence[float], confidence: float = CONFIDENCE) -> Tuple[float, float, float]:
    """
    Mean and two-sided Student-t interval with len(values) - 1 degrees of freedom.

    A single replication gives a degenerate interval at the mean.
    """
    samples = np.asarray(values, dtype=float)
    if samples.size == 0:
        raise ValueError("no replications to aggregate")
    mean = float(samples.mean())
    if samples.size == 1:
        return mean, mean, mean
    sem = float(samples.std(ddof=1)) / np.sqrt(samples.size)
    half = float(st.t.ppf(0.5 + confidence / 2.0, samples.size - 1)) * sem
    return mean, mean - half, mean + half
