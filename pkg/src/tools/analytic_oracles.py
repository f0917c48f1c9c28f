"""
src/tools/analytic_oracles.py

Closed-form finite-capacity Markovian queues (M/M/1/N, M/M/c/N), the
Erlang-B recursion and the Little's-law residual. Used to validate the
simulator in the SCV = 1 case.
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import gammaln, logsumexp

from src.tools.queue_node import NodeMetrics
from src.tools.variates import InvalidParameterError

LITTLE_EPS = 1e-12


class MarkovQueueResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    probabilities: np.ndarray
    blocking: float
    mean_in_system: float
    mean_queue: float
    throughput: float
    response_time: float


def _check(lam: float, mu: float, c: int, capacity: int) -> None:
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if not mu > 0:
        raise InvalidParameterError(f"mu must be > 0, got {mu}")
    if not 1 <= c <= capacity:
        raise InvalidParameterError(f"need 1 <= c <= N, got c={c}, N={capacity}")


def _solve(log_weights: np.ndarray, lam: float, c: int) -> MarkovQueueResult:
    # normalise in log space so large N or c neither overflows nor loses mass
    probs = np.exp(log_weights - logsumexp(log_weights))
    n = np.arange(probs.size)
    blocking = float(probs[-1])
    mean_in_system = float(np.dot(n, probs))
    mean_queue = float(np.dot(np.maximum(n - c, 0), probs))
    throughput = lam * (1.0 - blocking)
    return MarkovQueueResult(
        probabilities=probs,
        blocking=blocking,
        mean_in_system=mean_in_system,
        mean_queue=mean_queue,
        throughput=throughput,
        response_time=mean_in_system / throughput,
    )


def mm1n_solve(lam: float, mu: float, capacity: int) -> MarkovQueueResult:
    """
    M/M/1/N: p_n = rho^n p_0 with p_0 = (1 - rho) / (1 - rho^(N+1))
    (p_0 = 1 / (N + 1) at rho = 1).
    """
    _check(lam, mu, 1, capacity)
    n = np.arange(capacity + 1)
    return _solve(n * math.log(lam / mu), lam, 1)


def mmcn_solve(lam: float, mu: float, c: int, capacity: int) -> MarkovQueueResult:
    """
    M/M/c/N birth-death solution: p_n ~ a^n / n! for n <= c and
    a^n / (c! c^(n-c)) for c < n <= N, with a = lambda / mu.
    """
    _check(lam, mu, c, capacity)
    n = np.arange(capacity + 1)
    log_a = math.log(lam / mu)
    log_weights = np.where(
        n <= c,
        n * log_a - gammaln(n + 1),
        n * log_a - gammaln(c + 1) - (n - c) * math.log(c),
    )
    return _solve(log_weights, lam, c)


def erlang_b(c: int, offered_load: float) -> float:
    """Erlang-B blocking by the stable recursion B(k) = a B(k-1) / (k + a B(k-1))"""
    if c < 1 or offered_load < 0:
        raise InvalidParameterError(f"need c >= 1 and load >= 0, got c={c}, a={offered_load}")
    b = 1.0
    for k in range(1, c + 1):
        b = offered_load * b / (k + offered_load * b)
    return b


def littles_check(report: NodeMetrics, traffic_class: Optional[int] = None) -> float:
    """
    |L - lambda_eff W| / max(L, eps), lambda_eff = admitted / window.

    Per class when `traffic_class` is given, class aggregate otherwise.
    Returns 0 when both sides vanish.
    """
    if report.interval <= 0:
        return 0.0
    if traffic_class is None:
        mean_in_system = report.total_in_system
        lam_eff = report.throughput
        response = report.total_response_time
    else:
        mean_in_system = report.mean_in_system[traffic_class]
        lam_eff = report.admitted[traffic_class] / report.interval
        response = report.response_time[traffic_class]
    product = lam_eff * response
    if mean_in_system == 0.0 and product == 0.0:
        return 0.0
    return abs(mean_in_system - product) / max(mean_in_system, LITTLE_EPS)
