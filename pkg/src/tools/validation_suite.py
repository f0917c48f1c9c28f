"""
src/tools/validation_suite.py

Oracle suite behind `validate`: GE moment checks, closed-form identities,
simulated M/M/c/N against mmcn_solve, Little's law and conservation.
"""

import logging
from typing import List

import numpy as np
from pqdm.processes import pqdm
from pydantic import BaseModel
from tqdm import tqdm

from src.tools.analytic_oracles import erlang_b, littles_check, mm1n_solve, mmcn_solve
from src.tools.queue_node import Discipline, NodeConfig
from src.tools.router_model import (
    FORWARDING_NODE,
    ArrivalStream,
    ReplicationResult,
    RouterConfig,
    run_replication,
)
from src.tools.variates import GEParams, Rng, ge_samples, replication_seed, sample_scv
from src.utils.stats import mean_ci

logger = logging.getLogger(__name__)

# ================== CONFIG ==================
MU = 17e5
CAPACITY = 50
SERVER_GRID = (1, 4)
LOAD_GRID = (0.3, 0.85, 0.95)
MOMENT_SCV = 4.0
MEAN_TOLERANCE = 0.005      # relative
SCV_TOLERANCE = 0.02        # relative
ATOM_TOLERANCE = 0.005      # absolute
LITTLE_TOLERANCE = 0.01
ORACLE_ABS_FLOOR = 1e-6     # blocking below this is indistinguishable from 0 in a finite run
WARMUP_FRACTION = 0.1


class CheckResult(BaseModel):
    name: str
    success: bool
    detail: str


def check_ge_moments(seed: int, samples: int = 10_000_000) -> List[CheckResult]:
    params = GEParams(rate=MU, scv=MOMENT_SCV)
    draws = ge_samples(params, Rng(seed), samples)
    mean_err = abs(float(draws.mean()) - params.mean) / params.mean
    scv = sample_scv(draws)
    zero_frac = float(np.mean(draws == 0.0))
    expected_zero = 1.0 - 2.0 / (MOMENT_SCV + 1.0)
    return [
        CheckResult(name="ge-mean", success=mean_err <= MEAN_TOLERANCE,
                    detail=f"relative error {mean_err:.4%} over {samples:,} draws"),
        CheckResult(name="ge-scv", success=abs(scv - MOMENT_SCV) / MOMENT_SCV <= SCV_TOLERANCE,
                    detail=f"sample SCV {scv:.4f} (target {MOMENT_SCV})"),
        CheckResult(name="ge-zero-atom", success=abs(zero_frac - expected_zero) <= ATOM_TOLERANCE,
                    detail=f"zero fraction {zero_frac:.4f} (target {expected_zero:.4f})"),
    ]


def check_closed_forms() -> List[CheckResult]:
    results = []

    small = mm1n_solve(1.0, 2.0, 2)
    expected = np.array([4 / 7, 2 / 7, 1 / 7])
    results.append(CheckResult(
        name="mm1n-example", success=bool(np.allclose(small.probabilities, expected, atol=1e-12)),
        detail=f"p = {small.probabilities.round(6).tolist()}",
    ))

    worst = 0.0
    for lam in (0.3, 1.0, 1.7, 4.0):
        a, b = mm1n_solve(lam, 1.0, 20), mmcn_solve(lam, 1.0, 1, 20)
        worst = max(worst, float(np.max(np.abs(a.probabilities - b.probabilities))))
    results.append(CheckResult(name="mmcn-c1-reduction", success=worst < 1e-12,
                               detail=f"max |dp| = {worst:.2e}"))

    worst = 0.0
    for c in (1, 2, 4, 8, 16):
        for load in (0.5, 2.0, 7.5):
            worst = max(worst, abs(mmcn_solve(load, 1.0, c, c).blocking - erlang_b(c, load)))
    results.append(CheckResult(name="mmcn-erlang-b", success=worst < 1e-12,
                               detail=f"max |dB| = {worst:.2e}"))

    at_one = mm1n_solve(1.0, 1.0, 50).mean_in_system
    near = max(abs(mm1n_solve(1.0 + d, 1.0, 50).mean_in_system - at_one) / at_one for d in (-1e-9, 1e-9))
    results.append(CheckResult(name="mm1n-continuity", success=near < 1e-6,
                               detail=f"relative gap {near:.2e} at rho = 1 +/- 1e-9"))
    return results


def _oracle_job(c: int, rho: float, replication: int, seed: int, arrivals: int) -> ReplicationResult:
    config = RouterConfig(forwarding=NodeConfig(
        servers=c, capacity=CAPACITY, discipline=Discipline.FCFS, service=GEParams(rate=MU, scv=1.0),
    ))
    stream = ArrivalStream(traffic_class=0, interarrival=GEParams(rate=rho * c * MU, scv=1.0))
    grid_index = SERVER_GRID.index(c) * len(LOAD_GRID) + LOAD_GRID.index(rho)
    return run_replication(config, [stream], replication_seed(seed, (grid_index, replication)),
                           arrivals, WARMUP_FRACTION)


def _contains(oracle: float, mean: float, lo: float, hi: float) -> bool:
    return lo <= oracle <= hi or abs(oracle - mean) <= ORACLE_ABS_FLOOR


def check_markov_equivalence(seed: int, replications: int = 20, arrivals: int = 1_000_000,
                             parallel: int = 1, progress: bool = True) -> List[CheckResult]:
    jobs = [
        {"c": c, "rho": rho, "replication": r, "seed": seed, "arrivals": arrivals}
        for c in SERVER_GRID for rho in LOAD_GRID for r in range(replications)
    ]
    if parallel > 1:
        runs = pqdm(jobs, _oracle_job, n_jobs=parallel, argument_type="kwargs",
                    desc="M/M/c/N oracle", disable=not progress)
    else:
        runs = [_oracle_job(**job) for job in tqdm(jobs, desc="M/M/c/N oracle", disable=not progress)]

    results = []
    for g, (c, rho) in enumerate((c, rho) for c in SERVER_GRID for rho in LOAD_GRID):
        batch = runs[g * replications:(g + 1) * replications]
        failed = [r for r in batch if isinstance(r, BaseException)]
        if failed:
            results.append(CheckResult(name=f"oracle c={c} rho={rho}", success=False, detail=repr(failed[0])))
            continue
        oracle = mmcn_solve(rho * c * MU, MU, c, CAPACITY)
        reports = [r.nodes[FORWARDING_NODE] for r in batch]

        mean, lo, hi = mean_ci([m.total_loss for m in reports])
        results.append(CheckResult(
            name=f"oracle-blocking c={c} rho={rho}", success=_contains(oracle.blocking, mean, lo, hi),
            detail=f"oracle {oracle.blocking:.6g}, sim {mean:.6g} [{lo:.6g}, {hi:.6g}]",
        ))
        mean, lo, hi = mean_ci([m.total_in_system for m in reports])
        results.append(CheckResult(
            name=f"oracle-L c={c} rho={rho}", success=_contains(oracle.mean_in_system, mean, lo, hi),
            detail=f"oracle {oracle.mean_in_system:.6g}, sim {mean:.6g} [{lo:.6g}, {hi:.6g}]",
        ))

        residual = max(littles_check(m) for m in reports)
        results.append(CheckResult(
            name=f"littles-law c={c} rho={rho}", success=residual < LITTLE_TOLERANCE,
            detail=f"worst residual {residual:.3%}",
        ))
        results.append(CheckResult(
            name=f"conservation c={c} rho={rho}", success=all(r.conservation_holds() for r in batch),
            detail=f"{len(batch)} replications",
        ))
    return results


def run_validation(seed: int, replications: int = 20, arrivals: int = 1_000_000,
                   moment_samples: int = 10_000_000, parallel: int = 1,
                   progress: bool = True) -> List[CheckResult]:
    results = check_ge_moments(seed, moment_samples) + check_closed_forms()
    results += check_markov_equivalence(seed, replications, arrivals, parallel, progress)
    for result in results:
        log = logger.info if result.success else logger.error
        log(f"{'✓' if result.success else '❌'} {result.name}: {result.detail}")
    failed = sum(1 for r in results if not r.success)
    logger.info(f"Validation: {len(results) - failed}/{len(results)} checks passed")
    return results
