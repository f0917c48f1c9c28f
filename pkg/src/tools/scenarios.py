"""
src/tools/scenarios.py

Scenario grid (A-D), replication fan-out and aggregation into a MetricsReport.

A scenario holds the fixed router parameters plus four arm axes
(arrival-SCV pairs, server counts, disciplines, security settings); its arms
are the cartesian product of those axes. Every arm is run at every lambda1
sweep point for R replications.

Replication r at sweep point i uses SeedSequence(base_seed, spawn_key=(i, r))
for every arm, so arms are compared under common random numbers.
"""

import itertools
import logging
import time
from typing import Dict, List, Optional, Tuple

from pqdm.processes import pqdm
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tqdm import tqdm

from src.tools.queue_node import Discipline, NodeConfig
from src.tools.router_model import (
    METRICS,
    TOTAL_LABEL,
    ArrivalStream,
    ReplicationResult,
    RouterConfig,
    SecurityMode,
    run_replication,
)
from src.tools.variates import GEParams, replication_seed
from src.utils.stats import mean_ci

logger = logging.getLogger(__name__)

# ================== CONFIG ==================
LAMBDA1_SWEEP = [i * 1e5 for i in range(1, 11)]  # packets/s
LAMBDA2 = 5e5
MU = 17e5
SCV_SERVICE = 4.0
SCV_ARRIVAL = 4.0
CAPACITY = 50
SERVERS = 4
ACCEPT_PROB = 1.0
ACL_MU = 2 * MU
ACL_SCV = 4.0
REPLICATIONS = 20
ARRIVALS_PER_REPLICATION = 1_000_000
WARMUP_FRACTION = 0.1

BUILTIN_IDS = ("A", "B", "C", "D")


class ArmSpec(BaseModel):
    """One configuration arm of a scenario"""

    model_config = ConfigDict(frozen=True)

    label: str
    scv_arrival: Tuple[float, float]
    servers: int
    discipline: Discipline
    security: SecurityMode


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    lambda1_sweep: List[float] = Field(min_length=1)
    lambda2: float = Field(default=LAMBDA2, ge=0)
    mu: float = Field(default=MU, gt=0)
    scv_s: float = Field(default=SCV_SERVICE, ge=1)
    scv_arrivals: List[Tuple[float, float]] = Field(default_factory=lambda: [(SCV_ARRIVAL, SCV_ARRIVAL)], min_length=1)
    capacity: int = Field(default=CAPACITY, ge=1)
    servers: List[int] = Field(default_factory=lambda: [SERVERS], min_length=1)
    disciplines: List[Discipline] = Field(default_factory=lambda: [Discipline.HOL], min_length=1)
    security: List[SecurityMode] = Field(default_factory=lambda: [SecurityMode.OFF], min_length=1)
    accept_prob: float = Field(default=ACCEPT_PROB, ge=0, le=1)
    acl_mu: float = Field(default=ACL_MU, gt=0)
    acl_scv: float = Field(default=ACL_SCV, ge=1)
    replications: int = Field(default=REPLICATIONS, ge=1)
    arrivals_per_replication: int = Field(default=ARRIVALS_PER_REPLICATION, gt=0)
    warmup_fraction: float = Field(default=WARMUP_FRACTION, ge=0, lt=1)

    @field_validator("lambda1_sweep")
    @classmethod
    def _positive_rates(cls, sweep: List[float]) -> List[float]:
        if any(rate <= 0 for rate in sweep):
            raise ValueError("lambda1 sweep values must be > 0")
        return sweep

    @field_validator("scv_arrivals")
    @classmethod
    def _ge_scvs(cls, pairs: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if any(scv < 1 for pair in pairs for scv in pair):
            raise ValueError("arrival SCVs must be >= 1 (GE requires scv >= 1)")
        return pairs

    @model_validator(mode="after")
    def _banks_fit(self):
        for c in self.servers:
            if not 1 <= c <= self.capacity:
                raise ValueError(f"server count {c} must be in [1, capacity={self.capacity}]")
        return self

    # ---------- arms ----------
    def arms(self) -> List[ArmSpec]:
        axes = [
            ("SCV", self.scv_arrivals),
            ("c", self.servers),
            ("discipline", self.disciplines),
            ("SEC", self.security),
        ]
        varying = {name for name, values in axes if len(values) > 1}
        arms = []
        for scv, c, discipline, security in itertools.product(*(values for _, values in axes)):
            parts = []
            if "SCV" in varying:
                parts.append(f"SCV={_fmt_scv(scv)}")
            if "c" in varying:
                parts.append(f"c={c}")
            if "discipline" in varying:
                parts.append(discipline.value)
            if "SEC" in varying:
                parts.append(f"SEC={security.value}")
            arms.append(ArmSpec(
                label="/".join(parts) or "base",
                scv_arrival=scv,
                servers=c,
                discipline=discipline,
                security=security,
            ))
        return arms

    def router_config(self, arm: ArmSpec) -> RouterConfig:
        forwarding = NodeConfig(
            servers=arm.servers,
            capacity=self.capacity,
            discipline=arm.discipline,
            service=GEParams(rate=self.mu, scv=self.scv_s),
        )
        acl = None
        if arm.security is SecurityMode.ON:
            acl = NodeConfig(
                servers=arm.servers,
                capacity=self.capacity,
                discipline=arm.discipline,
                service=GEParams(rate=self.acl_mu, scv=self.acl_scv),
            )
        return RouterConfig(security=arm.security, acl=acl, forwarding=forwarding, accept_prob=self.accept_prob)

    def streams(self, arm: ArmSpec, lambda1: float) -> List[ArrivalStream]:
        scv1, scv2 = arm.scv_arrival
        return [
            ArrivalStream(traffic_class=0, interarrival=GEParams(rate=lambda1, scv=scv1)),
            ArrivalStream(
                traffic_class=1,
                interarrival=GEParams(rate=self.lambda2, scv=scv2) if self.lambda2 > 0 else None,
            ),
        ]

    # ---------- config text ----------
    def to_config_text(self) -> str:
        """Canonical `key = value` form (sorted keys); parse_config reads it back"""
        values = {
            "scenario": self.id,
            "lambda1_sweep": ", ".join(repr(float(x)) for x in self.lambda1_sweep),
            "lambda2": repr(float(self.lambda2)),
            "mu": repr(float(self.mu)),
            "scv_s": repr(float(self.scv_s)),
            "scv_a1": ", ".join(repr(float(a)) for a, _ in self.scv_arrivals),
            "scv_a2": ", ".join(repr(float(b)) for _, b in self.scv_arrivals),
            "capacity": str(self.capacity),
            "servers": ", ".join(str(c) for c in self.servers),
            "discipline": ", ".join(d.value for d in self.disciplines),
            "security": ", ".join(s.value for s in self.security),
            "accept_prob": repr(float(self.accept_prob)),
            "acl_mu": repr(float(self.acl_mu)),
            "acl_scv": repr(float(self.acl_scv)),
            "replications": str(self.replications),
            "arrivals_per_replication": str(self.arrivals_per_replication),
            "warmup_fraction": repr(float(self.warmup_fraction)),
        }
        return "".join(f"{key} = {values[key]}\n" for key in sorted(values))


def _fmt_scv(pair: Tuple[float, float]) -> str:
    a, b = pair
    return f"{a:g}" if a == b else f"{a:g},{b:g}"


def builtin_scenarios() -> List[ScenarioSpec]:
    """Scenarios A-D with the published parameterisation"""
    return [
        ScenarioSpec(
            id="A",
            lambda1_sweep=LAMBDA1_SWEEP,
            disciplines=[Discipline.FCFS, Discipline.HOL],
            security=[SecurityMode.OFF],
        ),
        ScenarioSpec(
            id="B",
            lambda1_sweep=LAMBDA1_SWEEP,
            scv_arrivals=[(5.0, 5.0), (10.0, 10.0)],
            security=[SecurityMode.OFF, SecurityMode.ON],
        ),
        ScenarioSpec(
            id="C",
            lambda1_sweep=LAMBDA1_SWEEP,
            servers=[1, 4],
        ),
        ScenarioSpec(
            id="D",
            lambda1_sweep=LAMBDA1_SWEEP,
            security=[SecurityMode.OFF, SecurityMode.ON],
        ),
    ]


def builtin_scenario(scenario_id: str) -> ScenarioSpec:
    for spec in builtin_scenarios():
        if spec.id == scenario_id.upper():
            return spec
    raise KeyError(f"unknown scenario: {scenario_id}")


# ================== REPORT ==================
class MetricRow(BaseModel):
    scenario: str
    arm: str
    lambda1: float
    traffic_class: str
    metric: str
    mean: float
    ci95_lo: float
    ci95_hi: float
    replications: int


class MetricsReport(BaseModel):
    scenario: str
    base_seed: int
    replications: int
    arms: List[str]
    rows: List[MetricRow] = Field(default_factory=list)
    failures: List[Dict] = Field(default_factory=list)

    def rows_for(self, arm: Optional[str] = None, metric: Optional[str] = None,
                 traffic_class: Optional[str] = None) -> List[MetricRow]:
        return [
            r for r in self.rows
            if (arm is None or r.arm == arm)
            and (metric is None or r.metric == metric)
            and (traffic_class is None or r.traffic_class == traffic_class)
        ]

    def row_counts(self) -> Dict[str, int]:
        counts = {arm: 0 for arm in self.arms}
        for row in self.rows:
            counts[row.arm] = counts.get(row.arm, 0) + 1
        return counts


# ================== RUNNER ==================
def _replication_job(spec: ScenarioSpec, arm_index: int, point_index: int,
                     replication: int, base_seed: int) -> ReplicationResult:
    arm = spec.arms()[arm_index]
    return run_replication(
        spec.router_config(arm),
        spec.streams(arm, spec.lambda1_sweep[point_index]),
        replication_seed(base_seed, (point_index, replication)),
        spec.arrivals_per_replication,
        spec.warmup_fraction,
    )


def run_scenario(spec: ScenarioSpec, base_seed: int, parallel: int = 1,
                 progress: bool = True) -> MetricsReport:
    """
    Run every arm x sweep point x replication and aggregate mean + 95% CI.

    Results are gathered in job order, so serial and parallel runs with the
    same seed give identical reports. A failing arm is reported in
    `failures` and the other arms continue.
    """
    arms = spec.arms()
    jobs = [
        {"spec": spec, "arm_index": a, "point_index": i, "replication": r, "base_seed": base_seed}
        for a in range(len(arms))
        for i in range(len(spec.lambda1_sweep))
        for r in range(spec.replications)
    ]
    logger.info(
        f"▶️  Scenario {spec.id}: {len(arms)} arms x {len(spec.lambda1_sweep)} points "
        f"x {spec.replications} replications ({len(jobs)} runs, parallel={parallel})"
    )
    started = time.time()

    if parallel > 1:
        results = pqdm(jobs, _replication_job, n_jobs=parallel, argument_type="kwargs",
                       desc=f"Scenario {spec.id}", disable=not progress)
    else:
        results = []
        for job in tqdm(jobs, desc=f"Scenario {spec.id}", disable=not progress):
            try:
                results.append(_replication_job(**job))
            except Exception as e:
                results.append(e)

    report = MetricsReport(
        scenario=spec.id,
        base_seed=base_seed,
        replications=spec.replications,
        arms=[arm.label for arm in arms],
    )
    per_arm = len(spec.lambda1_sweep) * spec.replications
    for a, arm in enumerate(arms):
        arm_results = results[a * per_arm:(a + 1) * per_arm]
        errors = [r for r in arm_results if isinstance(r, BaseException)]
        if errors:
            logger.warning(f"⚠️  Arm {arm.label} failed: {errors[0]!r}")
            report.failures.append({"arm": arm.label, "success": False, "error": repr(errors[0])})
            continue
        report.rows.extend(_aggregate(spec, arm, arm_results))
        _log_arm_summary(spec, arm, arm_results)

    logger.info(f"✓ Scenario {spec.id} done in {time.time() - started:.1f}s "
                f"({len(report.rows)} rows, {len(report.failures)} failed arms)")
    return report


def _aggregate(spec: ScenarioSpec, arm: ArmSpec, arm_results: List[ReplicationResult]) -> List[MetricRow]:
    rows = []
    for i, lambda1 in enumerate(spec.lambda1_sweep):
        point = arm_results[i * spec.replications:(i + 1) * spec.replications]
        labels = [label for label in point[0].metrics if label != TOTAL_LABEL] + [TOTAL_LABEL]
        for label in labels:
            for metric in METRICS:
                mean, lo, hi = mean_ci([r.metrics[label][metric] for r in point])
                rows.append(MetricRow(
                    scenario=spec.id, arm=arm.label, lambda1=lambda1, traffic_class=label,
                    metric=metric, mean=mean, ci95_lo=lo, ci95_hi=hi,
                    replications=len(point),
                ))
    return rows


def _log_arm_summary(spec: ScenarioSpec, arm: ArmSpec, arm_results: List[ReplicationResult]) -> None:
    offered = sum(sum(r.offered) for r in arm_results)
    rejected = sum(sum(r.rejected) for r in arm_results)
    buffer_lost = sum(sum(r.acl_lost) + sum(r.forwarding_lost) for r in arm_results)
    broken = sum(1 for r in arm_results if not r.conservation_holds())
    logger.info(
        f"   {arm.label}: offered={offered:,} buffer-lost={buffer_lost:,} "
        f"security-rejected={rejected:,}"
    )
    if broken:
        logger.error(f"❌ {arm.label}: conservation violated in {broken} replications")
