"""
Scenario config parser.

Format: one `key = value` per line, `#` starts a comment, blank lines are
ignored. Sweeps are `start:stop:step` (stop inclusive) or a comma list.

    scenario = B
    lambda1_sweep = 1e5:10e5:1e5
    scv_a1 = 5, 10
    scv_a2 = 5, 10
    security = OFF, ON
"""

import math
from typing import Callable, Dict, List, Tuple

from pydantic import ValidationError

from src.tools.queue_node import Discipline
from src.tools.router_model import SecurityMode
from src.tools.scenarios import BUILTIN_IDS, ScenarioSpec, builtin_scenario

CUSTOM = "custom"
CUSTOM_REQUIRED = ("lambda1_sweep", "lambda2", "mu", "servers", "discipline", "security")
MAX_SWEEP_POINTS = 10_000


class ConfigError(ValueError):
    """Config problem located at a 1-based line/column"""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}" if line else message)


# ---------- value converters ----------
def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"malformed number {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"number must be finite, got {text!r}")
    return value


def _integer(text: str) -> int:
    value = _number(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _items(text: str) -> List[str]:
    items = [item.strip() for item in text.split(",")]
    if any(not item for item in items):
        raise ValueError(f"empty item in list {text!r}")
    return items


def _sweep(text: str) -> List[float]:
    if ":" not in text:
        return [_number(item) for item in _items(text)]
    parts = [p.strip() for p in text.split(":")]
    if len(parts) != 3:
        raise ValueError(f"sweep must be start:stop:step, got {text!r}")
    start, stop, step = (_number(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"sweep needs step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step)) + 1
    if count > MAX_SWEEP_POINTS:
        raise ValueError(f"sweep has {count} points (limit {MAX_SWEEP_POINTS})")
    return [start + i * step for i in range(count)]


def _scv_list(text: str) -> List[float]:
    values = [_number(item) for item in _items(text)]
    if any(v < 1 for v in values):
        raise ValueError(f"SCV must be >= 1 for a GE distribution, got {text!r}")
    return values


def _enum_list(enum_cls) -> Callable[[str], list]:
    def convert(text: str) -> list:
        out = []
        for item in _items(text):
            try:
                out.append(enum_cls(item.upper()))
            except ValueError:
                allowed = "|".join(e.value for e in enum_cls)
                raise ValueError(f"unknown value {item!r} (expected {allowed})") from None
        return out
    return convert


def _scenario(text: str) -> str:
    if text.upper() in BUILTIN_IDS:
        return text.upper()
    if text.lower() == CUSTOM:
        return CUSTOM
    raise ValueError(f"unknown scenario {text!r} (expected A|B|C|D|custom)")


# key -> (converter, ScenarioSpec field)
KEYS: Dict[str, Tuple[Callable, str]] = {
    "scenario": (_scenario, "id"),
    "lambda1_sweep": (_sweep, "lambda1_sweep"),
    "lambda2": (_number, "lambda2"),
    "mu": (_number, "mu"),
    "scv_s": (_number, "scv_s"),
    "scv_a1": (_scv_list, "scv_arrivals"),
    "scv_a2": (_scv_list, "scv_arrivals"),
    "capacity": (_integer, "capacity"),
    "servers": (lambda t: [_integer(i) for i in _items(t)], "servers"),
    "discipline": (_enum_list(Discipline), "disciplines"),
    "security": (_enum_list(SecurityMode), "security"),
    "accept_prob": (_number, "accept_prob"),
    "acl_mu": (_number, "acl_mu"),
    "acl_scv": (_number, "acl_scv"),
    "replications": (_integer, "replications"),
    "arrivals_per_replication": (_integer, "arrivals_per_replication"),
    "warmup_fraction": (_number, "warmup_fraction"),
}


def parse_config(text: str) -> ScenarioSpec:
    """Parse and fully validate a scenario config; unknown keys are errors"""
    values: Dict[str, object] = {}
    where: Dict[str, Tuple[int, int]] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError("expected `key = value`", line_no, len(raw) - len(raw.lstrip()) + 1)
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        value_col = len(key_part) + 1 + (len(value_part) - len(value_part.lstrip())) + 1
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", line_no, key_col)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line_no, key_col)
        value = value_part.strip()
        if not value:
            raise ConfigError(f"missing value for {key!r}", line_no, value_col)
        converter, _ = KEYS[key]
        try:
            values[key] = converter(value)
        except ValueError as e:
            raise ConfigError(str(e), line_no, value_col) from None
        where[key] = (line_no, value_col)

    if "scenario" not in values:
        raise ConfigError("missing required key 'scenario'", 1, 1)
    scenario = values["scenario"]
    if scenario == CUSTOM:
        missing = [k for k in CUSTOM_REQUIRED if k not in values]
        if missing:
            raise ConfigError(f"scenario = custom requires: {', '.join(missing)}", *where["scenario"])

    fields = builtin_scenario(scenario).model_dump() if scenario != CUSTOM else {}
    fields["id"] = scenario
    for key, value in values.items():
        _, field = KEYS[key]
        if field not in ("id", "scv_arrivals"):
            fields[field] = value

    if "scv_a1" in values or "scv_a2" in values:
        base = fields.get("scv_arrivals") or []
        a1 = values.get("scv_a1", [a for a, _ in base])
        a2 = values.get("scv_a2", [b for _, b in base])
        if len(a1) != len(a2):
            if len(a1) == 1:
                a1 = a1 * len(a2)
            elif len(a2) == 1:
                a2 = a2 * len(a1)
            else:
                line, col = where.get("scv_a2", where.get("scv_a1"))
                raise ConfigError(f"scv_a1 and scv_a2 lengths differ ({len(a1)} vs {len(a2)})", line, col)
        fields["scv_arrivals"] = list(zip(a1, a2))

    try:
        return ScenarioSpec(**fields)
    except ValidationError as e:
        error = e.errors()[0]
        field = error["loc"][0] if error["loc"] else ""
        key = next((k for k, (_, f) in KEYS.items() if f == field and k in where), "scenario")
        line, col = where.get(key, (1, 1))
        raise ConfigError(f"{key}: {error['msg']}", line, col) from None
