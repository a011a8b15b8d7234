"""Domain types and configuration handling for the brownout simulator.

The object model mirrors a small container data center: a fleet of hosts,
each hosting replicas of mandatory and optional containers, driven by a
request trace and governed by a scaling/brownout policy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path

WEIGHT_SUM_TOL = 1e-9


class HostMode(str, Enum):
    OFF = "off"
    SLEEP = "sleep"
    BOOTING = "booting"
    ACTIVE = "active"


POLICY_NAMES = ("NPA", "AUTOS", "LUCF", "MNCF", "RSC")

# Utilization -> watts curve for the reference machine, measured at 10%
# steps.  Sleep draw is flat; off draws nothing.
DEFAULT_BREAKPOINTS = (
    (0.0, 201.0),
    (0.1, 206.0),
    (0.2, 211.0),
    (0.3, 213.0),
    (0.4, 216.0),
    (0.5, 221.0),
    (0.6, 223.0),
    (0.7, 225.0),
    (0.8, 231.0),
    (0.9, 233.0),
    (1.0, 237.0),
)
DEFAULT_SLEEP_POWER_W = 10.0


@dataclass(frozen=True)
class PowerProfile:
    """Piecewise-linear utilization->power curve plus the sleep draw."""

    breakpoints: tuple = DEFAULT_BREAKPOINTS
    sleep_power_w: float = DEFAULT_SLEEP_POWER_W

    @property
    def idle_power_w(self) -> float:
        return self.breakpoints[0][1]

    @property
    def max_power_w(self) -> float:
        return self.breakpoints[-1][1]

    def violations(self, prefix: str = "hosts.power_profile") -> list:
        out = []
        bps = self.breakpoints
        if len(bps) < 2:
            out.append(f"{prefix}: needs at least two breakpoints")
            return out
        if bps[0][0] != 0.0:
            out.append(f"{prefix}: first breakpoint must be at utilization 0.0")
        if bps[-1][0] != 1.0:
            out.append(f"{prefix}: last breakpoint must be at utilization 1.0")
        for i in range(1, len(bps)):
            if bps[i][0] <= bps[i - 1][0]:
                out.append(f"{prefix}: utilizations must be strictly increasing")
                break
        for i in range(1, len(bps)):
            if bps[i][1] < bps[i - 1][1]:
                out.append(f"{prefix}: power must be non-decreasing")
                break
        if self.sleep_power_w < 0:
            out.append(f"{prefix}.sleep_power_w: must be >= 0")
        elif not out and self.sleep_power_w >= self.idle_power_w:
            out.append(f"{prefix}.sleep_power_w: must be below idle power ({self.idle_power_w} W)")
        return out


def linear_profile(idle_w: float = 201.0, max_w: float = 237.0,
                   sleep_w: float = DEFAULT_SLEEP_POWER_W) -> PowerProfile:
    """Two-point profile: idle + utilization * (max - idle)."""
    return PowerProfile(breakpoints=((0.0, idle_w), (1.0, max_w)), sleep_power_w=sleep_w)


@dataclass(frozen=True)
class ContainerSpec:
    """A container image in a service stack.

    weight is the share of one request's processing cost this container is
    responsible for; per service the weights sum to 1.  Optional containers
    may carry a connection_tag: same-tag containers on a host only function
    together and are deactivated together.
    """

    id: str
    service: str
    weight: float
    optional: bool = False
    connection_tag: str | None = None
    replicas: int = 1


@dataclass
class ContainerInstance:
    """One deployed replica of a ContainerSpec on a host."""

    id: str
    spec_id: str
    host_id: str
    active: bool = True
    utilization: float = 0.0


@dataclass
class HostState:
    id: str
    mode: HostMode = HostMode.ACTIVE
    boot_remaining: int = 0
    instances: list = field(default_factory=list)
    utilization: float = 0.0
    power_w: float = 0.0

    def active_weight(self, specs_by_id: dict) -> float:
        return sum(specs_by_id[i.spec_id].weight for i in self.instances if i.active)

    def total_weight(self, specs_by_id: dict) -> float:
        return sum(specs_by_id[i.spec_id].weight for i in self.instances)

    def optional_instances(self, specs_by_id: dict) -> list:
        return [i for i in self.instances if specs_by_id[i.spec_id].optional]

    def deactivated_instances(self) -> list:
        return [i for i in self.instances if not i.active]


@dataclass
class PolicyConfig:
    """Knobs shared by every policy run."""

    overloaded_threshold_u_t: float = 0.8
    optional_util_pct: float = 0.0  # 0 keeps the configured weights untouched
    window_size_L_w: int = 5
    capacity_n_o: float = 25.0  # requests per interval one host absorbs before overload
    min_active_hosts: int = 1
    boot_delay: int = 1
    sla_alpha: float = 0.1
    sla_beta: float = 1000.0
    sla_phi: float = 2000.0
    sla_gamma: float = 0.02
    percentile_k: int = 95
    seed: int = 42
    # Fraction of the capacity freed by deactivated containers that the
    # auto-scaler is allowed to bank on.  0 sizes for the full stack at all
    # times, 1 trusts the shed state completely.
    capacity_credit: float = 0.35
    weighted_prediction: bool = False


@dataclass
class SimConfig:
    policy_name: str = "AUTOS"
    host_count: int = 10
    power_profile: PowerProfile = field(default_factory=PowerProfile)
    services: list = field(default_factory=list)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    trace_path: str = ""
    trace_scale: float = 1.0
    interval_seconds: float = 60.0
    base_response_ms: float = 100.0

    def specs_by_id(self) -> dict:
        return {s.id: s for s in self.services}


@dataclass
class IntervalRecord:
    t: int
    requests: int
    active_hosts: int
    per_host: list = field(default_factory=list)  # (host_id, utilization, power_w, overloaded)
    response_samples_ms: list = field(default_factory=list)
    errors: int = 0
    deactivated_containers: int = 0

    @property
    def total_power_w(self) -> float:
        return sum(p[2] for p in self.per_host)

    @property
    def overloaded_hosts(self) -> int:
        return sum(1 for p in self.per_host if p[3])


@dataclass
class RunResult:
    policy_name: str
    seed: int
    energy_kwh: float
    otr_mean: float
    avg_response_ms: float
    p_kth_response_ms: float
    slavr: float | None  # None marks no requests at all (not zero violations)
    active_host_series: list
    interval_records: list
    per_host_otr: dict
    total_requests: int
    total_errors: int


# ---------------------------------------------------------------------------
# Validation


def validate_config(cfg: SimConfig) -> list:
    """Collect config violations as strings; an empty list means valid.

    Violations are data for the caller to report, not exceptions.
    """
    v = []
    if cfg.policy_name not in POLICY_NAMES:
        v.append(f"policy_name: unknown policy {cfg.policy_name!r}, expected one of {'/'.join(POLICY_NAMES)}")
    if cfg.host_count < 1:
        v.append(f"host_count: must be >= 1 (got {cfg.host_count})")
    v.extend(cfg.power_profile.violations())

    if not cfg.services:
        v.append("services: at least one container spec is required")
    seen = set()
    services = {}
    for i, s in enumerate(cfg.services):
        where = f"services[{i}] ({s.id})"
        if s.id in seen:
            v.append(f"{where}: duplicate container id")
        seen.add(s.id)
        if not (0.0 < s.weight <= 1.0):
            v.append(f"{where}.weight: must be in (0, 1] (got {s.weight})")
        if s.replicas < 1:
            v.append(f"{where}.replicas: must be >= 1 (got {s.replicas})")
        if s.connection_tag is not None and not s.optional:
            v.append(f"{where}: connection_tag only applies to optional containers")
        services.setdefault(s.service, []).append(s)
    for name, specs in services.items():
        total = sum(s.weight for s in specs)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            v.append(f"services ({name}): container weights must sum to 1 (got {total!r})")
        if all(s.optional for s in specs):
            v.append(f"services ({name}): needs at least one mandatory container")

    p = cfg.policy
    if not (0.5 <= p.overloaded_threshold_u_t <= 1.0):
        v.append(f"policy.overloaded_threshold_u_t: must be within [0.5, 1.0] (got {p.overloaded_threshold_u_t})")
    if not (0.0 <= p.optional_util_pct <= 0.5):
        v.append(f"policy.optional_util_pct: must be within [0, 0.5] (got {p.optional_util_pct})")
    if p.window_size_L_w < 1:
        v.append(f"policy.window_size_L_w: must be >= 1 (got {p.window_size_L_w})")
    if p.capacity_n_o <= 0:
        v.append(f"policy.capacity_n_o: must be > 0 (got {p.capacity_n_o})")
    if not (1 <= p.min_active_hosts <= cfg.host_count):
        v.append(f"policy.min_active_hosts: must be within [1, host_count] (got {p.min_active_hosts})")
    if p.boot_delay < 1:
        v.append(f"policy.boot_delay: must be >= 1 (got {p.boot_delay})")
    for bound, name in ((p.sla_alpha, "sla_alpha"), (p.sla_gamma, "sla_gamma")):
        if not (0.0 <= bound <= 1.0):
            v.append(f"policy.{name}: must be within [0, 1] (got {bound})")
    for bound, name in ((p.sla_beta, "sla_beta"), (p.sla_phi, "sla_phi")):
        if bound <= 0:
            v.append(f"policy.{name}: must be > 0 (got {bound})")
    if not (1 <= p.percentile_k <= 100):
        v.append(f"policy.percentile_k: must be within [1, 100] (got {p.percentile_k})")
    if not (0.0 <= p.capacity_credit <= 1.0):
        v.append(f"policy.capacity_credit: must be within [0, 1] (got {p.capacity_credit})")
    if cfg.trace_scale <= 0:
        v.append(f"trace.scale: must be > 0 (got {cfg.trace_scale})")
    if cfg.interval_seconds <= 0:
        v.append(f"trace.interval_seconds: must be > 0 (got {cfg.interval_seconds})")
    if cfg.base_response_ms <= 0:
        v.append(f"base_response_ms: must be > 0 (got {cfg.base_response_ms})")
    return v


def scaled_services(services: list, optional_util_pct: float) -> list:
    """Rescale container weights so optional weight per service equals the
    requested fraction.  A pct of 0 means "as configured"."""
    if optional_util_pct <= 0:
        return list(services)
    out = []
    by_service = {}
    for s in services:
        by_service.setdefault(s.service, []).append(s)
    for name, specs in by_service.items():
        opt = sum(s.weight for s in specs if s.optional)
        mand = sum(s.weight for s in specs if not s.optional)
        if opt <= 0 or mand <= 0:
            out.extend(specs)
            continue
        for s in specs:
            f = optional_util_pct / opt if s.optional else (1.0 - optional_util_pct) / mand
            out.append(ContainerSpec(id=s.id, service=s.service, weight=s.weight * f,
                                     optional=s.optional, connection_tag=s.connection_tag,
                                     replicas=s.replicas))
    return out


def place_replicas(cfg: SimConfig) -> dict:
    """Round-robin the replicas of each spec across the fleet.

    Returns host_id -> list of spec ids.  Every replica lands on exactly one
    host; hosts are filled lowest id first.
    """
    placement = {host_id(i): [] for i in range(cfg.host_count)}
    for s in cfg.services:
        for r in range(s.replicas):
            placement[host_id(r % cfg.host_count)].append(s.id)
    return placement


def host_id(index: int) -> str:
    return f"h{index:02d}"


# ---------------------------------------------------------------------------
# JSON config round trip


def config_to_dict(cfg: SimConfig) -> dict:
    return {
        "policy_name": cfg.policy_name,
        "hosts": {
            "count": cfg.host_count,
            "boot_delay": cfg.policy.boot_delay,
            "power_breakpoints": [list(bp) for bp in cfg.power_profile.breakpoints],
            "sleep_power_w": cfg.power_profile.sleep_power_w,
        },
        "services": [
            {k: v for k, v in asdict(s).items() if not (k == "connection_tag" and v is None)}
            for s in cfg.services
        ],
        "policy": {
            "overloaded_threshold_u_t": cfg.policy.overloaded_threshold_u_t,
            "optional_util_pct": cfg.policy.optional_util_pct,
            "window_size_L_w": cfg.policy.window_size_L_w,
            "capacity_n_o": cfg.policy.capacity_n_o,
            "min_active_hosts": cfg.policy.min_active_hosts,
            "sla_alpha": cfg.policy.sla_alpha,
            "sla_beta": cfg.policy.sla_beta,
            "sla_phi": cfg.policy.sla_phi,
            "sla_gamma": cfg.policy.sla_gamma,
            "percentile_k": cfg.policy.percentile_k,
            "seed": cfg.policy.seed,
            "capacity_credit": cfg.policy.capacity_credit,
            "weighted_prediction": cfg.policy.weighted_prediction,
        },
        "trace": {
            "path": cfg.trace_path,
            "scale": cfg.trace_scale,
            "interval_seconds": cfg.interval_seconds,
        },
        "base_response_ms": cfg.base_response_ms,
    }


def config_from_dict(raw: dict, base_dir: str | None = None) -> SimConfig:
    """Build a SimConfig from parsed JSON.  Keys starting with '_' are
    treated as annotations and skipped.  Relative trace paths resolve
    against base_dir (normally the config file's directory)."""

    def clean(d):
        return {k: v for k, v in d.items() if not k.startswith("_")}

    raw = clean(raw)
    hosts = clean(raw.get("hosts", {}))
    policy_raw = clean(raw.get("policy", {}))
    trace = clean(raw.get("trace", {}))

    if hosts.get("linear_power"):
        profile = linear_profile(sleep_w=float(hosts.get("sleep_power_w", DEFAULT_SLEEP_POWER_W)))
    else:
        bps = hosts.get("power_breakpoints")
        profile = PowerProfile(
            breakpoints=tuple((float(u), float(w)) for u, w in bps) if bps else DEFAULT_BREAKPOINTS,
            sleep_power_w=float(hosts.get("sleep_power_w", DEFAULT_SLEEP_POWER_W)),
        )

    services = []
    for s in raw.get("services", []):
        s = clean(s)
        services.append(ContainerSpec(
            id=str(s["id"]),
            service=str(s.get("service", "app")),
            weight=float(s["weight"]),
            optional=bool(s.get("optional", False)),
            connection_tag=s.get("connection_tag"),
            replicas=int(s.get("replicas", 1)),
        ))

    policy_fields = {f for f in PolicyConfig.__dataclass_fields__}
    policy_kwargs = {k: v for k, v in policy_raw.items() if k in policy_fields}
    policy = PolicyConfig(**policy_kwargs)
    if "boot_delay" in hosts:
        policy.boot_delay = int(hosts["boot_delay"])

    trace_path = str(trace.get("path", ""))
    if base_dir and trace_path and not Path(trace_path).is_absolute():
        trace_path = str((Path(base_dir) / trace_path).resolve())

    return SimConfig(
        policy_name=str(raw.get("policy_name", "AUTOS")),
        host_count=int(hosts.get("count", 10)),
        power_profile=profile,
        services=services,
        policy=policy,
        trace_path=trace_path,
        trace_scale=float(trace.get("scale", 1.0)),
        interval_seconds=float(trace.get("interval_seconds", 60.0)),
        base_response_ms=float(raw.get("base_response_ms", 100.0)),
    )


def load_config(path: str) -> SimConfig:
    p = Path(path)
    with open(p) as fh:
        raw = json.load(fh)
    return config_from_dict(raw, base_dir=str(p.parent))


def dump_config(cfg: SimConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
