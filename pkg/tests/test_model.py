import copy

import pytest

from brownsim.model import (
    ContainerSpec,
    PolicyConfig,
    PowerProfile,
    SimConfig,
    config_from_dict,
    config_to_dict,
    dump_config,
    host_id,
    load_config,
    place_replicas,
    scaled_services,
    validate_config,
)


def sample_services(replicas=4):
    return [
        ContainerSpec(id="web", service="shop", weight=0.35, replicas=replicas),
        ContainerSpec(id="db", service="shop", weight=0.25, replicas=replicas),
        ContainerSpec(id="recommender", service="shop", weight=0.25, optional=True,
                      connection_tag="rec", replicas=replicas),
        ContainerSpec(id="rec-cache", service="shop", weight=0.05, optional=True,
                      connection_tag="rec", replicas=replicas),
        ContainerSpec(id="ads", service="shop", weight=0.10, optional=True, replicas=replicas),
    ]


def sample_config(**overrides):
    cfg = SimConfig(policy_name="LUCF", host_count=4, services=sample_services(),
                    trace_path="trace.csv")
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def test_valid_config_has_no_violations():
    assert validate_config(sample_config()) == []


def test_unknown_policy_flagged():
    violations = validate_config(sample_config(policy_name="BOGUS"))
    assert any("policy_name" in v for v in violations)


def test_weights_must_sum_to_one():
    services = sample_services()
    services[0] = ContainerSpec(id="web", service="shop", weight=0.30, replicas=4)
    violations = validate_config(sample_config(services=services))
    assert any("sum to 1" in v for v in violations)


def test_every_service_needs_a_mandatory_container():
    services = [
        ContainerSpec(id="a", service="solo", weight=0.5, optional=True),
        ContainerSpec(id="b", service="solo", weight=0.5, optional=True),
    ]
    violations = validate_config(sample_config(services=services))
    assert any("mandatory" in v for v in violations)


def test_connection_tag_requires_optional():
    services = sample_services()
    services[0] = ContainerSpec(id="web", service="shop", weight=0.35,
                                connection_tag="x", replicas=4)
    violations = validate_config(sample_config(services=services))
    assert any("connection_tag" in v for v in violations)


def test_duplicate_ids_flagged():
    services = sample_services() + [ContainerSpec(id="web", service="other", weight=1.0)]
    violations = validate_config(sample_config(services=services))
    assert any("duplicate" in v for v in violations)


def test_optional_pct_bound():
    cfg = sample_config()
    cfg.policy = PolicyConfig(optional_util_pct=0.6)
    violations = validate_config(cfg)
    assert any("optional_util_pct" in v for v in violations)


def test_threshold_bound():
    cfg = sample_config()
    cfg.policy = PolicyConfig(overloaded_threshold_u_t=0.4)
    violations = validate_config(cfg)
    assert any("overloaded_threshold_u_t" in v for v in violations)


def test_breakpoints_must_cover_full_range():
    cfg = sample_config(power_profile=PowerProfile(
        breakpoints=((0.0, 201.0), (0.9, 233.0)), sleep_power_w=10.0))
    violations = validate_config(cfg)
    assert any("1.0" in v for v in violations)


def test_sleep_power_below_idle():
    cfg = sample_config(power_profile=PowerProfile(
        breakpoints=((0.0, 201.0), (1.0, 237.0)), sleep_power_w=220.0))
    violations = validate_config(cfg)
    assert any("sleep_power_w" in v for v in violations)


def test_decreasing_power_flagged():
    cfg = sample_config(power_profile=PowerProfile(
        breakpoints=((0.0, 210.0), (0.5, 205.0), (1.0, 237.0)), sleep_power_w=10.0))
    violations = validate_config(cfg)
    assert any("non-decreasing" in v for v in violations)


def test_min_active_hosts_within_fleet():
    cfg = sample_config()
    cfg.policy = PolicyConfig(min_active_hosts=9)
    violations = validate_config(cfg)
    assert any("min_active_hosts" in v for v in violations)


def test_scaled_services_moves_weight_to_requested_share():
    for pct in (0.1, 0.2, 0.3, 0.4):
        scaled = scaled_services(sample_services(), pct)
        opt = sum(s.weight for s in scaled if s.optional)
        total = sum(s.weight for s in scaled)
        assert opt == pytest.approx(pct, abs=1e-9)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_scaled_services_zero_keeps_weights():
    original = sample_services()
    assert scaled_services(original, 0.0) == original


def test_place_replicas_covers_every_replica_once():
    cfg = sample_config()
    placement = place_replicas(cfg)
    placed = sum(len(specs) for specs in placement.values())
    assert placed == sum(s.replicas for s in cfg.services)
    for hid, specs in placement.items():
        assert hid == host_id(int(hid[1:]))
        assert len(specs) == 5, "4 replicas over 4 hosts puts one of each spec per host"


def test_place_replicas_round_robin_overflow():
    cfg = sample_config(host_count=3)
    placement = place_replicas(cfg)
    assert len(placement["h00"]) == 10, "first host takes the wrapped replicas"
    assert len(placement["h01"]) == 5
    assert len(placement["h02"]) == 5


def test_config_roundtrip_through_dict():
    cfg = sample_config()
    cfg.policy = PolicyConfig(seed=99, capacity_credit=0.5, optional_util_pct=0.3)
    back = config_from_dict(config_to_dict(cfg))
    assert back.policy_name == cfg.policy_name
    assert back.host_count == cfg.host_count
    assert back.services == cfg.services
    assert back.policy == cfg.policy
    assert back.power_profile == cfg.power_profile
    assert back.trace_scale == cfg.trace_scale


def test_config_roundtrip_through_file(tmp_path):
    cfg = sample_config()
    path = tmp_path / "cfg.json"
    dump_config(cfg, str(path))
    back = load_config(str(path))
    # relative trace paths resolve against the config file's directory
    assert back.trace_path == str(tmp_path / "trace.csv")
    want = config_to_dict(cfg)
    got = config_to_dict(back)
    want["trace"].pop("path")
    got["trace"].pop("path")
    assert got == want


def test_underscore_keys_are_comments():
    raw = config_to_dict(sample_config())
    raw["_note"] = "ignore me"
    raw["policy"]["_hint"] = "me too"
    raw["services"][0]["_why"] = "and me"
    cfg = config_from_dict(raw)
    assert validate_config(cfg) == []


def test_relative_trace_path_resolves_against_config_dir(tmp_path):
    raw = config_to_dict(sample_config())
    raw["trace"]["path"] = "data/t.csv"
    cfg = config_from_dict(raw, base_dir=str(tmp_path))
    assert cfg.trace_path.startswith(str(tmp_path))


def test_linear_power_flag():
    raw = config_to_dict(sample_config())
    raw["hosts"].pop("power_breakpoints")
    raw["hosts"]["linear_power"] = True
    cfg = config_from_dict(raw)
    assert len(cfg.power_profile.breakpoints) == 2
    assert cfg.power_profile.idle_power_w == 201.0
    assert cfg.power_profile.max_power_w == 237.0
