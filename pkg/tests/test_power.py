import random

import pytest

from brownsim.model import DEFAULT_BREAKPOINTS, HostMode, PowerProfile, linear_profile
from brownsim.power import EnergyAccumulator, accumulate_energy, hpm, hum

PROFILE = PowerProfile()


def test_hum_hits_every_breakpoint():
    for u, watts in DEFAULT_BREAKPOINTS:
        got = hum(PROFILE, HostMode.ACTIVE, u)
        assert got == watts, f"hum({u}) = {got}, expected {watts}"


def test_hum_modes():
    assert hum(PROFILE, HostMode.OFF, 0.0) == 0.0
    assert hum(PROFILE, HostMode.SLEEP, 0.0) == 10.0
    assert hum(PROFILE, HostMode.SLEEP, 0.9) == 10.0, "sleep draw ignores utilization"
    assert hum(PROFILE, HostMode.BOOTING, 0.0) == 201.0, "booting host draws idle power"


def test_hum_interpolates_between_breakpoints():
    assert hum(PROFILE, HostMode.ACTIVE, 0.75) == pytest.approx(228.0, abs=1e-9)
    assert hum(PROFILE, HostMode.ACTIVE, 0.05) == pytest.approx(203.5, abs=1e-9)


def test_hum_rejects_out_of_range_utilization():
    with pytest.raises(ValueError):
        hum(PROFILE, HostMode.ACTIVE, -0.01)
    with pytest.raises(ValueError):
        hum(PROFILE, HostMode.ACTIVE, 1.01)


def test_hpm_inverts_breakpoints_exactly():
    for u, watts in DEFAULT_BREAKPOINTS:
        got = hpm(PROFILE, watts)
        assert got == u, f"hpm({watts}) = {got}, expected {u}"


def test_hpm_known_values():
    assert hpm(PROFILE, 231.0) == pytest.approx(0.80, abs=1e-9)
    assert hpm(PROFILE, 228.0) == pytest.approx(0.75, abs=1e-9)
    assert hpm(PROFILE, 201.0) == 0.0


def test_hpm_range_error_names_interval():
    with pytest.raises(ValueError) as err:
        hpm(PROFILE, 200.0)
    assert "201" in str(err.value) and "237" in str(err.value)
    with pytest.raises(ValueError):
        hpm(PROFILE, 238.0)


def test_hpm_flat_segment_returns_lowest_utilization():
    flat = PowerProfile(breakpoints=((0.0, 100.0), (0.5, 200.0), (1.0, 200.0)),
                        sleep_power_w=5.0)
    assert hpm(flat, 200.0) == 0.5


def test_roundtrip_property():
    rng = random.Random(7)
    for _ in range(500):
        u = rng.random()
        p = hum(PROFILE, HostMode.ACTIVE, u)
        back = hpm(PROFILE, p)
        assert abs(back - u) < 1e-9, f"hpm(hum({u})) drifted to {back}"


def test_monotonicity_property():
    rng = random.Random(11)
    for _ in range(500):
        a, b = sorted((rng.random(), rng.random()))
        pa = hum(PROFILE, HostMode.ACTIVE, a)
        pb = hum(PROFILE, HostMode.ACTIVE, b)
        assert pa <= pb, f"power not monotone: u={a}->{pa} vs u={b}->{pb}"


def test_linear_profile_variant():
    lin = linear_profile()
    assert hum(lin, HostMode.ACTIVE, 0.0) == 201.0
    assert hum(lin, HostMode.ACTIVE, 1.0) == 237.0
    assert hum(lin, HostMode.ACTIVE, 0.5) == pytest.approx(219.0, abs=1e-9)


def test_accumulate_unit_examples():
    acc = EnergyAccumulator()
    accumulate_energy(acc, {"h00": 237.0}, 3600.0)
    assert acc.per_host_wh["h00"] == pytest.approx(237.0)
    accumulate_energy(acc, {"h00": 0.0}, 3600.0)
    assert acc.per_host_wh["h00"] == pytest.approx(237.0), "off host adds nothing"


def test_accumulate_day_at_idle():
    acc = EnergyAccumulator()
    powers = {f"h{i:02d}": 201.0 for i in range(13)}
    for _ in range(24):
        accumulate_energy(acc, powers, 3600.0)
    assert acc.total_kwh == pytest.approx(62.712, abs=1e-6)


def test_accumulate_totals_match_per_host():
    rng = random.Random(3)
    acc = EnergyAccumulator()
    for _ in range(100):
        accumulate_energy(acc, {f"h{i:02d}": rng.uniform(0, 240) for i in range(5)}, 60.0)
    assert acc.total_wh == pytest.approx(sum(acc.per_host_wh.values()), abs=1e-6)


def test_accumulate_additivity():
    powers = {"h00": 150.0, "h01": 220.0}
    split = EnergyAccumulator()
    accumulate_energy(split, powers, 60.0)
    accumulate_energy(split, powers, 60.0)
    whole = EnergyAccumulator()
    accumulate_energy(whole, powers, 120.0)
    assert split.total_wh == pytest.approx(whole.total_wh, abs=1e-9)


def test_accumulate_rejects_bad_input():
    acc = EnergyAccumulator()
    with pytest.raises(ValueError):
        accumulate_energy(acc, {"h00": -1.0}, 60.0)
    with pytest.raises(ValueError):
        accumulate_energy(acc, {"h00": 100.0}, 0.0)
