"""Request traces: loading, scaling, rate prediction, synthetic generation."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass


@dataclass
class Trace:
    times: list
    rates: list  # requests per interval, scaled
    interval_seconds: float = 60.0

    def __len__(self):
        return len(self.rates)


def _scale_rate(raw: float, scale: float) -> int:
    # round half up, mirroring how request counts are usually downsampled
    return int(math.floor(raw * scale + 0.5))


def load_trace(path: str, scale: float = 1.0, interval_seconds: float = 60.0) -> Trace:
    """Read a two-column CSV (t,requests) into a Trace.

    t must be strictly increasing.  A header row is tolerated; malformed
    data raises ValueError naming the offending line.
    """
    times, rates = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 't,requests', got {line!r}")
            if lineno == 1 and not _numeric(parts[0]):
                continue  # header
            if not (_numeric(parts[0]) and _numeric(parts[1])):
                raise ValueError(f"line {lineno}: non-numeric field in {line!r}")
            t = int(float(parts[0]))
            r = float(parts[1])
            if r < 0:
                raise ValueError(f"line {lineno}: negative request count {r}")
            if times and t <= times[-1]:
                raise ValueError(f"line {lineno}: time {t} not strictly increasing")
            times.append(t)
            rates.append(_scale_rate(r, scale))
    if not times:
        raise ValueError(f"trace {path}: no data rows")
    return Trace(times=times, rates=rates, interval_seconds=interval_seconds)


def _numeric(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def predict_rate(history: list, window: int) -> float:
    """Sliding-window mean of the most recent observed rates.

    No history yet means no demand to predict: returns 0.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1 (got {window})")
    if not history:
        return 0.0
    tail = history[-window:]
    return sum(tail) / len(tail)


def predict_rate_weighted(history: list, window: int, decay: float = 0.5) -> float:
    """Exponentially-weighted variant: newer observations count more."""
    if window < 1:
        raise ValueError(f"window must be >= 1 (got {window})")
    if not (0.0 < decay < 1.0):
        raise ValueError(f"decay must be in (0, 1) (got {decay})")
    tail = history[-window:]
    if not tail:
        return 0.0
    num = den = 0.0
    for age, rate in enumerate(reversed(tail)):
        w = (1.0 - decay) ** age
        num += w * rate
        den += w
    return num / den


def synthetic_diurnal_trace(intervals: int = 1440, low: float = 105.0,
                            high: float = 300.0, noise: float = 0.04,
                            seed: int = 7, trough_at: int = 360) -> Trace:
    """One simulated day of per-minute request counts.

    A squared-sine hump bottoming out at trough_at (6am by default) and
    peaking twelve hours later, with multiplicative Gaussian noise.  Output
    is clamped so the noise cannot push past ~6% above the nominal peak.
    """
    rng = random.Random(seed)
    times, rates = [], []
    ceiling = high * 1.06
    floor = low * 0.85
    for t in range(intervals):
        hump = math.sin(math.pi * (t - trough_at) / intervals) ** 2
        nominal = low + (high - low) * hump
        value = nominal * (1.0 + rng.gauss(0.0, noise))
        value = min(max(value, floor), ceiling)
        times.append(t)
        rates.append(int(math.floor(value + 0.5)))
    return Trace(times=times, rates=rates, interval_seconds=60.0)


def spike_trace(intervals: int = 240, baseline: float = 35.0, spike: float = 375.0,
                spike_start: int = 80, spike_len: int = 40) -> Trace:
    """Flat baseline with one rectangular overload spike; deterministic."""
    rates = []
    for t in range(intervals):
        rates.append(int(spike if spike_start <= t < spike_start + spike_len else baseline))
    return Trace(times=list(range(intervals)), rates=rates, interval_seconds=60.0)


def write_trace_csv(trace: Trace, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("t,requests\n")
        for t, r in zip(trace.times, trace.rates):
            fh.write(f"{t},{r}\n")
