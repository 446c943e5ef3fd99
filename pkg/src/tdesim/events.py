"""Event streams: data model, file formats, and the synthetic moving texture.

Events are (timestamp, x, y, polarity) address events with microsecond
integer timestamps, sorted by (t, y, x, polarity). The stimulus generator
places random circular texture features on a canvas that wraps along the
motion axis and moves them at constant velocity; each time a feature edge
crosses a pixel center an event is emitted (+1 leading edge, -1 trailing
edge). AER-style timestamp jitter is a separate pass so tests can compare
pre- and post-jitter streams.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .rng import stream

__all__ = [
    "Event",
    "TextureConfig",
    "EventFormatError",
    "generate_texture_events",
    "add_jitter",
    "write_events",
    "read_events",
]

_RECORD = struct.Struct("<QHHb")  # u64 t_us, u16 x, u16 y, i8 polarity
_MAGIC = b"EVT1"


class EventFormatError(ValueError):
    """Malformed event file (bad magic, truncated record, unsorted data)."""


@dataclass(frozen=True)
class Event:
    """One address event; ``t`` is in integer microseconds."""

    t: int
    x: int
    y: int
    polarity: int

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("timestamp must be non-negative")
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")

    def sort_key(self) -> tuple[int, int, int, int]:
        return (self.t, self.y, self.x, self.polarity)


@dataclass(frozen=True)
class TextureConfig:
    """Synthetic moving-texture stimulus parameters.

    The defaults (64x64 canvas, 40 features of radius 2-4 px, upward motion
    at 150 px/s, 1 ms jitter) are documented calibration knobs chosen for a
    robust direction-selectivity ordering; only a qualitative description of
    the texture is available.
    """

    width: int = 64
    height: int = 64
    n_features: int = 40
    feature_radius: tuple[float, float] = (2.0, 4.0)
    velocity: tuple[float, float] = (0.0, -150.0)  # px/s; -y is upward motion
    duration: float = 0.5
    event_rate_per_crossing: float = 1.0
    jitter_sigma: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.width, self.height, self.n_features) <= 0:
            raise ValueError("width, height and n_features must be > 0")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        lo, hi = self.feature_radius
        if not (0 < lo <= hi):
            raise ValueError("feature_radius must satisfy 0 < lo <= hi")
        if self.event_rate_per_crossing < 0:
            raise ValueError("event_rate_per_crossing must be >= 0")


def _sorted_events(raw: list[tuple[int, int, int, int]]) -> list[Event]:
    raw.sort(key=lambda r: (r[0], r[3], r[2], r[1]))
    return [Event(t=r[0], x=r[2], y=r[3], polarity=r[1]) for r in raw]


def _chord_crossings(center0: float, v: float, span: int, half_chord: float,
                     duration: float) -> list[tuple[float, int, int]]:
    """(time, pixel, polarity) crossings of one chord along the motion axis.

    A pixel at integer coordinate q is covered while |center(t) - q| is at
    most ``half_chord``, where center(t) = center0 + v*t wraps modulo
    ``span``. Coverage entry emits +1 (leading edge), exit emits -1.
    """
    out: list[tuple[float, int, int]] = []
    enter_off = half_chord if v < 0 else -half_chord
    travel = v * duration
    lo, hi = (travel, 0.0) if v < 0 else (0.0, travel)
    for q in range(span):
        for off, pol in ((enter_off, 1), (-enter_off, -1)):
            base = q + off - center0
            k_min = math.ceil((lo - base) / span)
            k_max = math.floor((hi - base) / span)
            for k in range(k_min, k_max + 1):
                t = (base + k * span) / v
                if 0.0 <= t <= duration:
                    out.append((t, q, pol))
    return out


def generate_texture_events(config: TextureConfig) -> list[Event]:
    """Ideal (pre-jitter) event stream of the moving texture.

    Only axis-aligned motion is supported; the canvas wraps along the motion
    axis so the stimulus statistics are stationary over the whole duration.
    Deterministic given ``config.seed``; jitter is applied by a separate pass.
    """
    vx, vy = config.velocity
    if vx == 0.0 and vy == 0.0:
        raise ValueError("zero velocity would generate no events")
    if vx != 0.0 and vy != 0.0:
        raise ValueError("only axis-aligned motion is supported")
    vertical = vy != 0.0

    rng = stream(config.seed, "texture")
    r_lo, r_hi = config.feature_radius
    n_base = int(math.floor(config.event_rate_per_crossing))
    frac = config.event_rate_per_crossing - n_base

    # raw rows are (t_us, polarity, x, y); sorted by (t, y, x, polarity)
    raw: list[tuple[int, int, int, int]] = []
    for _ in range(config.n_features):
        cx = rng.uniform(0.0, config.width)
        cy = rng.uniform(0.0, config.height)
        r = rng.uniform(r_lo, r_hi)
        if vertical:
            fixed_center, fixed_size = cx, config.width
            move_center, move_span, v = cy, config.height, vy
        else:
            fixed_center, fixed_size = cy, config.height
            move_center, move_span, v = cx, config.width, vx
        p_lo = max(0, math.ceil(fixed_center - r))
        p_hi = min(fixed_size - 1, math.floor(fixed_center + r))
        for p in range(p_lo, p_hi + 1):
            d = p - fixed_center
            if abs(d) >= r:
                continue  # tangent chords carry no extent along the motion axis
            h = math.sqrt(r * r - d * d)
            crossings = _chord_crossings(move_center, v, move_span, h,
                                         config.duration)
            crossings.sort()
            for t, q, pol in crossings:
                n = n_base + (1 if frac > 0 and rng.random() < frac else 0)
                if n == 0:
                    continue
                t_us = round(t * 1e6)
                x, y = (p, q) if vertical else (q, p)
                raw.extend([(t_us, pol, x, y)] * n)
    return _sorted_events(raw)


def add_jitter(events: Sequence[Event], sigma: float, seed: int) -> list[Event]:
    """Perturb each timestamp by independent Gaussian noise, clamped at 0.

    Output is re-sorted and re-quantized to microseconds; ``sigma`` is in
    seconds. ``sigma == 0`` returns an identical stream.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0 or not events:
        return list(events)
    draws = stream(seed, "jitter").standard_normal(len(events))
    raw = [(max(0, round(ev.t + 1e6 * sigma * z)), ev.polarity, ev.x, ev.y)
           for ev, z in zip(events, draws)]
    return _sorted_events(raw)


def _check_sorted(events: Sequence[Event], where: str, first: int = 1) -> None:
    for i in range(1, len(events)):
        if events[i].sort_key() < events[i - 1].sort_key():
            raise EventFormatError(f"unsorted data at {where} {first + i}")


def _resolve_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "evt"):
            raise ValueError(f"unknown event format {fmt!r}")
        return fmt
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".evt":
        return "evt"
    raise ValueError(f"cannot infer event format from {path.name!r}; "
                     "use .csv or .evt, or pass fmt=")


def write_events(events: Sequence[Event], path: Path | str,
                 fmt: str | None = None) -> None:
    """Write a sorted event stream as CSV (``t_us,x,y,p``) or EVT1 binary."""
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    _check_sorted(events, "record")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            fh.write("t_us,x,y,p\n")
            for ev in events:
                fh.write(f"{ev.t},{ev.x},{ev.y},{ev.polarity}\n")
    else:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            for ev in events:
                fh.write(_RECORD.pack(ev.t, ev.x, ev.y, ev.polarity))


def read_events(path: Path | str, fmt: str | None = None) -> list[Event]:
    """Read an event stream written by :func:`write_events`."""
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    events: list[Event] = []
    if fmt == "csv":
        with open(path, newline="") as fh:
            header = fh.readline().strip()
            if header != "t_us,x,y,p":
                raise EventFormatError(f"bad CSV header at line 1: {header!r}")
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise EventFormatError(f"expected 4 fields at line {lineno}")
                try:
                    t, x, y, p = (int(v) for v in parts)
                    events.append(Event(t=t, x=x, y=y, polarity=p))
                except ValueError as exc:
                    raise EventFormatError(f"bad record at line {lineno}: {exc}")
        _check_sorted(events, "line", first=2)
    else:
        data = Path(path).read_bytes()
        if data[:4] != _MAGIC:
            raise EventFormatError("bad magic at byte offset 0 (expected 'EVT1')")
        body = data[4:]
        if len(body) % _RECORD.size != 0:
            offset = 4 + (len(body) // _RECORD.size) * _RECORD.size
            raise EventFormatError(f"truncated record at byte offset {offset}")
        for i, (t, x, y, p) in enumerate(_RECORD.iter_unpack(body)):
            try:
                events.append(Event(t=t, x=x, y=y, polarity=p))
            except ValueError as exc:
                raise EventFormatError(
                    f"bad record at byte offset {4 + i * _RECORD.size}: {exc}")
        _check_sorted(events, "record")
    return events
