"""The 100-unit direction-selective TDE array and its response statistics.

Each unit watches two 4-neighboring pixels: events at the FAC pixel arm the
unit, events at the TRG pixel trigger it, so a unit whose TRG pixel lies in
direction d from its FAC pixel responds maximally to motion in direction d
(the moving edge hits FAC first). Units are placed uniformly at random with
equal counts per cardinal orientation; all units share nominal parameters,
mirroring sequential reuse of a single physical circuit.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .core import SpikeTrain, TdeParams, TdeVariant, process_events
from .events import Event
from .rng import stream

__all__ = [
    "Orientation",
    "ReceptiveField",
    "TdeNetwork",
    "Raster",
    "build_random_network",
    "route",
    "run_network",
    "orientation_fractions",
    "network_to_json",
    "network_from_json",
    "write_raster_csv",
]


class Orientation(Enum):
    """Preferred motion direction, in image coordinates (y grows downward)."""

    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"

    @property
    def delta(self) -> tuple[int, int]:
        """Offset from the FAC pixel to the TRG pixel."""
        return {
            Orientation.UP: (0, -1),
            Orientation.DOWN: (0, 1),
            Orientation.LEFT: (-1, 0),
            Orientation.RIGHT: (1, 0),
        }[self]


@dataclass(frozen=True)
class ReceptiveField:
    """A (FAC pixel, TRG pixel, orientation) triple; pixels are 4-neighbors."""

    fac_pixel: tuple[int, int]
    trg_pixel: tuple[int, int]
    orientation: Orientation

    def __post_init__(self) -> None:
        dx = self.trg_pixel[0] - self.fac_pixel[0]
        dy = self.trg_pixel[1] - self.fac_pixel[1]
        if abs(dx) + abs(dy) != 1:
            raise ValueError("fac and trg pixels must be 4-neighbors")
        if (dx, dy) != self.orientation.delta:
            raise ValueError(
                f"orientation {self.orientation.value} does not match "
                f"displacement ({dx}, {dy})")


@dataclass(frozen=True)
class TdeNetwork:
    units: tuple[tuple[ReceptiveField, TdeParams], ...]
    geometry: tuple[int, int]  # (width, height)
    seed: int

    def __post_init__(self) -> None:
        width, height = self.geometry
        counts = {o: 0 for o in Orientation}
        seen: set[tuple[tuple[int, int], tuple[int, int]]] = set()
        for rf, _params in self.units:
            counts[rf.orientation] += 1
            for x, y in (rf.fac_pixel, rf.trg_pixel):
                if not (0 <= x < width and 0 <= y < height):
                    raise ValueError(f"pixel ({x}, {y}) outside geometry")
            pair = (rf.fac_pixel, rf.trg_pixel)
            if pair in seen:
                raise ValueError(f"duplicate unit placement {pair}")
            seen.add(pair)
        # represented orientations must be balanced; networks built by
        # build_random_network always cover all four equally, but small
        # hand-assembled networks (e.g. one unit) remain valid
        if len({n for n in counts.values() if n > 0}) > 1:
            raise ValueError("orientation counts must be equal")


@dataclass(frozen=True)
class Raster:
    """Per-unit spike trains plus unit metadata, ordered by unit index."""

    trains: tuple[SpikeTrain, ...]
    orientations: tuple[Orientation, ...]

    def __post_init__(self) -> None:
        if len(self.trains) != len(self.orientations):
            raise ValueError("trains and orientations must align")

    def total_spikes(self) -> int:
        return sum(len(tr) for tr in self.trains)


def build_random_network(geometry: tuple[int, int], n_units: int,
                         params: TdeParams, seed: int) -> TdeNetwork:
    """Uniform random placement, ``n_units/4`` per orientation, no duplicates.

    TRG pixels out of bounds and duplicate ordered pixel pairs are redrawn
    (rejection sampling on a deterministic stream); units may otherwise share
    pixels since the field is only sparsely sampled.
    """
    if n_units % 4 != 0:
        raise ValueError("n_units must be divisible by 4")
    width, height = geometry
    rng = stream(seed, "network")
    used: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    units: list[tuple[ReceptiveField, TdeParams]] = []
    for orientation in Orientation:
        dx, dy = orientation.delta
        for _ in range(n_units // 4):
            for _attempt in range(10_000):
                fx = int(rng.integers(0, width))
                fy = int(rng.integers(0, height))
                tx, ty = fx + dx, fy + dy
                if not (0 <= tx < width and 0 <= ty < height):
                    continue
                pair = ((fx, fy), (tx, ty))
                if pair in used:
                    continue
                used.add(pair)
                units.append((ReceptiveField(pair[0], pair[1], orientation),
                              params))
                break
            else:
                raise RuntimeError(
                    f"could not place a {orientation.value} unit after "
                    f"10000 rejections on a {width}x{height} field")
    return TdeNetwork(units=tuple(units), geometry=geometry, seed=seed)


def route(events: Sequence[Event], network: TdeNetwork
          ) -> list[tuple[list[float], list[float]]]:
    """Split the stream into per-unit (fac_times, trg_times), in seconds.

    Both polarities drive both inputs; events at pixels no unit watches are
    dropped. Input ordering is preserved per channel.
    """
    width, height = network.geometry
    targets: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for idx, (rf, _params) in enumerate(network.units):
        targets.setdefault(rf.fac_pixel, []).append((idx, 0))
        targets.setdefault(rf.trg_pixel, []).append((idx, 1))
    routed: list[tuple[list[float], list[float]]] = [
        ([], []) for _ in network.units]
    for ev in events:
        if not (0 <= ev.x < width and 0 <= ev.y < height):
            raise ValueError(f"event out of bounds: t={ev.t}us "
                             f"x={ev.x} y={ev.y} p={ev.polarity}")
        for idx, channel in targets.get((ev.x, ev.y), ()):
            routed[idx][channel].append(ev.t * 1e-6)
    return routed


def run_network(network: TdeNetwork, events: Sequence[Event],
                variant: TdeVariant, n_threads: int = 1) -> Raster:
    """Simulate every unit over [0, last event time]; schedule-independent."""
    routed = route(events, network)
    t_end = events[-1].t * 1e-6 if events else 0.0

    def run_unit(args: tuple[tuple[ReceptiveField, TdeParams],
                             tuple[list[float], list[float]]]) -> SpikeTrain:
        (rf, params), (fac, trg) = args
        return process_events(params, variant, fac, trg, t_end)

    work = list(zip(network.units, routed))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            trains = tuple(pool.map(run_unit, work))
    else:
        trains = tuple(run_unit(w) for w in work)
    orientations = tuple(rf.orientation for rf, _ in network.units)
    return Raster(trains=trains, orientations=orientations)


def orientation_fractions(raster: Raster) -> dict[Orientation, float]:
    """Per-orientation spike counts as fractions of total network activity."""
    counts = {o: 0 for o in Orientation}
    for train, orientation in zip(raster.trains, raster.orientations):
        counts[orientation] += len(train)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("no spikes in raster; fractions undefined")
    return {o: counts[o] / total for o in Orientation}


def network_to_json(network: TdeNetwork, path: Path | str) -> None:
    payload = {
        "geometry": list(network.geometry),
        "seed": network.seed,
        "units": [
            {
                "fac_pixel": list(rf.fac_pixel),
                "trg_pixel": list(rf.trg_pixel),
                "orientation": rf.orientation.value,
                "params": {k: getattr(p, k) for k in (
                    "tau_fac", "tau_trg", "w_fac", "fac_max", "gain",
                    "i_leak", "v_thresh", "v_reset", "t_refr")},
            }
            for rf, p in network.units
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def network_from_json(path: Path | str) -> TdeNetwork:
    with open(path) as fh:
        payload = json.load(fh)
    units = tuple(
        (ReceptiveField(tuple(u["fac_pixel"]), tuple(u["trg_pixel"]),
                        Orientation(u["orientation"])),
         TdeParams(**u["params"]))
        for u in payload["units"]
    )
    return TdeNetwork(units=units, geometry=tuple(payload["geometry"]),
                      seed=payload["seed"])


def write_raster_csv(raster: Raster, path: Path | str) -> None:
    """Raster as CSV rows (unit, orientation, spike_time_s)."""
    with open(path, "w", newline="") as fh:
        fh.write("unit,orientation,spike_time_s\n")
        for idx, (train, orientation) in enumerate(
                zip(raster.trains, raster.orientations)):
            for t in train:
                fh.write(f"{idx},{orientation.value},{t!r}\n")
