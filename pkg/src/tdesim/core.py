"""Event-driven behavioral model of a single time difference encoder (TDE).

A TDE is a two-input element: events on the facilitatory input (FAC) arm an
exponentially decaying trace, events on the trigger input (TRG) sample that
trace and inject an exponentially decaying excitatory current (EPSC) into a
leaky integrate-and-fire neuron. The output spike train encodes the FAC->TRG
time difference in both spike count and inter-spike interval.

All state evolution between events is closed-form (no time stepping):
exponential decay for the two traces, and

    v(s) = v0 + epsc0 * tau_trg * (1 - exp(-s/tau_trg)) - i_leak * s

for the membrane, with threshold crossings located by bisection. Both traces
and the membrane are dimensionless abstractions of the circuit voltages and
currents; magnitudes are calibration knobs, not physical values.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TdeVariant",
    "TdeParams",
    "TdeState",
    "SpikeTrain",
    "decay",
    "on_fac",
    "on_trg",
    "neuron_advance",
    "process_events",
    "charge",
    "sample_trace",
    "DEFAULT_PARAMS",
]


class TdeVariant(Enum):
    """The two circuit generations.

    OLD_SINGLE_BRANCH: single discharge branch in the facilitatory block; a
    FAC event resets the trace to a fixed amplitude (non-additive).
    NEW_DUAL_DPI: differential-pair integrator in both blocks; FAC events add
    linearly onto the trace up to a saturation ceiling.
    """

    OLD_SINGLE_BRANCH = "old"
    NEW_DUAL_DPI = "new"


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class TdeParams:
    """Behavioral parameters of one TDE unit (the locus of device mismatch).

    tau_fac, tau_trg : decay time constants of the FAC trace and the EPSC [s]
    w_fac            : FAC increment (new variant) or reset amplitude (old)
    fac_max          : saturation ceiling of the FAC trace, >= w_fac
    gain             : EPSC amplitude per unit of FAC trace sampled at TRG
    i_leak           : constant membrane leak rate [amplitude/s]
    v_thresh, v_reset: neuron firing threshold and reset value
    t_refr           : absolute refractory period [s]
    """

    tau_fac: float
    tau_trg: float
    w_fac: float
    fac_max: float
    gain: float
    i_leak: float
    v_thresh: float
    v_reset: float
    t_refr: float

    def __post_init__(self) -> None:
        for name in ("tau_fac", "tau_trg", "w_fac", "fac_max", "gain",
                     "i_leak", "v_thresh", "v_reset", "t_refr"):
            _check(math.isfinite(getattr(self, name)), f"{name} must be finite")
        _check(self.tau_fac > 0, "tau_fac must be > 0")
        _check(self.tau_trg > 0, "tau_trg must be > 0")
        _check(self.w_fac > 0, "w_fac must be > 0")
        _check(self.fac_max >= self.w_fac, "fac_max must be >= w_fac")
        _check(self.gain > 0, "gain must be > 0")
        _check(self.i_leak >= 0, "i_leak must be >= 0")
        _check(self.v_thresh > 0, "v_thresh must be > 0")
        _check(self.v_reset < self.v_thresh, "v_reset must be < v_thresh")
        _check(self.t_refr >= 0, "t_refr must be >= 0")


# Calibration defaults: chosen so a 12 ms FAC->TRG pair elicits a multi-spike
# burst while a pair separated by many tau_fac stays silent. Not device data.
DEFAULT_PARAMS = TdeParams(
    tau_fac=10e-3,
    tau_trg=5e-3,
    w_fac=1.0,
    fac_max=4.0,
    gain=2000.0,
    i_leak=20.0,
    v_thresh=1.0,
    v_reset=0.0,
    t_refr=1e-3,
)


@dataclass(frozen=True)
class TdeState:
    """Instantaneous analog state of one TDE, valid at time ``t_last``."""

    fac: float = 0.0
    epsc: float = 0.0
    v_mem: float = 0.0
    t_last: float = 0.0
    refr_until: float = 0.0

    @staticmethod
    def resting(params: TdeParams, t: float = 0.0) -> "TdeState":
        return TdeState(fac=0.0, epsc=0.0, v_mem=params.v_reset,
                        t_last=t, refr_until=t)


@dataclass(frozen=True)
class SpikeTrain:
    """Strictly increasing output spike times, in seconds."""

    times: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        for a, b in zip(self.times, self.times[1:]):
            _check(b > a, "spike times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    def isis(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.times, self.times[1:]))


def decay(state: TdeState, params: TdeParams, dt: float) -> TdeState:
    """Advance both traces by ``dt`` of pure exponential decay.

    Leaves v_mem untouched; membrane evolution over the same segment belongs
    to :func:`neuron_advance`.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return replace(
        state,
        fac=state.fac * math.exp(-dt / params.tau_fac),
        epsc=state.epsc * math.exp(-dt / params.tau_trg),
        t_last=state.t_last + dt,
    )


def on_fac(state: TdeState, params: TdeParams, variant: TdeVariant) -> TdeState:
    """Apply a FAC event (state already decayed to the event time).

    New variant: additive jump, clamped at fac_max. Old variant: the single
    discharge branch pulls the trace to w_fac regardless of its prior value.
    """
    if variant is TdeVariant.NEW_DUAL_DPI:
        fac = min(state.fac + params.w_fac, params.fac_max)
    else:
        fac = params.w_fac
    return replace(state, fac=fac)


def on_trg(state: TdeState, params: TdeParams) -> TdeState:
    """Apply a TRG event: sample the FAC trace into the EPSC.

    Sampling does not consume the trace (fac unchanged).
    """
    return replace(state, epsc=state.epsc + params.gain * state.fac)


def _v_closed(v0: float, epsc0: float, params: TdeParams, s: float) -> float:
    """Unclamped membrane closed form, ``s`` seconds after segment start."""
    return (v0
            + epsc0 * params.tau_trg * (1.0 - math.exp(-s / params.tau_trg))
            - params.i_leak * s)


def _first_crossing(v0: float, epsc0: float, params: TdeParams,
                    seg: float) -> float | None:
    """First threshold-crossing time in (0, seg], or None.

    The drive epsc0*exp(-s/tau_trg) - i_leak is monotone decreasing, so the
    membrane rises to at most one peak; any crossing happens on the rising
    flank, which brackets the bisection.
    """
    if v0 >= params.v_thresh:
        return 0.0
    if epsc0 <= params.i_leak:
        return None  # non-positive drive from the start; v never rises
    if params.i_leak > 0:
        s_peak = params.tau_trg * math.log(epsc0 / params.i_leak)
    else:
        s_peak = math.inf
    s_hi = min(s_peak, seg)
    if _v_closed(v0, epsc0, params, s_hi) < params.v_thresh:
        return None
    lo, hi = 0.0, s_hi
    tol = 1e-6 * params.tau_trg
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _v_closed(v0, epsc0, params, mid) >= params.v_thresh:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def neuron_advance(state: TdeState, params: TdeParams,
                   dt: float) -> tuple[TdeState, SpikeTrain]:
    """Integrate the membrane over [t_last, t_last + dt] with no input events.

    Reads ``state.epsc`` as the EPSC at segment start and returns a state with
    v_mem and refr_until updated; traces and t_last are left for
    :func:`decay`. The membrane is clamped below at v_reset (no
    hyperpolarization); each threshold crossing emits a spike, resets v and
    opens a refractory window during which v holds at v_reset.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    t0 = state.t_last
    t_end = t0 + dt
    t = t0
    v = state.v_mem
    refr = state.refr_until
    spikes: list[float] = []
    while t < t_end:
        if t < refr:
            t = min(refr, t_end)
            v = params.v_reset
            continue
        epsc_t = state.epsc * math.exp(-(t - t0) / params.tau_trg)
        seg = t_end - t
        s = _first_crossing(v, epsc_t, params, seg)
        if s is None:
            # once clamped the drive stays negative, so max() is exact
            v = max(_v_closed(v, epsc_t, params, seg), params.v_reset)
            break
        t = t + s
        spikes.append(t)
        v = params.v_reset
        refr = t + params.t_refr
    return replace(state, v_mem=v, refr_until=refr), SpikeTrain(tuple(spikes))


def _merge_events(fac_events: Sequence[float],
                  trg_events: Sequence[float]) -> list[tuple[float, int]]:
    """Merge both channels; FAC (tag 0) precedes TRG (tag 1) on equal stamps."""
    for name, ev in (("fac_events", fac_events), ("trg_events", trg_events)):
        for a, b in zip(ev, ev[1:]):
            if b < a:
                raise ValueError(f"{name} must be sorted")
        if ev and ev[0] < 0:
            raise ValueError(f"{name} must be non-negative (timeline starts at 0)")
    return list(heapq.merge(((t, 0) for t in fac_events),
                            ((t, 1) for t in trg_events)))


def process_events(params: TdeParams, variant: TdeVariant,
                   fac_events: Sequence[float], trg_events: Sequence[float],
                   t_end: float) -> SpikeTrain:
    """Run one TDE over both event channels and return its output spikes.

    Starts from rest at t = 0. At each input event the state is advanced to
    the event time (membrane integration + trace decay, both closed form),
    then the FAC/TRG jump is applied; the run finishes with a final advance
    to ``t_end``.
    """
    merged = _merge_events(fac_events, trg_events)
    if merged and t_end < merged[-1][0]:
        raise ValueError("t_end must be >= the last event time")
    state = TdeState.resting(params)
    spikes: list[float] = []
    for t, tag in merged:
        dt = t - state.t_last
        state, seg_spikes = neuron_advance(state, params, dt)
        spikes.extend(seg_spikes.times)
        state = decay(state, params, dt)
        state = on_fac(state, params, variant) if tag == 0 else on_trg(state, params)
    dt = t_end - state.t_last
    if dt > 0:
        state, seg_spikes = neuron_advance(state, params, dt)
        spikes.extend(seg_spikes.times)
    return SpikeTrain(tuple(spikes))


def charge(params: TdeParams, variant: TdeVariant, delta_t: float) -> float:
    """Total EPSC charge for a single FAC->TRG pair separated by ``delta_t``.

    From rest both variants transmit gain * w_fac * exp(-dt/tau_fac) * tau_trg.
    A TRG event preceding FAC (negative delta_t) would transmit zero charge by
    asymmetry; that case is rejected here rather than silently returned.
    """
    if delta_t <= 0:
        raise ValueError(f"delta_t must be > 0, got {delta_t}")
    del variant  # identical from rest; kept in the signature for symmetry
    return params.gain * params.w_fac * math.exp(-delta_t / params.tau_fac) * params.tau_trg


def sample_trace(params: TdeParams, variant: TdeVariant,
                 fac_events: Sequence[float], trg_events: Sequence[float],
                 t_end: float, sample_dt: float
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, SpikeTrain]:
    """Densely sampled (t, fac, epsc, v_mem) series plus the spike train.

    Sampling reuses the exact closed-form engine; a sample coinciding with an
    event records the post-jump value.
    """
    if sample_dt <= 0:
        raise ValueError("sample_dt must be > 0")
    sample_times = np.arange(0.0, t_end + 0.5 * sample_dt, sample_dt)
    merged = _merge_events(fac_events, trg_events)
    if merged and t_end < merged[-1][0]:
        raise ValueError("t_end must be >= the last event time")

    state = TdeState.resting(params)
    spikes: list[float] = []
    fac_out = np.empty_like(sample_times)
    epsc_out = np.empty_like(sample_times)
    v_out = np.empty_like(sample_times)

    def advance_to(t: float) -> None:
        nonlocal state
        dt = t - state.t_last
        if dt <= 0:
            return
        new_state, seg_spikes = neuron_advance(state, params, dt)
        spikes.extend(seg_spikes.times)
        state = decay(new_state, params, dt)

    ev_idx = 0
    for i, ts in enumerate(sample_times):
        while ev_idx < len(merged) and merged[ev_idx][0] <= ts:
            t_ev, tag = merged[ev_idx]
            advance_to(t_ev)
            state = (on_fac(state, params, variant) if tag == 0
                     else on_trg(state, params))
            ev_idx += 1
        advance_to(float(ts))
        fac_out[i] = state.fac
        epsc_out[i] = state.epsc
        v_out[i] = state.v_mem
    advance_to(t_end)
    return sample_times, fac_out, epsc_out, v_out, SpikeTrain(tuple(spikes))
