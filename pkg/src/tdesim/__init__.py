"""Event-driven behavioral simulator of the time difference encoder (TDE)."""

from .core import (DEFAULT_PARAMS, SpikeTrain, TdeParams, TdeState,
                   TdeVariant, charge, decay, neuron_advance, on_fac, on_trg,
                   process_events, sample_trace)
from .events import (Event, EventFormatError, TextureConfig, add_jitter,
                     generate_texture_events, read_events, write_events)
from .mismatch import (McResult, MismatchSpec, cv_reduction, mc_charge_sweep,
                       sample_params, summarize)
from .network import (Orientation, Raster, ReceptiveField, TdeNetwork,
                      build_random_network, orientation_fractions, route,
                      run_network)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PARAMS", "SpikeTrain", "TdeParams", "TdeState", "TdeVariant",
    "charge", "decay", "neuron_advance", "on_fac", "on_trg",
    "process_events", "sample_trace",
    "Event", "EventFormatError", "TextureConfig", "add_jitter",
    "generate_texture_events", "read_events", "write_events",
    "McResult", "MismatchSpec", "cv_reduction", "mc_charge_sweep",
    "sample_params", "summarize",
    "Orientation", "Raster", "ReceptiveField", "TdeNetwork",
    "build_random_network", "orientation_fractions", "route", "run_network",
    "__version__",
]
