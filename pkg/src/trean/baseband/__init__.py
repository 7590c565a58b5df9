from .modulation import (
    BPSK,
    MODULATIONS,
    QAM16,
    QAM64,
    QPSK,
    SymbolFrame,
    bits_per_symbol,
    constellation,
    demap_symbols,
    map_bits,
    modulate,
)
from .pilots import NORMAL, PILOT_ORDERS, SWAPPED, PilotPair, make_pilot_pair
from .pulses import (
    GRID_PER_SYMBOL,
    HALF_SYMBOL_GRID,
    PulseShape,
    get_pulse,
    rect_pulse,
    rrc_pulse,
)
from .signals import (
    ChannelRealization,
    ContinuousSignal,
    SampleStream,
    add_awgn,
    sample_half_symbol,
    shaped_waveform,
    synthesize_received,
)

__all__ = [
    "BPSK",
    "QPSK",
    "QAM16",
    "QAM64",
    "MODULATIONS",
    "NORMAL",
    "SWAPPED",
    "PILOT_ORDERS",
    "GRID_PER_SYMBOL",
    "HALF_SYMBOL_GRID",
    "PilotPair",
    "make_pilot_pair",
    "SymbolFrame",
    "bits_per_symbol",
    "constellation",
    "map_bits",
    "demap_symbols",
    "modulate",
    "PulseShape",
    "get_pulse",
    "rect_pulse",
    "rrc_pulse",
    "ChannelRealization",
    "ContinuousSignal",
    "SampleStream",
    "add_awgn",
    "sample_half_symbol",
    "shaped_waveform",
    "synthesize_received",
]
