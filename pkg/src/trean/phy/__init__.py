from .detect import (
    BoundaryReport,
    correlate_pilot,
    detect_boundaries,
    spike_clusters,
)
from .estimate import (
    COND_LIMIT,
    ChannelEstimate,
    ConvMatrices,
    build_conv_matrices,
    joint_estimate,
)
from .decode import (
    DecodeDiagnostics,
    DecoderConfig,
    cancel_known,
    decode_superposed,
    demodulate,
    identify_self,
    interpolate_taps,
    measure_ber,
    ml_baseline_decode,
    recover_waveform,
)

__all__ = [
    "BoundaryReport",
    "correlate_pilot",
    "detect_boundaries",
    "spike_clusters",
    "COND_LIMIT",
    "ChannelEstimate",
    "ConvMatrices",
    "build_conv_matrices",
    "joint_estimate",
    "DecodeDiagnostics",
    "DecoderConfig",
    "cancel_known",
    "decode_superposed",
    "demodulate",
    "identify_self",
    "interpolate_taps",
    "measure_ber",
    "ml_baseline_decode",
    "recover_waveform",
]
