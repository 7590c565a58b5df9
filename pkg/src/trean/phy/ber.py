"""Bit-error-rate measurement harness for the decoding pipeline.

One trial synthesizes a two-packet superposition with a random grid-aligned
delay, pushes it through the full decoder, and decodes a matched clean
single packet with the reference single-sample decision for comparison.
CSV rows follow the fixed schema
(modulation, snr_db, delay_symbols, trials, bit_errors, ber, baseline_ber).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..baseband import (
    NORMAL,
    SWAPPED,
    ChannelRealization,
    PilotPair,
    add_awgn,
    bits_per_symbol,
    make_pilot_pair,
    modulate,
    sample_half_symbol,
    shaped_waveform,
    synthesize_received,
)
from ..baseband.pulses import HALF_SYMBOL_GRID, PulseShape, get_pulse
from .decode import DecoderConfig, decode_superposed, measure_ber, ml_baseline_decode

CSV_HEADER = (
    "modulation",
    "snr_db",
    "delay_symbols",
    "trials",
    "bit_errors",
    "ber",
    "baseline_ber",
)


@dataclass
class TrialSetup:
    pilots: PilotPair
    pulse: PulseShape
    modulation: str
    data_bits: int

    @classmethod
    def default(
        cls,
        modulation: str,
        data_bits: int = 4096,
        pilot_length: int = 256,
        pulse_name: str = "rrc",
        pilot_seed: int = 1,
    ) -> "TrialSetup":
        bits = data_bits - data_bits % bits_per_symbol(modulation)
        return cls(
            make_pilot_pair(pilot_length, pilot_seed),
            get_pulse(pulse_name),
            modulation,
            bits,
        )


def run_pipeline_trial(
    setup: TrialSetup,
    snr_db: float | None,
    delay_symbols: int,
    seed: int,
    delta_grid: int | None = None,
    offset_grid: int | None = None,
    known_is_first: bool = True,
) -> tuple[int, int]:
    """(bit errors, bits) for one superposed decode.

    The known packet carries the normal pilot order and the unknown packet
    the swapped order, matching the cooperative transmission rule.
    """
    rng = np.random.default_rng(seed)
    bits_f = rng.integers(0, 2, setup.data_bits)
    bits_s = rng.integers(0, 2, setup.data_bits)
    frame_f = modulate(bits_f, setup.modulation, setup.pilots, NORMAL)
    frame_s = modulate(bits_s, setup.modulation, setup.pilots, SWAPPED)
    if delta_grid is None:
        delta_grid = int(rng.integers(0, HALF_SYMBOL_GRID + 1))
    if offset_grid is None:
        offset_grid = int(rng.integers(0, HALF_SYMBOL_GRID))
    phase_f = np.exp(2j * np.pi * rng.random())
    phase_s = np.exp(2j * np.pi * rng.random())
    chan = ChannelRealization.from_symbol_delay(
        phase_f, phase_s, delay_symbols, delta_grid, offset_grid, snr_db
    )
    clean = synthesize_received(frame_f, frame_s, (setup.pulse, setup.pulse), chan)
    noisy = add_awgn(clean, snr_db, seed=seed + 1)
    stream = sample_half_symbol(noisy, offset_grid)
    known = frame_f if known_is_first else frame_s
    unknown_bits = bits_s if known_is_first else bits_f
    cfg = DecoderConfig(setup.pulse, setup.modulation)
    decoded, _ = decode_superposed(stream, known, setup.pilots, cfg)
    errors = int(np.count_nonzero(decoded != unknown_bits))
    return errors, setup.data_bits


def run_baseline_trial(
    setup: TrialSetup, snr_db: float | None, seed: int
) -> tuple[int, int]:
    """(bit errors, bits) for the clean single-packet reference decision.

    The packet is synthesized with zero sampling offset so one sub-stream
    sample per symbol lands exactly on the pulse peak; the decision then
    normalizes by the known channel gain.
    """
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, setup.data_bits)
    frame = modulate(bits, setup.modulation, setup.pilots, NORMAL)
    gain = np.exp(2j * np.pi * rng.random())
    clean = shaped_waveform(frame, setup.pulse, gain, 0)
    noisy = add_awgn(clean, snr_db, seed=seed + 1)
    stream = sample_half_symbol(noisy, 0)
    decoded = ml_baseline_decode(
        stream,
        gain,
        setup.modulation,
        frame.length,
        setup.pilots.length,
        setup.pulse.peak_symbol,
    )
    errors = int(np.count_nonzero(decoded != bits))
    return errors, setup.data_bits


def measure_point(
    setup: TrialSetup,
    snr_db: float | None,
    delay_symbols: int,
    min_bits: int,
    seed: int,
) -> dict:
    """Accumulate trials until ``min_bits`` bits have gone through each path."""
    pipe_err = pipe_bits = base_err = base_bits = 0
    trials = 0
    while pipe_bits < min_bits:
        e, b = run_pipeline_trial(setup, snr_db, delay_symbols, seed + 17 * trials)
        pipe_err += e
        pipe_bits += b
        e, b = run_baseline_trial(setup, snr_db, seed + 17 * trials + 5)
        base_err += e
        base_bits += b
        trials += 1
    return {
        "modulation": setup.modulation,
        "snr_db": snr_db,
        "delay_symbols": delay_symbols,
        "trials": trials,
        "bit_errors": pipe_err,
        "ber": pipe_err / pipe_bits,
        "baseline_ber": base_err / base_bits,
        "bits": pipe_bits,
        "baseline_errors": base_err,
    }


def write_rows(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([row[k] for k in CSV_HEADER])
