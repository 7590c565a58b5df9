"""Asynchronous two-way-relaying toolkit.

Three layers built around one cooperative transmission scheme:

- ``trean.baseband`` / ``trean.phy``: waveform synthesis and the end-node
  decoding pipeline that extracts a desired packet from a superposition of
  two unsynchronized packets using oversampling, joint pilot-window channel
  estimation, known-packet cancellation, and bandlimited recovery.
- ``trean.mac``: discrete-event simulators of the cooperative relaying MAC
  (basic and extended operating modes) and of a plain CSMA/CA baseline.
- ``trean.analytic``: saturation-throughput models, a Markov backoff fixed
  point for fully-sensed networks and a hidden-region approximation for
  large ones, cross-validated against the simulators.
"""

__version__ = "0.1.0"
