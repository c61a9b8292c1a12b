"""Reed-Muller coding lab for finite-state channels.

Subpackages: gf2 (binary linear algebra), rmcode (Reed-Muller algebra),
fsc (channel model and structure), transforms (blocking, decimation,
scrambling), inforate (mutual information and rate estimation), decoder
(exact MAP and the interleaved protocol), bounds (contraction and
coupling certificates), cli (experiment harness).
"""

__version__ = "0.1.0"
