"""GRAND decoders: pattern sources, the decoding loop and compiled kernels."""
from ._backend import BACKEND, available, get_kernels
from .core import DECODER_KINDS, DecodeResult, Decoder, default_budget, grand_decode, make_decoder
from .sources import (
    CombinationSource,
    DPTable,
    DSGrandSource,
    PatternSource,
    SGrandSource,
    dsgrand_pattern_source,
    hard_pattern_source,
    orbgrand_pattern_source,
    reliability_order,
    sgrand_pattern_source,
    srgrand_pattern_source,
)

__all__ = [
    "BACKEND", "available", "get_kernels",
    "DECODER_KINDS", "DecodeResult", "Decoder", "default_budget", "grand_decode", "make_decoder",
    "CombinationSource", "DPTable", "DSGrandSource", "PatternSource", "SGrandSource",
    "dsgrand_pattern_source", "hard_pattern_source", "orbgrand_pattern_source",
    "reliability_order", "sgrand_pattern_source", "srgrand_pattern_source",
]
