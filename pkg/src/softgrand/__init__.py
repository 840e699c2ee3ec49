"""Soft-detection GRAND decoding toolkit.

Binary linear codes, BPSK/AWGN channel simulation, reliability quantizer
design, achievable-rate and order-statistic analysis, the GRAND family of
decoders and a Monte Carlo harness.
"""
from .channel import ChannelParams, Observation, snr_convert, transmit
from .codebook import LinearCode, builtin_code, builtin_names, load_code, save_code
from .decoder import BACKEND, DecodeResult, grand_decode, make_decoder
from .errors import CodeFormatError, ConfigurationError, DesignError, NumericalError
from .quantizer import ReliabilityQuantizer, design_quantizer

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "Observation", "snr_convert", "transmit",
    "LinearCode", "builtin_code", "builtin_names", "load_code", "save_code",
    "BACKEND", "DecodeResult", "grand_decode", "make_decoder",
    "CodeFormatError", "ConfigurationError", "DesignError", "NumericalError",
    "ReliabilityQuantizer", "design_quantizer",
]
