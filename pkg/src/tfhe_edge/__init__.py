"""Client-side TFHE encryption with server-side TRLWE to TLWE conversion."""

from tfhe_edge.params import ParamError, ParamSet, lvl1_default, validate

__all__ = ["ParamError", "ParamSet", "lvl1_default", "validate"]
__version__ = "0.1.0"
