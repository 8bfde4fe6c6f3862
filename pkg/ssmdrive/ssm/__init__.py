"""Selective state-space kernels and the layers built from them."""

from .attention import SelfAttentionLayer
from .bmamba import BMambaLayer
from .discretize import expm1_ratio, expm1_ratio_values, zoh_discretize
from .scan import naive_selective_scan, scan_recurrence, selective_scan_discrete
from .selective import SsmParams, default_dt_rank, selective_scan

__all__ = [
    "BMambaLayer",
    "SelfAttentionLayer",
    "SsmParams",
    "default_dt_rank",
    "expm1_ratio",
    "expm1_ratio_values",
    "naive_selective_scan",
    "scan_recurrence",
    "selective_scan",
    "selective_scan_discrete",
    "zoh_discretize",
]
