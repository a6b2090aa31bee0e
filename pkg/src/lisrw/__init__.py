"""Exact and Monte Carlo tools for longest increasing subsequences of random walks."""
from .lis_core import MonotoneChain, lis_bruteforce, lnds_chain_1d, lnds_length_1d, lnds_length_dd
from .walkgen import StepLaw, Walk, generate_walk

__version__ = "0.1.0"

__all__ = [
    "MonotoneChain",
    "StepLaw",
    "Walk",
    "generate_walk",
    "lis_bruteforce",
    "lnds_chain_1d",
    "lnds_length_1d",
    "lnds_length_dd",
]
