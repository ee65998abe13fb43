"""Canonical correlation analysis for large two-view datasets.

Randomized range-finder CCA (q + 1 data passes), a Horst-iteration
baseline, an exact dense oracle, and the streaming two-view data store
they all run on.
"""

__version__ = "0.1.0"

from .horst import HorstConfig, HorstTrace, horst_iterate
from .oracle import DenseTwoView, exact_cca, exact_cross_spectrum
from .rcca import (CcaConfig, CcaModel, SolverError, estimate_spectrum,
                   randomized_cca, rangefinder_bound, reg_from_nu,
                   residual_correlation_cap)
from .twoview import (TwoViewDataset, ingest_dense, ingest_parallel_text,
                      ingest_sparse, objective, split)

__all__ = [
    "CcaConfig", "CcaModel", "DenseTwoView", "HorstConfig", "HorstTrace",
    "SolverError", "TwoViewDataset", "estimate_spectrum", "exact_cca",
    "exact_cross_spectrum", "horst_iterate", "ingest_dense", "ingest_parallel_text",
    "ingest_sparse", "objective", "randomized_cca", "rangefinder_bound",
    "reg_from_nu", "residual_correlation_cap", "split",
]
