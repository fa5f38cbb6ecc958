"""Read-only plotting companion for the oam-memory CLI outputs.

Every number plotted here is read from a file the simulation CLI wrote
(scan CSVs, kernel binaries); no physics is computed in this package.
"""

from .io import SCAN_COLUMNS, KernelData, SchemaError, read_kernel, read_scan_csv
from .plots import FigureSpec, plot_chi_scan, plot_kernel

__all__ = [
    "SCAN_COLUMNS",
    "KernelData",
    "SchemaError",
    "read_kernel",
    "read_scan_csv",
    "FigureSpec",
    "plot_chi_scan",
    "plot_kernel",
]

__version__ = "0.1.0"
