"""NAND flash modulation codes.

This package provides constrained codes (RLL/NRZI, E-PH-free 2^M-ary block
codes), the E-PH pattern taxonomy, a cell-to-cell interference channel and a
Monte-Carlo word error rate harness for SLC and MLC flash memories.
"""

__version__ = "0.1.0"
