"""Bright-soliton Otto engine: variational width dynamics, shortcut pulses,
a split-step Gross-Pitaevskii solver and cycle thermodynamics."""

__version__ = "0.1.0"
