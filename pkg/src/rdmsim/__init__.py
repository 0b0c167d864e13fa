"""Stochastic quantum dynamics toolkit.

Simulation library and CLI for discrete-instant position sampling from
|psi|^2, current-driven beable jump processes, the energy-conserved
discrete collapse model, Zeno-protected (pointer-shift) measurement,
and relativistic frame analysis of jump/collapse events.
"""

__version__ = "0.1.0"
