"""Simulator and analysis toolkit for a superconducting artificial-atom maser.

The package is organized in layers that mirror the physical model:

``grids``
    Phase-space discretization and finite-difference derivative operators.
``components``
    Single-component quantum problems (SNAIL, transmon, cavity) and the
    SNAIL circuit-parameter fit.
``composite``
    Capacitive coupling, the hybridized artificial atom, the reduced
    parametric pump, and the rotating-frame transformation.
``lindblad``
    Liouvillian construction, steady states, and spectral-gap linewidths.
``sweep`` / ``config`` / ``cli``
    Operating-point sweeps, configuration files, and the command line.
``analysis``
    Measurement-side fitting: Lorentzian spectra and two-time phase
    correlation of IQ traces.
"""

from masersim.version import __version__

__all__ = ["__version__"]
