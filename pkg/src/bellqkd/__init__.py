"""Simulator and finite-key analysis toolkit for a QKD link that measures a
single phase-encoded photon with a joint Bell-state measurement.

Layout:

- ``optics``    exact single-photon interference model (the oracle)
- ``devices``   source / channel / detector stochastics and closed forms
- ``protocol``  full-session Monte Carlo and analytic tallies
- ``analysis``  decoy-state bounds, deviation terms, secret-key rates
- ``config``    flat key=value run configuration
- ``cli``       command-line front end (table / simulate / analytic / sweep)
"""

__version__ = "0.1.0"

from . import analysis, config, devices, optics, protocol  # noqa: F401
