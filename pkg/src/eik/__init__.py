"""eik: entropic inference kit.

Maximum-entropy updating of discrete distributions and density matrices,
quantum Bayes and Jeffreys measurement rules, a 1-D entropic-dynamics
lattice simulator and weak-measurement inference.
"""

from . import classical, dynamics, errors, linalg, measurement, qmaxent, weak

__version__ = "0.1.0"

__all__ = ["classical", "dynamics", "errors", "linalg", "measurement", "qmaxent", "weak"]
