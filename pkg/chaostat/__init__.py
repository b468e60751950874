"""
chaostat - Long-term statistics of chaotic PDEs
Spectral solvers, closure baselines and a physics-informed neural operator compared on the
invariant measure they reproduce.
"""

__version__ = "0.1.0"
