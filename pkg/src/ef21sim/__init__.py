"""ef21-sim: error-feedback distributed optimization simulator.

A desk-scale, single-process simulation of the master/worker protocol of EF21
and its extensions (stochastic gradients, PAGE, partial participation,
bidirectional compression, heavy-ball momentum, proximal steps) together with
the stepsize theory and the experiment harness used to compare them.
"""

__version__ = "1.0.0"
__author__ = "Your Name"
__email__ = "your.email@example.com"

__all__ = [
    "__version__",
    "__author__",
    "__email__",
]
