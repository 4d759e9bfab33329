"""Numerical laboratory for the non-cutoff Boltzmann collision operator."""

from .kernel import KernelParams, from_inverse_power, angular_b, post_collision, shell_of

__all__ = ["KernelParams", "from_inverse_power", "angular_b", "post_collision", "shell_of"]
__version__ = "0.1.0"
