"""Proximal-gradient ablation baseline.

Identical driver, kernels, stopping rules, and trace schema as the Newton
solver; the only difference is that every iteration keeps the
proximal-gradient point. Exists to quantify what the Newton step buys.
"""

from .solver import _run


def solve_prox_gradient(problem, config, z0=None, callback=None):
    """Run the proximal-gradient-only iteration (no Newton acceleration)."""
    return _run(problem, config, z0, callback, use_newton=False)
