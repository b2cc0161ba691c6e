"""Soft snake locomotion sandbox.

Discrete Cosserat rod physics with anisotropic ground friction, a
double-threshold spiking segment controller plus vanilla-torque / CPG /
random baselines, a target-reaching environment, a from-scratch PPO trainer,
and an evaluation harness.  Hot loops run on a compiled core when available
(see :mod:`softsnake.backend`).
"""

__version__ = "0.1.0"

from softsnake.backend import backend_name

__all__ = ["__version__", "backend_name"]
