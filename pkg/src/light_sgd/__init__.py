"""LIGHT output activation, small SGD-trained networks, and the benchmark harness."""

from light_sgd.light import LightParams, light_deriv, light_eval, preset, validate
from light_sgd.qcalc import q_exp, q_log

__all__ = [
    "LightParams",
    "light_deriv",
    "light_eval",
    "preset",
    "q_exp",
    "q_log",
    "validate",
]
