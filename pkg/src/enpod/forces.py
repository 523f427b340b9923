"""Body forces for the offset-circles benchmark.

The base force drives a counterclockwise rotation and vanishes on the unit
circle; perturbed variants add a scaled sinusoidal field, which is how the
ensemble members are differentiated.
"""

import numpy as np


class BodyForce:
    """Closed-form force field, callable as f(x, y, t) -> (fx, fy).

    time_independent marks forces whose values do not depend on t, which lets
    downstream solvers cache their load vectors.
    """

    def __init__(self, fn, time_independent, label=""):
        self._fn = fn
        self.time_independent = time_independent
        self.label = label

    def __call__(self, x, y, t):
        return self._fn(x, y, t)


def zero_force():
    return BodyForce(lambda x, y, t: (np.zeros_like(x), np.zeros_like(y)),
                     time_independent=True, label="zero")


def rotational_force():
    """Counterclockwise rotational force (-4y(1-x^2-y^2), 4x(1-x^2-y^2))."""
    def fn(x, y, t):
        s = 1.0 - x * x - y * y
        return -4.0 * y * s, 4.0 * x * s
    return BodyForce(fn, time_independent=True, label="rotational")


def perturbed_force(eps):
    """Rotational force plus eps * (sin(3πx)sin(3πy), cos(3πx)cos(3πy))."""
    def fn(x, y, t):
        s = 1.0 - x * x - y * y
        fx = -4.0 * y * s + eps * np.sin(3.0 * np.pi * x) * np.sin(3.0 * np.pi * y)
        fy = 4.0 * x * s + eps * np.cos(3.0 * np.pi * x) * np.cos(3.0 * np.pi * y)
        return fx, fy
    return BodyForce(fn, time_independent=True, label=f"perturbed(eps={eps})")
