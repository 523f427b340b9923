"""Scalar flow metrics and trajectory comparison.

Every metric has a full-space path (quadratic form through an assembled Gram)
and a reduced path (quadratic form through the precomputed R-by-R Gram); the
two agree on lifted fields to roundoff.
"""

import numpy as np

from .errors import DimensionError, GridMismatchError, InvariantError


class TimeSeries:
    """Labelled scalar series on a strictly increasing time grid."""

    def __init__(self, times, labels, values):
        self.times = np.asarray(times, dtype=float)
        self.labels = list(labels)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0.0):
            raise InvariantError("times must be strictly increasing")
        if self.values.shape != (len(self.labels), len(self.times)):
            raise DimensionError(
                f"values of shape {self.values.shape} do not match "
                f"{len(self.labels)} labels x {len(self.times)} times")

    def to_csv_rows(self):
        rows = []
        for lab, vals in zip(self.labels, self.values):
            for t, v in zip(self.times, vals):
                rows.append((t, lab, v))
        return rows


def _is_full(obj):
    return hasattr(obj, 'velocity_mass')


def energy(obj, field):
    """Kinetic energy ½‖u‖²: mass-weighted in the full space, ½|c|² in the
    reduced space (whose basis is mass-orthonormal)."""
    field = np.asarray(field, dtype=float)
    if _is_full(obj):
        if field.shape != (obj.n_vel,):
            raise DimensionError(
                f"expected velocity of length {obj.n_vel}, got {field.shape}")
        return 0.5 * float(field @ (obj.velocity_mass() @ field))
    if field.shape != (obj.R,):
        raise DimensionError(
            f"expected reduced vector of length {obj.R}, got {field.shape}")
    return 0.5 * float(field @ field)


def enstrophy(obj, field, nu):
    """Enstrophy ½ν‖∇×u‖² with the scalar 2D curl."""
    field = np.asarray(field, dtype=float)
    if _is_full(obj):
        if field.shape != (obj.n_vel,):
            raise DimensionError(
                f"expected velocity of length {obj.n_vel}, got {field.shape}")
        return 0.5 * nu * float(field @ (obj.curl_gram() @ field))
    if field.shape != (obj.R,):
        raise DimensionError(
            f"expected reduced vector of length {obj.R}, got {field.shape}")
    return 0.5 * nu * float(field @ (obj.reduced_curl @ field))


def relative_l2_error(times_a, fields_a, times_b, fields_b, gram):
    """Space-time relative L2 distance between two sampled trajectories:
    sqrt(∫‖a−b‖²dt / ∫‖a‖²dt) with the time integral by the trapezoid rule
    on the common sample times and the spatial norm through gram."""
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    if times_a.shape != times_b.shape or np.any(
            np.abs(times_a - times_b) > 1e-12 * np.maximum(1.0, np.abs(times_a))):
        raise GridMismatchError("trajectories are sampled at different times")
    fields_a = np.asarray(fields_a, dtype=float)
    fields_b = np.asarray(fields_b, dtype=float)
    if fields_a.shape != fields_b.shape or fields_a.shape[0] != len(times_a):
        raise GridMismatchError(
            f"trajectory shapes {fields_a.shape} and {fields_b.shape} do not align")
    diff = fields_a - fields_b
    num = np.einsum('tn,tn->t', diff, (gram @ diff.T).T)
    den = np.einsum('tn,tn->t', fields_a, (gram @ fields_a.T).T)
    num_int = np.trapezoid(num, times_a)
    den_int = np.trapezoid(den, times_a)
    if den_int <= 0.0:
        return 0.0 if num_int <= 0.0 else float('inf')
    return float(np.sqrt(num_int / den_int))


def export_singular_values(spectrum, path):
    """Write the snapshot spectrum as CSV rows (i, sigma_i, lambda_i)."""
    from .artifacts import atomic_write_text
    lam = np.asarray(spectrum, dtype=float)
    lines = ["i,sigma,lambda"]
    for i, value in enumerate(lam, start=1):
        sigma = float(np.sqrt(max(value, 0.0)))
        lines.append(f"{i},{sigma!r},{float(value)!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")
