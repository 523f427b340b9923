"""Reduced basis construction by the method of snapshots.

The correlation matrix is the mass-weighted Gram of the snapshot columns; its
dominant eigenpairs give a mass-orthonormal basis whose truncation error obeys
exact trace identities, checked here in both the L2 and the gradient norm.

Identity normalization: the correlation matrix is unweighted, so the raw
eigenvalue sums equal column sums of squared errors; both identity routines
divide the two sides by the column count so the left side is the mean squared
error per snapshot.
"""

import numpy as np
from scipy.linalg import eigh

from .errors import DimensionError, InvariantError, RankError

RANK_TOLERANCE = 1e-12


class SnapshotSet:
    """Velocity snapshot columns with their generating context.

    matrix is n_vel by S; columns is a list of (member, time_index, time)
    triples in column order.  The set keeps a reference to the space it was
    sampled on, which fixes the mass Gram used everywhere downstream, plus
    the viscosity and time step of the generating run.
    """

    def __init__(self, space, matrix, columns, nu, dt):
        self.space = space
        self.matrix = np.ascontiguousarray(matrix, dtype=float)
        self.columns = list(columns)
        self.nu = float(nu)
        self.dt = float(dt)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != space.n_vel:
            raise DimensionError(
                f"snapshot matrix of shape {self.matrix.shape} does not match "
                f"velocity dof count {space.n_vel}")
        if self.matrix.shape[1] != len(self.columns):
            raise DimensionError("one metadata triple is required per column")

    @property
    def S(self):
        return self.matrix.shape[1]

    @property
    def gram(self):
        return self.space.velocity_mass()

    def validate(self, tol=1e-9):
        """Check every column is discretely divergence free."""
        B = self.space.divergence()
        residuals = np.linalg.norm(B @ self.matrix, axis=0)
        worst = float(residuals.max()) if len(residuals) else 0.0
        if worst > tol:
            raise InvariantError(
                f"snapshot column violates the divergence constraint ({worst:.3e})")
        return worst


def snapshots_from_trajectories(space, trajectories, nu, dt):
    """Stack snapshot columns member-major: all times of the first member,
    then all times of the next, across every trajectory in order."""
    cols = []
    meta = []
    member = 0
    for traj in trajectories:
        for j in range(traj.J):
            vel = traj.snapshot_velocity(j)
            for m, t in enumerate(traj.times):
                cols.append(vel[m])
                meta.append((member, m, float(t)))
            member += 1
    return SnapshotSet(space, np.stack(cols, axis=1), meta, nu, dt)


def build_correlation(snapshots):
    """Mass-weighted snapshot Gram, symmetrized."""
    A = snapshots.matrix
    C = A.T @ (snapshots.gram @ A)
    return 0.5 * (C + C.T)


class PODBasis:
    """Mass-orthonormal reduced basis with its spectrum and reduced Grams."""

    def __init__(self, space, Phi, eigenvalues, full_spectrum, grad_energies, nu):
        self.space = space
        self.Phi = np.ascontiguousarray(Phi, dtype=float)
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.full_spectrum = np.asarray(full_spectrum, dtype=float)
        self.grad_energies = np.asarray(grad_energies, dtype=float)
        self.nu = float(nu)
        M = space.velocity_mass()
        K = space.velocity_stiffness()
        self.M_R = self.Phi.T @ (M @ self.Phi)
        self.K_R = self.Phi.T @ (K @ self.Phi)
        self.M_R = 0.5 * (self.M_R + self.M_R.T)
        self.K_R = 0.5 * (self.K_R + self.K_R.T)
        self.S_R = self.M_R + self.nu * self.K_R

    @property
    def R(self):
        return self.Phi.shape[1]

    def project(self, u):
        """Reduced coefficients of the mass-orthogonal projection."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.space.n_vel,):
            raise DimensionError(
                f"expected velocity of length {self.space.n_vel}, got {u.shape}")
        return self.Phi.T @ (self.space.velocity_mass() @ u)

    def lift(self, c):
        c = np.asarray(c, dtype=float)
        if c.shape[-1] != self.R:
            raise DimensionError(
                f"expected reduced vector of length {self.R}, got {c.shape}")
        return c @ self.Phi.T if c.ndim > 1 else self.Phi @ c


def pod_basis(snapshots, R):
    """Dominant-R basis from the correlation eigenproblem.

    Eigenvector signs are fixed so each vector's largest-magnitude entry is
    positive, which makes truncation nested and runs reproducible.
    """
    S = snapshots.S
    if not 1 <= R <= S:
        raise RankError(f"requested {R} modes from {S} snapshot columns")
    C = build_correlation(snapshots)
    lam, vecs = eigh(C)
    lam = lam[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    for i in range(S):
        k = int(np.argmax(np.abs(vecs[:, i])))
        if vecs[k, i] < 0.0:
            vecs[:, i] = -vecs[:, i]
    if lam[R - 1] <= RANK_TOLERANCE * max(lam[0], 0.0):
        raise RankError(
            f"mode {R} is numerically null (eigenvalue {lam[R - 1]:.3e} vs "
            f"leading {lam[0]:.3e})")
    A = snapshots.matrix
    Phi = (A @ vecs[:, :R]) / np.sqrt(lam[:R])
    K = snapshots.space.velocity_stiffness()
    AtKA = A.T @ (K @ A)
    grad_energies = np.einsum('si,st,ti->i', vecs, AtKA, vecs)
    return PODBasis(snapshots.space, Phi, lam[:R], lam, grad_energies, snapshots.nu)


def _identity(snapshots, basis, R, weight):
    if R > basis.R:
        raise RankError(
            f"identity at truncation {R} needs a basis with at least {R} modes")
    A = snapshots.matrix
    S = snapshots.S
    M = snapshots.gram
    Phi = basis.Phi[:, :R]
    coeffs = Phi.T @ (M @ A)
    residual = A - Phi @ coeffs
    lhs = float(np.einsum('ns,ns->', residual, weight @ residual)) / S
    return residual, lhs


def projection_identity_l2(snapshots, basis, R):
    """Mean squared L2 truncation error vs the tail eigenvalue sum."""
    _, lhs = _identity(snapshots, basis, R, snapshots.gram)
    rhs = float(np.sum(basis.full_spectrum[R:])) / snapshots.S
    floor = 1e-14 * float(np.sum(np.abs(basis.full_spectrum))) / snapshots.S
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor)
    return lhs, rhs, gap


def projection_identity_h1(snapshots, basis, R):
    """Mean squared gradient-seminorm truncation error vs the tail sum of
    eigenvalue-weighted basis gradient energies."""
    K = snapshots.space.velocity_stiffness()
    _, lhs = _identity(snapshots, basis, R, K)
    rhs = float(np.sum(basis.grad_energies[R:])) / snapshots.S
    floor = 1e-14 * float(np.sum(np.abs(basis.grad_energies))) / snapshots.S
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor)
    return lhs, rhs, gap


def spectral_norms(basis):
    """Spectral norms of the viscous Gram and the inverse reduced mass."""
    s_norm = float(np.linalg.eigvalsh(basis.S_R)[-1])
    m_min = float(np.linalg.eigvalsh(basis.M_R)[0])
    return s_norm, 1.0 / m_min
