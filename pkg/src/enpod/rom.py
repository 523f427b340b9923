"""Reduced ensemble time stepping.

All mesh-scale work happens once at model build time: the convection tensor,
the reduced Grams, cached reduced loads, and the Poincare surrogate for the
dual force norm.  Each online step then forms one R-by-R matrix from the
ensemble mean, LU-factorizes it once, and backsolves per member, with the
stability condition monitored as the run advances.
"""

import time as _time
import warnings

import numpy as np
from scipy.sparse.linalg import eigsh

from .errors import ConfigError, DimensionError, InvariantError, StabilityAbort
from .fem import assemble_convection, project_force
from .linsolve import dense_factorize


class ReducedEnsembleState:
    """J reduced coefficient vectors at a common time."""

    def __init__(self, coeffs, time):
        self.coeffs = np.ascontiguousarray(coeffs, dtype=float)
        if self.coeffs.ndim != 2:
            raise DimensionError("reduced state must be a (J, R) array")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvariantError("reduced state contains non-finite entries")
        self.time = float(time)
        self.mean = self.coeffs.mean(axis=0)

    @property
    def J(self):
        return self.coeffs.shape[0]

    @property
    def R(self):
        return self.coeffs.shape[1]

    def validate(self):
        recomputed = self.coeffs.mean(axis=0)
        scale = max(float(np.max(np.abs(recomputed))), 1e-300)
        if np.max(np.abs(recomputed - self.mean)) > 1e-13 * scale:
            raise InvariantError("cached reduced mean is stale")


def _poincare_constant(space):
    """1/sqrt of the smallest stiffness-vs-mass pencil eigenvalue on the
    constrained velocity space; bounds the dual norm by C_P times the L2 norm."""
    free = np.setdiff1d(np.arange(space.n_vel), space.dirichlet_dofs)
    K = space.velocity_stiffness().tocsc()[free][:, free]
    M = space.velocity_mass().tocsc()[free][:, free]
    lam = eigsh(K, k=1, M=M, sigma=0.0, which='LM',
                return_eigenvectors=False)
    return 1.0 / float(np.sqrt(lam[0]))


def _force_l2_norm(space, force, t):
    g = space.geometry(6)
    fx, fy = force(g.xq[:, :, 0], g.xq[:, :, 1], t)
    fx = np.broadcast_to(np.asarray(fx, float), g.xq.shape[:2])
    fy = np.broadcast_to(np.asarray(fy, float), g.xq.shape[:2])
    return float(np.sqrt(np.einsum('tq,q,t->', fx * fx + fy * fy, g.w, g.detJ)))


class ReducedModel:
    """Offline-assembled operators for the reduced ensemble stepper."""

    def __init__(self, space, basis, nu, dt, forces):
        self.space = space
        self.basis = basis
        self.nu = float(nu)
        self.dt = float(dt)
        self.forces = list(forces)
        R = basis.R
        self.R = R
        Phi = basis.Phi
        self.K_R = basis.K_R
        self.M_R = basis.M_R
        self.S_R = self.M_R + self.nu * self.K_R
        self.s_norm = float(np.linalg.eigvalsh(self.S_R)[-1])
        self.reduced_curl = Phi.T @ (space.curl_gram() @ Phi)
        tensor = np.empty((R, R, R))
        for k in range(R):
            Nk = assemble_convection(space, Phi[:, k])
            tensor[:, k, :] = Phi.T @ (Nk @ Phi)
        self.tensor = tensor
        self._static_loads = None
        if all(f.time_independent for f in self.forces):
            self._static_loads = np.stack(
                [Phi.T @ project_force(space, f, 0.0) for f in self.forces])
        self.poincare = _poincare_constant(space)
        self._static_force_norms = None
        if all(f.time_independent for f in self.forces):
            self._static_force_norms = np.array(
                [_force_l2_norm(space, f, 0.0) for f in self.forces])

    def convection_matrix(self, a):
        """R-by-R matrix of the convection tensor contracted with a
        convecting coefficient vector."""
        return np.einsum('k,ikl->il', a, self.tensor)

    def reduced_loads(self, t):
        if self._static_loads is not None:
            return self._static_loads
        return np.stack([self.basis.Phi.T @ project_force(self.space, f, t)
                         for f in self.forces])

    def force_norms(self, t):
        if self._static_force_norms is not None:
            return self._static_force_norms
        return np.array([_force_l2_norm(self.space, f, t) for f in self.forces])


def build_reduced_model(space, basis, nu, dt, forces):
    return ReducedModel(space, basis, nu, dt, forces)


def reduced_initial_condition(basis, u0):
    """Reduced coefficients of a full-space initial velocity."""
    return basis.project(u0)


def _advance(model, state, timed=False):
    """One reduced step: shared matrix from the mean, one LU, J backsolves."""
    dt = model.dt
    t_new = state.time + dt
    tic = _time.perf_counter()
    A = (1.0 / dt) * np.eye(model.R) + model.nu * model.K_R \
        + model.convection_matrix(state.mean)
    factor = dense_factorize(A)
    t_build = _time.perf_counter() - tic

    tic = _time.perf_counter()
    loads = model.reduced_loads(t_new)
    if loads.shape[0] != state.J:
        raise DimensionError(
            f"{loads.shape[0]} forces available for {state.J} members")
    new = np.empty_like(state.coeffs)
    for j in range(state.J):
        c = state.coeffs[j]
        fluct = c - state.mean
        rhs = c / dt - model.convection_matrix(fluct) @ c + loads[j]
        new[j] = factor.solve(rhs)
    t_solve = _time.perf_counter() - tic
    out = ReducedEnsembleState(new, t_new)
    if timed:
        return out, t_build, t_solve
    return out


def en_pod_step(model, state):
    return _advance(model, state)


def stability_check(model, state, c_stab=1.0):
    """Per-member time-step condition: the viscosity-scaled product of the
    viscous-Gram spectral norm and the squared fluctuation gradient must stay
    below 1/dt."""
    fluct = state.coeffs - state.mean
    grad_sq = np.einsum('jr,rs,js->j', fluct, model.K_R, fluct)
    lhs = c_stab / model.nu * np.sqrt(model.s_norm) * grad_sq * model.dt
    return lhs, lhs <= 1.0


class ReducedTrajectory:
    """All reduced states of a run plus its stability and timing record."""

    def __init__(self, times, coeffs, stability_lhs, build_seconds, solve_seconds):
        self.times = np.asarray(times, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)   # (N+1, J, R)
        self.stability_lhs = np.asarray(stability_lhs, dtype=float)  # (N, J)
        self.build_seconds = np.asarray(build_seconds, dtype=float)
        self.solve_seconds = np.asarray(solve_seconds, dtype=float)

    @property
    def J(self):
        return self.coeffs.shape[1]

    def average(self):
        return self.coeffs.mean(axis=1)

    def sample(self, stride):
        return self.times[::stride], self.coeffs[::stride]


def run_rom(model, initial, T, c_stab=1.0, on_violation='warn'):
    """March the reduced ensemble to T, checking the stability condition
    before every step; violations warn (first occurrence) or abort."""
    if on_violation not in ('warn', 'abort'):
        raise ConfigError(f"unknown stability policy '{on_violation}'")
    dt = model.dt
    if T < 0.0:
        raise ConfigError("final time must be nonnegative")
    n_real = T / dt
    if abs(n_real - round(n_real)) > 1e-9 * max(1.0, abs(n_real)):
        raise ConfigError(f"final time {T} is not an integer multiple of dt {dt}")
    n_steps = int(round(n_real))

    state = initial
    times = [state.time]
    coeffs = [state.coeffs.copy()]
    stab = []
    builds = []
    solves = []
    warned = False
    for n in range(n_steps):
        lhs, ok = stability_check(model, state, c_stab)
        stab.append(lhs)
        if not np.all(ok):
            worst = float(lhs.max())
            if on_violation == 'abort':
                raise StabilityAbort(
                    f"stability condition violated at step {n} "
                    f"(worst member value {worst:.3e} > 1)")
            if not warned:
                warnings.warn(
                    f"stability condition violated at step {n} "
                    f"(worst member value {worst:.3e} > 1); continuing",
                    RuntimeWarning, stacklevel=2)
                warned = True
        state, t_build, t_solve = _advance(model, state, timed=True)
        times.append(state.time)
        coeffs.append(state.coeffs.copy())
        builds.append(t_build)
        solves.append(t_solve)
    return ReducedTrajectory(times, np.stack(coeffs),
                             np.array(stab).reshape(n_steps, -1) if stab
                             else np.empty((0, initial.J)),
                             builds, solves)


def energy_bound_monitor(trajectory, model):
    """Running discrete energy inequality per member.

    The left side accumulates kinetic energy, step increments, and viscous
    dissipation; the right side accumulates the forcing term with the dual
    norm replaced by the Poincare upper bound, so a reported satisfied=True
    certifies the inequality.
    """
    coeffs = trajectory.coeffs
    times = trajectory.times
    n_steps = coeffs.shape[0] - 1
    J = coeffs.shape[1]
    nu, dt = model.nu, model.dt
    K_R = model.K_R

    kinetic = 0.5 * np.einsum('njr,njr->nj', coeffs, coeffs)
    grad_sq = np.einsum('njr,rs,njs->nj', coeffs, K_R, coeffs)
    increments = coeffs[1:] - coeffs[:-1]
    inc_sq = np.einsum('njr,njr->nj', increments, increments)

    lhs = np.empty((n_steps + 1, J))
    rhs = np.empty((n_steps + 1, J))
    lhs[0] = kinetic[0] + 0.25 * nu * dt * grad_sq[0]
    rhs[0] = lhs[0]
    inc_cum = np.zeros(J)
    diss_cum = np.zeros(J)
    force_cum = np.zeros(J)
    for n in range(1, n_steps + 1):
        inc_cum += inc_sq[n - 1]
        diss_cum += grad_sq[n]
        dual_sq = (model.poincare * model.force_norms(times[n])) ** 2
        force_cum += dt / (2.0 * nu) * dual_sq
        lhs[n] = (kinetic[n] + 0.25 * inc_cum
                  + 0.25 * nu * dt * (grad_sq[n] + diss_cum))
        rhs[n] = force_cum + kinetic[0] + 0.25 * nu * dt * grad_sq[0]
    satisfied = np.all(lhs <= rhs * (1.0 + 1e-12) + 1e-300, axis=0)
    return lhs, rhs, satisfied
