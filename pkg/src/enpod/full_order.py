"""Full-order incompressible flow solvers on Taylor-Hood spaces.

Three solvers share one saddle-point infrastructure: a steady Stokes solve
(used to manufacture initial conditions), a Crank-Nicolson stepper with
Picard-resolved convection (the snapshot generator), and an ensemble stepper
whose implicit convection uses the ensemble mean so that every member shares
one coefficient matrix per step.

The zero-mean pressure constraint is enforced with one Lagrange multiplier
row/column; velocity boundary conditions are eliminated symmetrically.
"""

import numpy as np
from scipy import sparse

from . import diagnostics
from .errors import ConfigError, DimensionError, InvariantError, NonConvergence
from .fem import apply_dirichlet, assemble_convection, interpolate_velocity, project_force
from .linsolve import solve_many, sparse_factorize


class FlowField:
    """Velocity and pressure coefficients at one time level."""

    def __init__(self, velocity, pressure, time):
        self.velocity = np.asarray(velocity, dtype=float)
        self.pressure = np.asarray(pressure, dtype=float)
        self.time = float(time)
        if not (np.all(np.isfinite(self.velocity))
                and np.all(np.isfinite(self.pressure))):
            raise InvariantError("flow field contains non-finite entries")


class EnsembleState:
    """J flow fields at a common time, with their cached velocity mean."""

    def __init__(self, members):
        if not members:
            raise DimensionError("ensemble needs at least one member")
        self.members = list(members)
        t0 = self.members[0].time
        if any(abs(m.time - t0) > 1e-12 * max(1.0, abs(t0)) for m in self.members):
            raise InvariantError("ensemble members are at different times")
        self.time = t0
        self.mean = sum(m.velocity for m in self.members) / len(self.members)

    @property
    def J(self):
        return len(self.members)

    def validate(self):
        recomputed = sum(m.velocity for m in self.members) / self.J
        scale = max(float(np.max(np.abs(recomputed))), 1e-300)
        if np.max(np.abs(recomputed - self.mean)) > 1e-13 * scale:
            raise InvariantError("cached ensemble mean is stale")


def _integer_ratio(a, b, what):
    k = a / b
    if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
        raise ConfigError(f"{what}: {a} is not an integer multiple of {b}")
    return int(round(k))


def build_saddle(space, A_vel):
    """Assemble [[A, Bᵀ, 0], [B, 0, m], [0, mᵀ, 0]] with the zero-mean
    pressure multiplier."""
    B = space.divergence()
    m = sparse.csr_matrix(space.pressure_integral().reshape(-1, 1))
    return sparse.bmat([[A_vel, B.T, None],
                        [B, None, m],
                        [None, m.T, None]], format='csr')


def _saddle_rhs(space, rhs_vel):
    return np.concatenate([rhs_vel, np.zeros(space.n_pr + 1)])


def _dirichlet_values(space, bc, t):
    if bc is None:
        return np.zeros(len(space.dirichlet_dofs))
    return interpolate_velocity(space, bc, t)[space.dirichlet_dofs]


def _split(space, sol, t):
    return FlowField(sol[:space.n_vel], sol[space.n_vel:space.n_vel + space.n_pr], t)


def solve_steady_stokes(space, force, nu=1.0, bc=None, time=0.0):
    """Solve ν(∇u,∇v) − (p,∇·v) = (f,v) with (∇·u,q) = 0 and zero-mean p.

    The default unit viscosity makes this the initial-condition generator
    for ensemble runs: members start from the plain Stokes response to
    their perturbed forces, independent of the flow viscosity."""
    A = nu * space.velocity_stiffness()
    S = build_saddle(space, A)
    rhs = _saddle_rhs(space, project_force(space, force, time))
    vals = _dirichlet_values(space, bc, time)
    S2, rhs2 = apply_dirichlet(S, rhs, space.dirichlet_dofs, vals)
    sol = sparse_factorize(S2).solve(rhs2)
    return _split(space, sol, time)


def cn_step(space, state, dt, force, nu, include_convection=True,
            tol=1e-9, max_iter=25, bc=None):
    """One Crank-Nicolson step; the midpoint nonlinearity is relaxed by
    Picard iteration on the convecting field until the algebraic momentum
    residual (restricted to free dofs) drops below tol."""
    if dt <= 0.0:
        raise ConfigError("time step must be positive")
    M = space.velocity_mass()
    K = space.velocity_stiffness()
    B = space.divergence()
    u_n = state.velocity
    t_new = state.time + dt
    F = project_force(space, force, state.time + 0.5 * dt)
    vals = _dirichlet_values(space, bc, t_new)
    free = np.setdiff1d(np.arange(space.n_vel), space.dirichlet_dofs)

    U = u_n.copy()
    Nmid = assemble_convection(space, 0.5 * (u_n + U)) if include_convection else None
    residual = first_residual = None
    field = None
    for _ in range(max_iter):
        A = (1.0 / dt) * M + (0.5 * nu) * K
        rhs_v = (1.0 / dt) * (M @ u_n) - (0.5 * nu) * (K @ u_n) + F
        if include_convection:
            A = A + 0.5 * Nmid
            rhs_v = rhs_v - 0.5 * (Nmid @ u_n)
        S = build_saddle(space, A.tocsr())
        S2, rhs2 = apply_dirichlet(S, _saddle_rhs(space, rhs_v),
                                   space.dirichlet_dofs, vals)
        sol = sparse_factorize(S2).solve(rhs2)
        field = _split(space, sol, t_new)
        U, p = field.velocity, field.pressure
        mid = 0.5 * (u_n + U)
        res = (1.0 / dt) * (M @ (U - u_n)) + nu * (K @ mid) + B.T @ p - F
        if include_convection:
            Nmid = assemble_convection(space, mid)
            res += Nmid @ mid
        residual = float(np.linalg.norm(res[free]))
        if first_residual is None:
            first_residual = residual
        if residual <= tol or not include_convection:
            return field
    # The iteration cap is a legitimate stopping criterion; only a residual
    # that blew up or went non-finite counts as failure.
    if not np.isfinite(residual) or residual > 10.0 * max(first_residual, 1.0):
        raise NonConvergence(
            f"Picard iteration diverged after {max_iter} iterations",
            residual=residual)
    return field


def en_full_fe_step(space, ens, dt, forces, nu):
    """Advance all J members one step.  The implicit convecting field is the
    ensemble mean, so the coefficient matrix is assembled and factorized once
    and every member is a backsolve; the member fluctuation enters explicitly.
    Boundary conditions are homogeneous no-slip."""
    if dt <= 0.0:
        raise ConfigError("time step must be positive")
    if len(forces) != ens.J:
        raise DimensionError(
            f"{len(forces)} forces supplied for {ens.J} ensemble members")
    M = space.velocity_mass()
    K = space.velocity_stiffness()
    t_new = ens.time + dt
    mean = ens.mean

    A = (1.0 / dt) * M + assemble_convection(space, mean) + nu * K
    S = build_saddle(space, A.tocsr())
    zeros = np.zeros(len(space.dirichlet_dofs))
    S2, _ = apply_dirichlet(S, np.zeros(S.shape[0]), space.dirichlet_dofs, zeros)
    factor = sparse_factorize(S2)

    keep = np.ones(S.shape[0])
    keep[space.dirichlet_dofs] = 0.0
    rhs_list = []
    for member, force in zip(ens.members, forces):
        u_j = member.velocity
        Nfluct = assemble_convection(space, u_j - mean)
        rhs_v = (1.0 / dt) * (M @ u_j) - Nfluct @ u_j + project_force(space, force, t_new)
        rhs_list.append(_saddle_rhs(space, rhs_v) * keep)
    sols = solve_many(factor, rhs_list)
    return EnsembleState([_split(space, sol, t_new) for sol in sols])


class Trajectory:
    """Snapshots at a fixed cadence plus per-step energy and enstrophy
    series for every member."""

    def __init__(self, snap_times, members, series_times, energy, enstrophy):
        self.times = np.asarray(snap_times, dtype=float)
        self.members = members            # list over j of list of FlowField
        self.series_times = np.asarray(series_times, dtype=float)
        self.energy = np.asarray(energy, dtype=float)       # (J, n_steps+1)
        self.enstrophy = np.asarray(enstrophy, dtype=float)

    @property
    def J(self):
        return len(self.members)

    def snapshot_velocity(self, j):
        return np.stack([f.velocity for f in self.members[j]])

    def average_velocity(self):
        """Ensemble-average velocity at every snapshot time, (n_snap, n_vel)."""
        return sum(self.snapshot_velocity(j) for j in range(self.J)) / self.J


def run_transient(space, initial, scheme, dt, T, forces, snapshot_every, nu,
                  cn_kwargs=None):
    """March from t=0 to T recording snapshots every snapshot_every.

    scheme 'cn' advances a single FlowField with Crank-Nicolson and expects
    one force; scheme 'ensemble' advances an EnsembleState with the
    shared-matrix stepper and expects one force per member.
    """
    if dt <= 0.0 or T < 0.0:
        raise ConfigError("need dt > 0 and T >= 0")
    n_steps = _integer_ratio(T, dt, "final time vs time step") if T > 0 else 0
    stride = _integer_ratio(snapshot_every, dt, "snapshot cadence vs time step")
    if stride <= 0:
        raise ConfigError("snapshot_every must be at least one time step")

    if scheme == 'cn':
        members = [initial]
        member_forces = [forces] if not isinstance(forces, (list, tuple)) else list(forces)
        if len(member_forces) != 1:
            raise DimensionError("scheme 'cn' takes exactly one force")
    elif scheme == 'ensemble':
        members = list(initial.members)
        member_forces = list(forces)
    else:
        raise ConfigError(f"unknown scheme '{scheme}'")

    J = len(members)
    snaps = [[] for _ in range(J)]
    snap_times = []
    series_times = np.empty(n_steps + 1)
    energy = np.empty((J, n_steps + 1))
    enstrophy = np.empty((J, n_steps + 1))

    def record(step, fields):
        t = fields[0].time
        series_times[step] = t
        for j, f in enumerate(fields):
            energy[j, step] = diagnostics.energy(space, f.velocity)
            enstrophy[j, step] = diagnostics.enstrophy(space, f.velocity, nu)
        if step % stride == 0:
            snap_times.append(t)
            for j, f in enumerate(fields):
                snaps[j].append(f)

    record(0, members)
    state = EnsembleState(members) if scheme == 'ensemble' else members[0]
    for step in range(1, n_steps + 1):
        if scheme == 'cn':
            state = cn_step(space, state, dt, member_forces[0], nu,
                            **(cn_kwargs or {}))
            record(step, [state])
        else:
            state = en_full_fe_step(space, state, dt, member_forces, nu)
            record(step, state.members)
    return Trajectory(snap_times, snaps, series_times, energy, enstrophy)
