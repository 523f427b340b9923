"""Command-line pipeline: mesh -> snapshots -> pod -> rom -> compare -> report.

Each stage reads and writes only declared artifacts under the output
directory, refuses to overwrite its outputs without --force, and records
content hashes so downstream stages can verify what they consume.  Heavy
imports happen after argument parsing so --threads can pin BLAS pools.
"""

import argparse
import os
import sys


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="enpod",
        description="Ensemble reduced-order pipeline for incompressible flow")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("mesh", "generate the mesh and its metadata"),
            ("snapshots", "run the snapshot ensemble and store the columns"),
            ("pod", "build the reduced basis from stored snapshots"),
            ("rom", "run the reduced ensemble for each requested basis size"),
            ("compare", "run the full-order reference and tabulate errors"),
            ("report", "render figures from the stored CSV artifacts"),
            ("pipeline", "run every stage in order")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="path to a JSON run config")
        s.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")
        s.add_argument("--out", default=None,
                       help="output directory (defaults to the config's)")
        s.add_argument("--threads", type=int, default=None,
                       help="BLAS thread cap (env EPOD_THREADS is the fallback)")
        if name in ("pod", "rom", "compare", "pipeline"):
            s.add_argument("--R", type=int, default=None,
                           help="basis size override")
        if name in ("rom", "compare", "pipeline"):
            s.add_argument("--eps", default=None,
                           help="comma-separated online perturbations override")
    return parser


def _pin_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


class _Stage:
    def __init__(self, args):
        from .config import load_config
        self.cfg = load_config(args.config)
        self.out = args.out or self.cfg.output_dir
        self.force = args.force
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out, name)

    def refuse_overwrite(self, *names):
        from .errors import ConfigError
        existing = [n for n in names if os.path.exists(self.path(n))]
        if existing and not self.force:
            raise ConfigError(
                "refusing to overwrite " + ", ".join(existing)
                + "; pass --force to redo this stage")

    def require(self, *names):
        from .errors import ConfigError
        missing = [n for n in names if not os.path.exists(self.path(n))]
        if missing:
            raise ConfigError(
                "missing upstream artifacts: " + ", ".join(missing)
                + "; run the earlier stages first")

    def load_mesh_stage(self):
        from . import artifacts
        from .errors import GridMismatchError
        from .fem import TaylorHoodSpace
        from .mesh import load_mesh
        self.require("mesh.txt", "mesh.json")
        mesh = load_mesh(self.path("mesh.txt"))
        meta = artifacts.read_json(self.path("mesh.json"))
        if meta["mesh_hash"] != mesh.content_hash():
            raise GridMismatchError(
                "mesh.txt does not match the hash recorded in mesh.json")
        return mesh, TaylorHoodSpace(mesh), meta


def _series_rows(times, labels, values):
    rows = []
    for lab, series in zip(labels, values):
        for t, v in zip(times, series):
            rows.append((float(t), lab, float(v)))
    return rows


def cmd_mesh(args):
    from . import artifacts
    from .mesh import save_mesh
    stage = _Stage(args)
    stage.refuse_overwrite("mesh.txt", "mesh.json")
    mesh = stage.cfg.build_mesh()
    save_mesh(mesh, stage.path("mesh.txt"))
    artifacts.write_json(stage.path("mesh.json"), {
        "mesh_hash": mesh.content_hash(),
        "config_hash": stage.cfg.content_hash(),
        "h": mesh.h,
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "n_edges": mesh.n_edges,
    })
    print(f"mesh: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, "
          f"h = {mesh.h:.4f}")
    return 0


def cmd_snapshots(args):
    from . import artifacts
    from .forces import perturbed_force, rotational_force
    from .full_order import run_transient, solve_steady_stokes
    from .pod import snapshots_from_trajectories
    stage = _Stage(args)
    outputs = ("snapshots.bin", "snapshots_meta.json",
               "snapshots_energy.csv", "snapshots_enstrophy.csv")
    stage.refuse_overwrite(*outputs)
    mesh, space, mesh_meta = stage.load_mesh_stage()
    cfg = stage.cfg

    base = rotational_force()
    trajectories = []
    for eps in cfg.snapshot_eps:
        ic = solve_steady_stokes(space, perturbed_force(eps))
        trajectories.append(run_transient(
            space, ic, "cn", cfg.dt, cfg.T, base, cfg.snapshot_every, cfg.nu))
        print(f"snapshots: member eps={eps} done "
              f"({len(trajectories[-1].times)} snapshots)")
    snaps = snapshots_from_trajectories(space, trajectories, cfg.nu, cfg.dt)
    worst = snaps.validate()
    artifacts.save_matrix(stage.path("snapshots.bin"), snaps.matrix)
    artifacts.write_json(stage.path("snapshots_meta.json"), {
        "columns": [{"member": j, "index": m, "time": t}
                    for j, m, t in snaps.columns],
        "eps": list(map(float, cfg.snapshot_eps)),
        "nu": cfg.nu,
        "dt": cfg.dt,
        "snapshot_every": cfg.snapshot_every,
        "divergence_residual": worst,
        "mesh_hash": mesh_meta["mesh_hash"],
        "config_hash": stage.cfg.content_hash(),
    })
    labels = [f"member_{j}" for j in range(len(trajectories))]
    times = trajectories[0].series_times
    for name, attr in (("snapshots_energy.csv", "energy"),
                       ("snapshots_enstrophy.csv", "enstrophy")):
        values = [getattr(traj, attr)[0] for traj in trajectories]
        artifacts.write_csv(stage.path(name), ("time", "label", "value"),
                            _series_rows(times, labels, values))
    print(f"snapshots: {snaps.S} columns stored")
    return 0


def _load_snapshots(stage, space):
    from . import artifacts
    from .errors import GridMismatchError
    from .pod import SnapshotSet
    stage.require("snapshots.bin", "snapshots_meta.json")
    meta = artifacts.read_json(stage.path("snapshots_meta.json"))
    mesh_meta = artifacts.read_json(stage.path("mesh.json"))
    if meta["mesh_hash"] != mesh_meta["mesh_hash"]:
        raise GridMismatchError("snapshots were generated on a different mesh")
    matrix = artifacts.load_matrix(stage.path("snapshots.bin"))
    columns = [(c["member"], c["index"], c["time"]) for c in meta["columns"]]
    return SnapshotSet(space, matrix, columns, meta["nu"], meta["dt"]), meta


def cmd_pod(args):
    from . import artifacts, diagnostics
    from .errors import ConfigError
    from .pod import pod_basis, spectral_norms
    stage = _Stage(args)
    outputs = ("basis.bin", "eigenvalues.csv", "singular_values.csv",
               "basis_meta.json")
    stage.refuse_overwrite(*outputs)
    mesh, space, mesh_meta = stage.load_mesh_stage()
    R = args.R if args.R is not None else max(stage.cfg.pod_R)
    if R < 1:
        raise ConfigError(f"basis size must be positive, got {R}")
    snaps, snap_meta = _load_snapshots(stage, space)
    basis = pod_basis(snaps, R)
    s_norm, m_inv_norm = spectral_norms(basis)
    artifacts.save_matrix(stage.path("basis.bin"), basis.Phi)
    artifacts.write_csv(
        stage.path("eigenvalues.csv"), ("index", "lambda", "gradnorm2"),
        [(i + 1, float(basis.full_spectrum[i]), float(basis.grad_energies[i]))
         for i in range(snaps.S)])
    diagnostics.export_singular_values(basis.full_spectrum,
                                       stage.path("singular_values.csv"))
    artifacts.write_json(stage.path("basis_meta.json"), {
        "R": basis.R,
        "nu": basis.nu,
        "s_norm": s_norm,
        "m_inv_norm": m_inv_norm,
        "mesh_hash": mesh_meta["mesh_hash"],
        "snapshot_hash": artifacts.sha256_file(stage.path("snapshots.bin")),
        "config_hash": stage.cfg.content_hash(),
    })
    print(f"pod: {basis.R} modes from {snaps.S} snapshots, "
          f"leading eigenvalue {basis.full_spectrum[0]:.6e}")
    return 0


def _load_basis(stage, space, R):
    from . import artifacts
    from .errors import ConfigError, GridMismatchError
    from .pod import PODBasis
    stage.require("basis.bin", "basis_meta.json", "eigenvalues.csv")
    meta = artifacts.read_json(stage.path("basis_meta.json"))
    mesh_meta = artifacts.read_json(stage.path("mesh.json"))
    if meta["mesh_hash"] != mesh_meta["mesh_hash"]:
        raise GridMismatchError(
            "stored basis was built on a different mesh; rerun the pod stage")
    Phi = artifacts.load_matrix(stage.path("basis.bin"))
    if R > Phi.shape[1]:
        raise ConfigError(
            f"requested {R} modes but the stored basis has {Phi.shape[1]}; "
            "rerun the pod stage with a larger --R")
    header, rows = artifacts.read_csv(stage.path("eigenvalues.csv"))
    lam = [float(r[header.index("lambda")]) for r in rows]
    grad = [float(r[header.index("gradnorm2")]) for r in rows]
    return PODBasis(space, Phi[:, :R], lam[:R], lam, grad, meta["nu"]), meta


def _parse_eps(text):
    from .errors import ConfigError
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --eps '{text}': {exc}") from exc
    if not values:
        raise ConfigError("--eps must list at least one value")
    return values


def _online_initial(stage, space, basis, eps_list):
    """Perturbations enter through the initial conditions only: each member
    starts from the Stokes response to its perturbed force, while the online
    dynamics drive every member with the shared base force."""
    import numpy as np
    from .forces import perturbed_force, rotational_force
    from .full_order import solve_steady_stokes
    from .rom import ReducedEnsembleState, reduced_initial_condition
    fields = [solve_steady_stokes(space, perturbed_force(e)) for e in eps_list]
    forces = [rotational_force() for _ in eps_list]
    coeffs = np.stack([reduced_initial_condition(basis, f.velocity)
                       for f in fields])
    return forces, fields, ReducedEnsembleState(coeffs, 0.0)


def cmd_rom(args):
    import numpy as np
    from . import artifacts
    from .rom import build_reduced_model, energy_bound_monitor, run_rom
    stage = _Stage(args)
    cfg = stage.cfg
    eps_list = _parse_eps(args.eps) if args.eps else [float(e) for e in cfg.online_eps]
    R_list = [args.R] if args.R is not None else cfg.pod_R
    mesh, space, mesh_meta = stage.load_mesh_stage()

    for R in R_list:
        outputs = (f"rom_traj_R{R}.csv", f"stability_R{R}.csv",
                   f"energy_bound_R{R}.csv", f"rom_energy_R{R}.csv",
                   f"rom_enstrophy_R{R}.csv", f"rom_meta_R{R}.json")
        stage.refuse_overwrite(*outputs)
        basis, basis_meta = _load_basis(stage, space, R)
        forces, _, initial = _online_initial(stage, space, basis, eps_list)
        model = build_reduced_model(space, basis, cfg.nu, cfg.dt, forces)
        traj = run_rom(model, initial, cfg.T, cfg.c_stab, cfg.on_violation)

        header = ["step", "time", "member"] + [f"c_{i+1}" for i in range(R)]
        rows = []
        for n, t in enumerate(traj.times):
            for j in range(traj.J):
                rows.append([n, float(t), j] + [float(v) for v in traj.coeffs[n, j]])
        artifacts.write_csv(stage.path(f"rom_traj_R{R}.csv"), header, rows)

        stab_rows = []
        for n in range(traj.stability_lhs.shape[0]):
            for j in range(traj.J):
                lhs = float(traj.stability_lhs[n, j])
                stab_rows.append((n, j, lhs, 1.0, lhs <= 1.0))
        artifacts.write_csv(stage.path(f"stability_R{R}.csv"),
                            ("step", "member", "lhs", "rhs", "satisfied"),
                            stab_rows)

        lhs, rhs, _ = energy_bound_monitor(traj, model)
        bound_rows = []
        for n in range(lhs.shape[0]):
            for j in range(traj.J):
                bound_rows.append((n, j, float(lhs[n, j]), float(rhs[n, j]),
                                   bool(lhs[n, j] <= rhs[n, j] * (1 + 1e-12))))
        artifacts.write_csv(stage.path(f"energy_bound_R{R}.csv"),
                            ("step", "member", "lhs", "rhs", "satisfied"),
                            bound_rows)

        labels = [f"member_{j}" for j in range(traj.J)] + ["mean"]
        energy_vals = [0.5 * np.einsum('nr,nr->n', traj.coeffs[:, j], traj.coeffs[:, j])
                       for j in range(traj.J)]
        mean_c = traj.average()
        energy_vals.append(0.5 * np.einsum('nr,nr->n', mean_c, mean_c))
        artifacts.write_csv(stage.path(f"rom_energy_R{R}.csv"),
                            ("time", "label", "value"),
                            _series_rows(traj.times, labels, energy_vals))
        ens_vals = [0.5 * cfg.nu * np.einsum('nr,rs,ns->n', traj.coeffs[:, j],
                                             model.reduced_curl, traj.coeffs[:, j])
                    for j in range(traj.J)]
        ens_vals.append(0.5 * cfg.nu * np.einsum(
            'nr,rs,ns->n', mean_c, model.reduced_curl, mean_c))
        artifacts.write_csv(stage.path(f"rom_enstrophy_R{R}.csv"),
                            ("time", "label", "value"),
                            _series_rows(traj.times, labels, ens_vals))

        violations = int(np.sum(traj.stability_lhs > 1.0))
        artifacts.write_json(stage.path(f"rom_meta_R{R}.json"), {
            "R": R,
            "eps": eps_list,
            "steps": len(traj.times) - 1,
            "members": traj.J,
            "stability_violations": violations,
            "build_seconds_total": float(np.sum(traj.build_seconds)),
            "solve_seconds_total": float(np.sum(traj.solve_seconds)),
            "mesh_hash": mesh_meta["mesh_hash"],
            "basis_hash": artifacts.sha256_file(stage.path("basis.bin")),
            "config_hash": stage.cfg.content_hash(),
        })
        print(f"rom: R={R} finished {len(traj.times)-1} steps, "
              f"{violations} stability violations")
    return 0


def _ensure_full_reference(stage, space, eps_list):
    """Run (or reuse) the full-order online ensemble; returns its
    snapshot-time average velocities."""
    import numpy as np
    from . import artifacts
    from .errors import ConfigError
    from .forces import perturbed_force, rotational_force
    from .full_order import EnsembleState, run_transient, solve_steady_stokes
    cfg = stage.cfg
    mesh_meta = artifacts.read_json(stage.path("mesh.json"))
    ref_bin = stage.path("full_reference.bin")
    ref_meta_path = stage.path("full_reference_meta.json")
    if os.path.exists(ref_bin) and os.path.exists(ref_meta_path):
        meta = artifacts.read_json(ref_meta_path)
        if (meta["eps"] == [float(e) for e in eps_list]
                and meta["mesh_hash"] == mesh_meta["mesh_hash"]):
            avg = artifacts.load_matrix(ref_bin)
            return np.asarray(meta["times"]), avg
        if not stage.force:
            raise ConfigError(
                "full_reference.bin was built for different settings; "
                "pass --force to recompute")
    members = [solve_steady_stokes(space, perturbed_force(e))
               for e in eps_list]
    forces = [rotational_force() for _ in eps_list]
    traj = run_transient(space, EnsembleState(members), "ensemble", cfg.dt,
                         cfg.T, forces, cfg.snapshot_every, cfg.nu)
    avg = traj.average_velocity()
    artifacts.save_matrix(ref_bin, avg)
    artifacts.write_json(ref_meta_path, {
        "times": [float(t) for t in traj.times],
        "eps": [float(e) for e in eps_list],
        "mesh_hash": mesh_meta["mesh_hash"],
        "config_hash": stage.cfg.content_hash(),
    })
    labels = [f"member_{j}" for j in range(traj.J)] + ["mean"]
    from . import diagnostics
    mean_energy = [diagnostics.energy(space, v) for v in avg]
    mean_enstrophy = [diagnostics.enstrophy(space, v, cfg.nu) for v in avg]
    energy_rows = _series_rows(traj.series_times, labels[:-1], traj.energy) \
        + _series_rows(traj.times, ["mean"], [mean_energy])
    enstrophy_rows = _series_rows(traj.series_times, labels[:-1], traj.enstrophy) \
        + _series_rows(traj.times, ["mean"], [mean_enstrophy])
    artifacts.write_csv(stage.path("full_energy.csv"),
                        ("time", "label", "value"), energy_rows)
    artifacts.write_csv(stage.path("full_enstrophy.csv"),
                        ("time", "label", "value"), enstrophy_rows)
    return traj.times, avg


def _read_rom_average(stage, R):
    import numpy as np
    from . import artifacts
    stage.require(f"rom_traj_R{R}.csv")
    header, rows = artifacts.read_csv(stage.path(f"rom_traj_R{R}.csv"))
    c_cols = [i for i, h in enumerate(header) if h.startswith("c_")]
    steps = sorted({int(r[0]) for r in rows})
    members = sorted({int(r[2]) for r in rows})
    coeffs = np.zeros((len(steps), len(members), len(c_cols)))
    times = np.zeros(len(steps))
    for r in rows:
        n, j = int(r[0]), int(r[2])
        times[n] = float(r[1])
        coeffs[n, j] = [float(r[i]) for i in c_cols]
    return times, coeffs


def cmd_compare(args):
    import numpy as np
    from . import artifacts, diagnostics
    stage = _Stage(args)
    cfg = stage.cfg
    eps_list = _parse_eps(args.eps) if args.eps else [float(e) for e in cfg.online_eps]
    R_list = [args.R] if args.R is not None else cfg.pod_R
    mesh, space, mesh_meta = stage.load_mesh_stage()

    ref_times, ref_avg = _ensure_full_reference(stage, space, eps_list)
    stride = int(round(cfg.snapshot_every / cfg.dt))
    M = space.velocity_mass()

    existing = {}
    err_path = stage.path("error_vs_R.csv")
    if os.path.exists(err_path):
        header, rows = artifacts.read_csv(err_path)
        for r in rows:
            existing[int(r[0])] = float(r[1])
    from .errors import ConfigError
    clashes = [R for R in R_list if R in existing]
    if clashes and not stage.force:
        raise ConfigError(
            f"error_vs_R.csv already has rows for R in {clashes}; pass --force")

    basis_full, _ = _load_basis(stage, space, max(R_list))
    for R in R_list:
        times, coeffs = _read_rom_average(stage, R)
        snap_times = times[::stride]
        avg_c = coeffs.mean(axis=1)[::stride]
        lifted = avg_c @ basis_full.Phi[:, :R].T
        err = diagnostics.relative_l2_error(ref_times, ref_avg,
                                            snap_times, lifted, M)
        existing[R] = err
        print(f"compare: R={R} relative error {err:.6f}")
    artifacts.write_csv(err_path, ("R", "relative_error"),
                        sorted(existing.items()))
    return 0


def cmd_report(args):
    from . import artifacts, report
    stage = _Stage(args)
    rendered = report.render_all(stage.out, force=stage.force)
    artifacts.write_json(stage.path("report.json"), {
        "figures": rendered,
        "config_hash": stage.cfg.content_hash(),
    })
    for name in rendered:
        print(f"report: wrote {name}")
    return 0


def cmd_pipeline(args):
    for fn in (cmd_mesh, cmd_snapshots, cmd_pod, cmd_rom, cmd_compare,
               cmd_report):
        code = fn(args)
        if code:
            return code
    return 0


_HANDLERS = {
    "mesh": cmd_mesh,
    "snapshots": cmd_snapshots,
    "pod": cmd_pod,
    "rom": cmd_rom,
    "compare": cmd_compare,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get("EPOD_THREADS"):
        try:
            threads = int(os.environ["EPOD_THREADS"])
        except ValueError:
            print("warning: ignoring non-integer EPOD_THREADS", file=sys.stderr)
    if threads is not None and threads >= 1:
        _pin_threads(threads)

    if not hasattr(args, "R"):
        args.R = None
    if not hasattr(args, "eps"):
        args.eps = None

    from .errors import (ConfigError, DimensionError, GeometryError,
                         GridMismatchError, InvariantError, NonConvergence,
                         ParseError, RankError, ResolutionError,
                         SingularMatrixError, StabilityAbort)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ParseError, GridMismatchError, GeometryError,
            ResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, SingularMatrixError, RankError, InvariantError,
            DimensionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except StabilityAbort as exc:
        print(f"stability abort: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
