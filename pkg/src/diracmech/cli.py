"""Command-line interface.

Subcommands: ``verify`` (structure checks on a configured system),
``simulate`` (fixed-step integration to CSV), ``compose`` (report the
interconnected structure at a point), ``selftest`` (property suites).

Exit codes: 0 success, 1 verification or test failure, 2 usage or schema
error, 3 runtime integration failure.
"""

import argparse
import sys

import numpy as np

from . import config as cfgmod
from . import dirac, induced, sampling, selftest
from .integrator import SimulationAborted, project_initial, simulate
from .library import BadParameterError, UnknownSystemError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _fmt(x):
    return format(float(x), ".17g")


def _load_system(path):
    document = cfgmod.load_config(path)
    system = cfgmod.build_system(document)
    return document, system


def cmd_verify(args):
    document, system = _load_system(args.config)
    rng = np.random.default_rng(args.seed)
    spec = system.constraints
    n = system.config_dim
    print(f"system: {system.name} (configuration dimension {n})")

    failures = []
    ranks = set()
    for index in range(8):
        q, p = sampling.random_phase_point(rng, n)
        rows = spec.stacked_rows(q)
        rank = int(np.linalg.matrix_rank(rows)) if rows.size else 0
        ranks.add(rank)
        d = induced.interconnect_at(spec, q, p)
        checks = [
            ("dirac-validity", dirac.is_dirac(d) and d.dim == 2 * n),
            ("interconnection-identity",
             d.equals(induced.interconnect_reference(spec, q, p))),
        ]
        lift = induced.lift_to_cotangent(
            induced.DistributionField(n, lambda qq: spec.stacked_rows(qq),
                                      row_count=rows.shape[0]), q)
        checks.append(("velocity-projection",
                       d.velocity_projection().equals(lift)))
        carried = dirac.extract_two_form(d)
        canonical = dirac.canonical_form_matrix(n)
        basis = carried.distribution.basis
        checks.append((
            "two-form",
            bool(np.max(np.abs(basis.T @ carried.form @ basis
                               - basis.T @ canonical @ basis),
                        initial=0.0) <= 1e-9),
        ))
        if rank == 0:
            checks.append(("canonical-structure",
                           d.equals(dirac.canonical_structure(n))))
        for name, passed in checks:
            if not passed:
                failures.append(f"point {index}: {name}")
        if index == 0:
            print(f"constraint rows: {rows.shape[0]}, rank {rank}")
            if rank == 0:
                print("unconstrained: canonical structure "
                      "(graph of the symplectic flat map), rank "
                      f"{n}")
            print(f"structure dimension: {d.dim} of phase dimension {2 * n}")
            dist_dim = carried.distribution.dim
            print(f"two-form carried on a distribution of dimension {dist_dim}")
    if len(ranks) > 1:
        failures.append(f"constraint rank varies over points: {sorted(ranks)}")
    print(f"checked 8 sampled phase points (seed {args.seed})")
    if failures:
        for failure in failures:
            print(f"FAIL {failure}")
        return EXIT_FAIL
    print("all verification checks passed")
    return EXIT_OK


def _write_csv(system, traj, fields):
    n = system.config_dim
    m = system.constraint_row_count
    groups = {
        "t": ["t"],
        "q": [f"q_{i}" for i in range(n)],
        "v": [f"v_{i}" for i in range(n)],
        "p": [f"p_{i}" for i in range(n)],
        "mu": [f"mu_{a}" for a in range(m)],
        "E": ["E"],
        "power_residual": ["power_residual"],
        "constraint_residual_max": ["constraint_residual_max"],
        "newton_iters": ["newton_iters"],
    }
    header = [name for f in fields for name in groups[f]]
    lines = [",".join(header)]
    for k, state in enumerate(traj.states):
        row = []
        for f in fields:
            if f == "t":
                row.append(_fmt(state.t))
            elif f == "q":
                row.extend(_fmt(x) for x in state.q)
            elif f == "v":
                row.extend(_fmt(x) for x in state.v)
            elif f == "p":
                row.extend(_fmt(x) for x in state.p)
            elif f == "mu":
                row.extend(_fmt(x) for x in state.mu)
            elif f == "E":
                row.append(_fmt(traj.energy[k]))
            elif f == "power_residual":
                row.append(_fmt(traj.power_residual[k]))
            elif f == "constraint_residual_max":
                row.append(_fmt(traj.constraint_residual_max[k]))
            elif f == "newton_iters":
                row.append(str(traj.newton_iterations[k]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_simulate(args):
    document, system = _load_system(args.config)
    overrides = {"h": args.h, "t_final": args.t_final, "scheme": args.scheme,
                 "newton_tol": args.tol}
    integ, t_final = cfgmod.integrator_settings(document, overrides)
    q0, v0 = cfgmod.initial_conditions(document, system)
    state = project_initial(system, q0, v0)
    output = document.get("output", {})
    path = args.out or output.get("path", "trajectory.csv")
    fields = output.get("fields") or list(cfgmod.OUTPUT_FIELDS)

    aborted = None
    try:
        traj = simulate(system, state, integ, t_final)
    except SimulationAborted as failure:
        traj = failure.trajectory
        aborted = failure
    text = _write_csv(system, traj, fields)
    if aborted is not None:
        text += f"# aborted at t={traj.states[-1].t:g}: {aborted.cause}\n"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if aborted is not None:
        print(f"simulation aborted; partial trajectory in {path}")
        print(f"cause: {aborted.cause}")
        return EXIT_RUNTIME
    final = traj.states[-1]
    print(f"wrote {path}: {len(traj)} states, "
          f"final t={_fmt(final.t)}, E={_fmt(traj.energy[-1])}")
    return EXIT_OK


def _parse_point(text, n):
    values = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    if len(values) == n:
        return np.array(values), np.zeros(n)
    if len(values) == 2 * n:
        return np.array(values[:n]), np.array(values[n:])
    raise cfgmod.ConfigError(
        f"--point needs {n} (configuration) or {2 * n} (with momentum) "
        f"numbers, got {len(values)}"
    )


def cmd_compose(args):
    document, system = _load_system(args.config)
    n = system.config_dim
    if args.point:
        q, p = _parse_point(args.point, n)
    else:
        q, p = np.zeros(n), np.zeros(n)
    d = induced.interconnect_at(system.constraints, q, p)
    velocity = d.velocity_projection()
    config_block = np.hstack([np.eye(n), np.zeros((n, n))])
    config_velocity = dirac.sub.image(velocity, config_block, scale=1.0)
    print(f"system: {system.name}")
    print(f"point: q={list(map(float, q))}, p={list(map(float, p))}")
    print(f"interconnected structure dimension: {d.dim} "
          f"(phase dimension {2 * n})")
    print(f"velocity projection dimension: {velocity.dim}")
    print(f"configuration velocity dimension: {config_velocity.dim}")
    rows = system.constraints.stacked_rows(q)
    force_dirs = dirac.sub.span(rows.T, ambient_dim=n) if rows.size else None
    print("annihilator directions beyond the symplectic image:")
    if force_dirs is None or force_dirs.dim == 0:
        print("  none (unconstrained)")
    else:
        for column in force_dirs.basis.T:
            print("  [" + ", ".join(f"{x: .6f}" for x in column) + "]")
    print("structure basis (velocity | covector), one element per line:")
    for column in d.subspace.basis.T:
        vel = ", ".join(f"{x: .6f}" for x in column[: 2 * n])
        cov = ", ".join(f"{x: .6f}" for x in column[2 * n :])
        print(f"  ({vel} | {cov})")
    return EXIT_OK


def cmd_selftest(args):
    return selftest.run(seed=args.seed)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dirac-mech",
        description="Constraint-interconnected implicit Lagrangian systems: "
                    "verify structures, compose them, and simulate.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="structure checks at sampled points")
    verify.add_argument("config")
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(fn=cmd_verify)

    sim = commands.add_parser("simulate", help="integrate and write a CSV trajectory")
    sim.add_argument("config")
    sim.add_argument("--h", type=float, default=None, help="step size override")
    sim.add_argument("--t-final", type=float, default=None, dest="t_final")
    sim.add_argument("--scheme", choices=("implicit-midpoint", "backward-euler"),
                     default=None)
    sim.add_argument("--out", default=None, help="output CSV path override")
    sim.add_argument("--tol", type=float, default=None,
                     help="Newton tolerance override")
    sim.set_defaults(fn=cmd_simulate)

    comp = commands.add_parser("compose", help="report the interconnected "
                                               "structure at a point")
    comp.add_argument("config")
    comp.add_argument("--point", default=None,
                      help="comma-separated q values, optionally followed by p")
    comp.set_defaults(fn=cmd_compose)

    self_test = commands.add_parser("selftest", help="run the property suites")
    self_test.add_argument("--seed", type=int, default=0)
    self_test.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (cfgmod.ConfigError, UnknownSystemError, BadParameterError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
