"""Command-line front end.

Exit codes: 0 on success or a true verdict, 2 when a certified property is
false, 1 on any operational error (bad input, failed precondition, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext

import numpy as np

from .certify import (OmegaSweep, StorageSpec, check_dissipativity, check_negative_imaginary,
                      check_passivity, check_positive_real, solve_storage)
from .errors import LatnetError
from .modelfile import ModelBundle, canonical_json, export_model, load_model
from .phonon import dispersion, longwave_analysis, phase_velocity_sup
from .simulate import TruncatedNetwork, integrate, phonon_wave_check, pulse, sine
from .spectral import spectral_abscissa
from .stencil import TorusGrid, operator_norm

EXIT_OK, EXIT_ERROR, EXIT_FALSE = 0, 1, 2

PROPERTY_NAMES = ("dissipative", "passive", "positive-real", "negative-imaginary")


class CommandError(LatnetError):
    pass


def _grid(args, nu: int) -> TorusGrid:
    return TorusGrid(nu, args.grid) if args.grid else TorusGrid.default(nu)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _floats(arr) -> list:
    return [float(x) for x in np.asarray(arr).reshape(-1)]


# -- certify --------------------------------------------------------------------

def _storage_for(bundle: ModelBundle, grid: TorusGrid):
    if bundle.storage is None:
        raise CommandError("dissipative certification needs a 'storage' entry in the model file")
    if bundle.storage == "lyapunov":
        return solve_storage(bundle.model, grid=grid).table
    return bundle.storage


def cmd_certify(args) -> int:
    bundle = load_model(args.model)
    model = bundle.model
    grid = _grid(args, model.nu)
    sweep = OmegaSweep.default(omega_max=args.omega_max)
    prop = args.property
    if prop == "dissipative":
        if bundle.supply is None:
            raise CommandError("dissipative certification needs a 'supply' entry")
        report = check_dissipativity(model, _storage_for(bundle, grid), bundle.supply,
                                     grid, args.tol)
    elif prop == "passive":
        if bundle.supply is None:
            raise CommandError("passivity certification needs a 'supply' entry")
        report = check_passivity(model, bundle.supply, grid, sweep, args.tol)
    elif prop == "positive-real":
        report = check_positive_real(model, grid, sweep, args.tol)
    else:
        report = check_negative_imaginary(model, grid, sweep, args.tol)
    _emit(canonical_json(report.to_json()), args.out)
    return EXIT_OK if report.verdict else EXIT_FALSE


# -- dispersion -------------------------------------------------------------------

def cmd_dispersion(args) -> int:
    bundle = load_model(args.model)
    spec = bundle.hamiltonian
    if spec is None:
        raise CommandError("dispersion requires a Hamiltonian preset or (M,K) spec")
    grid = _grid(args, spec.nu)
    surface = dispersion(spec, grid)
    pv = phase_velocity_sup(spec, grid)
    lw = longwave_analysis(spec)
    if args.out:
        surface.write_csv(args.out)
    summary = {
        "grid": grid.to_json(),
        "rows": int(surface.sigmas.shape[0]),
        "branches": int(surface.branches.shape[1]),
        "psd_everywhere": bool(surface.psd_flags.all()),
        "phase_velocity_sup": pv.value,
        "phase_velocity_grid": pv.grid_value,
        "witness_sigma": None if pv.witness_sigma is None else _floats(pv.witness_sigma),
        "hypotheses_met": pv.hypotheses_met,
        "detail": pv.detail,
        "longwave": {
            "speed": lw.longwave_speed,
            "sum_zero_residual": lw.sum_zero_residual,
            "second_moment": lw.second_moment,
            "worst_direction": _floats(lw.worst_direction),
            "gamma": np.asarray(lw.gamma).tolist(),
        },
    }
    sys.stdout.write(canonical_json(summary) + "\n")
    return EXIT_OK


# -- simulate --------------------------------------------------------------------

def _parse_phonon(spec: str, nu: int) -> tuple[list[int], int]:
    try:
        k_part, _, b_part = spec.partition(",")
        k = [int(x) for x in k_part.split("x")]
        branch = int(b_part) if b_part else 0
    except ValueError:
        raise CommandError(f"bad phonon input {spec!r}; expected phonon:K,BRANCH "
                           "with K like '4' or '4x2'")
    if len(k) == 1:
        k = k * nu
    if len(k) != nu:
        raise CommandError(f"phonon wave vector needs {nu} components")
    return k, branch


def cmd_simulate(args) -> int:
    bundle = load_model(args.model)
    model = bundle.model
    storage = bundle.storage if isinstance(bundle.storage, StorageSpec) else None
    supply = bundle.supply if bundle.supply is not None and bundle.supply.degree == 0 else None
    summary: dict = {"L": args.L, "t_end": args.t_end, "dt": args.dt, "input": args.input}
    if args.input.startswith("phonon:"):
        k, branch = _parse_phonon(args.input[len("phonon:"):], model.nu)
        report = phonon_wave_check(model, args.L, k, branch, t_end=args.t_end, dt=args.dt)
        trace = report.trace
        summary.update(phonon_residual=report.residual, omega=report.omega,
                       sigma=_floats(report.sigma), eigen_residual=report.eigen_residual)
    else:
        tn = TruncatedNetwork(model, args.L)
        profile = np.zeros((tn.n_sites, model.m))
        profile[0] = 1.0
        if args.input == "zero":
            signal = None
        elif args.input == "pulse":
            signal = pulse(profile, 0.0, min(1.0, args.t_end) or args.dt)
        elif args.input == "sine":
            signal = sine(profile, 1.0)
        else:
            raise CommandError(f"unknown input {args.input!r}; "
                               "expected zero, pulse, sine or phonon:K,BRANCH")
        x0 = None
        if args.x0 == "random":
            x0 = np.random.default_rng(args.seed).standard_normal(tn.n_sites * model.n)
        trace = integrate(tn, x0, signal, args.t_end, args.dt, storage, supply)
    summary.update(
        samples=len(trace.times),
        x_norm_max=float(trace.x_norm.max()),
        y_norm_max=float(trace.y_norm.max()),
    )
    if supply is not None and not args.input.startswith("phonon:"):
        summary["work_final"] = float(trace.work[-1])
        summary["work_min"] = float(trace.work.min())
    if args.out:
        trace.write_csv(args.out)
    if args.state_dump:
        trace.dump_states(args.state_dump)
    sys.stdout.write(canonical_json(summary) + "\n")
    return EXIT_OK


# -- norms / export ------------------------------------------------------------------

def cmd_norms(args) -> int:
    bundle = load_model(args.model)
    model = bundle.model
    grid = _grid(args, model.nu)
    out = {name: operator_norm(st, grid) for name, st in
           (("a", model.a), ("b", model.b), ("c", model.c), ("d", model.d))}
    out["grid"] = grid.to_json()
    out["stability"] = spectral_abscissa(model, grid).to_json()
    if isinstance(bundle.storage, StorageSpec):
        out["storage"] = operator_norm(bundle.storage.v, grid)
    if bundle.storage == "lyapunov" and out["stability"]["hurwitz"]:
        out["storage_margin"] = solve_storage(model, grid=grid).margin.to_json()
    sys.stdout.write(canonical_json(out) + "\n")
    return EXIT_OK


def cmd_export(args) -> int:
    _emit(canonical_json(export_model(load_model(args.model))), args.out)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=None,
                        help="torus grid points per axis (default 64, or 16 for nu=3)")
    common.add_argument("--tol", type=float, default=None, help="verdict tolerance")
    common.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/OpenMP threads used by numpy")

    parser = argparse.ArgumentParser(prog="latnet",
                                     description="Analysis of translation-invariant lattice networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="certify an energy property")
    p.add_argument("model")
    p.add_argument("--property", required=True, choices=PROPERTY_NAMES)
    p.add_argument("--omega-max", type=float, default=1e3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("dispersion", parents=[common], help="phonon dispersion surface")
    p.add_argument("model")
    p.add_argument("--out", default=None, help="CSV path for the dispersion surface")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("simulate", parents=[common], help="time-domain simulation")
    p.add_argument("model")
    p.add_argument("--L", type=int, default=16, help="period of the truncated lattice")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--input", default="zero", help="zero | pulse | sine | phonon:K,BRANCH")
    p.add_argument("--x0", choices=("zero", "random"), default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="trace CSV path")
    p.add_argument("--state-dump", default=None, help="raw float64 state dump path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("norms", parents=[common], help="operator norms and stability")
    p.add_argument("model")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("export", parents=[common], help="canonical explicit model file")
    p.add_argument("model")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(limits=args.threads)
    else:
        limiter = nullcontext()
    try:
        with limiter:
            return args.func(args)
    except (LatnetError, OSError) as exc:
        print(f"latnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
