"""Command-line interface: ``optwannier {run,study,bands}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import K_CONVENTIONS, POTENTIAL_KINDS, RunConfig, config_from_dict, load_config
from .errors import WannierError
from .pipeline import (
    _atomic_write,
    _csv,
    band_energy_table,
    convergence_study,
    run_pipeline,
    study_table,
    write_study,
)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, multi: bool) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration (flags override it)")
    p.add_argument("--potential", choices=[k for k in POTENTIAL_KINDS if k != "samples"],
                   help="named potential (use --config for samples files)")
    p.add_argument("--value", type=float, help="value of the constant potential")
    p.add_argument("--a", type=float, help="lattice constant (default 2 pi)")
    p.add_argument("--M", type=int, help="Fourier truncation half-width")
    kind = _int_list if multi else int
    p.add_argument("--K", type=kind, help="k-grid size" + (" (comma-separated list)" if multi else ""))
    p.add_argument("--band", type=kind, help="band index, 1-based" + (" (list)" if multi else ""))
    p.add_argument("--k-convention", choices=K_CONVENTIONS, dest="k_convention",
                   help="'paper': K counts grid points (K-1 steps); 'steps': K counts RK4 steps")
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--nx", type=int)
    p.add_argument("--out", type=str, help="output directory")
    p.add_argument("--tol-drift", type=float, dest="tol_drift", help="norm drift before renormalizing")
    p.add_argument("--tol-cond", type=float, dest="tol_cond", help="relative singular-value floor")
    p.add_argument("--tol-gap", type=float, dest="tol_gap", help="relative eigenvalue gap floor")
    p.add_argument("--tol-shift", type=float, dest="tol_shift", help="shift-periodicity rejection level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optwannier", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one band, one K: W0 tables and a run record")
    _common(run, multi=False)

    study = sub.add_parser("study", help="E_RK4 / E_imag table over a list of K and bands")
    _common(study, multi=True)
    study.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    bands = sub.add_parser("bands", help="direct band energies E(k) only")
    _common(bands, multi=True)
    bands.add_argument("--nk", type=int, default=201, help="number of k points")
    return parser


def _config(args) -> RunConfig:
    overrides = {name: getattr(args, name) for name in
                 ("a", "M", "K", "band", "k_convention", "xmin", "xmax", "nx", "out")}
    if args.potential is not None:
        pot = {"kind": args.potential}
        if args.value is not None:
            pot["value"] = args.value
        overrides["potential"] = pot
    tolerances = {"drift": args.tol_drift, "cond": args.tol_cond,
                  "gap": args.tol_gap, "shift": args.tol_shift}
    if args.config is not None:
        return load_config(args.config, tolerances=tolerances, **overrides)
    return config_from_dict({}, tolerances=tolerances, **overrides)


def _cmd_run(args) -> dict:
    cfg = _config(args)
    return run_pipeline(cfg).to_dict()


def _cmd_study(args) -> dict:
    cfg = _config(args)
    study = convergence_study(cfg, jobs=args.jobs)
    if cfg.out is not None:
        write_study(study, cfg.out)
    sys.stdout.write(study_table(study))
    return {"orders": {str(b): o for b, o in study.orders.items()},
            "failures": [r.error for r in study.rows if r.error]}


def _cmd_bands(args) -> dict:
    import numpy as np

    cfg = _config(args)
    table = band_energy_table(cfg, n_k=args.nk)
    rows = np.column_stack([table["k"]] + [table[b] for b in cfg.band])
    text = _csv("direct eigenvalues of the Bloch Hamiltonian", ["k"] + [f"E_{b}" for b in cfg.band], rows)
    if cfg.out is not None:
        _atomic_write(Path(cfg.out) / "bands.csv", text)
    else:
        sys.stdout.write(text)
    return {"bands": list(cfg.band), "nk": int(args.nk)}


COMMANDS = {"run": _cmd_run, "study": _cmd_study, "bands": _cmd_bands}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = COMMANDS[args.command](args)
    except WannierError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    if args.command == "run":
        print(json.dumps(summary, indent=2))
    else:
        print(json.dumps(summary), file=sys.stderr)
    return 0
