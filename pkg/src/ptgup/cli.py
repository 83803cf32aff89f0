"""Command-line interface.

Exit codes: 0 success, 1 verification check failed, 2 usage, 3 domain error
(degeneracy or no normal modes), 4 numerical failure, 5 resource guard.
Documents go to standard output (or ``--out``); diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import __version__
from .errors import (AsymmetricGrid, ConvergenceFailure, CutoffTooSmall, DegeneracyError,
                     ModesUnavailable, PTGupError, ResourceGuard, TrackingAmbiguous,
                     ZeroFrequency)
from .model import (ModelParams, StateIndex, classify_phase, derive_modes, energy,
                    states_up_to)
from .oracle import DEFAULT_CUTOFF, MAX_ROWS
from .perturbation import (correction_coefficients, delta_energy, evaluate_wavefunction,
                           pt_eigenvalue, symmetric_grid, wavefunction_correction)
from .verify import DEFAULT_BETAS, DEFAULT_LAMBDAS, FAULTS, run_verification

log = logging.getLogger("ptgup")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_RESOURCE = 0, 1, 2, 3, 4, 5

SWEEP_HEADER = ["lambda", "phase", "c1_re", "c1_im", "c2_re", "c2_im",
                "E00_re", "E00_im", "dE00_re", "dE00_im"]


class UsageError(Exception):
    pass


def _num(x) -> str:
    """Round-trip safe, locale-independent CSV number."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _split(z):
    if z is None:
        return None, None
    z = complex(z)
    return z.real, z.imag


def _state_arg(text: str) -> StateIndex:
    try:
        n1, n2 = (int(v) for v in text.split(","))
        return StateIndex(n1, n2)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'n1,n2' with n >= 0, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _params(args) -> ModelParams:
    try:
        return ModelParams(m=args.m, wx=args.wx, wy=args.wy, lam=args.lam, beta=args.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _header(params, modes) -> dict:
    return {"params": params.as_dict(), "phase": modes.phase.value,
            "lambda_crit": modes.lambda_crit}


def _states(args) -> list[StateIndex]:
    if args.state:
        return list(args.state)
    if args.nmax < 0:
        raise UsageError("--nmax must be >= 0")
    return states_up_to(args.nmax)


def cmd_spectrum(args):
    params = _params(args)
    modes = derive_modes(params).require()
    rows = []
    for s in _states(args):
        e_re, e_im = _split(energy(modes, s))
        d_re, d_im = _split(delta_energy(modes, s, params))
        rows.append({"n1": s.n1, "n2": s.n2, "E_re": e_re, "E_im": e_im,
                     "dE_re": d_re, "dE_im": d_im})
    if args.format == "csv":
        return _csv(["n1", "n2", "E_re", "E_im", "dE_re", "dE_im"],
                    [[r["n1"], r["n2"], _num(r["E_re"]), _num(r["E_im"]),
                      _num(r["dE_re"]), _num(r["dE_im"])] for r in rows]), EXIT_OK
    return _json({**_header(params, modes), "states": rows}), EXIT_OK


def sweep_rows(params: ModelParams, lambdas) -> list[list]:
    rows = []
    for lam in lambdas:
        p = params.replace(lam=float(lam))
        modes = derive_modes(p)
        if modes.available:
            e00 = energy(modes, StateIndex(0, 0))
            de00 = delta_energy(modes, StateIndex(0, 0), p)
            values = [*_split(modes.c1), *_split(modes.c2), *_split(e00), *_split(de00)]
        else:
            values = [None] * 8
        rows.append([float(lam), modes.phase.value, *values])
    return rows


def cmd_sweep(args):
    params = _params(args)
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    if not args.lambda_min < args.lambda_max:
        raise UsageError("--lambda-min must be smaller than --lambda-max")
    lambdas = np.linspace(args.lambda_min, args.lambda_max, args.steps)
    rows = sweep_rows(params, lambdas)
    if args.format == "json":
        return _json({"params": params.as_dict(),
                      "rows": [dict(zip(SWEEP_HEADER, r)) for r in rows]}), EXIT_OK
    return _csv(SWEEP_HEADER, [[_num(r[0]), r[1], *map(_num, r[2:])] for r in rows]), EXIT_OK


def cmd_correction(args):
    if args.format != "json":
        raise UsageError("correction reports are emitted as json only")
    params = _params(args)
    modes = derive_modes(params).require()
    reports = []
    for s in _states(args):
        rep = wavefunction_correction(modes, s, params)
        reports.append({
            "n1": s.n1, "n2": s.n2,
            "dE_re": rep.delta_E.real, "dE_im": rep.delta_E.imag,
            "pt_preserved": rep.pt_preserved,
            "matrix_elements": [{"m1": m.n1, "m2": m.n2, "re": v.real, "im": v.imag}
                                for m, v in sorted(rep.matrix_elements.items())],
            "M_coefficients": [{"m1": m.n1, "m2": m.n2, "re": v.real, "im": v.imag}
                               for m, v in sorted(rep.M_coefficients.items())],
        })
    return _json({**_header(params, modes), "reports": reports}), EXIT_OK


def cmd_wavefunction(args):
    if args.format != "json":
        raise UsageError("wavefunction samples are emitted as json only")
    params = _params(args)
    modes = derive_modes(params).require()
    state = args.state[0] if args.state else StateIndex(0, 0)
    if args.grid_points < 3:
        raise UsageError("--grid-points must be >= 3")
    xs, ys = symmetric_grid(modes, args.grid_points, args.extent)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    coeffs = correction_coefficients(modes, state, params)
    psi = evaluate_wavefunction(modes, state, gx, gy, params)
    full = evaluate_wavefunction(modes, state, gx, gy, params, True, coeffs)

    def pt_fields(samples):
        out = {}
        for axis in ("x", "y"):
            eta, dev = pt_eigenvalue(samples, xs, ys, axis)
            out[axis] = {"re": eta.real, "im": eta.imag, "max_dev": dev}
        return out

    doc = {**_header(params, modes), "state": {"n1": state.n1, "n2": state.n2},
           "grid": {"x": xs.tolist(), "y": ys.tolist(), "layout": "psi[i][j] = psi(x[i], y[j])"},
           "psi_re": psi.real.tolist(), "psi_im": psi.imag.tolist(),
           "corrected_re": full.real.tolist(), "corrected_im": full.imag.tolist(),
           "pt_eigenvalue": pt_fields(psi), "corrected_pt_eigenvalue": pt_fields(full)}
    return _json(doc), EXIT_OK


def cmd_verify(args):
    base = _params(args)
    lambdas = [args.lam] if args.lam_given else args.lambdas
    betas = [args.beta] if args.beta_given else args.betas
    checks = run_verification(base, lambdas, betas, cutoff=args.cutoff, nmax=args.nmax,
                              seed=args.seed, faults=args.inject_fault or (),
                              max_rows=args.max_rows)
    for c in checks:
        if not c.passed:
            log.warning("check %s failed: max_dev=%s tolerance=%s %s",
                        c.name, c.max_dev, c.tolerance, c.message)
    all_pass = all(c.passed for c in checks)
    code = EXIT_OK if all_pass else EXIT_CHECK_FAILED
    if args.format == "csv":
        return _csv(["name", "pass", "max_dev", "tolerance", "message"],
                    [[c.name, str(c.passed).lower(), _num(c.max_dev), _num(c.tolerance), c.message]
                     for c in checks]), code
    return _json({"checks": [c.as_dict() for c in checks], "all_pass": all_pass}), code


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


class _Given(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        setattr(namespace, f"{self.dest}_given", True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--m", type=float, default=1.0, help="mass (default 1)")
    g.add_argument("--wx", type=float, default=1.0, help="x frequency (default 1)")
    g.add_argument("--wy", type=float, default=2.0, help="y frequency (default 2)")
    g.add_argument("--lambda", dest="lam", type=float, default=0.0, action=_Given,
                   help="imaginary coupling strength (default 0)")
    g.add_argument("--beta", type=float, default=0.0, action=_Given,
                   help="minimal-length deformation (default 0)")
    common.add_argument("--nmax", type=int, default=4, help="include states with n1 + n2 <= NMAX")
    common.add_argument("--state", type=_state_arg, action="append",
                        help="explicit state 'n1,n2' (repeatable)")
    common.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF,
                        help="oracle basis states per mode (default 30)")
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--out", metavar="PATH", help="write the document here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
    common.add_argument("-v", "--verbose", action="store_true")
    common.set_defaults(lam_given=False, beta_given=False)

    parser = argparse.ArgumentParser(prog="ptgup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="exact energies and first-order shifts")
    p.set_defaults(func=cmd_spectrum, default_format="json")

    p = sub.add_parser("sweep", parents=[common], help="phase and E00 along a lambda sweep")
    p.add_argument("--lambda-min", type=float, default=0.0)
    p.add_argument("--lambda-max", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=61)
    p.set_defaults(func=cmd_sweep, default_format="csv")

    p = sub.add_parser("verify", parents=[common], help="run oracle cross-checks")
    p.add_argument("--lambdas", type=_float_list, default=list(DEFAULT_LAMBDAS),
                   help="comma-separated couplings (ignored when --lambda is given)")
    p.add_argument("--betas", type=_float_list, default=list(DEFAULT_BETAS),
                   help="comma-separated deformations (ignored when --beta is given)")
    p.add_argument("--max-rows", type=int, default=MAX_ROWS, help="resource guard on matrix rows")
    p.add_argument("--inject-fault", action="append", choices=FAULTS,
                   help="test hook: re-introduce a known misprint to show the checks catch it")
    p.set_defaults(func=cmd_verify, default_format="json")

    p = sub.add_parser("wavefunction", parents=[common], help="sample psi and psi + dpsi on a grid")
    p.add_argument("--grid-points", type=int, default=41)
    p.add_argument("--extent", type=float, default=None, help="half-width of the square grid")
    p.set_defaults(func=cmd_wavefunction, default_format="json")

    p = sub.add_parser("correction", parents=[common], help="per-state first-order correction report")
    p.set_defaults(func=cmd_correction, default_format="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.format is None:
        args.format = args.default_format
    try:
        document, code = args.func(args)
    except (UsageError, CutoffTooSmall, ZeroFrequency, AsymmetricGrid) as exc:
        parser.error(str(exc))  # exits with status 2
    except (DegeneracyError, ModesUnavailable) as exc:
        print(f"ptgup: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ResourceGuard as exc:
        print(f"ptgup: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConvergenceFailure, TrackingAmbiguous) as exc:
        print(f"ptgup: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PTGupError as exc:
        print(f"ptgup: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(document)
    else:
        sys.stdout.write(document)
    return code


if __name__ == "__main__":
    sys.exit(main())
