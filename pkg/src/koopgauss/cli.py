"""``koopgauss`` command line.

Exit codes: 0 success, 1 a mathematically meaningful negative outcome
(certificate fails, not included, not controllable, ...), 2 malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import koopman, oracles
from . import matrix_core as mc
from .errors import KoopgaussError, NotControllableError, NotHurwitzError, UnsupportedCaseError
from .gaussian_rkhs import Covariance, SpanElement, inclusion_test, product_integral
from .ou_process import LinearSDE, controllability_rank, validate_system
from .report import CERTIFICATE_FAILED, INVALID_INPUT, OK, Report, dumps


class InputError(Exception):
    """Malformed command-line input (exit code 2)."""


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: top-level JSON value must be an object")
    return data


def _field(data: dict, key: str, path: str):
    if key not in data:
        raise InputError(f"{path}: missing key {key!r}")
    return data[key]


def _matrix(value, what: str) -> np.ndarray:
    try:
        return mc.as_matrix(value, what)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{what}: {exc}") from exc


def _system_matrices(path: str) -> tuple[np.ndarray, np.ndarray]:
    data = _load_json(path)
    return _matrix(_field(data, "A", path), "A"), _matrix(_field(data, "B", path), "B")


def _load_system(path: str) -> LinearSDE:
    A, B = _system_matrices(path)
    try:
        return validate_system(A, B)
    except (NotControllableError, NotHurwitzError):
        raise
    except KoopgaussError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_covariance(path: str) -> Covariance:
    data = _load_json(path)
    try:
        return Covariance(_matrix(_field(data, "C", path), "C"))
    except KoopgaussError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_observable(path: str) -> SpanElement:
    """A span element, or a propagated image (re-read as a span over ``C_t``)."""
    data = _load_json(path)
    try:
        if "covariance_t" in data:
            return koopman.KoopmanImage.from_dict(data).as_span()
        for key in ("covariance", "centers", "coeffs"):
            _field(data, key, path)
        return SpanElement.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _vector(text: str) -> np.ndarray:
    text = text.strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(v) for v in text.replace(",", " ").split()]
        arr = np.atleast_1d(np.asarray(vals, dtype=float))
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise InputError(f"cannot parse vector {text!r}")
    return arr


def _check_dim(sys_: LinearSDE, d: int, what: str) -> None:
    if d != sys_.dim:
        raise InputError(f"{what} is {d}-dimensional, system is {sys_.dim}-dimensional")


def _sys_echo(sys_: LinearSDE) -> dict:
    return {"A": sys_.A, "B": sys_.B}


def cmd_validate(args) -> tuple[Report, int]:
    A, B = _system_matrices(args.system)
    inputs = {"A": A, "B": B}
    try:
        sys_ = validate_system(A, B)
    except NotControllableError as exc:
        return Report("validate", inputs, {"controllable": False, "rank": exc.rank, "error": str(exc)}, INVALID_INPUT), 1
    except NotHurwitzError as exc:
        ev = exc.eigenvalue
        out = {"controllable": True, "hurwitz": False, "offending_eigenvalue": [ev.real, ev.imag], "error": str(exc)}
        return Report("validate", inputs, out, INVALID_INPUT), 1
    except KoopgaussError as exc:
        raise InputError(str(exc)) from exc
    S = sys_.sigma_inf
    BBt = sys_.BBt
    resid = np.linalg.norm(sys_.A @ S + S @ sys_.A.T + BBt) / np.linalg.norm(BBt)
    out = {
        "controllable": True,
        "rank": controllability_rank(sys_.A, sys_.B),
        "hurwitz": True,
        "max_real_eigenvalue": float(np.max(np.linalg.eigvals(sys_.A).real)),
        "sigma": S,
        "sigma_residual": float(resid),
    }
    return Report("validate", inputs, out), 0


def cmd_check(args) -> tuple[Report, int]:
    sys_ = _load_system(args.system)
    cov = _load_covariance(args.covariance)
    _check_dim(sys_, cov.dim, "covariance")
    cert = koopman.certificate(sys_, cov)
    inputs = dict(_sys_echo(sys_), C=cov.C)
    out = {"slack": cert.slack, "holds": bool(cert.holds), "matrix": cert.matrix}
    return Report("check", inputs, out, OK if cert.holds else CERTIFICATE_FAILED), 0 if cert.holds else 1


def cmd_propagate(args):
    sys_ = _load_system(args.system)
    f = _load_observable(args.observable)
    _check_dim(sys_, f.cov.dim, "observable")
    img = koopman.propagate(sys_, f, args.time)
    return img.to_dict(), 0


def cmd_norm_bound(args) -> tuple[Report, int]:
    sys_ = _load_system(args.system)
    f = _load_observable(args.observable)
    _check_dim(sys_, f.cov.dim, "observable")
    rep = koopman.norm_bound_report(sys_, f, args.time, allow_unverified=True)
    rep.inputs = dict(_sys_echo(sys_), observable=f.to_dict(), t=args.time)
    ok = rep.status == OK and rep.outputs["chain_holds"] and rep.outputs["prop_bound_holds"]
    return rep, 0 if ok else 1


def cmd_verify_mc(args) -> tuple[Report, int]:
    sys_ = _load_system(args.system)
    f = _load_observable(args.observable)
    x = _vector(args.point)
    _check_dim(sys_, f.cov.dim, "observable")
    _check_dim(sys_, x.size, "point")
    if args.time <= 0 or args.samples < 100:
        raise InputError("verify-mc needs --time > 0 and --samples >= 100")
    closed = koopman.image_eval(koopman.propagate(sys_, f, args.time), x)
    est = oracles.mc_koopman(sys_, f, args.time, x, args.samples, args.seed)
    z = est.z_score(closed)
    out = {
        "closed_form": closed,
        "mc_mean": est.mean,
        "std_error": est.std_error,
        "z_score": z,
        "within_3_se": bool(abs(z) <= 3.0),
    }
    inputs = dict(_sys_echo(sys_), observable=f.to_dict(), t=args.time, point=x, samples=args.samples, seed=args.seed)
    return Report("verify-mc", inputs, out), 0 if abs(z) <= 3.0 else 1


def cmd_semigroup(args) -> tuple[Report, int]:
    sys_ = _load_system(args.system)
    f = _load_observable(args.observable)
    _check_dim(sys_, f.cov.dim, "observable")
    if args.t < 0 or args.s < 0:
        raise InputError("--t and --s must be >= 0")
    rep = koopman.semigroup_check(sys_, f, args.t, args.s)
    rep.inputs = dict(_sys_echo(sys_), observable=f.to_dict(), t=args.t, s=args.s)
    return rep, 0 if rep.outputs["within_tolerance"] else 1


def cmd_max_scale(args) -> tuple[Report, int]:
    A, B = _system_matrices(args.system)
    cov = _load_covariance(args.covariance)
    inputs = {"A": A, "B": B, "C": cov.C}
    if cov.dim != A.shape[0]:
        raise InputError("covariance and system dimensions differ")
    try:
        tau = mc.max_scale_tau(A, B, cov.C)
    except UnsupportedCaseError as exc:
        return Report("max-scale", inputs, {"tau_star": None, "error": str(exc)}, INVALID_INPUT), 1
    except KoopgaussError as exc:
        raise InputError(str(exc)) from exc
    return Report("max-scale", inputs, {"tau_star": tau}), 0


def cmd_inclusion(args) -> tuple[Report, int]:
    c1 = _load_covariance(args.c1)
    c2 = _load_covariance(args.c2)
    if c1.dim != c2.dim:
        raise InputError("c1 and c2 dimensions differ")
    inc = inclusion_test(c1, c2)
    out = {"included": bool(inc.included), "embed_const": inc.embed_const, "slack": inc.slack}
    return Report("inclusion", {"C1": c1.C, "C2": c2.C}, out), 0 if inc.included else 1


def cmd_product_integral(args) -> tuple[Report, int]:
    c1 = _load_covariance(args.c1)
    c2 = _load_covariance(args.c2)
    z, w = _vector(args.z), _vector(args.w)
    if not (c1.dim == c2.dim == z.size == w.size):
        raise InputError("c1, c2, z, w dimensions differ")
    value = product_integral(c1, z, c2, w)
    out = {"value": value, "quadrature": None, "quadrature_order": None, "rel_error": None}
    if c1.dim <= oracles.MAX_QUAD_DIM:
        q, order = oracles.product_integral_quad(c1, z, c2, w)
        out.update(quadrature=q, quadrature_order=order, rel_error=abs(q - value) / value)
    return Report("product-integral", {"C1": c1.C, "z": z, "C2": c2.C, "w": w}, out), 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="koopgauss", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="controllability / Hurwitz check and stationary covariance")
    s.add_argument("--system", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("check", help="invariance certificate for a covariance")
    s.add_argument("--system", required=True)
    s.add_argument("--covariance", required=True)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("propagate", help="closed-form Koopman image of an observable")
    s.add_argument("--system", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--time", type=float, required=True)
    s.set_defaults(func=cmd_propagate)

    s = sub.add_parser("norm-bound", help="norm chain report")
    s.add_argument("--system", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--time", type=float, required=True)
    s.set_defaults(func=cmd_norm_bound)

    s = sub.add_parser("verify-mc", help="closed form vs Monte Carlo at one point")
    s.add_argument("--system", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--time", type=float, required=True)
    s.add_argument("--point", required=True)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify_mc)

    s = sub.add_parser("semigroup", help="two-step vs one-step propagation")
    s.add_argument("--system", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--s", type=float, required=True)
    s.set_defaults(func=cmd_semigroup)

    s = sub.add_parser("max-scale", help="largest admissible scaling of a covariance")
    s.add_argument("--system", required=True)
    s.add_argument("--covariance", required=True)
    s.set_defaults(func=cmd_max_scale)

    s = sub.add_parser("inclusion", help="RKHS inclusion H_C1 in H_C2")
    s.add_argument("--c1", required=True)
    s.add_argument("--c2", required=True)
    s.set_defaults(func=cmd_inclusion)

    s = sub.add_parser("product-integral", help="closed-form kernel product integral with quadrature check")
    s.add_argument("--c1", required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--c2", required=True)
    s.add_argument("--w", required=True)
    s.set_defaults(func=cmd_product_integral)
    return p


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        payload, code = args.func(args)
    except InputError as exc:
        payload, code = Report(args.command, {}, {"error": str(exc)}, INVALID_INPUT), 2
    except (NotControllableError, NotHurwitzError) as exc:
        payload, code = Report(args.command, {}, {"error": str(exc)}, INVALID_INPUT), 1
    except KoopgaussError as exc:
        # remaining library errors are domain violations in the arguments
        payload, code = Report(args.command, {}, {"error": str(exc)}, INVALID_INPUT), 2
    text = payload.to_json() if isinstance(payload, Report) else dumps(payload)
    out.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
