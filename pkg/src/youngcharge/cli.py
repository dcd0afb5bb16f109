"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bvalpha, charge, fbm, forms, young
from .charge import ChargeFormatError, GridCharge
from .expr import ExpressionError, parse_expression
from .field import SampledField
from .generators import random_holder_charge

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4


class NumericalFailure(RuntimeError):
    pass


# input helpers ----------------------------------------------------------------


def load_field(source: str, d: int, M: int, beta: float) -> SampledField:
    """Field from an expression or from ``file:<path>`` holding raw cell averages."""
    if source.startswith("file:"):
        path = Path(source[5:])
        data = np.load(path) if path.suffix == ".npy" else np.loadtxt(path)
        data = np.asarray(data, dtype=float).reshape(-1)
        n = charge.leaves_depth(data.size, d)
        grid = data.reshape((1 << n,) * d)
        return SampledField(grid, beta)
    return SampledField.from_function(parse_expression(source, d), d, M, beta)


def load_charge(source: str, d: int, N: int, gamma: float, seed: int, M: int) -> GridCharge:
    """Charge from a file path or one of: lebesgue, random, density:<expr>."""
    if source == "lebesgue":
        return GridCharge.lebesgue(d, N)
    if source == "random":
        return random_holder_charge(d, N, gamma, np.random.default_rng(seed))
    if source.startswith("density:"):
        g = SampledField.from_function(parse_expression(source[8:], d), d, max(M, N))
        return charge.density_charge(g, N)
    return charge.read_charge(source)


def _validate(args):
    if getattr(args, "d", None) is not None and not 1 <= args.d <= 6:
        raise ValueError(f"--d must be in 1..6, got {args.d}")
    for name in ("depth", "resolution"):
        v = getattr(args, name, None)
        if v is not None and v < 0:
            raise ValueError(f"--{name} must be non-negative")
    if getattr(args, "beta", None) is not None and not 0 < args.beta <= 1:
        raise ValueError("--beta must be in (0, 1]")
    if getattr(args, "threads", 1) < 1:
        raise ValueError("--threads must be >= 1")
    if getattr(args, "trials", None) is not None and args.trials < 1:
        raise ValueError("--trials must be >= 1")


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NumericalFailure("non-finite result")


# subcommands ------------------------------------------------------------------


def cmd_analyze(args):
    omega = load_charge(args.charge, args.d, args.depth, args.gamma, args.seed, args.resolution)
    c = charge.analyze(omega)
    _finite(c.mass, *c.a)
    if args.coeffs:
        Path(args.coeffs).write_text(json.dumps(charge.coeffs_to_dict(c)) + "\n")
    report = {
        "config": _config(args),
        "d": c.d,
        "depth": c.depth,
        "mass": c.mass,
        "decayProfile": c.profile(args.gamma).tolist(),
        "decayConstant": c.decay_constant(args.gamma),
        "holderProfile": charge.holder_profile(omega, args.gamma).tolist(),
    }
    _emit(_json(report), args.out)


def cmd_synth(args):
    obj = json.loads(Path(args.coeffs).read_text())
    c = charge.coeffs_from_dict(obj)
    omega = charge.synthesize(c, args.gamma)
    _finite(omega.leaves)
    charge.write_charge(args.charge_out, omega, {"command": "synth", "source": str(args.coeffs)})
    _emit(_json({"config": _config(args), "mass": omega.mass, "leaves": int(omega.leaves.size)}), args.out)


def _field_and_charge(args):
    omega = load_charge(args.charge, args.d, args.depth, args.gamma, args.seed, args.resolution)
    M = max(args.resolution, omega.depth)
    f = load_field(args.field, omega.d, M, args.beta)
    return f, omega


def cmd_integrate(args):
    f, omega = _field_and_charge(args)
    res = young.young_integral(f, omega, args.gamma)
    table = young.riemann_table(f, omega, res.value, tag=args.tag)
    _finite(res.value)
    report = {"config": _config(args), **res.to_dict()}
    report["riemannTable"] = [list(r) for r in table]
    _emit(_json(report), args.out)


def cmd_indefinite(args):
    f, omega = _field_and_charge(args)
    theta = young.indefinite(f, omega, args.gamma, args.tag)
    _finite(theta.leaves)
    charge.write_charge(args.charge_out, theta, {"command": "indefinite", "field": args.field,
                                                 "charge": args.charge, "tag": args.tag})
    report = {"config": _config(args), "mass": theta.mass,
              "gapConstant": theta.meta["gap_constant"], "tailBound": theta.meta["tail_bound"]}
    _emit(_json(report), args.out)


def cmd_wedge(args):
    d = len(args.components)
    betas = args.betas or [args.beta] * d
    if len(betas) != d:
        raise ValueError("need one exponent per component")
    comps = [SampledField.from_function(parse_expression(e, d), d, args.resolution, b)
             for e, b in zip(args.components, betas)]
    g = forms.FunctionTuple(tuple(comps))
    omega = forms.wedge_charge(g, args.depth)
    _finite(omega.leaves)
    diag = {
        "command": "wedge",
        "components": list(args.components),
        "holderProfile": charge.holder_profile(omega, g.gamma).tolist(),
        "faceTailBound": omega.meta["face_tail_bound"],
    }
    if args.compare_jacobian:
        jac = forms.jacobian_density_charge(g, args.depth)
        diag["jacobianMaxLeafDiff"] = float(np.abs(jac.leaves - omega.leaves).max())
    charge.write_charge(args.charge_out, omega, diag)
    _emit(_json({"config": _config(args), "mass": omega.mass, **diag}), args.out)


def _parse_hurst(text: str) -> fbm.HurstVector:
    try:
        return fbm.HurstVector(tuple(float(t) for t in text.split(",")))
    except ValueError as exc:
        raise ValueError(f"bad Hurst vector {text!r}: {exc}") from exc


def _default_probes(d: int) -> list:
    half, quarter = (0.0, 0.5), (0.0, 0.25)
    probes = [[(0.0, 1.0)] * d, [half] * d, [quarter] + [half] * (d - 1),
              [(0.5, 1.0)] * d, [(0.25, 0.5)] + [(0.5, 0.75)] * (d - 1)]
    return probes


def cmd_fbm(args):
    H = _parse_hurst(args.hurst)
    args.d = H.d
    if not H.chargeable:
        print(f"warning: mean Hurst index {H.mean:g} <= {(H.d - 1) / H.d:g}; "
              "increments are not expected to form a Hölder charge", file=sys.stderr)
    gamma = args.gamma if args.gamma is not None else max((H.d - 1) / H.d + 1e-3, H.mean - 0.05)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    N = args.depth
    first = fbm.sample_sheet(H, N, args.seed, 0)
    if first.jitter:
        print(f"note: Cholesky needed diagonal jitter {first.jitter:g}", file=sys.stderr)
    with open(outdir / "sheet.npy", "wb") as fh:
        np.save(fh, np.ascontiguousarray(first.W))
    charge.write_charge(outdir / "increments.hchg", fbm.increment_charge(first),
                        {"command": "fbm", "hurst": list(H.H), "seed": args.seed, "trial": 0,
                         "jitter": first.jitter})
    rows = fbm.trial_rows(H, N, args.seed, args.trials, gamma)
    header = ["seed", "trial", "generation", "max_scaled_increment", "mean_square_ratio"]
    (outdir / "trials.csv").write_text(_csv(header, [[r[h] for h in header] for r in rows]))
    probes = _default_probes(H.d)
    vrows = []
    sheets = [fbm.sample_sheet(H, N, args.seed, t) for t in range(args.trials)]
    for box in probes:
        vals = np.array([fbm.box_increment(s, box) for s in sheets])
        rep = fbm.variance_report(vals, fbm.increment_variance(H, box))
        vrows.append([json.dumps(box), rep.empirical, rep.target, rep.z, rep.trials])
    (outdir / "variance.csv").write_text(
        _csv(["box", "empirical", "target", "z", "trials"], vrows))
    summary = {"config": _config(args), "gamma": gamma, "chargeable": H.chargeable,
               "jitter": first.jitter, "maxAbsZ": max(abs(r[3]) for r in vrows)}
    _emit(_json(summary), args.out)


def cmd_bracket(args):
    f, omega = _field_and_charge(args)
    c = bvalpha.analyze_f(f, args.gamma, omega.depth)
    br = bvalpha.duality_bracket(c, charge.analyze(omega))
    res = young.young_integral(f, omega, args.gamma)
    _finite(br.value, res.value)
    report = {"config": _config(args), "bracket": br.value, "bracketBound": br.bound,
              "young": res.to_dict(), "bvAlpha": bvalpha.report(c)}
    _emit(_json(report), args.out)


def cmd_convergence(args):
    f, omega = _field_and_charge(args)
    res = young.young_integral(f, omega, args.gamma)
    table = young.riemann_table(f, omega, res.value, tag=args.tag)
    predicted = f.beta + f.d * args.gamma - f.d
    fit_rows = [(m, e) for m, _, e in table if 1 <= m <= omega.depth - 2 and e > 0]
    rate = young.fit_rate(*zip(*fit_rows)) if len(fit_rows) >= 2 else None
    if args.format == "csv":
        _emit(_csv(["generation", "riemann_sum", "abs_error"], table), args.out)
        return
    _emit(_json({"config": _config(args), "reference": res.value,
                 "truncationBound": res.truncation_bound, "riemannTable": [list(r) for r in table],
                 "fittedRate": rate, "predictedRate": predicted}), args.out)


# parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="youngcharge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, field=True, charge_in=True):
        sp.add_argument("--d", type=int, default=2, help="dimension")
        sp.add_argument("--depth", "-N", type=int, default=6, help="charge depth N")
        sp.add_argument("--resolution", "-M", type=int, default=8, help="field resolution M")
        sp.add_argument("--gamma", type=float, default=0.95, help="charge Hölder exponent")
        sp.add_argument("--beta", type=float, default=1.0, help="field Hölder exponent")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1, help="upper bound on worker threads")
        sp.add_argument("--out", help="report path (default stdout)")
        if field:
            sp.add_argument("--field", default="1", help="expression or file:<cell averages>")
            sp.add_argument("--tag", choices=("corner", "center", "average"), default="corner")
        if charge_in:
            sp.add_argument("--charge", default="lebesgue",
                            help="charge file, lebesgue, random or density:<expr>")

    sp = sub.add_parser("analyze", help="Haar coefficients of a charge")
    common(sp, field=False)
    sp.add_argument("--coeffs", help="write coefficients JSON here")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("synth", help="charge file from a coefficients JSON")
    common(sp, field=False, charge_in=False)
    sp.add_argument("--coeffs", required=True)
    sp.add_argument("--charge-out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("integrate", help="Young integral over the unit cube")
    common(sp)
    sp.set_defaults(func=cmd_integrate)

    sp = sub.add_parser("indefinite", help="indefinite integral as a charge file")
    common(sp)
    sp.add_argument("--charge-out", required=True)
    sp.set_defaults(func=cmd_indefinite)

    sp = sub.add_parser("wedge", help="charge dg_1 ^ ... ^ dg_d")
    common(sp, field=False, charge_in=False)
    sp.add_argument("--components", nargs="+", required=True, help="one expression per component")
    sp.add_argument("--betas", type=float, nargs="+", help="per-component exponents")
    sp.add_argument("--charge-out", required=True)
    sp.add_argument("--compare-jacobian", action="store_true")
    sp.set_defaults(func=cmd_wedge)

    sp = sub.add_parser("fbm", help="fractional Brownian sheet samples and statistics")
    common(sp, field=False, charge_in=False)
    sp.set_defaults(gamma=None, depth=4)
    sp.add_argument("--hurst", required=True, help="comma separated, e.g. 0.7,0.8")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_fbm)

    sp = sub.add_parser("bracket", help="duality bracket against the Young integral")
    common(sp)
    sp.set_defaults(func=cmd_bracket)

    sp = sub.add_parser("convergence", help="Riemann-sum convergence table")
    common(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_convergence)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        _validate(args)
        args.func(args)
    except (ChargeFormatError, ExpressionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
