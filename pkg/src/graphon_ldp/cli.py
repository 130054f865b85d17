"""Command line interface.

Exit codes: 0 success, 2 validation error, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .cutnorm import cut_distance, cut_norm, difference
from .errors import NumericError, ValidationError
from .experiments import EXPERIMENTS, ExperimentSpec, run_experiment
from .graphon import StepGraphon, parse_graphon, project_to_step
from .ldp import brute_force_ldp, first_order_expansion, monte_carlo_ldp, rate_upsilon, solve_tilt, verify_order
from .sampler import SampleConfig, lift, sample
from .spectral import (closed_form_spectrum, decompose_kernel, decompose_laplacian, project_interval,
                       to_spectral_measure, vague_diagnostic)


def _emit(text, path=None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _float(x):
    return None if x is None or math.isinf(x) or math.isnan(x) else float(x)


def _step(text, n=None):
    W = parse_graphon(text)
    if isinstance(W, StepGraphon) and n is None:
        return W
    if n is None:
        raise ValidationError(f"'{text}' is a closed form; pass --n to discretize it")
    return project_to_step(W, n)


def _graphon_record(W):
    if isinstance(W, StepGraphon):
        return {"n": W.n, "values": W.values.ravel().tolist()}
    return {"spec": W.spec()}


def _parse_intervals(text):
    out = []
    for part in filter(None, text.split(";")):
        a, _, b = part.partition(",")
        try:
            out.append((float(a), float(b)))
        except ValueError as exc:
            raise ValidationError(f"bad interval '{part}'") from exc
    if not out:
        raise ValidationError("no intervals given")
    return out


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad number list '{text}'") from exc


def cmd_sample(args):
    A = sample(parse_graphon(args.graphon), SampleConfig(args.seed, args.n))
    _emit(A.to_edge_list() if args.format == "edges" else A.to_csv(), args.out)


def _spectrum(args):
    W = parse_graphon(args.graphon)
    if args.closed_form:
        return closed_form_spectrum(W, args.operator, k_max=args.k, n=args.n)
    if args.seed is not None:
        if args.n is None:
            raise ValidationError("--seed needs --n")
        G = lift(sample(W, SampleConfig(args.seed, args.n)))
    else:
        G = _step(args.graphon, args.n)
    return decompose_laplacian(G) if args.operator == "laplacian" else decompose_kernel(G)


def cmd_spectrum(args):
    d = _spectrum(args)
    lines = ["j,lambda\n"]
    for j in list(range(1, args.k + 1)) + list(range(-1, -args.k - 1, -1)):
        lines.append(f"{j},{d.eigenvalue(j)!r}\n")
    _emit("".join(lines), args.out)


def cmd_measure(args):
    intervals = _parse_intervals(args.intervals)
    W = parse_graphon(args.graphon)
    G = lift(sample(W, SampleConfig(args.seed, args.n))) if args.seed is not None else _step(args.graphon, args.n)
    P = to_spectral_measure(decompose_kernel(G))
    if args.against:
        ref = to_spectral_measure(decompose_kernel(_step(args.against, args.against_n or args.n)))
        reports = [vars(r) for r in vague_diagnostic(P, ref, intervals)]
    else:
        reports = [{"a": a, "b": b, "rank": project_interval(P, a, b).rank} for a, b in intervals]
    _emit(_json({"atoms": [{"eigenvalue": a.eigenvalue, "multiplicity": a.multiplicity} for a in P.atoms],
                 "intervals": reports}))


def cmd_cutnorm(args):
    A = _step(args.a)
    B = _step(args.b) if args.b else StepGraphon(np.zeros((A.n, A.n)))
    cert = cut_norm(difference(A, B), args.mode, restarts=args.restarts, seed=args.seed)
    _emit(_json({"value": cert.value, "f": cert.f_signs.astype(int), "g": cert.g_signs.astype(int),
                 "exact": args.mode == "exact"}))


def cmd_cutdist(args):
    res = cut_distance(_step(args.a), _step(args.b), args.mode, restarts=args.restarts, seed=args.seed)
    _emit(_json({"value": res.value, "sigma": res.sigma.cycles(), "exact": res.exact}))


def _maybe_step(text, n):
    W = parse_graphon(text)
    return project_to_step(W, n) if n is not None else W


def cmd_rate(args):
    r = rate_upsilon(_maybe_step(args.v, args.n), _maybe_step(args.w, args.n))
    _emit(_json(r.as_dict()))


def cmd_tilt(args):
    W = _maybe_step(args.w, args.n)
    sol = solve_tilt(W, args.delta)
    out = {"xi": sol.xi, "delta": sol.delta, "target": sol.target, "residual": sol.residual,
           "rate": sol.rate.as_dict(), "w_star": _graphon_record(sol.w_star)}
    if args.expansion:
        exp = first_order_expansion(W, args.delta)
        out["expansion"] = {"first_order": exp.first_order, "denominator": exp.denominator,
                            "alpha_coefficient": exp.alpha_coefficient, "alpha_leading": exp.alpha_leading}
    if args.verify_order:
        res = verify_order(W, _parse_floats(args.verify_order))
        out["verify_order"] = {"slope": res.slope, "exact": res.exact, "deltas": res.deltas, "errors": res.errors}
    _emit(_json(out))


def cmd_bruteldp(args):
    W = parse_graphon(args.w)
    res = brute_force_ldp(W, args.n, args.delta)
    out = {"n": res.n, "delta": res.delta, "min_edges": res.min_edges, "probability": res.probability,
           "ldp_estimate": _float(res.ldp_estimate), "rate": res.rate.as_dict(), "impossible": res.impossible}
    if args.mc:
        est, se = monte_carlo_ldp(W, args.n, args.delta, args.mc, args.seed)
        out["monte_carlo"] = {"samples": args.mc, "seed": args.seed, "probability": est, "stderr": se}
    _emit(_json(out))


def cmd_experiment(args):
    overrides = {"out": args.out}
    if args.config:
        with open(args.config) as fh:
            spec = ExperimentSpec.from_json(fh.read(), name=args.name, **overrides)
    else:
        raise ValidationError("--config is required")
    rows = run_experiment(spec)
    _emit(f"{len(rows)} rows written to {spec.out}\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="graphon-ldp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a W-random graph")
    p.add_argument("--graphon", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "edges"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", help="kernel or Laplacian eigenvalues as CSV rows (j, lambda)")
    p.add_argument("--graphon", required=True)
    p.add_argument("--operator", choices=("kernel", "laplacian"), default="kernel")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, help="sample a W-random graph first")
    p.add_argument("--closed-form", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("measure", help="interval projection ranks and distances")
    p.add_argument("--graphon", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--intervals", required=True, help="a1,b1;a2,b2")
    p.add_argument("--against", help="reference graphon")
    p.add_argument("--against-n", type=int)
    p.set_defaults(func=cmd_measure)

    for name, func in (("cutnorm", cmd_cutnorm), ("cutdist", cmd_cutdist)):
        p = sub.add_parser(name)
        p.add_argument("--a", required=True)
        p.add_argument("--b", required=name == "cutdist")
        p.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
        p.add_argument("--restarts", type=int, default=32)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)

    p = sub.add_parser("rate", help="relative-entropy rate Upsilon(V, W)")
    p.add_argument("--v", required=True)
    p.add_argument("--w", required=True)
    p.add_argument("--n", type=int, help="discretize both graphons first")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("tilt", help="edge-count conditioned minimizer")
    p.add_argument("--w", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, help="discretize the graphon first")
    p.add_argument("--expansion", action="store_true")
    p.add_argument("--verify-order", metavar="D1,D2,D3")
    p.set_defaults(func=cmd_tilt)

    p = sub.add_parser("bruteldp", help="exact tail probability by enumeration")
    p.add_argument("--w", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo samples")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_bruteldp)

    p = sub.add_parser("experiment", help="run an experiment from a JSON config")
    p.add_argument("--name", choices=EXPERIMENTS)
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
