"""Command line entry point: ``emest {generate,estimate,sweep,score,selftest}``.

Exit codes: 0 success, 2 malformed config, 3 infeasible N, 4 numerical
failure, 5 dataset without truth trailer.  Failures print a JSON object
``{"error": {...}}`` on stdout.
"""

import argparse
import json
import sys

import numpy as np

from . import checks, harness
from .errors import EmestError
from .io import write_dataset
from .model import AdversarySpec, ModelParams, generate_dataset


def _error_doc(exc):
    err = {"code": exc.exit_code, "kind": exc.kind, "message": str(exc)}
    if getattr(exc, "field", None):
        err["field"] = exc.field
    if getattr(exc, "min_samples", None):
        err["min_samples"] = exc.min_samples
    return {"error": err}


def cmd_generate(args):
    mean = None
    if args.mean:
        mean = np.array([float(v) for v in args.mean.split(",")])
    params = ModelParams(args.dim, args.n, args.alpha, mean)
    adversary = AdversarySpec.parse(args.adversary, args.inlier_rule)
    data = generate_dataset(params, adversary, args.seed)
    write_dataset(args.out, data, include_truth=not args.no_truth)
    return 0


def cmd_estimate(args):
    try:
        doc, out_path = harness.run_single(args.config, args.seed)
    except np.linalg.LinAlgError as exc:
        print(json.dumps({"error": {"code": 4, "kind": "numerical", "message": str(exc)}}))
        return 4
    text = json.dumps(doc, indent=2)
    print(text)
    out_path = args.out or out_path
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def cmd_sweep(args):
    path = harness.run_sweep(args.config, args.out, args.workers)
    print(path)
    return 0


def cmd_score(args):
    err = harness.score(args.estimate, args.data)
    print(f"{err:#.12g}")
    return 0


def cmd_selftest(args):
    failed = 0
    for name, (ok, detail) in checks.run_all().items():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="emest", description="Entangled mean estimation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a dataset from the subset-of-signals model")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--adversary", default="identity",
                   help="identity | isotropic:<s2> | lowrank:<rank>:<s2> | embed1d:<axis>:<s2>")
    g.add_argument("--inlier-rule", default="identity", choices=["identity", "uniform"])
    g.add_argument("--mean", help="comma-separated true mean (default: zeros)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--no-truth", action="store_true", help="omit the '# truth' trailer")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="run one estimation from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", help="benchmark sweep from a JSON config, writes CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--workers", type=int, help="overrides EMEST_THREADS")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("score", help="l2 error of an estimate against a dataset's truth")
    c.add_argument("--estimate", required=True)
    c.add_argument("--data", required=True)
    c.set_defaults(func=cmd_score)

    t = sub.add_parser("selftest", help="run the deterministic invariant checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmestError as exc:
        print(json.dumps(_error_doc(exc)))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
