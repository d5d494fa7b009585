"""Command-line interface: ``anchorseek {generate,solve,baseline,bench,index}``.

Exit codes: 0 success, 1 solver failure, 2 usage or I/O error.
"""

import argparse
import csv
import datetime as _dt
import io as _io
import json
import logging
import math
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, baselines, datagen
from .fas import FasConfig, fas_run, l1_normalize_view
from .fkv import fkv_sketch, fkv_sketch_left, sample_size
from .io import FormatError, read_matrix
from .kernels import BACKEND
from .sample_model import SampledMatrix

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _versions():
    import numba
    import scipy

    return {"anchorseek": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version(),
            "backend": BACKEND}


def manifest(args, started, config=None):
    return {"subcommand": args.command, "argv": sys.argv[1:],
            "input": getattr(args, "input", None), "output": getattr(args, "output", None),
            "config": config, "seed": getattr(args, "seed", None), "versions": _versions(),
            "started": started, "finished": _now()}


def _emit(text, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _write_manifest(man, output):
    if output:
        Path(str(output) + ".manifest.json").write_text(json.dumps(man, indent=1) + "\n")


def _load(path):
    if path is None:
        raise UsageError("an input matrix is required (-i/--input)")
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    try:
        return read_matrix(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}")
    except (FormatError, OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}")


def _fas_config(args):
    return FasConfig(k=args.rank, kappa=args.kappa, delta=args.delta, s=args.projections,
                     N=args.votes, epsilon=args.epsilon, zeta=args.zeta,
                     coverage_alpha=args.coverage_alpha, c_zeta=args.c_zeta,
                     sketch_rows=args.sketch_rows, sketch_cols=args.sketch_cols,
                     seed=args.seed)


def cmd_generate(args):
    started = _now()
    if args.output is None:
        raise UsageError("generate needs -o/--output")
    try:
        inst = datagen.generate(args.rank, args.m, args.n, args.kappa, args.margin, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    mtx, side = datagen.write_instance(inst, args.output)
    _write_manifest(manifest(args, started, {"k": args.rank, "m": args.m, "n": args.n,
                                             "kappa": args.kappa, "margin": args.margin}),
                    mtx.with_suffix(""))
    if args.verbose:
        print(f"wrote {mtx} and {side}; kappa={inst.kappa:.4g}", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args):
    started = _now()
    A = _load(args.input)
    cfg = _fas_config(args)
    try:
        derived = cfg.derive(A.shape[0])
        if cfg.k > min(A.shape):
            raise ValueError(f"k={cfg.k} exceeds min(m, n)={min(A.shape)}")
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.dry_run:
        d = asdict(derived)
        d["sketch_rows_V"] = cfg.sketch_rows or sample_size(cfg.k, d["eps_V"], d["delta_V"])
        d["sketch_rows_U"] = cfg.sketch_rows or sample_size(cfg.k, d["eps_U"], d["delta_U"])
        _emit(json.dumps(d, indent=1) + "\n", None)
        return EXIT_OK
    try:
        report = fas_run(A, cfg)
    except ValueError as exc:
        raise UsageError(str(exc))
    doc = report.as_dict()
    doc["manifest"] = manifest(args, started, asdict(cfg))
    _emit(json.dumps(doc, indent=1) + "\n", args.output)
    if args.verbose:
        rates = [p.acceptance_rate for p in report.projections if p.status == "ok"]
        print(f"anchors={report.anchors} flags={report.flags}", file=sys.stderr)
        print(f"accesses={report.accesses} mean_acceptance="
              f"{np.mean(rates) if rates else float('nan'):.3f}", file=sys.stderr)
    return EXIT_OK if report.status == "ok" else EXIT_FAIL


def cmd_baseline(args):
    started = _now()
    A = _load(args.input)
    if args.rank is None or not 1 <= args.rank <= min(A.shape):
        raise UsageError("baseline needs 1 <= k <= min(m, n)")
    t0 = time.perf_counter()
    try:
        A = baselines.l1_normalize(A)
    except ValueError as exc:
        raise UsageError(str(exc))
    projections, flags = [], []
    if args.method == "spa":
        res = baselines.spa(A, args.rank, normalize=False)
        anchors = sorted(res.anchors)
        if res.early_stop:
            flags.append("early_stop")
    else:
        s = args.projections or max(args.rank, math.ceil(3 * args.rank * math.log(args.rank)))
        anchors, winners, xs = baselines.exact_dca(A, args.rank, s, args.seed, normalize=False,
                                                   return_winners=True)
        projections = [{"x": x.tolist(), "winner": w, "status": "ok"} for w, x in zip(winners, xs)]
    if len(anchors) < args.rank:
        flags.append("fewer_anchors_than_k")
    doc = {"anchors": anchors, "projections": projections, "method": args.method,
           "config": {"k": args.rank, "projections": args.projections}, "seed": args.seed,
           "accesses": None, "timings": {"total": time.perf_counter() - t0}, "flags": flags,
           "status": "ok" if anchors else "failed"}
    doc["manifest"] = manifest(args, started, doc["config"])
    _emit(json.dumps(doc, indent=1) + "\n", args.output)
    return EXIT_OK if anchors else EXIT_FAIL


BENCH_FIELDS = ["m", "n", "k", "trials", "wall_time_s", "queries", "samples", "accesses",
                "recovery_rate"]


def _grid(text):
    text = (text or "").strip()
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid specification: {text!r}")


def cmd_bench(args):
    started = _now()
    ms, ns, ks = _grid(args.m_grid), _grid(args.n_grid), _grid(args.k_grid)
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    for m in ms:
        for n in ns:
            for k in ks:
                if k > min(m, n):
                    continue
                wall = queries = samples = hits = 0
                for t in range(args.trials):
                    seed = (args.seed or 0) + t
                    inst = datagen.generate(k, m, n, args.kappa, args.margin, seed)
                    a = l1_normalize_view(SampledMatrix(inst.A))
                    ns_ = argparse.Namespace(**vars(args))
                    ns_.rank, ns_.seed = k, seed
                    cfg = _fas_config(ns_)
                    cfg.normalize = False
                    rep = fas_run(a, cfg)
                    wall += rep.timings["total"]
                    queries += rep.accesses["queries"]
                    samples += rep.accesses["samples"]
                    hits += rep.anchors == [int(i) for i in inst.anchors]
                tr = max(args.trials, 1)
                writer.writerow({"m": m, "n": n, "k": k, "trials": args.trials,
                                 "wall_time_s": f"{wall / tr:.4f}", "queries": queries // tr,
                                 "samples": samples // tr, "accesses": (queries + samples) // tr,
                                 "recovery_rate": f"{hits / tr:.3f}"})
                if args.verbose:
                    print(f"m={m} n={n} k={k} done", file=sys.stderr)
    _emit(buf.getvalue(), args.output)
    _write_manifest(manifest(args, started, {"m": ms, "n": ns, "k": ks, "trials": args.trials}),
                    args.output)
    return EXIT_OK


def cmd_index(args):
    started = _now()
    A = _load(args.input)
    if args.rank is None or not 1 <= args.rank <= min(A.shape):
        raise UsageError("index needs 1 <= k <= min(m, n)")
    a = SampledMatrix(A)
    eps = args.epsilon if args.epsilon is not None else 0.1
    build = fkv_sketch if args.side == "row" else fkv_sketch_left
    try:
        d = build(a, args.rank, eps, args.delta, args.seed, rows=args.sketch_rows,
                  cols=args.sketch_cols)
    except ValueError as exc:
        raise UsageError(str(exc))
    doc = json.loads(d.to_json())
    doc["manifest"] = manifest(args, started, {"k": args.rank, "epsilon": eps,
                                               "delta": args.delta, "side": args.side})
    _emit(json.dumps(doc, indent=1) + "\n", args.output)
    if args.verbose:
        print(f"rank={d.rank} p={d.p} q={d.q} exact={d.exact} accesses={a.accesses}",
              file=sys.stderr)
    return EXIT_OK


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="anchorseek", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input")
    common.add_argument("-o", "--output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--verbose", action="store_true")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--kappa", type=float, default=1.0)
    solver.add_argument("--delta", type=float, default=0.1)
    solver.add_argument("--epsilon", type=float)
    solver.add_argument("-s", "--projections", type=int)
    solver.add_argument("-N", "--votes", type=int)
    solver.add_argument("--coverage-alpha", type=_positive_float, default=1.0)
    solver.add_argument("--zeta", type=float, help="product-estimate precision override")
    solver.add_argument("--c-zeta", type=_positive_float, default=1.0)
    solver.add_argument("--sketch-rows", type=int)
    solver.add_argument("--sketch-cols", type=int)

    g = sub.add_parser("generate", parents=[common], help="write a separable instance")
    g.add_argument("-k", "--rank", type=int, required=True)
    g.add_argument("-m", type=int, required=True)
    g.add_argument("-n", type=int, required=True)
    g.add_argument("--kappa", type=float)
    g.add_argument("--margin", type=float, default=0.2)

    s = sub.add_parser("solve", parents=[common, solver], help="run anchor seeking")
    s.add_argument("-k", "--rank", type=int, required=True)
    s.add_argument("--dry-run", action="store_true", help="print derived parameters and exit")

    b = sub.add_parser("baseline", parents=[common], help="run a dense baseline")
    b.add_argument("-k", "--rank", type=int, required=True)
    b.add_argument("--method", choices=["spa", "exact-dca"], required=True)
    b.add_argument("-s", "--projections", type=int)

    be = sub.add_parser("bench", parents=[common, solver], help="access-count benchmark grid")
    # fixed sketch sizes keep the access counts independent of m
    be.set_defaults(rank=0, kappa=20.0, sketch_rows=96, sketch_cols=96)
    be.add_argument("--m-grid", default="250,500,1000,2000")
    be.add_argument("--n-grid", default="100")
    be.add_argument("--k-grid", default="4")
    be.add_argument("--trials", type=int, default=1)
    be.add_argument("--margin", type=float, default=0.2)

    ix = sub.add_parser("index", parents=[common], help="build and save a low-rank sketch")
    ix.add_argument("-k", "--rank", type=int, required=True)
    ix.add_argument("--epsilon", type=float)
    ix.add_argument("--delta", type=float, default=0.1)
    ix.add_argument("--side", choices=["row", "col"], default="row")
    ix.add_argument("--sketch-rows", type=int)
    ix.add_argument("--sketch-cols", type=int)
    return p


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "baseline": cmd_baseline,
            "bench": cmd_bench, "index": cmd_index}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"anchorseek {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"anchorseek {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # solver failure
        print(f"anchorseek {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
