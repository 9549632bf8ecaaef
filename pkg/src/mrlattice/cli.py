"""Command-line interface: ``mrlattice {gen-freq,construct,verify,transform,bench}``.

Exit codes: 0 success, 2 coverage failure, 3 construction aborted,
4 usage or input error. Logs go to stderr; data goes to stdout or files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .construct import ConstructionAborted, ConstructionParams, construct
from .freqset import (
    expansion,
    format_freqset,
    hyperbolic_cross,
    load_freqset,
    random_cube_freqset,
)
from .lattice import MultipleRank1Lattice, load_lattice, save_lattice
from .plan import PeelingPlan
from .transform import evaluate, reconstruct_direct, reconstruct_peeling
from .verify import (
    check_peeling_plan,
    check_reconstruction_property,
    column_rank_full,
    condition_number,
)

log = logging.getLogger("mrlattice")

EXIT_OK, EXIT_UNCOVERED, EXIT_ABORT, EXIT_USAGE = 0, 2, 3, 4

BENCH_COLUMNS = [
    "scenario", "d", "n", "T", "n_freqs", "algorithm", "trial", "s_used",
    "nodes", "oversampling", "nodes_bound", "oversampling_bound", "kappa", "covered", "seed", "wall_ms", "note",
]

FIVE_SET_FIRST = (0, 6251, 10879, 15457, 19499)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def freq_hash(freqs) -> str:
    arr = np.ascontiguousarray(freqs, dtype="<i8")
    h = hashlib.sha256(f"{arr.shape}".encode() + arr.tobytes())
    return h.hexdigest()[:16]


def _write_json(path, obj):
    text = json.dumps(obj, indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _load_freq(path):
    try:
        return load_freqset(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read frequency file {path}: {exc}") from None


def _sub_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0] >> 1)


# ---------------------------------------------------------------- gen-freq


def cmd_gen_freq(args) -> int:
    kind = args.kind
    vals = args.values
    try:
        if kind == "hyperbolic-cross":
            if len(vals) != 2:
                raise UsageError("hyperbolic-cross needs: d n")
            d, n = (int(v) for v in vals)
            freqs = hyperbolic_cross(d, n, size_cap=args.size_cap)
            comment = f"hyperbolic cross d={d} n={n}"
        elif kind == "random-cube":
            if len(vals) != 4:
                raise UsageError("random-cube needs: d T lo hi")
            if args.seed is None:
                raise UsageError("random-cube requires --seed")
            d, T, lo, hi = (int(v) for v in vals)
            freqs = random_cube_freqset(d, T, lo, hi, args.seed)
            comment = f"random cube d={d} T={T} range=[{lo},{hi}] seed={args.seed}"
        elif kind == "five-set":
            h = [int(v) for v in vals] or [0]
            freqs = np.array([[k, *h] for k in FIVE_SET_FIRST], dtype=np.int64)
            comment = f"five-frequency set with fixed tail {h}"
        elif kind == "from-file":
            if len(vals) != 1:
                raise UsageError("from-file needs: path")
            freqs = _load_freq(vals[0])
            comment = f"copied from {vals[0]}"
        else:
            raise UsageError(f"unknown generator {kind}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = format_freqset(freqs, f"{comment}\nsha256-16 {freq_hash(freqs)}")
    summary = f"size={len(freqs)} d={freqs.shape[1]} expansion={expansion(freqs)}"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- construct


def _params(args) -> ConstructionParams:
    try:
        return ConstructionParams(args.c, args.delta, args.n, args.C, args.seed, args.max_rounds)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_construct(args) -> int:
    params = _params(args)
    freqs = _load_freq(args.freq) if args.freq else None
    if args.alg not in (1, 2) and freqs is None:
        raise UsageError(f"algorithm {args.alg} needs --freq")
    try:
        report = construct(args.alg, freqs, params, T=args.T, d=args.d, N=args.N, s=args.s)
    except ConstructionAborted as exc:
        log.error("construction aborted: %s", exc)
        return EXIT_ABORT
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    meta = {"algorithm": args.alg, "seed": report.seed}
    if freqs is not None:
        meta["freq_hash"] = freq_hash(freqs)
    if report.peeling is not None:
        meta["peeling"] = report.peeling.to_dict()
    mr1l = MultipleRank1Lattice(report.mr1l.lattices, report.mr1l.stage_bounds, meta)
    if args.output:
        save_lattice(args.output, mr1l)
    out = report.to_dict()
    out["freq_hash"] = meta.get("freq_hash")
    if not args.full_cover:
        out.pop("per_lattice_cover")
    _write_json(args.report, out)
    log.info(
        "alg %d: %d lattices, %s nodes, covered=%s",
        args.alg, report.s_used, report.total_nodes_distinct, report.covered,
    )
    if report.covered is False:
        return EXIT_UNCOVERED
    return EXIT_OK


# ---------------------------------------------------------------- shared loading


def _load_pair(freq_path, lattice_path):
    freqs = _load_freq(freq_path)
    try:
        mr1l = load_lattice(lattice_path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read lattice file {lattice_path}: {exc}") from None
    want = mr1l.meta.get("freq_hash")
    if want is not None and want != freq_hash(freqs):
        raise UsageError(f"lattice file was built for frequency set {want}, got {freq_hash(freqs)}")
    if mr1l.dim != freqs.shape[1]:
        raise UsageError(f"lattice dimension {mr1l.dim} differs from frequency dimension {freqs.shape[1]}")
    return freqs, mr1l


def _certificate(freqs, mr1l):
    plan = mr1l.meta.get("peeling")
    if plan is not None:
        plan = PeelingPlan.from_dict(plan)
        return plan, check_peeling_plan(freqs, mr1l, plan)
    return None, check_reconstruction_property(freqs, mr1l)


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    freqs, mr1l = _load_pair(args.freq, args.lattice)
    t0 = time.perf_counter()
    plan, cert = _certificate(freqs, mr1l)
    out = {
        "freq_hash": freq_hash(freqs),
        "lattice_hash": mr1l.content_hash(),
        "n_freqs": len(freqs),
        "certificate": "peeling" if plan is not None else "union",
        **cert.to_dict(),
        "coverage_ms": (time.perf_counter() - t0) * 1e3,
    }
    if plan is not None:
        out["union_covered"] = check_reconstruction_property(freqs, mr1l).covered
    if args.rank:
        t0 = time.perf_counter()
        try:
            out["rank_full"] = column_rank_full(freqs, mr1l)
        except MemoryError as exc:
            out["rank_full"] = None
            out["rank_note"] = str(exc)
        out["rank_ms"] = (time.perf_counter() - t0) * 1e3
    if args.kappa:
        t0 = time.perf_counter()
        res = condition_number(freqs, mr1l)
        out["kappa"] = res.kappa
        out["kappa_method"] = res.method
        out["kappa_lower_bound"] = res.lower_bound
        out["kappa_ms"] = (time.perf_counter() - t0) * 1e3
    _write_json(args.output, out)
    return EXIT_OK if cert.covered else EXIT_UNCOVERED


# ---------------------------------------------------------------- transform


def _pairs(values) -> list:
    return [[float(v.real), float(v.imag)] for v in values]


def _unpairs(rows, what) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise UsageError(f"{what}: expected a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def _reconstruct(samples, freqs, mr1l):
    plan, cert = _certificate(freqs, mr1l)
    if not cert.covered:
        return None
    if plan is not None:
        return reconstruct_peeling(samples, freqs, mr1l, plan)
    return reconstruct_direct(samples, freqs, mr1l, cert.per_lattice)


def cmd_transform(args) -> int:
    freqs, mr1l = _load_pair(args.freq, args.lattice)
    fh, lh = freq_hash(freqs), mr1l.content_hash()
    if args.action == "eval":
        data = _read_json(args.input)
        head = data.get("header", {})
        if head.get("n_freqs") != len(freqs) or head.get("freq_hash", fh) != fh:
            raise UsageError("coefficient file does not match the frequency set")
        coeffs = _unpairs(data["values"], args.input)
        samples = evaluate(coeffs, freqs, mr1l)
        header = {"n_freqs": len(freqs), "layout": mr1l.block_lengths, "lattice_hash": lh, "freq_hash": fh}
        _write_json(args.output, {"header": header, "values": _pairs(samples)})
        return EXIT_OK
    if args.action == "reconstruct":
        data = _read_json(args.input)
        head = data.get("header", {})
        if head.get("lattice_hash") != lh or head.get("layout") != mr1l.block_lengths:
            raise UsageError("sample file was not produced on this lattice")
        if head.get("freq_hash", fh) != fh:
            raise UsageError("sample file refers to a different frequency set")
        samples = _unpairs(data["values"], args.input)
        coeffs = _reconstruct(samples, freqs, mr1l)
        if coeffs is None:
            log.error("lattice does not certify reconstruction for this frequency set")
            return EXIT_UNCOVERED
        _write_json(args.output, {"header": {"n_freqs": len(freqs), "freq_hash": fh}, "values": _pairs(coeffs)})
        return EXIT_OK
    # check-roundtrip
    rng = np.random.default_rng(args.seed)
    coeffs = rng.uniform(-1, 1, len(freqs)) + 1j * rng.uniform(-1, 1, len(freqs))
    back = _reconstruct(evaluate(coeffs, freqs, mr1l), freqs, mr1l)
    if back is None:
        log.error("lattice does not certify reconstruction for this frequency set")
        return EXIT_UNCOVERED
    err = float(np.max(np.abs(back - coeffs)) / np.max(np.abs(coeffs)))
    print(f"max_relative_error {err:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------- bench


def _parse_range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _bench_row(job: dict) -> dict:
    scenario, alg, seed = job["scenario"], job["algorithm"], job["seed"]
    freqs = job["freqs"]
    row = {k: job.get(k) for k in ("scenario", "d", "n", "T", "algorithm", "trial")}
    row.update(seed=seed, n_freqs=len(freqs), note="")
    params = ConstructionParams(job["c"], job["delta"], 1, job["C"], seed, 100)
    t0 = time.perf_counter()
    try:
        report = construct(alg, freqs, params)
    except ConstructionAborted as exc:
        row.update(covered="aborted", note=str(exc), wall_ms=(time.perf_counter() - t0) * 1e3)
        return row
    wall = (time.perf_counter() - t0) * 1e3
    covered = report.covered
    if covered is None:
        covered = check_reconstruction_property(freqs, report.mr1l).covered
    nodes = report.total_nodes_distinct if report.total_nodes_distinct is not None else report.total_nodes_bound
    row.update(
        s_used=report.s_used, nodes=nodes, oversampling=nodes / len(freqs), nodes_bound=report.total_nodes_bound,
        oversampling_bound=report.oversampling_bound, covered=covered, wall_ms=wall,
    )
    if job["kappa"]:
        try:
            row["kappa"] = condition_number(freqs, report.mr1l, method="auto").kappa
        except MemoryError as exc:
            row["note"] = f"kappa skipped: {exc}"
    return row


def _random_cube_rows(args):
    from .construct import construct_alg1, construct_alg2

    params = ConstructionParams(args.c, args.delta, 1, args.C, args.seed, args.max_rounds)
    rows = []
    for alg in args.algs:
        fn = construct_alg1 if alg == 1 else construct_alg2
        if alg not in (1, 2):
            raise UsageError("random-cube tests a fixed scheme; use --algs 1 and/or 2")
        report = fn(args.T, args.d, args.N, params, s=args.s)
        for trial in range(args.trials):
            seed = _sub_seed(args.seed, alg, trial)
            t0 = time.perf_counter()
            freqs = random_cube_freqset(args.d, args.T, args.lo, args.hi, seed)
            covered = check_reconstruction_property(freqs, report.mr1l).covered
            rows.append({
                "scenario": "random-cube", "d": args.d, "n": None, "T": args.T, "n_freqs": args.T,
                "algorithm": alg, "trial": trial, "s_used": report.s_used, "nodes": report.total_nodes_distinct,
                "oversampling": report.oversampling, "nodes_bound": report.total_nodes_bound,
                "oversampling_bound": report.oversampling_bound, "kappa": None, "covered": covered,
                "seed": seed, "wall_ms": (time.perf_counter() - t0) * 1e3, "note": "",
            })
    return rows


def cmd_bench(args) -> int:
    if args.scenario == "random-cube":
        rows = _random_cube_rows(args)
    else:
        instances = []
        if args.scenario == "hc-fixed-d":
            instances = [(args.d, n) for n in _parse_range(args.n)]
        elif args.scenario == "hc-fixed-n":
            instances = [(d, int(args.n)) for d in _parse_range(args.dims)]
        jobs = []
        row_id = 0
        if args.scenario == "five-set":
            freqs = np.array([[k, 0] for k in FIVE_SET_FIRST], dtype=np.int64)
            for trial in range(args.trials):
                jobs.append({
                    "scenario": "five-set", "d": 2, "n": None, "T": 5, "algorithm": 7, "trial": trial,
                    "freqs": freqs, "c": 1.1, "delta": args.delta, "C": 2.0, "kappa": True,
                    "seed": _sub_seed(args.seed, trial),
                })
        for d, n in instances:
            freqs = hyperbolic_cross(d, n)
            for alg in args.algs:
                for trial in range(args.trials):
                    jobs.append({
                        "scenario": args.scenario, "d": d, "n": n, "T": None, "algorithm": alg, "trial": trial,
                        "freqs": freqs, "c": args.c, "delta": args.delta, "C": args.C, "kappa": args.kappa,
                        "seed": _sub_seed(args.seed, row_id),
                    })
                    row_id += 1
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                rows = list(pool.map(_bench_row, jobs))
        else:
            rows = [_bench_row(job) for job in jobs]
    out = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, BENCH_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in BENCH_COLUMNS})
    finally:
        if out is not sys.stdout:
            out.close()
    done = [r for r in rows if isinstance(r["covered"], bool)]
    if done:
        log.info("%d rows, covered fraction %.4f", len(rows), sum(r["covered"] for r in done) / len(done))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_params(p, with_n=True):
    p.add_argument("--c", type=float, default=2.0, help="oversampling factor (> 1)")
    p.add_argument("--delta", type=float, default=0.5, help="failure probability bound in (0, 1)")
    if with_n:
        p.add_argument("--n", type=int, default=1, help="number of candidate primes (alg 3)")
    p.add_argument("--C", type=float, default=2.0, help="stage constant (alg 7)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--max-rounds", type=int, default=100, help="fruitless batches before aborting")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mrlattice", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-freq", help="write a frequency-set file")
    g.add_argument("kind", choices=["hyperbolic-cross", "random-cube", "five-set", "from-file"])
    g.add_argument("values", nargs="*")
    g.add_argument("--seed", type=int)
    g.add_argument("--size-cap", type=int, default=5_000_000)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen_freq)

    c = sub.add_parser("construct", help="build a sampling scheme")
    c.add_argument("--alg", type=int, required=True, choices=range(1, 8))
    c.add_argument("--freq", help="frequency-set file")
    c.add_argument("--T", type=int, help="cardinality (algs 1, 2)")
    c.add_argument("--d", type=int, help="dimension (algs 1, 2)")
    c.add_argument("--N", type=int, help="expansion bound (algs 1, 2)")
    c.add_argument("--s", type=int, help="override the number of lattices (algs 1, 2)")
    _add_params(c)
    c.add_argument("-o", "--output", help="lattice file to write")
    c.add_argument("--report", help="report JSON path (default stdout)")
    c.add_argument("--full-cover", action="store_true", help="include per-lattice index sets in the report")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="certify a scheme for a frequency set")
    v.add_argument("--freq", required=True)
    v.add_argument("--lattice", required=True)
    v.add_argument("--rank", action="store_true", help="dense column-rank test")
    v.add_argument("--kappa", action="store_true", help="condition number")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("transform", help="evaluate or reconstruct")
    t.add_argument("action", choices=["eval", "reconstruct", "check-roundtrip"])
    t.add_argument("--freq", required=True)
    t.add_argument("--lattice", required=True)
    t.add_argument("-i", "--input", help="coefficients (eval) or samples (reconstruct)")
    t.add_argument("-o", "--output")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_transform)

    b = sub.add_parser("bench", help="run a benchmark grid and write CSV")
    b.add_argument("scenario", choices=["hc-fixed-d", "hc-fixed-n", "random-cube", "five-set"])
    b.add_argument("--d", type=int, help="dimension (default 6, or 3 for random-cube)")
    b.add_argument("--n", default="1..5", help="refinement range, e.g. 1..5 or 2,4")
    b.add_argument("--dims", default="2..6", help="dimension range for hc-fixed-n")
    b.add_argument("--algs", type=_parse_range, help="algorithms, e.g. 1,3,5 (default 1,3,5; 1 for random-cube)")
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--kappa", action="store_true")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--T", type=int, default=148)
    b.add_argument("--N", type=int, default=299)
    b.add_argument("--s", type=int, default=10)
    b.add_argument("--lo", type=int, default=1)
    b.add_argument("--hi", type=int, default=300)
    _add_params(b, with_n=False)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "bench":
        cube = args.scenario == "random-cube"
        if args.d is None:
            args.d = 3 if cube else 6
        if args.algs is None:
            args.algs = [1] if cube else [1, 3, 5]
    if args.command == "transform" and args.action != "check-roundtrip" and not args.input:
        parser.error(f"transform {args.action} needs --input")
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
