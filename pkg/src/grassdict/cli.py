"""Command-line interface: ``grassdict <command> [flags]``.

Exit status is 0 on success, 2 on usage errors and missing input files, and
1 on any other failure. Every command that writes files also appends one
JSON line describing the run to ``manifest.jsonl`` next to its outputs;
``grassdict replay`` re-executes such a line.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from xml.sax.saxutils import escape

import numpy as np

from . import __version__, cluster, dictlearn, frames, io, setmetric, synthetic
from .errors import GrassdictError

log = logging.getLogger("grassdict")

MANIFEST = "manifest.jsonl"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


class UsageError(Exception):
    """Bad flags or missing inputs (exit status 2)."""


def _need_file(path):
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    return path


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _p_value(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("p must be positive or 'inf'")
    return value


def _manifest(args, outputs, inputs, start):
    record = {
        "command": args.command,
        "argv": args.argv,
        "flags": {k: v for k, v in vars(args).items() if k not in ("func", "argv")},
        "seed": getattr(args, "seed", None),
        "inputs": list(inputs),
        "outputs": list(outputs),
        "version": __version__,
        "duration_s": round(time.perf_counter() - start, 3),
    }
    directory = os.path.dirname(os.path.abspath(outputs[0]))
    io.append_manifest(os.path.join(directory, MANIFEST), record)


def _out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


# -- commands ----------------------------------------------------------------


def cmd_gen(args):
    if args.per_signal > args.atoms:
        raise UsageError("--per-signal cannot exceed --atoms")
    cfg = synthetic.SynthConfig(
        n_atoms=args.atoms,
        length=args.len,
        channels=args.channels,
        n_signals=args.signals,
        atoms_per_signal=args.per_signal,
        rotate=args.rotate,
        snr_db=args.snr,
        seed=args.seed,
    )
    original = synthetic.gen_original_dictionary(cfg)
    signals, truth = synthetic.gen_dataset(original, cfg)
    signals = synthetic.add_noise(signals, cfg.snr_db, cfg.seed)
    out = _out_dir(args.out)
    paths = [os.path.join(out, name) for name in ("dictionary.mdl", "dataset.mds", "codes.csv")]
    io.write_dictionary(paths[0], original)
    io.write_dataset(paths[1], signals)
    io.write_codes(paths[2], truth)
    return paths, []


def cmd_learn(args):
    signals = io.read_dataset(_need_file(args.data))
    original = io.read_dictionary(_need_file(args.original)) if args.original else None
    n_atoms = args.atoms
    if n_atoms is None:
        n_atoms = len(original) if original is not None else 135
    if original is not None and original.shape[1:] != signals.shape[1:]:
        raise UsageError("--original atoms and --data signals have different shapes")
    if args.sparsity > n_atoms:
        raise UsageError("--sparsity cannot exceed the number of atoms")
    out = _out_dir(args.out)
    paths = [os.path.join(out, "dictionary.mdl")]
    if original is not None:
        trace = synthetic.learn_with_trace(
            signals, original, args.algo, n_atoms, args.sparsity, args.iters, args.seed
        )
        learned = trace.dictionary
        paths.append(os.path.join(out, "trace.csv"))
        io.write_trace(paths[1], trace.rows, synthetic.TRACE_COLUMNS)
    else:
        learner = dictlearn.ndri_dla if args.algo == "ndri" else dictlearn.m_dla
        learned = learner(signals, n_atoms, k=args.sparsity, iters=args.iters, seed=args.seed).dictionary
    io.write_dictionary(paths[0], learned)
    inputs = [args.data] + ([args.original] if args.original else [])
    return paths, inputs


def cmd_dist(args):
    ground = setmetric.GroundDistance.parse(args.ground)
    if args.require_metric and not ground.is_metric:
        raise UsageError(f"ground distance {ground.value} is not a metric (--require-metric)")
    if len(args.files) < 2:
        raise UsageError("dist needs at least two dictionary files")
    dicts = [io.read_dictionary(_need_file(f)) for f in args.files]
    n = len(dicts)
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            mat[i, j] = mat[j, i] = setmetric.dictionary_distance(
                dicts[i], dicts[j], ground=ground, set_metric=args.set, p=args.p
            )
    if n == 2 and args.out is None:
        print(io.fmt(mat[0, 1]))
        return [], args.files
    labels = [os.path.splitext(os.path.basename(f))[0] for f in args.files]
    if len(set(labels)) < n:
        labels = list(args.files)
    if args.out is None:
        sys.stdout.write(io._csv_text([""] + labels, [[lab] + [io.fmt(v) for v in row] for lab, row in zip(labels, mat)]))
        return [], args.files
    io.write_distance_matrix(args.out, labels, mat)
    return [args.out], args.files


def cmd_cluster(args):
    out = args.out
    if args.method == "consensus":
        if not args.partitions:
            raise UsageError("--method consensus needs --partitions")
        parts = [io.read_partition(_need_file(p)) for p in args.partitions]
        c = args.clusters if args.clusters is not None else int(parts[0].max()) + 1
        part, nmi = cluster.consensus_ensemble(parts, c)
        io.write_partition(out, part.labels)
        print(f"nmi {nmi:.6f}")
        return [out], args.partitions
    if args.matrix is None:
        raise UsageError(f"--method {args.method} needs --matrix")
    _, d = io.read_distance_matrix(_need_file(args.matrix))
    if args.method == "ap":
        part = cluster.affinity_propagation(cluster.to_similarity(d, args.sigma))
        io.write_partition(out, part.labels, part.exemplars)
    elif args.method == "hier":
        io.write_merges(out, cluster.hierarchical_hausdorff(d))
    else:
        if args.neighbors >= len(d):
            raise UsageError(f"--neighbors must be smaller than the {len(d)} points")
        emb = cluster.laplacian_eigenmaps(d, args.neighbors, args.dims)
        io.write_embedding(out, emb.coords)
    return [out], [args.matrix]


def trace_svg(columns, rows, keep=None, width=640, height=400):
    """Deterministic SVG line chart of a trace, one polyline per column."""
    if not rows:
        raise GrassdictError("empty trace")
    keep = list(columns) if keep is None else list(keep)
    missing = [c for c in keep if c not in columns]
    if missing:
        raise UsageError(f"unknown trace columns: {', '.join(missing)}")
    left, right, top, bottom = 50, 150, 20, 40
    pw, ph = width - left - right, height - top - bottom
    n = len(rows)

    def x(i):
        return left + (pw * (i - 1) / (n - 1) if n > 1 else pw / 2)

    def y(v):
        return top + ph * (1 - min(max(v, 0.0), 100.0) / 100.0)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in (0, 25, 50, 75, 100):
        out.append(f'<text x="{left - 6}" y="{y(v) + 4:.2f}" font-size="11" text-anchor="end">{v}</text>')
    for i in sorted({1, n}):
        out.append(f'<text x="{x(i):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{i}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 6}" font-size="12" text-anchor="middle">iteration</text>')
    for k, name in enumerate(keep):
        col = columns.index(name)
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{x(i + 1):.2f},{y(r[col]):.2f}" for i, r in enumerate(rows))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 18 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" stroke="{color}"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args):
    columns, rows = io.read_trace(_need_file(args.trace))
    keep = args.columns.split(",") if args.columns else None
    io.atomic_write(args.out, trace_svg(list(columns), rows, keep))
    return [args.out], [args.trace]


def cmd_sweep(args):
    cfg = synthetic.SynthConfig(
        rotate=args.rotate, seed=args.seed, repeats=args.repeats, iters=args.iters, sparsity=args.sparsity
    )
    levels = tuple(None if lv.lower() == "inf" else float(lv) for lv in args.levels.split(","))
    rows = synthetic.run_noise_sweep(cfg, args.algo, levels, n_jobs=args.jobs)
    io.write_sweep(args.out, rows, synthetic.TRACE_COLUMNS)
    return [args.out], []


def cmd_frames(args):
    d = io.read_dictionary(_need_file(args.dictionary))
    frame = frames.flatten_dictionary(d)
    report = frames.is_equiangular_tight(frame, tol=args.tol)
    result = {
        "vectors": frame.shape[1],
        "dimension": frame.shape[0],
        "coherence": report.coherence,
        # the Welch bound is undefined with fewer vectors than dimensions
        "welch_bound": None if math.isnan(report.welch_bound) else report.welch_bound,
        "gap": None if math.isnan(report.gap) else report.gap,
        "equiangular": report.equiangular,
        "tight": report.tight,
        "is_etf": report.is_etf,
        "frame_bounds": list(report.frame_bounds),
        "within_existence_cap": report.within_existence_cap,
        "gershgorin_rip": frames.rip_gershgorin_bound(frame, args.k),
    }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        io.atomic_write(args.out, text)
        return [args.out], [args.dictionary]
    sys.stdout.write(text)
    return [], [args.dictionary]


def cmd_replay(args):
    with open(_need_file(args.manifest)) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise UsageError("manifest is empty")
    try:
        record = json.loads(lines[args.line])
    except IndexError:
        raise UsageError(f"manifest has {len(lines)} lines") from None
    return main(record["argv"], _replay=True)


# -- parser ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="grassdict", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an original dictionary and a training set")
    p.add_argument("--atoms", type=_positive, default=135)
    p.add_argument("--len", type=_positive, default=20)
    p.add_argument("--channels", type=_positive, default=10)
    p.add_argument("--signals", type=_positive, default=2000)
    p.add_argument("--per-signal", type=_positive, default=3)
    p.add_argument("--rotate", action="store_true", help="rotate every atom occurrence")
    p.add_argument("--snr", type=float, default=None, help="noise level in dB (default: none)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("learn", help="learn a dictionary with M-DLA or nDRI-DLA")
    p.add_argument("--algo", choices=("mdla", "ndri"), default="mdla")
    p.add_argument("--atoms", type=_positive, default=None)
    p.add_argument("--sparsity", type=_positive, default=3)
    p.add_argument("--iters", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", required=True, help="mds-v1 dataset")
    p.add_argument("--original", help="mdl-v1 reference dictionary; enables the trace CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("dist", help="distances between dictionaries")
    p.add_argument("files", nargs="+", help="mdl-v1 dictionaries")
    p.add_argument("--ground", default="chordal", help="ground distance between atoms")
    p.add_argument("--set", choices=("hausdorff", "wasserstein"), default="wasserstein")
    p.add_argument("--p", type=_p_value, default=1.0, help="Wasserstein order (a number or 'inf')")
    p.add_argument("--require-metric", action="store_true", help="refuse pseudo-metric grounds")
    p.add_argument("--out", help="distance CSV (default: stdout)")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("cluster", help="cluster a distance matrix")
    p.add_argument("--method", choices=("ap", "hier", "consensus", "eigenmaps"), required=True)
    p.add_argument("--matrix", help="labeled distance CSV")
    p.add_argument("--partitions", nargs="+", help="partition CSVs (consensus only)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--neighbors", type=_positive, default=10)
    p.add_argument("--dims", type=_positive, default=2)
    p.add_argument("--clusters", type=_positive, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("plot", help="render a trace CSV as SVG")
    p.add_argument("trace")
    p.add_argument("--columns", help="comma-separated subset of columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("sweep", help="final metrics averaged over repeats per noise level")
    p.add_argument("--algo", choices=("mdla", "ndri"), default="mdla")
    p.add_argument("--rotate", action="store_true")
    p.add_argument("--levels", default="10,20,30,inf")
    p.add_argument("--repeats", type=_positive, default=10)
    p.add_argument("--iters", type=int, default=80)
    p.add_argument("--sparsity", type=_positive, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive, default=None, help="worker processes (default: GRASSDICT_THREADS or 1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("frames", help="frame diagnostics")
    fsub = p.add_subparsers(dest="frames_command", required=True)
    fp = fsub.add_parser("report", help="coherence, Welch bound and ETF test of a dictionary")
    fp.add_argument("dictionary")
    fp.add_argument("--k", type=_positive, default=2, help="RIP order for the Gershgorin bound")
    fp.add_argument("--tol", type=float, default=1e-9)
    fp.add_argument("--out")
    fp.set_defaults(func=cmd_frames)

    p = sub.add_parser("replay", help="re-run a command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--line", type=int, default=-1, help="which record (default: last)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None, _replay=False):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    start = time.perf_counter()
    try:
        result = args.func(args)
        if args.command == "replay":
            return result
        outputs, inputs = result
        if outputs:
            _manifest(args, outputs, inputs, start)
    except UsageError as exc:
        print(f"grassdict {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (GrassdictError, OSError, ValueError) as exc:
        print(f"grassdict {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
