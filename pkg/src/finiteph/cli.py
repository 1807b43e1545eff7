"""finiteph command-line tool.

Subcommands: compute, betti, cluster, distance, validate. Errors are
reported as a single line on stderr with a nonzero exit status.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as fio
from .cluster import single_linkage_dendrogram, subdominant_ultrametric
from .complex import (cech_filtration, cofiring_filtration, maxmin_landmarks, vr_filtration,
                      witness_filtration)
from .distance import bottleneck
from .homology import betti_numbers
from .metric import FiniteMetricSpace, from_point_cloud, spectrum, validate
from .metric import Spectrum
from .persistence import diagrams_over_spectrum

EXIT_USAGE = 2
EXIT_FAIL = 1


class CliError(Exception):
    pass


class UsageError(CliError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror}") from None


def _fmt(x):
    return "inf" if math.isinf(x) else repr(float(x))


def load_space(args) -> FiniteMetricSpace:
    text = _read(args.input)
    fmt = args.format or "distance-matrix"
    if fmt == "distance-matrix":
        labels, rows = fio.parse_distance_matrix(text)
        report = validate(np.asarray(rows, dtype=float), strict=args.strict,
                          allow_pseudometric=args.allow_pseudometric)
        if not report.ok:
            v = report.violations[0]
            raise CliError(f"invalid metric: {v} ({len(report.violations)} violation(s))")
        return FiniteMetricSpace(rows, labels)
    if fmt == "point-cloud":
        space = from_point_cloud(fio.parse_point_cloud(text), args.metric)
        report = validate(space, strict=args.strict, allow_pseudometric=args.allow_pseudometric)
        if not report.ok:
            raise CliError(f"invalid metric: {report.violations[0]} (use --allow-pseudometric for duplicates)")
        return space
    raise CliError(f"format {fmt} does not describe a metric space")


def _check_flags(args):
    fmt = args.format
    if args.complex == "cofiring":
        if fmt not in (None, "spike-trains"):
            raise CliError("--complex cofiring requires --format spike-trains")
        args.format = "spike-trains"
        if args.epsilon is None or args.min_spikes is None:
            raise CliError("--complex cofiring requires --epsilon and --min-spikes")
    elif fmt == "spike-trains":
        raise CliError("--format spike-trains requires --complex cofiring")
    if args.complex == "witness" and args.landmarks is None:
        raise CliError("--complex witness requires --landmarks")
    if args.max_dim < 0:
        raise CliError("--max-dim must be >= 0")


def build(args):
    """Filtration and the value set used to sample it."""
    top = args.max_dim + 1
    if args.complex == "cofiring":
        trains = fio.parse_spike_trains(_read(args.input))
        filt = cofiring_filtration(trains, args.epsilon, args.min_spikes, top)
        return filt, Spectrum(tuple(filt.all_values().tolist()))
    space = load_space(args)
    if args.complex == "vr":
        return vr_filtration(space, top), spectrum(space)
    if args.complex == "cech":
        return cech_filtration(space, top), spectrum(space)
    marks = maxmin_landmarks(space, args.landmarks, seed=args.seed)
    filt = witness_filtration(space, marks, top)
    return filt, Spectrum(tuple(filt.all_values().tolist()))


def cmd_compute(args):
    _check_flags(args)
    filt, spec = build(args)
    diagrams = diagrams_over_spectrum(filt, spec, args.max_dim, mode=args.t_mode)
    digest = fio.file_digest(args.input)
    _write(args.output, fio.diagram_document(diagrams, spec.values, digest, complex=args.complex,
                                             max_dim=args.max_dim, t_mode=args.t_mode))
    if args.svg:
        _write(args.svg, fio.barcode_svg(diagrams))
    if args.barcode:
        _write(args.barcode, fio.barcode_text(diagrams))
    if args.dump_filtration:
        _write(args.dump_filtration, fio.filtration_dump(filt))
    return 0


def cmd_betti(args):
    _check_flags(args)
    filt, _ = build(args)
    static = filt.sublevel(args.delta)
    betti = betti_numbers(static, args.max_dim)
    _write(args.output, " ".join(str(b) for b in betti) + "\n")
    return 0


def cmd_cluster(args):
    args.format = args.format or "distance-matrix"
    space = load_space(args)
    dg = single_linkage_dendrogram(space)
    digest = fio.file_digest(args.input)
    _write(args.output, fio.dendrogram_text(dg))
    if args.json:
        _write(args.json, fio.dendrogram_document(dg, subdominant_ultrametric(space), digest))
    return 0


def cmd_distance(args):
    a = fio.read_diagram_document(_read(args.first))
    b = fio.read_diagram_document(_read(args.second))
    shared = sorted(set(a) & set(b))
    if not shared:
        raise CliError("the two documents share no homology dimension")
    _write(args.output, "".join(_fmt(bottleneck(a[k], b[k])) + "\n" for k in shared))
    return 0


def cmd_validate(args):
    text = _read(args.input)
    fmt = args.format or "distance-matrix"
    if fmt == "distance-matrix":
        _, rows = fio.parse_distance_matrix(text)
        mat = np.asarray(rows, dtype=float)
    elif fmt == "point-cloud":
        mat = from_point_cloud(fio.parse_point_cloud(text), args.metric).dist
    else:
        raise CliError(f"format {fmt} does not describe a metric space")
    report = validate(mat, strict=args.strict, allow_pseudometric=args.allow_pseudometric)
    lines = report.lines() or ["ok"]
    _write(args.output, "\n".join(lines) + "\n")
    if not report.ok:
        raise CliError(f"invalid metric: {len(report.violations)} violation(s)")
    return 0


def _input_flags(p, metric=True):
    p.add_argument("--input", required=True, help="input file")
    p.add_argument("--format", choices=["distance-matrix", "point-cloud", "spike-trains"])
    if metric:
        p.add_argument("--metric", choices=["l1", "l2", "linf"], default="l2",
                       help="norm for point clouds (default l2)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true", default=True,
                   help="reject inputs that violate the metric axioms (default)")
    g.add_argument("--allow-pseudometric", action="store_true",
                   help="accept zero distances between distinct points; triangle failures only warn")
    g.add_argument("--lenient", dest="strict", action="store_false",
                   help="only check symmetry, diagonal, sign and finiteness")


def _complex_flags(p):
    p.add_argument("--complex", choices=["vr", "cech", "witness", "cofiring"], default="vr")
    p.add_argument("--max-dim", type=int, default=1, help="largest homology dimension (default 1)")
    p.add_argument("--landmarks", type=int, help="landmark count for --complex witness")
    p.add_argument("--seed", type=int, default=0, help="seed for the first landmark (default 0)")
    p.add_argument("--epsilon", type=float, help="half window width for --complex cofiring")
    p.add_argument("--min-spikes", type=int, help="spikes required per window for --complex cofiring")


def make_parser():
    parser = _Parser(prog="finiteph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"finiteph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="persistence diagrams of a filtration")
    _input_flags(p)
    _complex_flags(p)
    p.add_argument("--t-mode", choices=["geometric", "paper-literal"], default="geometric",
                   help="translation of index pairs to real pairs (default geometric)")
    p.add_argument("--output", help="diagram document path (default stdout)")
    p.add_argument("--svg", help="write an SVG barcode here")
    p.add_argument("--barcode", help="write 'k birth death' lines here")
    p.add_argument("--dump-filtration", help="write 'value<TAB>vertices' lines here")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("betti", help="Betti numbers of the complex at one scale")
    _input_flags(p)
    _complex_flags(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("cluster", help="single-linkage dendrogram and subdominant ultrametric")
    _input_flags(p)
    p.add_argument("--output", help="merge lines 'scale<TAB>a<TAB>b' (default stdout)")
    p.add_argument("--json", help="write merges, labels and the ultrametric as JSON here")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("distance", help="bottleneck distance per shared dimension",
                       description="Bottleneck distance between two diagram documents, one value "
                                   "per shared dimension. For these diagrams it also equals the "
                                   "interleaving distance of the underlying persistence modules.")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--output")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("validate", help="report violated metric axioms")
    _input_flags(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (CliError, ValueError, KeyError) as e:
        msg = " ".join(str(e).split())
        print(f"finiteph: error: {msg}", file=sys.stderr)
        return EXIT_USAGE if isinstance(e, UsageError) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
