"""Command-line entry point: ``campus-ties <command> [options]``.

Every command computes its outputs in memory, then either writes them under
``--out DIR`` together with ``manifest.json`` or prints the main table to
stdout. ``campus-ties replay DIR/manifest.json --out NEW`` re-runs a command
from its manifest after checking the input digests.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .behavior import binned_relation, build_profiles, regularize, spearman
from .errors import ArgumentError, CampusTiesError, InsufficientDataError
from .graph import connected_components, densification_from_report, evolution_report, EVOLUTION_COLUMNS
from .peer import assortativity, attribute_subgraph, key_nodes, percolate
from .records import TimeWindow, filter_valid, read_table
from .reports import (dumps, network_sidecar, profiles_tsv, read_network, read_profiles,
                      sha256_bytes, sha256_file, tsv)
from .synth import SynthConfig, evaluate_pipeline, generate
from .ties import (CooccurrenceModel, EdgeList, TieParams, count_cooccurrences, critical_frequency,
                   infer_network, network_size_curve, tail_table, validate_against_ground_truth)

log = logging.getLogger("campus_ties")

THREADS_ENV = "CAMPUS_TIES_THREADS"
# flags that never change output bytes and stay out of the manifest
_VOLATILE = {"out", "threads", "func", "verbose", "manifest"}
_INPUT_FLAGS = ("consumption", "library", "gpa", "edges", "profiles", "truth", "inferred")


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _unit_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _ac_range(text):
    lo, _, hi = text.partition("..")
    try:
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return [lo, hi]


def _window(label: str | None) -> TimeWindow:
    if label in (None, "", "all"):
        return TimeWindow.everything()
    if ":" in label:
        start, end = label.split(":", 1)
        return TimeWindow(int(start), int(end), label)
    return TimeWindow.month(label)


def _threads(args) -> int:
    value = getattr(args, "threads", None) or os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def _model_args(p, with_m=True):
    if with_m:
        p.add_argument("--m", type=_positive_int, default=30000, help="student population")
    p.add_argument("--n", type=_positive_int, default=160, help="canteen windows")
    p.add_argument("--b", type=_positive_int, default=90, help="meals per period")
    p.add_argument("--N", type=_positive_int, default=60, help="time-slice boundaries (N-1 slices)")
    p.add_argument("--dt", type=_positive_float, default=2.0, help="slice width in minutes")
    p.add_argument("--sigma", type=_positive_float, default=20.0, help="meal-time std. dev. in minutes")


# commands: each returns (outputs, stdout_name[, stdout_footer]) with outputs an ordered dict of
# file -> text

def cmd_critical_freq(args):
    model = CooccurrenceModel(args.m, args.n, args.b, args.N, args.dt, args.sigma)
    a_c = critical_frequency(model, args.ceiling)
    rows = tail_table(model, range(1, args.a_max + 1))
    summary = {"a_c": a_c, "ceiling": args.ceiling, "model": vars(model) | {"mu": None}}
    return {"critical_freq.tsv": tsv(["a", "P", "E"], rows),
            "critical_freq.json": dumps(summary)}, "critical_freq.tsv", f"# a_c\t{a_c}\n"


def cmd_infer(args):
    canteen, _ = read_table(consumption=args.consumption)
    window = _window(args.window)
    valid = filter_valid(canteen, window, args.min_records)
    if len(valid) == 0:
        log.warning("no valid students in window %s; writing an empty network", window.label)
    counts = count_cooccurrences(valid, args.window_seconds, workers=_threads(args))
    if args.auto_ac:
        m = max(2, len(valid))
        n = args.n or max(1, len({r.location_id for r in valid.records()}))
        model = CooccurrenceModel(m, n, args.b, args.N, args.dt, args.sigma)
        a_c = critical_frequency(model, args.ceiling)
    else:
        a_c = args.ac
    net = infer_network(valid, TieParams(a_c, args.window_seconds), window, counts=counts)
    label = window.label or "all"
    kept = counts.at_least(a_c)
    out = {f"network_{label}.tsv": kept.to_tsv(),
           f"network_{label}.json": dumps(network_sidecar(net, a_c, args.window_seconds))}
    if args.ac_sweep:
        lo, hi = args.ac_sweep
        out["size_vs_ac.tsv"] = tsv(["a", "nodes", "edges"], network_size_curve(counts, range(lo, hi + 1)))
    return out, f"network_{label}.tsv"


def cmd_metrics(args):
    nets = [read_network(p)[0] for p in args.edges]
    rows = evolution_report(nets, args.path_mode, args.seed)
    doc = {"windows": rows, "gamma": densification_from_report(rows)}
    return {"evolution.tsv": tsv(EVOLUTION_COLUMNS, ([r[c] for c in EVOLUTION_COLUMNS] for r in rows)),
            "evolution.json": dumps(doc)}, "evolution.tsv"


def _binned_rows(attr, gpa, bins, scale):
    try:
        return binned_relation(attr, gpa, bins, scale)
    except InsufficientDataError as exc:
        log.warning("binning skipped: %s", exc)
        return []


def _safe_spearman(pairs):
    if len(pairs) < 3:
        return None
    try:
        return spearman([p[0] for p in pairs], [p[1] for p in pairs])
    except CampusTiesError:
        return None


def cmd_behavior(args):
    canteen, library = read_table(args.consumption, args.library, args.gpa)
    window = _window(args.window)
    profiles = build_profiles(canteen, library if args.library else None, window, args.min_records)
    ordered = [profiles[k] for k in sorted(profiles)]
    gpa = {p.student_id: p.gpa for p in ordered if p.gpa is not None}
    order = {p.student_id: p.orderliness for p in ordered if p.orderliness is not None}
    dil = {p.student_id: p.diligence for p in ordered if p.diligence}
    summary = {
        "students": len(ordered),
        "omitted_short_sequences": profiles.omitted,
        "spearman_orderliness_gpa": _safe_spearman([(order[s], gpa[s]) for s in order if s in gpa]),
        "spearman_diligence_gpa": _safe_spearman([(dil[s], gpa[s]) for s in dil if s in gpa]),
        "mean_entropy": float(np.mean([-v for v in order.values()])) if order else None,
        "window": window.label,
    }
    header = ["bin_center", "mean_gpa", "count"]
    return {
        "profiles.tsv": profiles_tsv(ordered),
        "binned_orderliness.tsv": tsv(header, _binned_rows(regularize(order), gpa, args.bins, "linear")),
        "binned_diligence.tsv": tsv(header, _binned_rows(dil, gpa, args.bins, "log")),
        "behavior.json": dumps(summary),
    }, "profiles.tsv"


def _attach_profiles(g, path):
    profiles = read_profiles(path)
    g = g.with_attribute("orderliness", {k: p.orderliness for k, p in profiles.items()})
    g = g.with_attribute("diligence", {k: p.diligence for k, p in profiles.items()})
    return g.with_attribute("gpa", {k: p.gpa for k, p in profiles.items()})


def cmd_assort(args):
    g = _attach_profiles(read_network(args.edges)[0], args.profiles)
    rows, doc = [], {}
    for attr in args.attrs:
        sub, _, dropped = attribute_subgraph(g, attr)
        try:
            r = assortativity(g, attr)
        except CampusTiesError as exc:
            log.warning("assortativity(%s) undefined: %s", attr, exc)
            r = None
        rows.append((attr, r, sub.number_of_nodes(), sub.number_of_edges(), dropped))
        doc[attr] = {"r": r, "nodes": sub.number_of_nodes(), "edges": sub.number_of_edges(),
                     "dropped": dropped}
    return {"assortativity.tsv": tsv(["attribute", "r", "nodes", "edges", "dropped"], rows),
            "assortativity.json": dumps(doc)}, "assortativity.tsv"


def cmd_percolate(args):
    g = _attach_profiles(read_network(args.edges)[0], args.profiles)
    sub, values, dropped = attribute_subgraph(g, "orderliness")
    if dropped:
        log.warning("%d nodes without orderliness dropped before percolation", dropped)
    gcc = sub.subgraph(connected_components(sub, fit_beta=False).giant)
    if gcc.number_of_nodes() == 0:
        raise InsufficientDataError("no nodes with orderliness to percolate")
    curve = percolate(gcc, values, args.dm)
    report = key_nodes(gcc, values, curve, args.top_k)
    doc = {
        "p_c": curve.p_c, "m_c": curve.m_c, "gcc_nodes": gcc.number_of_nodes(),
        "dropped_without_orderliness": dropped, "delta_m": args.dm,
        "key_nodes": [{"node": k.node, "orderliness": k.orderliness, "delta_g1": k.delta_g1,
                       "g1_after": k.g1_after} for k in report.nodes],
    }
    return {"percolation.tsv": tsv(["m", "p", "g1", "g2"], curve.steps),
            "percolation.json": dumps(doc)}, "percolation.tsv"


def cmd_synth(args):
    fields = {k: getattr(args, k) for k in SynthConfig.__dataclass_fields__ if getattr(args, k, None) is not None}
    cfg = SynthConfig(**fields)
    campus = generate(cfg)
    out = dict(campus.csv_files())
    out["synth_config.json"] = dumps(vars(cfg) | {"null_model": vars(cfg.null_model())})
    return out, "truth_edges.tsv"


def cmd_validate(args):
    with open(args.truth, encoding="utf-8") as fh:
        truth = EdgeList.read_tsv(fh)
    with open(args.inferred, encoding="utf-8") as fh:
        inferred = EdgeList.read_tsv(fh)
    res = validate_against_ground_truth(inferred, truth)
    doc = {"hit_rate": res.hit_rate, "truth_edges": len(truth), "inferred_edges": len(inferred),
           "recovered": len(truth) - len(res.missed), "missed": len(res.missed), "extra": len(res.extra)}
    if len(inferred):
        doc["precision"] = evaluate_pipeline(truth, inferred)["precision"]
    return {"validation.json": dumps(doc), "missed.tsv": res.missed.to_tsv(),
            "extra.tsv": res.extra.to_tsv()}, "validation.json"


COMMANDS = {
    "critical-freq": cmd_critical_freq, "infer": cmd_infer, "metrics": cmd_metrics,
    "behavior": cmd_behavior, "assort": cmd_assort, "percolate": cmd_percolate,
    "synth": cmd_synth, "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="campus-ties", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--out", metavar="DIR", help="write outputs and manifest.json here")
        p.add_argument("--threads", type=_positive_int, default=None,
                       help=f"worker threads (default: ${THREADS_ENV} or all cores)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        p.set_defaults(func=COMMANDS[name])
        return p

    p = command("critical-freq", "P(x >= a) and E(x >= a) for stranger pairs and the critical frequency")
    _model_args(p)
    p.add_argument("--ceiling", type=_positive_float, default=1.0,
                   help="expected stranger pairs allowed at a_c")
    p.add_argument("--a-max", type=_positive_int, default=9, help="largest a to tabulate")

    p = command("infer", "infer a friendship network from a consumption CSV")
    p.add_argument("--consumption", required=True, help="consumption CSV")
    p.add_argument("--window", default="all", help="YYYY-MM month, START:END epoch seconds, or all")
    p.add_argument("--window-seconds", type=_positive_int, default=120, help="co-occurrence radius")
    p.add_argument("--min-records", type=_positive_int, default=10, help="validity filter")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ac", type=_positive_int, default=5, help="fixed critical frequency")
    group.add_argument("--auto-ac", action="store_true",
                       help="solve a_c with m = valid students, n = distinct locations")
    p.add_argument("--ac-sweep", type=_ac_range, metavar="A..B",
                   help="also tabulate network size for a in A..B")
    _model_args(p, with_m=False)
    p.set_defaults(n=None)
    p.add_argument("--ceiling", type=_positive_float, default=1.0)

    p = command("metrics", "size and giant-component metrics per network")
    p.add_argument("--edges", nargs="+", required=True, help="network TSV files (sidecar JSON optional)")
    p.add_argument("--path-mode", choices=["auto", "exact", "sampled"], default="auto")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled path lengths")

    p = command("behavior", "orderliness, diligence and their relation to GPA")
    p.add_argument("--consumption", required=True)
    p.add_argument("--library")
    p.add_argument("--gpa")
    p.add_argument("--window", default="all")
    p.add_argument("--min-records", type=_positive_int, default=10)
    p.add_argument("--bins", type=_positive_int, default=11)

    p = command("assort", "assortativity of node attributes")
    p.add_argument("--edges", required=True)
    p.add_argument("--profiles", required=True, help="profiles.tsv from the behavior command")
    p.add_argument("--attrs", nargs="+", default=["degree", "orderliness", "diligence", "gpa"],
                   choices=["degree", "orderliness", "diligence", "gpa"])

    p = command("percolate", "orderliness percolation on the giant component and key nodes")
    p.add_argument("--edges", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--dm", type=_positive_float, default=0.01, help="threshold step")
    p.add_argument("--top-k", type=_positive_int, default=10)

    p = command("synth", "generate a synthetic campus with planted ties")
    defaults = SynthConfig()
    for name, f in SynthConfig.__dataclass_fields__.items():
        kind = {int: int, float: float, str: str}.get(type(getattr(defaults, name)), str)
        if name in ("students", "windows", "days", "meals_per_day", "months"):
            kind = _positive_int
        elif name in ("friend_meal_prob", "attend_prob", "orderly_fraction", "homophily", "tie_decay"):
            kind = _unit_float
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=kind,
                       default=getattr(defaults, name), help=f"default {getattr(defaults, name)}")

    p = command("validate", "hit rate of inferred ties against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--inferred", required=True)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--threads", type=_positive_int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=None)
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _VOLATILE}


def manifest(args, outputs: dict[str, str]) -> dict:
    inputs = {}
    for flag in _INPUT_FLAGS:
        value = getattr(args, flag, None)
        for path in ([value] if isinstance(value, str) else value or []):
            inputs[path] = sha256_file(path)
    return {
        "tool": "campus-ties", "version": __version__, "command": args.command,
        "config": _config(args), "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "outputs": {name: sha256_bytes(text.encode("utf-8")) for name, text in outputs.items()},
    }


def run(args) -> int:
    outputs, main_name, *footer = args.func(args)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in outputs.items():
            (out / name).write_text(text, encoding="utf-8", newline="\n")
        (out / "manifest.json").write_text(dumps(manifest(args, outputs)), encoding="utf-8")
    else:
        sys.stdout.write(outputs[main_name] + "".join(footer))
    return 0


def replay(args) -> int:
    doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    for path, digest in doc.get("inputs", {}).items():
        if sha256_file(path) != digest:
            raise ArgumentError(f"input {path} changed since the manifest was written")
    ns = argparse.Namespace(**doc["config"])
    ns.command = doc["command"]
    ns.func = COMMANDS[ns.command]
    ns.out, ns.threads = args.out, args.threads
    return run(ns)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            return replay(args)
        return run(args)
    except CampusTiesError as exc:
        print(f"campus-ties {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"campus-ties {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
