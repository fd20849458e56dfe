"""Command-line interface.

Exit codes: 0 success, 2 input or configuration error, 3 domain error
(degenerate segregation, empty group, undefined metric).
"""
from __future__ import annotations

import argparse
import itertools
import sys
import warnings
from pathlib import Path

from . import __version__
from .core import GroupAssignment
from .detect import parse_policy
from .errors import ConfigError, EmptyGroup, InputError, RacelikeError
from .fairness import (
    ModelManifest,
    alignment_score,
    eo_adjust,
    fairness_report,
    ftu_check,
)
from .io import (
    read_edges,
    read_groups,
    read_individuals,
    read_predictions,
    read_tracts,
    write_edges,
    write_groups,
    write_individuals,
    write_predictions,
    write_tracts,
)
from .network import assortativity, detect_network_groups, mixing_matrix
from .report import FORMAT_VERSION, RunReport
from .spatial import detect_spatial_groups, dissimilarity_for_assignment
from .synth import (
    GraphSynthConfig,
    GroupOutcomeModel,
    OutcomeSynthConfig,
    PopulationConfig,
    SpatialSynthConfig,
    TriangularScore,
    gen_homophily_graph,
    gen_outcomes,
    gen_population,
    schelling_sort,
)


def _name(path) -> str | None:
    return None if path is None else Path(path).name


def _emit(report: RunReport, out) -> None:
    text = report.to_json()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pairwise_d(ids, tracts, assignment) -> dict:
    groups = assignment.groups
    if len(groups) < 2:
        raise EmptyGroup(f"only group(s) {groups} present; dissimilarity needs two")
    return {
        f"{g0}-{g1}": dissimilarity_for_assignment(ids, tracts, assignment, g0, g1).D
        for g0, g1 in itertools.combinations(groups, 2)
    }


def cmd_detect_spatial(args) -> int:
    pop, inline_tracts = read_individuals(args.individuals)
    tracts = read_tracts(args.tracts) if args.tracts else inline_tracts
    if tracts is None:
        raise InputError("no tract assignment: pass a tracts file or a tract_id column")
    policy = parse_policy(args.threshold)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        A = detect_spatial_groups(pop, tracts, args.components, policy,
                                  weighted=args.weighted, standardize=args.standardize)
    metrics = {"groups": len(A.groups), "dissimilarity": _pairwise_d(pop.ids, tracts, A)}
    if pop.latent is not None:
        metrics["alignment"] = alignment_score(A, pop.latent)
    if args.groups_out:
        write_groups(args.groups_out, A)
    report = RunReport(
        command="detect-spatial",
        config={
            "individuals": _name(args.individuals),
            "tracts": _name(args.tracts),
            "components": args.components,
            "threshold": policy.describe(),
            "weighted": args.weighted,
            "standardize": args.standardize,
        },
        warnings=[str(w.message) for w in caught],
        metrics=metrics,
        provenance=A.provenance,
    )
    _emit(report, args.out)
    return 0


def cmd_detect_network(args) -> int:
    pop, _ = read_individuals(args.individuals)
    graph = read_edges(args.edges, pop)
    policy = parse_policy(args.threshold)
    A = detect_network_groups(graph, pop, args.components, policy, standardize=args.standardize)
    metrics = {"groups": len(A.groups), "edges": len(graph.edges),
               "assortativity": assortativity(mixing_matrix(graph, A)).as_dict()}
    if pop.latent is not None:
        metrics["alignment"] = alignment_score(A, pop.latent)
    if args.groups_out:
        write_groups(args.groups_out, A)
    report = RunReport(
        command="detect-network",
        config={
            "individuals": _name(args.individuals),
            "edges": _name(args.edges),
            "components": args.components,
            "threshold": policy.describe(),
            "standardize": args.standardize,
        },
        metrics=metrics,
        provenance=A.provenance,
    )
    _emit(report, args.out)
    return 0


def cmd_measure(args) -> int:
    if not args.tracts and not args.edges:
        raise InputError("measure needs --tracts and/or --edges")
    A = read_groups(args.groups)
    metrics = {"groups": len(A.groups)}
    if args.tracts:
        tracts = read_tracts(args.tracts)
        if args.pair:
            g0, g1 = args.pair
            metrics["dissimilarity"] = {
                f"{g0}-{g1}": dissimilarity_for_assignment(A.ids, tracts, A, g0, g1).D
            }
        else:
            metrics["dissimilarity"] = _pairwise_d(A.ids, tracts, A)
    if args.edges:
        graph = read_edges(args.edges, A.ids)
        metrics["assortativity"] = assortativity(mixing_matrix(graph, A)).as_dict()
    report = RunReport(
        command="measure",
        config={"groups": _name(args.groups), "tracts": _name(args.tracts),
                "edges": _name(args.edges), "pair": args.pair},
        metrics=metrics,
    )
    _emit(report, args.out)
    return 0


def _split_names(text: str | None) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def cmd_fairness(args) -> int:
    preds = read_predictions(args.predictions)
    A = read_groups(args.groups)
    group_of = A.group_of
    unknown = [pid for pid in preds.ids if pid not in group_of]
    if unknown:
        raise InputError(f"predictions reference ids without a group: {unknown[:5]}")
    metrics = {"before": fairness_report(preds, A)}
    if args.adjust_eo is not None:
        adj = eo_adjust(preds, A, args.adjust_eo)
        metrics["eo_adjustment"] = adj
        metrics["after"] = fairness_report(adj.predictions, A)
        if args.predictions_out:
            write_predictions(args.predictions_out, adj.predictions)
    if args.manifest is not None:
        ftu = ftu_check(ModelManifest(tuple(_split_names(args.manifest))), _split_names(args.protected))
        metrics["ftu"] = {"passed": ftu.passed, "offenders": list(ftu.offenders)}
    report = RunReport(
        command="fairness",
        config={"predictions": _name(args.predictions), "groups": _name(args.groups),
                "adjust_eo": args.adjust_eo, "manifest": args.manifest, "protected": args.protected},
        metrics=metrics,
    )
    _emit(report, args.out)
    return 0


def _per_group(text: str, groups: list[int], what: str) -> dict[int, float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"--{what} must be comma-separated numbers, got {text!r}") from None
    if len(values) == 1:
        values = values * len(groups)
    if len(values) != len(groups):
        raise ConfigError(f"--{what} needs 1 or {len(groups)} values (groups {groups}), got {len(values)}")
    return dict(zip(groups, values))


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    kind = args.kind
    if kind == "spatial":
        cfg = SpatialSynthConfig(n=args.n, k=args.k, latent_fraction=args.p, flip_noise=args.eps,
                                 tracts=args.tracts, capacity=args.capacity, tolerance=args.tau,
                                 max_iters=args.max_iters, seed=args.seed)
        pop = gen_population(cfg)
        res = schelling_sort(pop, cfg)
        out.mkdir(parents=True, exist_ok=True)
        write_individuals(out / "individuals.csv", pop, res.tracts)
        write_tracts(out / "tracts.csv", pop.ids, res.tracts)
        metrics = {"iterations": res.iterations, "converged": res.converged,
                   "latent_dissimilarity": res.dissimilarity}
        config = {"n": cfg.n, "k": cfg.k, "p": cfg.latent_fraction, "eps": cfg.flip_noise,
                  "tracts": cfg.tracts, "capacity": cfg.capacity, "tau": cfg.tolerance,
                  "max_iters": cfg.max_iters}
    elif kind == "network":
        cfg = GraphSynthConfig(n=args.n, k=args.k, latent_fraction=args.p, flip_noise=args.eps,
                               p_in=args.p_in, p_out=args.p_out, seed=args.seed)
        pop = gen_population(cfg)
        graph = gen_homophily_graph(pop, cfg)
        out.mkdir(parents=True, exist_ok=True)
        write_individuals(out / "individuals.csv", pop)
        write_edges(out / "edges.csv", graph)
        metrics = {"edges": len(graph.edges)}
        if len(graph.edges) and len(set(pop.latent.tolist())) > 1:
            metrics["latent_assortativity"] = assortativity(mixing_matrix(graph, pop.latent_assignment())).r
        config = {"n": cfg.n, "k": cfg.k, "p": cfg.latent_fraction, "eps": cfg.flip_noise,
                  "p_in": cfg.p_in, "p_out": cfg.p_out}
    else:
        if args.groups:
            A = read_groups(args.groups)
        else:
            pop = gen_population(PopulationConfig(n=args.n, k=1, latent_fraction=args.p, seed=args.seed))
            A = GroupAssignment(tuple(str(i) for i in pop.ids), pop.latent)
        groups = A.groups
        base = _per_group(args.base_rates, groups, "base-rates")
        tpr = _per_group(args.tpr, groups, "tpr")
        fpr = _per_group(args.fpr, groups, "fpr")
        models = {
            g: GroupOutcomeModel(
                base[g],
                TriangularScore.with_exceedance(args.threshold, tpr[g], args.spread),
                TriangularScore.with_exceedance(args.threshold, fpr[g], args.spread),
            )
            for g in groups
        }
        cfg = OutcomeSynthConfig(models, threshold=args.threshold, seed=args.seed)
        preds = gen_outcomes(A, cfg)
        out.mkdir(parents=True, exist_ok=True)
        write_groups(out / "groups.csv", A)
        write_predictions(out / "predictions.csv", preds)
        report = fairness_report(preds, A)
        metrics = {"dp_gap": report.dp_gap, "eo_gap": report.eo_gap}
        config = {"groups": _name(args.groups), "n": None if args.groups else args.n,
                  "base_rates": base, "tpr": tpr, "fpr": fpr,
                  "spread": args.spread, "threshold": args.threshold}
    report = RunReport(command=f"synth {kind}", config=config, seed=args.seed, metrics=metrics)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return 0


def _add_detect_flags(p) -> None:
    p.add_argument("--components", "-m", type=int, default=1, help="number of principal components")
    p.add_argument("--threshold", default="centered-zero", help="centered-zero | quantile:<q>")
    p.add_argument("--standardize", action="store_true", help="scale aggregated columns to unit variance")
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.add_argument("--groups-out", help="write discovered groups as id,group CSV")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="racelike", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"racelike {__version__} (report format {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect-spatial", help="discover groups from tract-level segregation")
    p.add_argument("individuals")
    p.add_argument("tracts", nargs="?", help="id,tract_id CSV (else the tract_id column is used)")
    p.add_argument("--weighted", action="store_true", help="weight tracts by population")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_detect_spatial)

    p = sub.add_parser("detect-network", help="discover groups from social-tie segregation")
    p.add_argument("individuals")
    p.add_argument("edges")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_detect_network)

    p = sub.add_parser("measure", help="dissimilarity and/or assortativity for given groups")
    p.add_argument("groups")
    p.add_argument("--tracts")
    p.add_argument("--edges")
    p.add_argument("--pair", nargs=2, type=int, metavar=("G0", "G1"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("fairness", help="demographic parity and equal opportunity audit")
    p.add_argument("predictions")
    p.add_argument("groups")
    p.add_argument("--adjust-eo", type=float, metavar="TOL", help="fit per-group thresholds to this TPR gap")
    p.add_argument("--predictions-out", help="write adjusted predictions CSV")
    p.add_argument("--manifest", help="comma-separated model input names for the unawareness check")
    p.add_argument("--protected", default="group", help="comma-separated protected names")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fairness)

    p = sub.add_parser("synth", help="generate synthetic segregated populations")
    p.add_argument("kind", choices=["spatial", "network", "outcomes"])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--p", type=float, default=0.5, help="latent group-1 fraction")
    p.add_argument("--eps", type=float, default=0.1, help="feature flip noise")
    p.add_argument("--tracts", type=int, default=20)
    p.add_argument("--capacity", type=int, default=150)
    p.add_argument("--tau", type=float, default=0.5, help="Schelling same-group tolerance")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--p-in", type=float, default=0.02)
    p.add_argument("--p-out", type=float, default=0.002)
    p.add_argument("--groups", help="outcomes: groups CSV (id,group or id,latent)")
    p.add_argument("--base-rates", default="0.5")
    p.add_argument("--tpr", default="0.8", help="per-group P(score > threshold | y=1)")
    p.add_argument("--fpr", default="0.2", help="per-group P(score > threshold | y=0)")
    p.add_argument("--spread", type=float, default=0.3, help="triangle half-width")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RacelikeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 2)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
