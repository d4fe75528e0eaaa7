"""Command-line front end.

Four subcommands cover the library's report paths:

* ``facets``    derive the facet inequalities of a scenario's correlation
                polytope -> facets.csv (+ facets.png)
* ``check``     decide the marginal problem for a set of context tables
                -> verdict.json plus witness.csv or certificate.csv (+ check.png)
* ``simulate``  run the triple, pair or quantum protocol
                -> records.csv, summary.json (+ simulate.png)
* ``twoslit``   evaluate the two-slit additivity deficit, optionally with
                sampled hits -> twoslit_report.csv, twoslit_summary.json,
                hits.csv (+ twoslit.png)

Exit codes: 0 success (and 'feasible'), 1 infeasible, 2 validation or usage
error, 3 capacity exceeded, 4 inconsistent marginals. Every simulation
requires an explicit --seed; all delimited outputs are byte-deterministic
for fixed inputs. Figure rendering is on by default and can be switched off
with --no-figures.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from ._jsonio import dump_json_file
from ._rational import as_fraction
from .errors import (
    EXIT_INCONSISTENT,
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_VALIDATION,
    BoolekitError,
    ValidationError,
)
from .feasibility import (
    STATUS_FEASIBLE,
    STATUS_INCONSISTENT,
    ContextMarginal,
    JointDistribution,
    correlations_to_marginals,
    joint_from_full_context,
    load_marginal_problem,
    outcome_string,
    outcome_tuples,
)
from .polytope import CorrelationPoint, derive_facets, format_inequality, write_facets_csv
from .rng import ALGORITHM, check_seed
from .scenario import cycle_scenario, load_scenario, scenario_to_dict, triple_scenario
from .simulator import (
    PROTOCOL_PAIR,
    PROTOCOL_QUANTUM,
    PROTOCOL_TRIPLE,
    PairProtocolConfig,
    QuantumTwoLevelModel,
    estimates_to_jsonable,
    lg_statistic,
    run_pair_protocol,
    run_quantum_pair_protocol,
    run_triple_protocol,
    write_records_csv,
)
from .two_slit import (
    additivity_report,
    build_contexts,
    default_geometry,
    geometry_to_dict,
    load_geometry,
    sample_screen_hits,
    write_report_csv,
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved invocation parameters, echoed verbatim into summaries."""

    command: str
    scenario_path: str | None = None
    marginals_path: str | None = None
    geometry_path: str | None = None
    protocol: str | None = None
    runs: int | None = None
    seed: int | None = None
    omega_tau: float | None = None
    threads: int = 1
    tolerance: str | None = None
    out_dir: str = "."


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _metadata() -> dict:
    return {
        "tool": f"boolekit {__version__}",
        "rng": ALGORITHM,
        "timestamp": _utc_now(),
    }


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args) -> int:
    return check_seed(args.seed)


def _maybe_figures(args, render) -> list[str]:
    if not args.figures:
        return []
    from . import report as _report

    return render(_report)


def cmd_facets(args) -> int:
    scenario = load_scenario(args.scenario)
    facets = derive_facets(scenario)
    out = _out_dir(args)
    write_facets_csv(scenario, facets, out / "facets.csv")
    correlator_only = [
        f for f in facets if all(c == 0 for c in f.single_coeffs)
    ]
    print(f"scenario: {len(scenario.labels)} observables, {len(scenario.contexts)} contexts")
    print(f"facets: {len(facets)} total, {len(correlator_only)} correlator-only")
    for ineq in facets:
        print("  " + format_inequality(ineq, scenario))
    def render(rep):
        rep.save_figure(rep.facet_heatmap(scenario, facets), out / "facets.png")
        return ["facets.png"]

    figures = _maybe_figures(args, render)
    summary = {
        "command": "facets",
        "config": asdict(_facets_config(args)),
        "results": {
            "facet_count": len(facets),
            "correlator_only_count": len(correlator_only),
            "facets": [format_inequality(f, scenario) for f in facets],
        },
        "files": ["facets.csv"] + figures,
        "metadata": _metadata(),
    }
    dump_json_file(out / "facets_summary.json", summary)
    print(f"wrote {out / 'facets.csv'}")
    return EXIT_OK


def _facets_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        command="facets",
        scenario_path=str(args.scenario),
        threads=args.threads,
        out_dir=str(args.out),
    )


def cmd_check(args) -> int:
    from .feasibility import joint_exists

    scenario, marginals = load_marginal_problem(args.marginals)
    tol = as_fraction(args.tolerance) if args.tolerance is not None else Fraction(0)
    verdict = joint_exists(scenario, marginals, consistency_tolerance=tol)
    out = _out_dir(args)

    files = []
    results: dict = {
        "status": verdict.status,
        "max_discrepancy": str(verdict.consistency.max_discrepancy),
    }
    print(f"status: {verdict.status}")
    if verdict.witness is not None:
        path = out / "witness.csv"
        _write_witness_csv(verdict.witness, path)
        files.append("witness.csv")
        results["witness_support"] = sum(1 for w in verdict.witness.weights if w > 0)
        print(f"witness written to {path}")
    if verdict.certificate is not None:
        path = out / "certificate.csv"
        _write_certificate_csv(scenario, verdict, path)
        files.append("certificate.csv")
        value = verdict.certificate.value_on_tables(scenario, marginals)
        results["certificate_value_on_input"] = str(value)
        print(f"certificate value on input: {value} (< 0)")
        if verdict.certificate_inequality is not None:
            text = format_inequality(verdict.certificate_inequality, scenario)
            results["certificate_inequality"] = text
            print(f"violated inequality: {text}")
        print(f"certificate written to {path}")
    if verdict.status == STATUS_INCONSISTENT:
        worst = max(
            verdict.consistency.overlaps,
            key=lambda o: o.discrepancy,
            default=None,
        )
        if worst is not None:
            results["worst_overlap"] = {
                "contexts": [worst.context_a, worst.context_b],
                "shared": list(worst.shared),
                "discrepancy": str(worst.discrepancy),
            }
            print(
                f"overlap between contexts {worst.context_a} and {worst.context_b} "
                f"disagrees by {worst.discrepancy}"
            )

    def render(rep):
        rep.save_figure(rep.verdict_figure(scenario, verdict), out / "check.png")
        return ["check.png"]

    figures = _maybe_figures(args, render)
    summary = {
        "command": "check",
        "config": asdict(
            ExperimentConfig(
                command="check",
                marginals_path=str(args.marginals),
                tolerance=str(tol),
                threads=args.threads,
                out_dir=str(args.out),
            )
        ),
        "results": results,
        "files": files + figures,
        "metadata": _metadata(),
    }
    dump_json_file(out / "verdict.json", summary)
    if verdict.status == STATUS_FEASIBLE:
        return EXIT_OK
    if verdict.status == STATUS_INCONSISTENT:
        return EXIT_INCONSISTENT
    return EXIT_INFEASIBLE


def _write_witness_csv(witness: JointDistribution, path: Path) -> None:
    n = witness.scenario.n
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["assignment", "weight"])
        for mask, w in enumerate(witness.weights):
            label = "".join(
                "+" if (mask >> (n - 1 - i)) & 1 == 0 else "-" for i in range(n)
            )
            writer.writerow([label, str(w)])


def _write_certificate_csv(scenario, verdict, path: Path) -> None:
    cert = verdict.certificate
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["term", "coefficient"])
        writer.writerow(["constant", str(cert.constant)])
        for (cid, out), coef in sorted(cert.coefficients.items()):
            writer.writerow([f"context{cid}:{outcome_string(out)}", str(coef)])


def _triple_inputs(args):
    if args.marginals:
        scenario, marginals = load_marginal_problem(args.marginals)
        if len(marginals) != 1:
            raise ValidationError("triple protocol takes exactly one context table")
        return joint_from_full_context(scenario, marginals[0])
    return JointDistribution.uniform(triple_scenario())


def _pair_inputs(args):
    if args.marginals:
        scenario, marginals = load_marginal_problem(args.marginals)
        return PairProtocolConfig(scenario, tuple(marginals))
    scenario = cycle_scenario()
    zero = CorrelationPoint.from_values(
        [0, 0, 0], {(0, 1): 0, (0, 2): 0, (1, 2): 0}
    )
    return PairProtocolConfig(
        scenario, tuple(correlations_to_marginals(scenario, zero))
    )


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    seed = _seed(args)
    runs = args.runs
    protocol = args.protocol
    results: dict = {}

    if protocol == PROTOCOL_TRIPLE:
        joint = _triple_inputs(args)
        result = run_triple_protocol(joint, runs, seed, threads=args.threads)
        scenario = joint.scenario
        estimates = result.estimates
        results["summary"] = {
            "min_statistic": result.summary.min_statistic,
            "histogram": {str(k): v for k, v in sorted(result.summary.histogram.items())},
            "lg_statistic": str(result.summary.lg_statistic),
            "lg_statistic_float": float(result.summary.lg_statistic),
        }
    elif protocol == PROTOCOL_PAIR:
        config = _pair_inputs(args)
        result = run_pair_protocol(config, runs, seed, threads=args.threads)
        scenario = config.scenario
        estimates = result.estimates
    elif protocol == PROTOCOL_QUANTUM:
        if args.omega_tau is None:
            raise ValidationError("simulate quantum requires --omega-tau")
        model = QuantumTwoLevelModel.equal_spacing(args.omega_tau)
        result = run_quantum_pair_protocol(model, runs, seed, threads=args.threads)
        scenario = cycle_scenario()
        estimates = result.estimates
        results["model"] = {
            "omega": model.omega,
            "times": list(model.times),
            "predicted_correlators": {
                f"K{i}{j}": math.cos(
                    model.omega * (model.times[j - 1] - model.times[i - 1])
                )
                for i, j in ((1, 2), (1, 3), (2, 3))
            },
        }
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown protocol {protocol!r}")

    write_records_csv(result.records, out / "records.csv")
    results["estimates"] = estimates_to_jsonable(estimates, scenario)
    try:
        statistic = lg_statistic(estimates)
        results["lg_statistic"] = float(statistic)
    except BoolekitError:
        statistic = None

    def render(rep):
        made = []
        if protocol == PROTOCOL_TRIPLE:
            rep.save_figure(
                rep.triple_histogram(result.summary, runs), out / "simulate.png"
            )
        else:
            rep.save_figure(
                rep.estimates_figure(
                    scenario, estimates, statistic=statistic, bound=-1
                ),
                out / "simulate.png",
            )
        made.append("simulate.png")
        return made

    figures = _maybe_figures(args, render)
    config = ExperimentConfig(
        command="simulate",
        protocol=protocol,
        marginals_path=str(args.marginals) if args.marginals else None,
        runs=runs,
        seed=seed,
        omega_tau=args.omega_tau,
        threads=args.threads,
        out_dir=str(args.out),
    )
    summary = {
        "command": "simulate",
        "config": asdict(config),
        "scenario": scenario_to_dict(scenario),
        "results": results,
        "files": ["records.csv"] + figures,
        "metadata": _metadata(),
    }
    dump_json_file(out / "summary.json", summary)
    print(f"{protocol} protocol: {runs} runs, seed {seed}")
    if statistic is not None:
        print(f"correlator sum: {float(statistic):+.6f}")
    if protocol == PROTOCOL_TRIPLE:
        print(
            f"average statistic {float(result.summary.lg_statistic):+.6f} "
            f"(exact {result.summary.lg_statistic}), min {result.summary.min_statistic}"
        )
    print(f"wrote {out / 'records.csv'} and {out / 'summary.json'}")
    return EXIT_OK


def cmd_twoslit(args) -> int:
    out = _out_dir(args)
    geometry = load_geometry(args.geometry) if args.geometry else default_geometry()
    contexts = build_contexts(geometry)
    tol = float(args.tolerance) if args.tolerance is not None else 1e-9
    report = additivity_report(*contexts, tolerance=tol)
    write_report_csv(report, contexts, out / "twoslit_report.csv")

    counts = None
    files = ["twoslit_report.csv"]
    if args.runs is not None:
        if args.seed is None:
            raise ValidationError("sampling (--runs) requires --seed")
        counts = sample_screen_hits(
            contexts[2], args.runs, check_seed(args.seed), threads=args.threads
        )
        hits = out / "hits.csv"
        with hits.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["s", "count"])
            for s, c in zip(report.positions.tolist(), counts.tolist()):
                writer.writerow([repr(s), int(c)])
        files.append("hits.csv")

    def render(rep):
        rep.save_figure(
            rep.interference_figure(report, contexts, counts=counts, runs=args.runs),
            out / "twoslit.png",
        )
        return ["twoslit.png"]

    figures = _maybe_figures(args, render)
    summary = {
        "command": "twoslit",
        "config": asdict(
            ExperimentConfig(
                command="twoslit",
                geometry_path=str(args.geometry) if args.geometry else None,
                runs=args.runs,
                seed=args.seed,
                threads=args.threads,
                tolerance=repr(tol),
                out_dir=str(args.out),
            )
        ),
        "geometry": geometry_to_dict(geometry),
        "results": {
            "classical_additive": report.classical_additive,
            "max_abs_deficit": report.max_abs_deficit,
            "deficit_sum": float(report.deficits.sum()),
            "bins": geometry.bins,
        },
        "files": files + figures,
        "metadata": _metadata(),
    }
    dump_json_file(out / "twoslit_summary.json", summary)
    print(
        f"classical additivity: {report.classical_additive} "
        f"(max |deficit| = {report.max_abs_deficit:.6g}, tolerance {tol:g})"
    )
    print(f"wrote {out / 'twoslit_report.csv'}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    parser.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="render PNG figures next to the delimited output",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boolekit",
        description=(
            "Correlation polytopes, the marginal problem, measurement-protocol "
            "simulation, and two-slit additivity reports."
        ),
    )
    parser.add_argument("--version", action="version", version=f"boolekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("facets", help="derive facet inequalities of a scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_facets)

    p = sub.add_parser("check", help="decide whether a joint distribution exists")
    p.add_argument("--marginals", required=True, help="marginal-problem JSON file")
    p.add_argument(
        "--tolerance",
        default=None,
        help="consistency tolerance as a rational or decimal string (default 0, exact)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run a measurement protocol")
    p.add_argument(
        "protocol", choices=(PROTOCOL_TRIPLE, PROTOCOL_PAIR, PROTOCOL_QUANTUM)
    )
    p.add_argument("--marginals", default=None, help="input tables (JSON); default: uniform")
    p.add_argument("--runs", type=int, required=True, help="number of simulated runs")
    p.add_argument("--seed", type=int, required=True, help="64-bit experiment seed")
    p.add_argument(
        "--omega-tau",
        type=float,
        default=None,
        help="phase advanced between consecutive measurements (quantum protocol)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("twoslit", help="two-slit additivity report")
    p.add_argument("--geometry", default=None, help="geometry JSON file (default: built-in)")
    p.add_argument("--runs", type=int, default=None, help="sample this many hits from the both-open context")
    p.add_argument("--seed", type=int, default=None, help="64-bit experiment seed (required with --runs)")
    p.add_argument(
        "--tolerance",
        default=None,
        help="additivity tolerance (default 1e-9)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_twoslit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BoolekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
