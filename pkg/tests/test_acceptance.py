"""End-to-end acceptance checks.

Each test prints one CRITERION line (run with ``pytest -s`` to see them on
passing runs) and asserts every quantitative target at its stated tolerance,
including the runtime budget of the criterion it covers.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np

from boolekit.feasibility import (
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    JointDistribution,
    correlations_to_marginals,
    joint_exists,
)
from boolekit.polytope import CorrelationPoint, derive_facets, enumerate_vertices
from boolekit.rng import uniform01
from boolekit.scenario import cycle_scenario, save_scenario, triple_scenario
from boolekit.simulator import (
    PairProtocolConfig,
    QuantumTwoLevelModel,
    lg_statistic,
    quantum_pair_correlator,
    run_pair_protocol,
    run_quantum_pair_protocol,
    run_triple_protocol,
)
from boolekit.two_slit import (
    additivity_report,
    build_contexts,
    default_geometry,
    sample_screen_hits,
)

import random as _random

from oracles import (
    canonical_tuple,
    glue_joint,
    hull_facets,
    project_all,
    random_acyclic_scenario,
    random_joint,
)

F = Fraction


def _finish(n: int, checks: list, elapsed: float, budget: float | None = None) -> None:
    failures = [msg for ok, msg in checks if not ok]
    ok = not failures and (budget is None or elapsed < budget)
    detail = f"{len(checks)} checks, {elapsed:.2f}s"
    if budget is not None:
        detail += f" of {budget:g}s budget"
    print(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert not failures, f"criterion {n}: " + "; ".join(failures)
    if budget is not None:
        assert elapsed < budget, f"criterion {n} took {elapsed:.2f}s (budget {budget:g}s)"


def _zero_singles(k12, k13, k23) -> CorrelationPoint:
    return CorrelationPoint.from_values(
        [0, 0, 0], {(0, 1): k12, (0, 2): k13, (1, 2): k23}
    )


def test_criterion_1_per_run_statistic_bound():
    t0 = time.perf_counter()
    checks = []

    support = {
        q1 * q2 + q1 * q3 + q2 * q3
        for q1, q2, q3 in itertools.product((1, -1), repeat=3)
    }
    checks.append((support == {-1, 3}, f"brute-force support {support} != {{-1, 3}}"))

    joint = JointDistribution.uniform(triple_scenario())
    for seed in (1, 2, 3, 4, 5):
        result = run_triple_protocol(joint, 10**6, seed, threads=4)
        checks.append(
            (result.summary.min_statistic >= -1,
             f"seed {seed}: per-run minimum {result.summary.min_statistic} < -1")
        )
        checks.append(
            (set(result.summary.histogram) <= {-1, 3},
             f"seed {seed}: histogram support {set(result.summary.histogram)}")
        )
        exact = result.summary.lg_statistic
        checks.append(
            (isinstance(exact, Fraction) and exact >= F(-1),
             f"seed {seed}: averaged statistic {exact} not exactly >= -1")
        )

    _finish(1, checks, time.perf_counter() - t0, budget=10.0)


def test_criterion_2_cycle_facet_recovery():
    t0 = time.perf_counter()
    checks = []
    s = cycle_scenario()
    facets = derive_facets(s)

    correlator_only = {
        f.pair_coeffs for f in facets
        if all(c == 0 for c in f.single_coeffs)
    }
    expected = set()
    for signs in itertools.product((1, -1), repeat=3):
        if signs.count(-1) % 2 == 0:
            expected.add(tuple(F(v) for v in signs))
    checks.append(
        (correlator_only == expected,
         f"correlator facets {sorted(correlator_only)} != four even-minus patterns")
    )
    symmetric = [
        f for f in facets
        if all(c == 0 for c in f.single_coeffs)
        and f.pair_coeffs == (F(1), F(1), F(1))
    ]
    checks.append(
        (len(symmetric) == 1 and symmetric[0].constant == 1,
         "the symmetric bound 1 + K12 + K13 + K23 >= 0 is missing")
    )
    checks.append(
        (all(f.constant == 1 for f in facets if f.pair_coeffs in expected
             and all(c == 0 for c in f.single_coeffs)),
         "a correlator facet has the wrong constant")
    )

    vertices = [p.coordinate_vector() for p in enumerate_vertices(s)]
    derived = {canonical_tuple(f.coefficient_vector()) for f in facets}
    oracle = hull_facets(vertices)
    checks.append(
        (derived == oracle,
         f"derived facet set ({len(derived)}) differs from hull oracle ({len(oracle)})")
    )

    _finish(2, checks, time.perf_counter() - t0, budget=5.0)


def test_criterion_3_feasibility_matches_facets():
    t0 = time.perf_counter()
    checks = []
    s = cycle_scenario()
    vertex_masks = list(range(8))

    u = uniform01(2026, np.arange(3000, dtype=np.uint64))
    coords = (2.0 * u - 1.0).reshape(1000, 3)
    disagreements = 0
    witness_failures = 0
    certificate_failures = 0
    feasible_count = 0
    for k12, k13, k23 in coords.tolist():
        point = _zero_singles(k12, k13, k23)
        marginals = correlations_to_marginals(s, point)
        verdict = joint_exists(s, marginals)
        a, b, c = (F(v) for v in (k12, k13, k23))
        inside = (
            1 + a + b + c >= 0
            and 1 + a - b - c >= 0
            and 1 - a + b - c >= 0
            and 1 - a - b + c >= 0
        )
        if (verdict.status == STATUS_FEASIBLE) != inside:
            disagreements += 1
            continue
        if verdict.status == STATUS_FEASIBLE:
            feasible_count += 1
            by_id = {m.context_id: dict(m.table) for m in marginals}
            for ctx in s.contexts:
                if verdict.witness.project(ctx).table != by_id[ctx.id]:
                    witness_failures += 1
        else:
            cert = verdict.certificate
            if not all(
                cert.value_on_assignment(s, mask) >= 0 for mask in vertex_masks
            ) or not cert.value_on_tables(s, marginals) < 0:
                certificate_failures += 1

    checks.append((disagreements == 0, f"{disagreements} facet/solver disagreements"))
    checks.append((witness_failures == 0, f"{witness_failures} witnesses off"))
    checks.append(
        (certificate_failures == 0, f"{certificate_failures} certificates off")
    )
    checks.append(
        (0 < feasible_count < 1000,
         f"degenerate sample: {feasible_count}/1000 feasible")
    )

    _finish(3, checks, time.perf_counter() - t0, budget=30.0)


def test_criterion_4_disjoint_subensembles_reach_minus_three():
    t0 = time.perf_counter()
    checks = []
    s = cycle_scenario()
    config = PairProtocolConfig.from_point(s, _zero_singles(-1, -1, -1))
    result = run_pair_protocol(config, 3 * 10**6, seed=2026, threads=4)
    for key, est in sorted(result.estimates.pairs.items()):
        checks.append(
            (est.count == 10**6, f"pair {key} got {est.count} runs, wanted 10^6")
        )
    total = lg_statistic(result.estimates)
    checks.append((total <= -2.99, f"estimated correlator sum {total} > -2.99"))

    _finish(4, checks, time.perf_counter() - t0, budget=20.0)


def test_criterion_5_two_level_model_violation():
    t0 = time.perf_counter()
    checks = []

    rnd = _random.Random(2026)
    worst = 0.0
    for _ in range(100):
        omega = rnd.uniform(-10, 10)
        t1 = rnd.uniform(0.05, 2.0)
        t2 = t1 + rnd.uniform(0.05, 2.0)
        t3 = t2 + rnd.uniform(0.05, 2.0)
        model = QuantumTwoLevelModel(
            omega=omega, times=(t1, t2, t3),
            preparation_angle=rnd.uniform(0.0, 2.0 * math.pi),
        )
        for i, j in ((1, 2), (1, 3), (2, 3)):
            dt = model.times[j - 1] - model.times[i - 1]
            worst = max(
                worst,
                abs(quantum_pair_correlator(model, i, j) - math.cos(omega * dt)),
            )
    checks.append((worst <= 1e-12, f"correlator deviates from cosine by {worst:.3e}"))

    exact_point = _zero_singles(F(-1, 2), F(-1, 2), F(-1, 2))
    exact_sum = lg_statistic(exact_point)
    checks.append((exact_sum == F(-3, 2), f"exact correlator sum {exact_sum} != -3/2"))

    model = QuantumTwoLevelModel.equal_spacing(2.0 * math.pi / 3.0)
    sampled = lg_statistic(
        run_quantum_pair_protocol(model, 10**6, seed=2026, threads=4).estimates
    )
    checks.append(
        (abs(sampled - (-1.5)) <= 0.01,
         f"sampled correlator sum {sampled:+.5f} misses -1.5 by more than 0.01")
    )

    s = cycle_scenario()
    marginals = correlations_to_marginals(s, exact_point)
    verdict = joint_exists(s, marginals)
    cert_ok = (
        verdict.status == STATUS_INFEASIBLE
        and verdict.certificate is not None
        and all(verdict.certificate.value_on_assignment(s, m) >= 0 for m in range(8))
        and verdict.certificate.value_on_tables(s, marginals) < 0
    )
    checks.append((cert_ok, f"exact point not certified infeasible ({verdict.status})"))

    _finish(5, checks, time.perf_counter() - t0, budget=20.0)


def test_criterion_6_acyclic_families_always_extend():
    t0 = time.perf_counter()
    checks = []
    infeasible = 0
    witness_failures = 0
    glue_failures = 0
    sizes = set()
    for seed in range(500):
        rnd = _random.Random(seed)
        scenario, order = random_acyclic_scenario(rnd, max_observables=6)
        sizes.add(scenario.n)
        joint = random_joint(rnd, scenario)
        marginals = project_all(joint)
        verdict = joint_exists(scenario, marginals)
        if verdict.status != STATUS_FEASIBLE:
            infeasible += 1
            continue
        by_id = {m.context_id: dict(m.table) for m in marginals}
        for ctx in scenario.contexts:
            if verdict.witness.project(ctx).table != by_id[ctx.id]:
                witness_failures += 1
        glued = glue_joint(scenario, marginals, order)
        for ctx in scenario.contexts:
            if glued.project(ctx).table != by_id[ctx.id]:
                glue_failures += 1

    checks.append((infeasible == 0, f"{infeasible}/500 acyclic cases came back infeasible"))
    checks.append((witness_failures == 0, f"{witness_failures} witness mismatches"))
    checks.append((glue_failures == 0, f"{glue_failures} glued-joint mismatches"))
    checks.append((max(sizes) == 6, f"generator never reached 6 observables: {sorted(sizes)}"))

    _finish(6, checks, time.perf_counter() - t0, budget=60.0)


def test_criterion_7_interference_additivity_deficit():
    t0 = time.perf_counter()
    checks = []
    geometry = default_geometry()
    contexts = build_contexts(geometry)
    report = additivity_report(*contexts)

    checks.append((not report.classical_additive, "pattern flagged as additive"))
    checks.append(
        (report.max_abs_deficit > 0.01,
         f"max |deficit| {report.max_abs_deficit:.4f} <= 0.01")
    )
    zero_sum = abs(float(report.deficits.sum()))
    checks.append((zero_sum <= 1e-12, f"deficits sum to {zero_sum:.2e}"))

    counts = sample_screen_hits(contexts[2], 10**6, seed=2026)
    s = geometry.positions
    first_null = geometry.wavelength * geometry.screen_distance / (2 * geometry.separation)
    null_idx = int(np.where(s == first_null)[0][0])
    peak_idx = int(np.argmax(counts))
    checks.append(
        (counts[null_idx] < 0.001 * counts[peak_idx],
         f"null bin holds {counts[null_idx]} hits vs peak {counts[peak_idx]}")
    )

    _finish(7, checks, time.perf_counter() - t0, budget=10.0)


def test_criterion_8_byte_identical_cli_outputs(tmp_path):
    from boolekit.cli import main
    from boolekit.feasibility import save_marginal_problem

    t0 = time.perf_counter()
    checks = []
    s = cycle_scenario()
    scenario_path = tmp_path / "scenario.json"
    save_scenario(s, scenario_path)
    feasible_path = tmp_path / "feasible.json"
    save_marginal_problem(
        s, correlations_to_marginals(s, _zero_singles(0, 0, 0)), feasible_path
    )
    infeasible_path = tmp_path / "infeasible.json"
    save_marginal_problem(
        s, correlations_to_marginals(s, _zero_singles(-1, -1, -1)), infeasible_path
    )

    invocations = [
        ("facets", ["facets", "--scenario", str(scenario_path)], ["facets.csv"]),
        ("check-yes", ["check", "--marginals", str(feasible_path)], ["witness.csv"]),
        ("check-no", ["check", "--marginals", str(infeasible_path)], ["certificate.csv"]),
        ("triple", ["simulate", "triple", "--runs", "100000", "--seed", "8"],
         ["records.csv"]),
        ("pair", ["simulate", "pair", "--runs", "90000", "--seed", "9"],
         ["records.csv"]),
        ("quantum", ["simulate", "quantum", "--omega-tau", "2.0943951023931953",
                     "--runs", "90000", "--seed", "10"], ["records.csv"]),
        ("twoslit", ["twoslit", "--runs", "100000", "--seed", "11"],
         ["twoslit_report.csv", "hits.csv"]),
    ]
    for name, argv, csv_names in invocations:
        blobs = []
        for attempt in ("first", "second"):
            out = tmp_path / f"{name}-{attempt}"
            code = main(argv + ["--out", str(out), "--no-figures"])
            expected = 1 if name == "check-no" else 0
            checks.append(
                (code == expected, f"{name}/{attempt} exited {code}, wanted {expected}")
            )
            blobs.append(tuple((out / c).read_bytes() for c in csv_names))
        checks.append(
            (blobs[0] == blobs[1], f"{name}: CSV bytes differ between invocations")
        )

    _finish(8, checks, time.perf_counter() - t0)
