import json
import random
from fractions import Fraction

import pytest

from boolekit.errors import DomainError, ShapeError, ValidationError
from boolekit.feasibility import (
    STATUS_FEASIBLE,
    STATUS_INCONSISTENT,
    STATUS_INFEASIBLE,
    ContextMarginal,
    JointDistribution,
    check_consistency,
    context_marginal,
    correlations_to_marginals,
    joint_exists,
    joint_from_full_context,
    load_marginal_problem,
    marginal_problem_from_dict,
    marginals_to_dict,
    outcome_string,
    parse_outcome_string,
    save_marginal_problem,
)
from boolekit.polytope import CorrelationPoint, enumerate_vertices, evaluate
from boolekit.scenario import build_scenario, cycle_scenario, triple_scenario

from oracles import glue_joint, project_all, random_acyclic_scenario, random_joint

F = Fraction


def zero_singles_point(k12, k13, k23):
    return CorrelationPoint.from_values(
        [0, 0, 0], {(0, 1): k12, (0, 2): k13, (1, 2): k23}
    )


def uniform_pair_table(cid):
    return context_marginal(cid, {"++": "1/4", "+-": "1/4", "-+": "1/4", "--": "1/4"})


def test_outcome_helpers():
    assert outcome_string((1, -1)) == "+-"
    assert parse_outcome_string("-+") == (-1, 1)
    with pytest.raises(ValidationError):
        parse_outcome_string("+x")


def test_context_marginal_validation():
    s = cycle_scenario()
    ctx = s.contexts[0]
    with pytest.raises(ShapeError):
        # wrong table size
        from boolekit.feasibility import validate_marginal

        validate_marginal(context_marginal(0, {"++": 1}), ctx)
    with pytest.raises(ValidationError):
        from boolekit.feasibility import validate_marginal

        validate_marginal(
            context_marginal(0, {"++": "2", "+-": "-1", "-+": "0", "--": "0"}), ctx
        )


def test_correlations_to_marginals_formula():
    s = build_scenario(["A", "B"], [[0, 1]])
    # zero singles, K = 1: perfectly correlated
    m = correlations_to_marginals(
        s, CorrelationPoint.from_values([0, 0], {(0, 1): 1})
    )[0]
    assert m.table == {(1, 1): F(1, 2), (1, -1): F(0), (-1, 1): F(0), (-1, -1): F(1, 2)}
    # zero singles, K = 0: uniform
    m = correlations_to_marginals(
        s, CorrelationPoint.from_values([0, 0], {(0, 1): 0})
    )[0]
    assert set(m.table.values()) == {F(1, 4)}
    # singles (1, 0), K = 0: direct substitution into (1 + a<A> + b<B> + abK)/4
    m = correlations_to_marginals(
        s, CorrelationPoint.from_values([1, 0], {(0, 1): 0})
    )[0]
    assert m.table == {(1, 1): F(1, 2), (1, -1): F(1, 2), (-1, 1): F(0), (-1, -1): F(0)}


def test_correlations_to_marginals_domain_error_names_context():
    s = cycle_scenario()
    bad = CorrelationPoint.from_values(
        [1, 1, 0], {(0, 1): -1, (0, 2): 0, (1, 2): 0}
    )
    with pytest.raises(DomainError, match="context 0"):
        correlations_to_marginals(s, bad)


def test_check_consistency_agreeing_tables():
    s = cycle_scenario()
    marginals = [uniform_pair_table(i) for i in range(3)]
    report = check_consistency(s, marginals)
    assert report.consistent
    assert report.max_discrepancy == 0
    assert len(report.overlaps) == 3


def test_check_consistency_contradicting_singles():
    s = cycle_scenario()
    # context 0 says <Q1> = +1, context 1 says <Q1> = -1
    marginals = [
        context_marginal(0, {"++": "1/2", "+-": "1/2", "-+": "0", "--": "0"}),
        context_marginal(1, {"++": "0", "+-": "0", "-+": "1/2", "--": "1/2"}),
        uniform_pair_table(2),
    ]
    report = check_consistency(s, marginals)
    assert not report.consistent
    assert report.max_discrepancy == 1
    verdict = joint_exists(s, marginals)
    assert verdict.status == STATUS_INCONSISTENT
    assert verdict.witness is None and verdict.certificate is None


def test_check_consistency_missing_and_extra_tables():
    s = cycle_scenario()
    with pytest.raises(ShapeError, match="no table"):
        check_consistency(s, [uniform_pair_table(0)])
    with pytest.raises(ShapeError, match="two tables"):
        check_consistency(s, [uniform_pair_table(0)] * 2 + [uniform_pair_table(i) for i in (1, 2)])


def test_anticorrelated_cycle_is_infeasible_with_verified_certificate():
    s = cycle_scenario()
    marginals = correlations_to_marginals(s, zero_singles_point(-1, -1, -1))
    verdict = joint_exists(s, marginals)
    assert verdict.status == STATUS_INFEASIBLE
    cert = verdict.certificate
    for mask in range(8):
        assert cert.value_on_assignment(s, mask) >= 0
    assert cert.value_on_tables(s, marginals) < 0
    # the singles/pairs form evaluates identically on every vertex
    ineq = verdict.certificate_inequality
    assert ineq is not None
    assert evaluate(ineq, zero_singles_point(-1, -1, -1)) < 0
    for mask, p in enumerate(enumerate_vertices(s)):
        lhs = evaluate(ineq, p)
        assert lhs >= 0


def test_uniform_cycle_is_feasible_with_exact_witness():
    s = cycle_scenario()
    marginals = [uniform_pair_table(i) for i in range(3)]
    verdict = joint_exists(s, marginals)
    assert verdict.status == STATUS_FEASIBLE
    witness = verdict.witness
    assert sum(witness.weights, F(0)) == 1
    for ctx in s.contexts:
        assert witness.project(ctx).table == dict(uniform_pair_table(ctx.id).table)
    # the uniform joint reproduces the same tables, so it is also a witness
    uniform = JointDistribution.uniform(s)
    for ctx in s.contexts:
        assert uniform.project(ctx).table == dict(uniform_pair_table(ctx.id).table)


def test_feasibility_matches_facet_conjunction_on_correlator_axis():
    s = cycle_scenario()
    # K12 = K13 = K23 = k is feasible exactly for k >= -1/3 (triangle facet)
    for num in range(-12, 13):
        k = F(num, 12)
        point = zero_singles_point(k, k, k)
        verdict = joint_exists(s, correlations_to_marginals(s, point))
        expect = STATUS_FEASIBLE if 1 + 3 * k >= 0 else STATUS_INFEASIBLE
        assert verdict.status == expect, (k, verdict.status)


def test_boundary_point_is_feasible():
    s = cycle_scenario()
    point = zero_singles_point(F(-1, 3), F(-1, 3), F(-1, 3))
    assert joint_exists(s, correlations_to_marginals(s, point)).status == STATUS_FEASIBLE


def test_acyclic_chain_always_feasible_and_glue_oracle_agrees():
    s = build_scenario(["Q1", "Q2", "Q3"], [[0, 1], [1, 2]])
    # strongly correlated but acyclic: no obstruction possible
    m01 = context_marginal(0, {"++": "1/2", "+-": "0", "-+": "0", "--": "1/2"})
    m12 = context_marginal(1, {"++": "0", "+-": "1/2", "-+": "1/2", "--": "0"})
    verdict = joint_exists(s, [m01, m12])
    assert verdict.status == STATUS_FEASIBLE
    glued = glue_joint(s, [m01, m12], [0, 1])
    for ctx, marg in zip(s.contexts, (m01, m12)):
        assert glued.project(ctx).table == dict(marg.table)


def test_random_acyclic_scenarios_feasible_with_glue_roundtrip():
    for seed in range(60):
        rnd = random.Random(seed)
        scenario, order = random_acyclic_scenario(rnd)
        joint = random_joint(rnd, scenario)
        marginals = project_all(joint)
        verdict = joint_exists(scenario, marginals)
        assert verdict.status == STATUS_FEASIBLE, (seed, scenario)
        for ctx in scenario.contexts:
            assert verdict.witness.project(ctx).table == dict(
                joint.project(ctx).table
            )
        glued = glue_joint(scenario, marginals, order)
        for ctx in scenario.contexts:
            assert glued.project(ctx).table == dict(joint.project(ctx).table)


def test_dropping_a_context_preserves_feasibility():
    rnd = random.Random(123)
    s = cycle_scenario()
    for trial in range(30):
        point = zero_singles_point(
            F(rnd.randint(-4, 4), 4), F(rnd.randint(-4, 4), 4), F(rnd.randint(-4, 4), 4)
        )
        marginals = correlations_to_marginals(s, point)
        before = joint_exists(s, marginals).status
        drop = rnd.randrange(3)
        keep = [c for c in range(3) if c != drop]
        sub = build_scenario(
            ["Q1", "Q2", "Q3"], [list(s.contexts[c].members) for c in keep]
        )
        sub_marginals = [
            ContextMarginal(new_id, marginals[old].table)
            for new_id, old in enumerate(keep)
        ]
        after = joint_exists(sub, sub_marginals).status
        if before == STATUS_FEASIBLE:
            assert after == STATUS_FEASIBLE


def test_infeasible_certificate_random_points():
    rnd = random.Random(99)
    s = cycle_scenario()
    found_infeasible = 0
    for _ in range(40):
        point = zero_singles_point(
            F(rnd.randint(-8, 8), 8), F(rnd.randint(-8, 8), 8), F(rnd.randint(-8, 8), 8)
        )
        marginals = correlations_to_marginals(s, point)
        verdict = joint_exists(s, marginals)
        if verdict.status != STATUS_INFEASIBLE:
            continue
        found_infeasible += 1
        for mask in range(8):
            assert verdict.certificate.value_on_assignment(s, mask) >= 0
        assert verdict.certificate.value_on_tables(s, marginals) < 0
        assert evaluate(verdict.certificate_inequality, point) < 0
    assert found_infeasible > 0


def test_tolerated_overlap_disagreement_yields_certificate_without_inequality():
    """With a loose consistency tolerance, contradictory-but-close tables
    reach the exact solver and come back infeasible. The certificate then
    lives purely in marginal coordinates: its singles/pairs expansion
    cancels, so no violated inequality is attached."""
    s = cycle_scenario()
    marginals = [
        context_marginal(
            0, {"++": "251/1000", "+-": "249/1000", "-+": "1/4", "--": "1/4"}
        ),
        uniform_pair_table(1),
        uniform_pair_table(2),
    ]
    strict = joint_exists(s, marginals)
    assert strict.status == STATUS_INCONSISTENT
    loose = joint_exists(s, marginals, consistency_tolerance=F(1, 100))
    assert loose.status == STATUS_INFEASIBLE
    assert loose.certificate is not None
    assert loose.certificate_inequality is None
    for mask in range(8):
        assert loose.certificate.value_on_assignment(s, mask) >= 0
    assert loose.certificate.value_on_tables(s, marginals) < 0


def test_joint_from_full_context_round_trip():
    s = triple_scenario()
    table = {}
    outs = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
            (-1, 1, 1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1)]
    probs = [F(1, 8)] * 8
    probs[0] = F(1, 4)
    probs[1] = F(0)
    for out, p in zip(outs, probs):
        table[out] = p
    joint = joint_from_full_context(s, ContextMarginal(0, table))
    assert joint.project(s.contexts[0]).table == table


def test_joint_distribution_validation():
    s = triple_scenario()
    with pytest.raises(ShapeError):
        JointDistribution(s, (F(1),))
    with pytest.raises(ValidationError):
        JointDistribution(s, (F(-1, 8),) + (F(1, 8),) * 6 + (F(3, 8),))
    with pytest.raises(ValidationError):
        JointDistribution(s, (F(1, 8),) * 7 + (F(1, 4),))


def test_correlation_point_from_joint():
    s = cycle_scenario()
    point = JointDistribution.uniform(s).correlation_point()
    assert point.singles == (F(0), F(0), F(0))
    assert set(point.pair_values) == {F(0)}


def test_marginal_file_round_trip(tmp_path):
    s = cycle_scenario()
    marginals = correlations_to_marginals(s, zero_singles_point(-1, F(1, 2), 0))
    path = tmp_path / "marginals.json"
    save_marginal_problem(s, marginals, path)
    s2, m2 = load_marginal_problem(path)
    assert s2 == s
    assert [m.table for m in m2] == [m.table for m in marginals]
    # serialized probabilities are exact rationals
    payload = json.loads(path.read_text())
    assert payload["marginals"][0]["table"]["++"] == "0"
    assert payload["marginals"][0]["table"]["+-"] == "1/2"


def test_marginal_dict_accepts_decimal_strings_and_numbers():
    data = {
        "scenario": {"observables": ["A", "B"], "contexts": [[0, 1]]},
        "marginals": [
            {"context": 0, "table": {"++": "0.25", "+-": 0.25, "-+": "1/4", "--": "1/4"}}
        ],
    }
    scenario, marginals = marginal_problem_from_dict(data)
    assert all(v == F(1, 4) for v in marginals[0].table.values())
    assert joint_exists(scenario, marginals).status == STATUS_FEASIBLE


def test_marginal_dict_rejects_malformed_entries():
    with pytest.raises(ValidationError):
        marginal_problem_from_dict({"scenario": {}, "marginals": "nope"})
    with pytest.raises(ValidationError):
        marginal_problem_from_dict(
            {
                "scenario": {"observables": ["A"], "contexts": [[0]]},
                "marginals": [{"context": "0", "table": {}}],
            }
        )
