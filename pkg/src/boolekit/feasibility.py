"""The marginal problem: when do per-context statistics admit a global joint?

Given one probability table per context, ``joint_exists`` decides exactly
(rational arithmetic end to end) whether a single joint distribution over
all observables reproduces every table, and returns either an explicit
witness distribution or a Farkas certificate of impossibility. The
certificate lives in marginal coordinates: a constant (the multiplier of the
normalization constraint) plus one coefficient per (context, outcome) cell.
Its defining property is that the induced affine functional is nonnegative
on every deterministic assignment yet strictly negative on the input tables.
When every context holds at most two observables the same functional can be
re-expressed through singles and pair correlators, i.e. as an Inequality of
the polytope module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from ._jsonio import dump_json_file, load_json_file
from ._rational import as_fraction
from .errors import (
    CapacityError,
    DomainError,
    ShapeError,
    ValidationError,
)
from .polytope import (
    MAX_OBSERVABLES,
    CorrelationPoint,
    Inequality,
    assignment_value,
)
from .scenario import Context, Scenario, scenario_from_dict, scenario_to_dict
from .simplex import phase_one

_F0 = Fraction(0)
_F1 = Fraction(1)

STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"
STATUS_INCONSISTENT = "inconsistent-marginals"

# tables built from float data may miss exact normalization by rounding;
# anything beyond this is treated as a malformed table, not a rounding artifact
SUM_SLACK = Fraction(1, 10**9)


def outcome_tuples(size: int) -> list[tuple[int, ...]]:
    """Canonical outcome order: itertools.product over (+1, -1), so for a
    pair: (+,+), (+,-), (-,+), (-,-)."""
    return list(itertools.product((1, -1), repeat=size))


def outcome_string(outcome: Sequence[int]) -> str:
    return "".join("+" if v > 0 else "-" for v in outcome)


def parse_outcome_string(text: str) -> tuple[int, ...]:
    if not text or any(ch not in "+-" for ch in text):
        raise ValidationError(f"outcome key must consist of '+'/'-', got {text!r}")
    return tuple(1 if ch == "+" else -1 for ch in text)


@dataclass(frozen=True)
class ContextMarginal:
    """One probability table: outcome tuple (in context member order) -> prob."""

    context_id: int
    table: Mapping[tuple[int, ...], Fraction]

    def __post_init__(self):
        object.__setattr__(
            self,
            "table",
            {tuple(k): as_fraction(v) for k, v in dict(self.table).items()},
        )

    @property
    def size(self) -> int:
        return len(next(iter(self.table)))

    def probability(self, outcome: Sequence[int]) -> Fraction:
        return self.table[tuple(outcome)]

    def total(self) -> Fraction:
        return sum(self.table.values(), _F0)

    def restrict(self, positions: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
        """Sub-table over the given member positions (exact sums)."""
        out: dict[tuple[int, ...], Fraction] = {}
        for outcome, p in self.table.items():
            key = tuple(outcome[i] for i in positions)
            out[key] = out.get(key, _F0) + p
        return out


def context_marginal(context_id: int, table: Mapping) -> ContextMarginal:
    """Build a ContextMarginal from a mapping keyed by outcome tuples or
    '+-' strings; values may be numbers, Fractions or rational strings."""
    converted = {}
    for key, value in table.items():
        if isinstance(key, str):
            key = parse_outcome_string(key)
        converted[tuple(int(v) for v in key)] = as_fraction(value)
    if not converted:
        raise ValidationError(f"context {context_id}: empty table")
    return ContextMarginal(context_id, converted)


def validate_marginal(marginal: ContextMarginal, context: Context) -> None:
    size = context.size
    expected = set(outcome_tuples(size))
    got = set(marginal.table)
    if got != expected:
        raise ShapeError(
            f"context {context.id}: table must have one entry per outcome of "
            f"{size} observables ({2 ** size} entries), got {len(got)}"
        )
    for outcome, p in marginal.table.items():
        if p < 0 or p > 1:
            raise ValidationError(
                f"context {context.id}: probability {p} for outcome "
                f"{outcome_string(outcome)} outside [0, 1]"
            )
    if abs(marginal.total() - 1) > SUM_SLACK:
        raise ValidationError(
            f"context {context.id}: table sums to {marginal.total()}, not 1"
        )


@dataclass(frozen=True)
class OverlapCheck:
    context_a: int
    context_b: int
    shared: tuple[int, ...]
    discrepancy: Fraction


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    max_discrepancy: Fraction
    overlaps: tuple[OverlapCheck, ...]
    normalization_errors: tuple[tuple[int, Fraction], ...]


def check_consistency(
    scenario: Scenario,
    marginals: Sequence[ContextMarginal],
    *,
    tolerance: Fraction = _F0,
) -> ConsistencyReport:
    """Exact pairwise overlap agreement plus per-table normalization.

    The discrepancy of an overlapping context pair is the largest absolute
    difference between the two sub-tables on the shared observables;
    normalization error |sum - 1| counts toward the same maximum.
    """
    by_id = marginals_by_context(scenario, marginals)
    overlaps = []
    norm_errors = []
    worst = _F0
    for ctx in scenario.contexts:
        err = abs(by_id[ctx.id].total() - 1)
        norm_errors.append((ctx.id, err))
        worst = max(worst, err)
    for ca, cb in itertools.combinations(scenario.contexts, 2):
        shared = sorted(ca.member_set & cb.member_set)
        if not shared:
            continue
        pos_a = [ca.members.index(s) for s in shared]
        pos_b = [cb.members.index(s) for s in shared]
        sub_a = by_id[ca.id].restrict(pos_a)
        sub_b = by_id[cb.id].restrict(pos_b)
        disc = max(
            abs(sub_a[out] - sub_b[out]) for out in outcome_tuples(len(shared))
        )
        overlaps.append(OverlapCheck(ca.id, cb.id, tuple(shared), disc))
        worst = max(worst, disc)
    return ConsistencyReport(
        consistent=worst <= tolerance,
        max_discrepancy=worst,
        overlaps=tuple(overlaps),
        normalization_errors=tuple(norm_errors),
    )


def marginals_by_context(
    scenario: Scenario, marginals: Sequence[ContextMarginal]
) -> dict[int, ContextMarginal]:
    by_id: dict[int, ContextMarginal] = {}
    for marg in marginals:
        if marg.context_id in by_id:
            raise ShapeError(f"two tables supplied for context {marg.context_id}")
        by_id[marg.context_id] = marg
    for ctx in scenario.contexts:
        if ctx.id not in by_id:
            raise ShapeError(f"no table supplied for context {ctx.id}")
        validate_marginal(by_id[ctx.id], ctx)
    extra = set(by_id) - {c.id for c in scenario.contexts}
    if extra:
        raise ShapeError(f"tables supplied for unknown contexts: {sorted(extra)}")
    return by_id


@dataclass(frozen=True)
class JointDistribution:
    """A global distribution over all 2^n deterministic assignments.

    weights[mask] is the probability of the assignment with that bitmask
    (observable 0 in the most significant position, zero bit = +1).
    """

    scenario: Scenario
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(as_fraction(w) for w in self.weights))
        if len(self.weights) != 1 << self.scenario.n:
            raise ShapeError(
                f"need {1 << self.scenario.n} weights, got {len(self.weights)}"
            )
        if any(w < 0 for w in self.weights):
            raise ValidationError("joint-distribution weights must be nonnegative")
        if sum(self.weights, _F0) != 1:
            raise ValidationError("joint-distribution weights must sum to exactly 1")

    @classmethod
    def uniform(cls, scenario: Scenario) -> "JointDistribution":
        m = 1 << scenario.n
        return cls(scenario, tuple(Fraction(1, m) for _ in range(m)))

    def project(self, context: Context) -> ContextMarginal:
        n = self.scenario.n
        table = {out: _F0 for out in outcome_tuples(context.size)}
        for mask, w in enumerate(self.weights):
            if w == 0:
                continue
            out = tuple(assignment_value(mask, n, m) for m in context.members)
            table[out] += w
        return ContextMarginal(context.id, table)

    def correlation_point(self) -> CorrelationPoint:
        n = self.scenario.n
        singles = [_F0] * n
        pair_map = {p: _F0 for p in self.scenario.pair_coordinates}
        for mask, w in enumerate(self.weights):
            if w == 0:
                continue
            vals = [assignment_value(mask, n, i) for i in range(n)]
            for i in range(n):
                singles[i] += w * vals[i]
            for (i, j) in pair_map:
                pair_map[(i, j)] += w * vals[i] * vals[j]
        return CorrelationPoint.from_values(singles, pair_map)


def joint_from_full_context(scenario: Scenario, marginal: ContextMarginal) -> JointDistribution:
    """Reinterpret the table of a context covering all observables as a joint."""
    ctx = scenario.context_by_id(marginal.context_id)
    if set(ctx.members) != set(range(scenario.n)):
        raise ShapeError(
            f"context {ctx.id} covers {sorted(ctx.member_set)}, not all observables"
        )
    validate_marginal(marginal, ctx)
    n = scenario.n
    weights = []
    for mask in range(1 << n):
        out = tuple(assignment_value(mask, n, m) for m in ctx.members)
        weights.append(marginal.table[out])
    return JointDistribution(scenario, tuple(weights))


@dataclass(frozen=True)
class FarkasCertificate:
    """Affine functional separating the input tables from all assignments.

    value_on_assignment(mask) >= 0 for every deterministic assignment while
    value_on_tables(input) < 0; by convexity no joint distribution can
    reproduce the input.
    """

    constant: Fraction
    coefficients: Mapping[tuple[int, tuple[int, ...]], Fraction]

    def __post_init__(self):
        object.__setattr__(
            self,
            "coefficients",
            {
                (int(cid), tuple(out)): as_fraction(v)
                for (cid, out), v in dict(self.coefficients).items()
            },
        )

    def value_on_tables(self, scenario: Scenario, marginals: Sequence[ContextMarginal]) -> Fraction:
        by_id = {m.context_id: m for m in marginals}
        total = self.constant
        for (cid, out), coef in self.coefficients.items():
            total += coef * by_id[cid].table[tuple(out)]
        return total

    def value_on_assignment(self, scenario: Scenario, mask: int) -> Fraction:
        n = scenario.n
        total = self.constant
        for (cid, out), coef in self.coefficients.items():
            members = scenario.context_by_id(cid).members
            actual = tuple(assignment_value(mask, n, m) for m in members)
            if actual == tuple(out):
                total += coef
        return total

    def as_inequality(self, scenario: Scenario) -> Inequality:
        """Rewrite through singles and pair correlators.

        Only defined when every referenced context has at most two members:
        the indicator of a pair outcome (a, b) expands into
        (1 + a<Qi> + b<Qj> + ab K_ij)/4, and of a single outcome a into
        (1 + a<Qi>)/2. Larger contexts would need higher-order correlators.
        """
        if any(c.size > 2 for c in scenario.contexts):
            raise ShapeError(
                "certificate expansion needs contexts of size <= 2; "
                "use the marginal-coordinate form instead"
            )
        n = scenario.n
        const = self.constant
        singles = [_F0] * n
        pair_map: dict[tuple[int, int], Fraction] = {
            p: _F0 for p in scenario.pair_coordinates
        }
        for (cid, out), coef in self.coefficients.items():
            members = scenario.context_by_id(cid).members
            if len(members) == 1:
                (i,) = members
                (a,) = out
                const += coef / 2
                singles[i] += coef * a / 2
            else:
                i, j = members
                a, b = out
                const += coef / 4
                singles[i] += coef * a / 4
                singles[j] += coef * b / 4
                key = (min(i, j), max(i, j))
                pair_map[key] += coef * a * b / 4
        return Inequality(
            const,
            tuple(singles),
            tuple(pair_map[p] for p in scenario.pair_coordinates),
            scenario.pair_coordinates,
        )


@dataclass(frozen=True)
class FeasibilityVerdict:
    status: str
    consistency: ConsistencyReport
    witness: JointDistribution | None = None
    certificate: FarkasCertificate | None = None
    certificate_inequality: Inequality | None = None


def joint_exists(
    scenario: Scenario,
    marginals: Sequence[ContextMarginal],
    *,
    consistency_tolerance: Fraction = _F0,
) -> FeasibilityVerdict:
    """Decide the marginal problem exactly.

    Returns status 'inconsistent-marginals' when the tables already disagree
    on an overlap (no linear program is run), 'feasible' with a witness joint
    that reproduces every table exactly, or 'infeasible' with a verified
    Farkas certificate (plus its singles/pairs form when all contexts are
    pairs or singletons).
    """
    if scenario.n > MAX_OBSERVABLES:
        raise CapacityError(
            f"{scenario.n} observables exceed the supported maximum of {MAX_OBSERVABLES}"
        )
    consistency = check_consistency(
        scenario, marginals, tolerance=consistency_tolerance
    )
    if not consistency.consistent:
        return FeasibilityVerdict(STATUS_INCONSISTENT, consistency)

    by_id = marginals_by_context(scenario, marginals)
    n = scenario.n
    ncols = 1 << n

    # equality rows: one per (context, outcome) cell, plus normalization
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    row_keys: list[tuple[int, tuple[int, ...]] | None] = []
    norm_row = [_F1] * ncols
    rows.append(norm_row)
    rhs.append(_F1)
    row_keys.append(None)
    for ctx in scenario.contexts:
        cells = {out: [_F0] * ncols for out in outcome_tuples(ctx.size)}
        for mask in range(ncols):
            out = tuple(assignment_value(mask, n, m) for m in ctx.members)
            cells[out][mask] = _F1
        for out in outcome_tuples(ctx.size):
            rows.append(cells[out])
            rhs.append(by_id[ctx.id].table[out])
            row_keys.append((ctx.id, out))

    result = phase_one(rows, rhs)

    if result.feasible:
        witness = JointDistribution(scenario, result.x)
        for ctx in scenario.contexts:
            reproduced = witness.project(ctx)
            assert reproduced.table == by_id[ctx.id].table, (
                f"witness fails to reproduce context {ctx.id}"
            )
        return FeasibilityVerdict(STATUS_FEASIBLE, consistency, witness=witness)

    # -dual is the separating functional; re-verify before returning it
    neg = [-y for y in result.dual]
    certificate = FarkasCertificate(
        constant=neg[0],
        coefficients={
            key: neg[i] for i, key in enumerate(row_keys) if key is not None
        },
    )
    for mask in range(ncols):
        assert certificate.value_on_assignment(scenario, mask) >= 0, (
            "certificate fails on a deterministic assignment"
        )
    assert certificate.value_on_tables(scenario, marginals) < 0, (
        "certificate does not separate the input"
    )
    ineq = None
    if all(c.size <= 2 for c in scenario.contexts):
        try:
            ineq = certificate.as_inequality(scenario).canonical()
        except ValidationError:
            # The expansion substitutes one <Qi> for every context's version
            # of observable i, so it can cancel to the zero functional when
            # the obstruction is a residual overlap disagreement that a
            # nonzero consistency tolerance let through. The certificate in
            # marginal coordinates stands on its own in that case.
            ineq = None
    return FeasibilityVerdict(
        STATUS_INFEASIBLE, consistency, certificate=certificate, certificate_inequality=ineq
    )


def correlations_to_marginals(
    scenario: Scenario, point: CorrelationPoint
) -> list[ContextMarginal]:
    """Expand singles and pair correlators into per-context pair tables via
    p(a, b) = (1 + a<Qi> + b<Qj> + ab K_ij) / 4.

    Defined for scenarios whose contexts are all pairs. Raises DomainError
    when a requested combination implies a negative cell.
    """
    if any(c.size != 2 for c in scenario.contexts):
        raise ShapeError("correlations_to_marginals needs all contexts of size 2")
    if len(point.singles) != scenario.n:
        raise ShapeError(
            f"point has {len(point.singles)} singles for {scenario.n} observables"
        )
    if point.pairs != scenario.pair_coordinates:
        raise ShapeError("point pair coordinates do not match the scenario")
    out = []
    for ctx in scenario.contexts:
        i, j = ctx.members
        k = point.pair(i, j)
        table = {}
        for a, b in outcome_tuples(2):
            p = (1 + a * point.singles[i] + b * point.singles[j] + a * b * k) / 4
            if p < 0:
                raise DomainError(
                    f"context {ctx.id}: implied probability {p} for outcome "
                    f"{outcome_string((a, b))} is negative"
                )
            table[(a, b)] = p
        out.append(ContextMarginal(ctx.id, table))
    return out


# --- serialization -------------------------------------------------------------

def _format_probability(value: Fraction) -> str:
    return str(value)


def marginals_to_dict(scenario: Scenario, marginals: Sequence[ContextMarginal]) -> dict:
    return {
        "scenario": scenario_to_dict(scenario),
        "marginals": [
            {
                "context": marg.context_id,
                "table": {
                    outcome_string(out): _format_probability(p)
                    for out, p in sorted(
                        marg.table.items(), key=lambda kv: outcome_tuples(len(kv[0])).index(kv[0])
                    )
                },
            }
            for marg in marginals
        ],
    }


def marginal_problem_from_dict(data) -> tuple[Scenario, list[ContextMarginal]]:
    if not isinstance(data, dict):
        raise ValidationError("marginal document must be a JSON object")
    if "scenario" not in data or "marginals" not in data:
        raise ValidationError("marginal document needs 'scenario' and 'marginals' keys")
    scenario = scenario_from_dict(data["scenario"])
    raw = data["marginals"]
    if not isinstance(raw, list):
        raise ValidationError("'marginals' must be a list")
    marginals = []
    for entry in raw:
        if not isinstance(entry, dict) or "context" not in entry or "table" not in entry:
            raise ValidationError("each marginal needs 'context' and 'table' keys")
        cid = entry["context"]
        if not isinstance(cid, int) or isinstance(cid, bool):
            raise ValidationError(f"context id must be an integer, got {cid!r}")
        table = entry["table"]
        if not isinstance(table, dict):
            raise ValidationError(f"context {cid}: 'table' must be an object")
        marginals.append(context_marginal(cid, table))
    return scenario, marginals


def load_marginal_problem(path) -> tuple[Scenario, list[ContextMarginal]]:
    return marginal_problem_from_dict(load_json_file(path))


def save_marginal_problem(
    scenario: Scenario, marginals: Sequence[ContextMarginal], path
) -> None:
    dump_json_file(Path(path), marginals_to_dict(scenario, marginals))
