"""Monte Carlo runners for the temporal-correlation measurement protocols.

Two classical protocols operate on three two-valued observables Q1, Q2, Q3:

* triple protocol: every run draws a full assignment from one global joint
  distribution and records all three outcomes. The per-run statistic
  Q1Q2 + Q1Q3 + Q2Q3 can only take the values -1 and 3, so its average obeys
  K12 + K13 + K23 >= -1 identically, in exact integer arithmetic.
* pair protocol: each run is assigned one pair context (round robin by
  default, i.e. runs 0, 3, 6, ... measure the first context and so on) and
  draws just that pair of outcomes from a per-context table. Disjoint
  subensembles estimate the three correlators, and since each correlator is
  only bounded by [-1, 1] the pair-protocol sum is only bounded by -3.

The quantum runner replaces the tables with sequential projective
measurements of a two-level system precessing at fixed angular frequency:
the conditional outcome probabilities follow from real 2x2 rotation
matrices, which makes the pair correlator of times t_i < t_j equal to
cos(omega * (t_j - t_i)) without that formula appearing anywhere below.
Sequential tables keep the disturbance of the earlier measurement, so
per-observable means may legitimately differ between contexts.

All randomness is counter-based (see rng): outputs depend only on the seed,
the run index and the table, never on chunking or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from ._rational import as_fraction
from .errors import EmptyResultError, ShapeError, ValidationError
from .feasibility import (
    ContextMarginal,
    JointDistribution,
    marginals_by_context,
    outcome_tuples,
)
from .polytope import CorrelationPoint
from .rng import check_seed, cumulative_thresholds, sample_indices
from .scenario import Scenario, cycle_scenario

PROTOCOL_TRIPLE = "triple"
PROTOCOL_PAIR = "pair"
PROTOCOL_QUANTUM = "quantum"

_CHUNK = 1 << 16


@dataclass(frozen=True)
class DataRecord:
    """One simulated run: which context was measured and what came out."""

    run_index: int
    context_id: int
    outcomes: tuple[int, ...]
    protocol: str


class RecordBlock(Sequence):
    """Columnar storage for the records of one protocol run.

    Keeps numpy arrays internally (run indices, context ids, an outcome
    matrix) and materializes DataRecord objects on demand; a million-run
    simulation stays a handful of arrays.
    """

    def __init__(self, run_indices, context_ids, outcomes, protocol: str):
        self.run_indices = np.asarray(run_indices, dtype=np.int64)
        self.context_ids = np.asarray(context_ids, dtype=np.int64)
        self.outcomes = np.asarray(outcomes, dtype=np.int8)
        self.protocol = str(protocol)
        if self.outcomes.ndim != 2 or len(self.outcomes) != len(self.run_indices):
            raise ShapeError("outcome matrix must be (n_records, context_size)")
        if len(self.context_ids) != len(self.run_indices):
            raise ShapeError("context ids and run indices differ in length")

    def __len__(self) -> int:
        return len(self.run_indices)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return [self[i] for i in range(*item.indices(len(self)))]
        i = int(item)
        return DataRecord(
            int(self.run_indices[i]),
            int(self.context_ids[i]),
            tuple(int(v) for v in self.outcomes[i]),
            self.protocol,
        )

    def __iter__(self) -> Iterator[DataRecord]:
        for i in range(len(self)):
            yield self[i]


def write_records_csv(records: RecordBlock, path) -> None:
    """Stream records to CSV with columns k,context,outcomes,protocol;
    outcomes are '+'/'-' strings in context member order."""
    path = Path(path)
    n = len(records)
    signs = np.where(records.outcomes > 0, "+", "-")
    with path.open("w", newline="") as handle:
        handle.write("k,context,outcomes,protocol\n")
        for start in range(0, n, 1 << 18):
            stop = min(start + (1 << 18), n)
            ks = records.run_indices[start:stop].tolist()
            cs = records.context_ids[start:stop].tolist()
            outs = ["".join(row) for row in signs[start:stop].tolist()]
            handle.write(
                "".join(
                    f"{k},{c},{o},{records.protocol}\n"
                    for k, c, o in zip(ks, cs, outs)
                )
            )


# --- estimates -----------------------------------------------------------------

@dataclass(frozen=True)
class SingleEstimate:
    value: float
    count: int
    stderr: float


@dataclass(frozen=True)
class PairEstimate:
    value: float
    count: int
    stderr: float


@dataclass(frozen=True)
class EstimatedCorrelations:
    """Empirical singles and pair correlators with binomial-style errors.

    stderr follows sqrt((1 - v^2) / N). Contexts that received no runs leave
    their pair out of ``pairs`` and appear in ``absent_pairs`` instead; they
    are never silently reported as zero.
    """

    singles: Mapping[int, SingleEstimate]
    pairs: Mapping[tuple[int, int], PairEstimate]
    absent_pairs: tuple[tuple[int, int], ...] = ()


def _estimate(total: int, count: int) -> tuple[float, float]:
    value = total / count
    return value, math.sqrt(max(0.0, 1.0 - value * value) / count)


def _single_estimate(total: int, count: int) -> SingleEstimate:
    value, stderr = _estimate(total, count)
    return SingleEstimate(value, count, stderr)


def _pair_estimate(total: int, count: int) -> PairEstimate:
    value, stderr = _estimate(total, count)
    return PairEstimate(value, count, stderr)


def lg_statistic(correlations):
    """K12 + K13 + K23 for three observables; the joint-explainability bound
    is -1, the disjoint-subensemble bound is -3.

    Accepts a CorrelationPoint (exact Fraction result) or an
    EstimatedCorrelations (float result).
    """
    needed = ((0, 1), (0, 2), (1, 2))
    if isinstance(correlations, CorrelationPoint):
        table = correlations.pair_correlators
        missing = [p for p in needed if p not in table]
        if missing:
            raise ShapeError(f"point lacks pair correlators {missing}")
        return sum((table[p] for p in needed), Fraction(0))
    if isinstance(correlations, EstimatedCorrelations):
        missing = [p for p in needed if p not in correlations.pairs]
        if missing:
            raise ShapeError(
                f"estimates lack pair correlators {missing} (absent contexts?)"
            )
        return float(sum(correlations.pairs[p].value for p in needed))
    raise ValidationError(
        f"cannot compute the statistic from {type(correlations).__name__}"
    )


# --- shared chunked driver -------------------------------------------------------

def _run_chunks(runs: int, threads: int, fn: Callable):
    ranges = [(s, min(s + _CHUNK, runs)) for s in range(0, runs, _CHUNK)]
    if threads <= 1 or len(ranges) <= 1:
        return [fn(r) for r in ranges]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, ranges))


def _check_runs(runs: int) -> int:
    if isinstance(runs, bool) or not isinstance(runs, int):
        raise ValidationError(f"runs must be an integer, got {runs!r}")
    if runs < 1:
        raise EmptyResultError(f"runs must be >= 1, got {runs}")
    return runs


# --- triple protocol -------------------------------------------------------------

@dataclass(frozen=True)
class TripleSummary:
    """Per-run statistic S = Q1Q2 + Q1Q3 + Q2Q3 over the whole simulation.

    lg_statistic is the exact average of S (integer sum over runs), so
    lg_statistic >= -1 holds with no floating-point caveat.
    """

    min_statistic: int
    histogram: Mapping[int, int]
    lg_statistic: Fraction


@dataclass(frozen=True)
class TripleProtocolResult:
    records: RecordBlock
    estimates: EstimatedCorrelations
    summary: TripleSummary


def run_triple_protocol(
    joint: JointDistribution, runs: int, seed: int, *, threads: int = 1
) -> TripleProtocolResult:
    """Draw full triples from one joint distribution.

    The joint's scenario must consist of a single context covering exactly
    three observables. Records carry outcomes in context member order.
    """
    scenario = joint.scenario
    if scenario.n != 3:
        raise ShapeError("triple protocol runs on exactly three observables")
    if len(scenario.contexts) != 1 or scenario.contexts[0].size != 3:
        raise ShapeError("triple protocol needs a single context covering all three")
    _check_runs(runs)
    check_seed(seed)
    ctx = scenario.contexts[0]
    thresholds = cumulative_thresholds(joint.weights)

    def chunk(bounds):
        start, stop = bounds
        ks = np.arange(start, stop, dtype=np.uint64)
        return sample_indices(thresholds, seed, ks)

    masks = np.concatenate(_run_chunks(runs, threads, chunk))
    n = scenario.n
    # per-observable outcome columns, independent of member order
    vals = {
        i: (1 - 2 * ((masks >> (n - 1 - i)) & 1)).astype(np.int8) for i in range(n)
    }
    outcomes = np.column_stack([vals[m] for m in ctx.members])
    records = RecordBlock(
        np.arange(runs, dtype=np.int64),
        np.full(runs, ctx.id, dtype=np.int64),
        outcomes,
        PROTOCOL_TRIPLE,
    )

    pair_products = {
        (i, j): vals[i].astype(np.int64) * vals[j].astype(np.int64)
        for i, j in ((0, 1), (0, 2), (1, 2))
    }
    singles = {
        i: _single_estimate(int(vals[i].astype(np.int64).sum()), runs) for i in range(n)
    }
    pairs = {
        p: _pair_estimate(int(prod.sum()), runs) for p, prod in pair_products.items()
    }
    estimates = EstimatedCorrelations(singles, pairs, ())

    statistic = sum(pair_products.values())
    unique, counts = np.unique(statistic, return_counts=True)
    total = sum(int(prod.sum()) for prod in pair_products.values())
    summary = TripleSummary(
        min_statistic=int(statistic.min()),
        histogram={int(u): int(c) for u, c in zip(unique, counts)},
        lg_statistic=Fraction(total, runs),
    )
    return TripleProtocolResult(records, estimates, summary)


# --- pair protocol ---------------------------------------------------------------

@dataclass(frozen=True)
class PairProtocolConfig:
    """Sampling plan for the disjoint-subensemble protocol.

    tables: one outcome table per pair context. context_rule maps a run
    index to the context id it measures; None means round robin over the
    scenario's context order, which reproduces the subensembles
    {0, 3, 6, ...}, {1, 4, 7, ...}, {2, 5, 8, ...} for three contexts.
    """

    scenario: Scenario
    tables: tuple[ContextMarginal, ...]
    context_rule: Callable[[int], int] | None = None

    @classmethod
    def from_point(cls, scenario: Scenario, point: CorrelationPoint, **kwargs):
        from .feasibility import correlations_to_marginals

        return cls(scenario, tuple(correlations_to_marginals(scenario, point)), **kwargs)


@dataclass(frozen=True)
class PairProtocolResult:
    records: RecordBlock
    estimates: EstimatedCorrelations


def run_pair_protocol(
    config: PairProtocolConfig,
    runs: int,
    seed: int,
    *,
    threads: int = 1,
    protocol: str = PROTOCOL_PAIR,
) -> PairProtocolResult:
    """Measure one pair context per run.

    Tables are validated per context for shape and normalization but are
    deliberately not required to agree on overlaps: physically disturbed
    sequential statistics are legitimate input here.
    """
    scenario = config.scenario
    if any(c.size != 2 for c in scenario.contexts):
        raise ShapeError("pair protocol needs all contexts of size exactly 2")
    _check_runs(runs)
    check_seed(seed)
    by_id = marginals_by_context(scenario, config.tables)
    order = [c.id for c in scenario.contexts]
    nc = len(order)
    id_array = np.array(order, dtype=np.int64)

    thresholds = {}
    for ctx in scenario.contexts:
        probs = [by_id[ctx.id].table[out] for out in outcome_tuples(2)]
        thresholds[ctx.id] = cumulative_thresholds(probs)
    firsts = np.array([1, 1, -1, -1], dtype=np.int8)
    seconds = np.array([1, -1, 1, -1], dtype=np.int8)

    rule = config.context_rule

    def chunk(bounds):
        start, stop = bounds
        ks = np.arange(start, stop, dtype=np.int64)
        if rule is None:
            cids = id_array[ks % nc]
        else:
            cids = np.fromiter((rule(int(k)) for k in ks), dtype=np.int64, count=len(ks))
        outs = np.empty((len(ks), 2), dtype=np.int8)
        for cid in order:
            sel = cids == cid
            if not sel.any():
                continue
            idx = sample_indices(thresholds[cid], seed, ks[sel].astype(np.uint64))
            outs[sel, 0] = firsts[idx]
            outs[sel, 1] = seconds[idx]
        return cids, outs

    parts = _run_chunks(runs, threads, chunk)
    context_ids = np.concatenate([p[0] for p in parts])
    outcomes = np.concatenate([p[1] for p in parts])
    known = set(order)
    bad = set(int(c) for c in np.unique(context_ids)) - known
    if bad:
        raise ValidationError(f"context rule produced unknown context ids {sorted(bad)}")

    records = RecordBlock(
        np.arange(runs, dtype=np.int64), context_ids, outcomes, protocol
    )

    pair_sums: dict[tuple[int, int], tuple[int, int]] = {}
    single_sums: dict[int, list[int]] = {i: [0, 0] for i in range(scenario.n)}
    absent = []
    for ctx in scenario.contexts:
        sel = context_ids == ctx.id
        count = int(sel.sum())
        i, j = ctx.members
        key = (min(i, j), max(i, j))
        if count == 0:
            absent.append(key)
            continue
        a = outcomes[sel, 0].astype(np.int64)
        b = outcomes[sel, 1].astype(np.int64)
        pair_sums[key] = (int((a * b).sum()), count)
        single_sums[i][0] += int(a.sum())
        single_sums[i][1] += count
        single_sums[j][0] += int(b.sum())
        single_sums[j][1] += count

    singles = {
        i: _single_estimate(tot, cnt)
        for i, (tot, cnt) in single_sums.items()
        if cnt > 0
    }
    pairs = {key: _pair_estimate(tot, cnt) for key, (tot, cnt) in pair_sums.items()}
    estimates = EstimatedCorrelations(singles, pairs, tuple(sorted(absent)))
    return PairProtocolResult(records, estimates)


# --- quantum two-level model ------------------------------------------------------

@dataclass(frozen=True)
class QuantumTwoLevelModel:
    """A two-level system precessing at angular frequency omega, measured
    projectively along the fixed +-1 axis at three ordered times.

    The evolution is a real rotation by the half angle omega*dt/2 between
    measurements; preparation_angle sets the initial state
    (cos(angle/2), sin(angle/2)), whose choice provably never affects pair
    correlators, only the per-time means.
    """

    omega: float
    times: tuple[float, float, float]
    preparation_time: float = 0.0
    preparation_angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not math.isfinite(self.omega):
            raise ValidationError("omega must be finite")
        if len(self.times) != 3:
            raise ValidationError("the model takes exactly three measurement times")
        t1, t2, t3 = self.times
        if not (self.preparation_time <= t1 < t2 < t3):
            raise ValidationError(
                "times must satisfy preparation_time <= t1 < t2 < t3"
            )

    @classmethod
    def equal_spacing(cls, omega_tau: float) -> "QuantumTwoLevelModel":
        """Times (1, 2, 3) at unit spacing, so omega equals the phase
        advanced between consecutive measurements."""
        return cls(omega=float(omega_tau), times=(1.0, 2.0, 3.0))


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=float)


def _state_at_first(model: QuantumTwoLevelModel, t: float) -> np.ndarray:
    prep = np.array(
        [math.cos(model.preparation_angle / 2), math.sin(model.preparation_angle / 2)],
        dtype=float,
    )
    return _rotation(model.omega * (t - model.preparation_time) / 2) @ prep


def quantum_pair_correlator(model: QuantumTwoLevelModel, i: int, j: int) -> float:
    """Exact model value of K_ij for measurement slots 1 <= i < j <= 3.

    Computed from the branch probabilities of the sequential measurement,
    not from any closed-form shortcut.
    """
    if not (1 <= i < j <= 3):
        raise ValidationError(f"need measurement slots 1 <= i < j <= 3, got ({i}, {j})")
    t_i, t_j = model.times[i - 1], model.times[j - 1]
    psi = _state_at_first(model, t_i)
    p_first = psi * psi  # [P(+), P(-)]
    u = _rotation(model.omega * (t_j - t_i) / 2)
    total = 0.0
    for a, branch in ((1, np.array([1.0, 0.0])), (-1, np.array([0.0, 1.0]))):
        phi = u @ branch
        p_cond = phi * phi
        total += p_first[0 if a > 0 else 1] * (a * p_cond[0] + (-a) * p_cond[1])
    return float(total)


def quantum_pair_tables(model: QuantumTwoLevelModel) -> tuple[Scenario, tuple[ContextMarginal, ...]]:
    """The sequential-measurement outcome tables on the three pair contexts.

    Amplitudes are squared and normalized in exact rational arithmetic, so
    every table sums to exactly 1 while faithfully keeping the measurement
    disturbance (the later marginal depends on whether an earlier
    measurement happened).
    """
    scenario = cycle_scenario()
    slots = [(1, 2), (1, 3), (2, 3)]
    tables = []

    def norm_pair(v0: float, v1: float) -> tuple[Fraction, Fraction]:
        a = as_fraction(float(v0)) ** 2
        b = as_fraction(float(v1)) ** 2
        total = a + b
        return a / total, b / total

    for cid, (i, j) in enumerate(slots):
        t_i, t_j = model.times[i - 1], model.times[j - 1]
        psi = _state_at_first(model, t_i)
        p_first = norm_pair(psi[0], psi[1])
        u = _rotation(model.omega * (t_j - t_i) / 2)
        table = {}
        for ai, a in enumerate((1, -1)):
            branch = np.array([1.0, 0.0]) if a > 0 else np.array([0.0, 1.0])
            phi = u @ branch
            p_cond = norm_pair(phi[0], phi[1])
            for bi, b in enumerate((1, -1)):
                table[(a, b)] = p_first[ai] * p_cond[bi]
        tables.append(ContextMarginal(cid, table))
    return scenario, tuple(tables)


def run_quantum_pair_protocol(
    model: QuantumTwoLevelModel, runs: int, seed: int, *, threads: int = 1
) -> PairProtocolResult:
    """Pair protocol driven by the two-level model's sequential statistics."""
    scenario, tables = quantum_pair_tables(model)
    config = PairProtocolConfig(scenario, tables)
    return run_pair_protocol(
        config, runs, seed, threads=threads, protocol=PROTOCOL_QUANTUM
    )


# --- JSON-friendly summaries -------------------------------------------------------

def estimates_to_jsonable(estimates: EstimatedCorrelations, scenario: Scenario) -> dict:
    labels = scenario.labels
    return {
        "singles": {
            labels[i]: {"value": est.value, "count": est.count, "stderr": est.stderr}
            for i, est in sorted(estimates.singles.items())
        },
        "pairs": {
            f"{labels[i]},{labels[j]}": {
                "value": est.value,
                "count": est.count,
                "stderr": est.stderr,
            }
            for (i, j), est in sorted(estimates.pairs.items())
        },
        "absent_pairs": [
            f"{labels[i]},{labels[j]}" for i, j in estimates.absent_pairs
        ],
    }
