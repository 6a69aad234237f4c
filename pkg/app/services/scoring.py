"""Algorithm comparison statistics

Friedman ranks, Mann-Whitney win/tie/loss decisions, bounded relative-error
accuracy, the combined S_tot score and the legacy CEC2017/CEC2020/CEC2019
scores. Every function is a pure function of a ResultsTable.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import mannwhitneyu, rankdata

from app.core.errors import ArgumentError, DataError


ERROR_FLOOR = 1e-14
ZERO_OPTIMUM = 1e-12
EXACT_LIMIT = 20
DIGITS = 10
BEST_RUNS = 25

WEIGHT_PRESETS: Dict[str, Optional[Dict[int, float]]] = {
    "cec2017": {10: 0.1, 30: 0.2, 50: 0.3, 100: 0.4},
    "cec2020": {5: 0.1, 10: 0.2, 15: 0.3, 20: 0.4},
    "cec2022": {10: 0.1, 20: 0.2},
    "desk": {10: 0.1, 20: 0.2},
    # every dimension weighs 1
    "cec2011": None,
    "uniform": None,
}


# Results table
@dataclass
class ResultsTable:
    """
    Final errors e[k, j, i] of algorithm k on problem j in run i

    Errors below 1e-14 (including small negatives from float noise) are
    stored as exact zeros.
    """
    algorithms: List[str]
    problems: List[str]
    errors: np.ndarray
    optima: np.ndarray
    dimensions: np.ndarray = field(default=None)

    def __post_init__(self):
        errors = np.array(self.errors, dtype=float)
        if errors.ndim != 3:
            raise DataError(f"errors must be a 3-D (algorithms, problems, runs) array, got shape {errors.shape}")
        k, j, n = errors.shape
        if k != len(self.algorithms) or j != len(self.problems) or n == 0:
            raise DataError(
                f"error tensor {errors.shape} does not match {len(self.algorithms)} algorithms "
                f"x {len(self.problems)} problems"
            )
        errors[errors < ERROR_FLOOR] = 0.0
        self.errors = errors
        self.optima = np.broadcast_to(np.asarray(self.optima, dtype=float), (j,)).copy()
        if self.dimensions is None:
            self.dimensions = np.zeros(j, dtype=int)
        self.dimensions = np.broadcast_to(np.asarray(self.dimensions, dtype=int), (j,)).copy()
        self.algorithms = list(self.algorithms)
        self.problems = list(self.problems)

    @classmethod
    def from_values(
        cls,
        algorithms: Sequence[str],
        problems: Sequence[str],
        values,
        optima,
        dimensions=None,
    ) -> "ResultsTable":
        """
        Build from final objective values

        A NaN optimum marks an unknown optimum; the best value found by any
        algorithm in any run is used in its place.
        """
        values = np.asarray(values, dtype=float)
        optima = np.array(np.broadcast_to(np.asarray(optima, dtype=float), (values.shape[1],)))
        unknown = np.isnan(optima)
        if np.any(unknown):
            optima[unknown] = values[:, unknown, :].min(axis=(0, 2))
        return cls(list(algorithms), list(problems), values - optima[None, :, None], optima, dimensions)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.errors.shape

    @property
    def runs(self) -> int:
        return self.errors.shape[2]

    def index(self, algorithm: str) -> int:
        try:
            return self.algorithms.index(algorithm)
        except ValueError:
            raise ArgumentError(f"algorithm '{algorithm}' is not in the table ({', '.join(self.algorithms)})")

    def for_dimension(self, dim: int) -> "ResultsTable":
        mask = self.dimensions == dim
        if not np.any(mask):
            raise ArgumentError(f"no problems of dimension {dim}")
        return ResultsTable(
            self.algorithms,
            [p for p, keep in zip(self.problems, mask) if keep],
            self.errors[:, mask, :],
            self.optima[mask],
            self.dimensions[mask],
        )

    def dimension_values(self) -> List[int]:
        return sorted(int(d) for d in set(self.dimensions.tolist()))


# Ranks and tests
def friedman_ranks(table: ResultsTable) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-run ascending ranks of the algorithms with tie averaging

    Returns:
        (R[k, j] averaged over runs, R[k] averaged over problems)
    """
    ranks = rankdata(table.errors, axis=0)
    per_problem = ranks.mean(axis=2)
    return per_problem, per_problem.mean(axis=1)


class Outcome(str, Enum):
    WIN = "win"
    TIE = "tie"
    LOSS = "loss"

    def mirror(self) -> "Outcome":
        return {Outcome.WIN: Outcome.LOSS, Outcome.LOSS: Outcome.WIN}.get(self, Outcome.TIE)


def exact_rank_sum_pvalue(a, b) -> float:
    """
    Two-sided exact p-value of the rank-sum statistic, ties included

    The null distribution of a's rank sum is enumerated over every way of
    drawing len(a) of the pooled (tie-averaged) ranks, counted by dynamic
    programming over doubled ranks so every value is an integer.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    doubled = np.rint(2 * rankdata(np.concatenate([a, b]))).astype(int)
    observed = int(doubled[:n].sum())
    top = int(doubled.sum())

    # counts[k, s]: subsets of size k with doubled rank sum s
    counts = np.zeros((n + 1, top + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for value in doubled:
        shifted = np.zeros_like(counts)
        shifted[1:, value:] = counts[:-1, : top + 1 - value]
        counts = counts + shifted
    distribution = counts[n]
    total = distribution.sum()
    p_less = distribution[: observed + 1].sum() / total
    p_greater = distribution[observed:].sum() / total
    return float(min(1.0, 2.0 * min(p_less, p_greater)))


def rank_sum_pvalue(a, b) -> float:
    """Exact p-value below 20 samples per side, continuity-corrected normal approximation otherwise"""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise ArgumentError("rank-sum test needs non-empty samples")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    if a.size < EXACT_LIMIT and b.size < EXACT_LIMIT:
        return exact_rank_sum_pvalue(a, b)
    result = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    return float(result.pvalue)


def mann_whitney_wtl(a, b, alpha: float = 0.05) -> Outcome:
    """
    Win/tie/loss of sample a against sample b (smaller errors are better)

    Tie when p >= alpha; otherwise the sample with the smaller mean rank in
    the pooled ranking wins.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    p = rank_sum_pvalue(a, b)
    if p >= alpha:
        return Outcome.TIE
    ranks = rankdata(np.concatenate([a, b]))
    mean_a = ranks[: a.size].mean()
    mean_b = ranks[a.size:].mean()
    if mean_a == mean_b:
        return Outcome.TIE
    return Outcome.WIN if mean_a < mean_b else Outcome.LOSS


def wtl_table(table: ResultsTable, reference: str, alpha: float = 0.05) -> Dict[str, Tuple[int, int, int]]:
    """(W, T, L) of the reference algorithm against every algorithm, itself included"""
    ref = table.index(reference)
    counts = {}
    for k, name in enumerate(table.algorithms):
        outcomes = [
            mann_whitney_wtl(table.errors[ref, j], table.errors[k, j], alpha)
            for j in range(len(table.problems))
        ]
        counts[name] = (
            outcomes.count(Outcome.WIN),
            outcomes.count(Outcome.TIE),
            outcomes.count(Outcome.LOSS),
        )
    return counts


# Accuracy and combined scores
def accuracy_scores(table: ResultsTable) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Mean relative error and its bounded transform

    Returns:
        (eps[k, j], bounded[k, j] = eps / (1 + eps), bounded averaged over problems)
    """
    scale = np.abs(table.optima)
    zero = scale < ZERO_OPTIMUM
    if np.any(zero):
        names = [p for p, z in zip(table.problems, zero) if z]
        raise DataError(
            f"relative error is undefined for zero optimum values: {', '.join(names)}; "
            "use a nonzero bias or an unknown optimum"
        )
    eps = table.errors.mean(axis=2) / scale[None, :]
    with np.errstate(invalid="ignore"):
        bounded = np.where(np.isinf(eps), 1.0, eps / (1.0 + eps))
    bounded = np.minimum(bounded, np.nextafter(1.0, 0.0))
    return eps, bounded, bounded.mean(axis=1)


def min_ratio(values) -> np.ndarray:
    """min(values) / value, with 1 for every value equal to the minimum"""
    values = np.asarray(values, dtype=float)
    best = values.min()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(values == best, 1.0, best / values)
    return np.nan_to_num(ratio, nan=0.0)


def pair_score(accuracy, rank) -> np.ndarray:
    """50 [min E / E + min R / R]"""
    return 50.0 * (min_ratio(accuracy) + min_ratio(rank))


@dataclass
class CombinedScores:
    accuracy: np.ndarray
    rank: np.ndarray
    total: np.ndarray
    per_dimension: Dict[int, np.ndarray]


def resolve_weights(weights: Union[str, Mapping[int, float]], dimensions: Sequence[int]) -> Dict[int, float]:
    """Weights for the given dimensions from a preset name or an explicit mapping"""
    if isinstance(weights, str):
        if weights not in WEIGHT_PRESETS:
            raise ArgumentError(f"unknown weight preset '{weights}'. Known: {', '.join(sorted(WEIGHT_PRESETS))}")
        preset = WEIGHT_PRESETS[weights]
        if preset is None:
            return {int(d): 1.0 for d in dimensions}
        weights = preset
    resolved = {int(d): float(w) for d, w in weights.items()}
    missing = [d for d in dimensions if int(d) not in resolved]
    if missing:
        raise ArgumentError(f"no weight for dimension(s) {missing}")
    return {int(d): resolved[int(d)] for d in dimensions}


def combined_scores(
    per_dim: Mapping[int, Tuple[np.ndarray, np.ndarray]],
    weights: Mapping[int, float],
) -> CombinedScores:
    """
    S_E = sum_D w_D E^(D), S_R = sum_D w_D R^(D), S_tot = 50 [min S_E / S_E + min S_R / S_R]
    and the per-dimension S^(D) in the same form
    """
    missing = [d for d in per_dim if d not in weights]
    if missing:
        raise ArgumentError(f"no weight for dimension(s) {sorted(missing)}")
    dims = sorted(per_dim)
    s_e = sum(weights[d] * np.asarray(per_dim[d][0], dtype=float) for d in dims)
    s_r = sum(weights[d] * np.asarray(per_dim[d][1], dtype=float) for d in dims)
    per_dimension = {d: pair_score(per_dim[d][0], per_dim[d][1]) for d in dims}
    return CombinedScores(np.asarray(s_e), np.asarray(s_r), pair_score(s_e, s_r), per_dimension)


# Legacy scores
def mean_ranks(table: ResultsTable) -> np.ndarray:
    """Ranks of the run-averaged errors per problem, averaged over problems"""
    return rankdata(table.errors.mean(axis=2), axis=0).mean(axis=1)


def cec2017_components(table: ResultsTable) -> Tuple[np.ndarray, np.ndarray]:
    """(sum of absolute errors over problems and runs, mean-based rank)"""
    return table.errors.sum(axis=(1, 2)), mean_ranks(table)


def cec2017_score(table: ResultsTable) -> np.ndarray:
    return pair_score(*cec2017_components(table))


def cec2020_components(table: ResultsTable) -> Tuple[np.ndarray, np.ndarray]:
    """
    Best-run errors normalized by the worst best-run error per problem

    Problems whose largest best-run error is below 1e-12 contribute 0.
    """
    best = table.errors.min(axis=2)
    worst_best = best.max(axis=0)
    defined = worst_best >= ZERO_OPTIMUM
    normalized = np.zeros_like(best)
    normalized[:, defined] = best[:, defined] / worst_best[defined]
    return normalized.sum(axis=1), mean_ranks(table)


def cec2020_score(table: ResultsTable) -> np.ndarray:
    return pair_score(*cec2020_components(table))


def digit_count(error: float) -> int:
    return int(sum(error < 10.0 ** -k for k in range(1, DIGITS + 1)))


def cec2019_digits(errors_per_run) -> float:
    """Average correct digits (at most 10) over the 25 smallest run errors"""
    errors = np.sort(np.asarray(errors_per_run, dtype=float).reshape(-1))
    if errors.size < BEST_RUNS:
        raise ArgumentError(f"digit score needs at least {BEST_RUNS} runs, got {errors.size}")
    return float(np.mean([digit_count(e) for e in errors[:BEST_RUNS]]))


def cec2019_score(table: ResultsTable) -> np.ndarray:
    """Digit score summed over problems per algorithm"""
    k, j, _ = table.shape
    return np.array([[cec2019_digits(table.errors[a, p]) for p in range(j)] for a in range(k)]).sum(axis=1)


LEGACY_COMPONENTS = {
    "cec2017": cec2017_components,
    "cec2020": cec2020_components,
}
LEGACY_KINDS = ("cec2017", "cec2020", "cec2019")


# Report assembly
@dataclass
class DimensionScores:
    dim: int
    accuracy: np.ndarray
    rank: np.ndarray
    score: np.ndarray
    wtl: Dict[str, Tuple[int, int, int]]


@dataclass
class ScoreReport:
    algorithms: List[str]
    reference: str
    weights: Dict[int, float]
    dimensions: List[DimensionScores]
    combined: CombinedScores
    wtl: Dict[str, Tuple[int, int, int]]
    legacy: Dict[str, np.ndarray] = field(default_factory=dict)


def score_table(
    table: ResultsTable,
    weights: Union[str, Mapping[int, float]] = "desk",
    reference: Optional[str] = None,
    legacy: Sequence[str] = (),
    alpha: float = 0.05,
) -> ScoreReport:
    """
    Score a multi-dimension results table

    Args:
        table: Errors of every algorithm on every problem and run
        weights: Preset name or {D: w_D}
        reference: Algorithm whose W/T/L is reported (default: first algorithm)
        legacy: Any of cec2017, cec2020, cec2019
        alpha: Significance level of the rank-sum test

    Returns:
        ScoreReport with per-dimension E/R/S, combined scores, W/T/L and legacy scores
    """
    reference = reference or table.algorithms[0]
    table.index(reference)
    unknown = [kind for kind in legacy if kind not in LEGACY_KINDS]
    if unknown:
        raise ArgumentError(f"unknown legacy score(s) {unknown}. Known: {', '.join(LEGACY_KINDS)}")

    dims = table.dimension_values()
    resolved = resolve_weights(weights, dims)

    per_dim = {}
    dimension_scores = []
    total_wtl = {name: (0, 0, 0) for name in table.algorithms}
    for dim in dims:
        sub = table.for_dimension(dim)
        _, _, accuracy = accuracy_scores(sub)
        _, rank = friedman_ranks(sub)
        per_dim[dim] = (accuracy, rank)
        wtl = wtl_table(sub, reference, alpha)
        for name, counts in wtl.items():
            total_wtl[name] = tuple(a + b for a, b in zip(total_wtl[name], counts))
        dimension_scores.append(DimensionScores(dim, accuracy, rank, pair_score(accuracy, rank), wtl))

    combined = combined_scores(per_dim, resolved)

    legacy_scores = {}
    for kind in legacy:
        if kind == "cec2019":
            legacy_scores[kind] = cec2019_score(table)
            continue
        components = {dim: LEGACY_COMPONENTS[kind](table.for_dimension(dim)) for dim in dims}
        legacy_scores[kind] = combined_scores(components, resolved).total

    return ScoreReport(
        algorithms=list(table.algorithms),
        reference=reference,
        weights=resolved,
        dimensions=dimension_scores,
        combined=combined,
        wtl=total_wtl,
        legacy=legacy_scores,
    )
