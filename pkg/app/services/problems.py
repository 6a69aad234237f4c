"""Bound-constrained benchmark problems

Base functions are vectorized over the last axis: ``z`` of shape ``(..., D)``
yields values of shape ``(...)``. Problems wrap an objective object that maps a
``(n, D)`` matrix of candidate positions to ``n`` objective values.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ArgumentError


# Base functions (minimum 0 at z = 0)
SCHWEFEL_SHIFT = 4.209687462275036e002
SCHWEFEL_CONSTANT = 4.189828872724338e002


def sphere(z: np.ndarray) -> np.ndarray:
    return np.sum(z * z, axis=-1)


def bent_cigar(z: np.ndarray) -> np.ndarray:
    return z[..., 0] ** 2 + 1e6 * np.sum(z[..., 1:] ** 2, axis=-1)


def zakharov(z: np.ndarray) -> np.ndarray:
    weights = 0.5 * np.arange(1, z.shape[-1] + 1)
    s1 = np.sum(z * z, axis=-1)
    s2 = np.sum(weights * z, axis=-1)
    return s1 + s2 ** 2 + s2 ** 4


def rosenbrock(z: np.ndarray) -> np.ndarray:
    # optimum moved from (1, ..., 1) to the origin
    y = z + 1.0
    head, tail = y[..., :-1], y[..., 1:]
    return np.sum(100.0 * (head * head - tail) ** 2 + (head - 1.0) ** 2, axis=-1)


def rastrigin(z: np.ndarray) -> np.ndarray:
    return np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0, axis=-1)


def schwefel_1_2(z: np.ndarray) -> np.ndarray:
    return np.sum(np.cumsum(z, axis=-1) ** 2, axis=-1)


def modified_schwefel(z: np.ndarray) -> np.ndarray:
    n = z.shape[-1]
    y = z + SCHWEFEL_SHIFT
    inner = np.clip(y, -500.0, 500.0)
    terms = -inner * np.sin(np.sqrt(np.abs(inner)))

    high = y > 500.0
    low = y < -500.0
    folded_high = 500.0 - np.fmod(y, 500.0)
    folded_low = -500.0 + np.fmod(np.abs(y), 500.0)
    terms = np.where(
        high,
        -folded_high * np.sin(np.sqrt(np.abs(folded_high))) + ((y - 500.0) / 100.0) ** 2 / n,
        terms,
    )
    terms = np.where(
        low,
        -folded_low * np.sin(np.sqrt(np.abs(folded_low))) + ((y + 500.0) / 100.0) ** 2 / n,
        terms,
    )
    return np.sum(terms, axis=-1) + SCHWEFEL_CONSTANT * n


def levy(z: np.ndarray) -> np.ndarray:
    w = 1.0 + z / 4.0
    head = w[..., :-1]
    first = np.sin(np.pi * w[..., 0]) ** 2
    middle = np.sum((head - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * head + 1.0) ** 2), axis=-1)
    last = (w[..., -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[..., -1]) ** 2)
    return first + middle + last


def schaffer_f7(z: np.ndarray) -> np.ndarray:
    if z.shape[-1] < 2:
        s = np.abs(z)
    else:
        s = np.sqrt(z[..., :-1] ** 2 + z[..., 1:] ** 2)
    pairs = s.shape[-1]
    root = np.sqrt(s)
    total = np.sum(root + root * np.sin(50.0 * s ** 0.2) ** 2, axis=-1)
    return (total / pairs) ** 2


def ackley(z: np.ndarray) -> np.ndarray:
    n = z.shape[-1]
    sum_sq = np.sum(z * z, axis=-1) / n
    sum_cos = np.sum(np.cos(2.0 * np.pi * z), axis=-1) / n
    return np.e - 20.0 * np.exp(-0.2 * np.sqrt(sum_sq)) - np.exp(sum_cos) + 20.0


def griewank(z: np.ndarray) -> np.ndarray:
    divisors = np.sqrt(np.arange(1, z.shape[-1] + 1))
    return 1.0 + np.sum(z * z, axis=-1) / 4000.0 - np.prod(np.cos(z / divisors), axis=-1)


def happy_cat(z: np.ndarray) -> np.ndarray:
    n = z.shape[-1]
    y = z - 1.0
    r2 = np.sum(y * y, axis=-1)
    total = np.sum(y, axis=-1)
    return np.abs(r2 - n) ** 0.25 + (0.5 * r2 + total) / n + 0.5


def hgbat(z: np.ndarray) -> np.ndarray:
    n = z.shape[-1]
    y = z - 1.0
    r2 = np.sum(y * y, axis=-1)
    total = np.sum(y, axis=-1)
    return np.abs(r2 ** 2 - total ** 2) ** 0.5 + (0.5 * r2 + total) / n + 0.5


BASE_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sphere": sphere,
    "bent_cigar": bent_cigar,
    "zakharov": zakharov,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
    "schwefel_1_2": schwefel_1_2,
    "modified_schwefel": modified_schwefel,
    "levy": levy,
    "schaffer_f7": schaffer_f7,
    "ackley": ackley,
    "griewank": griewank,
    "happy_cat": happy_cat,
    "hgbat": hgbat,
}

# Search-range scaling applied before rotation (CEC convention, bounds [-100, 100])
DEFAULT_SHRINK: Dict[str, float] = {
    "rosenbrock": 2.048 / 100.0,
    "rastrigin": 5.12 / 100.0,
    "modified_schwefel": 1000.0 / 100.0,
    "griewank": 600.0 / 100.0,
    "happy_cat": 5.0 / 100.0,
    "hgbat": 5.0 / 100.0,
}


def base_function(kind: str, z) -> np.ndarray:
    """
    Evaluate a named base function

    Args:
        kind: One of BASE_FUNCTIONS
        z: Point(s), shape (D,) or (n, D)

    Returns:
        Scalar for a single point, array of n values otherwise
    """
    try:
        func = BASE_FUNCTIONS[kind]
    except KeyError:
        raise ArgumentError(f"unknown base function '{kind}'. Known: {', '.join(sorted(BASE_FUNCTIONS))}")
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ArgumentError(f"{kind} requires finite input")
    value = func(z)
    return float(value) if np.ndim(value) == 0 else value


# Transforms
@dataclass(frozen=True, eq=False)
class TransformSpec:
    """Shift, shrink and rotation applied before a base function, plus an additive bias"""
    shift: np.ndarray
    rotation: np.ndarray
    bias: float = 0.0
    shrink: float = 1.0

    def __post_init__(self):
        shift = np.array(self.shift, dtype=float).reshape(-1)
        rotation = np.array(self.rotation, dtype=float)
        if rotation.shape != (shift.size, shift.size):
            raise ArgumentError(
                f"rotation must be {shift.size}x{shift.size}, got {rotation.shape}"
            )
        shift.setflags(write=False)
        rotation.setflags(write=False)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "shrink", float(self.shrink))

    @property
    def dim(self) -> int:
        return self.shift.size

    @classmethod
    def identity(cls, dim: int, bias: float = 0.0, shrink: float = 1.0) -> "TransformSpec":
        return cls(np.zeros(dim), np.eye(dim), bias, shrink)

    def orthogonality_error(self) -> float:
        """Max-norm of M^T M - I"""
        gram = self.rotation.T @ self.rotation
        return float(np.max(np.abs(gram - np.eye(self.dim))))


def apply_transform(spec: TransformSpec, x) -> np.ndarray:
    """z = M (shrink (x - o)) for a point (D,) or a batch (n, D)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.dim:
        raise ArgumentError(f"expected dimension {spec.dim}, got {x.shape[-1]}")
    return (spec.shrink * (x - spec.shift)) @ spec.rotation.T


@dataclass(frozen=True)
class HybridComponent:
    kind: str
    weight: float = 1.0
    shrink: float = 1.0


def _validate_partition(partition: Sequence[Sequence[int]], dim: int) -> List[np.ndarray]:
    parts = [np.asarray(p, dtype=int).reshape(-1) for p in partition]
    flat = np.concatenate(parts) if parts else np.array([], dtype=int)
    if flat.size != dim or not np.array_equal(np.sort(flat), np.arange(dim)):
        raise ArgumentError(f"partition must be a disjoint cover of 0..{dim - 1}")
    return parts


def hybrid_eval(
    partition: Sequence[Sequence[int]],
    components: Sequence[HybridComponent],
    x,
    transform: Optional[TransformSpec] = None,
):
    """
    Hybrid function: weighted sum of base functions over disjoint coordinate groups

    Args:
        partition: Index groups (0-based) covering every coordinate exactly once
        components: One HybridComponent per group
        x: Point(s) in the original space
        transform: Shared shift/rotation applied before splitting; its bias is added

    Returns:
        Objective value(s)
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    if len(partition) != len(components):
        raise ArgumentError(
            f"partition has {len(partition)} groups but {len(components)} components were given"
        )
    parts = _validate_partition(partition, dim)
    z = apply_transform(transform, x) if transform is not None else x

    total = np.zeros(z.shape[:-1])
    for part, component in zip(parts, components):
        total = total + component.weight * base_function(component.kind, component.shrink * z[..., part])
    if transform is not None:
        total = total + transform.bias
    return float(total) if np.ndim(total) == 0 else total


@dataclass(frozen=True, eq=False)
class CompositionComponent:
    """One constituent of a composition: a shifted/rotated base function and its weighting"""
    kind: str
    transform: TransformSpec
    sigma: float
    lam: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0 or not self.lam > 0:
            raise ArgumentError("composition components need sigma > 0 and lambda > 0")

    @property
    def optimum(self) -> np.ndarray:
        return self.transform.shift

    def raw(self, x: np.ndarray) -> np.ndarray:
        return base_function(self.kind, apply_transform(self.transform, x))


@dataclass(frozen=True, eq=False)
class CompositionSpec:
    components: Tuple[CompositionComponent, ...]
    global_bias: float = 0.0

    def __post_init__(self):
        if len(self.components) == 0:
            raise ArgumentError("composition needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        dims = {c.transform.dim for c in self.components}
        if len(dims) != 1:
            raise ArgumentError(f"composition components disagree on dimension: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.components[0].transform.dim


def composition_weights(spec: CompositionSpec, x) -> np.ndarray:
    """
    Normalized component weights at x

    Returns:
        (k,) for a single point or (n, k) for a batch; rows sum to 1
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    dim = spec.dim
    optima = np.stack([c.optimum for c in spec.components])              # (k, D)
    sigmas = np.array([c.sigma for c in spec.components])                # (k,)
    d2 = np.sum((x[:, None, :] - optima[None, :, :]) ** 2, axis=-1)     # (n, k)

    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.exp(-d2 / (2.0 * dim * sigmas ** 2)) / np.sqrt(d2)

    hit = d2 == 0.0
    any_hit = hit.any(axis=1)
    # exact hit: the first coincident component takes the whole weight
    first_hit = np.argmax(hit, axis=1)
    raw = np.where(any_hit[:, None], 0.0, raw)
    raw[any_hit, first_hit[any_hit]] = 1.0

    totals = raw.sum(axis=1)
    # every weight underflowed: fall back to equal weights
    raw[totals == 0.0] = 1.0
    weights = raw / raw.sum(axis=1, keepdims=True)
    return weights[0] if single else weights


def composition_eval(spec: CompositionSpec, x):
    """f(x) = sum_i w_i (lambda_i g_i(x) + bias_i) + global_bias"""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = np.atleast_2d(x)
    if batch.shape[-1] != spec.dim:
        raise ArgumentError(f"expected dimension {spec.dim}, got {batch.shape[-1]}")
    weights = composition_weights(spec, batch)
    values = np.stack(
        [c.lam * np.atleast_1d(c.raw(batch)) + c.bias for c in spec.components], axis=1
    )
    result = np.sum(weights * values, axis=1) + spec.global_bias
    return float(result[0]) if single else result


# Objectives and problems
@dataclass(frozen=True, eq=False)
class ShiftedRotated:
    kind: str
    transform: TransformSpec

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return base_function(self.kind, apply_transform(self.transform, x)) + self.transform.bias


@dataclass(frozen=True, eq=False)
class Hybrid:
    partition: Tuple[Tuple[int, ...], ...]
    components: Tuple[HybridComponent, ...]
    transform: TransformSpec

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return hybrid_eval(self.partition, self.components, x, self.transform)


@dataclass(frozen=True, eq=False)
class Composition:
    spec: CompositionSpec

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return composition_eval(self.spec, x)


@dataclass(frozen=True, eq=False)
class Problem:
    """
    A bound-constrained objective with a known optimum value

    ``objective`` must accept an (n, D) array and return n values; it must be
    picklable (module-level callables or the objective classes above) so runs
    can be dispatched to worker processes.
    """
    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    optimum_value: float
    objective: Callable[[np.ndarray], np.ndarray]
    optimum_position: Optional[np.ndarray] = None
    category: str = ""
    description: str = field(default="", compare=False)

    def __post_init__(self):
        lower = np.array(np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)))
        upper = np.array(np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)))
        if np.any(~(lower < upper)):
            raise ArgumentError(f"problem '{self.name}': bounds must satisfy lower < upper")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "optimum_value", float(self.optimum_value))
        if self.optimum_position is not None:
            position = np.array(self.optimum_position, dtype=float).reshape(-1)
            position.setflags(write=False)
            object.__setattr__(self, "optimum_position", position)

    def evaluate(self, x):
        """Objective value of one point (D,) or of every row of an (n, D) array"""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = np.atleast_2d(x)
        if batch.shape[-1] != self.dim:
            raise ArgumentError(f"problem '{self.name}' expects dimension {self.dim}, got {batch.shape[-1]}")
        values = np.asarray(self.objective(batch), dtype=float).reshape(-1)
        return float(values[0]) if single else values

    def error(self, value: float) -> float:
        return float(value) - self.optimum_value


def shifted_rotated_problem(
    name: str,
    kind: str,
    transform: TransformSpec,
    lower: float = -100.0,
    upper: float = 100.0,
    category: str = "basic",
) -> Problem:
    """Problem whose optimum value is the transform bias, attained at the shift."""
    return Problem(
        name=name,
        dim=transform.dim,
        lower=lower,
        upper=upper,
        optimum_value=transform.bias,
        objective=ShiftedRotated(kind, transform),
        optimum_position=transform.shift,
        category=category,
        description=f"shifted-rotated {kind}",
    )
