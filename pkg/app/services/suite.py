"""Desk benchmark suite and transform data files"""

from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import ArgumentError, DataError
from app.core.logging_config import logger
from app.services.problems import (
    DEFAULT_SHRINK,
    Composition,
    CompositionComponent,
    CompositionSpec,
    Hybrid,
    HybridComponent,
    Problem,
    TransformSpec,
    shifted_rotated_problem,
)
from app.services.rng import RngState, seed_rng


ORTHOGONALITY_TOLERANCE = 1e-6
BOUND = 100.0
SHIFT_RANGE = 80.0

PathLike = Union[str, Path]


def load_transform_data(path: PathLike, dim: int, default_bias: float = 0.0) -> TransformSpec:
    """
    Read a transform data file

    Layout: line 1 holds D, line 2 the D shift values, the next D lines the
    rotation rows and an optional last line the bias.

    Args:
        path: Text file
        dim: Expected dimension
        default_bias: Bias used when the file has no bias line

    Returns:
        TransformSpec with a validated orthogonal rotation and a shift inside the search box
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"transform data file not found: {path}")

    lines = [line.split() for line in path.read_text().splitlines() if line.strip()]
    try:
        if len(lines) < 2 + dim or len(lines) > 3 + dim:
            raise DataError(f"{path}: expected {2 + dim} or {3 + dim} non-empty lines, found {len(lines)}")
        if len(lines[0]) != 1 or int(lines[0][0]) != dim:
            raise DataError(f"{path}: header declares dimension {' '.join(lines[0])}, expected {dim}")
        shift = np.array([float(v) for v in lines[1]])
        rotation = np.array([[float(v) for v in row] for row in lines[2:2 + dim]])
        bias = float(default_bias)
        if len(lines) == 3 + dim:
            if len(lines[-1]) != 1:
                raise DataError(f"{path}: bias line must hold a single value")
            bias = float(lines[-1][0])
    except ValueError as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"{path}: could not parse transform data ({e})")

    if shift.size != dim or rotation.shape != (dim, dim):
        raise DataError(f"{path}: expected {dim} shift values and a {dim}x{dim} rotation")
    if np.any(np.abs(shift) > BOUND):
        raise DataError(
            f"{path}: shift leaves the search box [-{BOUND:g}, {BOUND:g}] (max |o| = {np.abs(shift).max():.6g})"
        )

    spec = TransformSpec(shift, rotation, bias)
    error = spec.orthogonality_error()
    if error >= ORTHOGONALITY_TOLERANCE:
        raise DataError(f"{path}: rotation is not orthogonal (max |M^T M - I| = {error:.3e})")
    return spec


def write_transform_data(spec: TransformSpec, path: PathLike) -> Path:
    """Write a transform in the layout read by load_transform_data."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [str(spec.dim), " ".join(f"{v:.17g}" for v in spec.shift)]
    rows.extend(" ".join(f"{v:.17g}" for v in row) for row in spec.rotation)
    rows.append(f"{spec.bias:.17g}")
    path.write_text("\n".join(rows) + "\n")
    return path


def random_orthogonal(rng: RngState, dim: int) -> np.ndarray:
    """Orthogonal matrix from the QR factorization of a Gaussian matrix, diagonal signs corrected."""
    if dim < 1:
        raise ArgumentError(f"dimension must be >= 1, got {dim}")
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_shift(rng: RngState, dim: int) -> np.ndarray:
    return rng.uniform(-SHIFT_RANGE, SHIFT_RANGE, dim)


def random_partition(rng: RngState, dim: int, proportions: Sequence[float]) -> Tuple[Tuple[int, ...], ...]:
    """Randomly permuted coordinates split into consecutive groups of the given proportions"""
    if dim < len(proportions):
        raise ArgumentError(f"cannot split {dim} coordinates into {len(proportions)} non-empty groups")
    permutation = rng.permutation(dim)
    sizes = [max(1, int(np.ceil(p * dim))) for p in proportions[:-1]]
    bounds = np.cumsum([0] + sizes)
    # leave at least one coordinate for every remaining group
    for i in range(1, len(bounds)):
        bounds[i] = min(bounds[i], dim - (len(proportions) - i))
    groups = [permutation[bounds[i]:bounds[i + 1]] for i in range(len(sizes))]
    groups.append(permutation[bounds[-1]:])
    return tuple(tuple(int(v) for v in g) for g in groups)


# Desk suite
BASIC = [
    (1, "bent_cigar", "unimodal"),
    (2, "zakharov", "unimodal"),
    (3, "rosenbrock", "basic"),
    (4, "rastrigin", "basic"),
    (5, "schaffer_f7", "basic"),
    (6, "levy", "basic"),
]

HYBRID = [
    (7, ("bent_cigar", "hgbat", "rastrigin"), (0.4, 0.4, 0.2)),
    (8, ("hgbat", "ackley", "rastrigin", "modified_schwefel"), (0.2, 0.2, 0.3, 0.3)),
    (9, ("happy_cat", "rosenbrock", "modified_schwefel", "ackley"), (0.2, 0.2, 0.3, 0.3)),
]

# (kind, sigma, lambda) per component; the first component carries bias 0
COMPOSITION = [
    (10, (("rastrigin", 10.0, 1.0), ("griewank", 20.0, 10.0), ("modified_schwefel", 30.0, 1.0))),
    (11, (("happy_cat", 10.0, 1.0), ("hgbat", 20.0, 1.0), ("rastrigin", 30.0, 10.0), ("ackley", 40.0, 10.0))),
    (12, (("levy", 10.0, 1.0), ("schaffer_f7", 20.0, 10.0), ("griewank", 30.0, 10.0),
          ("rosenbrock", 40.0, 1e-6), ("sphere", 50.0, 1e-6))),
]

SUITE_SIZE = len(BASIC) + len(HYBRID) + len(COMPOSITION)
MIN_DIMENSION = max(len(kinds) for _, kinds, _ in HYBRID)


def problem_name(index: int, kind: str, dim: int) -> str:
    return f"F{index:02d}_{kind}_D{dim}"


def _override(transform_dir: Optional[Path], index: int, dim: int) -> Optional[TransformSpec]:
    if transform_dir is None:
        return None
    path = transform_dir / f"F{index:02d}_D{dim}.txt"
    if not path.exists():
        return None
    logger.info(f"Using transform data from {path}")
    return load_transform_data(path, dim, default_bias=100.0 * index)


def _build_basic(rng, dim, index, kind, category, transform_dir) -> Problem:
    bias = 100.0 * index
    shift, rotation = random_shift(rng, dim), random_orthogonal(rng, dim)
    loaded = _override(transform_dir, index, dim)
    if loaded is not None:
        shift, rotation, bias = loaded.shift, loaded.rotation, loaded.bias
    transform = TransformSpec(shift, rotation, bias, DEFAULT_SHRINK.get(kind, 1.0))
    return shifted_rotated_problem(problem_name(index, kind, dim), kind, transform, -BOUND, BOUND, category)


def _build_hybrid(rng, dim, index, kinds, proportions, transform_dir) -> Problem:
    bias = 100.0 * index
    shift, rotation = random_shift(rng, dim), random_orthogonal(rng, dim)
    loaded = _override(transform_dir, index, dim)
    if loaded is not None:
        shift, rotation, bias = loaded.shift, loaded.rotation, loaded.bias
    partition = random_partition(rng, dim, proportions)
    transform = TransformSpec(shift, rotation, bias)
    components = tuple(HybridComponent(kind, 1.0, DEFAULT_SHRINK.get(kind, 1.0)) for kind in kinds)
    return Problem(
        name=problem_name(index, "hybrid", dim),
        dim=dim,
        lower=-BOUND,
        upper=BOUND,
        optimum_value=bias,
        objective=Hybrid(partition, components, transform),
        optimum_position=shift,
        category="hybrid",
        description="hybrid of " + ", ".join(kinds),
    )


def _build_composition(rng, dim, index, parts) -> Problem:
    bias = 100.0 * index
    components = []
    for position, (kind, sigma, lam) in enumerate(parts):
        transform = TransformSpec(
            random_shift(rng, dim), random_orthogonal(rng, dim), 0.0, DEFAULT_SHRINK.get(kind, 1.0)
        )
        components.append(CompositionComponent(kind, transform, sigma, lam, 100.0 * position))
    spec = CompositionSpec(tuple(components), bias)
    return Problem(
        name=problem_name(index, "composition", dim),
        dim=dim,
        lower=-BOUND,
        upper=BOUND,
        optimum_value=bias,
        objective=Composition(spec),
        optimum_position=components[0].transform.shift,
        category="composition",
        description="composition of " + ", ".join(p[0] for p in parts),
    )


def make_suite(
    dimension: int,
    seed: int = 0,
    problems: Optional[Sequence[int]] = None,
    transform_dir: Optional[PathLike] = None,
    rng: Optional[RngState] = None,
) -> List[Problem]:
    """
    Build the 12-problem desk suite at one dimension

    Problems 1-2 are unimodal, 3-6 basic, 7-9 hybrid and 10-12 composition.
    Every problem is shifted and rotated and carries the bias 100 * index
    (or the bias line of its transform file), which is also its known
    optimum value.

    Args:
        dimension: Problem dimension D (>= 4)
        seed: Suite seed; the generator is seeded with seed + D unless rng is given
        problems: Optional subset of 1-based problem indices
        transform_dir: Directory with F{index:02d}_D{D}.txt files overriding random transforms
        rng: Explicit generator

    Returns:
        Problems in index order
    """
    if dimension < MIN_DIMENSION:
        raise ArgumentError(f"desk suite needs dimension >= {MIN_DIMENSION}, got {dimension}")
    if seed < 0:
        raise ArgumentError(f"suite seed must be non-negative, got {seed}")
    wanted = set(range(1, SUITE_SIZE + 1)) if problems is None else set(problems)
    unknown = wanted - set(range(1, SUITE_SIZE + 1))
    if unknown:
        raise ArgumentError(f"unknown suite problems {sorted(unknown)}; valid indices are 1..{SUITE_SIZE}")

    directory = Path(transform_dir) if transform_dir is not None else None
    if directory is not None and not directory.is_dir():
        raise ArgumentError(f"transform directory does not exist: {directory}")

    rng = rng if rng is not None else seed_rng(seed + dimension)

    # Every problem consumes its random draws even when filtered out, so a
    # subset reproduces the same transforms as the full suite.
    built: List[Problem] = []
    for index, kind, category in BASIC:
        problem = _build_basic(rng, dimension, index, kind, category, directory)
        if index in wanted:
            built.append(problem)
    for index, kinds, proportions in HYBRID:
        problem = _build_hybrid(rng, dimension, index, kinds, proportions, directory)
        if index in wanted:
            built.append(problem)
    for index, parts in COMPOSITION:
        problem = _build_composition(rng, dimension, index, parts)
        if index in wanted:
            built.append(problem)

    logger.debug(f"Built desk suite D={dimension} seed={seed}: {len(built)} problems")
    return built


SUITES: Dict[str, Callable[..., List[Problem]]] = {
    "desk": make_suite,
}


def build_suite(kind: str, dimension: int, **kwargs) -> List[Problem]:
    try:
        factory = SUITES[kind]
    except KeyError:
        raise ArgumentError(f"unknown suite '{kind}'. Known: {', '.join(sorted(SUITES))}")
    return factory(dimension, **kwargs)
