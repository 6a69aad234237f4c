"""On-disk persistence of run records

Layout: ``<root>/<algorithm>/<problem>/run_<index>.csv`` holds the
best-so-far checkpoints (columns ``nfe,error``) and ``run_<index>.json`` the
record metadata. The JSON file is written last, so its presence marks a
complete record.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import pandas as pd

from app.core.errors import ArgumentError, DataError
from app.core.logging_config import logger
from app.models.schemas import RunRecord


PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"


def _atomic_write(path: Path, writer):
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            writer(handle)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


class ResultsStore:
    """Run records of one campaign directory"""

    def __init__(self, root: PathLike):
        self.root = Path(root)

    def _stem(self, algorithm: str, problem: str, run: int) -> Path:
        return self.root / algorithm / problem / f"run_{run:03d}"

    def checkpoint_path(self, algorithm: str, problem: str, run: int) -> Path:
        return self._stem(algorithm, problem, run).with_suffix(".csv")

    def sidecar_path(self, algorithm: str, problem: str, run: int) -> Path:
        return self._stem(algorithm, problem, run).with_suffix(".json")

    def exists(self, algorithm: str, problem: str, run: int) -> bool:
        return self.sidecar_path(algorithm, problem, run).exists()

    def write(self, record: RunRecord) -> Path:
        """Persist one record; returns the sidecar path."""
        frame = pd.DataFrame(record.checkpoints, columns=["nfe", "error"])
        frame["nfe"] = frame["nfe"].astype("int64")
        csv_path = self.checkpoint_path(record.algorithm, record.problem, record.run)
        _atomic_write(csv_path, lambda h: frame.to_csv(h, index=False, float_format=FLOAT_FORMAT))

        sidecar = json.dumps(record.sidecar(), indent=2, sort_keys=True)
        json_path = self.sidecar_path(record.algorithm, record.problem, record.run)
        _atomic_write(json_path, lambda h: h.write(sidecar + "\n"))
        logger.debug(f"Wrote {json_path}")
        return json_path

    def read(self, algorithm: str, problem: str, run: int, checkpoints: bool = True) -> RunRecord:
        json_path = self.sidecar_path(algorithm, problem, run)
        if not json_path.exists():
            raise FileNotFoundError(f"no record at {json_path}")
        return self._load(json_path, checkpoints)

    def _load(self, json_path: Path, checkpoints: bool) -> RunRecord:
        try:
            meta = json.loads(json_path.read_text(encoding="utf-8"))
            if checkpoints:
                frame = pd.read_csv(json_path.with_suffix(".csv"), dtype={"nfe": "int64", "error": "float64"})
                meta["checkpoints"] = list(zip(frame["nfe"].tolist(), frame["error"].tolist()))
            return RunRecord(**meta)
        except FileNotFoundError:
            raise DataError(f"checkpoint file missing for {json_path}")
        except (ValueError, TypeError, KeyError) as e:
            raise DataError(f"corrupt record {json_path}: {e}")

    def iter_paths(self) -> Iterator[Path]:
        """Sidecar paths in sorted (algorithm, problem, run) order"""
        if not self.root.is_dir():
            return iter(())
        return iter(sorted(self.root.glob("*/*/run_*.json")))

    def load_records(self, checkpoints: bool = False) -> List[RunRecord]:
        """
        Load every complete record under the root

        Args:
            checkpoints: Also read the checkpoint CSV files

        Returns:
            Records sorted by (algorithm, problem, run)
        """
        if not self.root.is_dir():
            raise FileNotFoundError(f"results directory not found: {self.root}")
        records = [self._load(path, checkpoints) for path in self.iter_paths()]
        records.sort(key=record_key)
        logger.info(f"Loaded {len(records)} records from {self.root}")
        return records


def record_key(record: RunRecord) -> Tuple[str, int, str, int]:
    return record.algorithm, record.dim, record.problem, record.run


def load_records(directory: PathLike, checkpoints: bool = False) -> List[RunRecord]:
    return ResultsStore(directory).load_records(checkpoints)


def resolve_under(base: PathLike, directory: Optional[PathLike]) -> Path:
    """Resolve directory relative to base; ArgumentError when it escapes base."""
    base = Path(base).resolve()
    target = (base / directory).resolve() if directory else base
    if target != base and base not in target.parents:
        raise ArgumentError(f"{directory} is outside {base}")
    return target
