"""JSON and CSV import/export.

Machine formats keep every float at 17 significant digits so values
round-trip exactly.
"""

import dataclasses
import enum
import json
import math
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def to_jsonable(obj: Any) -> Any:
    """Convert dataclasses, numpy values and enums into plain JSON types.

    Non-finite floats become None, since JSON has no NaN/Infinity.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(data: Any) -> str:
    """Canonical JSON text: sorted keys, indent 2."""
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True)


def _ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def write_json(data: Any, path: PathLike) -> Path:
    path = Path(path)
    _ensure_parent(path)
    path.write_text(dumps_json(data) + "\n")
    return path


def read_json(path: PathLike) -> Any:
    with open(path, "r") as f:
        return json.load(f)


def to_frame(table: Union[pd.DataFrame, Mapping[str, Any], Sequence[Mapping[str, Any]]]) -> pd.DataFrame:
    """Accept a DataFrame, a column mapping or a list of row dicts."""
    if isinstance(table, pd.DataFrame):
        return table
    if isinstance(table, Mapping):
        return pd.DataFrame({k: np.asarray(v) for k, v in table.items()})
    return pd.DataFrame(list(table))


def csv_text(table) -> str:
    return to_frame(table).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(table, path: PathLike) -> Path:
    path = Path(path)
    _ensure_parent(path)
    path.write_text(csv_text(table))
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


class ArtifactStore:
    """Output directory for one CLI invocation.

    Every artifact lands under `root`; the directory tree is created on
    first write. With no root configured, writes are skipped.
    """

    def __init__(self, root: Optional[PathLike] = None):
        self.root = Path(root) if root else None
        self.written: list[Path] = []

    @property
    def enabled(self) -> bool:
        return self.root is not None

    def _target(self, name: str) -> Optional[Path]:
        if self.root is None:
            return None
        return self.root / name

    def json(self, name: str, data: Any) -> Optional[Path]:
        target = self._target(name)
        if target is None:
            return None
        self.written.append(write_json(data, target))
        return target

    def csv(self, name: str, table) -> Optional[Path]:
        target = self._target(name)
        if target is None:
            return None
        self.written.append(write_csv(table, target))
        return target

    def text(self, name: str, body: str) -> Optional[Path]:
        target = self._target(name)
        if target is None:
            return None
        _ensure_parent(target)
        target.write_text(body if body.endswith("\n") else body + "\n")
        self.written.append(target)
        return target
