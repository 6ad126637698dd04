"""Spectral image container and the DAXS-IMG v1 on-disk format.

An image is a row-major float64 intensity matrix over two calibrated axes;
rows are indexed by the y axis. The serialized form is a single JSON
document::

    {"format": "daxs-img", "version": 1,
     "x_axis": {"name", "unit", "start", "step", "count"},
     "y_axis": {...},
     "data": [[row 0 ...], [row 1 ...], ...]}

Floats are written with Python's repr, which round-trips exactly. Alignment
may mark pixels missing; the validity mask is in-memory only and is not part
of the file format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_NAME = "daxs-img"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class AxisSpec:
    """Uniform axis: start + step * i for i in range(count)."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"axis count must be >= 1, got {self.count}")
        if not math.isfinite(self.start) or not math.isfinite(self.step):
            raise ValueError("axis start and step must be finite")
        if self.step == 0 and self.count > 1:
            raise ValueError("axis step must be nonzero for count > 1")

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @classmethod
    def from_dict(cls, doc: dict) -> "AxisSpec":
        return cls(start=float(doc["start"]), step=float(doc["step"]), count=int(doc["count"]))


@dataclass(frozen=True)
class AxisDescriptor:
    name: str
    unit: str
    start: float
    step: float
    count: int

    def __post_init__(self):
        AxisSpec(self.start, self.step, self.count)

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def index_of(self, value: float) -> int:
        """Nearest pixel index, clipped to the axis range."""
        i = round((value - self.start) / self.step) if self.count > 1 else 0
        return int(min(max(i, 0), self.count - 1))

    def contains(self, value: float) -> bool:
        lo, hi = sorted((self.start, self.start + self.step * (self.count - 1)))
        return lo <= value <= hi

    def to_dict(self) -> dict:
        return {"name": self.name, "unit": self.unit, "start": self.start,
                "step": self.step, "count": self.count}

    @classmethod
    def from_dict(cls, doc: dict) -> "AxisDescriptor":
        return cls(name=str(doc["name"]), unit=str(doc["unit"]), start=float(doc["start"]),
                   step=float(doc["step"]), count=int(doc["count"]))


class SpectralImage:
    """2-D intensity map over calibrated axes, plus an optional validity mask."""

    def __init__(self, x_axis: AxisDescriptor, y_axis: AxisDescriptor,
                 data: np.ndarray, mask: np.ndarray | None = None):
        data = np.asarray(data, dtype=float)
        if data.shape != (y_axis.count, x_axis.count):
            raise ValueError(
                f"data shape {data.shape} does not match axes "
                f"({y_axis.count}, {x_axis.count})"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("image data must be finite")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != data.shape:
                raise ValueError("mask shape must match data shape")
        self.x_axis = x_axis
        self.y_axis = y_axis
        self.data = data
        self.mask = mask

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def valid_mask(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.data.shape, dtype=bool)
        return self.mask

    def column(self, ix: int) -> np.ndarray:
        return self.data[:, ix]

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "x_axis": self.x_axis.to_dict(),
            "y_axis": self.y_axis.to_dict(),
            "data": self.data.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "SpectralImage":
        if doc.get("format") != FORMAT_NAME:
            raise ValueError(f"not a {FORMAT_NAME} document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported {FORMAT_NAME} version {doc.get('version')!r}")
        return cls(
            x_axis=AxisDescriptor.from_dict(doc["x_axis"]),
            y_axis=AxisDescriptor.from_dict(doc["y_axis"]),
            data=np.array(doc["data"], dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralImage":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "SpectralImage":
        return cls.from_json(Path(path).read_text())
