"""Grids over the complex plane and per-cell dynamical tags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage

# tag codes used by Raster.tags()
ESCAPED, BOUNDED, BOUNDARY = 0, 1, 2
FOUR = ndimage.generate_binary_structure(2, 1)
EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True)
class GridSpec:
    center: complex
    half_width: float
    resolution: int

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "resolution", int(self.resolution))
        if self.resolution < 16:
            raise ValueError("resolution must be >= 16")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def cell(self) -> float:
        return 2.0 * self.half_width / self.resolution

    def axis(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) * self.cell - self.half_width

    def centers(self, rows: slice = slice(None)) -> np.ndarray:
        """Cell centers; row index grows with the imaginary part."""
        x = self.axis()
        return self.center + x[None, :] + 1j * x[rows, None]

    def point(self, row, col):
        x = self.axis()
        return self.center + x[np.asarray(col)] + 1j * x[np.asarray(row)]

    def index(self, z):
        """(row, col) of the cell containing z; may fall outside the grid."""
        z = np.asarray(z, dtype=complex) - self.center
        col = np.floor((z.real + self.half_width) / self.cell).astype(np.int64)
        row = np.floor((z.imag + self.half_width) / self.cell).astype(np.int64)
        return row, col

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.center, self.half_width, self.resolution * factor)

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "half_width": self.half_width,
                "resolution": self.resolution}

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        c = obj.get("center", [0.0, 0.0])
        return cls(complex(c[0], c[1]), obj["half_width"], obj["resolution"])


def four_adjacent(mask: np.ndarray) -> np.ndarray:
    """Cells with at least one 4-neighbour in ``mask`` (grid edge does not count)."""
    out = np.zeros_like(mask)
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


@dataclass
class Raster:
    """Escape-time classification of the cells of a grid.

    ``escaped_at[i, j]`` is the first step at which the orbit left D(0, R), or
    -1 when the orbit stayed bounded for ``max_iter`` steps.  Boundary cells are
    bounded cells with an escaped 4-neighbour.
    """

    grid: GridSpec
    escaped_at: np.ndarray
    R: float
    max_iter: int
    meta: dict = field(default_factory=dict)
    sampler: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    @property
    def bounded(self) -> np.ndarray:
        return self.escaped_at < 0

    @property
    def escaped(self) -> np.ndarray:
        return self.escaped_at >= 0

    @property
    def boundary(self) -> np.ndarray:
        return self.bounded & four_adjacent(self.escaped)

    @property
    def interior(self) -> np.ndarray:
        return self.bounded & ~self.boundary

    def tags(self) -> np.ndarray:
        t = np.where(self.bounded, BOUNDED, ESCAPED).astype(np.uint8)
        t[self.boundary] = BOUNDARY
        return t

    def gray(self) -> np.ndarray:
        g = np.where(self.escaped, 64 + np.minimum(self.escaped_at, 127), 0).astype(np.uint8)
        g[self.boundary] = 255
        return g

    def write_pgm(self, path: str | Path) -> None:
        """Binary P5 image (top row = largest imaginary part) plus a JSON sidecar."""
        path = Path(path)
        img = self.gray()[::-1]
        h, w = img.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(img).tobytes())
        side = {
            "grid": self.grid.to_json(),
            "R": self.R,
            "max_iter": self.max_iter,
            "orientation": "row 0 of the image is the top edge (largest imaginary part)",
            "gray_levels": {
                "0": "BoundedToBudget",
                "255": "Boundary",
                "64+min(n,127)": "EscapedAt(n)",
            },
            "meta": self.meta,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
