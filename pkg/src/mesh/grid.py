from dataclasses import dataclass
from typing import Tuple, Union
import numpy as np


#Uniform cell-centered rectangular mesh on [0, lx] x [0, ly]
@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"cell counts must be >= 4, got nx={self.nx}, ny={self.ny}")
        if not (self.lx > 0 and self.ly > 0) or not np.isfinite([self.lx, self.ly]).all():
            raise ValueError(f"domain extents must be positive, got lx={self.lx}, ly={self.ly}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> Tuple[int, int]:
        """Array shape of a cell field, (ny, nx): j outer, i inner"""
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    #Cell-center coordinate arrays shaped like a field
    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="xy")


#Build a grid, rejecting counts < 4 and non-positive extents
def make_grid(nx: int, ny: int, lx: float, ly: float) -> Grid:
    return Grid(int(nx), int(ny), float(lx), float(ly))


#Read-only copy of an array, reshaped to the requested shape
def _frozen(values: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(shape)
    arr.flags.writeable = False
    return arr


#Cell-centered scalar sample on a grid, immutable once built
@dataclass(frozen=True)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise ValueError(f"field has {values.size} values, grid needs {self.grid.size}")
        if not np.isfinite(values).all():
            raise ValueError("field contains NaN or Inf")
        object.__setattr__(self, "values", _frozen(values, self.grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    #Row-major flat view (j outer, i inner)
    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    #Mirror across x = lx/2
    def mirrored_x(self) -> "Field":
        return Field(self.grid, self.values[:, ::-1])


#Face-centered velocity: x-faces (ny, nx+1), y-faces (ny+1, nx)
@dataclass(frozen=True)
class FaceVelocity:
    grid: Grid
    vx: np.ndarray
    vy: np.ndarray
    zero_flux: bool = True

    def __post_init__(self):
        g = self.grid
        vx = np.array(self.vx, dtype=np.float64).reshape(g.ny, g.nx + 1)
        vy = np.array(self.vy, dtype=np.float64).reshape(g.ny + 1, g.nx)
        if not (np.isfinite(vx).all() and np.isfinite(vy).all()):
            raise ValueError("face velocity contains NaN or Inf")
        if self.zero_flux:
            vx[:, 0] = 0.0
            vx[:, -1] = 0.0
            vy[0, :] = 0.0
            vy[-1, :] = 0.0
        object.__setattr__(self, "vx", _frozen(vx, vx.shape))
        object.__setattr__(self, "vy", _frozen(vy, vy.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "FaceVelocity":
        return cls(grid, np.zeros((grid.ny, grid.nx + 1)), np.zeros((grid.ny + 1, grid.nx)))

    def scaled(self, factor: float) -> "FaceVelocity":
        return FaceVelocity(self.grid, factor * self.vx, factor * self.vy, self.zero_flux)

    def max_speed(self) -> float:
        return float(max(np.abs(self.vx).max(), np.abs(self.vy).max()))

    #True when every wall-normal component is exactly zero
    def is_zero_flux(self) -> bool:
        return bool(
            not self.vx[:, 0].any() and not self.vx[:, -1].any()
            and not self.vy[0, :].any() and not self.vy[-1, :].any()
        )


FieldLike = Union[Field, np.ndarray]
