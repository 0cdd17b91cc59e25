"""Axis-aligned 2D pixel boxes, half-open convention [xmin, xmax) x [ymin, ymax)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class BBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def check_within(self, width: int, height: int) -> None:
        if self.xmin < 0 or self.ymin < 0 or self.xmax > width or self.ymax > height:
            raise ValueError(f"box {self.as_tuple()} outside {width}x{height} image")
