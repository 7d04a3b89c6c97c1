"""Pinhole camera model used for depth back-projection and rendering.

Coordinate convention: camera at the origin, x right, y down, z forward
(into the scene), all in meters. Pixel (u, v) = (column, row), so
u = fx * x / z + cx and v = fy * y / z + cy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise DataError("camera focal lengths must be positive, got "
                            f"fx={self.fx}, fy={self.fy}")
        if self.width <= 0 or self.height <= 0:
            raise DataError("camera resolution must be positive")

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Project 3D points (N, 3) to pixel coordinates.

        Returns (u, v, z) as float arrays; callers round/clip as needed.
        Points with z <= 0 project to NaN.
        """
        points = np.asarray(points, dtype=np.float64)
        z = points[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(z > 0, self.fx * points[..., 0] / z + self.cx, np.nan)
            v = np.where(z > 0, self.fy * points[..., 1] / z + self.cy, np.nan)
        return u, v, z

    def backproject(self, u: np.ndarray, v: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Lift pixels (u, v) with depth z (meters) back to 3D points (N, 3)."""
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        x = (u - self.cx) * z / self.fx
        y = (v - self.cy) * z / self.fy
        return np.stack([x, y, z], axis=-1)


# Kinect-v1-like 320x240 sensor; every consumer takes intrinsics explicitly,
# this is only the fallback used by config defaults and the synthetic generator.
DEFAULT_INTRINSICS = CameraIntrinsics(fx=285.0, fy=285.0, cx=160.0, cy=120.0,
                                      width=320, height=240)
