"""Paths of metrics ``s -> g_s`` sampled at collocation nodes in ``s``.

Open paths live on a Chebyshev axis ``[s_a, s_b]``; closed loops on a
periodic axis ``[0, L)``. Between nodes the path is evaluated by barycentric
(Chebyshev) or trigonometric (periodic) interpolation. A path is *flat* when
each ``g_s`` has constant coefficients; its samples then have shape
``(ns, m, m)`` instead of ``(ns, *grid, m, m)``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable

import numpy as np

from .geometry import MetricField
from .grid import CHEBYSHEV, PERIODIC, Axis, TorusGrid


class MetricPath:
    def __init__(
        self,
        axis: Axis,
        samples: np.ndarray,
        grid: TorusGrid | None = None,
        zeta: np.ndarray | None = None,
        closed: bool | None = None,
    ):
        samples = np.asarray(samples, dtype=float)
        if samples.shape[0] != axis.size:
            raise ValueError("one sample per s-node is required")
        m = samples.shape[-1]
        flat = samples.ndim == 3
        if not flat:
            if grid is None or samples.shape[1:] != grid.shape + (m, m):
                raise ValueError("non-flat samples need a matching grid")
        if grid is not None and grid.dim != m:
            raise ValueError("grid dimension does not match the metric size")
        samples = 0.5 * (samples + np.swapaxes(samples, -1, -2))
        if np.linalg.eigvalsh(samples).min() <= 0:
            raise ValueError("path leaves the positive definite cone at a node")
        if closed is None:
            closed = axis.kind == PERIODIC
        if axis.kind == PERIODIC and not closed:
            raise ValueError("a periodic s-axis describes a closed loop")
        if zeta is not None:
            zeta = np.asarray(zeta)
            if axis.kind == PERIODIC:
                raise ValueError("loops glued by a nontrivial map need a Chebyshev s-axis")
            if zeta.shape != (m, m) or np.abs(zeta - np.round(zeta)).max() > 0 or round(abs(np.linalg.det(zeta))) != 1:
                raise ValueError("gluing map must be an integer matrix with determinant +-1")
            if not flat:
                raise ValueError("nontrivial gluing is only supported for flat paths")
            A = zeta.astype(float)
            defect = np.abs(samples[-1] - A.T @ samples[0] @ A).max()
            if defect > 1e-10 * np.abs(samples[0]).max():
                raise ValueError(f"endpoint metrics are not related by the gluing map (defect {defect:.3e})")
        elif closed and axis.kind == CHEBYSHEV:
            defect = np.abs(samples[-1] - samples[0]).max()
            if defect > 1e-10 * np.abs(samples[0]).max():
                raise ValueError("closed path does not return to its starting metric")
        self.axis = axis
        self.samples = samples
        self.grid = grid
        self.zeta = zeta
        self.closed = bool(closed)
        self.m = m
        self.interp_error: float | None = None

    @classmethod
    def from_function(
        cls,
        fn: Callable[[float], np.ndarray],
        axis: Axis,
        grid: TorusGrid | None = None,
        zeta: np.ndarray | None = None,
        closed: bool | None = None,
        probes: int = 0,
    ) -> "MetricPath":
        """Sample ``fn`` at the nodes; with ``probes > 0`` also record the
        largest interpolation error over that many interior probe points."""
        samples = np.array([fn(float(s)) for s in axis.nodes])
        path = cls(axis, samples, grid=grid, zeta=zeta, closed=closed)
        if probes:
            s = axis.lo + axis.length * (np.arange(probes) + 0.5) / probes
            exact = np.array([fn(float(t)) for t in s])
            path.interp_error = float(np.abs(path.G(s) - exact).max())
        return path

    @property
    def is_flat(self) -> bool:
        return self.samples.ndim == 3

    @property
    def interval(self) -> tuple[float, float]:
        return self.axis.lo, self.axis.hi

    @property
    def nodes(self) -> np.ndarray:
        return self.axis.nodes

    @cached_property
    def derivative_samples(self) -> np.ndarray:
        """``d/ds g_s`` at the nodes, from spectral differentiation in ``s``."""
        return self.axis.diff(self.samples, axis=0)

    def _check_range(self, s: np.ndarray) -> None:
        if self.axis.kind == CHEBYSHEV:
            lo, hi = self.interval
            tol = 1e-12 * self.axis.length
            if np.any(s < lo - tol) or np.any(s > hi + tol):
                raise ValueError(f"s outside the path interval [{lo}, {hi}]")

    def G(self, s: float | np.ndarray) -> np.ndarray:
        """Metric at ``s``; a scalar ``s`` drops the leading axis."""
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        self._check_range(arr)
        out = self.axis.interpolate(self.samples, arr)
        return out[0] if np.ndim(s) == 0 else out

    def Gdot(self, s: float | np.ndarray) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        self._check_range(arr)
        out = self.axis.interpolate(self.derivative_samples, arr)
        return out[0] if np.ndim(s) == 0 else out

    def slice(self, k: int, grid: TorusGrid | None = None, **kw) -> MetricField:
        """The metric at the ``k``-th node as a field on ``grid``."""
        grid = grid or self.grid
        if grid is None:
            raise ValueError("a grid is needed to realise a slice as a field")
        return MetricField(grid, self.samples[k], **kw)

    def with_samples(self, samples: np.ndarray) -> "MetricPath":
        return MetricPath(self.axis, samples, grid=self.grid, zeta=self.zeta, closed=self.closed)

    def to_json(self) -> dict:
        out = {
            "s_axis": {"kind": self.axis.kind, "size": self.axis.size, "interval": [self.axis.lo, self.axis.hi]},
            "G": self.samples.tolist(),
            "closed": self.closed,
        }
        if self.grid is not None:
            out["grid"] = list(self.grid.shape)
        if self.zeta is not None:
            out["zeta"] = self.zeta.astype(int).tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MetricPath":
        ax = data["s_axis"]
        axis = Axis(int(ax["size"]), ax["kind"], float(ax["interval"][0]), float(ax["interval"][1]))
        grid = TorusGrid(data["grid"]) if "grid" in data else None
        zeta = np.array(data["zeta"]) if "zeta" in data else None
        return cls(axis, np.array(data["G"], dtype=float), grid=grid, zeta=zeta, closed=data.get("closed"))


# scenario paths


def rotation(m: int, i: int, j: int, t: float) -> np.ndarray:
    R = np.eye(m)
    c, s = np.cos(t), np.sin(t)
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = -s, s
    return R


def constant_path(G0: np.ndarray, axis: Axis, grid: TorusGrid | None = None) -> MetricPath:
    G0 = np.asarray(G0, dtype=float)
    return MetricPath.from_function(lambda s: G0, axis, grid=grid)


def exponential_path(G0: np.ndarray, axis: Axis, rate: float = 1.0) -> MetricPath:
    """``g_s = exp(2 rate s) g_0``: the slices of a cone."""
    G0 = np.asarray(G0, dtype=float)
    return MetricPath.from_function(lambda s: np.exp(2.0 * rate * s) * G0, axis)


def diagonal_path(exponents: Callable[[float], np.ndarray], axis: Axis) -> MetricPath:
    """``g_s = diag(exp(2 a_i(s)))``; the spinor transport along it is trivial."""
    return MetricPath.from_function(lambda s: np.diag(np.exp(2.0 * np.asarray(exponents(s)))), axis)


def rotating_loop(m: int, a: float, b: float, length: float = 1.0, size: int = 16, turns: int = 1) -> MetricPath:
    """Closed loop ``R(pi turns s/L) diag(a, b, 1, ..) R^T`` rotating in the first plane."""
    D = np.eye(m)
    D[0, 0], D[1, 1] = a, b
    axis = Axis(size, PERIODIC, 0.0, length)

    def fn(s):
        R = rotation(m, 0, 1, np.pi * turns * s / length)
        return R @ D @ R.T

    return MetricPath.from_function(fn, axis)


def tumbling_loop(diag: tuple[float, float, float], length: float = 1.0, size: int = 24) -> MetricPath:
    """Closed loop in dimension three whose connection matrices do not commute."""
    D = np.diag(diag)
    axis = Axis(size, PERIODIC, 0.0, length)

    def fn(s):
        t = s / length
        R = rotation(3, 0, 1, 2.0 * np.pi * t) @ rotation(3, 1, 2, 2.0 * np.pi * t)
        return R @ D @ R.T

    return MetricPath.from_function(fn, axis)
