"""Tensor-product collocation grids with spectral differentiation.

Periodic axes use Fourier collocation; a Chebyshev (Gauss-Lobatto) axis is
available for the interval direction of a cylinder. Field arrays put the grid
axes first and any component axes last.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

PERIODIC = "periodic"
CHEBYSHEV = "chebyshev"

DEFAULT_CAP = 2**21


@dataclass(frozen=True)
class Axis:
    size: int
    kind: str = PERIODIC
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.kind not in (PERIODIC, CHEBYSHEV):
            raise ValueError(f"unknown axis kind {self.kind!r}")
        if not self.hi > self.lo:
            raise ValueError("axis interval must have positive length")
        if self.kind == PERIODIC and (self.size < 4 or self.size % 2):
            raise ValueError(f"periodic axis needs an even size >= 4, got {self.size}")
        if self.kind == CHEBYSHEV and self.size < 3:
            raise ValueError("Chebyshev axis needs at least 3 nodes")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @cached_property
    def nodes(self) -> np.ndarray:
        n = self.size
        if self.kind == PERIODIC:
            return self.lo + self.length * np.arange(n) / n
        # Gauss-Lobatto nodes in increasing order
        x = -np.cos(np.pi * np.arange(n) / (n - 1))
        return self.lo + 0.5 * (x + 1.0) * self.length

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``2 pi k / L``, Nyquist mode kept."""
        return 2.0 * np.pi * np.fft.fftfreq(self.size, d=1.0 / self.size) / self.length

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights (trapezoid resp. Clenshaw-Curtis)."""
        n = self.size
        if self.kind == PERIODIC:
            return np.full(n, self.length / n)
        N = n - 1
        theta = np.pi * np.arange(n) / N
        w = np.zeros(n)
        v = np.ones(N - 1)
        inner = np.arange(1, N)
        if N % 2 == 0:
            w[0] = w[N] = 1.0 / (N * N - 1)
            for k in range(1, N // 2):
                v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
            v -= np.cos(N * theta[inner]) / (N * N - 1)
        else:
            w[0] = w[N] = 1.0 / (N * N)
            for k in range(1, (N - 1) // 2 + 1):
                v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        w[inner] = 2.0 * v / N
        return w * 0.5 * self.length

    @cached_property
    def diff_matrix(self) -> np.ndarray:
        """Differentiation matrix on the nodes (Chebyshev axes only)."""
        if self.kind != CHEBYSHEV:
            raise ValueError("periodic axes are differentiated by FFT")
        n = self.size
        N = n - 1
        x = np.cos(np.pi * np.arange(n) / N)
        c = np.ones(n)
        c[0] = c[-1] = 2.0
        c *= (-1.0) ** np.arange(n)
        dx = x[:, None] - x[None, :]
        D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
        D -= np.diag(D.sum(axis=1))
        # nodes above run from +1 to -1; flip to increasing order
        D = D[::-1, ::-1]
        return D * (2.0 / self.length)

    @cached_property
    def bary_weights(self) -> np.ndarray:
        if self.kind != CHEBYSHEV:
            raise ValueError("barycentric weights are for Chebyshev axes")
        w = (-1.0) ** np.arange(self.size)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def diff(self, f: np.ndarray, axis: int = 0, order: int = 1, twist: complex = 1.0) -> np.ndarray:
        """Derivative of samples along ``axis``.

        For periodic axes ``twist`` is the factor ``theta`` in
        ``f(x + L) = theta f(x)``; it must have modulus one.
        """
        if order == 0:
            return f
        if self.kind == CHEBYSHEV:
            if twist != 1.0:
                raise ValueError("twists only apply to periodic axes")
            D = np.linalg.matrix_power(self.diff_matrix, order)
            return np.moveaxis(np.tensordot(D, f, axes=([1], [axis])), 0, axis)
        beta = 0.0
        if twist != 1.0:
            if abs(abs(twist) - 1.0) > 1e-12:
                raise ValueError("twist must lie on the unit circle")
            beta = float(np.angle(twist))
        k = self.wavenumbers.copy()
        if order % 2 == 1:
            k[self.size // 2] = 0.0
        mult = (1j * (k + beta / self.length)) ** order
        shape = [1] * f.ndim
        shape[axis] = self.size
        mult = mult.reshape(shape)
        if beta:
            phase = np.exp(-1j * beta * (self.nodes - self.lo) / self.length).reshape(shape)
            g = np.fft.ifft(mult * np.fft.fft(f * phase, axis=axis), axis=axis)
            return g / phase
        out = np.fft.ifft(mult * np.fft.fft(f, axis=axis), axis=axis)
        return out.real if np.isrealobj(f) else out

    def interpolate(self, values: np.ndarray, s: float | np.ndarray, axis: int = 0) -> np.ndarray:
        """Evaluate the interpolant of ``values`` (nodes along ``axis``) at ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        values = np.moveaxis(np.asarray(values), axis, 0)
        if self.kind == PERIODIC:
            n = self.size
            c = np.fft.fft(values, axis=0) / n
            k = np.fft.fftfreq(n, d=1.0 / n)
            k[n // 2] = 0.0
            t = 2.0 * np.pi * (s - self.lo) / self.length
            basis = np.exp(1j * np.outer(t, k))
            # the Nyquist mode is split symmetrically so real data stays real
            basis[:, n // 2] = np.cos(0.5 * n * t)
            out = np.tensordot(basis, c, axes=([1], [0]))
            if np.isrealobj(values):
                out = out.real
            return np.moveaxis(out, 0, axis)
        x = self.nodes
        w = self.bary_weights
        diff = s[:, None] - x[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-14 * self.length)
        diff = np.where(exact, 1.0, diff)
        terms = w[None, :] / diff
        terms = terms / terms.sum(axis=1, keepdims=True)
        hit = exact.any(axis=1)
        terms[hit] = exact[hit].astype(float)
        out = np.tensordot(terms, values, axes=([1], [0]))
        return np.moveaxis(out, 0, axis)


class TorusGrid:
    """Uniform grid on the unit torus, optionally with extra axes.

    ``TorusGrid((32, 32))`` is the 32 x 32 periodic grid on ``[0, 1)^2``.
    ``TorusGrid.from_axes`` builds mixed grids such as torus x interval.
    """

    def __init__(self, sizes: Sequence[int], lengths: Sequence[float] | None = None, cap: int = DEFAULT_CAP):
        sizes = tuple(int(n) for n in sizes)
        if lengths is None:
            lengths = (1.0,) * len(sizes)
        self._init(tuple(Axis(n, PERIODIC, 0.0, float(L)) for n, L in zip(sizes, lengths)), cap)

    @classmethod
    def from_axes(cls, axes: Sequence[Axis], cap: int = DEFAULT_CAP) -> "TorusGrid":
        self = cls.__new__(cls)
        self._init(tuple(axes), cap)
        return self

    def _init(self, axes: tuple[Axis, ...], cap: int) -> None:
        if not axes:
            raise ValueError("grid needs at least one axis")
        self.axes = axes
        if self.size > cap:
            raise MemoryError(f"grid with {self.size} points exceeds the cap of {cap}")

    def __repr__(self) -> str:
        return f"TorusGrid({self.shape}, kinds={[a.kind for a in self.axes]})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TorusGrid) and self.axes == other.axes

    def __hash__(self) -> int:
        return hash(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def is_periodic(self) -> bool:
        return all(a.kind == PERIODIC for a in self.axes)

    def coords(self) -> list[np.ndarray]:
        return np.meshgrid(*(a.nodes for a in self.axes), indexing="ij")

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(*shape, dim)``."""
        return np.stack(self.coords(), axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(())
        for a in self.axes:
            w = np.multiply.outer(w, a.weights)
        return w

    def diff(self, f: np.ndarray, axis: int, order: int = 1, twist: tuple[int, complex] | None = None) -> np.ndarray:
        theta = 1.0
        if twist is not None and twist[0] == axis:
            theta = twist[1]
        return self.axes[axis].diff(f, axis=axis, order=order, twist=theta)

    def gradient(self, f: np.ndarray, twist: tuple[int, complex] | None = None) -> np.ndarray:
        """All coordinate partials, stacked on a new trailing-but-components axis.

        For ``f`` of shape ``(*shape, *comp)`` the result has shape
        ``(*shape, dim, *comp)``.
        """
        parts = [self.diff(f, a, twist=twist) for a in range(self.dim)]
        return np.stack(parts, axis=self.dim)

    def integrate(self, f: np.ndarray) -> np.ndarray:
        w = self.weights.reshape(self.shape + (1,) * (f.ndim - self.dim))
        return (w * f).sum(axis=tuple(range(self.dim)))

    def evaluate(self, f: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Trigonometric interpolation of ``f`` at arbitrary points ``x``.

        ``x`` has shape ``(P, dim)``; the result has shape ``(P, *comp)``.
        Only for fully periodic grids.
        """
        if not self.is_periodic:
            raise ValueError("off-grid evaluation needs a periodic grid")
        x = np.asarray(x, dtype=float)
        comp = f.shape[self.dim:]
        c = np.fft.fftn(f, axes=tuple(range(self.dim))) / self.size
        out = c.reshape(self.shape + (-1,))
        # contract one axis at a time, the point index being carried along
        for a, ax in enumerate(self.axes):
            n = ax.size
            k = np.fft.fftfreq(n, d=1.0 / n)
            k[n // 2] = 0.0
            arg = 2.0 * np.pi * np.outer(x[:, a] / ax.length, k)
            basis = np.exp(1j * arg)
            basis[:, n // 2] = np.cos(np.pi * n * x[:, a] / ax.length)
            if a == 0:
                out = np.tensordot(basis, out, axes=([1], [0]))
            else:
                out = np.einsum("pk,pk...->p...", basis, out)
        out = out.reshape((x.shape[0],) + comp)
        return out.real if np.isrealobj(f) else out


class FourierSeries:
    """A trigonometric polynomial on the torus, sampleable on any grid.

    ``coeffs`` maps integer wavevectors to coefficient arrays; the series is
    ``sum_k c_k exp(2 pi i k.x)`` and is real when the coefficients are
    Hermitian symmetric.
    """

    def __init__(self, dim: int, coeffs: dict[tuple[int, ...], np.ndarray], shape: tuple[int, ...] = ()):
        self.dim = dim
        self.shape = shape
        self.coeffs = {tuple(k): np.asarray(v, dtype=complex) for k, v in coeffs.items()}

    @property
    def kmax(self) -> int:
        return max((max(abs(i) for i in k) for k in self.coeffs), default=0)

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        dim: int,
        kmax: int,
        shape: tuple[int, ...] = (),
        amplitude: float = 1.0,
        real: bool = True,
        mean: bool = True,
    ) -> "FourierSeries":
        """Random bandlimited field with modes ``|k|_inf <= kmax``.

        Amplitudes decay like ``1 / (1 + |k|^2)`` so derivatives stay O(1).
        """
        ks = np.array(np.meshgrid(*[np.arange(-kmax, kmax + 1)] * dim, indexing="ij")).reshape(dim, -1).T
        coeffs: dict[tuple[int, ...], np.ndarray] = {}
        for k in ks:
            key = tuple(int(i) for i in k)
            if not mean and not any(key):
                continue
            neg = tuple(-i for i in key)
            if real and neg in coeffs:
                coeffs[key] = np.conj(coeffs[neg])
                continue
            scale = amplitude / (1.0 + float(np.dot(k, k)))
            c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            if real and key == neg:
                c = c.real + 0j
            coeffs[key] = scale * c
        return cls(dim, coeffs, shape)

    def sample(self, grid: TorusGrid, deriv: tuple[int, ...] | None = None) -> np.ndarray:
        """Values on ``grid`` (optionally of the partial derivative ``deriv``)."""
        if grid.dim != self.dim:
            raise ValueError("dimension mismatch")
        xs = grid.coords()
        out = np.zeros(grid.shape + self.shape, dtype=complex)
        for k, c in self.coeffs.items():
            phase = np.exp(2j * np.pi * sum(ki * xi for ki, xi in zip(k, xs)))
            if deriv is not None:
                for a in deriv:
                    phase = phase * (2j * np.pi * k[a])
            out += np.multiply.outer(phase, c)
        if self.is_real():
            return out.real
        return out

    def is_real(self) -> bool:
        for k, c in self.coeffs.items():
            neg = tuple(-i for i in k)
            if neg not in self.coeffs or np.abs(self.coeffs[neg] - np.conj(c)).max() > 0:
                return False
        return True
