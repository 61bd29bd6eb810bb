"""Moving a path of metrics into divergence-free gauge by diffeomorphisms.

For each slice the one-form ``alpha`` solves ``2 div div* alpha = div g'``
with ``div*`` the formal adjoint of the divergence (the symmetrised
covariant derivative, so ``L_Y g = 2 div* Y^flat``). Flowing the slices by
``X_s = -alpha_s^sharp`` gives ``g~_s = phi_s^* g_s`` with
``div g~' = 0``.

On a constant-coefficient slice the equation decouples into small systems
per Fourier mode. On curved slices it is solved by GMRES, preconditioned on
the right by the per-mode inverse for the mean metric.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .geometry import MetricField, div_adjoint, divergence_symtensor
from .grid import TorusGrid
from .paths import MetricPath

COND_LIMIT = 1e12


def _slice_grid(path: MetricPath, grid: TorusGrid | None) -> TorusGrid:
    grid = grid or path.grid
    if grid is None:
        # constant slices: the smallest grid represents them exactly
        grid = TorusGrid((4,) * path.m)
    return grid


def divergence_profile(path: MetricPath, grid: TorusGrid | None = None) -> np.ndarray:
    """``|div_{g_s} g'_s|_{L2}`` at every s-node."""
    grid = _slice_grid(path, grid)
    out = []
    for k in range(path.axis.size):
        G = MetricField(grid, path.samples[k])
        h = np.broadcast_to(path.derivative_samples[k], grid.shape + (path.m, path.m))
        out.append(G.norm_oneform(divergence_symtensor(G, np.array(h))))
    return np.array(out)


def verify_divfree(path: MetricPath, grid: TorusGrid | None = None) -> float:
    """Largest ``L2`` norm of ``div g'`` over the s-nodes."""
    return float(divergence_profile(path, grid).max())


def gauge_operator(G: MetricField, alpha: np.ndarray) -> np.ndarray:
    """``2 div div* alpha``."""
    return 2.0 * divergence_symtensor(G, div_adjoint(G, alpha))


def _mode_vectors(grid: TorusGrid) -> np.ndarray:
    """Wavevectors ``[..., c]`` of the first-derivative symbol (Nyquist removed)."""
    ks = []
    for ax in grid.axes:
        k = ax.wavenumbers.copy()
        k[ax.size // 2] = 0.0
        ks.append(k)
    return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)


def flat_mode_solve(
    grid: TorusGrid, Ginv: np.ndarray, rhs: np.ndarray, check: bool = True, constant_scale: float | None = None
) -> np.ndarray:
    """Solve ``2 div div* alpha = rhs`` for a constant metric with inverse ``Ginv``.

    Per Fourier mode the operator is ``(k.g^-1 k) I + k (g^-1 k)^T``; modes
    with vanishing symbol (the constants) are set to zero, or divided by
    ``constant_scale`` when one is given (used by the preconditioner, which
    must not lose the constant one-forms on curved slices).
    """
    if np.linalg.eigvalsh(0.5 * (Ginv + Ginv.T)).min() <= 0:
        raise ValueError("inverse metric is not positive definite")
    axes = tuple(range(grid.dim))
    bh = np.fft.fftn(rhs, axes=axes)
    kap = _mode_vectors(grid)
    gk = kap @ Ginv
    kk = np.einsum("...a,...a->...", gk, kap)
    m = grid.dim
    M = kk[..., None, None] * np.eye(m) + kap[..., :, None] * gk[..., None, :]
    live = kk > 1e-14 * np.abs(kk).max()
    Ml = M[live]
    if check:
        cond = np.linalg.cond(Ml).max() if len(Ml) else 1.0
        if cond > COND_LIMIT:
            raise ArithmeticError(f"mode system is singular (condition {cond:.3e})")
    ah = np.zeros_like(bh) if constant_scale is None else bh / constant_scale
    ah[live] = np.linalg.solve(Ml, bh[live][..., None])[..., 0]
    out = np.fft.ifftn(ah, axes=axes)
    return out.real if np.isrealobj(rhs) else out


@dataclass
class GaugeStep:
    alpha: np.ndarray
    residual: float
    iterations: int


def solve_gauge_step(G: MetricField, h: np.ndarray, tol: float = 1e-12, maxiter: int = 400) -> GaugeStep:
    """One-form ``alpha`` with ``2 div div* alpha = div h`` on the slice ``G``."""
    if not G.grid.is_periodic:
        raise ValueError("the gauge equation is solved on periodic slices")
    b = divergence_symtensor(G, h)
    bnorm = float(np.abs(b).max())
    if bnorm == 0.0:
        return GaugeStep(np.zeros_like(b), 0.0, 0)
    flat = np.ptp(G.G.reshape(-1, G.m * G.m), axis=0).max() <= 1e-14 * np.abs(G.G).max()
    if flat:
        alpha = flat_mode_solve(G.grid, G.inverse[(0,) * G.grid.dim], b)
        res = float(np.abs(gauge_operator(G, alpha) - b).max()) / bnorm
        return GaugeStep(alpha, res, 0)

    shape = b.shape
    Ginv0 = np.linalg.inv(G.G.reshape(-1, G.m, G.m).mean(axis=0))
    n = b.size
    accept = max(1e3 * tol, 1e-9)

    # First on mean-free one-forms: on pulled-back flat slices the Killing
    # fields are nearly constant and this keeps GMRES away from them. A slice
    # without Killing fields may need the constants, so retry with them.
    best = None
    for scale, cycles in ((None, min(maxiter, 5)), (1.0, maxiter)):

        def precond(y, scale=scale):
            return flat_mode_solve(G.grid, Ginv0, y.reshape(shape), check=False, constant_scale=scale)

        def apply(y, precond=precond):
            return gauge_operator(G, precond(y)).ravel()

        A = spla.LinearOperator((n, n), matvec=apply, dtype=float)
        count = [0]

        def cb(_, count=count):
            count[0] += 1

        y, info = spla.gmres(A, b.ravel(), rtol=tol, atol=0.0, restart=60, maxiter=cycles, callback=cb, callback_type="pr_norm")
        if info < 0:
            raise ArithmeticError(f"GMRES breakdown (info {info})")
        alpha = precond(y)
        res = float(np.abs(gauge_operator(G, alpha) - b).max()) / bnorm
        iterations = count[0] + (best.iterations if best else 0)
        if best is None or res < best.residual:
            best = GaugeStep(alpha, res, iterations)
        else:
            best.iterations = iterations
        if res <= accept:
            break
    return best


def _flow(grid: TorusGrid, field_at, x0: np.ndarray, s_nodes: np.ndarray, substeps: int) -> np.ndarray:
    """Integrate ``x' = X(s, x)`` through the nodes with RK4; returns positions per node."""
    spacing = min(ax.length / ax.size for ax in grid.axes)
    out = [x0]
    x = x0
    for a, b in zip(s_nodes[:-1], s_nodes[1:]):
        h = (b - a) / substeps
        for i in range(substeps):
            s = a + i * h
            k1 = field_at(s, x)
            if np.abs(k1).max() * abs(h) > spacing:
                raise ValueError("flow displacement per step exceeds the grid spacing")
            k2 = field_at(s + 0.5 * h, x + 0.5 * h * k1)
            k3 = field_at(s + 0.5 * h, x + 0.5 * h * k2)
            k4 = field_at(s + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x)
    return np.array(out)


def _pullback(grid: TorusGrid, g: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """``(phi^* g)(x) = Dphi^T g(phi(x)) Dphi`` for ``phi`` given by its values on the grid."""
    m = grid.dim
    x0 = grid.points()
    disp = pos - x0
    Dphi = np.eye(m) + np.swapaxes(grid.gradient(disp), -1, -2)  # [..., a, b] = d_b phi^a
    flatpos = pos.reshape(-1, m)
    lengths = np.array([ax.length for ax in grid.axes])
    if g.ndim == 2:
        gphi = np.broadcast_to(g, grid.shape + (m, m))
    else:
        gphi = grid.evaluate(g, np.mod(flatpos, lengths)).reshape(grid.shape + (m, m))
    out = np.einsum("...ab,...ad,...dc->...bc", Dphi, gphi, Dphi)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def pollute_path(path: MetricPath, Y: np.ndarray, grid: TorusGrid, substeps: int = 8) -> MetricPath:
    """``g_s -> psi_s^* g_s`` with ``psi_s`` the flow of the fixed field ``Y`` for time ``s - s_a``."""
    if not path.is_flat:
        raise ValueError("pollution is applied to flat paths")
    x0 = grid.points()
    m = grid.dim

    def field_at(s, x):
        return grid.evaluate(Y, np.mod(x.reshape(-1, m), 1.0)).reshape(x.shape)

    pos = _flow(grid, field_at, x0, path.nodes, substeps)
    samples = np.array([_pullback(grid, path.samples[k], pos[k]) for k in range(path.axis.size)])
    return MetricPath(path.axis, samples, grid=grid, closed=path.closed if path.axis.kind != "periodic" else True)


def flow_pullback(path: MetricPath, X: np.ndarray, substeps: int = 8) -> tuple[MetricPath, np.ndarray]:
    """Pull every slice back by the flow of the time-dependent field ``X``.

    ``X`` holds vector fields at the s-nodes, shape ``(ns, *grid, m)``; the
    flow starts at the identity at the first node and ``X`` is interpolated
    in ``s`` between nodes and trigonometrically in space.
    """
    grid = path.grid
    if grid is None:
        raise ValueError("the path needs a grid")
    m = grid.dim
    x0 = grid.points()

    def field_at(s, x):
        Xs = path.axis.interpolate(X, s)[0]
        return grid.evaluate(Xs, np.mod(x.reshape(-1, m), 1.0)).reshape(x.shape)

    pos = _flow(grid, field_at, x0, path.nodes, substeps)
    samples = np.array([_pullback(grid, path.samples[k], pos[k]) for k in range(path.axis.size)])
    return path.with_samples(samples), pos


@dataclass
class GaugeResult:
    path: MetricPath
    alpha: np.ndarray
    X: np.ndarray
    positions: np.ndarray
    divergence_before: float
    divergence_after: list[float] = field(default_factory=list)
    solve_residual: float = 0.0
    runtime_ms: float = 0.0


def gauge_fix(path: MetricPath, iterations: int = 1, substeps: int = 8, tol: float = 1e-12) -> GaugeResult:
    """Repeat (solve per slice, flow, pull back) ``iterations`` times."""
    t0 = time.perf_counter()
    if path.grid is None:
        raise ValueError("gauge fixing needs a path sampled on a grid")
    before = verify_divfree(path)
    after: list[float] = []
    worst = 0.0
    current = path
    alpha = X = pos = None
    for _ in range(iterations):
        alphas, Xs = [], []
        for k in range(current.axis.size):
            G = MetricField(current.grid, current.samples[k])
            h = current.derivative_samples[k]
            if h.ndim == 2:
                h = np.broadcast_to(h, current.grid.shape + h.shape).copy()
            step = solve_gauge_step(G, h, tol=tol)
            worst = max(worst, step.residual)
            alphas.append(step.alpha)
            Xs.append(-G.sharp(step.alpha))
        alpha, X = np.array(alphas), np.array(Xs)
        current, pos = flow_pullback(current, X, substeps=substeps)
        after.append(verify_divfree(current))
    return GaugeResult(
        current, alpha, X, pos, before, after, worst, 1000.0 * (time.perf_counter() - t0)
    )


def kernel_defect(G: MetricField, alpha: np.ndarray, beta: np.ndarray) -> float:
    """Relative size of ``2 div div* (alpha - beta)``; zero iff they differ by a Killing form."""
    num = np.abs(gauge_operator(G, alpha - beta)).max()
    den = max(np.abs(gauge_operator(G, beta)).max(), 1e-300)
    return float(num / den)
