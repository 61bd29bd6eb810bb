"""Parallel transport of spinors along paths of metrics.

Along ``s -> g_s`` the frame ``E(s) = g_s^{-1/2}`` is moved by the
connection of the generalised cylinder, whose only nontrivial part in the
``s`` direction is the antisymmetric matrix

    omega_ij(s) = g_s(d_s e_i + 1/2 g_s^{-1} (d_s g_s) e_i, e_j).

Spinor components then solve ``sigma' = -S(omega(s)) sigma`` with ``S`` the
spin generator. The ODE is pointwise in ``x`` and is integrated by RK4 with
step doubling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import GammaRep, build_rep, reflection, spin_generator, spin_lift
from .geometry import MetricField
from .paths import MetricPath

MAX_STEPS = 2**16


def frame_and_derivative(G: np.ndarray, Gdot: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``E = G^{-1/2}`` and its derivative along ``Gdot`` (Daleckii-Krein)."""
    lam, Q = np.linalg.eigh(G)
    if lam.min() <= 0:
        raise ValueError("metric is not positive definite")
    r = np.sqrt(lam)
    E = np.einsum("...ik,...k,...jk->...ij", Q, 1.0 / r, Q)
    # divided differences of t -> t^{-1/2}, written without cancellation
    F = -1.0 / (r[..., :, None] * r[..., None, :] * (r[..., :, None] + r[..., None, :]))
    Gq = np.swapaxes(Q, -1, -2) @ Gdot @ Q
    Edot = Q @ (Gq * F) @ np.swapaxes(Q, -1, -2)
    return E, Edot


def connection_matrix(G: np.ndarray, Gdot: np.ndarray, orientation: int = 1) -> np.ndarray:
    """``omega_ij = g(nabla_s e_i, e_j)`` for the frame ``g^{-1/2}`` (optionally reflected)."""
    E, Edot = frame_and_derivative(G, Gdot)
    Et = np.swapaxes(E, -1, -2)
    M = Et @ G @ Edot + 0.5 * Et @ Gdot @ E
    omega = np.swapaxes(M, -1, -2)
    omega = 0.5 * (omega - np.swapaxes(omega, -1, -2))
    if orientation == -1:
        R = reflection(G.shape[-1])
        omega = R @ omega @ R
    return omega


@dataclass
class TransportResult:
    spinor: np.ndarray
    unitary: np.ndarray
    steps: int
    error_estimate: float


def _generators(path: MetricPath, rep: GammaRep, s: np.ndarray, orientation: int) -> np.ndarray:
    omega = connection_matrix(path.G(s), path.Gdot(s), orientation)
    return -spin_generator(rep, omega, tol=1e-9)


def _rk4(path: MetricPath, rep: GammaRep, a: float, b: float, n: int, orientation: int) -> np.ndarray:
    h = (b - a) / n
    shape = () if path.is_flat else path.grid.shape
    U = np.broadcast_to(np.eye(rep.d, dtype=complex), shape + (rep.d, rep.d)).copy()
    # generators at all stage points (the half steps included), batched
    chunk = n if path.is_flat else 8
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        s = a + 0.5 * h * np.arange(2 * start, 2 * stop + 1)
        A = _generators(path, rep, s, orientation)
        for i in range(stop - start):
            A1, A2, A3 = A[2 * i], A[2 * i + 1], A[2 * i + 2]
            k1 = A1 @ U
            k2 = A2 @ (U + 0.5 * h * k1)
            k3 = A2 @ (U + 0.5 * h * k2)
            k4 = A3 @ (U + h * k3)
            U = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return U


def transport_unitary(
    path: MetricPath,
    s_from: float,
    s_to: float,
    rep: GammaRep | None = None,
    tol: float = 1e-10,
    steps: int | None = None,
    orientation: int = 1,
) -> tuple[np.ndarray, int, float]:
    """Propagator of the transport ODE from ``s_from`` to ``s_to``.

    Without ``steps`` the step count is doubled until two successive
    solutions agree to ``tol``; the finer one is returned together with
    the step count and that difference.
    """
    rep = rep or build_rep(path.m)
    if s_from == s_to:
        shape = () if path.is_flat else path.grid.shape
        eye = np.broadcast_to(np.eye(rep.d, dtype=complex), shape + (rep.d, rep.d)).copy()
        return eye, 0, 0.0
    if steps is not None:
        return _rk4(path, rep, s_from, s_to, steps, orientation), steps, float("nan")
    n = 8
    coarse = _rk4(path, rep, s_from, s_to, n, orientation)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise ArithmeticError("transport did not converge: step size underflow")
        fine = _rk4(path, rep, s_from, s_to, n, orientation)
        err = float(np.abs(fine - coarse).max())
        if err <= tol:
            return fine, n, err
        coarse = fine


def bbgm_transport(
    path: MetricPath,
    phi0: np.ndarray,
    s_from: float,
    s_to: float,
    rep: GammaRep | None = None,
    tol: float = 1e-10,
    orientation: int = 1,
) -> TransportResult:
    """Transport the spinor ``phi0`` (frame components at ``s_from``) to ``s_to``."""
    U, n, err = transport_unitary(path, s_from, s_to, rep=rep, tol=tol, orientation=orientation)
    phi0 = np.asarray(phi0, dtype=complex)
    return TransportResult(np.einsum("...ab,...b->...a", U, phi0), U, n, err)


def transport_family(
    path: MetricPath,
    phi0: np.ndarray,
    rep: GammaRep | None = None,
    tol: float = 1e-10,
    orientation: int = 1,
) -> tuple[np.ndarray, float]:
    """Transported spinor at every s-node, starting from the first node.

    Node-to-node propagators are concatenated. Returns the array of shape
    ``(ns, ..., d)`` and the largest step-doubling estimate.
    """
    nodes = path.nodes
    phi = np.asarray(phi0, dtype=complex)
    if not path.is_flat and phi.ndim == 1:
        phi = np.broadcast_to(phi, path.grid.shape + phi.shape).copy()
    out = [phi]
    worst = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        U, _, err = transport_unitary(path, a, b, rep=rep, tol=tol, orientation=orientation)
        phi = np.einsum("...ab,...b->...a", U, phi)
        out.append(phi)
        worst = max(worst, err)
    return np.array(out), worst


def parallel_spinor_basis(G: MetricField) -> np.ndarray:
    """Orthonormal basis (columns) of the parallel spinors of a flat torus metric.

    For constant coefficients the frame ``g^{-1/2}`` is parallel, so the
    parallel spinors are exactly those with constant components.
    """
    flat = np.ptp(G.G.reshape(-1, G.m * G.m), axis=0).max() <= 1e-14 * np.abs(G.G).max()
    if not flat:
        raise ValueError("parallel spinors are only enumerated for constant-coefficient metrics")
    return np.eye(G.rep.d, dtype=complex)


def loop_holonomy(
    path: MetricPath,
    lift: int = 1,
    rep: GammaRep | None = None,
    tol: float = 1e-10,
    orientation: int = 1,
) -> np.ndarray:
    """Holonomy of the transport around a closed path.

    ``lift = +1 / -1`` selects one of the two spin lifts of the gluing.
    For a loop glued by a lattice map ``A`` (``g_L = A^T g_0 A``) the
    frame mismatch ``E(0)^{-1} A E(L)`` is lifted to the spinors.
    """
    if not path.closed:
        raise ValueError("holonomy needs a closed path")
    if lift not in (1, -1):
        raise ValueError("lift must be +1 or -1")
    if not path.is_flat:
        raise ValueError("holonomy is only defined here for flat loops")
    rep = rep or build_rep(path.m)
    lo, hi = path.interval
    U, _, _ = transport_unitary(path, lo, hi, rep=rep, tol=tol, orientation=orientation)
    if path.zeta is None:
        return lift * U
    E0, _ = frame_and_derivative(path.G(lo), np.zeros((path.m, path.m)))
    EL, _ = frame_and_derivative(path.G(hi), np.zeros((path.m, path.m)))
    if orientation == -1:
        R = reflection(path.m)
        E0, EL = E0 @ R, EL @ R
    Q = np.linalg.solve(E0, path.zeta.astype(float) @ EL)
    return spin_lift(rep, Q, lift) @ U


@dataclass
class FittingResult:
    fits: bool
    theta: complex | None
    eigen_residual: float
    spectrum: np.ndarray


def fitting_check(P: np.ndarray, phi0: np.ndarray, tol: float = 1e-8) -> FittingResult:
    """Whether ``phi0`` is an eigenvector of the holonomy, and its eigenvalue."""
    phi0 = np.asarray(phi0, dtype=complex)
    nrm = np.linalg.norm(phi0)
    if nrm == 0:
        raise ValueError("zero spinor")
    v = phi0 / nrm
    theta = complex(np.vdot(v, P @ v))
    res = float(np.linalg.norm(P @ v - theta * v))
    spectrum = np.linalg.eigvals(P)
    fits = res <= tol
    return FittingResult(fits, theta if fits else None, res, spectrum)


def finite_order(P: np.ndarray, lmax: int = 64, tol: float = 1e-8) -> int | None:
    """Smallest ``l <= lmax`` with ``P^l = 1``, or ``None``."""
    eye = np.eye(P.shape[-1])
    Q = np.array(P, dtype=complex)
    for l in range(1, lmax + 1):
        if np.abs(Q - eye).max() <= tol:
            return l
        Q = Q @ P
    return None
