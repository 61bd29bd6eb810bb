"""First-order variation of a spinor under a metric deformation.

The identities checked here compare two independent evaluation routes: the
left-hand sides only use the twisted Dirac operator on spinor-valued
one-forms and the map ``h -> W(h)``; the right-hand sides are assembled from
``kappa``, the divergence, the Einstein operator and the spinor curvature.
"""

from __future__ import annotations

import time

import numpy as np

from .geometry import (
    MetricField,
    covariant_derivative,
    covariant_derivative_spinor,
    covariant_derivative_spinor_oneform,
    curvature_spinor,
    dirac,
    divergence_symtensor,
    einstein_operator,
)


def _check_sym(h: np.ndarray, tol: float = 1e-12) -> None:
    defect = np.abs(h - np.swapaxes(h, -1, -2)).max()
    if defect > tol * max(1.0, np.abs(h).max()):
        raise ValueError(f"tensor is not symmetric (defect {defect:.3e})")


def _nabla_h_frame(G: MetricField, h: np.ndarray) -> np.ndarray:
    """``(nabla_{e_k} h)(e_i, e_j)`` as ``[..., k, i, j]``."""
    nh = covariant_derivative(G, h, 2)
    E = G.frame
    return np.einsum("...ck,...ai,...bj,...cab->...kij", E, E, E, nh, optimize=True)


def wang_map(G: MetricField, phi: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``W(h)(X) = sum_j h(X, e_j) e_j . phi``, a spinor-valued one-form."""
    _check_sym(h)
    hf = G.sym_to_frame(h)
    return np.einsum("...ij,jab,...b->...ia", hf, G.rep.gammas, phi)


def _wang_frame(G: MetricField, psi: np.ndarray, hf: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,jab,...b->...ia", hf, G.rep.gammas, psi)


def kappa(G: MetricField, phi: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``kappa(h)(X) = 1/4 sum_{i != j} (nabla_{e_i} h)(X, e_j) e_i . e_j . phi``."""
    _check_sym(h)
    nf = _nabla_h_frame(G, h)  # [i, l, j] = (nabla_i h)(e_l, e_j)
    m = G.m
    off = 1.0 - np.eye(m)
    coef = nf * off[:, None, :]
    return 0.25 * np.einsum("...ilj,ijab,...b->...la", coef, G.rep.products, phi, optimize=True)


def dirac_on_spinor_oneforms(G: MetricField, sigma: np.ndarray) -> np.ndarray:
    """Twisted Dirac operator with the product connection on ``T*M (x) Sigma M``."""
    nabla = covariant_derivative_spinor_oneform(G, sigma)
    return np.einsum("kab,...klb->...la", G.rep.gammas, nabla)


def _record(identity: str, G: MetricField, lhs: np.ndarray, rhs: np.ndarray, t0: float) -> dict:
    diff = np.abs(lhs - rhs).max()
    scale = max(np.abs(lhs).max(), np.abs(rhs).max())
    return {
        "identity": identity,
        "grid": list(G.shape),
        "residual_abs": float(diff),
        "residual_rel": float(diff / scale) if scale > 0 else float(diff),
        "runtime_ms": 1000.0 * (time.perf_counter() - t0),
    }


def _require_parallel(G: MetricField, phi: np.ndarray, tol: float) -> None:
    nabla = covariant_derivative_spinor(G, phi)
    defect = np.abs(nabla).max() / max(np.abs(phi).max(), 1e-300)
    if defect > tol:
        raise ValueError(f"spinor is not parallel (|nabla phi| / |phi| = {defect:.3e})")


def check_dirac_wang(G: MetricField, phi: np.ndarray, h: np.ndarray, parallel_tol: float = 1e-10) -> dict:
    """``D W(h) = 4 kappa(h) + phi (x) div h`` for a parallel spinor ``phi``."""
    t0 = time.perf_counter()
    _require_parallel(G, phi, parallel_tol)
    lhs = dirac_on_spinor_oneforms(G, wang_map(G, phi, h))
    div = G.oneform_to_frame(divergence_symtensor(G, h))
    rhs = 4.0 * kappa(G, phi, h) + div[..., :, None] * phi[..., None, :]
    return _record("dirac_wang_parallel", G, lhs, rhs, t0)


def check_dirac_wang_general(G: MetricField, phi: np.ndarray, h: np.ndarray) -> dict:
    """``D W(h)(X) = 4 kappa(h)(X) + div h(X) phi - 2 nabla_{h#X} phi - h#X . D phi``."""
    t0 = time.perf_counter()
    lhs = dirac_on_spinor_oneforms(G, wang_map(G, phi, h))
    hf = G.sym_to_frame(h)
    div = G.oneform_to_frame(divergence_symtensor(G, h))
    nabla = covariant_derivative_spinor(G, phi)
    Dphi = np.einsum("kab,...kb->...a", G.rep.gammas, nabla)
    rhs = 4.0 * kappa(G, phi, h) + div[..., :, None] * phi[..., None, :]
    rhs = rhs - 2.0 * np.einsum("...ji,...ja->...ia", hf, nabla)
    rhs = rhs - np.einsum("...ji,jab,...b->...ia", hf, G.rep.gammas, Dphi)
    return _record("dirac_wang_general", G, lhs, rhs, t0)


def check_dirac_squared_wang(G: MetricField, phi: np.ndarray, h: np.ndarray) -> dict:
    """Square of the twisted Dirac operator on ``W(h)``.

    ``D^2 W(h) = W(Delta_E h) - 2 sum_l W_{nabla_l phi}(nabla_l h) + W_{D^2 phi}(h)
    - 2 (X -> sum_l h#(e_l) . R(X, e_l) phi)``.
    """
    t0 = time.perf_counter()
    w = wang_map(G, phi, h)
    lhs = dirac_on_spinor_oneforms(G, dirac_on_spinor_oneforms(G, w))

    gam = G.rep.gammas
    hf = G.sym_to_frame(h)
    nf = _nabla_h_frame(G, h)
    nabla = covariant_derivative_spinor(G, phi)
    D2phi = dirac(G, dirac(G, phi))
    rhs = _wang_frame(G, phi, G.sym_to_frame(einstein_operator(G, h)))
    rhs = rhs - 2.0 * np.einsum("...lij,jab,...lb->...ia", nf, gam, nabla, optimize=True)
    rhs = rhs + _wang_frame(G, D2phi, hf)
    Rphi = curvature_spinor(G, phi)  # [i, l, :] = R(e_i, e_l) phi
    rhs = rhs - 2.0 * np.einsum("...jl,jab,...ilb->...ia", hf, gam, Rphi, optimize=True)
    return _record("dirac_squared_wang", G, lhs, rhs, t0)
