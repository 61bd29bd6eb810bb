"""Riemannian geometry of metrics sampled on collocation grids.

Tensor fields are plain arrays in coordinate components: one-forms and
vector fields have shape ``(*grid, m)``, symmetric 2-tensors ``(*grid, m, m)``.
Spinor fields hold components with respect to the orthonormal frame
``E = G^{-1/2}`` (symmetric root, so the frame is canonical and smooth in the
metric) and have shape ``(*grid, d)``. Spinor-valued one-forms have shape
``(*grid, m, d)``; index ``k`` holds the value on the frame vector ``e_k``.

Curvature follows ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]`` and frame
components ``R_ijkl = g(R(e_i, e_j) e_k, e_l)``; the round sphere then has
positive Ricci curvature. The divergence of symmetric tensors carries a
minus sign, ``(div h)_a = -g^bc (nabla_c h)_ab``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from string import ascii_letters

import numpy as np

from .clifford import GammaRep, build_rep, reflection
from .grid import TorusGrid

Twist = tuple[int, complex]


class MetricField:
    """A Riemannian metric sampled on a grid, with derived geometry cached.

    ``orientation=-1`` reflects the first frame vector, which reverses the
    orientation of the frame bundle used for spinors.
    """

    def __init__(
        self,
        grid: TorusGrid,
        G: np.ndarray,
        rep: GammaRep | None = None,
        orientation: int = 1,
        spd_tol: float = 1e-12,
    ):
        G = np.asarray(G, dtype=float)
        m = grid.dim
        if G.shape == (m, m):
            G = np.broadcast_to(G, grid.shape + (m, m)).copy()
        if G.shape != grid.shape + (m, m):
            raise ValueError(f"metric has shape {G.shape}, expected {grid.shape + (m, m)}")
        asym = np.abs(G - np.swapaxes(G, -1, -2)).max()
        if asym > 1e-12 * max(1.0, np.abs(G).max()):
            raise ValueError(f"metric is not symmetric (defect {asym:.3e})")
        G = 0.5 * (G + np.swapaxes(G, -1, -2))
        self._eig = np.linalg.eigh(G)
        lam = self._eig[0]
        if lam.min() <= spd_tol * max(1.0, lam.max()):
            raise ValueError(f"metric is not positive definite (min eigenvalue {lam.min():.3e})")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.grid = grid
        self.G = G
        self.m = m
        self.orientation = orientation
        self.rep = rep if rep is not None else build_rep(m)
        if self.rep.n != m:
            raise ValueError("representation dimension does not match the metric")

    @classmethod
    def flat(cls, grid: TorusGrid, G0: np.ndarray | None = None, **kw) -> "MetricField":
        G0 = np.eye(grid.dim) if G0 is None else np.asarray(G0, dtype=float)
        return cls(grid, G0, **kw)

    @classmethod
    def conformal(cls, grid: TorusGrid, u: np.ndarray, **kw) -> "MetricField":
        """The metric ``exp(2u) delta``."""
        G = np.exp(2.0 * u)[..., None, None] * np.eye(grid.dim)
        return cls(grid, G, **kw)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid.shape

    @cached_property
    def inverse(self) -> np.ndarray:
        lam, V = self._eig
        return np.einsum("...ik,...k,...jk->...ij", V, 1.0 / lam, V)

    @cached_property
    def frame(self) -> np.ndarray:
        """``E[..., a, k]``: coordinate component ``a`` of frame vector ``e_k``."""
        lam, V = self._eig
        E = np.einsum("...ik,...k,...jk->...ij", V, lam**-0.5, V)
        if self.orientation == -1:
            E = E @ reflection(self.m)
        return E

    @cached_property
    def coframe(self) -> np.ndarray:
        """Inverse of the frame matrix, ``E^T G``."""
        return np.swapaxes(self.frame, -1, -2) @ self.G

    @cached_property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.prod(self._eig[0], axis=-1))

    @cached_property
    def dG(self) -> np.ndarray:
        """``dG[..., c, a, b] = d_c G_ab``."""
        return self.grid.gradient(self.G)

    @cached_property
    def christoffel(self) -> np.ndarray:
        """``Gamma[..., k, i, j]`` with ``nabla_i d_j = Gamma^k_ij d_k``."""
        dG = self.dG
        # lower[l, i, j] = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
        lower = 0.5 * (
            np.einsum("...ilj->...lij", dG) + np.einsum("...jli->...lij", dG) - dG
        )
        return np.einsum("...kl,...lij->...kij", self.inverse, lower)

    @cached_property
    def connection(self) -> np.ndarray:
        """Connection forms ``omega[..., k, i, j] = g(nabla_{e_k} e_i, e_j)``."""
        E = self.frame
        dE = self.grid.gradient(E)  # [..., a, c, i] = d_a E_ci
        v = dE + np.einsum("...cab,...bi->...aci", self.christoffel, E)
        v = np.einsum("...ak,...aci->...kic", E, v)
        return np.einsum("...kic,...cd,...dj->...kij", v, self.G, E)

    @cached_property
    def spin_connection(self) -> np.ndarray:
        """``1/4 sum_ij omega_ij(e_k) gamma_i gamma_j``, shape ``(*grid, m, d, d)``."""
        return 0.25 * np.einsum("...kij,ijab->...kab", self.connection, self.rep.products)

    @cached_property
    def riemann(self) -> np.ndarray:
        """Frame components ``R[..., i, j, k, l] = g(R(e_i, e_j) e_k, e_l)``."""
        Gam = self.christoffel
        dGam = self.grid.gradient(Gam)  # [..., c, a, d, b] = d_c Gamma^a_db
        R = (
            np.einsum("...cadb->...abcd", dGam)
            - np.einsum("...dacb->...abcd", dGam)
            + np.einsum("...ace,...edb->...abcd", Gam, Gam)
            - np.einsum("...ade,...ecb->...abcd", Gam, Gam)
        )
        low = np.einsum("...ea,...abcd->...ebcd", self.G, R)
        E = self.frame
        return np.einsum("...ci,...dj,...bk,...el,...ebcd->...ijkl", E, E, E, E, low, optimize=True)

    @cached_property
    def ricci(self) -> np.ndarray:
        """Frame components ``Ric_jk = sum_i R_ijki``."""
        return np.einsum("...ijki->...jk", self.riemann)

    def frame_partials(self, f: np.ndarray, twist: Twist | None = None) -> np.ndarray:
        """``d_{e_k} f`` for ``f`` of shape ``(*grid, *comp)`` -> ``(*grid, m, *comp)``."""
        nd = self.grid.dim
        comp = f.shape[nd:]
        grad = self.grid.gradient(f, twist=twist).reshape(self.shape + (nd, -1))
        out = np.einsum("...ck,...cq->...kq", self.frame, grad)
        return out.reshape(self.shape + (nd,) + comp)

    # index conversions

    def sym_to_frame(self, h: np.ndarray) -> np.ndarray:
        E = self.frame
        return np.einsum("...ai,...ab,...bj->...ij", E, h, E)

    def sym_from_frame(self, hf: np.ndarray) -> np.ndarray:
        C = self.coframe
        return np.einsum("...ia,...ij,...jb->...ab", C, hf, C)

    def oneform_to_frame(self, alpha: np.ndarray) -> np.ndarray:
        return np.einsum("...ak,...a->...k", self.frame, alpha)

    def vector_to_frame(self, X: np.ndarray) -> np.ndarray:
        return np.einsum("...ka,...a->...k", self.coframe, X)

    def vector_from_frame(self, v: np.ndarray) -> np.ndarray:
        return np.einsum("...ak,...k->...a", self.frame, v)

    def sharp(self, alpha: np.ndarray) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.inverse, alpha)

    def flat_(self, X: np.ndarray) -> np.ndarray:
        return np.einsum("...ab,...b->...a", self.G, X)

    # L2 pairings with the Riemannian volume

    def integrate(self, f: np.ndarray) -> np.ndarray:
        w = self.sqrt_det.reshape(self.shape + (1,) * (f.ndim - self.grid.dim))
        return self.grid.integrate(w * f)

    def inner_oneform(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.integrate(np.einsum("...ab,...a,...b->...", self.inverse, a, b)))

    def inner_sym(self, k: np.ndarray, h: np.ndarray) -> float:
        gi = self.inverse
        return float(self.integrate(np.einsum("...ac,...bd,...ab,...cd->...", gi, gi, k, h)))

    def norm_oneform(self, a: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner_oneform(a, a), 0.0)))

    def norm_sym(self, h: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner_sym(h, h), 0.0)))

    def volume(self) -> float:
        return float(self.integrate(np.ones(self.shape)))


def covariant_derivative(G: MetricField, T: np.ndarray, rank: int) -> np.ndarray:
    """Levi-Civita derivative of a covariant tensor of the given rank.

    Returns ``(nabla_c T)_{a1..ar}`` with the new index ``c`` first among the
    component axes.
    """
    nd = G.grid.dim
    if T.shape[nd:] != (G.m,) * rank:
        raise ValueError("tensor rank does not match its shape")
    out = np.array(G.grid.gradient(T))
    letters = ascii_letters[: rank + 2]
    c, e, slots = letters[0], letters[1], letters[2:]
    for s in range(rank):
        src = "".join(e if t == s else slots[t] for t in range(rank))
        spec = f"...{e}{c}{slots[s]},...{src}->...{c}{''.join(slots)}"
        out -= np.einsum(spec, G.christoffel, T)
    return out


def divergence_symtensor(G: MetricField, h: np.ndarray) -> np.ndarray:
    """``(div h)_a = -g^bc (nabla_c h)_ab`` as a one-form."""
    nh = covariant_derivative(G, h, 2)
    return -np.einsum("...bc,...cab->...a", G.inverse, nh)


def div_adjoint(G: MetricField, alpha: np.ndarray) -> np.ndarray:
    """Formal L2-adjoint of the divergence: the symmetrised ``nabla alpha``."""
    na = covariant_derivative(G, alpha, 1)
    return 0.5 * (na + np.swapaxes(na, -1, -2))


def lie_derivative_metric(G: MetricField, X: np.ndarray) -> np.ndarray:
    """``(L_X g)_ab = X^c d_c g_ab + g_cb d_a X^c + g_ac d_b X^c``."""
    dX = G.grid.gradient(X)  # [..., a, c] = d_a X^c
    t = np.einsum("...c,...cab->...ab", X, G.dG)
    t = t + np.einsum("...cb,...ac->...ab", G.G, dX)
    return t + np.einsum("...ac,...bc->...ab", G.G, dX)


def rough_laplacian_symtensor(G: MetricField, h: np.ndarray) -> np.ndarray:
    """``nabla^* nabla h = -g^cd (nabla^2_{c,d} h)``."""
    nh = covariant_derivative(G, h, 2)
    nnh = covariant_derivative(G, nh, 3)
    return -np.einsum("...dc,...dcab->...ab", G.inverse, nnh)


def curvature_action_symtensor(G: MetricField, h: np.ndarray) -> np.ndarray:
    """``(R h)(X, Y) = sum_i h(R(e_i, X) Y, e_i)`` in coordinate components."""
    hf = G.sym_to_frame(h)
    rf = np.einsum("...iabl,...li->...ab", G.riemann, hf)
    return G.sym_from_frame(rf)


def einstein_operator(G: MetricField, h: np.ndarray) -> np.ndarray:
    """``nabla^* nabla h - 2 R h`` in coordinate components."""
    return rough_laplacian_symtensor(G, h) - 2.0 * curvature_action_symtensor(G, h)


# spinors


@dataclass
class SpinorField:
    """Frame components of a spinor field plus the data needed to differentiate it.

    ``twist`` is ``(axis, theta)`` for a field with ``phi(x + L e_axis) =
    theta phi(x)`` along a periodic axis.
    """

    values: np.ndarray
    rep: GammaRep
    twist: Twist | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[-1] != self.rep.d:
            raise ValueError(f"spinor has {self.values.shape[-1]} components, expected {self.rep.d}")


def _spinor(phi: SpinorField | np.ndarray, twist: Twist | None) -> tuple[np.ndarray, Twist | None]:
    if isinstance(phi, SpinorField):
        return phi.values, phi.twist if twist is None else twist
    return np.asarray(phi, dtype=complex), twist


def covariant_derivative_spinor(
    G: MetricField, phi: SpinorField | np.ndarray, twist: Twist | None = None
) -> np.ndarray:
    """``nabla_{e_k} phi = d_{e_k} phi + 1/4 sum_ij omega_ij(e_k) gamma_i gamma_j phi``."""
    v, twist = _spinor(phi, twist)
    if v.shape != G.shape + (G.rep.d,):
        raise ValueError(f"spinor field has shape {v.shape}, expected {G.shape + (G.rep.d,)}")
    return G.frame_partials(v, twist) + np.einsum("...kab,...b->...ka", G.spin_connection, v)


def covariant_derivative_spinor_oneform(
    G: MetricField, sigma: np.ndarray, twist: Twist | None = None
) -> np.ndarray:
    """Product-connection derivative ``(nabla_{e_k} sigma)(e_l)``, shape ``(*grid, m, m, d)``."""
    if sigma.shape != G.shape + (G.m, G.rep.d):
        raise ValueError("spinor one-form has the wrong shape")
    out = G.frame_partials(np.asarray(sigma, dtype=complex), twist)
    out = out + np.einsum("...kab,...lb->...kla", G.spin_connection, sigma)
    return out - np.einsum("...klj,...ja->...kla", G.connection, sigma)


def dirac(G: MetricField, phi: SpinorField | np.ndarray, twist: Twist | None = None) -> np.ndarray:
    """``D phi = sum_k e_k . nabla_{e_k} phi``."""
    nabla = covariant_derivative_spinor(G, phi, twist)
    return np.einsum("kab,...kb->...a", G.rep.gammas, nabla)


def second_covariant_derivative_spinor(
    G: MetricField, phi: SpinorField | np.ndarray, twist: Twist | None = None
) -> np.ndarray:
    """``nabla^2_{e_k, e_l} phi``, shape ``(*grid, m, m, d)``."""
    v, twist = _spinor(phi, twist)
    return covariant_derivative_spinor_oneform(G, covariant_derivative_spinor(G, v, twist), twist)


def curvature_spinor(G: MetricField, phi: SpinorField | np.ndarray) -> np.ndarray:
    """``R(e_i, e_j) phi = 1/4 sum_kl R_ijkl gamma_k gamma_l phi``, shape ``(*grid, m, m, d)``."""
    v, _ = _spinor(phi, None)
    return 0.25 * np.einsum("...ijkl,klab,...b->...ija", G.riemann, G.rep.products, v, optimize=True)


def spinor_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise Hermitian product, complex linear in the first slot."""
    return np.einsum("...a,...a->...", a, np.conj(b))
