"""Complex gamma matrices, intertwiners between spinor modules, spin lifts.

Conventions: gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij, every gamma is
skew-Hermitian, and the volume element is omega = eps_n gamma_1 ... gamma_n
with eps_n = 1, -i, i, 1 for n = 0, 1, 2, 3 (mod 4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

SIGMA = "Sigma"
SIGMA_SHARP = "SigmaSharp"

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def epsilon(n: int) -> complex:
    return (1, -1j, 1j, 1)[n % 4]


def spinor_dim(n: int) -> int:
    return 2 ** (n // 2)


@dataclass(frozen=True, eq=False)
class GammaRep:
    """A complex Clifford module for the Euclidean space of dimension ``n``."""

    n: int
    variant: str
    gammas: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.gammas.shape[-1] if self.n else 1

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.d, dtype=complex)

    @property
    def products(self) -> np.ndarray:
        """``products[i, j] = gamma_i @ gamma_j``, shape (n, n, d, d)."""
        return _products(self)


@lru_cache(maxsize=None)
def _products(rep: GammaRep) -> np.ndarray:
    g = rep.gammas
    out = np.einsum("iab,jbc->ijac", g, g)
    out.setflags(write=False)
    return out


def _volume(gammas: np.ndarray, n: int) -> np.ndarray:
    d = gammas.shape[-1] if n else 1
    out = np.eye(d, dtype=complex)
    for g in gammas:
        out = out @ g
    return epsilon(n) * out


def _raw_gammas(n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 1, 1), dtype=complex)
    if n % 2 == 0:
        prev = _raw_gammas(n - 2)
        d = prev.shape[-1]
        eye = np.eye(d, dtype=complex)
        out = [np.kron(g, _SZ) for g in prev]
        out.append(np.kron(eye, 1j * _SX))
        out.append(np.kron(eye, 1j * _SY))
        return np.array(out)
    # odd n: the extra generator is a multiple of the even volume element,
    # scaled so that the odd volume element becomes the identity
    prev = _raw_gammas(n - 1)
    prod = np.eye(prev.shape[-1], dtype=complex)
    for g in prev:
        prod = prod @ g
    c = epsilon(n - 1) ** 2 / epsilon(n)
    return np.concatenate([prev, (c * prod)[None]], axis=0)


@lru_cache(maxsize=None)
def build_rep(n: int, variant: str = SIGMA) -> GammaRep:
    """Gamma matrices for dimension ``n``.

    ``SigmaSharp`` only exists for odd ``n``; it negates every generator so
    that the volume element acts by -1 instead of +1.
    """
    if n < 0:
        raise ValueError("dimension must be non-negative")
    if variant not in (SIGMA, SIGMA_SHARP):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == SIGMA_SHARP and n % 2 == 0:
        raise ValueError("the sharp module only exists in odd dimension")
    gammas = _raw_gammas(n)
    if variant == SIGMA_SHARP:
        gammas = -gammas
    gammas.setflags(write=False)
    omega = _volume(gammas, n)
    omega.setflags(write=False)
    return GammaRep(n, variant, gammas, omega)


def clifford_matrix(rep: GammaRep, v: np.ndarray) -> np.ndarray:
    """Matrix of Clifford multiplication by ``v`` (components on the last axis)."""
    v = np.asarray(v)
    if v.shape[-1] != rep.n:
        raise ValueError(f"vector has {v.shape[-1]} components, expected {rep.n}")
    return np.einsum("...i,iab->...ab", v, rep.gammas)


def clifford_mul(rep: GammaRep, v: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``v . phi`` pointwise, broadcasting over leading axes."""
    phi = np.asarray(phi)
    if phi.shape[-1] != rep.d:
        raise ValueError(f"spinor has {phi.shape[-1]} components, expected {rep.d}")
    return np.einsum("...ab,...b->...a", clifford_matrix(rep, v), phi)


def spin_generator(rep: GammaRep, A: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Spinor image ``1/4 sum_jk A_jk gamma_j gamma_k`` of antisymmetric ``A``.

    With this normalisation ``[S, gamma_k] = sum_l A_kl gamma_l``.
    """
    A = np.asarray(A)
    if A.shape[-2:] != (rep.n, rep.n):
        raise ValueError(f"expected trailing shape {(rep.n, rep.n)}, got {A.shape[-2:]}")
    skew = np.abs(A + np.swapaxes(A, -1, -2)).max(initial=0.0)
    if skew > tol * max(1.0, np.abs(A).max(initial=0.0)):
        raise ValueError(f"matrix is not antisymmetric (defect {skew:.3e})")
    return 0.25 * np.einsum("...jk,jkab->...ab", A, rep.products)


def rep_residuals(rep: GammaRep) -> dict[str, float]:
    """Defects of the defining relations; all should vanish to rounding."""
    n, d, g = rep.n, rep.d, rep.gammas
    eye = np.eye(d)
    anti = 0.0
    for i in range(n):
        for j in range(n):
            lhs = g[i] @ g[j] + g[j] @ g[i]
            anti = max(anti, np.abs(lhs + 2.0 * (i == j) * eye).max())
    skew = max((np.abs(x + x.conj().T).max() for x in g), default=0.0)
    w = rep.omega
    out = {
        "anticommutation": float(anti),
        "skew_hermitian": float(skew),
        "omega_square": float(np.abs(w @ w - eye).max()),
        "omega_unitary": float(np.abs(w @ w.conj().T - eye).max()),
    }
    if n % 2 == 1:
        sign = 1.0 if rep.variant == SIGMA else -1.0
        out["omega_scalar"] = float(np.abs(w - sign * eye).max())
    else:
        out["omega_anticommutes"] = float(max((np.abs(w @ x + x @ w).max() for x in g), default=0.0))
    return out


def intertwiner(src: np.ndarray, dst: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Isometry ``X`` with ``X @ src[i] = dst[i] @ X`` for all ``i``.

    The solution space must be one dimensional (Schur). The phase is fixed by
    making the first entry of maximal modulus real and positive.
    """
    src = np.asarray(src, dtype=complex)
    dst = np.asarray(dst, dtype=complex)
    p, q = dst.shape[-1], src.shape[-1]
    if len(src) != len(dst):
        raise ValueError("source and target carry different numbers of generators")
    if len(src) == 0:
        if p != q:
            raise ValueError("no generators and mismatched dimensions")
        return np.eye(p, dtype=complex)
    # row-major vec: vec(X A) = (I kron A^T) vec X, vec(B X) = (B kron I) vec X
    blocks = [np.kron(np.eye(p), a.T) - np.kron(b, np.eye(q)) for a, b in zip(src, dst)]
    system = np.concatenate(blocks, axis=0)
    _, sv, vh = np.linalg.svd(system, full_matrices=False)
    null = np.sum(sv < tol * max(1.0, sv[0]))
    if null != 1:
        raise ArithmeticError(f"intertwining space has dimension {null}, expected 1")
    X = vh[-1].conj().reshape(p, q)
    gram = X.conj().T @ X
    X = X / np.sqrt(np.trace(gram).real / q)
    flat = X.ravel()
    mag = np.abs(flat)
    k = int(np.argmax(mag > mag.max() - 1e-9))
    X = X * (abs(flat[k]) / flat[k])
    return X


EMBEDDING_KINDS_ODD = ("J", "JSharp")
EMBEDDING_KINDS_EVEN = ("I", "JPlus", "JMinus", "JSharpPlus", "JSharpMinus")


@dataclass(frozen=True, eq=False)
class EmbeddingMap:
    """A linear map between spinor modules of dimensions ``n - 1`` and ``n``."""

    n: int
    kind: str
    matrix: np.ndarray = field(repr=False)
    source: np.ndarray = field(repr=False)
    target: GammaRep = field(repr=False)

    def __call__(self, phi: np.ndarray) -> np.ndarray:
        return np.einsum("ab,...b->...a", self.matrix, phi)


@lru_cache(maxsize=None)
def build_embedding(n: int, kind: str) -> EmbeddingMap:
    """Maps from the spinors of ``R^{n-1}`` into those of ``R^n``.

    For odd ``n`` the kinds are ``J`` (into the plain module) and ``JSharp``
    (into the sharp one); they satisfy ``gamma_n J = +-i J omega_{n-1}``.
    For even ``n`` the kind ``I`` is the Clifford-linear isomorphism from
    the direct sum of the plain and sharp modules; ``JPlus`` etc. are its
    restrictions composed with the projections ``(1 -+ i gamma_n)/sqrt 2``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    low = n - 1
    if n % 2 == 1:
        if kind not in EMBEDDING_KINDS_ODD:
            raise ValueError(f"kind {kind!r} not available for odd n")
        variant = SIGMA if kind == "J" else SIGMA_SHARP
        target = build_rep(n, variant)
        src = build_rep(low)
        # the first n-1 generators act as on the source; the last one acts
        # as +i (plain) or -i (sharp) times the source volume element
        sign = 1.0 if kind == "J" else -1.0
        a = np.concatenate([src.gammas, (sign * 1j * src.omega)[None]])
        X = intertwiner(a, target.gammas)
        return EmbeddingMap(n, kind, _frozen(X), src.gammas, target)
    if kind not in EMBEDDING_KINDS_EVEN:
        raise ValueError(f"kind {kind!r} not available for even n")
    target = build_rep(n)
    plain = build_rep(low)
    sharp = build_rep(low, SIGMA_SHARP)
    d = plain.d
    z = np.zeros((d, d), dtype=complex)
    src = np.array([np.block([[a, z], [z, b]]) for a, b in zip(plain.gammas, sharp.gammas)])
    I = _pair_intertwiner(src, target.gammas[:low])
    if kind == "I":
        return EmbeddingMap(n, kind, _frozen(I), src, target)
    gn = target.gammas[-1]
    eye = np.eye(target.d)
    half = {"Plus": (eye - 1j * gn) / np.sqrt(2.0), "Minus": (eye + 1j * gn) / np.sqrt(2.0)}
    if kind.startswith("JSharp"):
        block, source = I[:, d:], sharp.gammas
        proj = half[kind[len("JSharp"):]]
    else:
        block, source = I[:, :d], plain.gammas
        proj = half[kind[1:]]
    return EmbeddingMap(n, kind, _frozen(proj @ block), source, target)


def _pair_intertwiner(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Isometric intertwiner from a direct sum of two inequivalent modules."""
    d = src.shape[-1] // 2
    # restricted to the lower generators the target splits into the two
    # summands, so each block is solved separately and the results stacked
    blocks = [intertwiner(src[:, sl, sl], dst) for sl in (slice(0, d), slice(d, 2 * d))]
    X = np.concatenate(blocks, axis=1)
    if np.abs(X.conj().T @ X - np.eye(2 * d)).max() > 1e-10:
        raise ArithmeticError("assembled map is not unitary")
    return X


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OrientationMaps:
    """Maps from the spinor module to its orientation-reversed counterpart.

    ``rho_sharp`` is Clifford multiplication by the first generator and ``K``
    is an isometry with ``K gamma_i = -gamma'_i K`` (``gamma'`` the generators
    of the target). ``Psi = K rho_sharp`` commutes with Clifford
    multiplication once the first frame vector is reflected.
    """

    rep: GammaRep
    target: GammaRep
    rho_sharp: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    Psi: np.ndarray = field(repr=False)


@lru_cache(maxsize=None)
def build_orientation_maps(rep: GammaRep) -> OrientationMaps:
    if rep.n < 1:
        raise ValueError("needs at least one generator")
    rho = np.array(rep.gammas[0])
    if rep.n % 2 == 0:
        target = rep
        K = np.array(rep.omega)
    else:
        target = build_rep(rep.n, SIGMA_SHARP if rep.variant == SIGMA else SIGMA)
        K = intertwiner(rep.gammas, -target.gammas)
    return OrientationMaps(rep, target, _frozen(rho), _frozen(K), _frozen(K @ rho))


def reflection(m: int) -> np.ndarray:
    """Diagonal reflection of the first axis."""
    r = np.eye(m)
    r[0, 0] = -1.0
    return r


def spin_lift(rep: GammaRep, Q: np.ndarray, sign: int = 1) -> np.ndarray:
    """Spinor matrix ``S`` with ``S gamma_j S^-1 = sum_i Q_ij gamma_i``.

    ``Q`` must be a rotation; the two lifts differ by ``sign``.
    """
    Q = np.asarray(Q, dtype=float)
    if np.abs(Q.T @ Q - np.eye(rep.n)).max() > 1e-10 or np.linalg.det(Q) < 0:
        raise ValueError("not a rotation matrix")
    B = scipy.linalg.logm(Q)
    B = np.real(B)
    B = 0.5 * (B - B.T)
    S = scipy.linalg.expm(spin_generator(rep, B.T, tol=1e-8))
    return sign * S
