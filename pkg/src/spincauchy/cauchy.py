"""Initial data for spinorial Cauchy problems on generalised cylinders.

A path of flat metrics ``g_s`` on the torus and a parallel spinor ``phi``
determine the cylinder ``N = T^m x I`` with ``h = g_s + ds^2`` and the
spinor ``Psi = F(s) J(phi_s)``, where ``phi_s`` is the transported spinor,
``J`` embeds spinors of the slices into those of ``N`` and
``F = exp(-1/2 int f)``. With the Weingarten map ``W = -1/2 g^{-1} g'`` and
``Wbar = W + f nu (x) nu`` the spinor satisfies

    nabla_X Psi = (i/2) Wbar(X) * Psi,

and its Dirac current ``U = F^2 nu`` is null-like in the sense
``h(U, U) = |Psi|^4``. This module builds such data and evaluates every
identity on the full grid of ``N``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.integrate

from .bbgm import frame_and_derivative, loop_holonomy, fitting_check, transport_family
from .clifford import GammaRep, build_embedding, build_orientation_maps, build_rep, reflection
from .geometry import MetricField, SpinorField, covariant_derivative_spinor
from .grid import PERIODIC, TorusGrid
from .paths import MetricPath

FSpec = float | Callable[[float], float] | None

DEFAULT_TOL = 1e-8


@dataclass
class ConstraintData:
    """A spinor on the cylinder together with the data it should satisfy."""

    path: MetricPath
    grid_x: TorusGrid
    psi: SpinorField
    f: np.ndarray
    F: np.ndarray
    orientation: int = 1
    embedding: str = "J"
    theta: complex = 1.0
    lift: int = 1
    scenario: str = "path"
    phi_s: np.ndarray | None = field(default=None, repr=False)
    transport_error: float = 0.0
    phi_norm: float = 1.0

    @property
    def amplitude(self) -> np.ndarray:
        """Expected ``|Psi|`` at the s-nodes, ``F |phi|``."""
        return self.F * self.phi_norm

    @property
    def m(self) -> int:
        return self.path.m

    @property
    def n(self) -> int:
        return self.path.m + 1

    @property
    def rep(self) -> GammaRep:
        return self.psi.rep

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid.from_axes(self.grid_x.axes + (self.path.axis,))

    @property
    def metric(self) -> MetricField:
        return _cylinder_metric(self.path, self.grid_x, self.orientation)

    @property
    def weingarten(self) -> np.ndarray:
        """Frame components of ``W`` at the s-nodes, shape ``(ns, m, m)``."""
        return weingarten_frame(self.path, self.orientation)

    @property
    def wbar(self) -> np.ndarray:
        """Frame components of ``Wbar`` on the grid of ``N``."""
        ns, m = self.path.axis.size, self.m
        Wb = np.zeros((ns, m + 1, m + 1))
        Wb[:, :m, :m] = self.weingarten
        Wb[:, m, m] = self.f
        return np.broadcast_to(Wb, self.grid_x.shape + Wb.shape)

    def with_psi(self, values: np.ndarray) -> "ConstraintData":
        return replace(self, psi=SpinorField(values, self.psi.rep, self.psi.twist))


def _cylinder_metric(path: MetricPath, grid_x: TorusGrid, orientation: int) -> MetricField:
    if not path.is_flat:
        raise ValueError("the cylinder metric is only assembled for flat paths")
    ns, m = path.axis.size, path.m
    H = np.zeros((ns, m + 1, m + 1))
    H[:, :m, :m] = path.samples
    H[:, m, m] = 1.0
    grid = TorusGrid.from_axes(grid_x.axes + (path.axis,))
    H = np.broadcast_to(H, grid_x.shape + H.shape)
    return MetricField(grid, H, rep=build_rep(m + 1), orientation=orientation)


def weingarten_frame(path: MetricPath, orientation: int = 1) -> np.ndarray:
    """``W = -1/2 E^T g' E`` at the nodes (``g(W X, Y) = -1/2 g'(X, Y)``)."""
    E, _ = frame_and_derivative(path.samples, np.zeros_like(path.samples))
    if orientation == -1:
        E = E @ reflection(path.m)
    Et = np.swapaxes(E, -1, -2)
    return -0.5 * Et @ path.derivative_samples @ E


def _f_values(f: FSpec, nodes: np.ndarray, s0: float) -> tuple[np.ndarray, np.ndarray]:
    """``f`` at the nodes and ``F = exp(-1/2 int_{s0}^s f)``."""
    if f is None:
        f = 0.0
    if callable(f):
        vals = np.array([float(f(s)) for s in nodes])
        ints = np.array([scipy.integrate.quad(f, s0, s, epsabs=1e-14, epsrel=1e-13, limit=200)[0] for s in nodes])
    else:
        vals = np.full(nodes.shape, float(f))
        ints = float(f) * (nodes - s0)
    return vals, np.exp(-0.5 * ints)


def build_initial_data(
    path: MetricPath,
    phi0: np.ndarray,
    grid_x: TorusGrid,
    f: FSpec = None,
    s0: float | None = None,
    lift: int = 1,
    theta: complex | None = None,
    scenario: str = "path",
    tol: float = 1e-10,
) -> ConstraintData:
    """Construct ``Psi = F(s) J(phi_s)`` from a flat path and a constant spinor.

    ``phi0`` are the frame components of the parallel spinor on the first
    slice. In even slice dimension a spinor of negative chirality is handled
    by reversing the orientation of the frame; spinors of mixed chirality are
    rejected. On a closed loop the spinor must be an eigenvector of the
    holonomy, whose eigenvalue becomes the twist of ``Psi``.
    """
    if not path.is_flat:
        raise ValueError("parallel spinors on non-flat metrics are out of scope")
    if grid_x.dim != path.m or not grid_x.is_periodic:
        raise ValueError("slice grid must be a periodic grid of the path dimension")
    m = path.m
    rep_m = build_rep(m)
    phi0 = np.asarray(phi0, dtype=complex)
    if phi0.shape != (rep_m.d,):
        raise ValueError(f"phi0 must have {rep_m.d} components")
    if not np.linalg.norm(phi0) > 0:
        raise ValueError("phi0 must be nonzero")

    orientation = 1
    sigma0 = phi0
    if m % 2 == 0:
        w = rep_m.omega @ phi0
        scale = np.linalg.norm(phi0)
        if np.linalg.norm(w - phi0) <= 1e-12 * scale:
            kind = "J"
        elif np.linalg.norm(w + phi0) <= 1e-12 * scale:
            # reverse the frame; the orientation map carries phi to a spinor
            # of positive chirality for the reflected frame
            orientation = -1
            sigma0 = build_orientation_maps(rep_m).Psi @ phi0
            kind = "J"
        else:
            raise ValueError("parity mismatch: phi0 is not a chirality eigenvector")
    else:
        kind = "JPlus"

    lo, hi = path.interval
    s0 = lo if s0 is None else s0
    if s0 != path.nodes[0]:
        raise ValueError("transport starts at the first s-node")
    fvals, F = _f_values(f, path.nodes, s0)
    phis, terr = transport_family(path, sigma0, rep=rep_m, tol=tol, orientation=orientation)

    twist = None
    theta_out: complex = 1.0
    if path.closed:
        P = loop_holonomy(path, lift=lift, rep=rep_m, orientation=orientation)
        fit = fitting_check(P, sigma0)
        if not fit.fits:
            raise ValueError(
                f"spinor does not fit the loop (eigen-residual {fit.eigen_residual:.3e}, "
                f"holonomy spectrum {np.round(fit.spectrum, 12).tolist()})"
            )
        if theta is not None and abs(theta - fit.theta) > 1e-6:
            raise ValueError(f"requested twist {theta} differs from the holonomy eigenvalue {fit.theta}")
        theta_out = complex(fit.theta)
        if path.axis.kind == PERIODIC:
            Fend = _f_values(f, np.array([hi]), s0)[1][0]
            if abs(Fend - F[0]) > 1e-10 * abs(F[0]):
                raise ValueError("F is not periodic on the loop: f must integrate to zero")
            # in the trivialisation the values obey Psi(L) = U Psi(0) = lift theta Psi(0)
            twist = (m, lift * theta_out)

    J = build_embedding(m + 1, kind)
    psi_nodes = F[:, None] * np.einsum("ab,sb->sa", J.matrix, phis)
    values = np.broadcast_to(psi_nodes, grid_x.shape + psi_nodes.shape).copy()
    psi = SpinorField(values, J.target, twist)
    return ConstraintData(
        path=path,
        grid_x=grid_x,
        psi=psi,
        f=fvals,
        F=F,
        orientation=orientation,
        embedding=kind,
        theta=theta_out,
        lift=lift,
        scenario=scenario,
        phi_s=phis,
        transport_error=terr,
        phi_norm=float(np.linalg.norm(phi0)),
    )


# residuals


def _rel(diff: np.ndarray, scale: float) -> tuple[float, float]:
    a = float(np.abs(diff).max())
    return (a / scale if scale > 0 else a), a


def _eq(identity: str, diff: np.ndarray, scale: float, tol: float, t0: float) -> dict:
    rel, ab = _rel(diff, scale)
    return {
        "id": identity,
        "residual_rel": rel,
        "residual_abs": ab,
        "tol": tol,
        "pass": bool(rel <= tol),
        "runtime_ms": 1000.0 * (time.perf_counter() - t0),
    }


def killing_defect(data: ConstraintData) -> np.ndarray:
    """``nabla_{e_k} Psi - (i/2) Wbar(e_k) * Psi`` on the grid of ``N``."""
    H = data.metric
    nabla = covariant_derivative_spinor(H, data.psi)
    Wb = data.wbar
    rhs = 0.5j * np.einsum("...jk,jab,...b->...ka", Wb, data.rep.gammas, data.psi.values)
    return nabla - rhs


def residual_killing(data: ConstraintData, tol: float = DEFAULT_TOL) -> dict:
    """Generalised imaginary Killing equation, derivatives taken on ``N`` directly."""
    t0 = time.perf_counter()
    scale = float(np.abs(data.psi.values).max())
    return _eq("imaginary_killing", killing_defect(data), scale, tol, t0)


def residual_hypersurface(data: ConstraintData, tol: float = DEFAULT_TOL) -> dict:
    """Tangential derivatives via the hypersurface formula, as a cross-check.

    ``nabla^N_X J(phi) = J(nabla^M_X phi) + 1/2 W(X) * nu * J(phi)`` with
    ``nabla^M`` computed slice by slice.
    """
    t0 = time.perf_counter()
    if data.phi_s is None:
        raise ValueError("slice spinors are needed for the hypersurface route")
    H = data.metric
    m = data.m
    lhs = covariant_derivative_spinor(H, data.psi)[..., :m, :]
    J = build_embedding(m + 1, data.embedding)
    gam = data.rep.gammas
    rhs = np.zeros_like(lhs)
    for k in range(data.path.axis.size):
        Gk = MetricField(data.grid_x, data.path.samples[k], orientation=data.orientation)
        phi = np.broadcast_to(data.phi_s[k], data.grid_x.shape + data.phi_s[k].shape)
        nabla_m = covariant_derivative_spinor(Gk, phi)
        Jphi = J(data.phi_s[k])
        nuJ = gam[m] @ Jphi
        W = data.weingarten[k]
        tang = 0.5 * np.einsum("jl,jab,b->la", W, gam[:m], nuJ)
        rhs[..., k, :, :] = data.F[k] * (J(nabla_m) + tang)
    scale = float(np.abs(data.psi.values).max())
    return _eq("hypersurface", lhs - rhs, scale, tol, t0)


def dirac_current(psi: np.ndarray, rep: GammaRep) -> np.ndarray:
    """Frame components ``U_j = -i <e_j * Psi, Psi>``; real for any spinor."""
    return (-1j * np.einsum("jab,...b,...a->...j", rep.gammas, psi, np.conj(psi))).real


def _current_imag(psi: np.ndarray, rep: GammaRep) -> np.ndarray:
    return (-1j * np.einsum("jab,...b,...a->...j", rep.gammas, psi, np.conj(psi))).imag


def projection_defect(psi: np.ndarray, rep: GammaRep) -> np.ndarray:
    """Component ``psi_perp`` of ``i Psi`` orthogonal to ``{V * Psi : V real}``."""
    vecs = np.einsum("jab,...b->...ja", rep.gammas, psi)  # [..., j, a]
    # real span: split into real and imaginary parts
    A = np.concatenate([vecs.real, vecs.imag], axis=-1)  # [..., j, 2d]
    target = 1j * psi
    b = np.concatenate([target.real, target.imag], axis=-1)
    flatA = A.reshape((-1,) + A.shape[-2:])
    flatb = b.reshape((-1, b.shape[-1]))
    out = np.empty_like(flatb)
    for p in range(flatA.shape[0]):
        coef, *_ = np.linalg.lstsq(flatA[p].T, flatb[p], rcond=None)
        out[p] = flatb[p] - flatA[p].T @ coef
    d = psi.shape[-1]
    res = out.reshape(b.shape)
    return res[..., :d] + 1j * res[..., d:]


def residual_constraints(data: ConstraintData, tol: float = DEFAULT_TOL) -> list[dict]:
    """Every constraint, with the expected current ``U = |Psi|^2 nu`` and ``u = |Psi|^2``."""
    rep = data.rep
    psi = data.psi.values
    n = data.n
    F2 = np.broadcast_to((data.amplitude**2)[:, None], data.grid_x.shape + (data.path.axis.size, 1))
    nu = np.zeros(n)
    nu[-1] = 1.0
    out = [residual_killing(data, tol)]

    t0 = time.perf_counter()
    U = dirac_current(psi, rep)
    imag = _current_imag(psi, rep)
    expected = F2 * nu
    scale = float(F2.max())
    rec = _eq("dirac_current", np.concatenate([U - expected, imag], axis=-1), scale, tol, t0)
    out.append(rec)

    t0 = time.perf_counter()
    u = F2[..., 0]
    Upsi = np.einsum("...j,jab,...b->...a", U, rep.gammas, psi)
    out.append(_eq("current_action", Upsi - 1j * u[..., None] * psi, scale**1.5, tol, t0))

    t0 = time.perf_counter()
    hUU = np.einsum("...j,...j->...", U, U)
    out.append(_eq("current_norm", u**2 - hUU, scale**2, tol, t0))

    t0 = time.perf_counter()
    norm2 = np.einsum("...a,...a->...", psi, np.conj(psi)).real
    rec = _eq("quadratic_condition", hUU - norm2**2, scale**2, tol, t0)
    proj = projection_defect(psi, rep)
    prel, pabs = _rel(proj, float(np.sqrt(norm2.max())))
    rec["projection_rel"] = prel
    rec["projection_abs"] = pabs
    rec["pass"] = bool(rec["pass"] and prel <= tol)
    rec["residual_rel"] = max(rec["residual_rel"], prel)
    rec["runtime_ms"] = 1000.0 * (time.perf_counter() - t0)
    out.append(rec)
    return out


def derived_quantities(data: ConstraintData) -> dict:
    """Checks on ``W``, ``F``, ``nu * Psi``, ``|Psi|`` and the current."""
    psi = data.psi.values
    rep = data.rep
    nu_psi = rep.gammas[-1] @ psi[..., None]
    norm = np.sqrt(np.einsum("...a,...a->...", psi, np.conj(psi)).real)
    F = np.broadcast_to(data.amplitude, norm.shape)
    U = dirac_current(psi, rep)
    u = np.sqrt(np.einsum("...j,...j->...", U, U))
    nu = np.zeros(data.n)
    nu[-1] = 1.0
    return {
        "nu_action": float(np.abs(nu_psi[..., 0] - 1j * psi).max()),
        "norm_equals_F": float(np.abs(norm - F).max()),
        "current_equals_F2_nu": float(np.abs(U - F[..., None] ** 2 * nu).max()),
        "length_equals_F2": float(np.abs(u - F**2).max()),
    }


# Consequences of the Killing equation


def consequence_checks(data: ConstraintData, tol: float = DEFAULT_TOL, killing_tol: float | None = None) -> dict:
    """Consequences of the generalised imaginary Killing equation.

    (a) ``Wbar^T U + grad |Psi|^2 = 0``; (b) ``nabla U + |Psi|^2 Wbar = 0``;
    (c) ``q = |Psi|^4 - h(U, U)`` is constant; (d) the chain
    ``q = 0  <=>  |U| = |Psi|^2  <=>  i Psi in {V * Psi}  <=>  U * Psi = i |U| Psi``
    holds with all four statements agreeing.
    """
    kt = tol if killing_tol is None else killing_tol
    k = residual_killing(data, kt)
    if not k["pass"]:
        raise ValueError(f"spinor fails the Killing precondition (residual {k['residual_rel']:.3e})")
    H = data.metric
    rep = data.rep
    psi = data.psi.values
    Wb = data.wbar
    out: dict = {"killing": k}

    t0 = time.perf_counter()
    U = dirac_current(psi, rep)
    norm2 = np.einsum("...a,...a->...", psi, np.conj(psi)).real
    scale = float(norm2.max())
    grad = H.frame_partials(norm2)
    a = np.einsum("...jk,...j->...k", Wb, U) + grad
    out["gradient_identity"] = _eq("gradient_identity", a, scale, tol, t0)

    t0 = time.perf_counter()
    dU = H.frame_partials(U) + np.einsum("...i,...kij->...kj", U, H.connection)
    b = dU + norm2[..., None, None] * np.swapaxes(Wb, -1, -2)
    out["current_derivative"] = _eq("current_derivative", b, scale, tol, t0)

    t0 = time.perf_counter()
    q = norm2**2 - np.einsum("...j,...j->...", U, U)
    mean = float(q.mean())
    spread = float(q.max() - q.min())
    tiny = 1e-12 * scale**2
    if abs(mean) > tiny:
        var_rel = spread / abs(mean)
    else:
        var_rel = float(np.abs(q).max()) / max(scale**2, 1e-300)
    out["q_constant"] = {
        "id": "q_constant",
        "mean": mean,
        "spread": spread,
        "residual_rel": var_rel,
        "tol": 1e-9,
        "pass": bool(var_rel <= 1e-9 or spread <= tiny),
        "runtime_ms": 1000.0 * (time.perf_counter() - t0),
    }

    t0 = time.perf_counter()
    qa = abs(mean) / scale**2
    Un = np.sqrt(np.einsum("...j,...j->...", U, U))
    norm_gap = float(np.abs(Un - norm2).max()) / scale
    proj = float(np.abs(projection_defect(psi, rep)).max()) / np.sqrt(scale)
    act = np.einsum("...j,jab,...b->...a", U, rep.gammas, psi) - 1j * Un[..., None] * psi
    act_gap = float(np.abs(act).max()) / scale**1.5
    flags = {
        "q_zero": qa <= tol,
        "norm_condition": norm_gap <= tol,
        "quadratic_condition": proj <= tol,
        "current_action": act_gap <= tol,
    }
    out["type_one_chain"] = {
        "id": "type_one_chain",
        "values": {"q": qa, "norm_condition": norm_gap, "quadratic_condition": proj, "current_action": act_gap},
        "flags": flags,
        "type_one": all(flags.values()),
        "pass": len(set(flags.values())) == 1,
        "runtime_ms": 1000.0 * (time.perf_counter() - t0),
    }
    return out


def zero_set_probe(data: ConstraintData) -> dict:
    """Gronwall-type bound ``max |Psi| <= exp(|Wbar|/2 * diam) min |Psi|``.

    The diameter is bounded by the length of a coordinate path reaching any
    grid point: half a period along each torus axis plus the s-interval.
    """
    psi = data.psi.values
    norm = np.sqrt(np.einsum("...a,...a->...", psi, np.conj(psi)).real)
    wnorm = float(np.linalg.norm(data.wbar[(0,) * data.m], ord=2, axis=(-2, -1)).max())
    diag = np.sqrt(np.diagonal(data.path.samples, axis1=-2, axis2=-1)).max(axis=0)
    diam = float(0.5 * diag.sum() + data.path.axis.length)
    lo, hi = float(norm.min()), float(norm.max())
    bound = float(np.exp(0.5 * wnorm * diam) * lo)
    return {
        "min_norm": lo,
        "max_norm": hi,
        "wbar_sup": wnorm,
        "diameter_bound": diam,
        "gronwall_bound": bound,
        "zero_set_empty": lo > 0,
        "pass": bool(hi <= bound * (1 + 1e-12) and (lo > 0 or hi == 0)),
    }


def twisted_verify(data: ConstraintData, tol: float = DEFAULT_TOL) -> list[dict]:
    """Residuals for data on a closed loop, including the twist consistency."""
    if not data.path.closed:
        raise ValueError("twisted verification needs data on a closed loop")
    t0 = time.perf_counter()
    rep_m = build_rep(data.m)
    P = loop_holonomy(data.path, lift=data.lift, orientation=data.orientation, rep=rep_m)
    fit = fitting_check(P, data.phi_s[0])
    gap = abs(fit.theta - data.theta) if fit.fits else float("inf")
    recs = residual_constraints(data, tol)
    recs.append(
        {
            "id": "twist_consistency",
            "residual_rel": float(gap),
            "residual_abs": float(gap),
            "tol": 1e-6,
            "pass": bool(gap <= 1e-6),
            "runtime_ms": 1000.0 * (time.perf_counter() - t0),
        }
    )
    return recs


def corrupt(data: ConstraintData, chi: np.ndarray) -> ConstraintData:
    """Add a constant spinor ``chi`` to ``Psi`` (keeps the Killing equation when ``Wbar = 0``)."""
    chi = np.asarray(chi, dtype=complex)
    return data.with_psi(data.psi.values + chi)
