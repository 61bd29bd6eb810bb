"""Batch checks shared by the command line and the acceptance tests.

Every function here returns a JSON-ready report dictionary. Reports are
deterministic for a given configuration and seed; only the ``timings`` and
``runtime_ms`` fields vary between runs.
"""

from __future__ import annotations

import ast
import time
from typing import Any, Callable

import numpy as np

from . import bbgm, cauchy, clifford, deform, gauge
from .geometry import MetricField
from .grid import CHEBYSHEV, Axis, FourierSeries, TorusGrid
from .paths import (
    MetricPath,
    constant_path,
    exponential_path,
    rotating_loop,
    rotation,
    tumbling_loop,
)

ALGEBRA_TOL = 1e-12

# check id -> (statement, command that runs it)
CHECKS: dict[str, tuple[str, str]] = {
    "clifford_relations": ("gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij, gamma_i skew-Hermitian", "verify-algebra"),
    "volume_element": ("omega = eps_n gamma_1..gamma_n, omega^2 = 1, omega = +-1 in odd n", "verify-algebra"),
    "embedding_odd": ("gamma_i J = J gamma_i (i < n), gamma_n J = +-i J omega_{n-1}, J isometric", "verify-algebra"),
    "embedding_even": ("gamma_n J^+- = +-i J^+-, J^+- isometric, I Clifford-linear and unitary", "verify-algebra"),
    "embedding_even_not_clifford": ("for even n, J^+- does not intertwine single gamma_i (i < n)", "verify-algebra"),
    "orientation_maps": ("rho^2 = -1, K gamma = -gamma' K, Psi = K rho reflects e_1, Psi swaps chirality", "verify-algebra"),
    "spin_generator": ("[S(A), gamma_k] = sum_l A_kl gamma_l, exp S(A) covers exp A", "verify-algebra"),
    "dirac_wang_parallel": ("D W(h) = 4 kappa(h) + phi (x) div h for parallel phi", "identities"),
    "dirac_wang_general": ("D W(h)(X) = 4 kappa(h)(X) + div h(X) phi - 2 nabla_{h#X} phi - h#X . D phi", "identities"),
    "dirac_squared_wang": ("D^2 W(h) = W(Delta_E h) - 2 sum W_{nabla phi}(nabla h) + W_{D^2 phi}(h) - 2 h#(e_l) . R(., e_l) phi", "identities"),
    "imaginary_killing": ("nabla_X Psi = (i/2) Wbar(X) * Psi", "verify"),
    "hypersurface": ("nabla^N_X J(phi) = J(nabla^M_X phi) + 1/2 W(X) * nu * J(phi)", "verify"),
    "dirac_current": ("h(U, X) = -i <X * Psi, Psi>, U = |Psi|^2 nu", "verify"),
    "current_action": ("U * Psi = i u Psi", "verify"),
    "current_norm": ("u^2 = h(U, U)", "verify"),
    "quadratic_condition": ("i Psi in {V * Psi}, equivalently h(U, U) = |Psi|^4", "verify"),
    "twist_consistency": ("Psi(s + L) = theta Psi(s) with theta the holonomy eigenvalue", "verify"),
    "gradient_identity": ("Wbar^T U + grad |Psi|^2 = 0", "verify"),
    "current_derivative": ("nabla U + |Psi|^2 Wbar = 0", "verify"),
    "q_constant": ("q = |Psi|^4 - h(U, U) is constant", "verify"),
    "type_one_chain": ("q = 0 <=> |U| = |Psi|^2 <=> quadratic condition <=> current action", "verify"),
    "holonomy_unitary": ("transport around a loop is unitary with spectrum on the unit circle", "holonomy"),
    "fitting": ("phi0 is an eigenvector of the loop holonomy", "holonomy"),
    "gauge_divergence": ("div_{g~_s} d/ds g~_s = 0 after pulling back by the gauge flow", "gauge-fix"),
}

IDENTITIES = ("dirac_wang_parallel", "dirac_wang_general", "dirac_squared_wang")


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox (64-bit counter-based) generator; ``stream`` selects an independent substream."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


def _rec(identity: str, residual: float, tol: float, **extra) -> dict:
    return {"id": identity, "residual": float(residual), "tol": tol, "pass": bool(residual <= tol), **extra}


# algebra


def _embedding_checks(n: int) -> list[dict]:
    out = []
    if n % 2 == 1:
        low = clifford.build_rep(n - 1)
        for kind, sign in (("J", 1.0), ("JSharp", -1.0)):
            E = clifford.build_embedding(n, kind)
            X, tg = E.matrix, E.target.gammas
            r = max((np.abs(tg[i] @ X - X @ low.gammas[i]).max() for i in range(n - 1)), default=0.0)
            r = max(r, np.abs(tg[-1] @ X - sign * 1j * X @ low.omega).max())
            r = max(r, np.abs(X.conj().T @ X - np.eye(X.shape[1])).max())
            out.append(_rec("embedding_odd", r, ALGEBRA_TOL, n=n, kind=kind))
        return out
    I = clifford.build_embedding(n, "I")
    tg = I.target.gammas
    r = max(np.abs(tg[i] @ I.matrix - I.matrix @ I.source[i]).max() for i in range(n - 1))
    r = max(r, np.abs(I.matrix.conj().T @ I.matrix - np.eye(I.matrix.shape[0])).max())
    # I(phi) is orthogonal to i gamma_n I(phi)
    Im = I.matrix
    ortho = np.abs(np.einsum("ai,ai->i", Im.conj(), 1j * tg[-1] @ Im)).max()
    out.append(_rec("embedding_even", max(r, ortho), ALGEBRA_TOL, n=n, kind="I"))
    low = clifford.build_rep(n - 1)
    pairs = [(i, j) for i in range(n - 1) for j in range(i + 1, n - 1)]
    for kind in ("JPlus", "JMinus", "JSharpPlus", "JSharpMinus"):
        E = clifford.build_embedding(n, kind)
        sign = 1.0 if kind.endswith("Plus") else -1.0
        X = E.matrix
        r = np.abs(tg[-1] @ X - sign * 1j * X).max()
        r = max(r, np.abs(X.conj().T @ X - np.eye(X.shape[1])).max())
        src = E.source
        r = max([r] + [np.abs(tg[i] @ tg[j] @ X - X @ src[i] @ src[j]).max() for i, j in pairs])
        # single generators are not intertwined in even dimension
        gap = max(np.abs(tg[i] @ X - X @ src[i]).max() for i in range(n - 1)) if n > 1 else 1.0
        out.append(_rec("embedding_even", r, ALGEBRA_TOL, n=n, kind=kind, clifford_gap=float(gap)))
        out.append({"id": "embedding_even_not_clifford", "n": n, "kind": kind, "gap": float(gap), "pass": bool(gap > 0.1)})
    return out


def _orientation_checks(rep: clifford.GammaRep) -> dict:
    o = clifford.build_orientation_maps(rep)
    n, d = rep.n, rep.d
    g, t = rep.gammas, o.target.gammas
    eye = np.eye(d)
    R = clifford.reflection(n)
    r = np.abs(o.rho_sharp @ o.rho_sharp + eye).max()
    r = max(r, max(np.abs(o.K @ g[i] + t[i] @ o.K).max() for i in range(n)))
    r = max(r, np.abs(o.K.conj().T @ o.K - eye).max())
    refl = max(np.abs(o.Psi @ g[i] - sum(R[j, i] * t[j] for j in range(n)) @ o.Psi).max() for i in range(n))
    r = max(r, refl)
    extra = {}
    if n % 2 == 0:
        swap = np.abs(rep.omega @ o.Psi + o.Psi @ rep.omega).max()
        keep = np.abs(rep.omega @ o.K - o.K @ rep.omega).max()
        r = max(r, swap, keep)
        extra["parity_swap"] = float(swap)
    return _rec("orientation_maps", r, ALGEBRA_TOL, n=n, variant=rep.variant, **extra)


def _spin_checks(rep: clifford.GammaRep, rng: np.random.Generator) -> dict:
    import scipy.linalg

    n = rep.n
    B = rng.standard_normal((n, n))
    A = 0.5 * (B - B.T)
    S = clifford.spin_generator(rep, A)
    g = rep.gammas
    r = max(np.abs(S @ g[k] - g[k] @ S - np.einsum("l,lab->ab", A[k], g)).max() for k in range(n))
    U = scipy.linalg.expm(S)
    Q = scipy.linalg.expm(A)
    Ui = np.linalg.inv(U)
    cover = max(np.abs(Ui @ g[i] @ U - np.einsum("j,jab->ab", Q[:, i], g)).max() for i in range(n))
    r = max(r, cover, np.abs(U.conj().T @ U - np.eye(rep.d)).max())
    return _rec("spin_generator", r, 1e-12, n=n, variant=rep.variant)


def algebra_report(nmax: int = 8, seed: int = 0) -> dict:
    t0 = time.perf_counter()
    rng = make_rng(seed, 1)
    checks = []
    expected_eps = {0: 1, 1: -1j, 2: 1j, 3: 1}
    for n in range(1, nmax + 1):
        variants = (clifford.SIGMA, clifford.SIGMA_SHARP) if n % 2 else (clifford.SIGMA,)
        for v in variants:
            rep = clifford.build_rep(n, v)
            res = clifford.rep_residuals(rep)
            checks.append(
                _rec("clifford_relations", max(res["anticommutation"], res["skew_hermitian"]), ALGEBRA_TOL, n=n, variant=v)
            )
            vol = max(res["omega_square"], res["omega_unitary"], res.get("omega_scalar", 0.0), res.get("omega_anticommutes", 0.0))
            vol = max(vol, abs(clifford.epsilon(n) - expected_eps[n % 4]))
            checks.append(_rec("volume_element", vol, ALGEBRA_TOL, n=n, variant=v))
            checks.append(_orientation_checks(rep))
            if n >= 2:
                checks.append(_spin_checks(rep, rng))
        checks.extend(_embedding_checks(n))
    return {
        "suite": "algebra",
        "nmax": nmax,
        "seed": seed,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "timings": {"total_ms": 1000.0 * (time.perf_counter() - t0)},
    }


# deformation identities


def _sym(h: np.ndarray) -> np.ndarray:
    return h + np.swapaxes(h, -1, -2)


def identity_inputs(identity: str, m: int, seed: int, metric: str, amplitude: float, kmax: int = 2):
    """Bandlimited random inputs, independent of the grid they are sampled on."""
    rng = make_rng(seed, 2)
    rep = clifford.build_rep(m)
    u = FourierSeries.random(rng, m, kmax, (), amplitude) if metric == "conformal" else None
    h = FourierSeries.random(rng, m, kmax, (m, m))
    if identity == "dirac_wang_parallel":
        c = rng.standard_normal(rep.d) + 1j * rng.standard_normal(rep.d)
        phi = FourierSeries(m, {(0,) * m: c}, (rep.d,))
    else:
        phi = FourierSeries.random(rng, m, kmax, (rep.d,), real=False)
    return u, h, phi


def run_identity(identity: str, grid: TorusGrid, seed: int = 0, metric: str = "flat", amplitude: float = 0.1, kmax: int = 2) -> dict:
    m = grid.dim
    if identity == "dirac_wang_parallel" and metric != "flat":
        raise ValueError("the parallel-spinor identity is checked on flat metrics")
    u, h, phi = identity_inputs(identity, m, seed, metric, amplitude, kmax)
    G = MetricField.conformal(grid, u.sample(grid)) if u is not None else MetricField.flat(grid)
    hv = _sym(h.sample(grid))
    pv = phi.sample(grid).astype(complex)
    fn = {
        "dirac_wang_parallel": deform.check_dirac_wang,
        "dirac_wang_general": deform.check_dirac_wang_general,
        "dirac_squared_wang": deform.check_dirac_squared_wang,
    }[identity]
    rec = fn(G, pv, hv)
    rec["metric"] = metric
    rec["seed"] = seed
    return rec


def identities_report(
    which: list[str], grids: list[int], m: int = 2, seed: int = 0, metric: str = "flat", amplitude: float = 0.1, tol: float | None = None
) -> dict:
    rows = []
    for identity in which:
        for N in grids:
            rows.append(run_identity(identity, TorusGrid((N,) * m), seed, metric, amplitude))
    out = {"suite": "identities", "m": m, "seed": seed, "metric": metric, "amplitude": amplitude, "rows": rows}
    if tol is not None:
        for r in rows:
            r["tol"] = tol
            r["pass"] = bool(r["residual_rel"] <= tol)
        out["pass"] = all(r["pass"] for r in rows)
    return out


# scenarios

_ALLOWED_NAMES: dict[str, Any] = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "arctan", "abs", "pi")
}


def parse_expression(text: str | float | int) -> float | Callable[[float], float]:
    """A constant, or an arithmetic expression in ``s`` using common numpy functions."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(text)
    except ValueError:
        pass
    tree = ast.parse(text, mode="eval")
    allowed = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
               ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ValueError(f"unsupported syntax in expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES and node.id != "s":
            raise ValueError(f"unknown name {node.id!r} in expression")
    code = compile(tree, "<f>", "eval")

    def fn(s: float) -> float:
        return float(eval(code, {"__builtins__": {}}, {**_ALLOWED_NAMES, "s": s}))

    return fn


def parse_interval(text: str) -> tuple[float, float, int]:
    """``"a:b:n"`` -> ``(a, b, n)``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("interval must look like a:b:n")
    return float(parts[0]), float(parts[1]), int(parts[2])


def generic_path(m: int, axis: Axis) -> MetricPath:
    """An open flat path whose eigenframe rotates and whose eigenvalues drift."""
    rates = np.linspace(0.6, -0.4, m)

    def fn(s):
        R = rotation(m, 0, 1, 0.7 * s * s)
        if m >= 3:
            R = R @ rotation(m, 1, 2, 0.3 * s)
        return R @ np.diag(np.exp(rates * s)) @ R.T

    return MetricPath.from_function(fn, axis, probes=64)


SCENARIO_DEFAULT_F = {"minkowski": 0.0, "cone": -1.0, "generic": "0.5*sin(3*s)", "rotating": 0.0, "tumbling": 0.0, "path-file": 0.0}


def scenario_path(cfg: dict) -> MetricPath:
    name = cfg["scenario"]
    m = int(cfg.get("m", 2))
    if name in ("rotating", "tumbling"):
        L = float(cfg.get("length", 1.0))
        nodes = int(cfg.get("nodes", 16))
        if name == "rotating":
            a, b = cfg.get("anisotropy", [2.0, 0.5])
            return rotating_loop(m, float(a), float(b), L, nodes)
        if m != 3:
            raise ValueError("the tumbling loop lives in dimension three")
        return tumbling_loop(tuple(cfg.get("diag", [1.0, 2.0, 0.5])), L, nodes)
    if name == "path-file":
        from .io import read_json

        return path_from_json(read_json(cfg["path_file"]))
    a, b, n = parse_interval(cfg.get("s", "0:1:16"))
    axis = Axis(n, CHEBYSHEV, a, b)
    if name == "minkowski":
        return constant_path(np.eye(m), axis)
    if name == "cone":
        return exponential_path(np.eye(m), axis)
    if name == "generic":
        return generic_path(m, axis)
    raise ValueError(f"unknown scenario {name!r}")


def path_from_json(data: dict) -> MetricPath:
    path = MetricPath.from_json(data)
    if "s_nodes" in data:
        nodes = np.asarray(data["s_nodes"], dtype=float)
        if nodes.shape != path.nodes.shape or np.abs(nodes - path.nodes).max() > 1e-12 * path.axis.length:
            raise ValueError("s_nodes do not match the declared s-axis collocation nodes")
    return path


def path_to_json(path: MetricPath) -> dict:
    out = path.to_json()
    out["s_nodes"] = path.nodes.tolist()
    return out


def default_phi(path: MetricPath, lift: int = 1) -> np.ndarray:
    rep = clifford.build_rep(path.m)
    if path.closed:
        P = bbgm.loop_holonomy(path, lift=lift)
        w, V = np.linalg.eig(P)
        order = np.lexsort((np.round(w.real, 9), np.round(np.angle(w), 9)))
        v = V[:, order[-1]]
        k = int(np.argmax(np.abs(v) > np.abs(v).max() - 1e-9))
        v = v * (abs(v[k]) / v[k])
        return v / np.linalg.norm(v)
    e = np.zeros(rep.d, dtype=complex)
    e[0] = 1.0
    return e


def build_scenario(cfg: dict) -> cauchy.ConstraintData:
    path = scenario_path(cfg)
    m = path.m
    grid = cfg.get("grid", 32)
    grid_x = TorusGrid([grid] * m if isinstance(grid, int) else grid)
    lift = int(cfg.get("lift", 1))
    phi = cfg.get("phi")
    phi0 = default_phi(path, lift) if phi is None else np.array([complex(*p) if isinstance(p, list) else complex(p) for p in phi])
    f = parse_expression(cfg.get("f", SCENARIO_DEFAULT_F.get(cfg["scenario"], 0.0)))
    return cauchy.build_initial_data(path, phi0, grid_x, f=f, lift=lift, scenario=cfg["scenario"])


def verify_report(data: cauchy.ConstraintData, tol: float = 1e-9, consequences: bool = True, config: dict | None = None) -> dict:
    t0 = time.perf_counter()
    equations = cauchy.twisted_verify(data, tol) if data.path.closed else cauchy.residual_constraints(data, tol)
    if data.phi_s is not None:
        equations.insert(1, cauchy.residual_hypersurface(data, tol))
    timings = {}
    for e in equations:
        timings[e["id"]] = e.pop("runtime_ms")
    out: dict = {
        "scenario": data.scenario,
        "grid": list(data.grid.shape),
        "equations": equations,
        "derived": cauchy.derived_quantities(data),
        "theta": data.theta,
        "orientation": data.orientation,
        "embedding": data.embedding,
    }
    if config is not None:
        out["config"] = config
    if consequences:
        app = cauchy.consequence_checks(data, tol=max(tol, 1e-8))
        for v in app.values():
            if "runtime_ms" in v:
                timings["consequence_" + v["id"]] = v.pop("runtime_ms")
        out["consequences"] = app
        out["zero_set"] = cauchy.zero_set_probe(data)
    passed = all(e["pass"] for e in equations)
    if consequences:
        passed = passed and all(v["pass"] for v in out["consequences"].values()) and out["zero_set"]["pass"]
    out["pass"] = bool(passed)
    timings["total_ms"] = 1000.0 * (time.perf_counter() - t0)
    out["timings"] = timings
    return out


def construction_meta(data: cauchy.ConstraintData, config: dict) -> dict:
    """Sidecar metadata from which ``verify`` can rebuild everything but ``Psi``."""
    return {
        "config": config,
        "path": path_to_json(data.path),
        "grid_x": list(data.grid_x.shape),
        "f": data.f,
        "F": data.F,
        "orientation": data.orientation,
        "embedding": data.embedding,
        "theta": data.theta,
        "lift": data.lift,
        "twist": data.psi.twist is not None,
        "phi_norm": data.phi_norm,
        "phi_s": data.phi_s,
        "scenario": data.scenario,
    }


def data_from_file(values: np.ndarray, meta: dict) -> cauchy.ConstraintData:
    from .geometry import SpinorField

    path = path_from_json(meta["path"])
    grid_x = TorusGrid(meta["grid_x"])
    n = path.m + 1
    theta = meta["theta"]
    theta = complex(*theta) if isinstance(theta, list) else complex(theta)
    lift = int(meta.get("lift", 1))
    twist = (path.m, lift * theta) if meta["twist"] else None
    psi = SpinorField(values, clifford.build_rep(n), twist)
    phi_s = np.array(meta["phi_s"])
    phi_s = phi_s[..., 0] + 1j * phi_s[..., 1]
    return cauchy.ConstraintData(
        path=path,
        grid_x=grid_x,
        psi=psi,
        f=np.array(meta["f"], dtype=float),
        F=np.array(meta["F"], dtype=float),
        orientation=int(meta["orientation"]),
        embedding=meta["embedding"],
        theta=theta,
        lift=lift,
        scenario=meta["scenario"],
        phi_s=phi_s,
        phi_norm=float(meta["phi_norm"]),
    )


# holonomy


def holonomy_report(cfg: dict, tol: float = 1e-8) -> dict:
    t0 = time.perf_counter()
    path = scenario_path(cfg)
    rep = clifford.build_rep(path.m)
    phi = cfg.get("phi")
    lifts = []
    P = None
    for lift in (1, -1):
        P = bbgm.loop_holonomy(path, lift=lift, rep=rep)
        phi0 = default_phi(path, 1) if phi is None else np.array([complex(*p) for p in phi])
        fit = bbgm.fitting_check(P, phi0, tol)
        lifts.append(
            {
                "lift": lift,
                "fits": fit.fits,
                "theta": fit.theta,
                "eigen_residual": fit.eigen_residual,
                "finite_order": bbgm.finite_order(P),
                "pass": True,
            }
        )
    P = bbgm.loop_holonomy(path, lift=1, rep=rep)
    unit = float(np.abs(np.abs(np.linalg.eigvals(P)) - 1.0).max())
    unitary = float(np.abs(P.conj().T @ P - np.eye(rep.d)).max())
    checks = [
        _rec("holonomy_unitary", max(unit, unitary), 1e-9),
        _rec("fitting", lifts[0]["eigen_residual"], tol),
    ]
    return {
        "suite": "holonomy",
        "loop": cfg["scenario"],
        "m": path.m,
        "holonomy": P,
        "spectrum": sorted(np.linalg.eigvals(P).tolist(), key=lambda z: (round(np.angle(z), 9), round(z.real, 9))),
        "lifts": lifts,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "timings": {"total_ms": 1000.0 * (time.perf_counter() - t0)},
    }


# gauge


def polluted_path(cfg: dict, seed: int = 0) -> tuple[MetricPath, np.ndarray]:
    """A flat path pulled back by the flow of a bandlimited field ``Y``."""
    m = int(cfg.get("m", 2))
    N = int(cfg.get("grid", 32))
    grid = TorusGrid((N,) * m)
    a, b, n = parse_interval(cfg.get("s", "0:1:16"))
    axis = Axis(n, CHEBYSHEV, a, b)
    base = generic_path(m, axis)
    x = grid.coords()
    modes = cfg.get("modes", [{"component": 0, "axis": 1, "k": 1, "amplitude": 0.02}])
    Y = np.zeros(grid.shape + (m,))
    for mode in modes:
        Y[..., int(mode["component"])] += float(mode["amplitude"]) * np.sin(2 * np.pi * int(mode["k"]) * x[int(mode["axis"])])
    return gauge.pollute_path(base, Y, grid), Y


def gauge_report(path: MetricPath, iterations: int = 1, tol: float = 1e-6) -> dict:
    t0 = time.perf_counter()
    before = gauge.divergence_profile(path)
    res = gauge.gauge_fix(path, iterations=iterations)
    after = gauge.divergence_profile(res.path)
    checks = [_rec("gauge_divergence", float(after.max()), tol)]
    return {
        "suite": "gauge",
        "iterations": iterations,
        "divergence_before": before,
        "divergence_after": after,
        "divergence_history": res.divergence_after,
        "solve_residual": res.solve_residual,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "timings": {"total_ms": 1000.0 * (time.perf_counter() - t0)},
    }, res


# whole suite

SCENARIO_KEYS = {
    "scenario": {"enum": ["minkowski", "cone", "generic", "rotating", "tumbling", "path-file"]},
    "m": {"type": "integer", "minimum": 1, "maximum": 7},
    "grid": {"anyOf": [{"type": "integer", "minimum": 4}, {"type": "array", "items": {"type": "integer", "minimum": 4}}]},
    "s": {"type": "string", "pattern": r"^[-+0-9.eE]+:[-+0-9.eE]+:[0-9]+$"},
    "length": {"type": "number", "exclusiveMinimum": 0},
    "nodes": {"type": "integer", "minimum": 4},
    "anisotropy": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2, "maxItems": 2},
    "diag": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 3, "maxItems": 3},
    "path_file": {"type": "string"},
    "f": {"type": ["number", "string"]},
    "phi": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
    "lift": {"enum": [1, -1]},
    "twist": {"type": "boolean"},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "out": {"type": "string"},
    "report": {"type": "string"},
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": SCENARIO_KEYS,
    "required": ["scenario"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "suite configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "algebra": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"nmax": {"type": "integer", "minimum": 1, "maximum": 10}},
        },
        "identities": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["which", "grids"],
                "properties": {
                    "which": {"type": "array", "items": {"enum": list(IDENTITIES)}},
                    "grids": {"type": "array", "items": {"type": "integer", "minimum": 4}},
                    "m": {"type": "integer", "minimum": 1, "maximum": 3},
                    "metric": {"enum": ["flat", "conformal"]},
                    "amplitude": {"type": "number"},
                    "tol": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "scenarios": {"type": "array", "items": SCENARIO_SCHEMA},
        "holonomy": {"type": "array", "items": SCENARIO_SCHEMA},
        "gauge": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "m": {"type": "integer", "minimum": 2, "maximum": 3},
                    "grid": {"type": "integer", "minimum": 8},
                    "s": {"type": "string"},
                    "iterations": {"type": "integer", "minimum": 1},
                    "modes": {"type": "array"},
                    "tol": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
    },
}

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "algebra": {"nmax": 8},
    "identities": [
        {"which": ["dirac_wang_parallel"], "grids": [16], "m": 3, "metric": "flat", "tol": 1e-8},
        {"which": ["dirac_wang_general"], "grids": [32], "m": 2, "metric": "flat", "tol": 1e-7},
        {"which": ["dirac_squared_wang"], "grids": [16, 32, 64], "m": 2, "metric": "conformal", "amplitude": 0.1},
    ],
    "scenarios": [
        {"scenario": "minkowski", "m": 2, "grid": 16, "s": "0:1:16", "tol": 1e-9},
        {"scenario": "cone", "m": 2, "grid": 16, "s": "0:1:16", "tol": 1e-9},
        {"scenario": "generic", "m": 2, "grid": 16, "s": "0:1:24", "tol": 1e-8},
        {"scenario": "rotating", "m": 2, "grid": 16, "nodes": 16, "tol": 1e-8},
    ],
    "holonomy": [{"scenario": "rotating", "m": 2, "nodes": 16}, {"scenario": "tumbling", "m": 3, "nodes": 24}],
    "gauge": [{"m": 2, "grid": 24, "s": "0:1:16", "iterations": 1, "tol": 1e-6}],
}


def validate_config(cfg: dict) -> None:
    import jsonschema

    jsonschema.validate(cfg, CONFIG_SCHEMA)


def run_suite(cfg: dict | None = None) -> dict:
    """Run every configured check; the report's ``pass`` decides the exit code."""
    cfg = DEFAULT_CONFIG if cfg is None else cfg
    validate_config(cfg)
    seed = int(cfg.get("seed", 0))
    t0 = time.perf_counter()
    report: dict = {"suite": "all", "seed": seed, "config": cfg, "sections": {}}
    sec = report["sections"]
    ok = True
    if "algebra" in cfg:
        sec["algebra"] = algebra_report(cfg["algebra"].get("nmax", 8), seed)
        ok &= sec["algebra"]["pass"]
    if "identities" in cfg:
        sec["identities"] = []
        for item in cfg["identities"]:
            r = identities_report(
                item["which"], item["grids"], item.get("m", 2), seed, item.get("metric", "flat"), item.get("amplitude", 0.1), item.get("tol")
            )
            sec["identities"].append(r)
            ok &= r.get("pass", True)
    if "scenarios" in cfg:
        sec["scenarios"] = []
        for item in cfg["scenarios"]:
            data = build_scenario(item)
            r = verify_report(data, item.get("tol", 1e-9), config=item)
            sec["scenarios"].append(r)
            ok &= r["pass"]
    if "holonomy" in cfg:
        sec["holonomy"] = [holonomy_report(item) for item in cfg["holonomy"]]
        ok &= all(r["pass"] for r in sec["holonomy"])
    if "gauge" in cfg:
        sec["gauge"] = []
        for item in cfg["gauge"]:
            path, _ = polluted_path(item, seed)
            r, _ = gauge_report(path, item.get("iterations", 1), item.get("tol", 1e-6))
            sec["gauge"].append(r)
            ok &= r["pass"]
    report["pass"] = bool(ok)
    report["timings"] = {"total_ms": 1000.0 * (time.perf_counter() - t0)}
    return report
