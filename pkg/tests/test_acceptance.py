"""Acceptance criteria 1-9, one verdict line each (shown in the terminal summary)."""

from __future__ import annotations

import json
import subprocess
import sys
import time

import numpy as np
import scipy.integrate
import scipy.linalg

from spincauchy import bbgm, cauchy, clifford, gauge, suite
from spincauchy.cauchy import weingarten_frame
from spincauchy.geometry import MetricField, covariant_derivative_spinor
from spincauchy.grid import CHEBYSHEV, Axis, TorusGrid
from spincauchy.io import dumps, strip_timings
from spincauchy.paths import constant_path, diagonal_path, exponential_path, rotating_loop


def _clear_caches():
    for fn in (clifford._products, clifford.build_rep, clifford.build_embedding, clifford.build_orientation_maps):
        fn.cache_clear()


def test_criterion_1_clifford_suite(criterion_log):
    _clear_caches()
    t0 = time.perf_counter()
    report = suite.algebra_report(nmax=8)
    elapsed = time.perf_counter() - t0
    checks = report["checks"]
    worst = max(c["residual"] for c in checks if "residual" in c)
    ns = {c["n"] for c in checks}
    sharp = {c["n"] for c in checks if c.get("variant") == clifford.SIGMA_SHARP}
    kinds = {c["id"] for c in checks}
    ok = (
        report["pass"]
        and worst <= 1e-12
        and elapsed < 1.0
        and ns == set(range(1, 9))
        and sharp == {1, 3, 5, 7}
        and {"clifford_relations", "volume_element", "embedding_odd", "embedding_even", "orientation_maps"} <= kinds
    )
    criterion_log(1, ok, f"{len(checks)} checks, worst residual {worst:.1e} (tol 1e-12), runtime {elapsed:.2f} s (< 1 s)")
    assert ok


def test_criterion_2_parallel_wang_flat_t3(criterion_log):
    grid = TorusGrid((24, 24, 24))
    t0 = time.perf_counter()
    res = [suite.run_identity("dirac_wang_parallel", grid, seed=seed)["residual_rel"] for seed in range(10)]
    elapsed = time.perf_counter() - t0
    ok = max(res) <= 1e-8 and elapsed < 10.0
    criterion_log(2, ok, f"10 random h on 24^3, worst relative residual {max(res):.1e} (tol 1e-8), runtime {elapsed:.1f} s (< 10 s)")
    assert ok


def test_criterion_3_general_and_squared_identities(criterion_log):
    general = suite.run_identity("dirac_wang_general", TorusGrid((32, 32)), seed=1, kmax=4)["residual_rel"]
    squared_flat = suite.run_identity("dirac_squared_wang", TorusGrid((16, 16, 16)), seed=2)["residual_rel"]
    conformal = {
        N: suite.run_identity("dirac_squared_wang", TorusGrid((N, N)), seed=3, metric="conformal", amplitude=0.1)["residual_rel"]
        for N in (16, 32, 64)
    }
    gain = conformal[16] / max(conformal[64], 1e-300)
    ok = general <= 1e-7 and squared_flat <= 1e-7 and conformal[64] <= 1e-5 and gain >= 100
    criterion_log(
        3,
        ok,
        f"general flat T^2 {general:.1e} (1e-7); squared flat T^3 {squared_flat:.1e} (1e-7); "
        f"conformal T^2 16/32/64: {conformal[16]:.1e}/{conformal[32]:.1e}/{conformal[64]:.1e} (1e-5, gain {gain:.1e} >= 100)",
    )
    assert ok


def _oracle_propagator(path, rep, a, b):
    """Transport by DOP853 with the frame derivative from a Sylvester solve."""
    d = rep.d
    g = rep.gammas

    def generator(s):
        G, Gd = path.G(s), path.Gdot(s)
        E = np.real(scipy.linalg.sqrtm(np.linalg.inv(G)))
        Gi = np.linalg.inv(G)
        Ed = scipy.linalg.solve_sylvester(E, E, -Gi @ Gd @ Gi)
        M = (E.T @ G @ Ed + 0.5 * E.T @ Gd @ E).T
        w = 0.5 * (M - M.T)
        S = sum(0.25 * w[j, k] * g[j] @ g[k] for j in range(path.m) for k in range(path.m))
        return -S

    def rhs(s, y):
        U = y.reshape(d, d)
        return (generator(s) @ U).ravel()

    sol = scipy.integrate.solve_ivp(rhs, (a, b), np.eye(d, dtype=complex).ravel(), method="DOP853", rtol=1e-13, atol=1e-14)
    return sol.y[:, -1].reshape(d, d)


def test_criterion_4_bbgm_transport(criterion_log):
    axis = Axis(24, CHEBYSHEV, 0.0, 1.0)
    path = suite.generic_path(3, axis)  # rotations in two planes: non-commuting
    rep = clifford.build_rep(3)
    U, n, _ = bbgm.transport_unitary(path, 0.0, 1.0, rep=rep)
    unitarity = float(np.abs(U.conj().T @ U - np.eye(rep.d)).max())

    Ua, _, _ = bbgm.transport_unitary(path, 0.0, 0.4, rep=rep)
    Ub, _, _ = bbgm.transport_unitary(path, 0.4, 1.0, rep=rep)
    Ur, _, _ = bbgm.transport_unitary(path, 1.0, 0.0, rep=rep)
    concat = float(np.abs(Ub @ Ua - U).max())
    reverse = float(np.abs(Ur @ U - np.eye(rep.d)).max())

    diag = diagonal_path(lambda s: np.array([0.3 * np.sin(2 * s), -0.2 * s * s, 0.1 * s]), axis)
    Ud, _, _ = bbgm.transport_unitary(diag, 0.0, 1.0, rep=rep)
    diagonal = float(np.abs(Ud - np.eye(rep.d)).max())

    halved, _, _ = bbgm.transport_unitary(path, 0.0, 1.0, rep=rep, steps=2 * n)
    step_halved = float(np.abs(U - halved).max())
    dop = float(np.abs(U - _oracle_propagator(path, rep, 0.0, 1.0)).max())

    # parallel spinors stay parallel along a divergence-free path of flat metrics
    polluted, _ = suite.polluted_path({"m": 2, "grid": 24, "s": "0:1:16"})
    fixed = gauge.gauge_fix(polluted).path
    rep2 = clifford.build_rep(2)

    def worst_nabla(p):
        phis, _ = bbgm.transport_family(p, np.array([1.0, 0.0]), rep=rep2)
        return max(float(np.abs(covariant_derivative_spinor(MetricField(p.grid, p.samples[k]), phis[k])).max()) for k in range(p.axis.size))

    nabla_fixed = worst_nabla(fixed)
    nabla_polluted = worst_nabla(polluted)

    ok = (
        unitarity <= 1e-10
        and concat <= 1e-9
        and reverse <= 1e-9
        and diagonal <= 1e-10
        and step_halved <= 1e-9
        and dop <= 1e-9
        and nabla_fixed <= 1e-9
        and nabla_polluted > 1e-3
    )
    criterion_log(
        4,
        ok,
        f"unitarity {unitarity:.1e}; concat {concat:.1e}, reversal {reverse:.1e}; diagonal {diagonal:.1e}; "
        f"step-halved {step_halved:.1e}, DOP853 {dop:.1e}; |nabla phi_s| gauge-fixed {nabla_fixed:.1e} "
        f"(polluted control {nabla_polluted:.1e})",
    )
    assert ok


def _max_residual(records):
    return max(r["residual_rel"] for r in records)


def test_criterion_5_constraint_construction(criterion_log):
    axis = Axis(16, CHEBYSHEV, 0.0, 1.0)
    grid = TorusGrid((32, 32))
    m = 2
    s = axis.nodes
    details = []
    ok = True
    for name, path, f, W_expected, F_expected in (
        ("minkowski", constant_path(np.eye(m), axis), 0.0, np.zeros((m, m)), np.ones_like(s)),
        ("cone", exponential_path(np.eye(m), axis), -1.0, -np.eye(m), np.exp(s / 2)),
    ):
        W_err = float(np.abs(weingarten_frame(path) - W_expected).max())
        for phi0 in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            data = cauchy.build_initial_data(path, phi0, grid, f=f, scenario=name)
            worst = _max_residual(cauchy.residual_constraints(data, 1e-9) + [cauchy.residual_hypersurface(data, 1e-9)])
            derived = max(cauchy.derived_quantities(data).values())
            F_err = float(np.abs(data.F - F_expected).max())
            ok &= W_err <= 1e-12 and F_err <= 1e-12 and derived <= 1e-12 and worst <= 1e-9
            details.append(f"{name}[{'+' if phi0[0] else '-'}] W {W_err:.0e} F {F_err:.0e} U,u {derived:.0e} res {worst:.0e}")
    generic = suite.generic_path(m, Axis(24, CHEBYSHEV, 0.0, 1.0))
    data = cauchy.build_initial_data(generic, np.array([1.0, 0.0]), grid, f=lambda t: 0.5 * np.sin(3 * t), scenario="generic")
    gen = _max_residual(cauchy.residual_constraints(data, 1e-8))
    ok &= gen <= 1e-8
    criterion_log(5, ok, "; ".join(details) + f"; generic path with f = 0.5 sin 3s: {gen:.1e} (1e-8)")
    assert ok


def test_criterion_6_killing_consequences(criterion_log):
    generic = suite.generic_path(2, Axis(24, CHEBYSHEV, 0.0, 1.0))
    data = cauchy.build_initial_data(generic, np.array([1.0, 0.0]), TorusGrid((32, 32)), f=lambda t: 0.5 * np.sin(3 * t))
    app = cauchy.consequence_checks(data, tol=1e-8)
    app_worst = max(app[k]["residual_rel"] for k in ("gradient_identity", "current_derivative"))
    chain = app["type_one_chain"]
    q_var = app["q_constant"]["residual_rel"]

    # Minkowski data in slice dimension 3, corrupted by a constant spinor
    axis = Axis(8, CHEBYSHEV, 0.0, 1.0)
    base = cauchy.build_initial_data(constant_path(np.eye(3), axis), np.array([1.0, 0.0]), TorusGrid((12, 12, 12)))
    rng = suite.make_rng(0, 6)
    chi = 0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
    bad = cauchy.corrupt(base, chi)
    psi = bad.psi.values
    n2 = np.einsum("...a,...a->...", psi, psi.conj()).real
    U = cauchy.dirac_current(psi, bad.rep)
    hUU = np.einsum("...j,...j->...", U, U)
    perp = cauchy.projection_defect(psi, bad.rep)
    p2 = np.einsum("...a,...a->...", perp, perp.conj()).real
    proof_identity = float(np.abs(hUU - n2 * (n2 - p2)).max() / n2.max() ** 2)
    bad_app = cauchy.consequence_checks(bad, tol=1e-8)
    flags = bad_app["type_one_chain"]["flags"]
    res = {r["id"]: r for r in cauchy.residual_constraints(bad, 1e-8)}
    ok = (
        app_worst <= 1e-8
        and chain["pass"]
        and chain["type_one"]
        and q_var <= 1e-9
        and proof_identity <= 1e-8
        and bad_app["killing"]["pass"]
        and bad_app["q_constant"]["pass"]
        and bad_app["q_constant"]["mean"] > 0
        and not any(flags.values())
        and not res["quadratic_condition"]["pass"]
        and not res["current_action"]["pass"]
    )
    criterion_log(
        6,
        ok,
        f"gradient/current identities {app_worst:.1e} (1e-8); q spread/mean {q_var:.1e} (1e-9); corrupted: "
        f"proof identity {proof_identity:.1e} (1e-8), quadratic {res['quadratic_condition']['residual_rel']:.1e} and "
        f"current action {res['current_action']['residual_rel']:.1e} fail as required",
    )
    assert ok


def _rotating_oracle(a, b, L):
    r = np.sqrt(a / b)
    kappa = (np.pi / L) * (0.5 * (r + 1 / r) - 1.0)
    rep = clifford.build_rep(2)
    w = kappa * np.array([[0.0, 1.0], [-1.0, 0.0]])
    return scipy.linalg.expm(-L * clifford.spin_generator(rep, w))


def test_criterion_7_holonomy_and_twist(criterion_log):
    const = bbgm.loop_holonomy(rotating_loop(2, 1.0, 1.0, 1.0, 16))
    const_err = float(np.abs(const - np.eye(2)).max())
    a, b, L = 2.0, 0.5, 1.0
    P = bbgm.loop_holonomy(rotating_loop(2, a, b, L, 16))
    oracle = float(np.abs(P - _rotating_oracle(a, b, L)).max())
    circle = float(np.abs(np.abs(np.linalg.eigvals(P)) - 1).max())
    twisted = {}
    for cfg in (
        {"scenario": "rotating", "m": 2, "grid": 16, "nodes": 16},
        {"scenario": "tumbling", "m": 3, "grid": 8, "nodes": 24},
    ):
        data = suite.build_scenario(cfg)
        eqs = cauchy.twisted_verify(data, 1e-8)
        twisted[cfg["scenario"]] = (_max_residual(eqs), all(e["pass"] for e in eqs), data.theta)
    ok = const_err <= 1e-10 and oracle <= 1e-8 and circle <= 1e-9 and all(v[1] and v[0] <= 1e-8 for v in twisted.values())
    ok &= all(abs(v[2] - 1) > 1e-3 for v in twisted.values())
    criterion_log(
        7,
        ok,
        f"constant loop {const_err:.1e}; rotating loop vs closed form {oracle:.1e} (1e-8), unit circle {circle:.1e}; twisted "
        + ", ".join(f"{k} theta={np.round(v[2], 6)} worst {v[0]:.1e}" for k, v in twisted.items()),
    )
    assert ok


def test_criterion_8_gauge_fixing(criterion_log):
    cfg = {"m": 2, "grid": 24, "s": "0:1:16", "modes": [{"component": 0, "axis": 1, "k": 1, "amplitude": 0.02}]}
    polluted, Y = suite.polluted_path(cfg)
    res = gauge.gauge_fix(polluted)
    before, after = res.divergence_before, res.divergence_after[-1]
    G0 = MetricField(polluted.grid, polluted.samples[0])
    Yflat = G0.flat_(Y)
    kernel = gauge.kernel_defect(G0, res.alpha[0], Yflat)
    diff = res.alpha[0] - Yflat
    diff = diff - diff.mean(axis=(0, 1))
    match = float(np.abs(diff).max() / np.abs(Yflat).max())
    ok = res.solve_residual <= 1e-9 and before / max(after, 1e-300) >= 1e4 and after <= 1e-6 and kernel <= 1e-4 and match <= 1e-4
    criterion_log(
        8,
        ok,
        f"solve residual {res.solve_residual:.1e} (1e-9); divergence {before:.2e} -> {after:.1e} "
        f"(reduction {before / max(after, 1e-300):.1e}); alpha vs Y mod kernel {match:.1e}, kernel defect {kernel:.1e} (1e-4)",
    )
    assert ok


def test_criterion_9_determinism(tmp_path, criterion_log):
    outs = []
    for k in range(2):
        report = tmp_path / f"run{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "spincauchy.cli", "run", "--seed", "5", "--report", str(report)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(dumps(strip_timings(json.loads(report.read_text()))).encode())
    same = outs[0] == outs[1]
    seeded = json.loads(outs[0])["seed"] == 5
    criterion_log(9, same and seeded, f"two full-suite runs with seed 5: {'byte-identical' if same else 'DIFFERENT'} after removing timing fields ({len(outs[0])} bytes)")
    assert same and seeded
