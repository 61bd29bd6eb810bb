import numpy as np
import pytest

from spincauchy import suite
from spincauchy.cauchy import (
    consequence_checks,
    build_initial_data,
    corrupt,
    derived_quantities,
    dirac_current,
    projection_defect,
    residual_constraints,
    residual_hypersurface,
    twisted_verify,
    weingarten_frame,
    zero_set_probe,
)
from spincauchy.bbgm import loop_holonomy
from spincauchy.clifford import build_rep
from spincauchy.geometry import covariant_derivative_spinor
from spincauchy.grid import CHEBYSHEV, Axis, TorusGrid
from spincauchy.paths import MetricPath, constant_path, diagonal_path, exponential_path, rotating_loop, tumbling_loop

AXIS = Axis(16, CHEBYSHEV, 0.0, 1.0)
# the generic path needs more nodes than the cone to be resolved in s
GENERIC = Axis(24, CHEBYSHEV, 0.0, 1.0)


def all_pass(records):
    return {r["id"]: r["pass"] for r in records}


def test_constant_path_gives_constant_spinor():
    data = build_initial_data(constant_path(np.diag([1.0, 2.0]), AXIS), np.array([1.0, 0.0]), TorusGrid((8, 8)))
    assert np.abs(data.psi.values - data.psi.values[(0,) * 3]).max() < 1e-14
    assert all(all_pass(residual_constraints(data)).values())
    assert np.allclose(data.F, 1.0)


def test_cone_data():
    path = exponential_path(np.eye(2), AXIS)
    data = build_initial_data(path, np.array([1.0, 0.0]), TorusGrid((8, 8)), f=-1.0)
    # W = -1/2 g^{-1} g' = -Id on the cone
    assert np.allclose(weingarten_frame(path), -np.eye(2))
    assert np.allclose(data.F, np.exp(0.5 * AXIS.nodes))
    recs = residual_constraints(data)
    assert all(all_pass(recs).values())
    assert max(r["residual_rel"] for r in recs) < 1e-12
    dq = derived_quantities(data)
    assert max(dq.values()) < 1e-12
    assert residual_hypersurface(data)["pass"]


def test_zero_set_probe_on_cone():
    data = build_initial_data(exponential_path(np.eye(2), AXIS), np.array([1.0, 0.0]), TorusGrid((8, 8)), f=-1.0)
    z = zero_set_probe(data)
    assert z["pass"] and z["zero_set_empty"]
    assert abs(z["max_norm"] / z["min_norm"] - np.exp(0.5)) < 1e-12
    assert z["max_norm"] <= z["gronwall_bound"]


def test_scaling_the_spinor():
    path = suite.generic_path(2, GENERIC)
    grid = TorusGrid((8, 8))
    one = build_initial_data(path, np.array([1.0, 0.0]), grid, f=lambda s: 0.5 * np.sin(3 * s))
    two = build_initial_data(path, np.array([2.0, 0.0]), grid, f=lambda s: 0.5 * np.sin(3 * s))
    assert np.allclose(two.psi.values, 2 * one.psi.values)
    assert np.allclose(dirac_current(two.psi.values, two.rep), 4 * dirac_current(one.psi.values, one.rep))
    assert all(all_pass(residual_constraints(two)).values())


def test_current_of_zero_spinor():
    rep = build_rep(3)
    assert np.abs(dirac_current(np.zeros((5, 2), complex), rep)).max() == 0


def test_current_brute_force():
    rep = build_rep(4)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    U = dirac_current(psi, rep)
    for p in range(6):
        for j in range(4):
            ref = -1j * np.vdot(psi[p], rep.gammas[j] @ psi[p])
            assert abs(ref.imag) < 1e-12
            assert abs(U[p, j] - ref.real) < 1e-12


def test_projection_defect_of_generic_spinor():
    # in dimension 4 a generic spinor is not of type one, one with U * Psi = i u Psi is
    rep = build_rep(4)
    rng = np.random.default_rng(1)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert np.abs(projection_defect(psi[None], rep)).max() > 1e-3
    data = build_initial_data(constant_path(np.eye(3), AXIS), np.array([1.0, 1j]), TorusGrid((4, 4, 4)))
    assert np.abs(projection_defect(data.psi.values[0, 0, 0], data.rep)).max() < 1e-12


def test_diagonal_path():
    path = diagonal_path(lambda s: np.array([0.5 * np.log1p(0.2 * np.sin(s)), 0.0]), AXIS)
    assert np.allclose(path.samples[:, 0, 0], 1 + 0.2 * np.sin(AXIS.nodes))
    data = build_initial_data(path, np.array([1.0, 0.0]), TorusGrid((8, 8)))
    assert np.abs(data.phi_s - data.phi_s[0]).max() < 1e-12
    assert all(all_pass(residual_constraints(data)).values())


def test_negative_chirality_uses_reversed_orientation():
    rep = build_rep(2)
    _, vecs = np.linalg.eigh(rep.omega)
    neg = vecs[:, 0]
    assert np.allclose(rep.omega @ neg, -neg)
    data = build_initial_data(suite.generic_path(2, GENERIC), neg, TorusGrid((8, 8)), f=-1.0)
    assert data.orientation == -1
    assert all(all_pass(residual_constraints(data)).values())


def test_mixed_chirality_rejected():
    with pytest.raises(ValueError, match="parity"):
        build_initial_data(constant_path(np.eye(2), AXIS), np.array([1.0, 1.0]), TorusGrid((8, 8)))


def test_odd_slice_dimension():
    data = build_initial_data(suite.generic_path(3, GENERIC), np.array([1.0, 0.5j]), TorusGrid((4, 4, 4)), f=0.3)
    assert data.embedding == "JPlus" and data.rep.d == 4
    assert all(all_pass(residual_constraints(data)).values())
    out = consequence_checks(data)
    assert out["type_one_chain"]["type_one"]
    assert out["q_constant"]["pass"]


def test_consequences_on_generic_path():
    data = build_initial_data(suite.generic_path(2, GENERIC), np.array([1.0, 0.0]), TorusGrid((8, 8)), f=lambda s: 0.5 * np.sin(3 * s))
    out = consequence_checks(data)
    for key in ("gradient_identity", "current_derivative", "q_constant", "type_one_chain"):
        assert out[key]["pass"], key


def test_corruption_keeps_killing_but_breaks_type_one():
    data = build_initial_data(constant_path(np.eye(3), AXIS), np.array([1.0, 0.0]), TorusGrid((4, 4, 4)))
    bad = corrupt(data, 0.3 * np.array([0.0, 1.0, 0.0, 1j]))
    out = consequence_checks(bad)
    assert out["killing"]["pass"] and out["q_constant"]["pass"]
    chain = out["type_one_chain"]
    assert chain["pass"] and not chain["type_one"]
    res = all_pass(residual_constraints(bad))
    assert res["imaginary_killing"] and not res["quadratic_condition"]


def test_consequences_requires_killing():
    data = build_initial_data(exponential_path(np.eye(2), AXIS), np.array([1.0, 0.0]), TorusGrid((8, 8)), f=-1.0)
    with pytest.raises(ValueError, match="Killing"):
        consequence_checks(corrupt(data, np.array([0.0, 0.2])))


def test_twisted_constant_loop():
    loop = rotating_loop(2, 1.0, 1.0)
    data = build_initial_data(loop, np.array([1.0, 0.0]), TorusGrid((8, 8)), lift=-1)
    assert abs(data.theta + 1) < 1e-12
    # the loop is constant, so the stored values are periodic: the grid twist is lift * theta
    assert data.psi.twist[0] == 2 and abs(data.psi.twist[1] - 1) < 1e-12
    recs = twisted_verify(data)
    assert all(all_pass(recs).values())


def test_loop_errors():
    grid = TorusGrid((8, 8))
    with pytest.raises(ValueError, match="f must integrate to zero"):
        build_initial_data(rotating_loop(2, 1.0, 1.0), np.array([1.0, 0.0]), grid, f=1.0)
    with pytest.raises(ValueError, match="twist"):
        build_initial_data(rotating_loop(2, 1.0, 1.0), np.array([1.0, 0.0]), grid, theta=1j)
    tumbling = tumbling_loop((1.0, 2.0, 0.5))
    w, V = np.linalg.eig(loop_holonomy(tumbling))
    assert abs(w[0] - w[1]) > 1e-3
    with pytest.raises(ValueError, match="does not fit"):
        build_initial_data(tumbling, V[:, 0] + V[:, 1], TorusGrid((4, 4, 4)))
    with pytest.raises(ValueError):
        twisted_verify(build_initial_data(constant_path(np.eye(2), AXIS), np.array([1.0, 0.0]), grid))


def test_input_errors():
    grid = TorusGrid((8, 8))
    path = constant_path(np.eye(2), AXIS)
    with pytest.raises(ValueError):
        build_initial_data(path, np.array([1.0, 0.0, 0.0]), grid)
    with pytest.raises(ValueError):
        build_initial_data(path, np.zeros(2), grid)
    with pytest.raises(ValueError):
        build_initial_data(path, np.array([1.0, 0.0]), TorusGrid((8, 8, 8)))
    x, _ = grid.coords()
    samples = np.broadcast_to(np.eye(2), (16, 8, 8, 2, 2)) * (1 + 0.1 * np.sin(2 * np.pi * x))[None, :, :, None, None]
    with pytest.raises(ValueError, match="out of scope"):
        build_initial_data(MetricPath(AXIS, samples, grid=grid), np.array([1.0, 0.0]), grid)


def test_diagonal_path_weingarten_closed_form():
    path = diagonal_path(lambda s: np.array([0.5 * np.log1p(0.2 * np.sin(s)), 0.0]), AXIS)
    s = AXIS.nodes
    W = weingarten_frame(path)
    # W = -1/2 g^{-1} g' in an orthonormal frame of a diagonal metric
    expected = -0.5 * 0.2 * np.cos(s) / (1 + 0.2 * np.sin(s))
    assert np.abs(W[:, 0, 0] - expected).max() < 1e-9
    assert np.abs(W[:, 1, 1]).max() < 1e-12 and np.abs(W[:, 0, 1]).max() < 1e-12


def test_cone_normal_derivative():
    # nabla_nu Psi = (F'/F) Psi = Psi / 2, and tangential Im <X * Psi, Psi> = 0
    data = build_initial_data(exponential_path(np.eye(2), AXIS), np.array([1.0, 0.0]), TorusGrid((8, 8)), f=-1.0)
    nabla = covariant_derivative_spinor(data.metric, data.psi)
    assert np.abs(nabla[..., 2, :] - 0.5 * data.psi.values).max() < 1e-10
    psi = data.psi.values
    im = np.einsum("jab,...b,...a->...j", data.rep.gammas[:2], psi, np.conj(psi)).real
    assert np.abs(im).max() < 1e-12


def test_minkowski_zero_set_probe():
    data = build_initial_data(constant_path(np.eye(2), AXIS), np.array([1.0, 0.0]), TorusGrid((8, 8)))
    z = zero_set_probe(data)
    assert z["min_norm"] == pytest.approx(1.0, abs=1e-14) and z["max_norm"] == pytest.approx(1.0, abs=1e-14)
    assert z["pass"]


def test_corruption_oracle():
    # adding psi orthogonal to {V * Psi} leaves h(U, U) = |Psi|^2 (|Psi|^2 - |psi_perp|^2)
    data = build_initial_data(constant_path(np.eye(3), AXIS), np.array([1.0, 0.0]), TorusGrid((4, 4, 4)))
    bad = corrupt(data, np.array([0.0, 0.0, 0.4, 0.0]))
    psi = bad.psi.values
    U = dirac_current(psi, bad.rep)
    n2 = np.sum(np.abs(psi) ** 2, axis=-1)
    p2 = np.sum(np.abs(projection_defect(psi, bad.rep)) ** 2, axis=-1)
    assert np.abs(np.sum(U**2, axis=-1) - n2 * (n2 - p2)).max() < 1e-12
    rec = {r["id"]: r for r in residual_constraints(bad)}
    assert rec["quadratic_condition"]["residual_abs"] == pytest.approx(float((n2**2 - np.sum(U**2, axis=-1)).max()), rel=1e-10)
