"""Problem model: oracles, bounds, dual sets, sample instances."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import cobadd as cb
from cobadd.errors import ConfigurationError, MalformedInstanceError

# regression constants for the seeded 100-node sample instance
NUM_THRESHOLD_PIN = 3.950934757988979
NUM_SIGMA_SUM_PIN = 48.671845826578874


def grid_minimizer(node, mu, G, n, A0, points=10_000):
    """Independent brute-force oracle: dense grid over the box."""
    xs = np.linspace(node.lo, node.hi, points)
    tr_lin = float(np.sum(node.A * G)) if node.A.size else 0.0
    tr_const = float(np.sum(A0 * G)) / n if node.A.size else 0.0
    vals = np.array([float(node.f(x)) + mu * float(node.g(x)) for x in xs])
    vals = vals - tr_lin * xs - tr_const
    i = int(np.argmin(vals))
    return xs[i], vals[i]


# ---------------------------------------------------------------------------
# scalar functions and construction contracts
# ---------------------------------------------------------------------------

def test_scalar_function_kinds():
    f = cb.ScalarFunction.linear(-2.0)
    assert f(3.0) == -6.0
    g = cb.ScalarFunction.neg_log(2.0)
    assert g(0.0) == 0.0
    assert np.isclose(g(1.0), -2.0 * math.log(2.0))
    h = cb.ScalarFunction.affine(1.5, -1.0)
    assert h(2.0) == 2.0
    c = cb.ScalarFunction.custom(lambda x: (x - 0.3) ** 2)
    assert np.isclose(c(0.3), 0.0)


def test_neg_log_requires_nonnegative_coefficient():
    with pytest.raises(ValueError):
        cb.ScalarFunction.neg_log(-1.0)


def test_node_spec_rejects_asymmetric_matrix():
    with pytest.raises(MalformedInstanceError):
        cb.NodeSpec(cb.ScalarFunction.linear(1.0), cb.ScalarFunction.linear(1.0),
                    np.array([[0.0, 1.0], [0.0, 0.0]]), (0.0, 1.0))


def test_node_spec_rejects_unbounded_or_empty_box():
    f = cb.ScalarFunction.linear(1.0)
    with pytest.raises(MalformedInstanceError):
        cb.NodeSpec(f, f, np.zeros((0, 0)), (0.0, math.inf))
    with pytest.raises(MalformedInstanceError):
        cb.NodeSpec(f, f, np.zeros((0, 0)), (1.0, 0.0))


def test_node_spec_rejects_nonfinite_evaluation():
    # -log(1+x) blows up at the lower endpoint -1
    with pytest.raises(MalformedInstanceError):
        cb.NodeSpec(cb.ScalarFunction.neg_log(1.0), cb.ScalarFunction.linear(1.0),
                    np.zeros((0, 0)), (-1.0, 1.0))


def test_dual_point_contracts():
    with pytest.raises(ValueError):
        cb.DualPoint(-0.5)
    with pytest.raises(ValueError):
        cb.DualPoint(0.0, np.diag([-1.0, 1.0]))
    z = cb.DualPoint(1.0, np.diag([2.0, 0.0]))
    assert z.d == 2
    assert cb.DualPoint(0.0).d == 0


# ---------------------------------------------------------------------------
# local dual oracle
# ---------------------------------------------------------------------------

def _node(f, g, A=None, box=(0.0, 1.0)):
    return cb.NodeSpec(f, g, np.zeros((0, 0)) if A is None else A, box)


def test_oracle_linear_slope_negative_takes_upper_endpoint():
    node = _node(cb.ScalarFunction.linear(-1.0), cb.ScalarFunction.affine(1.0, -0.1))
    q, x = cb.local_dual_oracle(node, cb.DualPoint(0.5), n=1)
    assert x == 1.0
    gx, gq = grid_minimizer(node, 0.5, np.zeros((0, 0)), 1, np.zeros((0, 0)), 1_000_000)
    assert abs(x - gx) < 1e-5
    assert abs(q - gq) < 1e-9


def test_oracle_neg_log_stationary_point_clips_to_zero():
    node = _node(cb.ScalarFunction.neg_log(1.0), cb.ScalarFunction.affine(1.0, -0.1))
    q, x = cb.local_dual_oracle(node, cb.DualPoint(2.0), n=1)
    assert x == 0.0
    gx, gq = grid_minimizer(node, 2.0, np.zeros((0, 0)), 1, np.zeros((0, 0)), 1_000_000)
    assert abs(x - gx) < 1e-5
    assert abs(q - gq) < 1e-9


def test_oracle_constant_objective_lower_endpoint_tie_break():
    node = _node(cb.ScalarFunction.linear(0.0), cb.ScalarFunction.affine(1.0, -0.3))
    q, x = cb.local_dual_oracle(node, cb.DualPoint(0.0), n=1)
    assert x == 0.0
    assert q == 0.0


def test_oracle_interior_stationary_point():
    node = _node(cb.ScalarFunction.neg_log(1.0), cb.ScalarFunction.affine(1.0, 0.0))
    q, x = cb.local_dual_oracle(node, cb.DualPoint(2.0 / 3.0), n=1)
    assert np.isclose(x, 0.5)


def test_oracle_custom_kind_uses_golden_section():
    node = _node(cb.ScalarFunction.custom(lambda x: (x - 0.37) ** 2),
                 cb.ScalarFunction.affine(0.0, 0.0))
    q, x = cb.local_dual_oracle(node, cb.DualPoint(0.0), n=1, tol=1e-10)
    assert abs(x - 0.37) < 1e-8
    assert abs(q) < 1e-15


def test_oracle_custom_flat_objective_prefers_lower_endpoint():
    node = _node(cb.ScalarFunction.custom(lambda x: 1.0),
                 cb.ScalarFunction.affine(0.0, 0.0))
    q, x = cb.local_dual_oracle(node, cb.DualPoint(0.0), n=1)
    assert x == 0.0


def test_oracle_includes_lmi_terms():
    A = np.diag([-1.0, 0.0])
    A0 = np.diag([1.5, 1.5])
    node = cb.NodeSpec(cb.ScalarFunction.linear(1.0), cb.ScalarFunction.affine(1.0, -1.0),
                       A, (0.0, 1.0))
    G = np.diag([2.0, 1.0])
    q, x = cb.local_dual_oracle(node, cb.DualPoint(0.5, G), n=2, A0=A0)
    # slope = 1 + 0.5 + tr[diag(1,0) G] = 3.5 > 0 -> x = 0
    assert x == 0.0
    expected_q = 0.0 + 0.5 * (-1.0) - np.sum(A0 * G) / 2.0
    assert np.isclose(q, expected_q)
    gx, gq = grid_minimizer(node, 0.5, G, 2, A0, 1_000_000)
    assert abs(x - gx) < 1e-5
    assert abs(q - gq) < 1e-9


def test_oracle_matches_grid_on_random_duals(num_instance):
    rng = np.random.default_rng(3)
    A0 = num_instance.A0
    for _ in range(20):
        i = int(rng.integers(0, num_instance.n))
        node = num_instance.nodes[i]
        mu = float(rng.uniform(0.0, 3.0))
        q, x = cb.local_dual_oracle(node, cb.DualPoint(mu), n=num_instance.n)
        gx, gq = grid_minimizer(node, mu, np.zeros((0, 0)), num_instance.n, A0)
        assert abs(x - gx) <= 1e-10 + 1.0 / 9_999
        assert q <= gq + 1e-12


def test_oracle_rejects_nonpositive_tol():
    node = _node(cb.ScalarFunction.linear(1.0), cb.ScalarFunction.linear(1.0))
    with pytest.raises(ValueError):
        cb.local_dual_oracle(node, cb.DualPoint(0.0), n=1, tol=0.0)


# ---------------------------------------------------------------------------
# subgradients
# ---------------------------------------------------------------------------

def test_node_subgradient_direct_evaluation():
    node = _node(cb.ScalarFunction.linear(-1.0), cb.ScalarFunction.affine(1.0, -0.1))
    h, Q = cb.node_subgradient(node, 1.0, n=1)
    assert np.isclose(h, 0.9)
    assert Q.shape == (0, 0)
    h, _ = cb.node_subgradient(node, 0.0, n=1)
    assert np.isclose(h, -0.1)


def test_node_subgradient_matrix_part():
    node = cb.NodeSpec(cb.ScalarFunction.linear(1.0), cb.ScalarFunction.linear(1.0),
                       np.eye(2), (0.0, 1.0))
    _, Q = cb.node_subgradient(node, 0.0, n=2, A0=np.eye(2))
    assert np.allclose(Q, -np.eye(2) / 2.0)


def test_subgradient_bounds_endpoint_cases():
    node = _node(cb.ScalarFunction.linear(-1.0), cb.ScalarFunction.affine(1.0, -10.0))
    inst = cb.ProblemInstance((node,), np.zeros((0, 0)), 0)
    sb = cb.subgradient_bounds(inst)
    assert sb.L == 10.0
    assert sb.Q == 0.0
    assert sb.M == 10.0


def test_subgradient_bounds_frobenius():
    node = cb.NodeSpec(cb.ScalarFunction.linear(1.0), cb.ScalarFunction.linear(1.0),
                       np.eye(2), (0.0, 1.0))
    inst = cb.ProblemInstance((node,), np.zeros((2, 2)), 2)
    sb = cb.subgradient_bounds(inst)
    assert np.isclose(sb.Q, math.sqrt(2.0))


def test_subgradient_bounds_cover_grid_and_run(num_instance):
    sb = cb.subgradient_bounds(num_instance)
    xs = np.linspace(0.0, 1.0, 100_000)
    worst = max(float(np.max(np.abs(nd.g(xs)))) for nd in num_instance.nodes)
    assert sb.L >= worst - 1e-12
    assert np.isclose(sb.L, worst)
    assert sb.Q == 0.0


# ---------------------------------------------------------------------------
# dual sets and Slater
# ---------------------------------------------------------------------------

def test_slater_certificate_num(num_instance):
    sl = cb.slater_certificate(num_instance, np.zeros(num_instance.n))
    assert abs(sl.gamma - 10.0) < 1e-12
    assert sl.fxbar == 0.0


def test_slater_rejects_infeasible_point(num_instance):
    with pytest.raises(ConfigurationError):
        cb.slater_certificate(num_instance, np.ones(num_instance.n))


def test_slater_lmi_margin(lmi_instance):
    sl = cb.slater_certificate(lmi_instance, np.zeros(2))
    assert np.isclose(sl.gamma, 1.5)


def test_build_dual_sets_threshold_pin(num_instance):
    sl = cb.slater_certificate(num_instance, np.zeros(num_instance.n))
    thr = cb.dual_set_threshold(num_instance, sl, cb.DualPoint(0.0))
    assert abs(thr - NUM_THRESHOLD_PIN) < 1e-9
    sets = cb.build_dual_sets(num_instance, sl, cb.DualPoint(0.0), thr)
    assert np.isclose(sets.Lambda, 2.0 * thr)
    assert sets.Lambda == sets.Gamma


def test_build_dual_sets_rejects_small_r(num_instance):
    sl = cb.slater_certificate(num_instance, np.zeros(num_instance.n))
    thr = cb.dual_set_threshold(num_instance, sl, cb.DualPoint(0.0))
    with pytest.raises(ConfigurationError) as err:
        cb.build_dual_sets(num_instance, sl, cb.DualPoint(0.0), 0.5 * thr)
    assert f"{thr}" in str(err.value)


def test_threshold_shrinks_at_better_probe(lmi_instance):
    # probing at the optimal duals (mu=0, G=0 here) gives threshold 0
    sl = cb.slater_certificate(lmi_instance, np.zeros(2))
    thr_opt = cb.dual_set_threshold(lmi_instance, sl, cb.DualPoint(0.0, np.zeros((2, 2))))
    f_star = cb.grid_search_lmi(lmi_instance, 1e-3).f_star
    assert np.isclose(thr_opt, (sl.fxbar - f_star) / sl.gamma)
    thr_worse = cb.dual_set_threshold(lmi_instance, sl,
                                      cb.DualPoint(2.0, np.zeros((2, 2))))
    assert thr_worse >= thr_opt


# ---------------------------------------------------------------------------
# primal evaluation
# ---------------------------------------------------------------------------

def test_evaluate_primal_slater_point(num_instance):
    f, vi, vl = cb.evaluate_primal(num_instance, np.zeros(num_instance.n))
    assert vi == 0.0
    assert vl == 0.0
    assert f == 0.0


def test_evaluate_primal_all_ones_matches_direct_sum(num_instance):
    sigma = np.array(num_instance.meta["sigma"])
    nlin = num_instance.meta["n_linear"]
    f, vi, _ = cb.evaluate_primal(num_instance, np.ones(num_instance.n))
    expected = -sigma[:nlin].sum() - math.log(2.0) * sigma[nlin:].sum()
    assert np.isclose(f, expected)
    assert np.isclose(vi, sigma.sum() - 10.0)


def test_evaluate_primal_lmi_zero_violation():
    node = cb.NodeSpec(cb.ScalarFunction.linear(1.0), cb.ScalarFunction.affine(1.0, -1.0),
                       np.zeros((2, 2)), (0.0, 1.0))
    inst = cb.ProblemInstance((node,), np.eye(2), 2)
    _, _, vl = cb.evaluate_primal(inst, np.array([0.5]))
    assert vl == 0.0


# ---------------------------------------------------------------------------
# sample instances
# ---------------------------------------------------------------------------

def test_num_instance_determinism_and_split():
    a = cb.make_sample_num_instance(100, 42)
    b = cb.make_sample_num_instance(100, 42)
    assert a.meta["sigma"] == b.meta["sigma"]
    assert a.meta["n_linear"] == 33
    assert sum(1 for nd in a.nodes if nd.f.kind == "neg_log") == 67
    assert abs(np.array(a.meta["sigma"]).sum() - NUM_SIGMA_SUM_PIN) < 1e-9
    c = cb.make_sample_num_instance(100, 43)
    assert c.meta["sigma"] != a.meta["sigma"]


def test_num_instance_budget_split(num_instance):
    x = np.full(num_instance.n, 0.7)
    sigma = np.array(num_instance.meta["sigma"])
    total = sum(float(nd.g(v)) for nd, v in zip(num_instance.nodes, x))
    assert np.isclose(total, sigma.sum() * 0.7 - 10.0, atol=1e-10)


def test_lmi_instance_shape(lmi_instance):
    assert lmi_instance.n == 2
    assert lmi_instance.d == 2
    assert np.allclose(lmi_instance.A0, np.diag([1.5, 1.5]))
    # feasible at (1,1): A0 + A1 + A2 = diag(0.5, 0.5)
    M = lmi_instance.lmi_matrix(np.array([1.0, 1.0]))
    assert np.allclose(M, np.diag([0.5, 0.5]))
    assert np.linalg.eigvalsh(M)[0] >= 0.0


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_instance_json_round_trip(num_instance):
    doc = cb.instance_to_json(num_instance)
    back = cb.instance_from_json(doc)
    assert back.n == num_instance.n
    assert back.d == num_instance.d
    assert back.meta["seed"] == 42
    z = cb.DualPoint(0.7)
    assert np.isclose(cb.dual_function_value(back, z),
                      cb.dual_function_value(num_instance, z))
    assert cb.instance_hash(back) == cb.instance_hash(num_instance)


def test_lmi_json_round_trip(lmi_instance):
    back = cb.instance_from_json(cb.instance_to_json(lmi_instance))
    assert np.allclose(back.nodes[0].A, lmi_instance.nodes[0].A)


def test_custom_functions_not_serializable():
    node = _node(cb.ScalarFunction.custom(lambda x: x * x),
                 cb.ScalarFunction.linear(1.0))
    inst = cb.ProblemInstance((node,), np.zeros((0, 0)), 0)
    with pytest.raises(ValueError):
        cb.instance_to_json(inst)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_dual_lipschitz_bound(seed_a, seed_b):
    inst = cb.make_sample_num_instance(12, 9)
    M = cb.subgradient_bounds(inst).M
    rng_a = np.random.default_rng(seed_a)
    rng_b = np.random.default_rng(seed_b + 77_000)
    mu1 = float(rng_a.uniform(0.0, 5.0))
    mu2 = float(rng_b.uniform(0.0, 5.0))
    for node in inst.nodes:
        q1, _ = cb.local_dual_oracle(node, cb.DualPoint(mu1), inst.n)
        q2, _ = cb.local_dual_oracle(node, cb.DualPoint(mu2), inst.n)
        assert abs(q1 - q2) <= M * abs(mu1 - mu2) + 1e-9


def test_dual_lipschitz_bound_with_matrix_duals(lmi_instance):
    M = cb.subgradient_bounds(lmi_instance).M
    rng = np.random.default_rng(31)
    for _ in range(40):
        z = []
        for _ in range(2):
            B = rng.normal(size=(2, 2))
            z.append(cb.DualPoint(float(rng.uniform(0, 1)), B @ B.T / 4.0))
        dist = math.sqrt((z[0].mu - z[1].mu) ** 2
                         + np.linalg.norm(z[0].G - z[1].G) ** 2)
        for i, node in enumerate(lmi_instance.nodes):
            q = [cb.local_dual_oracle(node, zz, 2, A0=lmi_instance.A0)[0]
                 for zz in z]
            assert abs(q[0] - q[1]) <= M * dist + 1e-9


def test_oracle_matches_grid_with_matrix_duals(lmi_instance):
    rng = np.random.default_rng(32)
    for _ in range(10):
        B = rng.normal(size=(2, 2))
        z = cb.DualPoint(float(rng.uniform(0, 1)), B @ B.T / 3.0)
        for node in lmi_instance.nodes:
            q, x = cb.local_dual_oracle(node, z, 2, A0=lmi_instance.A0)
            gx, gq = grid_minimizer(node, z.mu, z.G, 2, lmi_instance.A0)
            assert abs(x - gx) <= 1e-10 + 1.0 / 9_999
            assert q <= gq + 1e-12


def test_dual_concavity_midpoint(num_instance):
    rng = np.random.default_rng(11)
    for _ in range(25):
        mu1, mu2 = rng.uniform(0.0, 7.9, size=2)
        q1 = cb.dual_function_value(num_instance, cb.DualPoint(mu1))
        q2 = cb.dual_function_value(num_instance, cb.DualPoint(mu2))
        qm = cb.dual_function_value(num_instance, cb.DualPoint((mu1 + mu2) / 2.0))
        assert qm >= 0.5 * (q1 + q2) - 1e-9


def test_dual_concavity_midpoint_lmi(lmi_instance):
    rng = np.random.default_rng(12)
    for _ in range(25):
        z = []
        for _ in range(2):
            B = rng.normal(size=(2, 2))
            z.append(cb.DualPoint(float(rng.uniform(0, 1)), B @ B.T / 4.0))
        zm = cb.DualPoint((z[0].mu + z[1].mu) / 2.0, (z[0].G + z[1].G) / 2.0)
        q1 = cb.dual_function_value(lmi_instance, z[0])
        q2 = cb.dual_function_value(lmi_instance, z[1])
        qm = cb.dual_function_value(lmi_instance, zm)
        assert qm >= 0.5 * (q1 + q2) - 1e-9


def test_weak_duality_random_duals(num_instance, num_f_star):
    rng = np.random.default_rng(13)
    x_feas = np.zeros(num_instance.n)
    f_feas, vi, _ = cb.evaluate_primal(num_instance, x_feas)
    assert vi == 0.0
    for _ in range(30):
        q = cb.dual_function_value(num_instance, cb.DualPoint(float(rng.uniform(0, 8))))
        assert q <= num_f_star + 1e-9
        assert q <= f_feas + 1e-9


def test_batch_oracle_matches_scalar_path(num_instance):
    rng = np.random.default_rng(14)
    mus = rng.uniform(0.0, 4.0, size=num_instance.n)
    duals = [cb.DualPoint(m) for m in mus]
    q_batch, x_batch = cb.oracle_sweep(num_instance, duals)
    for i in (0, 7, 40, 99):
        q_i, x_i = cb.local_dual_oracle(num_instance.nodes[i], duals[i], num_instance.n)
        assert q_batch[i] == q_i
        assert x_batch[i] == x_i


def test_dual_function_values_matches_single(lmi_instance):
    rng = np.random.default_rng(15)
    mus = rng.uniform(0.0, 1.0, size=4)
    Gs = np.stack([np.diag(rng.uniform(0, 1, size=2)) for _ in range(4)])
    vals = cb.dual_function_values(lmi_instance, mus, Gs)
    for i in range(4):
        single = cb.dual_function_value(lmi_instance, cb.DualPoint(mus[i], Gs[i]))
        assert np.isclose(vals[i], single, atol=1e-12)
