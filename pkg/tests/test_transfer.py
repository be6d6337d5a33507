import math

import numpy as np
import pytest

from thermosft import (
    build_transfer_matrix,
    cylinder_mass,
    enumerate_words,
    equilibrium_measure,
    integrate,
    normalize_potential,
    refine_measure,
    rpf_solve,
    verify_rpf_bounds,
    verify_tilted_family,
)
from thermosft.bounds import RpfConstants
from thermosft.transfer import solve_potential, state_norms

from conftest import make_pot, random_aperiodic, random_potential


def test_weight_matrices(full2, golden):
    T = build_transfer_matrix(make_pot(full2, 1, {"1": 0.0, "2": 0.0}))
    assert np.array_equal(T.weights, [[1.0, 1.0], [1.0, 1.0]])

    Tg = build_transfer_matrix(make_pot(golden, 1, {"1": 0.0, "2": 0.0}))
    assert np.array_equal(Tg.weights, [[0.0, 1.0], [1.0, 1.0]])

    Th = build_transfer_matrix(make_pot(full2, 1, {"1": -math.log(2), "2": -math.log(2)}))
    assert np.allclose(Th.weights, 0.5)


def test_matrix_application_is_preimage_sum():
    rng = np.random.default_rng(41)
    for _ in range(10):
        tm = random_aperiodic(rng, int(rng.integers(2, 4)))
        f = random_potential(rng, tm, int(rng.integers(1, 4)))
        k = max(2, f.r - 1)
        T = build_transfer_matrix(f, k_min=k)
        g = rng.random(T.size)
        applied = T.apply(g)
        for wi, w in enumerate(T.state_words):
            expected = 0.0
            for a in range(1, tm.size + 1):
                y = (a,) + w
                if not tm.is_admissible(y[:2]):
                    continue
                expected += math.exp(f.table[y[: f.r]]) * g[T.index[y[:k]]]
            assert applied[wi] == pytest.approx(expected, abs=1e-12)


def test_rpf_full_shift(full2):
    _, sol = solve_potential(make_pot(full2, 1, {"1": 0.0, "2": 0.0}))
    assert sol.lam == pytest.approx(2.0, abs=1e-13)
    assert np.allclose(sol.h, 1.0, atol=1e-13)
    assert np.allclose(sol.nu, 0.5, atol=1e-13)


def test_rpf_golden_mean(golden):
    _, sol = solve_potential(make_pot(golden, 1, {"1": 0.0, "2": 0.0}))
    assert sol.lam == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)


def test_rpf_tilted_family(full2):
    for q in (-2.0, 0.5, 1.0, 3.0):
        f = make_pot(full2, 1, {"1": q, "2": 0.0})
        _, sol = solve_potential(f)
        assert sol.lam == pytest.approx(1 + math.exp(q), rel=1e-13)


def test_rpf_invariants():
    rng = np.random.default_rng(43)
    for _ in range(10):
        tm = random_aperiodic(rng, int(rng.integers(2, 4)))
        f = random_potential(rng, tm, int(rng.integers(1, 4)))
        T, sol = solve_potential(f)
        res_h = np.max(np.abs(T.weights.T @ sol.h - sol.lam * sol.h))
        res_nu = np.max(np.abs(T.weights @ sol.nu - sol.lam * sol.nu))
        assert res_h <= 1e-12 * sol.lam * np.max(sol.h)
        assert res_nu <= 1e-12 * sol.lam * np.max(sol.nu)
        assert (sol.h > 0).all() and (sol.nu >= 0).all()
        assert sol.nu.sum() == pytest.approx(1.0, abs=1e-12)
        assert float(sol.h @ sol.nu) == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= sol.gap_ratio < 1.0


def test_gap_ratio_matches_dense_eigenvalues(golden):
    f = make_pot(golden, 2, {"12": 0.0, "21": 0.0, "22": 0.2})
    T, sol = solve_potential(f)
    eigs = sorted(abs(np.linalg.eigvals(T.weights)), reverse=True)
    assert sol.gap_ratio == pytest.approx(eigs[1] / eigs[0], abs=1e-6)


def test_normalize_zero_potential(full2):
    phi = normalize_potential(make_pot(full2, 1, {"1": 0.0, "2": 0.0}))
    assert phi.r == 1
    assert phi.table[(1,)] == pytest.approx(-math.log(2), abs=1e-14)
    assert phi.table[(2,)] == pytest.approx(-math.log(2), abs=1e-14)


def test_normalize_idempotent(full2):
    phi = normalize_potential(make_pot(full2, 1, {"1": 0.0, "2": 0.0}))
    again = normalize_potential(phi)
    for w, v in again.table.items():
        assert v == pytest.approx(phi.table[w[: phi.r]], abs=1e-12)


def test_normalize_indicator_tilt(full2):
    phi = normalize_potential(make_pot(full2, 1, {"1": 1.0, "2": 0.0}))
    assert phi.r == 1
    assert phi.table[(1,)] == pytest.approx(1 - math.log(1 + math.e), abs=1e-12)
    assert phi.table[(2,)] == pytest.approx(-math.log(1 + math.e), abs=1e-12)


def test_normalize_unit_action_and_eigenvalue(golden):
    f = make_pot(golden, 2, {"12": 0.0, "21": 0.0, "22": 0.2})
    phi = normalize_potential(f)
    T = build_transfer_matrix(phi)
    assert np.max(np.abs(T.apply(np.ones(T.size)) - 1.0)) <= 1e-10
    _, sol = solve_potential(phi)
    assert abs(sol.lam - 1.0) <= 1e-12


def test_normalize_preserves_equilibrium(golden):
    f = make_pot(golden, 2, {"12": 0.0, "21": 0.0, "22": 0.2})
    phi = normalize_potential(f)
    mu_f = equilibrium_measure(f, k=2)
    mu_phi = equilibrium_measure(phi, k=2)
    for w in enumerate_words(golden, 3):
        assert cylinder_mass(mu_f, w) == pytest.approx(cylinder_mass(mu_phi, w), abs=1e-10)


def test_equilibrium_uniform(full2):
    mu = equilibrium_measure(make_pot(full2, 1, {"1": -math.log(2), "2": -math.log(2)}))
    assert np.allclose(mu.pi, 0.5, atol=1e-13)
    assert np.allclose(mu.P, 0.5, atol=1e-13)


def test_equilibrium_tilted_bernoulli(full2):
    q = 1.3
    z = math.log(1 + math.exp(q))
    f = make_pot(full2, 1, {"1": q - z, "2": -z})
    mu = equilibrium_measure(f)
    p1 = math.exp(q) / (1 + math.exp(q))
    assert mu.pi[0] == pytest.approx(p1, abs=1e-12)
    assert mu.pi[1] == pytest.approx(1 - p1, abs=1e-12)
    assert np.allclose(mu.P, [[p1, 1 - p1], [p1, 1 - p1]], atol=1e-12)


def test_equilibrium_markov_invariants():
    rng = np.random.default_rng(47)
    for _ in range(8):
        tm = random_aperiodic(rng, int(rng.integers(2, 4)))
        f = random_potential(rng, tm, int(rng.integers(1, 4)))
        mu = equilibrium_measure(f, k=2)
        rows = mu.P.sum(axis=1)
        assert np.max(np.abs(rows - 1.0)) <= 1e-12
        assert np.max(np.abs(mu.pi @ mu.P - mu.pi)) <= 1e-12
        assert (mu.pi > 0).all()


def test_cylinder_mass_examples(full2, golden):
    mu = equilibrium_measure(make_pot(full2, 1, {"1": -math.log(2), "2": -math.log(2)}))
    assert cylinder_mass(mu, (1, 1, 2, 1)) == pytest.approx(1 / 16, abs=1e-15)
    total = sum(cylinder_mass(mu, w) for w in enumerate_words(full2, 5))
    assert total == pytest.approx(1.0, abs=1e-10)

    mug = equilibrium_measure(make_pot(golden, 1, {"1": 0.0, "2": 0.0}))
    assert cylinder_mass(mug, (1, 1, 2)) == 0.0


def test_cylinder_mass_consistency(golden):
    f = make_pot(golden, 2, {"12": 0.1, "21": -0.2, "22": 0.2})
    mu = equilibrium_measure(f, k=2)
    for w in enumerate_words(golden, 3):
        left = sum(cylinder_mass(mu, (a,) + w) for a in (1, 2))
        right = sum(cylinder_mass(mu, w + (a,)) for a in (1, 2))
        mass = cylinder_mass(mu, w)
        assert left == pytest.approx(mass, abs=1e-12)
        assert right == pytest.approx(mass, abs=1e-12)


def test_cylinder_mass_short_words_and_refinement(golden):
    f = make_pot(golden, 2, {"12": 0.1, "21": -0.2, "22": 0.2})
    mu = equilibrium_measure(f, k=2)
    fine = refine_measure(mu, 4)
    for w in enumerate_words(golden, 5):
        assert cylinder_mass(fine, w) == pytest.approx(cylinder_mass(mu, w), abs=1e-12)
    for w in enumerate_words(golden, 1):
        assert cylinder_mass(mu, w) == pytest.approx(
            sum(cylinder_mass(mu, v) for v in enumerate_words(golden, 2) if v[:1] == w),
            abs=1e-14,
        )


def test_integrate(full2):
    mu = equilibrium_measure(make_pot(full2, 1, {"1": -math.log(2), "2": -math.log(2)}))
    psi = make_pot(full2, 1, {"1": 1.0, "2": 0.0})
    assert integrate(mu, psi) == pytest.approx(0.5, abs=1e-13)

    q = 1.0
    z = math.log(1 + math.e)
    tilt = equilibrium_measure(make_pot(full2, 1, {"1": q - z, "2": -z}))
    assert integrate(tilt, psi) == pytest.approx(math.e / (1 + math.e), abs=1e-12)

    const = make_pot(full2, 1, {"1": 0.37, "2": 0.37})
    assert integrate(mu, const) == pytest.approx(0.37, abs=1e-14)

    wide = make_pot(full2, 3, {w: 1.0 if w == "111" else 0.0 for w in
                               ("111", "112", "121", "122", "211", "212", "221", "222")})
    assert integrate(mu, wide) == pytest.approx(1 / 8, abs=1e-13)


def test_one_step_convergence_for_range_one(full2):
    f = make_pot(full2, 1, {"1": 0.4, "2": -0.1})
    g = make_pot(full2, 1, {"1": 1.0, "2": 0.0})
    report = verify_rpf_bounds(f, 10, g)
    assert max(report.deviation_sup) <= 1e-14


def test_deviation_decay_matches_gap(golden):
    f = make_pot(golden, 2, {"12": 0.0, "21": 0.0, "22": 0.2})
    g = make_pot(golden, 1, {"1": 1.0, "2": 0.0})
    report = verify_rpf_bounds(f, 30, g)
    assert report.fitted_ratio is not None
    assert abs(report.fitted_ratio - report.gap_ratio) <= 0.05


def test_envelope_check_accepts_loose_constants(golden):
    f = make_pot(golden, 2, {"12": 0.0, "21": 0.0, "22": 0.2})
    g = make_pot(golden, 1, {"1": 1.0, "2": 0.0})
    consts = RpfConstants(
        mode="measured", rho=0.9, log_rho=math.log(0.9), log_D=math.log(50.0),
        log_h_norm_bound=0.0, log_h_min_bound=0.0, source_params={},
    )
    report = verify_rpf_bounds(f, 30, g, consts=consts)
    assert report.paper_bound_checked


def test_theta_seminorm_of_state_vectors(full2):
    words = enumerate_words(full2, 3)
    vec = np.array([1.0 if w == (1, 1, 1) else 0.0 for w in words])
    sup, semi = state_norms(words, vec, 0.5)
    assert sup == 1.0
    # variation 1 persists at depth 1, scaled by 1/theta
    assert semi == 2.0


def test_tilted_family_envelope(full2):
    phi = normalize_potential(make_pot(full2, 1, {"1": 0.0, "2": 0.0}))
    psi = make_pot(full2, 1, {"1": 1.0, "2": 0.0})
    consts = RpfConstants(
        mode="measured", rho=0.55, log_rho=math.log(0.55), log_D=0.0,
        log_h_norm_bound=0.0, log_h_min_bound=0.0, source_params={},
    )
    c0 = math.log(2) + 2
    report = verify_tilted_family(phi, psi, q0=1e-5, c0=c0, consts=consts, n_max=20)
    assert all(abs(v) <= 1e-5 * c0 + 1e-12 for v in report.log_lambdas)
