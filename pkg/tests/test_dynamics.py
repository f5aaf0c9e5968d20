import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbl_lab.catalog import catalog_game
from mbl_lab.dynamics import (
    MutationParams,
    NotAnEquilibrium,
    classify,
    continuation,
    field_norm,
    find_equilibrium,
    integrate_rmd,
    reduced_jacobian,
    reduced_jacobian_fd,
    rmd_field,
    stability_spectrum,
)
from mbl_lab.games import MixedProfile, build_game, nash_violation

from test_games import random_game, random_profile


def zero_game(counts=(2, 3)):
    return build_game(counts, [np.zeros(counts)] * len(counts))


def profile(*vecs):
    return MixedProfile(tuple(np.asarray(v, dtype=float) for v in vecs))


# --- MutationParams -----------------------------------------------------------------

def test_mutation_params_validation():
    g, _ = catalog_game("MP")
    with pytest.raises(ValueError):
        MutationParams((0.0, 0.1), (np.array([0.5, 0.5]),) * 2)
    with pytest.raises(ValueError):
        MutationParams((0.1, 0.1), (np.array([1.0, 0.0]), np.array([0.5, 0.5])))
    assert MutationParams.uniform(g, 0.0).plain_rd
    m = MutationParams.create(g, [0.1, 0.2], [[0.3, 0.7], [0.5, 0.5]])
    assert m.M == (0.1, 0.2)


# --- field ---------------------------------------------------------------------------

def test_field_zero_game_is_pure_mutation():
    g = zero_game()
    mut = MutationParams.create(g, [0.3, 0.7], [[0.4, 0.6], [0.2, 0.3, 0.5]])
    x = profile([0.9, 0.1], [0.1, 0.1, 0.8])
    F = rmd_field(g, mut, x)
    np.testing.assert_array_equal(F[0], 0.3 * (np.array([0.4, 0.6]) - x[0]))
    np.testing.assert_array_equal(F[1], 0.7 * (np.array([0.2, 0.3, 0.5]) - x[1]))


def test_plain_rd_fixes_vertices():
    rng = np.random.default_rng(0)
    g = random_game(rng, (3, 3))
    mut = MutationParams.uniform(g, 0.0)
    for a in np.ndindex(3, 3):
        x = profile(np.eye(3)[a[0]], np.eye(3)[a[1]])
        np.testing.assert_array_equal(rmd_field(g, mut, x).flat, 0)


def test_field_mp_uniform_hand_expansion():
    g, _ = catalog_game("MP")
    mut = MutationParams.uniform(g, 1 / 20)
    # player 0: f = ((1 - 2.3)/2, (-0.4 + 1)/2) = (-0.65, 0.3), mean -0.175
    # component 0 = 0.5 * (-0.65 + 0.175) = -0.2375; mutation term vanishes at c = x
    # player 1 sees the transposed structure and gets the same numbers
    F = rmd_field(g, mut, MixedProfile.uniform(g))
    np.testing.assert_allclose(F.flat, [-0.2375, 0.2375, -0.2375, 0.2375], atol=1e-15)


# --- integration ---------------------------------------------------------------------

def test_integrate_matches_linear_closed_form():
    g = zero_game((2, 3))
    M, tol = 0.4, 1e-10
    c = [np.array([0.3, 0.7]), np.array([0.2, 0.2, 0.6])]
    mut = MutationParams.create(g, M, c)
    x0 = profile([0.95, 0.05], [0.1, 0.8, 0.1])
    traj = integrate_rmd(g, mut, x0, 5.0, tol=tol)
    exact = x0.flat * np.exp(-M * 5) + np.concatenate(c) * (1 - np.exp(-M * 5))
    assert traj.times[-1] == 5.0
    assert np.max(np.abs(traj.terminal - exact)) <= 10 * tol


def test_integrate_zero_horizon():
    g, _ = catalog_game("MP")
    x0 = profile([0.2, 0.8], [0.6, 0.4])
    traj = integrate_rmd(g, MutationParams.uniform(g, 0.05), x0, 0.0)
    np.testing.assert_array_equal(traj.times, [0.0])
    np.testing.assert_array_equal(traj.states, [x0.flat])


def test_integrate_mp_converges_from_random_starts():
    g, _ = catalog_game("MP")
    mut = MutationParams.uniform(g, 1 / 20)
    rng = np.random.default_rng(7)
    ends = []
    for _ in range(10):
        traj = integrate_rmd(g, mut, random_profile(rng, g), 2000.0)
        assert traj.terminal_field_norm < 1e-10
        ends.append(traj.terminal)
    ends = np.array(ends)
    assert np.max(np.abs(ends[:, None] - ends[None, :])) < 1e-6


def test_integrate_samples_on_requested_times():
    g, _ = catalog_game("RPS3")
    x0 = profile([0.6, 0.3, 0.1], [0.2, 0.2, 0.6])
    times = np.linspace(0, 7, 15)
    traj = integrate_rmd(g, MutationParams.uniform(g, 0.05), x0, 7.0, t_eval=times)
    np.testing.assert_array_equal(traj.times, times)
    assert np.all(np.diff(traj.times) > 0)
    for row in traj.states:
        assert abs(row[:3].sum() - 1) < 1e-7 and abs(row[3:].sum() - 1) < 1e-7


def test_integrate_agrees_with_scipy():
    from scipy.integrate import solve_ivp

    from mbl_lab.dynamics import _field_flat

    g, _ = catalog_game("RPS5")
    mut = MutationParams.uniform(g, 0.03)
    x0 = random_profile(np.random.default_rng(3), g)
    times = np.linspace(0, 40, 9)
    ours = integrate_rmd(g, mut, x0, 40.0, tol=1e-11, t_eval=times)
    ref = solve_ivp(lambda t, y: _field_flat(g, mut, y), (0, 40), x0.flat, method="DOP853",
                    t_eval=times, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(ours.states, ref.y.T, atol=1e-7)


def test_integrate_rejects_bad_arguments():
    g, _ = catalog_game("MP")
    with pytest.raises(ValueError):
        integrate_rmd(g, MutationParams.uniform(g, 0.05), MixedProfile.uniform(g), -1.0)
    with pytest.raises(ValueError):
        integrate_rmd(g, MutationParams.uniform(g, 0.05), MixedProfile.uniform(g), 1.0, tol=0)


# --- equilibria ---------------------------------------------------------------------

def test_find_equilibrium_zero_game_returns_bias_point():
    g = zero_game()
    c = [[0.3, 0.7], [0.2, 0.2, 0.6]]
    x = find_equilibrium(g, MutationParams.create(g, 0.2, c), profile([0.9, 0.1], [0.8, 0.1, 0.1]))
    np.testing.assert_allclose(x.flat, np.concatenate(c), atol=1e-13)


def test_find_equilibrium_mp_matches_long_integration():
    g, eqs = catalog_game("MP")
    mut = MutationParams.uniform(g, 1 / 20)
    x = find_equilibrium(g, mut, MixedProfile.uniform(g))
    oracle = integrate_rmd(g, mut, MixedProfile.uniform(g), 3000.0).terminal
    np.testing.assert_allclose(x.flat, oracle, atol=1e-8)
    assert field_norm(g, mut, x) <= 1e-12
    assert x.is_interior()
    assert nash_violation(g, x) > 0
    assert np.linalg.norm(x.flat - eqs[0].profile().flat) < 0.05


def test_violation_decreases_with_mutation_mp():
    g, _ = catalog_game("MP")
    eps = [nash_violation(g, x) for x in continuation(g, [1, 1 / 10, 1 / 20, 1 / 40])]
    assert all(a > b for a, b in zip(eps, eps[1:]))
    # values from the solver, pinned loosely as a regression guard
    np.testing.assert_allclose(eps, [0.2865, 0.0305, 0.01487, 0.00732], rtol=0.01)


# --- Jacobian & stability -----------------------------------------------------------------

def test_jacobian_zero_game_at_bias_point():
    g = zero_game((3, 2))
    mut = MutationParams.create(g, [0.3, 0.5], [[0.2, 0.3, 0.5], [0.5, 0.5]])
    J = reduced_jacobian(g, mut, profile([0.2, 0.3, 0.5], [0.5, 0.5]))
    np.testing.assert_allclose(J, np.diag([-0.3, -0.3, -0.5]), atol=1e-15)


def test_jacobian_mp_plain_rd_purely_imaginary():
    g, eqs = catalog_game("MP")
    J = reduced_jacobian(g, MutationParams.uniform(g, 0.0), eqs[0].profile())
    assert abs(np.trace(J)) < 1e-12
    lam = np.linalg.eigvals(J)
    assert np.all(np.abs(lam.real) < 1e-8)
    np.testing.assert_allclose(np.sort(lam.imag), [-0.98298, 0.98298], atol=1e-5)


def test_jacobian_mp_with_mutation_is_stable():
    g, _ = catalog_game("MP")
    mut = MutationParams.uniform(g, 1 / 20)
    lam = np.linalg.eigvals(reduced_jacobian(g, mut, find_equilibrium(g, mut)))
    assert np.all(lam.real < 0)


def test_stability_classifications():
    g, eqs = catalog_game("MP")
    mut = MutationParams.uniform(g, 1 / 20)
    rep = stability_spectrum(g, mut, find_equilibrium(g, mut))
    assert rep.classification == "asymptotically-stable"
    assert rep.eigenvalues.size == 2
    assert stability_spectrum(g, MutationParams.uniform(g, 0.0), eqs[0].profile()).classification == "marginal"

    g3, eqs3 = catalog_game("MP3")
    mut3 = MutationParams.uniform(g3, 1 / 40)
    rep3 = stability_spectrum(g3, mut3, find_equilibrium(g3, mut3, eqs3[0].profile()))
    assert rep3.classification == "unstable"
    assert rep3.eigenvalues.size == 3
    np.testing.assert_allclose(rep3.max_real, 0.475, atol=1e-9)


def test_stability_rejects_non_equilibrium():
    g, _ = catalog_game("MP")
    with pytest.raises(NotAnEquilibrium):
        stability_spectrum(g, MutationParams.uniform(g, 0.05), MixedProfile.uniform(g))


def test_classify_margin():
    assert classify(np.array([-2e-8, -1.0])) == "asymptotically-stable"
    assert classify(np.array([5e-9 + 1j, 5e-9 - 1j])) == "marginal"
    assert classify(np.array([2e-8])) == "unstable"


# --- properties --------------------------------------------------------------------------

game_st = st.sampled_from([(2, 2), (3, 3), (2, 3), (4, 2), (2, 2, 2), (3, 2, 2)])


@settings(max_examples=50, deadline=None)
@given(counts=game_st, seed=st.integers(0, 2**32 - 1), M=st.floats(0, 1))
def test_field_is_tangent_to_simplex(counts, seed, M):
    rng = np.random.default_rng(seed)
    g = random_game(rng, counts, -2, 2)
    F = rmd_field(g, MutationParams.uniform(g, M), random_profile(rng, g))
    for i in range(g.num_players):
        assert abs(F[i].sum()) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(counts=game_st, seed=st.integers(0, 2**32 - 1), M=st.floats(0.01, 1))
def test_boundary_repulsion(counts, seed, M):
    rng = np.random.default_rng(seed)
    g = random_game(rng, counts, -2, 2)
    x = random_profile(rng, g)
    i = int(rng.integers(g.num_players))
    h = int(rng.integers(counts[i]))
    s = x[i].copy()
    s[h] = 0
    s /= s.sum()
    x = MixedProfile(tuple(s if k == i else x[k] for k in range(g.num_players)))
    mut = MutationParams.create(g, M, [0.9 * rng.dirichlet(np.ones(n)) + 0.1 / n for n in counts])
    assert rmd_field(g, mut, x)[i][h] == pytest.approx(M * mut.c[i][h], abs=1e-15)
    assert rmd_field(g, mut, x)[i][h] > 0


@settings(max_examples=15, deadline=None)
@given(counts=game_st, seed=st.integers(0, 2**32 - 1))
def test_interior_invariance_along_trajectories(counts, seed):
    rng = np.random.default_rng(seed)
    g = random_game(rng, counts, -3, 3)
    x0 = MixedProfile(tuple(rng.dirichlet(np.full(n, 0.3)) + 1e-6 for n in counts))
    x0 = MixedProfile(tuple(s / s.sum() for s in x0.strategies))
    traj = integrate_rmd(g, MutationParams.uniform(g, 0.02), x0, 60.0)
    assert traj.states.min() > 0


@settings(max_examples=50, deadline=None)
@given(counts=game_st, seed=st.integers(0, 2**32 - 1), M=st.floats(0, 0.5))
def test_jacobian_matches_finite_differences(counts, seed, M):
    rng = np.random.default_rng(seed)
    g = random_game(rng, counts, -2, 2)
    mut = MutationParams.uniform(g, M)
    x = random_profile(rng, g)
    assert np.max(np.abs(reduced_jacobian(g, mut, x) - reduced_jacobian_fd(g, mut, x))) <= 1e-5


@pytest.mark.parametrize("name", ["MP", "RPS3"])
def test_violation_strictly_decreases_when_mutation_halves(name):
    g, _ = catalog_game(name)
    Ms = [1 / 2**k for k in range(1, 8)]
    eps = [nash_violation(g, x) for x in continuation(g, Ms)]
    assert all(a > b for a, b in zip(eps, eps[1:]))
