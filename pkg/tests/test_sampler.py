import numpy as np
import pytest
from scipy import stats

from bhplab.domains import Ball
from bhplab.errors import (CapabilityError, ConfigError, DomainError,
                           SamplerStallError)
from bhplab.kernel import isotropic_stable_kernel, tempered_stable_kernel
from bhplab.rng import RngStream
from bhplab.sampler import (GeometricStable, IsotropicStable, SdeStable,
                            StableLikeChain, ball_exit_centered,
                            ball_exit_isotropic, chain_exit_batch, chain_step,
                            expected_ball_exit_time, mean_exit_constant,
                            one_sided_stable, poisson_kernel_constant,
                            sample_exits, sde_step, stable_increment,
                            survival_prob_ball, survival_scaling_reference,
                            walk_exit_batch, walk_on_balls_exit)

from conftest import ball_exit_prob_interval, ball_exit_tail_prob


# ------------------------------------------------------------------ #
# exact single-ball exit law
# ------------------------------------------------------------------ #

def test_centered_exit_tail_matches_quadrature(rng):
    n = 200_000
    for d, alpha, R in [(1, 1.0, 2.0), (2, 1.5, 3.0)]:
        y = ball_exit_centered(alpha, d, n, rng.substream(d).generator())
        p_hat = float((np.linalg.norm(y, axis=1) > R).mean())
        p = ball_exit_tail_prob(alpha, d, R)
        se = np.sqrt(p * (1 - p) / n)
        assert abs(p_hat - p) < 3.5 * se


def test_centered_exit_points_leave_the_ball(rng):
    y = ball_exit_centered(0.7, 3, 10_000, rng.generator())
    assert np.all(np.linalg.norm(y, axis=1) >= 1.0)


def test_offcenter_exit_matches_quadrature(rng):
    x = 0.3
    stream = rng.substream(1)
    got = np.array([ball_exit_isotropic(1.0, 1, [x], stream.substream(i))[0]
                    for i in range(4000)])
    p_hat = float((got > 1.0).mean())
    p = ball_exit_prob_interval(1.0, x, 1.0, np.inf)
    se = np.sqrt(p * (1 - p) / len(got))
    assert abs(p_hat - p) < 3.5 * se


def test_offcenter_start_validation(rng):
    with pytest.raises(DomainError):
        ball_exit_isotropic(1.0, 1, [1.0], rng)
    with pytest.raises(DomainError):
        ball_exit_isotropic(2.5, 1, [0.0], rng)
    with pytest.raises(DomainError):
        ball_exit_isotropic(1.0, 2, [0.0], rng)


# ------------------------------------------------------------------ #
# walk on balls
# ------------------------------------------------------------------ #

def test_walk_self_similarity_bitwise(rng):
    # from the center with rho=1 the walk makes a single exact exit, so
    # exits of B(0, r) are exactly r times exits of B(0, 1)
    model = IsotropicStable(1.0, 2)
    r = 7.0
    b1 = walk_exit_batch(1.0, 2, Ball([0.0, 0.0], 1.0).contains,
                         Ball([0.0, 0.0], 1.0).dist_lb,
                         np.zeros((500, 2)), 1.0, RngStream(5))
    br = walk_exit_batch(1.0, 2, Ball([0.0, 0.0], r).contains,
                         Ball([0.0, 0.0], r).dist_lb,
                         np.zeros((500, 2)), 1.0, RngStream(5))
    assert np.allclose(br.y, r * b1.y, rtol=1e-12)
    assert np.all(b1.steps == 1)


def test_walk_exit_law_invariant_under_rho(rng):
    # the exit position law of the domain does not depend on the
    # walk-on-balls radius factor
    D = Ball([0.0], 1.0)
    n = 30_000
    a = walk_exit_batch(1.0, 1, D.contains, D.dist_lb, np.zeros((n, 1)),
                        1.0, rng.substream(0))
    b = walk_exit_batch(1.0, 1, D.contains, D.dist_lb, np.zeros((n, 1)),
                        0.5, rng.substream(1))
    ks = stats.ks_2samp(a.y[:, 0], b.y[:, 0])
    assert ks.pvalue > 0.01
    assert not a.stalled.any() and not b.stalled.any()


def test_walk_time_weight_matches_closed_form(rng):
    # E_x[tau_{B(0,r)}] = C_E (r^2 - |x|^2)^{alpha/2}
    alpha, r, x0 = 1.2, 2.0, 0.8
    D = Ball([0.0], r)
    n = 40_000
    batch = walk_exit_batch(alpha, 1, D.contains, D.dist_lb,
                            np.full((n, 1), x0), 0.7, rng)
    expect = expected_ball_exit_time(1, alpha, r, x0)
    se = batch.w.std(ddof=1) / np.sqrt(n)
    assert abs(batch.w.mean() - expect) < 3.5 * se


def test_walk_weight_is_exact_from_center_at_rho_one(rng):
    alpha = 0.9
    D = Ball([0.0, 0.0], 3.0)
    batch = walk_exit_batch(alpha, 2, D.contains, D.dist_lb,
                            np.zeros((100, 2)), 1.0, rng)
    expect = mean_exit_constant(2, alpha) * 3.0 ** alpha
    assert np.allclose(batch.w, expect, rtol=1e-12)


def test_walk_determinism_bitwise():
    D = Ball([0.0], 1.0)
    a = walk_exit_batch(1.5, 1, D.contains, D.dist_lb, np.zeros((200, 1)),
                        0.5, RngStream(77, 3))
    b = walk_exit_batch(1.5, 1, D.contains, D.dist_lb, np.zeros((200, 1)),
                        0.5, RngStream(77, 3))
    assert np.array_equal(a.y, b.y) and np.array_equal(a.w, b.w)


def test_walk_on_balls_single_sample_and_stall():
    model = IsotropicStable(1.0, 1)
    D = Ball([0.0], 1.0)
    s = walk_on_balls_exit(model, D, [0.2], 0.5, RngStream(3))
    assert not D.contains(s.y)
    assert s.w > 0 and s.steps >= 1
    with pytest.raises(SamplerStallError) as exc:
        walk_on_balls_exit(model, D, [0.0], 0.001, RngStream(3), max_steps=1)
    assert exc.value.n_stalled == 1 and exc.value.n_total == 1


def test_walk_validates_inputs():
    D = Ball([0.0], 1.0)
    with pytest.raises(DomainError):
        walk_exit_batch(1.0, 1, D.contains, D.dist_lb, [[2.0]], 0.5,
                        RngStream(0))
    with pytest.raises(DomainError):
        walk_exit_batch(1.0, 1, D.contains, D.dist_lb, [[0.0]], 1.5,
                        RngStream(0))


# ------------------------------------------------------------------ #
# lattice chain
# ------------------------------------------------------------------ #

def _unit_chain(h=2.0 ** -5, r_cut=8.0, offset=0.5):
    return StableLikeChain(isotropic_stable_kernel(1, 1.0), h, r_cut,
                           lattice_offset=offset)


def test_chain_far_rate_matches_tail_mass():
    model = _unit_chain()
    # the aggregated far jump carries exactly the tail mass beyond R_c,
    # which for j(z) = |z|^-2 is 2 / R_c
    assert model.tables.far_rate == pytest.approx(2.0 / 8.0, rel=1e-5)


def test_chain_exits_are_symmetric(rng):
    model = _unit_chain()
    batch = chain_exit_batch(model, Ball([0.0], 1.0), np.zeros((20_000, 1)),
                             rng)
    y = batch.y[:, 0]
    assert np.all(np.abs(y) >= 1.0 - model.h)
    # symmetric kernel, symmetric start: the sign is a fair coin
    p = float((y > 0).mean())
    assert abs(p - 0.5) < 3.5 * np.sqrt(0.25 / len(y))


def test_chain_step_matches_batch_rates(rng):
    model = _unit_chain()
    x1, hold = chain_step(model, [0.0], rng)
    assert hold > 0
    assert x1.shape == (1,)
    assert not np.allclose(x1, 0.0)


def test_chain_validation():
    ks = isotropic_stable_kernel(1, 1.0)
    with pytest.raises(ConfigError):
        StableLikeChain(ks, 1.0, 0.5)       # h >= r_cut
    with pytest.raises(ConfigError):
        StableLikeChain(ks, 2.0 ** -5, 8.0, lattice_offset=1.5)
    with pytest.raises(ConfigError):
        # stencil would be astronomically large
        StableLikeChain(isotropic_stable_kernel(3, 1.0), 1e-4, 10.0)


def test_chain_rejects_asymmetric_kernel_at_large_alpha():
    from bhplab.kernel import JumpKernelSpec
    from bhplab.scale import ScaleFunction

    def kappa(x, z):
        z = np.atleast_2d(z)
        return 1.0 + 0.5 * np.tanh(z[..., 0])

    ks = JumpKernelSpec(dim=1, scale=ScaleFunction.power(1.5), kappa=kappa,
                        kappa_lo=0.5, kappa_hi=1.5, symmetric_in_z=False)
    with pytest.raises(ConfigError):
        StableLikeChain(ks, 2.0 ** -5, 8.0)


def test_chain_snaps_starts_to_the_lattice(rng):
    model = _unit_chain(offset=0.0)
    batch = chain_exit_batch(model, Ball([0.0], 1.0),
                             np.full((10, 1), 0.013), rng, max_steps=1)
    # after one step every position is on the lattice h Z
    rem = np.abs(batch.y / model.h - np.round(batch.y / model.h))
    assert np.all(rem < 1e-9)


# ------------------------------------------------------------------ #
# exact stable increments
# ------------------------------------------------------------------ #

def test_one_sided_stable_matches_levy_law(rng):
    # index 1/2: Laplace transform exp(-sqrt(lambda)) is the Levy
    # distribution with scale 1/2
    s = one_sided_stable(0.5, 20_000, rng.generator())
    ks = stats.kstest(s, stats.levy(scale=0.5).cdf)
    assert ks.pvalue > 0.01


def test_stable_increment_cauchy_case(rng):
    # alpha = 1, d = 1, dt = 1: characteristic function exp(-|xi|),
    # i.e. the standard Cauchy law
    z = stable_increment(1.0, 1, 1.0, 20_000, rng.generator())[:, 0]
    ks = stats.kstest(z, stats.cauchy.cdf)
    assert ks.pvalue > 0.01


def test_stable_increment_time_scaling(rng):
    # dt enters only through the dt^{1/alpha} spatial scale
    g1 = RngStream(42).generator()
    g2 = RngStream(42).generator()
    a = stable_increment(1.5, 2, 1.0, 1000, g1)
    b = stable_increment(1.5, 2, 8.0, 1000, g2)
    assert np.allclose(b, 8.0 ** (1 / 1.5) * a, rtol=1e-12)


def test_one_sided_stable_rejects_bad_index(rng):
    with pytest.raises(DomainError):
        one_sided_stable(1.0, 10, rng.generator())


# ------------------------------------------------------------------ #
# Euler scheme and survival probabilities
# ------------------------------------------------------------------ #

def test_sde_step_identity_and_scaled_sigma():
    model = SdeStable(1.0, 2, dt=0.1)
    x1 = sde_step(model, [0.0, 0.0], g=RngStream(9).generator())
    scaled = SdeStable(1.0, 2, dt=0.1, sigma=lambda x: 2.0 * np.eye(2),
                       sigma_bounds=(2.0, 2.0))
    x2 = sde_step(scaled, [0.0, 0.0], g=RngStream(9).generator())
    assert np.allclose(x2, 2.0 * x1, rtol=1e-12)


def test_sde_step_enforces_ellipticity():
    model = SdeStable(1.0, 2, dt=0.1, sigma=lambda x: 3.0 * np.eye(2),
                      sigma_bounds=(1.0, 1.0))
    with pytest.raises(ConfigError):
        sde_step(model, [0.0, 0.0], g=RngStream(1).generator())


def test_survival_scaled_sigma_equivalent_to_scaled_ball(rng):
    # with sigma = 2 I, exiting B(0, 2r) is the same event as the
    # identity-coefficient scheme exiting B(0, r)
    n = 20_000
    base = SdeStable(1.0, 1, dt=0.05)
    doubled = SdeStable(1.0, 1, dt=0.05, sigma=lambda x: 2.0 * np.eye(1),
                        sigma_bounds=(2.0, 2.0))
    p1 = survival_prob_ball(base, [0.0], 1.0, 1.0, n, rng.substream(0),
                            n_steps=20)
    p2 = survival_prob_ball(doubled, [0.0], 2.0, 1.0, n, rng.substream(1),
                            n_steps=20)
    joint_se = np.hypot(p1.stderr, p2.stderr)
    assert abs(p1.value - p2.value) < 3.5 * joint_se


def test_survival_exact_model_needs_explicit_fallback(rng):
    model = IsotropicStable(1.0, 1)
    with pytest.raises(CapabilityError):
        survival_prob_ball(model, [0.0], 1.0, 1.0, 100, rng)
    est = survival_prob_ball(model, [0.0], 1.0, 1.0, 2000, rng,
                             sde_fallback=True)
    assert 0.0 < est.value < 1.0


def test_survival_vanishes_for_tiny_horizons(rng):
    model = SdeStable(1.0, 1, dt=1e-6)
    est = survival_prob_ball(model, [0.0], 1.0, 1e-5, 2000, rng, n_steps=10)
    assert est.value < 0.01


def test_survival_scaling_reference():
    r, t = survival_scaling_reference(1.5, 2.0, 2.0)
    assert r == 1.0
    assert t == pytest.approx(2.0 / 2.0 ** 1.5)


def test_survival_chain_and_geometric_run(rng):
    chain = _unit_chain(h=2.0 ** -4)
    est = survival_prob_ball(chain, [0.0], 1.0, 0.5, 2000, rng.substream(0))
    assert 0.0 <= est.value <= 1.0
    geo = GeometricStable(1.0, 1)
    est2 = survival_prob_ball(geo, [0.0], 1.0, 0.5, 2000, rng.substream(1),
                              n_steps=16)
    assert 0.0 <= est2.value <= 1.0


# ------------------------------------------------------------------ #
# unified exit sampling
# ------------------------------------------------------------------ #

def test_sample_exits_dispatch(rng):
    D = Ball([0.0], 1.0)
    b = sample_exits(IsotropicStable(1.0, 1), D, [0.0], 100, rng.substream(0))
    assert b.n == 100 and not b.stalled.any()
    b2 = sample_exits(_unit_chain(h=2.0 ** -4), D, [0.0], 100,
                      rng.substream(1))
    assert b2.n == 100
    with pytest.raises(CapabilityError):
        sample_exits(SdeStable(1.0, 1), D, [0.0], 10, rng.substream(2))
    with pytest.raises(CapabilityError):
        sample_exits(GeometricStable(1.0, 1), D, [0.0], 10, rng.substream(3))


def test_model_validation():
    with pytest.raises(ConfigError):
        IsotropicStable(2.0, 1)
    with pytest.raises(ConfigError):
        IsotropicStable(1.0, 0)
    with pytest.raises(ConfigError):
        SdeStable(1.0, 1, dt=-1.0)
    with pytest.raises(ConfigError):
        SdeStable(1.0, 1, sigma_bounds=(2.0, 1.0))
    with pytest.raises(ConfigError):
        GeometricStable(0.0, 1)


def test_poisson_kernel_constant_known_value():
    # d = 1, alpha = 1: C = 1/pi
    assert poisson_kernel_constant(1, 1.0) == pytest.approx(1.0 / np.pi)
    # mean-exit constant: C_E(1, 1) = 1, so E_0[tau_(-1,1)] = 1
    assert mean_exit_constant(1, 1.0) == pytest.approx(1.0)
    assert expected_ball_exit_time(1, 1.0, 1.0, 0.0) == pytest.approx(1.0)
