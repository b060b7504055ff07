"""Samplers for pure-jump Markov processes.

The workhorse is the exact exit law of a ball for the isotropic
alpha-stable process: from the center, the exit radius is Beta-distributed
after the substitution B = 1/|y|^2, and the exit direction is uniform.
Composing exact ball exits inside a domain ("walk on balls") yields exact
samples of the domain exit position, plus an unbiased accumulator for the
mean exit time via the closed-form expected ball-exit time.

Approximation-grade models (lattice chain, Euler scheme for stable SDEs,
gamma-subordinated stable) cover variable coefficients and non-power
scale functions; their bias knobs (pitch, cutoff, time step) are exposed,
not certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .domains import Domain
from .errors import CapabilityError, ConfigError, DomainError, SamplerStallError
from .kernel import (JumpKernelSpec, isotropic_stable_kernel, sphere_area,
                     tail_mass)
from .rng import RngStream

DEFAULT_MAX_STEPS = 10 ** 6


# ===================================================================== #
# closed-form constants for the isotropic stable process
# ===================================================================== #

def poisson_kernel_constant(d: int, alpha: float) -> float:
    """Normalizing constant of the unit-ball exit density.

    The exit density from x (|x| < 1) is
    C(d, a) * ((1 - |x|^2) / (|y|^2 - 1))^{a/2} * |y - x|^{-d} on |y| > 1.
    """
    return math.gamma(d / 2.0) * math.sin(math.pi * alpha / 2.0) \
        / math.pi ** (d / 2.0 + 1.0)


def mean_exit_constant(d: int, alpha: float) -> float:
    """E_x[tau_{B(0,r)}] = C_E(d,a) (r^2 - |x|^2)^{a/2}; this is C_E."""
    return math.gamma(d / 2.0) / (2.0 ** alpha * math.gamma(1.0 + alpha / 2.0)
                                  * math.gamma((d + alpha) / 2.0))


def expected_ball_exit_time(d: int, alpha: float, r: float,
                            x_dist: float = 0.0) -> float:
    return mean_exit_constant(d, alpha) * (r * r - x_dist * x_dist) ** (alpha / 2.0)


# ===================================================================== #
# exact ball exits
# ===================================================================== #

def _unit_directions(d: int, n: int, g: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.where(g.random(n) < 0.5, -1.0, 1.0)[:, None]
    v = g.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def ball_exit_centered(alpha: float, d: int, n: int,
                       g: np.random.Generator) -> np.ndarray:
    """n exact unit-ball exit points from the center, shape (n, d).

    The exit radius is 1/sqrt(B) with B ~ Beta(a/2, 1 - a/2); the
    direction is uniform by rotational symmetry.
    """
    b = g.beta(alpha / 2.0, 1.0 - alpha / 2.0, size=n)
    radii = 1.0 / np.sqrt(b)
    return radii[:, None] * _unit_directions(d, n, g)


def ball_exit_isotropic(alpha: float, d: int, x_rel, rng: RngStream,
                        max_tries: int = 10 ** 6) -> np.ndarray:
    """One exact exit point of the unit ball started from x_rel (|x_rel| < 1).

    Centered starts sample the radial law directly; off-center starts use
    rejection against the centered proposal with acceptance probability
    ((1 - |x|) |y| / |y - x|)^d, which is bounded by 1 because
    |y - x| >= |y|(1 - |x|) whenever |y| >= 1.
    """
    if not 0 < alpha < 2:
        raise DomainError("alpha must lie in (0, 2)")
    x = np.atleast_1d(np.asarray(x_rel, dtype=float))
    if x.shape != (d,):
        raise DomainError(f"start point must have dimension {d}")
    s = float(np.linalg.norm(x))
    if s >= 1.0:
        raise DomainError("start point must lie strictly inside the unit ball")
    g = rng.generator()
    if s == 0.0:
        return ball_exit_centered(alpha, d, 1, g)[0]
    tried = 0
    batch = 64
    while tried < max_tries:
        y = ball_exit_centered(alpha, d, batch, g)
        accept = ((1.0 - s) * np.linalg.norm(y, axis=1)
                  / np.linalg.norm(y - x, axis=1)) ** d
        u = g.random(batch)
        hits = np.nonzero(u < accept)[0]
        if len(hits):
            return y[hits[0]]
        tried += batch
    raise SamplerStallError(
        f"off-center ball-exit rejection exceeded {max_tries} proposals "
        f"at |x| = {s:.6f}", n_stalled=1, n_total=1)


# ===================================================================== #
# process models
# ===================================================================== #

class ProcessModel:
    """Base class for the simulable model variants."""

    exactness: str

    @property
    def kernel(self) -> JumpKernelSpec:
        raise NotImplementedError


@dataclass(frozen=True)
class IsotropicStable(ProcessModel):
    """Rotation-invariant alpha-stable process; exact ball-exit law."""

    alpha: float
    dim: int
    exactness = "exact-exit-law"

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ConfigError("alpha must lie in (0, 2)")
        if self.dim < 1:
            raise ConfigError("dimension must be >= 1")

    @property
    def kernel(self) -> JumpKernelSpec:
        return isotropic_stable_kernel(self.dim, self.alpha)


@dataclass(frozen=True)
class StableLikeChain(ProcessModel):
    """Continuous-time lattice chain with rates h^d j(x, y - x) within R_c.

    Jumps beyond the cutoff are aggregated into a single far jump drawn
    from the normalized radial tail, preserving the total tail mass
    exactly for constant coefficients.
    """

    kernel_spec: JumpKernelSpec
    h: float
    r_cut: float
    lattice_offset: float = 0.0   # lattice is h * (Z^d + offset) per axis
    exactness = "weak-order-approximation"

    def __post_init__(self):
        if not 0 < self.h < self.r_cut:
            raise ConfigError("need 0 < pitch h < cutoff R_c")
        if not 0 <= self.lattice_offset < 1:
            raise ConfigError("lattice offset must lie in [0, 1)")
        ks = self.kernel_spec
        alpha = ks.scale.params.get("alpha")
        if alpha is not None and alpha >= 1.0 and not ks.symmetric_in_z:
            raise ConfigError(
                "chain models with alpha >= 1 require symmetric-in-z "
                "coefficients (no compensator is simulated)")
        n_off = (2.0 * self.r_cut / self.h + 1.0) ** ks.dim
        if n_off > 5e6:
            raise ConfigError(
                f"lattice stencil would hold ~{n_off:.2g} offsets; "
                f"increase h or decrease R_c")

    @property
    def kernel(self) -> JumpKernelSpec:
        return self.kernel_spec

    @cached_property
    def tables(self) -> "_ChainTables":
        return _build_chain_tables(self)


def tempered_chain(kernel_spec: JumpKernelSpec, h: float,
                   r_cut: float) -> StableLikeChain:
    """Lattice chain for a kernel with an exponential temper factor."""
    if kernel_spec.temper is None:
        raise ConfigError("tempered chain needs a kernel with a temper factor")
    return StableLikeChain(kernel_spec, h, r_cut)


@dataclass(frozen=True)
class SdeStable(ProcessModel):
    """Euler scheme for dX = sigma(X-) dZ with Z isotropic alpha-stable.

    Increments of Z are exact (subordinated Gaussian), so for constant
    sigma the scheme is exact in law at the monitoring times.
    """

    alpha: float
    dim: int
    dt: float = 1e-2
    sigma: object = None               # callable x -> (d,d) matrix, or None
    sigma_bounds: tuple = (1.0, 1.0)   # declared ellipticity bounds
    exactness = "weak-order-approximation"

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ConfigError("alpha must lie in (0, 2)")
        if not self.dt > 0:
            raise ConfigError("time step must be positive")
        lo, hi = self.sigma_bounds
        if not 0 < lo <= hi:
            raise ConfigError("ellipticity bounds must satisfy 0 < lo <= hi")

    @property
    def kernel(self) -> JumpKernelSpec:
        return isotropic_stable_kernel(self.dim, self.alpha)


@dataclass(frozen=True)
class GeometricStable(ProcessModel):
    """Stable process run at an independent Gamma-process clock.

    Matches the jump density comparable to r^{-d} min(1, r^{-alpha});
    approximation-grade only — exactness of exit laws is not claimed.
    """

    alpha: float
    dim: int
    exactness = "weak-order-approximation"

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ConfigError("alpha must lie in (0, 2)")

    @property
    def kernel(self) -> JumpKernelSpec:
        from .kernel import geometric_stable_kernel
        return geometric_stable_kernel(self.dim, self.alpha)


# ===================================================================== #
# walk on balls
# ===================================================================== #

@dataclass
class BatchExit:
    """Vectorized exit samples: arrays indexed by path."""

    y: np.ndarray          # (n, d) exit points
    w: np.ndarray          # (n,) accumulated expected-time weights
    steps: np.ndarray      # (n,) ball-exit counts
    stalled: np.ndarray    # (n,) bool: hit the step budget before exiting

    @property
    def n(self) -> int:
        return len(self.w)


@dataclass(frozen=True)
class ExitSample:
    """One exit sample: position, time weight, and bookkeeping."""

    y: np.ndarray
    w: float
    steps: int
    via_jump: bool = True


def walk_exit_batch_indexed(alpha: float, d: int, contains, dist_lb, starts,
                            rho: float, rng: RngStream,
                            max_steps: int = DEFAULT_MAX_STEPS) -> BatchExit:
    """Walk-on-balls exits where the geometry may differ per path.

    `contains(pts, idx)` and `dist_lb(pts, idx)` receive the path indices
    alongside the points, so callers can close over per-path geometry
    (e.g. a different truncating ball for each walker).
    """
    if not 0 < rho <= 1:
        raise DomainError("ball factor rho must lie in (0, 1]")
    x = np.array(np.atleast_2d(starts), dtype=float)
    n = x.shape[0]
    all_idx = np.arange(n)
    if not np.all(contains(x, all_idx)):
        raise DomainError("walk exit: a start point lies outside the domain")
    g = rng.generator()
    y = np.empty_like(x)
    w = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    stalled = np.zeros(n, dtype=bool)
    ce = mean_exit_constant(d, alpha)
    active = all_idx
    for _ in range(max_steps):
        if len(active) == 0:
            break
        radii = rho * np.asarray(dist_lb(x[active], active), dtype=float)
        w[active] += ce * radii ** alpha
        z = ball_exit_centered(alpha, d, len(active), g)
        x[active] += radii[:, None] * z
        steps[active] += 1
        inside = contains(x[active], active)
        done = active[~inside]
        y[done] = x[done]
        active = active[inside]
    if len(active):
        stalled[active] = True
        y[active] = x[active]
    return BatchExit(y=y, w=w, steps=steps, stalled=stalled)


def walk_exit_batch(alpha: float, d: int, contains, dist_lb, starts,
                    rho: float, rng: RngStream,
                    max_steps: int = DEFAULT_MAX_STEPS) -> BatchExit:
    """Walk-on-balls exits for many starting points at once.

    `contains` and `dist_lb` are vectorized callables over (m, d) point
    arrays; each active walker exits the ball B(x_k, rho * dist_lb(x_k))
    exactly and accumulates the closed-form expected ball-exit time.
    """
    return walk_exit_batch_indexed(alpha, d,
                                   lambda pts, idx: contains(pts),
                                   lambda pts, idx: dist_lb(pts),
                                   starts, rho, rng, max_steps)


def walk_on_balls_exit(model: IsotropicStable, D: Domain, x, rho: float,
                       rng: RngStream,
                       max_steps: int = DEFAULT_MAX_STEPS) -> ExitSample:
    """Exact sample of the exit position of D from x, with time weight."""
    if not isinstance(model, IsotropicStable):
        raise CapabilityError("walk on balls requires the exact-exit-law model")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not D.contains(x):
        raise DomainError("walk_on_balls_exit: start point outside the domain")
    batch = walk_exit_batch(model.alpha, model.dim, D.contains, D.dist_lb,
                            x[None, :], rho, rng, max_steps)
    if batch.stalled[0]:
        raise SamplerStallError(
            f"walk on balls exceeded {max_steps} steps",
            n_stalled=1, n_total=1, partial=batch)
    return ExitSample(y=batch.y[0], w=float(batch.w[0]),
                      steps=int(batch.steps[0]))


# ===================================================================== #
# lattice chain
# ===================================================================== #

@dataclass
class _ChainTables:
    offsets: np.ndarray       # (m, d) lattice displacement vectors
    rates: np.ndarray         # (m,) rates for constant coefficients
    far_rate: float
    total_rate: float
    near_cdf: np.ndarray      # (m,) cumulative jump probabilities (near part)
    far_radius_grid: np.ndarray
    far_radius_cdf: np.ndarray


def _lattice_offsets(d: int, h: float, r_cut: float) -> np.ndarray:
    k_max = int(math.floor(r_cut / h))
    axes = [np.arange(-k_max, k_max + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    v = grid * h
    norms = np.linalg.norm(v, axis=1)
    keep = (norms > 0) & (norms <= r_cut)
    return v[keep]


def _build_chain_tables(model: StableLikeChain) -> _ChainTables:
    ks = model.kernel_spec
    offsets = _lattice_offsets(ks.dim, model.h, model.r_cut)
    s = np.linalg.norm(offsets, axis=1)
    kappa = float(ks.kappa) if ks.isotropic else 1.0
    rates = kappa * model.h ** ks.dim * np.asarray(ks.radial_profile(s))
    # aggregated far jump: exact tail mass beyond the cutoff
    unit = JumpKernelSpec(dim=ks.dim, scale=ks.scale, kappa=kappa,
                          kappa_lo=kappa, kappa_hi=kappa, temper=ks.temper)
    far_rate = tail_mass(unit, np.zeros(ks.dim), model.r_cut).value
    total = float(rates.sum()) + far_rate
    if total <= 0:
        raise ConfigError("chain has zero total jump rate")
    near_cdf = np.cumsum(rates) / total

    # inverse-CDF table of the far radius: density ~ 1/(s phi(s) T(s))
    u = np.linspace(math.log(model.r_cut),
                    math.log(model.r_cut) + 10 * math.log(10.0), 4097)
    sg = np.exp(u)
    dens = 1.0 / (ks.scale(sg) * ks.temper_factor(sg))  # f(e^u) e^u du
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1])
                                           * np.diff(u))])
    cdf /= cdf[-1]
    return _ChainTables(offsets=offsets, rates=rates, far_rate=far_rate,
                        total_rate=total, near_cdf=near_cdf,
                        far_radius_grid=sg, far_radius_cdf=cdf)


def _snap(z: np.ndarray, h: float, offset: float = 0.0) -> np.ndarray:
    return (np.round(z / h - offset) + offset) * h


def _far_jumps(tables: _ChainTables, d: int, h: float, n: int,
               g: np.random.Generator) -> np.ndarray:
    radii = np.interp(g.random(n), tables.far_radius_cdf,
                      tables.far_radius_grid)
    z = radii[:, None] * _unit_directions(d, n, g)
    return _snap(z, h)


def chain_step(model: StableLikeChain, x, rng: RngStream):
    """One transition of the lattice chain: (next point, holding time).

    Works for variable coefficients by evaluating kappa(x, .) on the
    stencil; constant-coefficient rates come from the cached tables.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ks = model.kernel_spec
    t = model.tables
    g = rng.generator()
    if ks.isotropic:
        rates, far_rate = t.rates, t.far_rate
    else:
        s = np.linalg.norm(t.offsets, axis=1)
        kap = ks.kappa_at(np.broadcast_to(x, t.offsets.shape), t.offsets)
        rates = kap * model.h ** ks.dim * np.asarray(ks.radial_profile(s))
        far_rate = t.far_rate  # constant-envelope aggregate (documented bias)
    total = float(rates.sum()) + far_rate
    if total <= 0:
        raise ConfigError("chain has zero total jump rate at this point")
    holding = g.exponential(1.0 / total)
    if g.random() < far_rate / total:
        z = _far_jumps(t, ks.dim, model.h, 1, g)[0]
    else:
        k = int(np.searchsorted(np.cumsum(rates) / rates.sum(), g.random()))
        k = min(k, len(rates) - 1)
        z = t.offsets[k]
    return x + z, holding


def chain_exit_batch(model: StableLikeChain, D: Domain, starts,
                     rng: RngStream, max_steps: int = DEFAULT_MAX_STEPS,
                     t_max: float | None = None) -> BatchExit:
    """Vectorized chain exits from D (constant coefficients only).

    Weights accumulate the expected holding time 1/total_rate per step,
    the same conditional-expectation trick as the walk on balls.  With
    `t_max` set, paths additionally stop once their (random, exponential)
    clock passes t_max; such paths report y = last position inside D and
    stalled = False, letting callers estimate time marginals.
    """
    if not model.kernel_spec.isotropic:
        raise CapabilityError(
            "vectorized chain exits require constant coefficients; "
            "use chain_step for variable kappa")
    t = model.tables
    g = rng.generator()
    x = _snap(np.array(np.atleast_2d(starts), dtype=float), model.h,
              model.lattice_offset)
    n, d = x.shape
    if not np.all(D.contains(x)):
        raise DomainError("chain_exit_batch: a start point lies outside D")
    p_far = t.far_rate / t.total_rate
    expected_hold = 1.0 / t.total_rate

    y = np.empty_like(x)
    w = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    stalled = np.zeros(n, dtype=bool)
    clock = np.zeros(n) if t_max is not None else None
    active = np.arange(n)
    for _ in range(max_steps):
        if len(active) == 0:
            break
        m = len(active)
        w[active] += expected_hold
        if t_max is not None:
            clock[active] += g.exponential(expected_hold, m)
        u = g.random(m)
        far = u < p_far
        z = np.empty((m, d))
        if far.any():
            z[far] = _far_jumps(t, d, model.h, int(far.sum()), g)
        near = ~far
        if near.any():
            v = (u[near] - p_far) / (1.0 - p_far)
            idx = np.minimum(np.searchsorted(t.near_cdf / t.near_cdf[-1], v),
                             len(t.offsets) - 1)
            z[near] = t.offsets[idx]
        x[active] += z
        steps[active] += 1
        inside = D.contains(x[active])
        if t_max is not None:
            timed_out = inside & (clock[active] > t_max)
            inside = inside & ~timed_out
            done = active[~inside]
        else:
            done = active[~inside]
        y[done] = x[done]
        active = active[inside]
    if len(active):
        stalled[active] = True
        y[active] = x[active]
    return BatchExit(y=y, w=w, steps=steps, stalled=stalled)


# ===================================================================== #
# exact stable increments and the Euler scheme
# ===================================================================== #

def one_sided_stable(a: float, n: int, g: np.random.Generator) -> np.ndarray:
    """Positive stable variates with Laplace transform exp(-lambda^a), 0<a<1.

    Kanter's representation: S = (A(theta)/W)^{(1-a)/a} with
    A(theta) = (sin(a theta)^a sin((1-a) theta)^{1-a} / sin theta)^{1/(1-a)},
    theta uniform on (0, pi) and W unit exponential.
    """
    if not 0 < a < 1:
        raise DomainError("one-sided stable index must lie in (0, 1)")
    theta = g.uniform(0.0, math.pi, n)
    wexp = g.standard_exponential(n)
    log_a = (a * np.log(np.sin(a * theta))
             + (1.0 - a) * np.log(np.sin((1.0 - a) * theta))
             - np.log(np.sin(theta))) / (1.0 - a)
    return np.exp((1.0 - a) / a * (log_a - np.log(wexp)))


def stable_increment(alpha: float, d: int, dt: float, n: int,
                     g: np.random.Generator) -> np.ndarray:
    """Exact isotropic alpha-stable increments over time dt, shape (n, d).

    Subordinated Gaussian: sqrt(2 S) N(0, I) with S positive
    (alpha/2)-stable scaled by dt^{2/alpha}, so the characteristic
    function is exp(-dt |xi|^alpha).
    """
    s = dt ** (2.0 / alpha) * one_sided_stable(alpha / 2.0, n, g)
    return np.sqrt(2.0 * s)[:, None] * g.standard_normal((n, d))


def sde_step(model: SdeStable, x, dt: float | None = None,
             rng: RngStream | None = None,
             g: np.random.Generator | None = None) -> np.ndarray:
    """One Euler step x' = x + sigma(x) dZ with an exact stable increment."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dt = model.dt if dt is None else dt
    if g is None:
        g = (rng or RngStream(0)).generator()
    dz = stable_increment(model.alpha, model.dim, dt, 1, g)[0]
    if model.sigma is None:
        return x + dz
    sig = np.asarray(model.sigma(x), dtype=float)
    sv = np.linalg.svd(sig, compute_uv=False)
    lo, hi = model.sigma_bounds
    if sv.min() < lo * (1 - 1e-9) or sv.max() > hi * (1 + 1e-9):
        raise ConfigError(
            f"sigma({x.tolist()}) has singular values outside the declared "
            f"ellipticity bounds [{lo}, {hi}]")
    return x + sig @ dz


def _sde_paths_exit_indicator(model: SdeStable, x0, r: float, t: float,
                              n: int, n_steps: int,
                              g: np.random.Generator) -> np.ndarray:
    """Indicator of leaving B(x0, r) by time t, monitored at n_steps times."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    dt = t / n_steps
    x = np.tile(x0, (n, 1))
    exited = np.zeros(n, dtype=bool)
    lo, hi = model.sigma_bounds
    for _ in range(n_steps):
        alive = ~exited
        m = int(alive.sum())
        if m == 0:
            break
        dz = stable_increment(model.alpha, model.dim, dt, m, g)
        if model.sigma is None:
            x[alive] += dz
        else:
            xa = x[alive]
            for i, k in enumerate(np.nonzero(alive)[0]):
                sig = np.asarray(model.sigma(xa[i]), dtype=float)
                sv = np.linalg.svd(sig, compute_uv=False)
                if sv.min() < lo * (1 - 1e-9) or sv.max() > hi * (1 + 1e-9):
                    raise ConfigError("sigma violates the ellipticity bounds")
                x[k] = x[k] + sig @ dz[i]
        exited |= np.linalg.norm(x - x0, axis=1) > r
    return exited


def geometric_stable_increment(alpha: float, d: int, dt: float, n: int,
                               g: np.random.Generator) -> np.ndarray:
    """Increments of the gamma-subordinated stable process over dt."""
    gam = g.gamma(dt, 1.0, n)
    s = gam ** (2.0 / alpha) * one_sided_stable(alpha / 2.0, n, g)
    return np.sqrt(2.0 * s)[:, None] * g.standard_normal((n, d))


# ===================================================================== #
# unified exit sampling and survival probabilities
# ===================================================================== #

def sample_exits(model: ProcessModel, D: Domain, x, n: int, rng: RngStream,
                 rho: float = 0.5,
                 max_steps: int = DEFAULT_MAX_STEPS) -> BatchExit:
    """n exit samples of D from x under the given model.

    Exact for IsotropicStable (walk on balls); approximation-grade for
    the lattice chain.  Other variants carry no exit-law sampler.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    starts = np.tile(x, (n, 1))
    if isinstance(model, IsotropicStable):
        return walk_exit_batch(model.alpha, model.dim, D.contains, D.dist_lb,
                               starts, rho, rng, max_steps)
    if isinstance(model, StableLikeChain):
        return chain_exit_batch(model, D, starts, rng, max_steps)
    raise CapabilityError(
        f"{type(model).__name__} provides no exit-law sampler")


def survival_scaling_reference(alpha: float, r: float, t: float) -> tuple:
    """(r', t') with P_0(tau_{B(0,r)} < t) = P_0(tau_{B(0,1)} < t')."""
    return 1.0, t / r ** alpha


def survival_prob_ball(model: ProcessModel, x, r: float, t: float, n: int,
                       rng: RngStream, n_steps: int = 64,
                       sde_fallback: bool = False):
    """Estimate of P_x(tau_{B(x,r)} < t) with binomial uncertainty.

    Time marginals exist for the chain, SDE, and subordinated models.
    The exact-exit-law model carries no clock; with `sde_fallback` it is
    simulated through the identity-coefficient Euler scheme (exact
    increments, discrete monitoring at n_steps times).
    """
    from .exitstats import Estimate  # local import: exitstats builds on sampler

    if not (r > 0 and t > 0 and n >= 1):
        raise DomainError("survival_prob_ball needs r > 0, t > 0, n >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = rng.generator()

    if isinstance(model, IsotropicStable):
        if not sde_fallback:
            raise CapabilityError(
                "the exact-exit-law model has no time marginal; enable the "
                "identity-coefficient SDE fallback to estimate survival")
        model = SdeStable(alpha=model.alpha, dim=model.dim, dt=t / n_steps)

    if isinstance(model, SdeStable):
        exited = _sde_paths_exit_indicator(model, x, r, t, n, n_steps, g)
    elif isinstance(model, GeometricStable):
        dt = t / n_steps
        pos = np.tile(x, (n, 1))
        exited = np.zeros(n, dtype=bool)
        for _ in range(n_steps):
            alive = ~exited
            m = int(alive.sum())
            if m == 0:
                break
            pos[alive] += geometric_stable_increment(model.alpha, model.dim,
                                                     dt, m, g)
            exited |= np.linalg.norm(pos - x, axis=1) > r
    elif isinstance(model, StableLikeChain):
        from .domains import Ball
        batch = chain_exit_batch(model, Ball(x, r), np.tile(x, (n, 1)),
                                 rng, t_max=t)
        if batch.stalled.any():
            raise SamplerStallError("chain survival run hit the step budget",
                                    n_stalled=int(batch.stalled.sum()),
                                    n_total=n, partial=batch)
        exited = ~np.asarray(Ball(x, r).contains(batch.y))
    else:
        raise CapabilityError(
            f"{type(model).__name__} provides no time marginal")

    return Estimate.binomial(int(exited.sum()), n,
                             method="mc-binomial-survival")
