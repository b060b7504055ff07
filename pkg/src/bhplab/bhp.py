"""Boundary Harnack verification harness.

Builds regular harmonic functions from boundary data supported far from
a boundary point, scans their pairwise ratios over interior grids,
checks the approximate factorization of such functions into a mean exit
time and a nonlocal boundary integral, and instruments the layered
box/chain constructions used to control exit probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .domains import Ball, Domain, Intersection
from .errors import ConfigError, DomainError, UnderpoweredError
from .exitstats import (ESCALATION_CAP, TARGET_REL_STDERR, Estimate,
                        gather_exits, mean_exit_time)
from .kernel import boundary_integral
from .rng import RngStream
from .sampler import IsotropicStable, ProcessModel, walk_exit_batch_indexed

PAIR_GATE_REL_STDERR = 0.05   # per-estimate precision gate for ratio pairs
DELTA_FLOOR_FACTOR = 1.0 / 64.0


# ===================================================================== #
# boundary data
# ===================================================================== #

@dataclass(frozen=True)
class BoundaryData:
    """Nonnegative boundary data g vanishing inside B(xi, support_radius).

    The induced function h(x) = E_x[g(exit position of D & B(xi, 2r))] is
    regular harmonic in the truncated set and vanishes outside D near xi
    whenever support_radius >= 2r.
    """

    fn: object              # vectorized y -> values >= 0
    support_radius: float   # g == 0 on B(xi, support_radius)
    xi: np.ndarray          # the boundary point the support is anchored to
    sup_bound: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi",
                           np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if not self.support_radius > 0:
            raise ConfigError("boundary data needs a positive support radius")
        if not self.sup_bound > 0:
            raise ConfigError("boundary data needs a positive sup bound")

    def __call__(self, y):
        return np.asarray(self.fn(np.atleast_2d(np.asarray(y, dtype=float))),
                          dtype=float)

    def validate(self, r: float, rng: RngStream | None = None,
                 probes: int = 10_000) -> None:
        """Probe-test that g vanishes on B(xi, 2r) and is nonnegative."""
        if self.support_radius < 2.0 * r * (1 - 1e-12):
            raise ConfigError(
                f"boundary data support starts at {self.support_radius:g} "
                f"but must vanish on B(xi, {2 * r:g})")
        g = (rng or RngStream(0)).generator()
        d = self.xi.shape[0]
        u = g.standard_normal((probes, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pts = self.xi + (2.0 * r) * g.random(probes)[:, None] ** (1.0 / d) * u
        vals = self(pts)
        if np.any(vals != 0.0):
            raise ConfigError("boundary data does not vanish on B(xi, 2r)")
        far = self.xi + self.support_radius * 3.0 * u
        if np.any(self(far) < 0.0):
            raise ConfigError("boundary data must be nonnegative")


def far_field_indicator(xi, r_min: float, predicate=None) -> BoundaryData:
    """Indicator of {|y - xi| > r_min} intersected with an optional predicate."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))

    def fn(y):
        far = np.linalg.norm(y - xi, axis=1) > r_min
        if predicate is None:
            return far.astype(float)
        return (far & np.asarray(predicate(y), dtype=bool)).astype(float)

    return BoundaryData(fn=fn, support_radius=r_min, xi=xi)


# ===================================================================== #
# regular harmonic evaluation
# ===================================================================== #

def eval_harmonic(model: ProcessModel, D: Domain, xi, r: float,
                  g: BoundaryData, x, n: int, rng: RngStream,
                  workers: int = 1, rho: float = 0.5) -> Estimate:
    """h(x) = E_x[g(X at the exit of D & B(xi, 2r))], by direct MC."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g.validate(r)
    if not D.contains(x) or np.linalg.norm(x - xi) >= 2.0 * r:
        raise DomainError("evaluation point must lie in D & B(xi, 2r)")
    U = D.truncate(xi, 2.0 * r)
    batch, warnings = gather_exits(model, U, x, n, rng, workers, rho)
    vals = g(batch.y)
    est = Estimate.from_samples(vals, method="mc-mean-harmonic")
    est.warnings.extend(warnings)
    if not np.any(vals > 0):
        est.warnings.append(
            "degenerate data: no exit sample reached the support of g")
    return est


def _crn_pair(model: ProcessModel, D: Domain, xi, r: float,
              g1: BoundaryData, g2: BoundaryData, x, rng: RngStream,
              n0: int, cap: int, target: float,
              workers: int = 1, rho: float = 0.5):
    """Common-random-number estimates of (h1(x), h2(x)).

    Both boundary functions are averaged over the *same* exit samples;
    batches escalate until both relative standard errors beat the target
    or the sample cap is reached (estimates then marked underpowered).
    """
    U = D.truncate(np.asarray(xi, dtype=float), 2.0 * r)
    s1 = s2 = q1 = q2 = 0.0
    total = 0
    n = n0
    k = 0
    while True:
        batch, _ = gather_exits(model, U, x, n, rng.substream(k), workers, rho)
        k += 1
        v1 = g1(batch.y)
        v2 = g2(batch.y)
        s1 += v1.sum(); q1 += (v1 * v1).sum()
        s2 += v2.sum(); q2 += (v2 * v2).sum()
        total += batch.n
        e1 = Estimate.from_moments(s1, q1, total, method="mc-mean-harmonic")
        e2 = Estimate.from_moments(s2, q2, total, method="mc-mean-harmonic")
        if max(e1.rel_stderr, e2.rel_stderr) < target:
            return e1, e2
        if total >= cap:
            e1.underpowered = e2.underpowered = True
            return e1, e2
        n = min(total, cap - total)


# ===================================================================== #
# interior grids
# ===================================================================== #

def interior_grid(D: Domain, xi, radius: float, size: int,
                  delta_floor: float, rng: RngStream,
                  max_tries: int = 1_000_000) -> np.ndarray:
    """size points of D & B(xi, radius) with dist_lb >= delta_floor."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = xi.shape[0]
    g = rng.generator()
    pts = []
    tried = 0
    while len(pts) < size and tried < max_tries:
        m = 4 * size
        u = g.standard_normal((m, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        cand = xi + radius * g.random(m)[:, None] ** (1.0 / d) * u
        inside = np.asarray(D.contains(cand), dtype=bool)
        cand = cand[inside]
        if len(cand):
            deep = np.asarray(D.dist_lb(cand), dtype=float) >= delta_floor
            pts.extend(cand[deep][: size - len(pts)])
        tried += m
    if len(pts) < size:
        raise DomainError(
            f"could not place {size} grid points with clearance >= "
            f"{delta_floor:g} in the truncated set (found {len(pts)})")
    return np.asarray(pts)


# ===================================================================== #
# BHP ratio scan
# ===================================================================== #

@dataclass
class BhpReport:
    """Ratio-scan result at one radius."""

    xi: np.ndarray
    r: float
    kappa: float
    grid: np.ndarray
    h1: list
    h2: list
    ratio: np.ndarray          # R[i, j] = h1_i h2_j / (h1_j h2_i)
    powered: np.ndarray        # bool per grid point: both estimates precise
    c_hat: float
    excluded_pairs: int
    n_total: int = 0
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi.tolist(), "r": self.r, "kappa": self.kappa,
            "grid": self.grid.tolist(),
            "h1": [e.to_dict() for e in self.h1],
            "h2": [e.to_dict() for e in self.h2],
            "ratio": self.ratio.tolist(),
            "powered": self.powered.tolist(),
            "c_hat": self.c_hat,
            "excluded_pairs": self.excluded_pairs,
            "n_total": self.n_total,
            "warnings": list(self.warnings),
        }


def _verified_radius(model: ProcessModel) -> float:
    """Largest radius at which the scan will run for this model."""
    if model.kernel.temper is not None:
        return 1.0
    return math.inf


def bhp_scan(model: ProcessModel, D: Domain, xi, r: float, kappa: float,
             g1: BoundaryData, g2: BoundaryData, grid_size: int, n: int,
             rng: RngStream, workers: int = 1, rho: float = 0.5,
             cap: int = ESCALATION_CAP,
             target: float = TARGET_REL_STDERR,
             gate: float = PAIR_GATE_REL_STDERR,
             grid: np.ndarray | None = None) -> BhpReport:
    """Scan h1(x) h2(y) / (h1(y) h2(x)) over a grid in D & B(xi, kappa r).

    c_hat is the maximum ratio over pairs whose four estimates all pass
    the precision gate; excluded pairs are counted, and an all-excluded
    scan raises an underpowered error.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if not 0 < kappa < 2:
        raise ConfigError("the scan fraction kappa must lie in (0, 2)")
    r_ok = _verified_radius(model)
    if r > r_ok:
        raise ConfigError(
            f"radius {r:g} exceeds this model's verified radius {r_ok:g}")
    g1.validate(r)
    g2.validate(r)

    if grid is None:
        grid = interior_grid(D, xi, kappa * r, grid_size,
                             DELTA_FLOOR_FACTOR * kappa * r, rng.substream(0))
    else:
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        if not np.all(D.contains(grid)):
            raise DomainError("a supplied grid point lies outside the domain")
    h1, h2 = [], []
    n_total = 0
    for i, x in enumerate(grid):
        e1, e2 = _crn_pair(model, D, xi, r, g1, g2, x,
                           rng.substream(1 + i), n0=n, cap=cap,
                           target=target, workers=workers, rho=rho)
        h1.append(e1)
        h2.append(e2)
        n_total += e1.n

    v1 = np.array([e.value for e in h1])
    v2 = np.array([e.value for e in h2])
    powered = np.array([e1.rel_stderr < gate and e2.rel_stderr < gate
                        for e1, e2 in zip(h1, h2)])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (v1[:, None] * v2[None, :]) / (v1[None, :] * v2[:, None])
    m = len(grid)
    pair_ok = powered[:, None] & powered[None, :]
    np.fill_diagonal(pair_ok, False)
    excluded = int((m * m - m - pair_ok.sum()) // 1)
    if not pair_ok.any():
        raise UnderpoweredError(
            "every grid pair failed the precision gate; increase n or cap")
    c_hat = float(np.nanmax(ratio[pair_ok]))
    return BhpReport(xi=xi, r=r, kappa=kappa, grid=grid, h1=h1, h2=h2,
                     ratio=ratio, powered=powered, c_hat=c_hat,
                     excluded_pairs=excluded, n_total=n_total)


def bhp_scan_series(model: ProcessModel, D: Domain, xi, r_series, kappa: float,
                    g_factory, grid_size: int, n: int, rng: RngStream,
                    grid_relative: bool = True, **kwargs) -> dict:
    """Run bhp_scan over a radius series; g_factory(r) -> (g1, g2).

    With grid_relative (the default) one grid is drawn at the first
    radius and rescaled about xi for the others, so that on sets
    invariant under dilation about xi the radii see congruent grids and
    the c_hat series varies by MC noise only.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    reports = []
    base_grid = None
    r0 = float(r_series[0])
    for k, r in enumerate(r_series):
        g1, g2 = g_factory(float(r))
        grid = None
        if grid_relative and base_grid is not None:
            grid = xi_arr + (float(r) / r0) * (base_grid - xi_arr)
        reports.append(bhp_scan(model, D, xi, float(r), kappa, g1, g2,
                                grid_size, n, rng.substream(k), grid=grid,
                                **kwargs))
        if base_grid is None:
            base_grid = reports[0].grid
    series = [rep.c_hat for rep in reports]
    return {"r_series": [float(r) for r in r_series],
            "c_hat_series": series,
            "series_spread": max(series) / min(series),
            "reports": reports}


# ===================================================================== #
# approximate factorization
# ===================================================================== #

def factorization_check(model: ProcessModel, D: Domain, xi, r: float,
                        c1: float, c2: float, c3: float, g: BoundaryData,
                        grid_size: int, n: int, rng: RngStream,
                        workers: int = 1, rho: float = 0.5,
                        cap: int = ESCALATION_CAP,
                        target: float = TARGET_REL_STDERR,
                        gate: float = PAIR_GATE_REL_STDERR) -> dict:
    """rho(x) = h(x) / (E_x[tau of D & B(x, c1 r)] * int g dJ(xi, .)).

    The integral runs over |y - xi| >= c2 r; since g vanishes on
    B(xi, 2r) it equals the boundary integral of the data itself.
    Reports rho per powered grid point and the max/min band.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if not (0 < c1 and 0 < c3 and c1 + c3 < c2 < 2.0):
        raise ConfigError("factorization fractions need c1 + c3 < c2 < 2")
    g.validate(r)
    J = model.kernel
    integral = boundary_integral(J, xi, g.fn, r_min=c2 * r)
    if not integral > 0:
        raise DomainError("boundary integral of g vanishes; rho is undefined")

    grid = interior_grid(D, xi, c3 * r, grid_size,
                         DELTA_FLOOR_FACTOR * c3 * r, rng.substream(0))
    h_est, e_est, rho_vals, powered = [], [], [], []
    for i, x in enumerate(grid):
        sub = rng.substream(1 + i)
        h, _ = _crn_pair(model, D, xi, r, g, g, x, sub.substream(0),
                         n0=n, cap=cap, target=target, workers=workers,
                         rho=rho)
        ball = Intersection([D, Ball(x, c1 * r)])
        met = _escalated_mean_exit(model, ball, x, sub.substream(1), n,
                                   cap, target, workers, rho)
        h_est.append(h)
        e_est.append(met)
        ok = h.rel_stderr < gate and met.rel_stderr < gate
        powered.append(ok)
        rho_vals.append(h.value / (met.value * integral)
                        if met.value > 0 else np.nan)
    powered = np.asarray(powered)
    rho_vals = np.asarray(rho_vals)
    if not powered.any():
        raise UnderpoweredError("no factorization grid point passed the gate")
    band = rho_vals[powered]
    return {"xi": xi, "r": r, "c1": c1, "c2": c2, "c3": c3,
            "integral": integral, "grid": grid, "h": h_est,
            "mean_exit": e_est, "rho": rho_vals, "powered": powered,
            "band_max": float(np.nanmax(band)),
            "band_min": float(np.nanmin(band)),
            "band_ratio": float(np.nanmax(band) / np.nanmin(band))}


def _escalated_mean_exit(model, dom, x, rng, n0, cap, target, workers, rho):
    s = q = 0.0
    total = 0
    n = n0
    k = 0
    while True:
        batch, _ = gather_exits(model, dom, x, n, rng.substream(k), workers,
                                rho)
        k += 1
        s += batch.w.sum(); q += (batch.w * batch.w).sum()
        total += batch.n
        est = Estimate.from_moments(s, q, total, method="mc-mean-exit-time")
        if est.rel_stderr < target:
            return est
        if total >= cap:
            est.underpowered = True
            return est
        n = min(total, cap - total)


# ===================================================================== #
# box-method diagnostics
# ===================================================================== #

@dataclass
class BoxDiagnostics:
    """Layered classification of grid points with per-layer infima."""

    xi: np.ndarray
    r: float
    grid: np.ndarray
    p_est: list                # per point: exit-before-subdomain estimate
    e_est: list                # per point: mean exit time of D & B(xi, r)
    layers: list               # dicts {j, radius, U, V, W, lambda_j}

    def to_dict(self) -> dict:
        return {
            "xi": self.xi.tolist(), "r": self.r, "grid": self.grid.tolist(),
            "p": [e.to_dict() for e in self.p_est],
            "e": [e.to_dict() for e in self.e_est],
            "layers": [{**lay, "U": list(map(int, lay["U"])),
                        "V": list(map(int, lay["V"])),
                        "W": list(map(int, lay["W"]))}
                       for lay in self.layers],
        }


def _layer_radius(r: float, j: int) -> float:
    """3r/4 minus the first j terms of the convergent series 3r/(2 pi^2 k^2)."""
    return 0.75 * r - sum(3.0 * r / (2.0 * math.pi ** 2 * k * k)
                          for k in range(1, j + 1))


def box_diagnostics(model: ProcessModel, D: Domain, xi, r: float, j_max: int,
                    grid_size: int, n: int, rng: RngStream,
                    workers: int = 1, rho: float = 0.5, phi=None) -> BoxDiagnostics:
    """Classify grid points into dyadic layers and compute layer infima.

    Each point x in B_D(xi, 3r/4) gets q(x) = P_x(exit of D & B(xi,r)
    stays in D) + E_x[tau of D & B(xi,r)] / phi(r); layer j collects the
    points within the shrinking radius whose q falls in
    [2^{-(j+1)}, 2^{-j}); cumulative layers V_j grow with j, and
    lambda_j = inf over V_j of E / (phi(r) P), with +inf on empty layers.
    """
    from .exitstats import exit_before_subdomain  # estimator reuse

    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    phi = phi if phi is not None else model.kernel.scale
    phi_r = float(phi(r))
    grid = interior_grid(D, xi, 0.75 * r, grid_size,
                         DELTA_FLOOR_FACTOR * 0.75 * r, rng.substream(0))
    trunc = D.truncate(xi, r)
    p_est, e_est = [], []
    for i, x in enumerate(grid):
        sub = rng.substream(1 + i)
        p_est.append(exit_before_subdomain(model, D, xi, r, x, n,
                                           sub.substream(0), workers=workers,
                                           rho=rho))
        e_est.append(mean_exit_time(model, trunc, x, n, sub.substream(1),
                                    workers=workers, rho=rho))
    p = np.array([e.value for e in p_est])
    e = np.array([e.value for e in e_est])
    q = p + e / phi_r
    dist = np.linalg.norm(grid - xi, axis=1)

    layers = []
    v_cum = np.zeros(len(grid), dtype=bool)
    for j in range(1, j_max + 1):
        rad = _layer_radius(r, j)
        in_rad = dist < rad
        u_j = in_rad & (q >= 2.0 ** (-(j + 1))) & (q < 2.0 ** (-j))
        w_j = in_rad & (q >= 2.0 ** (-(j + 1)))
        v_cum = v_cum | u_j
        sel = v_cum & (p > 0)
        lam = float(np.min(e[sel] / (phi_r * p[sel]))) if sel.any() else math.inf
        layers.append({"j": j, "radius": rad,
                       "U": np.nonzero(u_j)[0], "V": np.nonzero(v_cum)[0],
                       "W": np.nonzero(w_j)[0], "lambda_j": lam})
    return BoxDiagnostics(xi=xi, r=r, grid=grid, p_est=p_est, e_est=e_est,
                          layers=layers)


# ===================================================================== #
# chain decay
# ===================================================================== #

def _gamma_radius(s: np.ndarray, r: float) -> np.ndarray:
    """Ball-radius schedule gamma(s) = (2 - s/r)^2 r / 8 for s < 2r, else 0."""
    out = 0.125 * (2.0 - s / r) ** 2 * r
    return np.where(s < 2.0 * r, out, 0.0)


def chain_decay(model: ProcessModel, D: Domain, xi, r: float, x, n: int,
                rng: RngStream, m_max: int = 8, rho: float = 0.5) -> dict:
    """Survival table of the iterated-ball chain built at (xi, r).

    Starting from Y_0 = x, each step exits D & B(Y_k, gamma(|Y_k - xi|))
    exactly; step k survives if Y_k stays inside D and within either
    B(xi, 3r/2) or B(Y_{k-1}, 2 gamma_{k-1}).  Reports the survival
    probabilities for m = 1..m_max and a fitted geometric decay rate
    with its 95% confidence interval.
    """
    if not isinstance(model, IsotropicStable):
        raise ConfigError("the chain instrument needs the exact-exit-law model")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not D.contains(x) or np.linalg.norm(x - xi) >= r:
        raise DomainError("chain start must lie in B_D(xi, r)")

    y = np.tile(x, (n, 1))
    alive = np.ones(n, dtype=bool)
    survival = []
    for step in range(m_max):
        idx_alive = np.nonzero(alive)[0]
        if len(idx_alive) == 0:
            survival.extend([0.0] * (m_max - step))
            break
        centers = y[idx_alive]
        radii = _gamma_radius(np.linalg.norm(centers - xi, axis=1), r)
        movable = radii > 0
        # paths whose radius schedule hit zero can no longer move: dead
        alive[idx_alive[~movable]] = False
        idx = idx_alive[movable]
        if len(idx) == 0:
            survival.extend([0.0] * (m_max - step))
            break
        centers = y[idx]
        radii = radii[movable]

        # the walker index passed back by the core is the row into
        # `centers`/`radii` for this step
        def contains(pts, rows):
            in_ball = (np.linalg.norm(pts - centers[rows], axis=1)
                       < radii[rows])
            return np.asarray(D.contains(pts), dtype=bool) & in_ball

        def dist_lb(pts, rows):
            to_ball = radii[rows] - np.linalg.norm(pts - centers[rows], axis=1)
            return np.minimum(np.asarray(D.dist_lb(pts), dtype=float), to_ball)

        batch = walk_exit_batch_indexed(model.alpha, model.dim, contains,
                                        dist_lb, centers, rho,
                                        rng.substream(step))
        new_y = batch.y
        in_d = np.asarray(D.contains(new_y), dtype=bool) & ~batch.stalled
        near_xi = np.linalg.norm(new_y - xi, axis=1) < 1.5 * r
        near_prev = np.linalg.norm(new_y - centers, axis=1) < 2.0 * radii
        ok = in_d & (near_xi | near_prev)
        alive[:] = False
        alive[idx[ok]] = True
        y[idx] = new_y
        survival.append(float(alive.sum()) / n)

    survival = survival[:m_max]
    m = np.arange(1, len(survival) + 1)
    pos_mask = np.asarray(survival) > 0
    fit = None
    if pos_mask.sum() >= 3:
        reg = stats.linregress(m[pos_mask], np.log(np.asarray(survival)[pos_mask]))
        df = int(pos_mask.sum()) - 2
        tq = float(stats.t.ppf(0.975, df)) if df > 0 else math.inf
        fit = {"log_slope": float(reg.slope),
               "slope_stderr": float(reg.stderr),
               "slope_ci95": (float(reg.slope - tq * reg.stderr),
                              float(reg.slope + tq * reg.stderr)),
               "rate": float(math.exp(reg.slope)),
               "rate_upper95": float(math.exp(reg.slope + tq * reg.stderr))}
    return {"xi": xi, "r": r, "x": x, "n": n,
            "survival": list(map(float, survival)), "fit": fit}
