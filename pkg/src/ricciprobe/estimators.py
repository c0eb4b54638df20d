"""Curvature functionals built from heat flow, transport and entropy.

The short-time expansion rate of W(P_t delta_x, P_t delta_y) is measured on a
geometric time ladder and fitted against the two-regime model

    -log(W_t / W_0) = a sqrt(t) + b t,

which nests the smooth case (a = 0, b = the expansion rate) and the singular
cone/antipodal case (a > 0, rate infinite).  Divergence is declared from the
sqrt(t) coefficient, not from value blow-up.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .entropy import entropy_along_geodesic
from .errors import ConjugatePair, ConjugateWarning, ResourceLimit
from .gridding import default_res_coeff, probe_grid, truncate_support
from .heat import HeatKernelEvaluator, MASS_BUDGET, dual_flow, heat_row
from .spaces import Cone, Curve, ModelSpace
from .transport import (
    DiscreteMeasure,
    EntropicConfig,
    WassersteinGeodesic,
    solve_entropic,
    solve_exact,
)
from .entropy import entropy, robust_defect

__all__ = [
    "ProbeConfig",
    "TLadder",
    "ThetaEstimate",
    "SandwichReport",
    "ContractionReport",
    "theta_estimate",
    "theta_star_estimate",
    "theta_flat_estimate",
    "eta_estimate",
    "action_decay_estimate",
    "speed_decay_estimate",
    "sandwich_check",
    "contraction_check",
    "cone_coefficient_fit",
    "robust_check",
    "divergence_trend",
]


@dataclass
class ProbeConfig:
    """Numerical knobs shared by the estimators."""

    res_coeff: float | None = None      # grid step / sqrt(t); per-space default
    extent_sigmas: float = 8.0          # patch radius / sqrt(t)
    cell_cap: int = 30_000
    support_tail: float = 1e-7          # cumulative mass dropped before OT
    exact_cap: int = 2000
    solver: str = "auto"                # auto | exact | entropic
    entropic: EntropicConfig = field(default_factory=EntropicConfig)
    mass_budget: float = MASS_BUDGET
    threads: int = 1
    ladder_rungs: int = 10
    ladder_ratio: float = 0.5
    ladder_safety: float = 4.0          # t_max = (d / safety)^2
    divergence_floor: float = 0.02
    ball_cells: float = 5.0             # cells across a candidate-ball radius
    n_candidates: int = 3
    eta_step_frac: float = 0.010        # eta tube grid step as fraction of d
    derivative_step: float = 0.02       # entropy endpoint stencil
    speed_step: float = 0.05            # central-difference step of the speed

    def resolved_coeff(self, space: ModelSpace) -> float:
        return self.res_coeff if self.res_coeff is not None else (
            default_res_coeff(space)
        )


@dataclass
class TLadder:
    """Geometric time ladder t_k = t_max * ratio^k, k = 0..n-1."""

    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(self.times <= 0) or np.any(np.diff(self.times) >= 0):
            raise ValueError("ladder must be strictly decreasing and positive")

    @classmethod
    def for_distance(cls, d, n=10, ratio=0.5, safety=4.0, t_max=None):
        tm = t_max if t_max is not None else (d / safety) ** 2
        return cls(tm * ratio ** np.arange(n))

    def drop_largest(self, k: int) -> "TLadder":
        return TLadder(self.times[k:])


@dataclass
class FitResult:
    sqrt_coeff: float
    slope: float
    stderr_sqrt: float
    stderr_slope: float
    residual: float


def fit_sqrt_linear(times, values, weights=None) -> FitResult:
    """Least squares fit of values ~ a sqrt(t) + b t with parameter errors."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    w = np.ones_like(t) if weights is None else np.asarray(weights, float)
    scale = t.max()
    design = np.stack([np.sqrt(t / scale), t / scale], axis=-1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    resid = y - design @ coef
    dof = max(len(t) - 2, 1)
    s2 = float(np.sum(w * resid**2)) / dof
    cov = s2 * np.linalg.inv(design.T @ (design * w[:, None]))
    a = coef[0] / math.sqrt(scale)
    b = coef[1] / scale
    return FitResult(
        sqrt_coeff=float(a),
        slope=float(b),
        stderr_sqrt=float(math.sqrt(max(cov[0, 0], 0.0)) / math.sqrt(scale)),
        stderr_slope=float(math.sqrt(max(cov[1, 1], 0.0)) / scale),
        residual=float(math.sqrt(np.mean(resid**2))),
    )


@dataclass
class ThetaEstimate:
    """Fitted expansion rate with sqrt(t)-divergence diagnostics."""

    value: float            # +inf sentinel when divergent
    sqrt_coeff: float
    stderr_a: float
    stderr_b: float
    divergent: bool
    residual: float
    times: np.ndarray | None = None
    log_ratios: np.ndarray | None = None
    warn_conjugate: bool = False

    @classmethod
    def from_fit(cls, fit: FitResult, floor: float, **kw):
        divergent = fit.sqrt_coeff > max(3.0 * fit.stderr_sqrt, floor)
        return cls(
            value=math.inf if divergent else fit.slope,
            sqrt_coeff=fit.sqrt_coeff,
            stderr_a=fit.stderr_sqrt,
            stderr_b=fit.stderr_slope,
            divergent=divergent,
            residual=fit.residual,
            **kw,
        )


# ---------------------------------------------------------------------------
# ladder machinery
# ---------------------------------------------------------------------------


def _solve_w(mu, nu, q, cfg: ProbeConfig) -> float:
    space = mu.space
    if space.chart_dim == 1:
        return solve_exact(mu, nu, q, cap=1 << 30).distance
    size = max(len(mu.support), len(nu.support))
    if cfg.solver == "entropic":
        return solve_entropic(mu, nu, q, cfg.entropic).distance
    if size <= cfg.exact_cap:
        return solve_exact(mu, nu, q, cap=cfg.exact_cap).distance
    if cfg.solver == "exact":
        raise ResourceLimit(
            f"support {size} exceeds exact cap {cfg.exact_cap}"
        )
    return solve_entropic(mu, nu, q, cfg.entropic).distance


def _pair_w_at(space, ev, xc, yc, t, cfg, q=2.0) -> float:
    """W_q between the heat clouds of two probe points at time t."""
    disc = probe_grid(
        space, np.stack([xc, yc]), t,
        res_coeff=cfg.resolved_coeff(space),
        extent_sigmas=cfg.extent_sigmas,
        cell_cap=cfg.cell_cap,
    )
    mu, _ = heat_row(ev, t, xc, disc, budget=cfg.mass_budget)
    nu, _ = heat_row(ev, t, yc, disc, budget=cfg.mass_budget)
    return _solve_w(
        truncate_support(mu, cfg.support_tail),
        truncate_support(nu, cfg.support_tail),
        q, cfg,
    )


def _ladder_map(fn, times, cfg: ProbeConfig):
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, times))
    return [fn(t) for t in times]


def _check_conjugate(space, xc, yc) -> bool:
    try:
        space.geodesic_points(xc, yc, np.array([0.5]))
        return False
    except ConjugatePair:
        return True


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def theta_estimate(
    space: ModelSpace,
    x,
    y,
    ladder: TLadder | None = None,
    cfg: ProbeConfig | None = None,
) -> ThetaEstimate:
    """Expansion rate -liminf (1/t) log(W(P_t d_x, P_t d_y)/d(x, y)).

    The fitted t-slope approximates the rate; a significant sqrt(t)
    coefficient flags divergence (cone vertex, antipodal pairs).
    """
    cfg = cfg or ProbeConfig()
    xc, yc = space.coords(x), space.coords(y)
    d = space.distance(xc, yc)
    if d <= 0:
        raise ValueError("theta estimate needs distinct points")
    if ladder is None:
        ladder = TLadder.for_distance(
            d, cfg.ladder_rungs, cfg.ladder_ratio, cfg.ladder_safety
        )
    warn = _check_conjugate(space, xc, yc)
    if warn:
        warnings.warn(
            f"{space.space_id}: probe pair within conjugacy tolerance, "
            "estimate flagged",
            ConjugateWarning,
        )
    ev = HeatKernelEvaluator(space)
    ws = _ladder_map(
        lambda t: _pair_w_at(space, ev, xc, yc, t, cfg), ladder.times, cfg
    )
    ys = -np.log(np.asarray(ws) / d)
    fit = fit_sqrt_linear(ladder.times, ys)
    return ThetaEstimate.from_fit(
        fit, cfg.divergence_floor,
        times=ladder.times.copy(), log_ratios=ys, warn_conjugate=warn,
    )


def _golden_pairs(space, xc, radius, n_pairs):
    """Deterministic low-discrepancy probe pairs inside a ball."""
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    pairs = []
    for k in range(n_pairs):
        ang = 2.0 * math.pi * ((k * golden) % 1.0)
        frac = 0.45 + 0.5 * (((k + 1) * golden) % 1.0)
        if space.chart_dim == 1:
            v = np.array([1.0 if k % 2 == 0 else -1.0])
        else:
            v = np.array([math.cos(ang), math.sin(ang)])
        y = space.exp(xc, v, frac * radius)
        z = space.exp(xc, -v, frac * radius * (0.6 + 0.4 * ((k * 0.7) % 1.0)))
        pairs.append((y, z))
    return pairs


def theta_star_estimate(
    space: ModelSpace,
    x,
    radius: float,
    n_pairs: int = 6,
    ladder: TLadder | None = None,
    cfg: ProbeConfig | None = None,
):
    """Proxy for limsup_{y,z -> x} theta(y, z): max over sampled ball pairs.

    Returns (value, stderr, radius); shrink the radius to probe convergence.
    """
    cfg = cfg or ProbeConfig()
    xc = space.coords(x)
    best = -math.inf
    best_err = math.nan
    for y, z in _golden_pairs(space, xc, radius, n_pairs):
        est = theta_estimate(space, y, z, ladder, cfg)
        if est.divergent:
            return math.inf, est.stderr_b, radius
        if est.value > best:
            best = est.value
            best_err = est.stderr_b
    return best, best_err, radius


def _direction_chart(space, xc, yc, scale=1e-4):
    """Unit chart direction at x toward y along the geodesic."""
    step = space.geodesic_points(xc, yc, np.array([scale]))[0] - xc
    n = np.linalg.norm(step)
    if n == 0:
        raise ValueError("coincident probe points")
    return step / n


def _candidate_measures(space, center, other, eps, disc, n_shapes):
    """Deterministic family of measures supported in B_eps(center)."""
    d_all = space.pairwise_distance(center[None, :], disc.points)[0]
    direction = _direction_chart(space, center, other)
    rel = disc.points - center[None, :]
    side = rel @ direction
    shapes = []
    inside = d_all <= eps
    if np.any(inside):
        shapes.append(np.where(inside, disc.cell_measures, 0.0))
    half = inside & (side >= -1e-12)
    if np.any(half):
        shapes.append(np.where(half, disc.cell_measures, 0.0))
    off_center = space.geodesic_points(
        center, other, np.array([0.45 * eps / max(space.distance(center, other), eps)])
    )[0]
    d_off = space.pairwise_distance(off_center[None, :], disc.points)[0]
    small = d_off <= 0.5 * eps
    if np.any(small):
        shapes.append(np.where(small, disc.cell_measures, 0.0))
    out = []
    for w in shapes[:n_shapes]:
        out.append(DiscreteMeasure(disc, w / w.sum()))
    return out


def theta_flat_estimate(
    space: ModelSpace,
    x,
    y,
    eps: float,
    n_candidates: int | None = None,
    ladder: TLadder | None = None,
    cfg: ProbeConfig | None = None,
):
    """Relaxed rate over measures in eps-balls: min of the fitted rates.

    Returns (value, stderr).  Unlike theta_estimate this stays finite at the
    cone vertex: supports avoid concentrating at the singular point.
    """
    cfg = cfg or ProbeConfig()
    xc, yc = space.coords(x), space.coords(y)
    d = space.distance(xc, yc)
    if not eps < d / 4.0:
        raise ValueError("ball radius must satisfy eps < d(x, y)/4")
    if ladder is None:
        ladder = TLadder.for_distance(
            d, max(cfg.ladder_rungs - 2, 6), cfg.ladder_ratio, cfg.ladder_safety
        )
    n_shapes = n_candidates or cfg.n_candidates
    h_ball = eps / cfg.ball_cells
    disc_x = probe_grid(space, xc[None, :], (1.3 * eps) ** 2,
                        res_coeff=h_ball / (1.3 * eps), extent_sigmas=1.0,
                        cell_cap=cfg.cell_cap)
    disc_y = probe_grid(space, yc[None, :], (1.3 * eps) ** 2,
                        res_coeff=h_ball / (1.3 * eps), extent_sigmas=1.0,
                        cell_cap=cfg.cell_cap)
    mus = _candidate_measures(space, xc, yc, eps, disc_x, n_shapes)
    nus = _candidate_measures(space, yc, xc, eps, disc_y, n_shapes)
    ev = HeatKernelEvaluator(space)

    best = math.inf
    best_err = math.nan
    for mu0, nu0 in zip(mus, nus):
        w0 = solve_exact(mu0, nu0, 2.0, cap=1 << 30).distance if (
            space.chart_dim == 1
        ) else _solve_w(mu0, nu0, 2.0, cfg)

        def w_at(t, mu0=mu0, nu0=nu0):
            disc = probe_grid(
                space, np.stack([xc, yc]), t,
                res_coeff=cfg.resolved_coeff(space),
                extent_sigmas=cfg.extent_sigmas,
                cell_cap=cfg.cell_cap,
            )
            mu_t = dual_flow(ev, t, mu0, disc=disc, budget=cfg.mass_budget)
            nu_t = dual_flow(ev, t, nu0, disc=disc, budget=cfg.mass_budget)
            return _solve_w(
                truncate_support(mu_t, cfg.support_tail),
                truncate_support(nu_t, cfg.support_tail),
                2.0, cfg,
            )

        ws = _ladder_map(w_at, ladder.times, cfg)
        ys = -np.log(np.asarray(ws) / w0)
        fit = fit_sqrt_linear(ladder.times, ys)
        if fit.slope < best:
            best = fit.slope
            best_err = fit.stderr_slope
    return best, best_err


def _tube_grid(space, xc, yc, eps, cfg: ProbeConfig):
    """Single fine grid covering both eps-balls and the connecting tube."""
    d = space.distance(xc, yc)
    h = min(eps / cfg.ball_cells, cfg.eta_step_frac * d)
    probes = np.stack([xc, yc])
    # radius**2 plays the role of t in probe_grid; force a single patch by a
    # generous radius so the clusters merge
    mids = space.geodesic_points(xc, yc, np.linspace(0.0, 1.0, 9))
    all_probes = np.concatenate([probes, mids])
    return probe_grid(
        space, all_probes, (2.0 * eps) ** 2,
        res_coeff=h / (2.0 * eps), extent_sigmas=1.0, cell_cap=cfg.cell_cap,
    )


def eta_estimate(
    space: ModelSpace,
    x,
    y,
    eps: float,
    cfg: ProbeConfig | None = None,
    n_candidates: int | None = None,
):
    """Entropy route: (dS/da|_1^- - dS/da|_0^+) / W^2, minimized over the
    same candidate family as theta_flat_estimate.

    Returns (value, error bar).
    """
    cfg = cfg or ProbeConfig()
    xc, yc = space.coords(x), space.coords(y)
    d = space.distance(xc, yc)
    if not eps < d / 4.0:
        raise ValueError("ball radius must satisfy eps < d(x, y)/4")
    n_shapes = n_candidates or cfg.n_candidates
    disc = _tube_grid(space, xc, yc, eps, cfg)
    mus = _candidate_measures(space, xc, yc, eps, disc, n_shapes)
    nus = _candidate_measures(space, yc, xc, eps, disc, n_shapes)
    best = math.inf
    best_err = math.nan
    for mu0, nu0 in zip(mus, nus):
        plan = solve_exact(mu0, nu0, 2.0, cap=max(cfg.exact_cap, 4000))
        profile = entropy_along_geodesic(
            WassersteinGeodesic(plan), h=cfg.derivative_step
        )
        w2 = plan.total_cost
        val = (profile.d_minus_1 - profile.d_plus_0) / w2
        err = (profile.err_0 + profile.err_1) / w2
        if val < best:
            best = val
            best_err = err
    return best, best_err


def _curve_pair_distances(space, ev, samples, t, cfg):
    """W_2 between consecutive evolved Diracs of a sampled curve."""
    out = []
    for k in range(1, len(samples)):
        out.append(_pair_w_at(space, ev, samples[k - 1], samples[k], t, cfg))
    return out


def action_decay_estimate(
    space: ModelSpace,
    curve: Curve,
    p: float = 2.0,
    ladder: TLadder | None = None,
    cfg: ProbeConfig | None = None,
) -> ThetaEstimate:
    """Decay rate of the p-action of an evolved curve of Diracs.

    Fits -(1/p) log(Act_p(t)/Act_p(0)) = a sqrt(t) + b t and returns b (or
    the divergent flag, e.g. for cone geodesics touching the vertex).
    """
    cfg = cfg or ProbeConfig()
    samples = curve.points
    params = curve.params
    gaps = np.diff(params)
    d0 = np.array(
        [
            space.distance(samples[k - 1], samples[k])
            for k in range(1, len(samples))
        ]
    )
    if np.any(d0 <= 0):
        raise ValueError("curve samples must be distinct")
    if ladder is None:
        ladder = TLadder.for_distance(
            float(d0.min()), cfg.ladder_rungs, cfg.ladder_ratio,
            cfg.ladder_safety,
        )
    ev = HeatKernelEvaluator(space)
    act0 = float(np.sum(d0**p / gaps ** (p - 1.0)))

    def act_at(t):
        ws = np.asarray(_curve_pair_distances(space, ev, samples, t, cfg))
        return float(np.sum(ws**p / gaps ** (p - 1.0)))

    acts = _ladder_map(act_at, ladder.times, cfg)
    ys = -np.log(np.asarray(acts) / act0) / p
    fit = fit_sqrt_linear(ladder.times, ys)
    return ThetaEstimate.from_fit(
        fit, cfg.divergence_floor, times=ladder.times.copy(), log_ratios=ys
    )


def speed_decay_estimate(
    space: ModelSpace,
    x,
    v,
    cfg: ProbeConfig | None = None,
    ladder: TLadder | None = None,
) -> ThetaEstimate:
    """-d/dt log Speed(P_t delta_{exp_x(a v)}) at a = 0, t = 0.

    The metric speed at a = 0 is the central difference
    W(mu_t^{-h}, mu_t^{+h}) / (2h) with h = cfg.speed_step.
    """
    cfg = cfg or ProbeConfig()
    xc = space.coords(x)
    h = cfg.speed_step
    ya = space.exp(xc, np.asarray(v, dtype=float), -h)
    yb = space.exp(xc, np.asarray(v, dtype=float), h)
    return theta_estimate(space, ya, yb, ladder, cfg)


@dataclass
class SandwichReport:
    """Two-sided bound check: lower <= estimate <= lower + correction."""

    lower: float
    upper: float
    estimate: ThetaEstimate
    tolerance: float
    distance: float
    sigma: float

    @property
    def passed(self) -> bool:
        if self.estimate.divergent:
            return False
        v = self.estimate.value
        return (self.lower - self.tolerance) <= v <= (self.upper + self.tolerance)


def sandwich_check(
    space: ModelSpace,
    x,
    y,
    ladder: TLadder | None = None,
    cfg: ProbeConfig | None = None,
    tolerance: float = 0.1,
) -> SandwichReport:
    """Average-Ricci lower bound vs rate vs curvature-corrected upper bound."""
    xc, yc = space.coords(x), space.coords(y)
    lower = space.ricci_average(xc, yc)
    sigma = space.curvature_modulus(xc, yc)
    d = space.distance(xc, yc)
    arg = math.sqrt(sigma) * d / 2.0 if sigma > 0 else 0.0
    if arg >= math.pi / 2.0:
        upper = math.inf
    else:
        upper = lower + sigma * math.tan(arg) ** 2
    est = theta_estimate(space, xc, yc, ladder, cfg)
    return SandwichReport(lower, upper, est, tolerance, d, sigma)


@dataclass
class ContractionReport:
    q: float
    rate: float
    worst_margin: float     # max over the ladder of W_t / (e^{-Kt} W_0) - 1
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_margin <= self.tolerance


def contraction_check(
    space: ModelSpace,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    ladder: TLadder,
    q: float = 2.0,
    cfg: ProbeConfig | None = None,
    tolerance: float = 0.01,
) -> ContractionReport:
    """W_q(P_t mu, P_t nu) <= e^{-Kt} W_q(mu, nu) on every ladder rung."""
    cfg = cfg or ProbeConfig()
    k_bound = space.lower_ricci_bound()
    ev = HeatKernelEvaluator(space)
    w0 = _solve_w(mu, nu, q, cfg)
    worst = -math.inf
    for t in ladder.times:
        mu_t = dual_flow(ev, t, mu, budget=cfg.mass_budget)
        nu_t = dual_flow(ev, t, nu, budget=cfg.mass_budget)
        wt = _solve_w(
            truncate_support(mu_t, cfg.support_tail),
            truncate_support(nu_t, cfg.support_tail),
            q, cfg,
        )
        worst = max(worst, wt / (math.exp(-k_bound * t) * w0) - 1.0)
    return ContractionReport(q, k_bound, worst, tolerance)


def cone_coefficient_fit(
    alpha: float,
    y_radius: float = 1.0,
    ladder: TLadder | None = None,
    cfg: ProbeConfig | None = None,
):
    """Fit W(t) = d - c sqrt(t) - b t for the vertex-to-point pair.

    Returns (c_fit, c_theory, stderr): the singular coefficient of the heat
    flow from the cone vertex against sqrt(pi) (2/alpha) sin(alpha/2).
    """
    cfg = cfg or ProbeConfig()
    space = Cone(alpha)
    xc = space.coords(np.array([0.0, 0.0]))
    yc = space.coords(np.array([y_radius, 0.0]))
    d = space.distance(xc, yc)
    if ladder is None:
        ladder = TLadder.for_distance(
            d, max(cfg.ladder_rungs - 2, 8), cfg.ladder_ratio, cfg.ladder_safety
        )
    ev = HeatKernelEvaluator(space)
    ws = _ladder_map(
        lambda t: _pair_w_at(space, ev, xc, yc, t, cfg), ladder.times, cfg
    )
    gaps = d - np.asarray(ws)
    fit = fit_sqrt_linear(ladder.times, gaps)
    c_theory = math.sqrt(math.pi) * (2.0 / alpha) * math.sin(alpha / 2.0)
    return fit.sqrt_coeff, c_theory, fit.stderr_sqrt


def robust_check(
    space: ModelSpace,
    x,
    y,
    eps: float | None = None,
    cfg: ProbeConfig | None = None,
):
    """Midpoint-concavity defect along a constructed geodesic triple.

    Builds the W-geodesic from a ball behind x to a ball at y (so the
    midpoint sits at x), then returns (defect, r): the caller compares the
    defect against the approximation bound K + sigma^2 r^2.
    """
    cfg = cfg or ProbeConfig()
    xc, yc = space.coords(x), space.coords(y)
    r = space.distance(xc, yc)
    if eps is None:
        eps = min(0.8 * r**4, r / 8.0)
    x_minus = space.geodesic_points(yc, xc, np.array([2.0]))[0]
    disc = _tube_grid(space, x_minus, yc, eps, cfg)
    mu_minus = DiscreteMeasure.uniform_ball(disc, x_minus, eps)
    mu_plus = DiscreteMeasure.uniform_ball(disc, yc, eps)
    plan = solve_exact(mu_minus, mu_plus, 2.0, cap=max(cfg.exact_cap, 4000))
    geo = WassersteinGeodesic(plan)
    mu_mid = geo.at(0.5)
    defect = robust_defect(mu_minus, mu_mid, mu_plus, r)
    return defect, r


def divergence_trend(
    space: ModelSpace,
    x,
    y,
    cfg: ProbeConfig | None = None,
    shrink: float = 4.0,
):
    """Fitted values at t_max and t_max/shrink; growth evidences divergence.

    Used for pairs without a closed-form rate (flat-torus antipodal pairs).
    """
    cfg = cfg or ProbeConfig()
    d = space.distance(space.coords(x), space.coords(y))
    full = TLadder.for_distance(d, cfg.ladder_rungs, cfg.ladder_ratio,
                                cfg.ladder_safety)
    shrunk = TLadder(full.times / shrink)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConjugateWarning)
        est_full = theta_estimate(space, x, y, full, cfg)
        est_shrunk = theta_estimate(space, x, y, shrunk, cfg)
    v1 = est_full.sqrt_coeff if est_full.divergent else est_full.value
    v2 = est_shrunk.sqrt_coeff if est_shrunk.divergent else est_shrunk.value
    return est_full, est_shrunk, bool(v2 >= v1 - 1e-9)
