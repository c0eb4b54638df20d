"""Probe-centered discretizations for the curvature estimators.

The t -> 0 limits need grids whose step shrinks like sqrt(t) while the
covered region only needs to hold the heat clouds (radius ~ sqrt(t)) around
the probe points.  Per rung we therefore build either one merged box around
all probes or disjoint patches around well-separated probes; transport
between measures on different patches uses analytic cross distances, so
nothing forces a single global grid.

All cone grids are polar (r, phi) sectors; sphere grids are (theta, phi)
boxes clamped to the chart.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ResourceLimit
from .spaces import (
    Cone,
    Discretization,
    Euclidean,
    FlatTorus,
    Gaussian,
    ModelSpace,
    Sphere,
)
from .transport import DiscreteMeasure

__all__ = ["default_res_coeff", "probe_grid", "truncate_support"]


def default_res_coeff(space: ModelSpace) -> float:
    """Grid step per sqrt(t), tuned per space in the validation suite."""
    if isinstance(space, (Gaussian,)):
        return 0.25
    if isinstance(space, Sphere):
        return 0.30
    if isinstance(space, Cone):
        return 0.35
    return 0.40  # Euclidean, FlatTorus: translate cancellation is exact


def _aligned_edges(lo, hi, step, anchors):
    """Edges with step ~ ``step`` placing every anchor on a cell center.

    Anchors must be (nearly) equally spaced for an exact fit; otherwise the
    first anchor is centered and the rest land within half a step.
    """
    anchors = np.sort(np.asarray(anchors, dtype=float))
    gap = anchors[-1] - anchors[0]
    if gap > 0.01 * step:
        step = gap / max(1, round(gap / step))
    a0 = anchors[0]
    n_lo = int(math.ceil((a0 - lo) / step - 0.5))
    n_hi = int(math.ceil((hi - a0) / step - 0.5))
    return a0 - (n_lo + 0.5) * step + step * np.arange(n_lo + n_hi + 2)


def _box_spec(space, probes, radius, h, periods=None):
    """Per-axis edge arrays of one box around the probe cluster."""
    edges = []
    periodic = []
    for ax in range(space.chart_dim):
        anchors = probes[:, ax]
        lo = anchors.min() - radius
        hi = anchors.max() + radius
        if periods is not None and hi - lo >= periods[ax] - h:
            # full-period axis anchored so the first probe is a cell center
            n = max(4, int(round(periods[ax] / h)))
            step = periods[ax] / n
            start = anchors[0] - (math.floor(anchors[0] / step) + 0.5) * step
            edges.append(start + step * np.arange(n + 1))
            periodic.append(True)
        else:
            edges.append(_aligned_edges(lo, hi, h, anchors))
            periodic.append(False)
    return tuple(edges), tuple(periodic)


def _clusters(space, probes, radius):
    """Group probes whose patches would overlap (single-linkage)."""
    n = len(probes)
    d = space.pairwise_distance(probes, probes)
    groups = []
    unseen = set(range(n))
    while unseen:
        seed = min(unseen)
        group = {seed}
        frontier = {seed}
        while frontier:
            nxt = set()
            for i in frontier:
                for j in list(unseen - group):
                    if d[i, j] <= 2.6 * radius:
                        nxt.add(j)
            group |= nxt
            frontier = nxt
        unseen -= group
        groups.append(sorted(group))
    return groups


def heat_cloud_frame(space: ModelSpace, probes: np.ndarray, t: float):
    """Centers and time scale of the heat clouds emitted by ``probes``.

    Gaussian-weight clouds drift to e^{-Kt} x and (for K < 0) spread faster
    than sqrt(2t); anchoring the grids on the true cloud centers keeps the
    two marginals in lattice phase, which is what makes the discrete
    transport between near-translates second-order accurate.
    """
    if isinstance(space, Gaussian) and space.curvature != 0.0:
        k = space.curvature
        centers = math.exp(-k * t) * probes
        variance = (1.0 - math.exp(-2.0 * k * t)) / k
        return centers, max(t, 0.5 * variance)
    return probes, t


def probe_grid(
    space: ModelSpace,
    probes,
    t: float,
    res_coeff: float | None = None,
    extent_sigmas: float = 8.0,
    cell_cap: int = 30_000,
) -> Discretization:
    """Discretization resolving the heat clouds of ``probes`` at time t."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    probes, t_eff = heat_cloud_frame(space, probes, t)
    c = res_coeff if res_coeff is not None else default_res_coeff(space)
    h = c * math.sqrt(t)
    radius = extent_sigmas * math.sqrt(t_eff)

    specs = []
    if isinstance(space, FlatTorus):
        for group in _clusters(space, probes, radius):
            specs.append(
                _box_spec(space, probes[group], radius, h, space.periods)
            )
    elif isinstance(space, Euclidean):  # includes Gaussian
        for group in _clusters(space, probes, radius):
            specs.append(_box_spec(space, probes[group], radius, h))
    elif isinstance(space, Sphere):
        specs = [_sphere_spec(space, g, probes, radius, h) for g in
                 _clusters(space, probes, radius)]
    elif isinstance(space, Cone):
        specs = [_cone_spec(space, g, probes, radius, h) for g in
                 _clusters(space, probes, radius)]
    else:
        raise NotImplementedError(space.space_id)

    total = sum(
        int(np.prod([len(e) - 1 for e in edges])) for edges, _ in specs
    )
    if total > cell_cap:
        raise ResourceLimit(
            f"probe grid of {total} cells exceeds cap {cell_cap} at t={t:g}"
        )
    return space.assemble(specs)


def _sphere_spec(space, group, probes, radius, h):
    pts = probes[group]
    rho = space.radius
    ang_r = radius / rho
    ang_h = h / rho
    th_lo = pts[:, 0].min() - ang_r
    th_hi = pts[:, 0].max() + ang_r
    ph_span = pts[:, 1].max() - pts[:, 1].min() + 2.0 * ang_r
    if th_lo <= ang_h or th_hi >= math.pi - ang_h or ph_span >= 2.0 * math.pi - ang_h:
        # cap reaches a pole or wraps: use the full sphere
        n_th = max(4, int(math.ceil(math.pi / ang_h)))
        n_ph = max(8, int(math.ceil(2.0 * math.pi / ang_h)))
        return (
            (np.linspace(0.0, math.pi, n_th + 1),
             np.linspace(-math.pi, math.pi, n_ph + 1)),
            (False, True),
        )
    th_edges = _aligned_edges(th_lo, th_hi, ang_h, pts[:, 0])
    sin_max = float(np.max(np.sin(np.clip([th_lo, th_hi], 0, math.pi))))
    sin_max = max(sin_max, float(np.max(np.sin(pts[:, 0]))))
    ph_edges = _aligned_edges(
        pts[:, 1].min() - ang_r / max(sin_max, 1e-6),
        pts[:, 1].max() + ang_r / max(sin_max, 1e-6),
        ang_h / max(sin_max, 1e-6),
        pts[:, 1],
    )
    return (th_edges, ph_edges), (False, False)


def _cone_spec(space, group, probes, radius, h):
    pts = probes[group]
    rs = pts[:, 0]
    r_lo = max(rs.min() - radius, 0.0)
    r_hi = rs.max() + radius
    near_vertex = r_lo <= 2.0 * h
    half = 0.5 * space.angle
    if near_vertex:
        r_edges = np.linspace(
            0.0, r_hi, max(4, int(math.ceil(r_hi / h))) + 1
        )
        n_ph = max(8, int(math.ceil(space.angle * r_hi / h)))
        ph_edges = np.linspace(-half, half, n_ph + 1)
        return (r_edges, ph_edges), (False, True)
    r_edges = _aligned_edges(r_lo, r_hi, h, rs)
    ang_r = radius / r_lo
    ph_lo = pts[:, 1].min() - ang_r
    ph_hi = pts[:, 1].max() + ang_r
    if ph_hi - ph_lo >= space.angle - h / r_hi:
        n_ph = max(8, int(math.ceil(space.angle * r_hi / h)))
        return (
            (r_edges, np.linspace(-half, half, n_ph + 1)),
            (False, True),
        )
    ph_edges = _aligned_edges(ph_lo, ph_hi, h / r_hi, pts[:, 1])
    return (r_edges, ph_edges), (False, False)


def truncate_support(mu: DiscreteMeasure, tail: float = 1e-7) -> DiscreteMeasure:
    """Drop the lightest cells carrying at most ``tail`` total mass."""
    if tail <= 0:
        return mu
    w = mu.weights
    order = np.argsort(w)
    csum = np.cumsum(w[order])
    cut = np.searchsorted(csum, tail)
    if cut == 0:
        return mu
    keep = np.ones(len(w), dtype=bool)
    keep[order[:cut]] = False
    w2 = np.where(keep, w, 0.0)
    return DiscreteMeasure(mu.disc, w2 / w2.sum())
