"""Analytic model metric measure spaces and their finite discretizations.

Five concrete spaces are provided: Euclidean space, Euclidean space with a
Gaussian weight (Ornstein-Uhlenbeck geometry), a flat torus, a two-dimensional
metric cone over a short circle, and the round 2-sphere.  Each space exposes
closed-form distances and geodesics in a fixed canonical chart plus the pieces
the rest of the package needs: the weighted Ricci tensor, the modulus of the
Riemannian curvature, the reference-measure density in chart coordinates, and
tensor-grid discretizations with exact cell measures.

Chart conventions
-----------------
* Euclidean/Gaussian: Cartesian coordinates.
* FlatTorus(L1, L2): (u, v) with u in [0, L1), v in [0, L2).
* Cone(alpha):       (r, phi) with r >= 0, phi in [-alpha/2, alpha/2); the
                     vertex is the unique point with r = 0.
* Sphere(radius):    (theta, phi) with theta in [0, pi], phi in [-pi, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfi

from .errors import ConjugatePair, ResourceLimit, SpaceMismatch, VertexCurvature

__all__ = [
    "Point",
    "Curve",
    "TensorPatch",
    "Discretization",
    "ModelSpace",
    "Euclidean",
    "Gaussian",
    "FlatTorus",
    "Cone",
    "Sphere",
    "space_from_spec",
]

_CONJUGACY_TOL = 1e-8
_DEFAULT_POINT_CAP = 20_000

# Gauss-Legendre rule used for curvature averages along geodesics.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class Point:
    """A point of a model space, tagged with the space it belongs to."""

    space_id: str
    coords: tuple

    def __iter__(self):
        return iter(self.coords)


@dataclass
class Curve:
    """A sampled curve a -> gamma(a), a in [0, 1]."""

    space: "ModelSpace"
    params: np.ndarray          # strictly increasing, params[0] = 0, params[-1] = 1
    points: np.ndarray          # (k, dim) chart coordinates
    is_geodesic: bool = False
    is_constant_speed: bool = False

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.params.ndim != 1 or len(self.params) != len(self.points):
            raise ValueError("params and points must have matching length")
        if not np.all(np.diff(self.params) > 0):
            raise ValueError("curve parameters must be strictly increasing")
        if abs(self.params[0]) > 1e-15 or abs(self.params[-1] - 1.0) > 1e-15:
            raise ValueError("curve parameters must span [0, 1]")

    def point(self, i: int) -> Point:
        return self.space.point(*self.points[i])

    def check_geodesic(self, rel_tol: float = 1e-9) -> bool:
        """d(gamma^a, gamma^b) == |a-b| * d(gamma^0, gamma^1) for all samples."""
        d01 = float(
            self.space.pairwise_distance(self.points[:1], self.points[-1:])[0, 0]
        )
        if d01 == 0.0:
            return True
        dmat = self.space.pairwise_distance(self.points, self.points)
        target = np.abs(self.params[:, None] - self.params[None, :]) * d01
        return bool(np.max(np.abs(dmat - target)) <= rel_tol * d01 + 1e-14)


@dataclass
class TensorPatch:
    """One axis-aligned tensor grid inside a discretization."""

    edges: tuple          # per-axis 1d edge arrays, length dim
    periodic: tuple       # per-axis wrap flags
    offset: int           # flat index of this patch's first cell
    shape: tuple = field(init=False)
    centers: tuple = field(init=False)

    def __post_init__(self):
        self.shape = tuple(len(e) - 1 for e in self.edges)
        self.centers = tuple(0.5 * (e[:-1] + e[1:]) for e in self.edges)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def snap(self, coords: np.ndarray) -> np.ndarray:
        """Flat indices of the cells containing ``coords`` (ties to lower index)."""
        coords = np.atleast_2d(coords)
        idx = np.zeros(len(coords), dtype=np.int64)
        for ax, e in enumerate(self.edges):
            x = coords[:, ax]
            if self.periodic[ax]:
                period = e[-1] - e[0]
                x = e[0] + np.mod(x - e[0], period)
            # side='left' sends a point sitting exactly on an interior edge
            # to the lower of the two adjacent cells
            k = np.searchsorted(e[1:-1], x, side="left")
            idx = idx * self.shape[ax] + np.clip(k, 0, self.shape[ax] - 1)
        return idx + self.offset


@dataclass
class Discretization:
    """Finite carrier for measures on a model space.

    ``cell_measures`` are exact m-measures of the cells; ``chart_volumes`` are
    the plain chart-Lebesgue cell volumes used by quadrature of kernel rows.
    """

    space: "ModelSpace"
    points: np.ndarray
    cell_measures: np.ndarray
    chart_volumes: np.ndarray
    resolution: float
    patches: list

    def __post_init__(self):
        if np.any(self.cell_measures <= 0):
            raise ValueError("cell measures must be positive")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def total_measure(self) -> float:
        return float(self.cell_measures.sum())

    @property
    def single_grid(self) -> TensorPatch | None:
        return self.patches[0] if len(self.patches) == 1 else None

    def snap(self, coords: np.ndarray) -> np.ndarray:
        """Nearest-cell indices for chart points, searching all patches."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if len(self.patches) == 1:
            return self.patches[0].snap(coords)
        cand = np.stack([p.snap(coords) for p in self.patches])  # (P, n)
        dists = np.stack(
            [
                self.space._paired_distance(coords, self.points[c])
                for c in cand
            ]
        )
        best = np.argmin(dists, axis=0)  # argmin ties -> first patch
        return cand[best, np.arange(len(coords))]


class ModelSpace:
    """Common interface of the model metric measure spaces."""

    chart_dim: int = 1

    # -- identity -----------------------------------------------------------

    @property
    def space_id(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return self.space_id

    def point(self, *coords) -> Point:
        c = self._normalize(np.asarray(coords, dtype=float))
        return Point(self.space_id, tuple(float(v) for v in c))

    def coords(self, p) -> np.ndarray:
        if isinstance(p, Point):
            if p.space_id != self.space_id:
                raise SpaceMismatch(
                    f"point of {p.space_id} used with {self.space_id}"
                )
            return np.asarray(p.coords, dtype=float)
        return self._normalize(np.asarray(p, dtype=float))

    def _normalize(self, c: np.ndarray) -> np.ndarray:
        if c.shape[-1] != self.chart_dim:
            raise ValueError(
                f"{self.space_id} expects {self.chart_dim} coordinates"
            )
        return c

    # -- metric -------------------------------------------------------------

    def distance(self, x, y) -> float:
        a, b = self.coords(x), self.coords(y)
        return float(self._paired_distance(a[None, :], b[None, :])[0])

    def pairwise_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """(n, m) matrix of distances between two coordinate arrays."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        return self._dist(a[:, None, :], b[None, :, :])

    def _paired_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._dist(np.atleast_2d(a), np.atleast_2d(b))

    def _dist(self, a, b):
        raise NotImplementedError

    # -- geodesics ----------------------------------------------------------

    def geodesic_points(self, x, y, a) -> np.ndarray:
        """Constant-speed geodesic samples; x, y single points, ``a`` array."""
        raise NotImplementedError

    def geodesic_batch(self, xs, ys, a: float) -> np.ndarray:
        """Evaluate gamma_{x_i -> y_i}(a) for paired coordinate arrays."""
        raise NotImplementedError

    def geodesic(self, x, y, n_samples: int) -> Curve:
        if n_samples < 2:
            raise ValueError("need at least two samples")
        params = np.linspace(0.0, 1.0, n_samples)
        pts = self.geodesic_points(self.coords(x), self.coords(y), params)
        return Curve(self, params, pts, is_geodesic=True, is_constant_speed=True)

    def exp(self, x, v, s: float) -> np.ndarray:
        """Point reached from x after distance s along unit direction v."""
        raise NotImplementedError

    # -- curvature ----------------------------------------------------------

    def ricci_f(self, x, v=None) -> float:
        """Bakry-Emery Ricci tensor Ric + Hess f on unit tangents."""
        raise NotImplementedError

    def ricci_average(self, x, y) -> float:
        """Average of Ric_f(dgamma, dgamma)/|dgamma|^2 along the geodesic."""
        xc, yc = self.coords(x), self.coords(y)
        self._check_interior_geodesic(xc, yc)
        pts = self.geodesic_points(xc, yc, _GL_NODES)
        vals = np.array([self.ricci_f(p) for p in pts])
        return float(np.dot(_GL_WEIGHTS, vals))

    def curvature_modulus(self, x, y) -> float:
        """Max modulus of the Riemannian curvature along the geodesic."""
        xc, yc = self.coords(x), self.coords(y)
        self._check_interior_geodesic(xc, yc)
        return self._sigma()

    def _sigma(self) -> float:
        return 0.0

    def _check_interior_geodesic(self, xc, yc):
        """Raise if the connecting geodesic is unusable for curvature averages."""
        self.geodesic_points(xc, yc, np.array([0.5]))  # conjugacy check

    def lower_ricci_bound(self) -> float:
        """Known analytic lower Ricci bound of the space."""
        return 0.0

    def chart_embedding(self, coords: np.ndarray) -> np.ndarray:
        """Euclidean-ish embedding used for ordering heuristics."""
        return np.atleast_2d(coords)

    # -- measure ------------------------------------------------------------

    def log_chart_density(self, coords: np.ndarray) -> np.ndarray:
        """log of dm/d(chart Lebesgue) at the given chart points."""
        coords = np.atleast_2d(coords)
        return np.zeros(len(coords))

    def chart_density(self, coords: np.ndarray) -> np.ndarray:
        return np.exp(self.log_chart_density(coords))

    def _cell_measures_1d(self, axis: int, edges: np.ndarray) -> np.ndarray:
        """Exact per-axis factors of the product cell measures."""
        return np.diff(edges)

    def _patch_measures(self, patch: TensorPatch):
        factors = [
            self._cell_measures_1d(ax, e) for ax, e in enumerate(patch.edges)
        ]
        widths = [np.diff(e) for e in patch.edges]
        meas = factors[0]
        vols = widths[0]
        for f, w in zip(factors[1:], widths[1:]):
            meas = np.multiply.outer(meas, f)
            vols = np.multiply.outer(vols, w)
        return meas.ravel(), vols.ravel()

    def _patch_centers(self, patch: TensorPatch) -> np.ndarray:
        grids = np.meshgrid(*patch.centers, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def _patch_resolution(self, patch: TensorPatch) -> float:
        """Max cell diameter of the patch."""
        widths = [np.max(np.diff(e)) for e in patch.edges]
        return float(np.sqrt(np.sum(np.square(widths))))

    def assemble(self, patch_specs) -> Discretization:
        """Build a discretization from (edges, periodic) patch specifications."""
        patches, pts, meas, vols = [], [], [], []
        offset = 0
        for edges, periodic in patch_specs:
            patch = TensorPatch(
                tuple(np.asarray(e, dtype=float) for e in edges),
                tuple(periodic),
                offset,
            )
            m, v = self._patch_measures(patch)
            patches.append(patch)
            pts.append(self._patch_centers(patch))
            meas.append(m)
            vols.append(v)
            offset += patch.size
        res = max(self._patch_resolution(p) for p in patches)
        return Discretization(
            self,
            np.concatenate(pts),
            np.concatenate(meas),
            np.concatenate(vols),
            res,
            patches,
        )

    def discretize(
        self, resolution: float, extent: float, cap: int = _DEFAULT_POINT_CAP
    ) -> Discretization:
        """Global tensor grid covering the chart region bounded by ``extent``."""
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        spec = self._grid_spec(resolution, extent)
        n = int(np.prod([len(e) - 1 for e in spec[0]]))
        if n > cap:
            raise ResourceLimit(f"{n} grid points exceed cap {cap}")
        return self.assemble([spec])

    def _grid_spec(self, resolution, extent):
        raise NotImplementedError


def _axis_edges(lo: float, hi: float, step: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / step - 1e-12)))
    return np.linspace(lo, hi, n + 1)


# ---------------------------------------------------------------------------
# flat spaces
# ---------------------------------------------------------------------------


class Euclidean(ModelSpace):
    """R^n with Lebesgue measure."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)
        self.chart_dim = self.dim

    @property
    def space_id(self) -> str:
        return f"euclidean({self.dim})"

    def _dist(self, a, b):
        return np.sqrt(np.sum(np.square(a - b), axis=-1))

    def geodesic_points(self, x, y, a):
        a = np.asarray(a, dtype=float)
        return x[None, :] + a[:, None] * (y - x)[None, :]

    def geodesic_batch(self, xs, ys, a):
        return xs + a * (ys - xs)

    def exp(self, x, v, s):
        x = self.coords(x)
        v = np.asarray(v, dtype=float)
        return x + s * v / np.linalg.norm(v)

    def ricci_f(self, x, v=None):
        return 0.0

    def _grid_spec(self, resolution, extent):
        edges = tuple(
            _axis_edges(-extent, extent, resolution) for _ in range(self.dim)
        )
        return edges, (False,) * self.dim


class Gaussian(Euclidean):
    """R^n weighted by f(x) = K |x|^2 / 2, i.e. m = exp(-K|x|^2/2) dx.

    The metric is flat; all curvature lives in the weight: Ric_f = K * id.
    The measure is left unnormalized (only entropy differences matter).
    """

    def __init__(self, dim: int, curvature: float):
        super().__init__(dim)
        self.curvature = float(curvature)

    @property
    def space_id(self) -> str:
        return f"gaussian({self.dim},K={self.curvature:g})"

    def ricci_f(self, x, v=None):
        return self.curvature

    def lower_ricci_bound(self):
        return self.curvature

    def log_chart_density(self, coords):
        coords = np.atleast_2d(coords)
        return -0.5 * self.curvature * np.sum(np.square(coords), axis=-1)

    def _cell_measures_1d(self, axis, edges):
        k = self.curvature
        if k == 0.0:
            return np.diff(edges)
        if k > 0:
            s = math.sqrt(k / 2.0)
            anti = math.sqrt(math.pi / (2.0 * k)) * erf(s * edges)
        else:
            s = math.sqrt(-k / 2.0)
            anti = math.sqrt(math.pi / (-2.0 * k)) * erfi(s * edges)
        return np.diff(anti)


class FlatTorus(ModelSpace):
    """Flat 2-torus with side lengths (L1, L2) and Lebesgue measure."""

    chart_dim = 2

    def __init__(self, l1: float, l2: float):
        if l1 <= 0 or l2 <= 0:
            raise ValueError("periods must be positive")
        self.periods = np.array([float(l1), float(l2)])
        self.dim = 2

    @property
    def space_id(self) -> str:
        p = self.periods
        return f"flattorus({p[0]:g},{p[1]:g})"

    def _normalize(self, c):
        c = super()._normalize(c)
        return np.mod(c, self.periods)

    def _dist(self, a, b):
        delta = np.abs(np.mod(a - b, self.periods))
        delta = np.minimum(delta, self.periods - delta)
        return np.sqrt(np.sum(np.square(delta), axis=-1))

    def _min_displacement(self, x, y, strict: bool):
        delta = np.mod(y - x + 0.5 * self.periods, self.periods) - 0.5 * self.periods
        if strict:
            near_half = np.abs(np.abs(delta) - 0.5 * self.periods) <= (
                _CONJUGACY_TOL * self.periods
            )
            if np.any(near_half):
                raise ConjugatePair(
                    "torus displacement is half a period in some coordinate"
                )
        return delta

    def geodesic_points(self, x, y, a):
        delta = self._min_displacement(x, y, strict=True)
        a = np.asarray(a, dtype=float)
        return np.mod(x[None, :] + a[:, None] * delta[None, :], self.periods)

    def geodesic_batch(self, xs, ys, a):
        delta = self._min_displacement(xs, ys, strict=True)
        return np.mod(xs + a * delta, self.periods)

    def exp(self, x, v, s):
        x = self.coords(x)
        v = np.asarray(v, dtype=float)
        return np.mod(x + s * v / np.linalg.norm(v), self.periods)

    def ricci_f(self, x, v=None):
        return 0.0

    def _grid_spec(self, resolution, extent):
        edges = tuple(
            _axis_edges(0.0, p, resolution) for p in self.periods
        )
        return edges, (True, True)


# ---------------------------------------------------------------------------
# cone
# ---------------------------------------------------------------------------


class Cone(ModelSpace):
    """Two-dimensional metric cone over a circle of length alpha < 2*pi.

    Chart (r, phi), r >= 0, phi in [-alpha/2, alpha/2); measure r dr dphi.
    The punctured cone is flat; all curvature sits at the vertex.
    """

    chart_dim = 2

    def __init__(self, angle: float):
        if not (0.0 < angle < 2.0 * math.pi):
            raise ValueError("cone angle must lie in (0, 2*pi)")
        self.angle = float(angle)
        self.dim = 2

    @property
    def space_id(self) -> str:
        return f"cone(alpha={self.angle:g})"

    def _normalize(self, c):
        c = super()._normalize(c)
        c = np.array(c, dtype=float)
        r = c[..., 0]
        if np.any(r < 0):
            raise ValueError("cone radius must be nonnegative")
        half = 0.5 * self.angle
        c[..., 1] = np.mod(c[..., 1] + half, self.angle) - half
        # the vertex is a single point regardless of phi
        c[..., 1] = np.where(r == 0.0, 0.0, c[..., 1])
        return c

    def is_vertex(self, x) -> bool:
        return float(self.coords(x)[0]) == 0.0

    def _unfold_angle(self, a_phi, b_phi):
        d = np.abs(np.mod(a_phi - b_phi, self.angle))
        return np.minimum(d, self.angle - d)

    def _dist(self, a, b):
        r1, r2 = a[..., 0], b[..., 0]
        psi = self._unfold_angle(a[..., 1], b[..., 1])
        around = np.sqrt(
            np.maximum(r1**2 + r2**2 - 2.0 * r1 * r2 * np.cos(psi), 0.0)
        )
        # for alpha < 2*pi the unfolding angle is <= alpha/2 < pi, so the
        # through-vertex branch never wins; kept for completeness
        return np.where(psi <= math.pi, around, r1 + r2)

    def _signed_unfold(self, x, y, strict: bool):
        """Signed rotation from x's ray to y's ray along the shorter way."""
        raw = np.mod(y[..., 1] - x[..., 1] + 0.5 * self.angle, self.angle) - (
            0.5 * self.angle
        )
        if strict:
            tie = np.abs(np.abs(raw) - 0.5 * self.angle) <= _CONJUGACY_TOL
            both_off_vertex = (x[..., 0] > 0) & (y[..., 0] > 0)
            if np.any(tie & both_off_vertex):
                raise ConjugatePair(
                    "two minimizing unfoldings around the cone"
                )
        return raw

    def geodesic_points(self, x, y, a):
        a = np.asarray(a, dtype=float)
        return self.geodesic_batch(
            np.repeat(x[None, :], len(a), axis=0),
            np.repeat(y[None, :], len(a), axis=0),
            a,
        )

    def geodesic_batch(self, xs, ys, a):
        xs = np.atleast_2d(xs)
        ys = np.atleast_2d(ys)
        beta = self._signed_unfold(xs, ys, strict=True)
        # unfolded plane with x on the positive axis
        p1 = np.stack([xs[:, 0], np.zeros(len(xs))], axis=-1)
        p2 = np.stack([ys[:, 0] * np.cos(beta), ys[:, 0] * np.sin(beta)], axis=-1)
        p = p1 + np.asarray(a) * (p2 - p1) if np.isscalar(a) else (
            p1 + a[:, None] * (p2 - p1)
        )
        r = np.sqrt(np.sum(np.square(p), axis=-1))
        rot = np.arctan2(p[:, 1], p[:, 0])
        phi = xs[:, 1] + rot
        # radial geodesics through/into the vertex keep the other point's ray
        at_vertex = r == 0.0
        out = np.stack([r, np.where(at_vertex, 0.0, phi)], axis=-1)
        return self._normalize(out)

    def exp(self, x, v, s):
        x = self.coords(x)
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        if x[0] == 0.0:
            # direction at the vertex is a ray angle
            return self._normalize(np.array([s, x[1] + math.atan2(v[1], v[0])]))
        p = np.array([x[0] + s * v[0], s * v[1]])  # local (e_r, e_phi) frame
        r = float(np.hypot(p[0], p[1]))
        return self._normalize(np.array([r, x[1] + math.atan2(p[1], p[0])]))

    def ricci_f(self, x, v=None):
        if self.is_vertex(x):
            raise VertexCurvature("Ricci curvature is not defined at the vertex")
        return 0.0

    def chart_embedding(self, coords):
        coords = np.atleast_2d(coords)
        r, phi = coords[..., 0], coords[..., 1]
        return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)

    def _check_interior_geodesic(self, xc, yc):
        if xc[0] == 0.0 or yc[0] == 0.0:
            raise VertexCurvature(
                "geodesic touches the cone vertex at an endpoint"
            )
        super()._check_interior_geodesic(xc, yc)

    def _cell_measures_1d(self, axis, edges):
        if axis == 0:  # radial: integral of r dr
            return 0.5 * np.diff(np.square(edges))
        return np.diff(edges)

    def log_chart_density(self, coords):
        coords = np.atleast_2d(coords)
        return np.log(np.maximum(coords[..., 0], 1e-300))

    def _grid_spec(self, resolution, extent):
        half = 0.5 * self.angle
        n_phi = max(4, int(math.ceil(self.angle * extent / resolution)))
        return (
            (
                _axis_edges(0.0, extent, resolution),
                np.linspace(-half, half, n_phi + 1),
            ),
            (False, True),
        )

    def _patch_resolution(self, patch):
        dr = np.max(np.diff(patch.edges[0]))
        r_max = patch.edges[0][-1]
        dphi = np.max(np.diff(patch.edges[1]))
        return float(np.hypot(dr, r_max * dphi))


# ---------------------------------------------------------------------------
# sphere
# ---------------------------------------------------------------------------


class Sphere(ModelSpace):
    """Round 2-sphere of the given radius with surface measure."""

    chart_dim = 2

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.dim = 2

    @property
    def space_id(self) -> str:
        return f"sphere(r={self.radius:g})"

    def _normalize(self, c):
        c = super()._normalize(c)
        c = np.array(c, dtype=float)
        th = c[..., 0]
        if np.any((th < -1e-12) | (th > math.pi + 1e-12)):
            raise ValueError("polar angle must lie in [0, pi]")
        c[..., 0] = np.clip(th, 0.0, math.pi)
        c[..., 1] = np.mod(c[..., 1] + math.pi, 2.0 * math.pi) - math.pi
        return c

    def _embed(self, c):
        th, ph = c[..., 0], c[..., 1]
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)

    def _unembed(self, v):
        th = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
        ph = np.arctan2(v[..., 1], v[..., 0])
        return np.stack([th, ph], axis=-1)

    def _dist(self, a, b):
        cosd = np.sum(self._embed(a) * self._embed(b), axis=-1)
        return self.radius * np.arccos(np.clip(cosd, -1.0, 1.0))

    def geodesic_points(self, x, y, a):
        a = np.asarray(a, dtype=float)
        return self.geodesic_batch(
            np.repeat(x[None, :], len(a), axis=0),
            np.repeat(y[None, :], len(a), axis=0),
            a,
        )

    def geodesic_batch(self, xs, ys, a):
        xs, ys = np.atleast_2d(xs), np.atleast_2d(ys)
        u, v = self._embed(xs), self._embed(ys)
        cosw = np.clip(np.sum(u * v, axis=-1), -1.0, 1.0)
        w = np.arccos(cosw)
        if np.any(w >= math.pi - _CONJUGACY_TOL):
            raise ConjugatePair("antipodal points on the sphere")
        sw = np.sin(w)
        a = np.asarray(a, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            c1 = np.where(sw > 0, np.sin((1.0 - a) * w) / sw, 1.0 - a)
            c2 = np.where(sw > 0, np.sin(a * w) / sw, a)
        p = c1[..., None] * u + c2[..., None] * v
        p = p / np.linalg.norm(p, axis=-1, keepdims=True)
        return self._normalize(self._unembed(p))

    def exp(self, x, v, s):
        x = self.coords(x)
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        th, ph = x
        # orthonormal frame (e_theta, e_phi) pushed to the embedding
        e_th = np.array(
            [math.cos(th) * math.cos(ph), math.cos(th) * math.sin(ph), -math.sin(th)]
        )
        e_ph = np.array([-math.sin(ph), math.cos(ph), 0.0])
        p0 = self._embed(x[None, :])[0]
        direction = v[0] * e_th + v[1] * e_ph
        ang = s / self.radius
        p = math.cos(ang) * p0 + math.sin(ang) * direction
        return self._normalize(self._unembed(p[None, :])[0])

    def ricci_f(self, x, v=None):
        return 1.0 / self.radius**2

    def _sigma(self):
        return 1.0 / self.radius**2

    def chart_embedding(self, coords):
        return self._embed(np.atleast_2d(coords))

    def lower_ricci_bound(self):
        return 1.0 / self.radius**2

    def log_chart_density(self, coords):
        coords = np.atleast_2d(coords)
        return 2.0 * math.log(self.radius) + np.log(
            np.maximum(np.sin(coords[..., 0]), 1e-300)
        )

    def _cell_measures_1d(self, axis, edges):
        if axis == 0:  # polar: integral of sin(theta) dtheta, radius^2 factor
            return self.radius**2 * (np.cos(edges[:-1]) - np.cos(edges[1:]))
        return np.diff(edges)

    def _grid_spec(self, resolution, extent):
        n_th = max(2, int(math.ceil(math.pi * self.radius / resolution)))
        n_ph = max(4, int(math.ceil(2.0 * math.pi * self.radius / resolution)))
        return (
            (
                np.linspace(0.0, math.pi, n_th + 1),
                np.linspace(-math.pi, math.pi, n_ph + 1),
            ),
            (False, True),
        )

    def _patch_resolution(self, patch):
        dth = np.max(np.diff(patch.edges[0]))
        dph = np.max(np.diff(patch.edges[1]))
        st = np.max(np.sin(patch.centers[0]))
        return float(self.radius * np.hypot(dth, st * dph))


# ---------------------------------------------------------------------------
# construction from textual specifications (CLI)
# ---------------------------------------------------------------------------


def space_from_spec(spec: str) -> ModelSpace:
    """Parse "kind(param, ...)" strings, e.g. "cone(3.14159)" or "gaussian(1, 1.0)"."""
    spec = spec.strip().lower()
    if "(" not in spec or not spec.endswith(")"):
        raise ValueError(f"malformed space spec {spec!r}")
    kind, args = spec[:-1].split("(", 1)
    vals = [float(v) for v in args.split(",")] if args.strip() else []
    kind = kind.strip()
    if kind == "euclidean":
        return Euclidean(int(vals[0]))
    if kind == "gaussian":
        return Gaussian(int(vals[0]), vals[1])
    if kind == "flattorus":
        return FlatTorus(vals[0], vals[1])
    if kind == "cone":
        return Cone(vals[0])
    if kind == "sphere":
        return Sphere(vals[0] if vals else 1.0)
    raise ValueError(f"unknown space kind {kind!r}")
