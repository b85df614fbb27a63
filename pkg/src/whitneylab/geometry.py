"""Compact domains, direction sets, sample plans, and convex-geometry queries.

Domains are immutable descriptions (half-space polytopes, balls, capped norm
cones, unions, intersections, affine images) paired with a bounding box.  All
membership queries accept a single point ``(d,)`` or a batch ``(n, d)`` and
are deterministic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import PreconditionError

MEMBERSHIP_SLACK = 1e-12
BOUNDARY_TOL = 1e-8  # relative to bbox scale
RAY_SAMPLES = 10_000
UNIT_TOL = 1e-12


def _as_points(x, dim):
    """Coerce to an (n, d) float array; returns (array, was_single)."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        if pts.shape[0] != dim:
            raise PreconditionError(f"point has dim {pts.shape[0]}, domain has dim {dim}")
        return pts[None, :], True
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise PreconditionError(f"expected points of dim {dim}, got shape {pts.shape}")
    return pts, False


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PolytopeRep:
    """Half-space intersection {x : A x <= b}."""
    A: np.ndarray
    b: np.ndarray


@dataclass(eq=False)
class BallRep:
    center: np.ndarray
    radius: float


@dataclass(eq=False)
class ConeBodyRep:
    """Capped norm cone {x : ||x|| (1 - eps) <= x . xi <= 1}."""
    xi: np.ndarray
    eps: float


@dataclass(eq=False)
class UnionRep:
    parts: tuple


@dataclass(eq=False)
class IntersectionRep:
    parts: tuple


@dataclass(eq=False)
class AffineImageRep:
    """Image of ``base`` under x -> matrix @ x + shift (matrix invertible)."""
    base: "Domain"
    matrix: np.ndarray
    shift: np.ndarray
    inverse: np.ndarray


@dataclass(eq=False)
class Domain:
    """A compact subset of R^d with a guaranteed axis-aligned bounding box."""
    dim: int
    rep: object
    bbox: np.ndarray  # (2, d): [lo, hi]
    _vertices: Optional[np.ndarray] = field(default=None, repr=False)

    # -- queries ------------------------------------------------------------

    def contains(self, x, slack=None):
        """Membership; true for points of the represented closed set."""
        pts, single = _as_points(x, self.dim)
        if not np.all(np.isfinite(pts)):
            raise PreconditionError("membership query requires finite coordinates")
        out = _member(self.rep, pts, self._slack() if slack is None else slack)
        return bool(out[0]) if single else out

    def strictly_inside(self, x, margin=None):
        pts, single = _as_points(x, self.dim)
        m = margin if margin is not None else 1e-9 * self.scale()
        out = _member(self.rep, pts, -m)
        return bool(out[0]) if single else out

    def scale(self):
        ext = self.bbox[1] - self.bbox[0]
        return float(max(np.max(ext), 1e-300))

    def _slack(self):
        return MEMBERSHIP_SLACK * max(1.0, self.scale())

    def vertices(self):
        """Vertex list for polytope-backed domains (enumerated, cached)."""
        if self._vertices is None:
            rep = self.rep
            if isinstance(rep, PolytopeRep):
                self._vertices = _polytope_vertices(rep.A, rep.b)
            elif isinstance(rep, AffineImageRep) and isinstance(rep.base.rep, PolytopeRep):
                base = rep.base.vertices()
                self._vertices = base @ rep.matrix.T + rep.shift
            else:
                raise PreconditionError("vertices only available for polytope domains")
        return self._vertices

    def spec(self):
        """JSON-serializable description."""
        return _rep_spec(self.rep)


def _member(rep, pts, slack):
    if isinstance(rep, PolytopeRep):
        if rep.A.shape[0] == 0:
            return np.zeros(len(pts), dtype=bool)
        return np.all(pts @ rep.A.T <= rep.b + slack, axis=1)
    if isinstance(rep, BallRep):
        d2 = np.linalg.norm(pts - rep.center, axis=1)
        return d2 <= rep.radius + slack
    if isinstance(rep, ConeBodyRep):
        proj = pts @ rep.xi
        nrm = np.linalg.norm(pts, axis=1)
        return (nrm * (1.0 - rep.eps) <= proj + slack) & (proj <= 1.0 + slack)
    if isinstance(rep, UnionRep):
        out = np.zeros(len(pts), dtype=bool)
        for part in rep.parts:
            rem = ~out
            if not rem.any():
                break
            out[rem] = _member(part.rep, pts[rem], slack)
        return out
    if isinstance(rep, IntersectionRep):
        out = np.ones(len(pts), dtype=bool)
        for part in rep.parts:
            rem = out.nonzero()[0]
            if rem.size == 0:
                break
            out[rem] = _member(part.rep, pts[rem], slack)
        return out
    if isinstance(rep, AffineImageRep):
        back = (pts - rep.shift) @ rep.inverse.T
        return _member(rep.base.rep, back, slack / max(1.0, float(np.linalg.norm(rep.matrix, 2))))
    raise TypeError(f"unknown rep {type(rep)!r}")


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def polytope(A, b, require_interior=False):
    """Bounded half-space polytope {x : A x <= b}.

    With ``require_interior`` the Chebyshev radius must be positive, as for
    user-facing domains; internal decomposition pieces may be degenerate.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.shape[0]:
        raise PreconditionError("A and b row counts differ")
    d = A.shape[1]
    rep = PolytopeRep(A, b)
    bbox = _polytope_bbox(A, b)
    dom = Domain(d, rep, bbox)
    if require_interior:
        c, r = inscribed_ball(dom)
        if not r > 0:
            raise PreconditionError("polytope has empty interior")
    return dom


def box(lo, hi):
    """Axis-aligned box [lo, hi] as a polytope domain."""
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    d = lo.size
    A = np.vstack([np.eye(d), -np.eye(d)])
    b = np.concatenate([hi, -lo])
    return polytope(A, b)


def ball(center, radius):
    center = np.asarray(center, dtype=float).ravel()
    if radius <= 0:
        raise PreconditionError("ball radius must be positive")
    bbox = np.vstack([center - radius, center + radius])
    return Domain(center.size, BallRep(center, float(radius)), bbox)


def cone_body(xi, eps):
    """The capped cone {x: ||x||(1-eps) <= x.xi <= 1} for a unit vector xi."""
    xi = np.asarray(xi, dtype=float).ravel()
    d = xi.size
    if d < 2:
        raise PreconditionError("cone body needs dimension >= 2")
    nrm = np.linalg.norm(xi)
    if abs(nrm - 1.0) > 1e-9:
        raise PreconditionError("xi must be a unit vector")
    xi = xi / nrm
    if not 0.0 < eps < 1.0:
        raise PreconditionError("eps must lie in (0, 1)")
    # extreme points: apex at 0 and the rim sphere {x.xi = 1, ||x|| = 1/(1-eps)}
    rim_rho = math.sqrt(1.0 / (1.0 - eps) ** 2 - 1.0)
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        perp = math.sqrt(max(0.0, 1.0 - xi[i] ** 2))
        hi[i] = max(0.0, xi[i] + rim_rho * perp)
        lo[i] = min(0.0, xi[i] - rim_rho * perp)
    return Domain(d, ConeBodyRep(xi, float(eps)), np.vstack([lo, hi]))


def union(parts):
    parts = tuple(parts)
    d = parts[0].dim
    lo = np.min([p.bbox[0] for p in parts], axis=0)
    hi = np.max([p.bbox[1] for p in parts], axis=0)
    return Domain(d, UnionRep(parts), np.vstack([lo, hi]))


def intersection(parts):
    parts = tuple(parts)
    d = parts[0].dim
    lo = np.max([p.bbox[0] for p in parts], axis=0)
    hi = np.min([p.bbox[1] for p in parts], axis=0)
    return Domain(d, IntersectionRep(parts), np.vstack([lo, hi]))


def affine_image(base, matrix, shift):
    matrix = np.asarray(matrix, dtype=float)
    shift = np.asarray(shift, dtype=float).ravel()
    inv = np.linalg.inv(matrix)
    corners = _bbox_corners(base.bbox)
    img = corners @ matrix.T + shift
    bbox = np.vstack([img.min(axis=0), img.max(axis=0)])
    return Domain(base.dim, AffineImageRep(base, matrix, shift, inv), bbox)


def _bbox_corners(bbox):
    lo, hi = bbox
    d = lo.size
    return np.array([[hi[i] if (k >> i) & 1 else lo[i] for i in range(d)]
                     for k in range(1 << d)])


def _polytope_bbox(A, b):
    d = A.shape[1]
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        c = np.zeros(d)
        c[i] = 1.0
        res_min = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
        res_max = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
        if res_min.status == 3 or res_max.status == 3:
            raise PreconditionError("polytope is unbounded")
        if res_min.status == 2 or res_max.status == 2:  # infeasible: empty piece
            return np.vstack([np.zeros(d), np.zeros(d)])
        lo[i] = res_min.fun
        hi[i] = -res_max.fun
    return np.vstack([lo, hi])


def _polytope_vertices(A, b, tol=1e-9):
    m, d = A.shape
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    verts = []
    for idx in itertools.combinations(range(m), d):
        sub = A[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, b[list(idx)])
        if np.all(A @ v <= b + tol * scale):
            verts.append(v)
    if not verts:
        return np.zeros((0, d))
    verts = np.array(verts)
    # dedupe
    keep = []
    for v in verts:
        if not any(np.linalg.norm(v - verts[k]) < tol * scale for k in keep):
            keep.append(len(keep))
            verts[len(keep) - 1] = v
    return verts[: len(keep)]


# ---------------------------------------------------------------------------
# JSON specs
# ---------------------------------------------------------------------------

def _rep_spec(rep):
    if isinstance(rep, PolytopeRep):
        return {"type": "polytope", "A": rep.A.tolist(), "b": rep.b.tolist()}
    if isinstance(rep, BallRep):
        return {"type": "ball", "center": rep.center.tolist(), "radius": rep.radius}
    if isinstance(rep, ConeBodyRep):
        return {"type": "cone_body", "xi": rep.xi.tolist(), "eps": rep.eps}
    if isinstance(rep, UnionRep):
        return {"type": "union", "parts": [p.spec() for p in rep.parts]}
    if isinstance(rep, IntersectionRep):
        return {"type": "intersection", "parts": [p.spec() for p in rep.parts]}
    if isinstance(rep, AffineImageRep):
        return {"type": "affine_image", "base": rep.base.spec(),
                "matrix": rep.matrix.tolist(), "shift": rep.shift.tolist()}
    raise TypeError(f"unknown rep {type(rep)!r}")


def domain_from_spec(spec):
    """Rebuild a Domain from its JSON description."""
    kind = spec.get("type")
    if kind == "polytope":
        return polytope(spec["A"], spec["b"])
    if kind == "ball":
        return ball(spec["center"], spec["radius"])
    if kind == "cone_body":
        return cone_body(spec["xi"], spec["eps"])
    if kind == "union":
        return union([domain_from_spec(s) for s in spec["parts"]])
    if kind == "intersection":
        return intersection([domain_from_spec(s) for s in spec["parts"]])
    if kind == "affine_image":
        return affine_image(domain_from_spec(spec["base"]), spec["matrix"], spec["shift"])
    raise PreconditionError(f"unknown domain type {kind!r}")


# ---------------------------------------------------------------------------
# direction sets
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class DirectionSet:
    """Finite set of unit directions with cached spread.

    ``spread`` is the minimum over unit x of max_i |dirs_i . x|; it is
    positive exactly when the directions span R^d.
    """
    dirs: np.ndarray  # (k, d), unit rows
    spread: float

    @property
    def dim(self):
        return self.dirs.shape[1]

    def __len__(self):
        return self.dirs.shape[0]

    def symmetrized(self):
        """The set closed under negation, with duplicates removed."""
        allv = np.vstack([self.dirs, -self.dirs])
        keep = []
        for v in allv:
            if not any(np.linalg.norm(v - w) < 1e-12 for w in keep):
                keep.append(v)
        return direction_set(np.array(keep))

    def spec(self):
        return {"dirs": self.dirs.tolist()}


def direction_set(vectors):
    dirs = np.atleast_2d(np.asarray(vectors, dtype=float))
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(norms == 0):
        raise PreconditionError("zero vector in direction set")
    dirs = dirs / norms[:, None]
    return DirectionSet(dirs, _spread(dirs))


def direction_set_from_spec(spec):
    return direction_set(spec["dirs"])


def _spread(dirs):
    k, d = dirs.shape
    if np.linalg.matrix_rank(dirs, tol=1e-10) < d:
        return 0.0
    if d == 1:
        return 1.0

    def f(v):
        v = v / np.linalg.norm(v)
        return float(np.max(np.abs(dirs @ v)))

    if d == 2:
        theta = np.linspace(0.0, math.pi, 4096, endpoint=False)
        cand = np.column_stack([np.cos(theta), np.sin(theta)])
        vals = np.max(np.abs(cand @ dirs.T), axis=1)
        best = np.argmin(vals)
        lo, hi = theta[best] - math.pi / 4096, theta[best] + math.pi / 4096
        g = lambda t: f(np.array([math.cos(t), math.sin(t)]))
        val = _golden_min(g, lo, hi, tol=1e-13)
        return min(float(vals[best]), val)

    rng = np.random.default_rng(12345)
    cand = rng.standard_normal((8192, d))
    cand /= np.linalg.norm(cand, axis=1)[:, None]
    vals = np.max(np.abs(cand @ dirs.T), axis=1)
    order = np.argsort(vals)[:6]
    best = float(vals[order[0]])
    for i in order:
        res = minimize(f, cand[i], method="Nelder-Mead",
                       options={"maxfev": 2000, "xatol": 1e-12, "fatol": 1e-14})
        best = min(best, float(res.fun))
    return best


def _golden_min(g, lo, hi, tol=1e-12):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d_ = a + phi * (b - a)
    fc, fd = g(c), g(d_)
    while b - a > tol:
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - phi * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + phi * (b - a)
            fd = g(d_)
    return min(fc, fd)


# ---------------------------------------------------------------------------
# sample plans
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SamplePlan:
    """Monte Carlo quadrature plan: member points with volume weights."""
    points: np.ndarray
    weights: np.ndarray
    seed: int
    density: float

    def __len__(self):
        return self.points.shape[0]


def sample_plan(dom, n_points=4096, seed=0, extra_points=None):
    """Uniform rejection-sampled plan over ``dom``.

    Weight per point is vol_estimate / n so the weights sum to the Monte
    Carlo volume estimate.  ``extra_points`` are appended (they must be
    members) and share the same weight.
    """
    rng = np.random.default_rng(seed)
    lo, hi = dom.bbox
    bbox_vol = float(np.prod(hi - lo))
    accepted = []
    n_acc = 0
    n_prop = 0
    batch = max(4 * n_points, 1024)
    while n_acc < n_points:
        pts = rng.uniform(lo, hi, size=(batch, dom.dim))
        mask = dom.contains(pts)
        n_prop += batch
        got = pts[mask]
        accepted.append(got)
        n_acc += len(got)
        if n_prop > 1000 * n_points + 100_000:
            raise PreconditionError("rejection sampling acceptance rate too low")
    pts = np.vstack(accepted)[:n_points]
    vol_est = bbox_vol * (n_acc / n_prop)
    if extra_points is not None:
        extra = np.atleast_2d(np.asarray(extra_points, dtype=float))
        if not np.all(dom.contains(extra)):
            raise PreconditionError("extra plan points must belong to the domain")
        pts = np.vstack([pts, extra])
    w = np.full(len(pts), vol_est / len(pts))
    vol_ref = max(vol_est, 1e-300)
    return SamplePlan(pts, w, seed, len(pts) / vol_ref)


def grid_plan(dom, n_per_axis):
    """Deterministic grid plan (membership-filtered lattice)."""
    lo, hi = dom.bbox
    axes = [np.linspace(lo[i], hi[i], n_per_axis) for i in range(dom.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    mask = dom.contains(pts)
    pts = pts[mask]
    cell = float(np.prod((hi - lo) / max(n_per_axis - 1, 1)))
    w = np.full(len(pts), cell if dom.dim > 0 else 1.0)
    vol = max(float(w.sum()), 1e-300)
    return SamplePlan(pts, w, 0, len(pts) / vol)


# ---------------------------------------------------------------------------
# membership / diameter / inscribed ball / normalize
# ---------------------------------------------------------------------------

def membership(dom, x):
    """True iff x lies in the represented closed set."""
    return dom.contains(x)


@dataclass(frozen=True)
class DiameterResult:
    value: float
    approximate: bool

    def __float__(self):
        return self.value


def diameter(dom, plan=None):
    """Largest pairwise distance; exact for polytopes, balls, and cone bodies.

    For other representations the maximum is taken over plan points and is a
    lower bound, reported with ``approximate=True``.
    """
    rep = dom.rep
    if isinstance(rep, PolytopeRep) or (
        isinstance(rep, AffineImageRep) and isinstance(rep.base.rep, PolytopeRep)
    ):
        verts = dom.vertices()
        if len(verts) == 0:
            raise PreconditionError("empty domain has no diameter")
        return DiameterResult(_max_pairwise(verts), False)
    if isinstance(rep, BallRep):
        return DiameterResult(2.0 * rep.radius, False)
    if isinstance(rep, ConeBodyRep):
        rim_rho = math.sqrt(1.0 / (1.0 - rep.eps) ** 2 - 1.0)
        slant = 1.0 / (1.0 - rep.eps)
        return DiameterResult(max(2.0 * rim_rho, slant), False)
    if isinstance(rep, AffineImageRep) and isinstance(rep.base.rep, BallRep):
        smax = float(np.linalg.svd(rep.matrix, compute_uv=False)[0])
        return DiameterResult(2.0 * rep.base.rep.radius * smax, False)
    if plan is None or len(plan) == 0:
        raise PreconditionError("diameter of a sampled domain needs a nonempty plan")
    return DiameterResult(_max_pairwise(plan.points), True)


def _max_pairwise(pts):
    if len(pts) > 64 and pts.shape[1] in (2, 3):
        try:
            from scipy.spatial import ConvexHull
            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass
    best = 0.0
    chunk = 512
    for i in range(0, len(pts), chunk):
        block = pts[i:i + chunk]
        d = np.linalg.norm(block[:, None, :] - pts[None, :, :], axis=2)
        best = max(best, float(d.max()))
    return best


def inscribed_ball(dom):
    """Chebyshev center and radius of a bounded polytope (via linear program).

    The optimal-face midpoint refinement makes the center unique and
    deterministic when the largest inscribed ball is not.
    """
    if not isinstance(dom.rep, PolytopeRep):
        raise PreconditionError("inscribed_ball requires a polytope domain")
    A, b = dom.rep.A, dom.rep.b
    m, d = A.shape
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(d + 1)
    c[d] = -1.0
    A_ub = np.hstack([A, norms[:, None]])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * d + [(0, None)],
                  method="highs")
    if res.status == 3:
        raise PreconditionError("polytope is unbounded")
    if res.status == 2 or res.x is None:
        raise PreconditionError("polytope is infeasible")
    radius = float(res.x[d])
    if radius <= 1e-12 * max(1.0, float(np.max(np.abs(b)))):
        raise PreconditionError("polytope has empty interior (zero inscribed radius)")
    # midpoint of the optimal center set, coordinate by coordinate
    center = np.empty(d)
    A_fix = np.vstack([A_ub, np.concatenate([np.zeros(d), [-1.0]])])
    b_fix = np.concatenate([b, [-radius * (1.0 - 1e-12)]])
    for i in range(d):
        ci = np.zeros(d + 1)
        ci[i] = 1.0
        r_lo = linprog(ci, A_ub=A_fix, b_ub=b_fix,
                       bounds=[(None, None)] * d + [(0, None)], method="highs")
        r_hi = linprog(-ci, A_ub=A_fix, b_ub=b_fix,
                       bounds=[(None, None)] * d + [(0, None)], method="highs")
        if r_lo.x is None or r_hi.x is None:
            center[i] = res.x[i]
        else:
            center[i] = 0.5 * (r_lo.x[i] + r_hi.x[i])
    return center, radius


@dataclass(frozen=True)
class AffineMap:
    """x -> matrix @ x + shift."""
    matrix: np.ndarray
    shift: np.ndarray

    def apply(self, x):
        pts, single = _as_points(x, self.matrix.shape[1])
        out = pts @ self.matrix.T + self.shift
        return out[0] if single else out

    def apply_domain(self, dom):
        return affine_image(dom, self.matrix, self.shift)


def normalize(dom):
    """Affine map sending the inscribed ball to the unit ball at the origin.

    Returns (map, R) where R is the radius of the smallest origin-centered
    ball containing the image (computed over the image vertices).
    """
    c, rho = inscribed_ball(dom)
    matrix = np.eye(dom.dim) / rho
    shift = -c / rho
    amap = AffineMap(matrix, shift)
    verts = dom.vertices()
    img = verts @ matrix.T + shift
    R = float(np.max(np.linalg.norm(img, axis=1)))
    return amap, R


def as_polytope(dom):
    """Flatten an affine image of a polytope into a direct half-space form."""
    if isinstance(dom.rep, PolytopeRep):
        return dom
    if isinstance(dom.rep, AffineImageRep) and isinstance(dom.rep.base.rep, PolytopeRep):
        A = dom.rep.base.rep.A @ dom.rep.inverse
        b = dom.rep.base.rep.b + A @ dom.rep.shift
        return polytope(A, b)
    raise PreconditionError("domain is not polytope-backed")


# ---------------------------------------------------------------------------
# boundary, illumination, x-ray
# ---------------------------------------------------------------------------

def _boundary_info(dom, x):
    """(is_boundary, active_normals or None). Tolerance is relative to scale."""
    tol = BOUNDARY_TOL * dom.scale()
    rep = dom.rep
    x = np.asarray(x, dtype=float).ravel()
    if not dom.contains(x, slack=tol):
        return False, None
    if isinstance(rep, PolytopeRep):
        res = rep.A @ x - rep.b
        norms = np.linalg.norm(rep.A, axis=1)
        active = np.abs(res) <= tol * np.maximum(norms, 1e-300)
        return bool(active.any()), rep.A[active]
    if isinstance(rep, BallRep):
        return abs(np.linalg.norm(x - rep.center) - rep.radius) <= tol, None
    if isinstance(rep, ConeBodyRep):
        proj = float(x @ rep.xi)
        nrm = float(np.linalg.norm(x))
        on_cap = abs(proj - 1.0) <= tol
        on_cone = abs(nrm * (1.0 - rep.eps) - proj) <= tol
        return on_cap or on_cone, None
    # generic: member but not strictly interior, probed on a small sphere
    probe = 32 * dom.dim
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((probe, dom.dim))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    probes = x + 10.0 * tol * dirs
    inside = dom.contains(probes)
    return not bool(inside.all()), None


def illuminated(dom, x, e):
    """Whether the open ray from boundary point ``x`` along ``e`` enters the interior.

    Polytopes are decided exactly through the active constraint normals; other
    representations use sampled points along the ray up to twice the diameter.
    """
    x = np.asarray(x, dtype=float).ravel()
    e = np.asarray(e, dtype=float).ravel()
    e = e / np.linalg.norm(e)
    on_bdry, active = _boundary_info(dom, x)
    if not on_bdry:
        raise PreconditionError("illumination query requires a boundary point")
    if isinstance(dom.rep, PolytopeRep):
        return bool(np.all(active @ e < 0.0))
    if isinstance(dom.rep, BallRep):
        return bool(e @ (x - dom.rep.center) < 0.0)
    try:
        diam = diameter(dom).value
    except PreconditionError:
        diam = float(np.linalg.norm(dom.bbox[1] - dom.bbox[0]))
    ts = np.linspace(0.0, 2.0 * diam, RAY_SAMPLES + 1)[1:]
    pts = x[None, :] + ts[:, None] * e[None, :]
    return bool(np.any(dom.strictly_inside(pts)))


def xray_verifies(dom, dirset, boundary_sample):
    """Check that every boundary sample is illuminated by some +/- direction.

    Returns (ok, witnesses) where witnesses lists the unilluminated points.
    """
    pts = np.atleast_2d(np.asarray(boundary_sample, dtype=float))
    if len(pts) == 0:
        raise PreconditionError("boundary sample must be nonempty")
    sym = dirset.symmetrized()
    witnesses = []
    for x in pts:
        if not any(illuminated(dom, x, e) for e in sym.dirs):
            witnesses.append(x.copy())
    return len(witnesses) == 0, witnesses


def boundary_points(dom, n=256, seed=0, include_vertices=True):
    """Boundary sample by ray bisection from an interior anchor.

    For polytopes the vertex list is always included, as illumination
    failures concentrate there.
    """
    rng = np.random.default_rng(seed)
    anchor = _interior_anchor(dom, rng)
    dirs = rng.standard_normal((n, dom.dim))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    hi0 = 2.0 * float(np.linalg.norm(dom.bbox[1] - dom.bbox[0])) + 1.0
    pts = []
    for u in dirs:
        lo, hi = 0.0, hi0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if dom.contains(anchor + mid * u):
                lo = mid
            else:
                hi = mid
        pts.append(anchor + lo * u)
    pts = np.array(pts)
    if include_vertices and isinstance(dom.rep, PolytopeRep):
        pts = np.vstack([dom.vertices(), pts])
    return pts


def _interior_anchor(dom, rng):
    if isinstance(dom.rep, PolytopeRep):
        c, _ = inscribed_ball(dom)
        return c
    if isinstance(dom.rep, BallRep):
        return dom.rep.center.copy()
    lo, hi = dom.bbox
    margin = 1e-7 * dom.scale()
    for _ in range(100_000):
        x = rng.uniform(lo, hi)
        if dom.strictly_inside(x, margin):
            return x
    raise PreconditionError("could not find an interior point")


# ---------------------------------------------------------------------------
# signed boundary distance (used by the hexagon search)
# ---------------------------------------------------------------------------

def signed_boundary_distance(dom, x, anchor=None):
    """Negative inside, positive outside; exact for polytopes and balls."""
    pts, single = _as_points(x, dom.dim)
    rep = dom.rep
    if isinstance(rep, PolytopeRep):
        norms = np.maximum(np.linalg.norm(rep.A, axis=1), 1e-300)
        vals = (pts @ rep.A.T - rep.b) / norms
        out = np.max(vals, axis=1)
    elif isinstance(rep, BallRep):
        out = np.linalg.norm(pts - rep.center, axis=1) - rep.radius
    else:
        if anchor is None:
            anchor = _interior_anchor(dom, np.random.default_rng(0))
        out = np.empty(len(pts))
        hi0 = 2.0 * float(np.linalg.norm(dom.bbox[1] - dom.bbox[0])) + 1.0
        for i, p in enumerate(pts):
            v = p - anchor
            rad = np.linalg.norm(v)
            if rad < 1e-300:
                out[i] = -hi0
                continue
            u = v / rad
            lo, hi = 0.0, hi0
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                if dom.contains(anchor + mid * u):
                    lo = mid
                else:
                    hi = mid
            out[i] = rad - lo
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# inscribed affine-regular hexagon
# ---------------------------------------------------------------------------

HEXAGON_TEMPLATE = np.array([
    [1.0, 1.0], [0.0, 2.0], [-1.0, 1.0], [-1.0, -1.0], [0.0, -2.0], [1.0, -1.0],
])


@dataclass(frozen=True)
class HexagonResult:
    vertices: np.ndarray
    boundary_residual: float
    area: float
    converged: bool


def inscribed_affine_hexagon(dom, n_starts=16, budget=5000, seed=0):
    """Largest affine-regular hexagon inscribed in a planar convex body.

    Variational search over the six affine parameters: first maximize area
    under a containment penalty, then polish the vertices onto the boundary
    while holding the area.  If the polish residual stays above tolerance the
    best candidate is still returned, flagged unconverged.
    """
    if dom.dim != 2:
        raise PreconditionError("hexagon search is planar only")
    rng = np.random.default_rng(seed)
    anchor = _interior_anchor(dom, rng)
    scale0 = 0.25 * dom.scale()
    tol = BOUNDARY_TOL * dom.scale()

    def verts_of(params):
        M = params[:4].reshape(2, 2)
        s = params[4:]
        return HEXAGON_TEMPLATE @ M.T + s, M

    def sdists(v):
        return signed_boundary_distance(dom, v, anchor=anchor)

    def area_of(M):
        return 6.0 * abs(np.linalg.det(M))

    pen_w = 400.0 / max(scale0 ** 2, 1e-300)

    def phase1(params):
        v, M = verts_of(params)
        sd = sdists(v)
        return -area_of(M) + pen_w * scale0 ** 2 * np.sum(np.maximum(sd, 0.0) ** 2)

    best = None
    for k in range(n_starts):
        M0 = scale0 * (np.eye(2) + 0.3 * rng.standard_normal((2, 2)))
        x0 = np.concatenate([M0.ravel(), anchor + 0.1 * scale0 * rng.standard_normal(2)])
        res = minimize(phase1, x0, method="Nelder-Mead",
                       options={"maxfev": budget, "xatol": 1e-12, "fatol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    v, M = verts_of(best.x)
    area_target = area_of(M)

    def phase2(params):
        v, M = verts_of(params)
        sd = sdists(v)
        short = max(0.0, 0.995 * area_target - area_of(M))
        return float(np.sum(sd ** 2) + 50.0 * short ** 2)

    res2 = minimize(phase2, best.x, method="Nelder-Mead",
                    options={"maxfev": 2 * budget, "xatol": 1e-15, "fatol": 1e-30})
    v, M = verts_of(res2.x)
    resid = float(np.max(np.abs(sdists(v))))
    return HexagonResult(v, resid, area_of(M), resid <= max(tol, 1e-6 * dom.scale()))
