"""
Convex bodies and the geometric primitives every other module consumes.

A lambda-concave body is represented constructively as core + ball of radius
1/lambda (Blaschke's rolling theorem makes this equivalent to the pointwise
definition), so every operation here is exact on the core vertex list.
"""

import itertools
import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from quermass_lab.errors import RejectedInputError, UnsupportedOperationError
from quermass_lab.hull_projection import DEFAULT_TOL, HullOracle

logger = logging.getLogger(__name__)

Point = Tuple[float, ...]

UNIT_TOL = 1e-12
FRAME_TOL = 1e-10
DEDUP_TOL = 1e-12


class _BodyBase(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    dim: int = Field(ge=1, description="Ambient dimension d")

    def _check_points(self, name: str, points) -> None:
        for idx, pt in enumerate(points):
            if len(pt) != self.dim:
                raise ValueError(f"{name}[{idx}] has {len(pt)} coordinates, expected dim={self.dim}")


class Ball(_BodyBase):
    """Euclidean ball"""
    kind: Literal["ball"] = "ball"
    center: Point = Field(description="Center of the ball")
    radius: float = Field(gt=0, description="Radius")

    @model_validator(mode="after")
    def _dims(self):
        self._check_points("center", [self.center])
        return self


class Sausage(_BodyBase):
    """Convex hull of two equal balls centered at p and q"""
    kind: Literal["sausage"] = "sausage"
    p: Point = Field(description="First axis endpoint")
    q: Point = Field(description="Second axis endpoint")
    radius: float = Field(gt=0, description="Common radius of the two balls")

    @model_validator(mode="after")
    def _dims(self):
        self._check_points("p", [self.p])
        self._check_points("q", [self.q])
        return self


class CoreBall(_BodyBase):
    """conv(core_vertices) + radius * B; radius 0 only as an erosion intermediate"""
    kind: Literal["core_ball"] = "core_ball"
    core_vertices: Tuple[Point, ...] = Field(min_length=1, description="Vertices spanning the core")
    radius: float = Field(ge=0, description="Radius of the rolling ball (1/lambda)")

    @model_validator(mode="after")
    def _dims(self):
        self._check_points("core_vertices", self.core_vertices)
        return self


class VPolytope(_BodyBase):
    """Polytope given by its vertices"""
    kind: Literal["v_polytope"] = "v_polytope"
    vertices: Tuple[Point, ...] = Field(min_length=1, description="Vertices")

    @model_validator(mode="after")
    def _dims(self):
        self._check_points("vertices", self.vertices)
        return self


ConvexBody = Annotated[Union[Ball, Sausage, CoreBall, VPolytope], Field(discriminator="kind")]
BODY_ADAPTER = TypeAdapter(ConvexBody)


class SupportSample(BaseModel):
    """One evaluation of a support function"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    direction: Point = Field(description="Unit direction u")
    value: float = Field(description="h_K(u)")

    @model_validator(mode="after")
    def _unit(self):
        if abs(float(np.linalg.norm(self.direction)) - 1.0) > UNIT_TOL:
            raise ValueError("direction must have unit length")
        return self


# ---------------------------------------------------------------------------
# JSON contract

def _rejected_from_validation(e: ValidationError) -> RejectedInputError:
    err = e.errors()[0]
    field = ".".join(str(part) for part in err["loc"]) or "body"
    return RejectedInputError(err["msg"], field=field)


def load_body(data: Union[str, bytes, dict]) -> ConvexBody:
    """Parse a body from its JSON text or decoded dict"""
    try:
        if isinstance(data, (str, bytes)):
            return BODY_ADAPTER.validate_json(data)
        return BODY_ADAPTER.validate_python(data)
    except ValidationError as e:
        raise _rejected_from_validation(e) from e


def dump_body(body: ConvexBody) -> str:
    return body.model_dump_json()


def read_body_file(path: Union[str, Path]) -> ConvexBody:
    return load_body(Path(path).read_text())


def write_body_file(body: ConvexBody, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_body(body) + "\n")
    logger.info("wrote body to %s", path)
    return path


# ---------------------------------------------------------------------------
# views

def vertex_array(body: ConvexBody) -> np.ndarray:
    """Core vertices as an (m, d) array (the vertices themselves for a VPolytope)"""
    if isinstance(body, Ball):
        return np.array([body.center], dtype=float)
    if isinstance(body, Sausage):
        return np.array([body.p, body.q], dtype=float)
    if isinstance(body, CoreBall):
        return np.array(body.core_vertices, dtype=float)
    return np.array(body.vertices, dtype=float)


def ball_radius(body: ConvexBody) -> float:
    return 0.0 if isinstance(body, VPolytope) else float(body.radius)


def has_core(body: ConvexBody) -> bool:
    return not isinstance(body, VPolytope)


def to_core_ball(body: ConvexBody) -> CoreBall:
    """Canonical CoreBall view; a VPolytope becomes a radius-0 CoreBall"""
    if isinstance(body, CoreBall):
        return body
    return CoreBall(dim=body.dim, core_vertices=_as_points(vertex_array(body)), radius=ball_radius(body))


def lambda_of(body: ConvexBody) -> float:
    """The lambda for which the body is lambda-concave"""
    r = ball_radius(body)
    if not has_core(body) or r <= 0.0:
        raise RejectedInputError("body is not lambda-concave for any finite lambda", field="radius")
    return 1.0 / r


def _as_points(arr: np.ndarray) -> Tuple[Point, ...]:
    return tuple(tuple(float(c) for c in row) for row in np.atleast_2d(arr))


def _unit(u, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (dim,):
        raise RejectedInputError(f"direction must have {dim} coordinates", field="u")
    if abs(float(np.linalg.norm(u)) - 1.0) > UNIT_TOL:
        raise RejectedInputError("direction is not a unit vector", field="u")
    return u


# ---------------------------------------------------------------------------
# support / membership

def support(body: ConvexBody, u) -> float:
    """h_K(u) = max over K of <x, u>"""
    u = _unit(u, body.dim)
    return float(np.max(vertex_array(body) @ u)) + ball_radius(body)


def support_many(body: ConvexBody, directions) -> np.ndarray:
    """Support values for a batch of unit directions (rows)"""
    U = np.atleast_2d(np.asarray(directions, dtype=float))
    norms = np.linalg.norm(U, axis=1)
    if U.shape[1] != body.dim or np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise RejectedInputError("directions must be unit vectors of the body dimension", field="directions")
    return np.max(vertex_array(body) @ U.T, axis=0) + ball_radius(body)


def support_samples(body: ConvexBody, directions) -> List[SupportSample]:
    values = support_many(body, directions)
    return [SupportSample(direction=tuple(map(float, u)), value=float(h))
            for u, h in zip(np.atleast_2d(directions), values)]


def support_dominates(inner: ConvexBody, outer: ConvexBody, directions, tol: float = 1e-12) -> bool:
    """True if h_inner <= h_outer on every sampled direction (inclusion test)"""
    return bool(np.all(support_many(inner, directions) <= support_many(outer, directions) + tol))


def _segment_distance(x: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    axis = q - p
    length2 = float(axis @ axis)
    if length2 == 0.0:
        return float(np.linalg.norm(x - p))
    s = np.clip(float((x - p) @ axis) / length2, 0.0, 1.0)
    return float(np.linalg.norm(x - (p + s * axis)))


def distance(body: ConvexBody, x, tol: float = DEFAULT_TOL) -> float:
    """Euclidean distance from x to the body (0 inside)"""
    x = np.asarray(x, dtype=float)
    if x.shape != (body.dim,):
        raise RejectedInputError(f"point must have {body.dim} coordinates", field="x")

    if isinstance(body, Ball):
        core_dist = float(np.linalg.norm(x - np.asarray(body.center)))
    elif isinstance(body, Sausage):
        core_dist = _segment_distance(x, np.asarray(body.p), np.asarray(body.q))
    else:
        core_dist = float(HullOracle(vertex_array(body), tol=tol).distances(x[None, :])[0])
    return max(core_dist - ball_radius(body), 0.0)


def contains(body: ConvexBody, x, tol: float = 0.0) -> bool:
    """dist(x, body) <= tol"""
    return distance(body, x, tol=min(max(tol, 1e-12), DEFAULT_TOL)) <= tol


# ---------------------------------------------------------------------------
# Minkowski operations

def dilate(body: ConvexBody, t: float) -> ConvexBody:
    """body + tB"""
    if t < 0:
        raise RejectedInputError("dilation amount must be nonnegative", field="t")
    if isinstance(body, Ball):
        return Ball(dim=body.dim, center=body.center, radius=body.radius + t)
    if isinstance(body, Sausage):
        return Sausage(dim=body.dim, p=body.p, q=body.q, radius=body.radius + t)
    if isinstance(body, CoreBall):
        return CoreBall(dim=body.dim, core_vertices=body.core_vertices, radius=body.radius + t)
    if t == 0:
        return body
    return CoreBall(dim=body.dim, core_vertices=body.vertices, radius=t)


def erode(body: ConvexBody, t: float) -> Optional[ConvexBody]:
    """body - tB (Minkowski difference); None when the result is empty"""
    if t < 0:
        raise RejectedInputError("erosion amount must be nonnegative", field="t")

    r = ball_radius(body)
    if t <= r and has_core(body):
        rest = r - t
        if rest > 0.0:
            if isinstance(body, Ball):
                return Ball(dim=body.dim, center=body.center, radius=rest)
            if isinstance(body, Sausage):
                return Sausage(dim=body.dim, p=body.p, q=body.q, radius=rest)
            return CoreBall(dim=body.dim, core_vertices=body.core_vertices, radius=rest)
        return VPolytope(dim=body.dim, vertices=_as_points(vertex_array(body)))

    return _erode_polytope(body.dim, vertex_array(body), t - r)


def _erode_polytope(dim: int, V: np.ndarray, s: float) -> Optional[VPolytope]:
    """Inward facet offset of conv(V) by s, back to vertices"""
    if s == 0.0:
        return VPolytope(dim=dim, vertices=_as_points(V))

    if dim == 1:
        lo, hi = float(V.min()) + s, float(V.max()) - s
        if lo > hi + 1e-12:
            return None
        return VPolytope(dim=1, vertices=((lo,), (max(hi, lo),)))

    if _affine_rank(V, 1e-9) < dim:
        # flat polytope: no interior to shrink into
        return None
    if dim > 3:
        raise UnsupportedOperationError("erosion past the ball radius needs facet enumeration, available for dim <= 3")

    hull = ConvexHull(V)
    eq = np.unique(np.round(hull.equations, 12), axis=0)
    A = eq[:, :-1]
    b = -eq[:, -1] - s * np.linalg.norm(A, axis=1)

    scale = float(np.max(np.abs(V))) + 1.0
    combos = np.array(list(itertools.combinations(range(len(A)), dim)))
    systems = A[combos]
    dets = np.linalg.det(systems)
    ok = np.abs(dets) > 1e-12
    if not np.any(ok):
        return None
    points = np.linalg.solve(systems[ok], b[combos[ok]][..., None])[..., 0]
    feasible = np.all(points @ A.T <= b + 1e-9 * scale, axis=1)
    points = points[feasible]
    if points.shape[0] == 0:
        return None

    points = _dedupe(points, 1e-9 * scale)
    if points.shape[0] >= dim + 1 and _affine_rank(points, 1e-9) == dim:
        points = points[ConvexHull(points).vertices]
    logger.debug("erosion by %.3g: %d facets -> %d vertices", s, len(A), points.shape[0])
    return VPolytope(dim=dim, vertices=_as_points(points))


def scale(body: ConvexBody, c: float) -> ConvexBody:
    """c * body (dilation about the origin)"""
    if c <= 0:
        raise RejectedInputError("scale factor must be positive", field="c")
    V = _as_points(vertex_array(body) * c)
    if isinstance(body, Ball):
        return Ball(dim=body.dim, center=V[0], radius=body.radius * c)
    if isinstance(body, Sausage):
        return Sausage(dim=body.dim, p=V[0], q=V[1], radius=body.radius * c)
    if isinstance(body, CoreBall):
        return CoreBall(dim=body.dim, core_vertices=V, radius=body.radius * c)
    return VPolytope(dim=body.dim, vertices=V)


# ---------------------------------------------------------------------------
# projection

def check_frame(frame, dim: int) -> np.ndarray:
    """Validate a (dim, m) matrix with orthonormal columns, 1 <= m < dim"""
    F = np.asarray(frame, dtype=float)
    if F.ndim != 2 or F.shape[0] != dim:
        raise RejectedInputError(f"frame must be a ({dim}, m) matrix", field="basis")
    m = F.shape[1]
    if not 1 <= m < dim:
        raise RejectedInputError(f"frame rank must satisfy 1 <= m < {dim}", field="basis")
    if np.max(np.abs(F.T @ F - np.eye(m))) > FRAME_TOL:
        raise RejectedInputError("frame columns are not orthonormal", field="basis")
    return F


def _prune(points: np.ndarray) -> np.ndarray:
    m, d = points.shape
    if 2 <= d <= 3 and m > d + 1 and _affine_rank(points, 1e-9) == d:
        try:
            return points[np.sort(ConvexHull(points).vertices)]
        except QhullError:
            return points
    return points


def project(body: ConvexBody, basis) -> ConvexBody:
    """Orthogonal projection onto span(basis), in frame coordinates"""
    F = check_frame(basis, body.dim)
    m = F.shape[1]
    P = vertex_array(body) @ F
    if isinstance(body, Ball):
        return Ball(dim=m, center=_as_points(P)[0], radius=body.radius)
    if isinstance(body, Sausage):
        pts = _as_points(P)
        return Sausage(dim=m, p=pts[0], q=pts[1], radius=body.radius)
    if isinstance(body, CoreBall):
        return CoreBall(dim=m, core_vertices=_as_points(_prune(P)), radius=body.radius)
    return VPolytope(dim=m, vertices=_as_points(_prune(P)))


# ---------------------------------------------------------------------------
# metric quantities

def diameter(body: ConvexBody) -> float:
    V = vertex_array(body)
    spread = float(np.max(pdist(V))) if V.shape[0] > 1 else 0.0
    return spread + 2.0 * ball_radius(body)


def _dedupe(V: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    kept: List[np.ndarray] = []
    for v in V:
        if all(np.linalg.norm(v - k) > tol for k in kept):
            kept.append(v)
    return np.array(kept)


def _affine_rank(V: np.ndarray, tol: float) -> int:
    V = _dedupe(np.atleast_2d(V))
    if V.shape[0] <= 1:
        return 0
    diffs = V[1:] - V[0]
    sv = np.linalg.svd(diffs, compute_uv=False)
    threshold = tol * (float(np.max(np.linalg.norm(V, axis=1))) + 1.0)
    return int(np.sum(sv > threshold))


def core_dimension(body: ConvexBody, tol: float = 1e-9) -> int:
    """Dimension of the affine hull of the core"""
    if not has_core(body):
        raise RejectedInputError("a VPolytope has no core", field="kind")
    return _affine_rank(vertex_array(body), tol)


def affine_frame(V: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """(origin, orthonormal basis of the affine hull of V as columns)"""
    V = np.atleast_2d(V)
    origin = V[0]
    rank = _affine_rank(V, tol)
    if rank == 0:
        return origin, np.zeros((V.shape[1], 0))
    _, _, vt = np.linalg.svd(V[1:] - origin)
    return origin, vt[:rank].T


def circumradius(body: ConvexBody) -> float:
    """Radius of the smallest ball containing the body"""
    _, core_r = minimal_enclosing_ball(vertex_array(body))
    return core_r + ball_radius(body)


def _ball_through(R: List[np.ndarray]) -> Tuple[Optional[np.ndarray], float]:
    if not R:
        return None, -1.0
    P = np.array(R)
    p0 = P[0]
    if len(P) == 1:
        return p0, 0.0
    A = P[1:] - p0
    rhs = 0.5 * np.sum(A * A, axis=1)
    lam = np.linalg.lstsq(A @ A.T, rhs, rcond=None)[0]
    center = p0 + lam @ A
    return center, float(np.max(np.sum((P - center) ** 2, axis=1)))


def _welzl(P: np.ndarray, n: int, R: List[np.ndarray], dim: int) -> Tuple[Optional[np.ndarray], float]:
    if n == 0 or len(R) == dim + 1:
        return _ball_through(R)
    p = P[n - 1]
    center, r2 = _welzl(P, n - 1, R, dim)
    if center is not None and float(np.sum((p - center) ** 2)) <= r2 * (1.0 + 1e-12) + 1e-24:
        return center, r2
    return _welzl(P, n - 1, R + [p], dim)


def minimal_enclosing_ball(points) -> Tuple[np.ndarray, float]:
    """Welzl's algorithm on a shuffled copy of the points"""
    P = _dedupe(np.atleast_2d(np.asarray(points, dtype=float)))
    P = P[np.random.default_rng(0).permutation(P.shape[0])]
    center, r2 = _welzl(P, P.shape[0], [], P.shape[1])
    return center, float(np.sqrt(max(r2, 0.0)))
