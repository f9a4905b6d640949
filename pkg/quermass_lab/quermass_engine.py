"""
Quermassintegrals W_0..W_d of convex bodies.

Three routes:
  * closed forms for balls and sausages;
  * an exact route through the intrinsic volumes of the core, available
    whenever the core spans at most three dimensions (in particular every
    body in the plane and in space);
  * a Monte-Carlo Steiner fit: hit-or-miss estimates of Vol(K + tB) on a
    grid of t, fitted by the Steiner polynomial sum_i C(d, i) W_i t^i with
    generalized least squares under the covariance of the nested hit
    events. The leading coefficient W_d = omega_d is the same for every
    convex body and is held fixed.

For K = C + rB with core C, Vol(K + tB) = sum_j omega_{d-j} V_j(C) (r + t)^{d-j},
where V_j are intrinsic volumes; collecting powers of t gives the W_i.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import ConvexHull
from scipy.linalg import solve_triangular
from scipy.special import comb

from quermass_lab.bodies import (
    Ball,
    ConvexBody,
    Sausage,
    _affine_rank,
    affine_frame,
    ball_radius,
    support_many,
    vertex_array,
)
from quermass_lab.errors import IllConditionedFitError, RejectedInputError, UnsupportedOperationError
from quermass_lab.hull_projection import DEFAULT_MAX_ITER, HullOracle
from quermass_lab.seeding import stream

logger = logging.getLogger(__name__)

Method = Literal["exact_closed_form", "exact_face", "mc_steiner"]

MIN_MC_SAMPLES = 10_000
MAX_CONDITION = 1e8
DEFAULT_CHUNK_SIZE = 65536


# ---------------------------------------------------------------------------
# unit balls

@lru_cache(maxsize=None)
def unit_ball_volume(d: int) -> float:
    """omega_d by omega_d = omega_{d-2} * 2 pi / d, omega_0 = 1, omega_1 = 2"""
    if d < 0:
        raise RejectedInputError("dimension must be nonnegative", field="d")
    if d == 0:
        return 1.0
    if d == 1:
        return 2.0
    if d == 2:
        return math.pi
    return unit_ball_volume(d - 2) * 2.0 * math.pi / d


class UnitBallVolumes(BaseModel):
    """Table omega_1..omega_n of unit-ball volumes"""
    model_config = ConfigDict(frozen=True)

    table: Tuple[float, ...] = Field(description="omega_1 .. omega_n")

    @classmethod
    def build(cls, max_dim: int = 8) -> "UnitBallVolumes":
        return cls(table=tuple(unit_ball_volume(d) for d in range(1, max_dim + 1)))

    def omega(self, d: int) -> float:
        return self.table[d - 1]


# ---------------------------------------------------------------------------
# quermass vectors

class QuermassVector(BaseModel):
    """(W_0, ..., W_d) with per-entry standard errors"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    dim: int = Field(ge=1, description="Ambient dimension d")
    method: Method = Field(description="Route that produced the values")
    values: Tuple[float, ...] = Field(description="W_0 .. W_d")
    stderr: Tuple[float, ...] = Field(description="Standard error of each W_i (0 on exact routes)")
    covariance: Optional[Tuple[Tuple[float, ...], ...]] = Field(
        default=None, exclude=True, description="Full covariance of the fitted W_i (MC only)"
    )

    @model_validator(mode="after")
    def _shape(self):
        if len(self.values) != self.dim + 1:
            raise ValueError(f"values must have dim+1 = {self.dim + 1} entries")
        if len(self.stderr) != self.dim + 1:
            raise ValueError(f"stderr must have dim+1 = {self.dim + 1} entries")
        if any(s < 0 for s in self.stderr):
            raise ValueError("stderr entries must be nonnegative")
        return self

    @property
    def exact(self) -> bool:
        return self.method != "mc_steiner"

    @property
    def volume(self) -> float:
        return self.values[0]

    @property
    def surface_area(self) -> float:
        return self.dim * self.values[1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def covariance_matrix(self) -> np.ndarray:
        if self.covariance is not None:
            return np.asarray(self.covariance, dtype=float)
        return np.diag(np.asarray(self.stderr, dtype=float) ** 2)

    def combination_sigma(self, coeffs: Sequence[float]) -> float:
        """Standard error of sum_i coeffs[i] * W_i"""
        c = np.asarray(coeffs, dtype=float)
        return float(np.sqrt(max(c @ self.covariance_matrix() @ c, 0.0)))

    def scaled(self, c: float) -> "QuermassVector":
        """Quermassintegrals of c*K: W_i(cK) = c^{d-i} W_i(K)"""
        factors = np.array([c ** (self.dim - i) for i in range(self.dim + 1)])
        cov = None
        if self.covariance is not None:
            cov = _tuple2(np.outer(factors, factors) * self.covariance_matrix())
        return QuermassVector(
            dim=self.dim,
            method=self.method,
            values=tuple(float(v) for v in self.as_array() * factors),
            stderr=tuple(float(s) for s in np.asarray(self.stderr) * factors),
            covariance=cov,
        )

    def normalized(self, lam: float) -> "QuermassVector":
        """Quermassintegrals of the 1-concave body lam*K"""
        if lam <= 0:
            raise RejectedInputError("lambda must be positive", field="lambda")
        return self.scaled(lam)

    def to_json(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> "QuermassVector":
        return cls.model_validate_json(text)


def _tuple2(M: np.ndarray) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(x) for x in row) for row in M)


def _exact(dim: int, values: Sequence[float], method: Method) -> QuermassVector:
    return QuermassVector(dim=dim, method=method, values=tuple(float(v) for v in values),
                          stderr=tuple(0.0 for _ in values))


# ---------------------------------------------------------------------------
# closed forms

def quermass_ball(dim: int, r: float) -> QuermassVector:
    """W_i(rB) = omega_d r^{d-i}"""
    if r <= 0:
        raise RejectedInputError("radius must be positive", field="r")
    omega = unit_ball_volume(dim)
    return _exact(dim, [omega * r ** (dim - i) for i in range(dim + 1)], "exact_closed_form")


def quermass_sausage(dim: int, r: float, L: float) -> QuermassVector:
    """Segment of length L plus a ball of radius r.

    W_i = omega_d r^{d-i} + ((d-i)/d) L omega_{d-1} r^{d-i-1}
    """
    if r <= 0:
        raise RejectedInputError("radius must be positive", field="r")
    if L < 0:
        raise RejectedInputError("axis length must be nonnegative", field="L")
    omega_d = unit_ball_volume(dim)
    omega_low = unit_ball_volume(dim - 1)
    values = []
    for i in range(dim + 1):
        axial = 0.0 if i == dim else (dim - i) / dim * L * omega_low * r ** (dim - i - 1)
        values.append(omega_d * r ** (dim - i) + axial)
    return _exact(dim, values, "exact_closed_form")


def isodiametric_bound(dim: int, D: float, i: int, lam: float = 1.0) -> float:
    """W_i of the lambda-sausage of diameter D: the sharp lower bound for lambda-concave bodies"""
    if lam <= 0:
        raise RejectedInputError("lambda must be positive", field="lambda")
    if D < 2.0 / lam - 1e-12:
        raise RejectedInputError(f"diameter {D} is below 2/lambda = {2.0 / lam}", field="D")
    if not 0 <= i <= dim:
        raise RejectedInputError(f"index must lie in [0, {dim}]", field="i")
    return quermass_sausage(dim, 1.0 / lam, max(D - 2.0 / lam, 0.0)).values[i]


# ---------------------------------------------------------------------------
# exact route through the core

def polygon_area_perimeter(P: np.ndarray) -> Tuple[float, float]:
    """Shoelace area and perimeter of the convex hull of planar points"""
    hull = ConvexHull(P)
    ring = P[hull.vertices]  # counterclockwise for 2-D input
    x, y = ring[:, 0], ring[:, 1]
    area = 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    perimeter = float(np.sum(np.linalg.norm(ring - np.roll(ring, -1, axis=0), axis=1)))
    return area, perimeter


def polytope_volume_area_mean_width(P: np.ndarray) -> Tuple[float, float, float]:
    """(V, A, M) of a full-dimensional 3-D polytope, M = sum_edges len * exterior_angle / 2"""
    hull = ConvexHull(P)
    normals = hull.equations[:, :3]
    M = 0.0
    for f, simplex in enumerate(hull.simplices):
        for k, g in enumerate(hull.neighbors[f]):
            if g <= f:
                continue
            a, b = np.delete(simplex, k)
            cos_t = float(np.clip(normals[f] @ normals[g], -1.0, 1.0))
            M += 0.5 * float(np.linalg.norm(hull.points[a] - hull.points[b])) * math.acos(cos_t)
    return float(hull.volume), float(hull.area), M


def core_intrinsic_volumes(vertices, tol: float = 1e-9) -> Tuple[int, List[float]]:
    """(core rank, [V_0, ..., V_rank]) for a core spanning at most three dimensions"""
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    rank = _affine_rank(V, tol)
    if rank == 0:
        return 0, [1.0]
    origin, basis = affine_frame(V, tol)
    P = (V - origin) @ basis
    if rank == 1:
        return 1, [1.0, float(np.max(P) - np.min(P))]
    if rank == 2:
        area, perimeter = polygon_area_perimeter(P)
        return 2, [1.0, perimeter / 2.0, area]
    if rank == 3:
        vol, area, M = polytope_volume_area_mean_width(P)
        return 3, [1.0, M / math.pi, area / 2.0, vol]
    raise UnsupportedOperationError(f"exact quermassintegrals need a core of dimension <= 3, got {rank}")


def quermass_from_core(dim: int, intrinsic: Sequence[float], r: float) -> List[float]:
    """C(d, i) W_i = sum_j omega_{d-j} V_j C(d-j, i) r^{d-j-i}"""
    values = []
    for i in range(dim + 1):
        total = 0.0
        for j, vj in enumerate(intrinsic):
            if vj == 0.0 or dim - j < i:
                continue
            total += unit_ball_volume(dim - j) * vj * comb(dim - j, i, exact=True) * r ** (dim - j - i)
        values.append(total / comb(dim, i, exact=True))
    return values


def quermass_exact(body: ConvexBody) -> QuermassVector:
    """Exact quermassintegrals for any body whose core spans <= 3 dimensions"""
    r = ball_radius(body)
    if isinstance(body, Ball):
        return quermass_ball(body.dim, r)
    if isinstance(body, Sausage):
        return quermass_sausage(body.dim, r, float(np.linalg.norm(np.subtract(body.q, body.p))))

    rank, intrinsic = core_intrinsic_volumes(vertex_array(body))
    method: Method = "exact_closed_form" if rank <= 1 else "exact_face"
    return _exact(body.dim, quermass_from_core(body.dim, intrinsic, r), method)


def quermass_exact_2d(body: ConvexBody) -> QuermassVector:
    """W_0 = A + P r + pi r^2, W_1 = (P + 2 pi r)/2, W_2 = pi"""
    if body.dim != 2:
        raise RejectedInputError(f"expected a planar body, got dim={body.dim}", field="dim")
    return quermass_exact(body)


def quermass_exact_3d(body: ConvexBody) -> QuermassVector:
    """W_0 = V + A r + M r^2 + 4pi/3 r^3, 3W_1 = A + 2Mr + 4pi r^2, 3W_2 = M + 4 pi r"""
    if body.dim != 3:
        raise RejectedInputError(f"expected a spatial body, got dim={body.dim}", field="dim")
    return quermass_exact(body)


# ---------------------------------------------------------------------------
# Monte-Carlo Steiner fit

class SteinerFit(BaseModel):
    """Raw data of one Monte-Carlo Steiner fit, for diagnostics and plotting"""
    model_config = ConfigDict(frozen=True)

    quermass: QuermassVector
    t_grid: Tuple[float, ...] = Field(description="Parallel distances t_j")
    volumes: Tuple[float, ...] = Field(description="Estimated Vol(K + t_j B)")
    volume_stderr: Tuple[float, ...] = Field(description="Binomial standard error of each volume")
    fitted: Tuple[float, ...] = Field(description="Fitted Steiner polynomial at t_j")
    samples: int
    seed: int
    chunk_size: int
    box_volume: float
    condition_number: float

    def steiner_polynomial(self, t: float) -> float:
        d = self.quermass.dim
        return float(sum(comb(d, i, exact=True) * w * t ** i for i, w in enumerate(self.quermass.values)))


def chebyshev_grid(dim: int, r: float, count: Optional[int] = None) -> List[float]:
    """count (default d+3) Chebyshev nodes on [0, 2r]"""
    n = count or dim + 3
    half = r if r > 0 else 1.0
    nodes = np.cos((2.0 * np.arange(n) + 1.0) * np.pi / (2.0 * n))
    return sorted(float(half + half * x) for x in nodes)


def _distance_function(body: ConvexBody, cutoff: float, max_iter: int = DEFAULT_MAX_ITER):
    """Vectorized distance from sample points to the core"""
    if isinstance(body, Ball):
        c = np.asarray(body.center, dtype=float)
        return lambda X: np.linalg.norm(X - c, axis=1)
    if isinstance(body, Sausage):
        p = np.asarray(body.p, dtype=float)
        axis = np.asarray(body.q, dtype=float) - p
        length2 = float(axis @ axis)

        def seg(X):
            if length2 == 0.0:
                return np.linalg.norm(X - p, axis=1)
            s = np.clip((X - p) @ axis / length2, 0.0, 1.0)
            return np.linalg.norm(X - p - s[:, None] * axis, axis=1)
        return seg

    scale = float(np.max(np.abs(vertex_array(body)))) + 1.0
    oracle = HullOracle(vertex_array(body), tol=1e-7 * scale, max_iter=max_iter, strict=False)
    return lambda X: oracle.distances(X, cutoff=cutoff)


def _gls_map(A: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Linear map from grid volumes to generalized least-squares coefficients"""
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # two grid nodes with identical hit counts
        logger.debug("singular volume covariance, falling back to ordinary least squares")
        return np.linalg.pinv(A)
    L_inv = solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return np.linalg.pinv(L_inv @ A) @ L_inv


def mc_steiner_fit(
    body: ConvexBody,
    samples: int = 1_000_000,
    t_grid: Optional[Sequence[float]] = None,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SteinerFit:
    """Hit-or-miss Steiner fit; reproducible given (samples, t_grid, seed, chunk_size)"""

    d = body.dim
    r = ball_radius(body)
    if samples < MIN_MC_SAMPLES:
        raise RejectedInputError(f"need at least {MIN_MC_SAMPLES} samples", field="samples")
    t = np.array(sorted(t_grid) if t_grid is not None else chebyshev_grid(d, r), dtype=float)
    if np.any(t < 0):
        raise RejectedInputError("t_grid entries must be nonnegative", field="t_grid")
    if np.unique(t).size < d + 1:
        raise RejectedInputError(f"t_grid needs at least d+1 = {d + 1} distinct entries", field="t_grid")

    A = np.array([[comb(d, i, exact=True) * tj ** i for i in range(d + 1)] for tj in t])
    cond = float(np.linalg.cond(A))
    if cond > MAX_CONDITION:
        raise IllConditionedFitError("Steiner fit is ill-conditioned; widen the t_grid or use Chebyshev nodes", cond)
    if cond > MAX_CONDITION / 100:
        logger.warning("Steiner fit condition number %.3e is close to the limit", cond)

    t_max = float(t[-1])
    E = np.eye(d)
    hi = support_many(body, E) + t_max
    lo = -support_many(body, -E) - t_max
    box_volume = float(np.prod(hi - lo))
    thresholds = r + t
    dist = _distance_function(body, cutoff=r + t_max, max_iter=max_iter)

    n_chunks = -(-samples // chunk_size)

    def run_chunk(c: int) -> np.ndarray:
        n = min(chunk_size, samples - c * chunk_size)
        X = lo + (hi - lo) * stream(seed, c).random((n, d))
        dists = dist(X)
        return np.array([np.count_nonzero(dists <= th) for th in thresholds], dtype=np.int64)

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(run_chunk, range(n_chunks)))
    else:
        hits = sum(run_chunk(c) for c in range(n_chunks))

    p = hits / samples
    volumes = box_volume * p
    # events are nested in t, so P(hit_s and hit_t) = p_min(s, t)
    p_joint = np.minimum.outer(p, p)
    cov_v = box_volume ** 2 * (p_joint - np.outer(p, p)) / samples

    # W_d = omega_d for every convex body; only W_0..W_{d-1} are fitted
    omega = unit_ball_volume(d)
    G = _gls_map(A[:, :d], cov_v)
    beta = np.append(G @ (volumes - omega * t ** d), omega)
    cov_beta = np.zeros((d + 1, d + 1))
    cov_beta[:d, :d] = G @ cov_v @ G.T
    stderr = np.sqrt(np.clip(np.diag(cov_beta), 0.0, None))
    logger.debug("Steiner fit d=%d samples=%d cond=%.2e W=%s", d, samples, cond, beta)

    quermass = QuermassVector(
        dim=d,
        method="mc_steiner",
        values=tuple(float(b) for b in beta),
        stderr=tuple(float(s) for s in stderr),
        covariance=_tuple2(cov_beta),
    )
    return SteinerFit(
        quermass=quermass,
        t_grid=tuple(float(x) for x in t),
        volumes=tuple(float(v) for v in volumes),
        volume_stderr=tuple(float(np.sqrt(max(cov_v[j, j], 0.0))) for j in range(len(t))),
        fitted=tuple(float(v) for v in A @ beta),
        samples=samples,
        seed=seed,
        chunk_size=chunk_size,
        box_volume=box_volume,
        condition_number=cond,
    )


def quermass_mc_steiner(
    body: ConvexBody,
    samples: int = 1_000_000,
    t_grid: Optional[Sequence[float]] = None,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QuermassVector:
    return mc_steiner_fit(body, samples, t_grid, seed, chunk_size, threads, max_iter).quermass


def exact_route_available(body: ConvexBody) -> bool:
    if isinstance(body, (Ball, Sausage)):
        return True
    return _affine_rank(vertex_array(body), 1e-9) <= 3


def quermass(
    body: ConvexBody,
    method: str = "auto",
    samples: int = 1_000_000,
    t_grid: Optional[Sequence[float]] = None,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QuermassVector:
    """Best available route: 'auto', 'exact' or 'mc'"""
    if method not in ("auto", "exact", "mc"):
        raise RejectedInputError(f"unknown method {method!r}", field="method")
    if method == "exact" or (method == "auto" and exact_route_available(body)):
        return quermass_exact(body)
    return quermass_mc_steiner(body, samples, t_grid, seed, chunk_size, threads, max_iter)


# ---------------------------------------------------------------------------
# inner parallel bodies

def inner_parallel_weights(dim: int, q: int) -> np.ndarray:
    """Coefficients c with W_q(K - B) = sum_i c_i W_i(K)"""
    if not 0 <= q <= dim:
        raise RejectedInputError(f"q must lie in [0, {dim}]", field="q")
    c = np.zeros(dim + 1)
    for i in range(dim - q + 1):
        c[q + i] = (-1) ** i * comb(dim - q, i, exact=True)
    return c


def inner_parallel_quermass(W: QuermassVector, q: int) -> float:
    """W_q(K - B) = sum_i (-1)^i C(d-q, i) W_{q+i}(K), for a 1-concave K"""
    return float(inner_parallel_weights(W.dim, q) @ W.as_array())
