"""
Euclidean projection onto the convex hull of a finite vertex set.

The batched solver is an away-step conditional-gradient (Frank-Wolfe) scheme
over the simplex of vertex weights, minimizing 0.5 * |sum_j w_j v_j - x|^2.
Its duality gap certifies the result: f(y) - f(y*) <= gap and
|y - y*|^2 <= 2 * gap, so the true distance lies in
[sqrt(|x - y|^2 - 2 gap), |x - y|].

Away steps zig-zag when the nearest face is spanned by nearly collinear
vertices. Points still uncertified after a short batched phase are finished
one at a time by Wolfe's min-norm-point method, which projects exactly onto
the affine hull of its active set and terminates after finitely many steps.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from quermass_lab.errors import ConvergenceError, RejectedInputError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
_BATCH_ITER = 500
_RESYNC_EVERY = 64
_EPS = np.finfo(float).eps
_DROP = 1e-14


def _gap_threshold(tol: float, X: np.ndarray, V: np.ndarray) -> float:
    """tol^2, floored at the resolution of the gap in double precision"""
    scale = max(float(np.max(np.abs(V))), float(np.max(np.abs(X))) if X.size else 0.0) + 1.0
    return max(tol * tol, 64.0 * _EPS * scale * scale)


def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    """Weights (summing to one) of the min-norm point of aff(rows of P)"""
    k = P.shape[0]
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = P @ P.T
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    return np.linalg.lstsq(M, rhs, rcond=None)[0][:k]


def min_norm_point(P: np.ndarray, threshold: float, max_major: int) -> Tuple[np.ndarray, float, int]:
    """Wolfe's method for the min-norm point of conv(rows of P).

    Returns (weights over the rows, final duality gap, major cycles used).
    """

    P = np.atleast_2d(np.asarray(P, dtype=float))
    j = int(np.argmin(np.einsum("ij,ij->i", P, P)))
    S = [j]
    lam = np.array([1.0])
    y = P[j].copy()
    major = 0
    stalled = False
    while True:
        proj = P @ y
        k = int(np.argmin(proj))
        gap = float(y @ y - proj[k])
        if gap <= threshold or stalled or major >= max_major or k in S:
            break
        norm2 = float(y @ y)
        S.append(k)
        lam = np.append(lam, 0.0)
        major += 1

        # minor cycles: move toward the affine minimizer until it is interior
        while True:
            alpha = _affine_minimizer(P[S])
            if np.all(alpha > _DROP):
                lam = alpha
                break
            neg = alpha <= _DROP
            denom = lam[neg] - alpha[neg]
            ratios = np.where(denom > 0.0, lam[neg] / np.where(denom > 0.0, denom, 1.0), 0.0)
            theta = min(1.0, float(np.min(ratios)))
            lam = lam + theta * (alpha - lam)
            keep = lam > _DROP
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            S = [s for s, kept in zip(S, keep) if kept]
            lam = lam[keep] / np.sum(lam[keep])
        y = lam @ P[S]
        # |y| strictly decreases in exact arithmetic
        stalled = float(y @ y) >= norm2

    weights = np.zeros(P.shape[0])
    weights[S] = lam
    return weights, gap, major


def away_step_frank_wolfe(
    X: np.ndarray,
    V: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    strict: bool = True,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Project every row of X onto conv(V).

    Returns (nearest points, final duality gaps, iterations used). A point
    that has not certified its gap within max_iter iterations raises
    ConvergenceError when strict; otherwise it keeps its best iterate and the
    gap that bounds its error.
    """

    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n, m = X.shape[0], V.shape[0]
    threshold = _gap_threshold(tol, X, V)
    batch_limit = min(max_iter, _BATCH_ITER)

    # start every point at its nearest vertex
    d2 = np.sum(X * X, axis=1)[:, None] - 2.0 * X @ V.T + np.sum(V * V, axis=1)[None, :]
    start = np.argmin(d2, axis=1)
    W = np.zeros((n, m))
    W[np.arange(n), start] = 1.0
    Y = V[start].copy()
    gaps = np.full(n, np.inf)

    active = np.arange(n)
    iteration = 0
    while active.size:
        Wa = W[active]
        Ya = Y[active]
        if iteration % _RESYNC_EVERY == 0:
            Ya = Wa @ V
        Ga = Ya - X[active]
        GV = Ga @ V.T
        gy = np.sum(Ga * Ya, axis=1)
        rows = np.arange(active.size)

        s = np.argmin(GV, axis=1)
        gap_fw = gy - GV[rows, s]
        gaps[active] = gap_fw
        Y[active] = Ya

        converged = gap_fw <= threshold
        if np.any(converged):
            keep = ~converged
            active, Wa, Ya, Ga, GV, s, gap_fw = (
                active[keep], Wa[keep], Ya[keep], Ga[keep], GV[keep], s[keep], gap_fw[keep]
            )
            gy = gy[keep]
            rows = np.arange(active.size)
            if not active.size:
                break

        if iteration >= batch_limit:
            break

        masked = np.where(Wa > 0.0, GV, -np.inf)
        a = np.argmax(masked, axis=1)
        gap_away = GV[rows, a] - gy
        forward = gap_fw >= gap_away

        D = np.where(forward[:, None], V[s] - Ya, Ya - V[a])
        wa = Wa[rows, a]
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma_max = np.where(forward, 1.0, np.where(wa < 1.0, wa / (1.0 - wa), np.inf))
            dd = np.sum(D * D, axis=1)
            gamma = np.where(dd > 0.0, -np.sum(Ga * D, axis=1) / dd, 0.0)
        gamma = np.clip(gamma, 0.0, gamma_max)

        fw_rows = rows[forward]
        aw_rows = rows[~forward]
        Wa[fw_rows] *= (1.0 - gamma[fw_rows])[:, None]
        Wa[fw_rows, s[fw_rows]] += gamma[fw_rows]
        Wa[aw_rows] *= (1.0 + gamma[aw_rows])[:, None]
        Wa[aw_rows, a[aw_rows]] -= gamma[aw_rows]
        dropped = aw_rows[gamma[aw_rows] >= gamma_max[aw_rows]]
        Wa[dropped, a[dropped]] = 0.0
        np.maximum(Wa, 0.0, out=Wa)

        W[active] = Wa
        Y[active] = Ya + gamma[:, None] * D
        iteration += 1

    majors = 0
    if active.size:
        budget = max_iter - iteration
        for idx in active:
            weights, gap, used = min_norm_point(V - X[idx], threshold, budget)
            majors = max(majors, used)
            if gap < gaps[idx]:
                Y[idx] = weights @ V
                gaps[idx] = gap
        logger.debug("hull projection: %d of %d points finished by min-norm-point steps", active.size, n)

        worst = float(np.max(gaps[active]))
        if worst > threshold:
            if strict:
                raise ConvergenceError("hull projection did not reach its gap tolerance", worst, iteration + majors)
            logger.warning("hull projection: %d points stopped above the gap tolerance (worst %.3e)",
                           int(np.count_nonzero(gaps[active] > threshold)), worst)

    logger.debug("hull projection: %d points, %d vertices, %d iterations", n, m, iteration + majors)
    return Y, gaps, iteration + majors


def project_onto_hull(
    x,
    vertices,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[np.ndarray, float]:
    """Nearest point of conv(vertices) to x and its distance"""

    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    x = np.asarray(x, dtype=float)
    if V.shape[0] == 0:
        raise RejectedInputError("vertex list must be nonempty", field="vertices")
    if x.shape != (V.shape[1],):
        raise RejectedInputError(f"expected a point with {V.shape[1]} coordinates, got shape {x.shape}", field="x")

    Y, _, _ = away_step_frank_wolfe(x[None, :], V, tol=tol, max_iter=max_iter)
    nearest = Y[0]
    return nearest, float(np.linalg.norm(x - nearest))


class HullOracle:
    """Batched distance-to-hull oracle for a fixed vertex set.

    For a full-dimensional vertex set the qhull facet description answers
    "inside" and "far outside" without iterating; only the points in between
    go through the projection solver. A non-strict oracle never raises on
    slow convergence and reports the certified distance bracket instead.
    """

    def __init__(self, vertices, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, strict: bool = True):
        self.vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        self.tol = tol
        self.max_iter = max_iter
        self.strict = strict
        self.facets: Optional[np.ndarray] = None

        m, d = self.vertices.shape
        if d >= 2 and m >= d + 1:
            try:
                hull = ConvexHull(self.vertices)
                self.facets = hull.equations
                logger.debug("hull oracle: %d facets for %d vertices in dim %d", len(self.facets), m, d)
            except QhullError:
                # flat vertex set, no facet description
                self.facets = None

    def distance_bracket(self, points, cutoff: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(lower, upper) bounds on the distance of every row of points to the hull.

        With a cutoff, points whose facet violation already exceeds it get
        that violation as both bounds (it is a lower bound on their distance).
        """

        X = np.atleast_2d(np.asarray(points, dtype=float))
        lower = np.zeros(X.shape[0])
        upper = np.zeros(X.shape[0])
        if self.vertices.shape[0] == 1:
            exact = np.linalg.norm(X - self.vertices[0], axis=1)
            return exact, exact.copy()

        pending = np.arange(X.shape[0])
        if self.facets is not None:
            violation = np.max(X @ self.facets[:, :-1].T + self.facets[:, -1], axis=1)
            inside = violation <= 0.0
            pending = pending[~inside]
            if cutoff is not None:
                far = violation[pending] > cutoff
                lower[pending[far]] = upper[pending[far]] = violation[pending[far]]
                pending = pending[~far]

        if pending.size:
            Y, gaps, _ = away_step_frank_wolfe(X[pending], self.vertices, tol=self.tol,
                                               max_iter=self.max_iter, strict=self.strict)
            d2 = np.sum((X[pending] - Y) ** 2, axis=1)
            upper[pending] = np.sqrt(d2)
            lower[pending] = np.sqrt(np.clip(d2 - 2.0 * np.maximum(gaps, 0.0), 0.0, None))
        return lower, upper

    def distances(self, points, cutoff: Optional[float] = None) -> np.ndarray:
        """Distances from every row of points to the hull (the upper end of the bracket)"""
        return self.distance_bracket(points, cutoff)[1]


def hull_distances(
    points,
    vertices,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Distance from every row of points to conv(vertices)"""
    return HullOracle(vertices, tol=tol, max_iter=max_iter).distances(points)
