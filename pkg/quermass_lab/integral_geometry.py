"""
Haar-random rotations and subspaces, and Monte-Carlo checks of Kubota's
projection formula

    mean over P in G(d, k+1) of W_{k+1, j}(K|P) = (omega_{k+1} / omega_d) W_{d, d-1-k+j}(K).

Projected bodies live in dimension 2 or 3, where exact quermassintegrals are
available, so the only randomness is the choice of subspace.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from quermass_lab.bodies import ConvexBody, project
from quermass_lab.errors import QuermassError, RejectedInputError, UnsupportedOperationError
from quermass_lab.quermass_engine import QuermassVector, quermass, quermass_exact, unit_ball_volume
from quermass_lab.seeding import derive_seed, stream

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 8
RANK_TOL = 1e-12
ORTHO_TOL = 1e-10


class SubspaceSample(BaseModel):
    """Orthonormal m-frame drawn from the rotation-invariant measure on G(d, m)"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    frame: Tuple[Tuple[float, ...], ...] = Field(description="(d, m) matrix with orthonormal columns, row-major")
    seed_index: int

    def as_array(self) -> np.ndarray:
        return np.asarray(self.frame, dtype=float)


class KubotaResult(BaseModel):
    """One Kubota run; passed means |lhs - rhs| within sigma combined standard errors"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    dim: int
    k: int
    j: int
    rotations: int
    seed: int
    lhs: float = Field(description="Mean projected quermassintegral")
    stderr: float = Field(ge=0)
    rhs: float = Field(description="Scaled quermassintegral of the body")
    rhs_stderr: float = Field(ge=0)
    passed: bool
    body_id: Optional[str] = None

    def to_json(self) -> str:
        return self.model_dump_json()


class DeficitEstimate(BaseModel):
    """Projection estimate of the consecutive deficit E_l"""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    l: int
    rotations: int
    value: float
    stderr: float = Field(ge=0)


def _orthonormalize(G: np.ndarray) -> Optional[np.ndarray]:
    Q, R = np.linalg.qr(G)
    diag = np.diag(R)
    if np.min(np.abs(diag)) <= RANK_TOL * max(float(np.max(np.abs(diag))), 1.0):
        return None
    # sign correction makes the QR map equivariant, hence Haar
    return Q * np.sign(diag)


def haar_rotation(d: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal d x d matrix"""
    if d < 1:
        raise RejectedInputError("dimension must be positive", field="d")
    for attempt in range(MAX_RESAMPLES):
        Q = _orthonormalize(stream(seed, attempt).standard_normal((d, d)))
        if Q is not None:
            return Q
    raise QuermassError(f"Gaussian draw stayed rank-deficient after {MAX_RESAMPLES} attempts")


def sample_subspace(d: int, k_plus_1: int, seed: int) -> SubspaceSample:
    """Random (k+1)-frame: orthonormalized standard Gaussian d x (k+1) matrix"""
    if not 1 <= k_plus_1 < d:
        raise RejectedInputError(f"subspace dimension must satisfy 1 <= m < {d}", field="k_plus_1")
    for attempt in range(MAX_RESAMPLES):
        Q = _orthonormalize(stream(seed, attempt).standard_normal((d, k_plus_1)))
        if Q is not None:
            if attempt:
                logger.debug("subspace seed %d resampled %d times", seed, attempt)
            return SubspaceSample(frame=tuple(tuple(float(v) for v in row) for row in Q), seed_index=seed)
    raise QuermassError(f"Gaussian draw stayed rank-deficient after {MAX_RESAMPLES} attempts")


def _projected_values(
    body: ConvexBody,
    m: int,
    rotations: int,
    seed: int,
    statistic: Callable[[QuermassVector], float],
    threads: int,
) -> List[float]:
    """statistic(W(K|P)) for each sampled P in G(d, m); sample r uses seed (seed, r)"""

    def one(r: int) -> float:
        frame = sample_subspace(body.dim, m, derive_seed(seed, r)).as_array()
        return statistic(quermass_exact(project(body, frame)))

    if threads > 1 and rotations > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(rotations)))
    return [one(r) for r in range(rotations)]


def _mean_stderr(values: List[float]) -> Tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def kubota_check(
    body: ConvexBody,
    k: int,
    j: int,
    rotations: int = 500,
    seed: int = 0,
    rhs: Optional[QuermassVector] = None,
    rhs_samples: int = 1_000_000,
    sigma: float = 3.0,
    exact_tol: float = 1e-9,
    threads: int = 1,
    body_id: Optional[str] = None,
) -> KubotaResult:
    """Compare the mean projected W_{k+1, j} with the scaled W_{d, d-1-k+j} of the body"""
    d = body.dim
    if not 0 < k <= d - 2:
        raise RejectedInputError(f"k must satisfy 0 < k <= {d - 2}", field="k")
    if not 0 <= j <= k:
        raise RejectedInputError(f"j must satisfy 0 <= j <= {k}", field="j")
    if k + 1 > 3:
        raise UnsupportedOperationError(f"projected dimension {k + 1} has no exact route")
    if rotations < 1:
        raise RejectedInputError("rotations must be positive", field="rotations")

    values = _projected_values(body, k + 1, rotations, seed, lambda Wp: Wp.values[j], threads)
    lhs, stderr = _mean_stderr(values)

    W = rhs if rhs is not None else quermass(body, samples=rhs_samples, seed=derive_seed(seed, rotations, 1),
                                             threads=threads)
    factor = unit_ball_volume(k + 1) / unit_ball_volume(d)
    index = d - 1 - k + j
    rhs_value = factor * W.values[index]
    rhs_stderr = factor * W.stderr[index]

    bound = sigma * math.hypot(stderr, rhs_stderr) + exact_tol * max(abs(rhs_value), 1.0)
    passed = abs(lhs - rhs_value) <= bound
    if not passed:
        logger.warning("Kubota miss d=%d k=%d j=%d: lhs=%.6g rhs=%.6g bound=%.3g", d, k, j, lhs, rhs_value, bound)
    else:
        logger.debug("Kubota d=%d k=%d j=%d: lhs=%.6g rhs=%.6g", d, k, j, lhs, rhs_value)
    return KubotaResult(dim=d, k=k, j=j, rotations=rotations, seed=seed, lhs=lhs, stderr=stderr,
                        rhs=rhs_value, rhs_stderr=rhs_stderr, passed=passed, body_id=body_id)


def projected_deficit_oracle(
    body: ConvexBody,
    l: int,
    rotations: int = 500,
    seed: int = 0,
    threads: int = 1,
) -> DeficitEstimate:
    """E_l(K) = (omega_d / omega_{d-l}) * mean over P in G(d, d-l) of E_0(K|P)"""
    d = body.dim
    if not 1 <= l <= d - 2:
        raise RejectedInputError(f"l must satisfy 1 <= l <= {d - 2}", field="l")
    if d - l > 3:
        raise UnsupportedOperationError(f"projected dimension {d - l} has no exact route")
    if rotations < 1:
        raise RejectedInputError("rotations must be positive", field="rotations")

    def deficit0(Wp: QuermassVector) -> float:
        v = Wp.values
        return v[0] - 2.0 * v[1] + v[2]

    values = _projected_values(body, d - l, rotations, seed, deficit0, threads)
    mean, stderr = _mean_stderr(values)
    factor = unit_ball_volume(d) / unit_ball_volume(d - l)
    return DeficitEstimate(l=l, rotations=rotations, value=factor * mean, stderr=factor * stderr)
