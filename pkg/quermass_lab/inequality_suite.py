"""
Inequality checks on quermass vectors.

Every checker returns an InequalityReport whose lhs is the quantity the
inequality claims to be nonnegative. Tolerances follow one policy: exact
routes get exact_tol times the largest term of the combination, Monte-Carlo
routes additionally get sigma times the propagated standard error of the
combination (full covariance of the fitted W_i).

When the body is passed in, equality is decided by the rank of its core;
a numerically vanishing lhs on a body outside the equality class is
reported as holds with numeric_equality set.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import comb

from quermass_lab.bodies import ConvexBody, ball_radius, circumradius, core_dimension, diameter, has_core, lambda_of
from quermass_lab.errors import QuermassError, RejectedInputError
from quermass_lab.quermass_engine import (
    QuermassVector,
    inner_parallel_weights,
    isodiametric_bound,
    unit_ball_volume,
)
from quermass_lab.symbolic_poly import bokowski_heil_coefficients

logger = logging.getLogger(__name__)

InequalityId = Literal[
    "reverse_triple",
    "reverse_isoperimetric",
    "reverse_isodiametric",
    "bokowski_heil",
    "bokowski_heil_volume",
    "classical_isoperimetric",
    "difference_chain",
    "consecutive_deficit",
    "first_triple_residual",
]
Verdict = Literal["holds", "equality", "violated"]

DEFAULT_EXACT_TOL = 1e-9
DEFAULT_SIGMA = 3.0
LAMBDA_MATCH_TOL = 1e-12
CSV_COLUMNS = ["body_id", "inequality_id", "i", "j", "k", "lhs", "tol", "verdict"]


class InequalityReport(BaseModel):
    """Outcome of one inequality on one body"""
    model_config = ConfigDict(frozen=True, populate_by_name=True, allow_inf_nan=False)

    inequality_id: InequalityId
    i: Optional[int] = None
    j: Optional[int] = None
    k: Optional[int] = None
    l: Optional[int] = None
    lhs: float = Field(description="Quantity claimed nonnegative")
    tol: float = Field(ge=0, description="Tolerance the verdict was taken with")
    verdict: Verdict
    numeric_equality: bool = Field(default=False, description="|lhs| <= tol")
    body_summary: str = ""
    lam: Optional[float] = Field(default=None, gt=0, alias="lambda")
    body_id: Optional[str] = None

    def sort_key(self):
        return (self.inequality_id, *(-1 if v is None else v for v in (self.i, self.j, self.k, self.l)))

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)

    def with_body_id(self, body_id: str) -> "InequalityReport":
        return self.model_copy(update={"body_id": body_id})


class Tolerance(BaseModel):
    """exact_tol scales the largest term; sigma multiplies the MC standard error"""
    model_config = ConfigDict(frozen=True)

    exact_tol: float = Field(default=DEFAULT_EXACT_TOL, ge=0)
    sigma: float = Field(default=DEFAULT_SIGMA, ge=0)

    def for_combination(self, W: QuermassVector, coeffs: np.ndarray) -> float:
        terms = np.abs(coeffs * W.as_array())
        tol = self.exact_tol * float(np.max(terms))
        if not W.exact:
            tol += self.sigma * W.combination_sigma(coeffs)
        return tol


# ---------------------------------------------------------------------------
# shared plumbing

def is_sausage(body: ConvexBody, tol: float = 1e-9) -> bool:
    """Core of dimension at most one"""
    return core_dimension(body, tol) <= 1


def body_summary(body: Optional[ConvexBody]) -> str:
    if body is None:
        return ""
    if has_core(body):
        return f"{body.kind} d={body.dim} core_rank={core_dimension(body)} r={ball_radius(body):.6g}"
    return f"{body.kind} d={body.dim} vertices={len(body.vertices)}"


def _check_body(W: QuermassVector, body: Optional[ConvexBody], lam: Optional[float]) -> None:
    if body is None:
        return
    if body.dim != W.dim:
        raise RejectedInputError(f"body has dim={body.dim} but the quermass vector has dim={W.dim}", field="dim")
    if lam is not None:
        body_lam = lambda_of(body)
        if abs(body_lam - lam) > LAMBDA_MATCH_TOL * max(lam, body_lam):
            raise RejectedInputError(f"lambda={lam} does not match the body's 1/radius={body_lam}", field="lambda")


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise RejectedInputError("lambda must be positive", field="lambda")


def _judge(lhs: float, tol: float, equality_expected: Optional[bool]) -> Verdict:
    """Numeric rule when equality_expected is None, geometric rule otherwise"""
    if lhs < -tol:
        return "violated"
    numeric = abs(lhs) <= tol
    if equality_expected is None:
        return "equality" if numeric else "holds"
    if equality_expected and not numeric:
        logger.warning("lhs=%.3e outside tol=%.3e on an equality-class body", lhs, tol)
    return "equality" if equality_expected and numeric else "holds"


def _report(
    inequality_id: InequalityId,
    lhs: float,
    tol: float,
    equality_expected: Optional[bool],
    body: Optional[ConvexBody],
    lam: Optional[float],
    body_id: Optional[str],
    **indices,
) -> InequalityReport:
    verdict = _judge(lhs, tol, equality_expected)
    report = InequalityReport(
        inequality_id=inequality_id,
        lhs=float(lhs),
        tol=float(tol),
        verdict=verdict,
        numeric_equality=abs(lhs) <= tol,
        body_summary=body_summary(body),
        lam=lam,
        body_id=body_id,
        **indices,
    )
    if verdict == "violated":
        logger.warning("%s violated: lhs=%.6e tol=%.3e %s", inequality_id, lhs, tol, report.body_summary)
    return report


def _sausage_expected(body: Optional[ConvexBody]) -> Optional[bool]:
    if body is None or not has_core(body):
        return None
    return is_sausage(body)


def _check_triple(d: int, i: int, j: int, k: int) -> None:
    if not 0 <= i < j < k <= d:
        raise RejectedInputError(f"need 0 <= i < j < k <= {d}, got ({i}, {j}, {k})", field="ijk")


# ---------------------------------------------------------------------------
# reverse inequalities for lambda-concave bodies

def triple_coefficients(d: int, lam: float, i: int, j: int, k: int) -> np.ndarray:
    """(k-j)/lam^i at i, (i-k)/lam^j at j, (j-i)/lam^k at k"""
    c = np.zeros(d + 1)
    c[i] = (k - j) / lam ** i
    c[j] = (i - k) / lam ** j
    c[k] = (j - i) / lam ** k
    return c


def reverse_triple(
    W: QuermassVector,
    lam: float,
    i: int,
    j: int,
    k: int,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """(k-j) W_i / lam^i + (i-k) W_j / lam^j + (j-i) W_k / lam^k >= 0"""
    _check_lambda(lam)
    _check_triple(W.dim, i, j, k)
    _check_body(W, body, lam)
    c = triple_coefficients(W.dim, lam, i, j, k)
    lhs = float(c @ W.as_array())
    return _report("reverse_triple", lhs, tolerance.for_combination(W, c), _sausage_expected(body),
                   body, lam, body_id, i=i, j=j, k=k)


def reverse_isoperimetric(
    W: QuermassVector,
    lam: float,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """Vol - Surf/(n lam) + omega_d/(n lam^d) >= 0 with n = d - 1"""
    _check_lambda(lam)
    d = W.dim
    if d < 2:
        raise RejectedInputError("reverse isoperimetric inequality needs d >= 2", field="dim")
    _check_body(W, body, lam)
    n = d - 1

    c = triple_coefficients(d, lam, 0, 1, d) / n
    lhs = float(c @ W.as_array())

    if W.exact:
        # on exact routes W_d = omega_d, so the constant-term form must agree
        closed = W.volume - W.surface_area / (n * lam) + unit_ball_volume(d) / (n * lam ** d)
        if abs(closed - lhs) > 1e-12 * max(abs(lhs), abs(W.volume), 1.0):
            raise QuermassError(f"reverse isoperimetric lhs {lhs} disagrees with the closed form {closed}")

    return _report("reverse_isoperimetric", lhs, tolerance.for_combination(W, c),
                   _sausage_expected(body), body, lam, body_id)


def reverse_isodiametric(
    W: QuermassVector,
    lam: float,
    D: float,
    i: int,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """W_i(K) - W_i(sausage of radius 1/lam and diameter D) >= 0"""
    _check_lambda(lam)
    d = W.dim
    if not 0 <= i <= d - 1:
        raise RejectedInputError(f"index must lie in [0, {d - 1}]", field="i")
    if D < 2.0 / lam * (1.0 - 1e-12):
        raise RejectedInputError(f"no {lam}-concave body has diameter {D} < 2/lambda", field="D")
    _check_body(W, body, lam)

    bound = isodiametric_bound(d, D, i, lam)
    lhs = W.values[i] - bound
    c = np.zeros(d + 1)
    c[i] = 1.0
    tol = tolerance.for_combination(W, c) + tolerance.exact_tol * abs(bound)
    return _report("reverse_isodiametric", lhs, tol, _sausage_expected(body), body, lam, body_id, i=i)


def consecutive_deficit(W: QuermassVector, l: int) -> float:
    """E_l = W_l - 2 W_{l+1} + W_{l+2}"""
    if not 0 <= l <= W.dim - 2:
        raise RejectedInputError(f"l must lie in [0, {W.dim - 2}]", field="l")
    v = W.values
    return float(v[l] - 2.0 * v[l + 1] + v[l + 2])


def _deficit_coefficients(d: int, l: int) -> np.ndarray:
    c = np.zeros(d + 1)
    c[l], c[l + 1], c[l + 2] = 1.0, -2.0, 1.0
    return c


def consecutive_deficit_report(
    W: QuermassVector,
    lam: float,
    l: int,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """E_l of the 1-concave body lam*K is nonnegative"""
    _check_lambda(lam)
    _check_body(W, body, lam)
    Wn = W.normalized(lam)
    lhs = consecutive_deficit(Wn, l)
    return _report("consecutive_deficit", lhs, tolerance.for_combination(Wn, _deficit_coefficients(W.dim, l)),
                   _sausage_expected(body), body, lam, body_id, l=l)


def difference_chain(W: QuermassVector) -> List[float]:
    """Delta_m = W_{m+1} - W_m for m = 0..d-1; non-decreasing in m for a 1-concave body"""
    v = W.values
    return [float(v[m + 1] - v[m]) for m in range(W.dim)]


def difference_chain_report(
    W: QuermassVector,
    lam: float,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """min_m (Delta_{m+1} - Delta_m) >= 0 on the 1-concave body lam*K.

    Delta_{m+1} - Delta_m is the consecutive deficit E_m, so the chain is
    the statement that every deficit is nonnegative.
    """
    _check_lambda(lam)
    if W.dim < 2:
        raise RejectedInputError("difference chain needs d >= 2", field="dim")
    _check_body(W, body, lam)
    Wn = W.normalized(lam)
    deltas = difference_chain(Wn)
    gaps = [deltas[m + 1] - deltas[m] for m in range(len(deltas) - 1)]
    worst = int(np.argmin(gaps))
    lhs = gaps[worst]
    tol = tolerance.for_combination(Wn, _deficit_coefficients(W.dim, worst))
    logger.debug("difference chain %s", deltas)
    return _report("difference_chain", lhs, tol, _sausage_expected(body), body, lam, body_id, l=worst)


def first_triple_residual(
    W: QuermassVector,
    lam: float = 1.0,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """R = sum_{q=0}^{d-3} C(d-3, q) W_q(K - B) on lam*K; equals W_0 - 3W_1 + 3W_2 - W_3.

    R is a nonnegative sum of quermassintegrals of the core; it vanishes
    exactly when the core spans at most two dimensions.
    """
    _check_lambda(lam)
    d = W.dim
    if d < 3:
        raise RejectedInputError("first triple residual needs d >= 3", field="dim")
    _check_body(W, body, lam)
    Wn = W.normalized(lam)

    c = sum(comb(d - 3, q, exact=True) * inner_parallel_weights(d, q) for q in range(d - 2))
    lhs = float(c @ Wn.as_array())
    direct = consecutive_deficit(Wn, 0) - consecutive_deficit(Wn, 1)
    if abs(direct - lhs) > 1e-9 * float(np.max(np.abs(Wn.as_array()))):
        raise QuermassError(f"residual {lhs} disagrees with W_0 - 3W_1 + 3W_2 - W_3 = {direct}")

    expected = None if body is None else core_dimension(body) <= 2
    return _report("first_triple_residual", lhs, tolerance.for_combination(Wn, np.asarray(c, dtype=float)),
                   expected, body, lam, body_id)


# ---------------------------------------------------------------------------
# baselines valid for every convex body

def bokowski_heil(
    W: QuermassVector,
    R: float,
    i: int,
    j: int,
    k: int,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """c_ijk R^i W_i + c_jki R^j W_j + c_kij R^k W_k >= 0 with R the circumradius"""
    if not R > 0:
        raise RejectedInputError("circumradius must be positive", field="R")
    _check_triple(W.dim, i, j, k)
    _check_body(W, body, None)
    c_i, c_j, c_k = bokowski_heil_coefficients(i, j, k)
    c = np.zeros(W.dim + 1)
    c[i], c[j], c[k] = c_i * R ** i, c_j * R ** j, c_k * R ** k
    lhs = float(c @ W.as_array())
    lam = lambda_of(body) if body is not None and has_core(body) and ball_radius(body) > 0 else None
    # no equality characterization: never claim equality
    return _report("bokowski_heil", lhs, tolerance.for_combination(W, c), False, body, lam, body_id,
                   i=i, j=j, k=k)


def bokowski_heil_volume(
    W: QuermassVector,
    R: float,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """Vol - (2R/n) Surf + ((n+2)/n) R^{n+1} omega_d >= 0 with n = d - 1"""
    d = W.dim
    if d < 2:
        raise RejectedInputError("needs d >= 2", field="dim")
    n = d - 1
    lhs = W.volume - 2.0 * R / n * W.surface_area + (n + 2) / n * R ** d * unit_ball_volume(d)
    full = bokowski_heil(W, R, 0, 1, d, body=body, body_id=body_id, tolerance=tolerance)
    if W.exact and abs(full.lhs / n - lhs) > 1e-12 * max(abs(lhs), abs(W.volume), R ** d, 1.0):
        raise QuermassError(f"volume form {lhs} disagrees with (1/n) bokowski_heil(0,1,d) = {full.lhs / n}")
    return _report("bokowski_heil_volume", lhs, full.tol / n, False, body, full.lam, body_id)


def classical_isoperimetric(
    W: QuermassVector,
    body: Optional[ConvexBody] = None,
    body_id: Optional[str] = None,
    tolerance: Tolerance = Tolerance(),
) -> InequalityReport:
    """Surf^{d/(d-1)} / (omega_d^{1/(d-1)} d^{d/(d-1)}) - Vol >= 0, equality only for balls"""
    d = W.dim
    if d < 2:
        raise RejectedInputError("isoperimetric inequality needs d >= 2", field="dim")
    _check_body(W, body, None)
    omega = unit_ball_volume(d)
    p = d / (d - 1)
    denom = omega ** (1.0 / (d - 1)) * d ** p
    surf = max(W.surface_area, 0.0)
    isoperimetric_volume = surf ** p / denom
    lhs = isoperimetric_volume - W.volume

    # delta method through W_1 (Surf = d W_1) and W_0
    grad = np.zeros(d + 1)
    grad[0] = -1.0
    grad[1] = p * surf ** (p - 1.0) * d / denom
    tol = tolerance.exact_tol * max(isoperimetric_volume, abs(W.volume))
    if not W.exact:
        tol += tolerance.sigma * W.combination_sigma(grad)

    expected = None
    if body is not None:
        expected = has_core(body) and core_dimension(body) == 0
    lam = lambda_of(body) if body is not None and has_core(body) and ball_radius(body) > 0 else None
    return _report("classical_isoperimetric", lhs, tol, expected, body, lam, body_id)


# ---------------------------------------------------------------------------
# batch evaluation

def evaluate_all(
    W: QuermassVector,
    body: Optional[ConvexBody] = None,
    lam: Optional[float] = None,
    body_id: Optional[str] = None,
    R: Optional[float] = None,
    D: Optional[float] = None,
    tolerance: Tolerance = Tolerance(),
) -> List[InequalityReport]:
    """Every applicable inequality for one body, sorted by (inequality_id, indices).

    lam, R and D default to the body's own 1/radius, circumradius and
    diameter; the reverse inequalities are skipped when no lambda is known.
    """
    d = W.dim
    if body is not None:
        if lam is None and has_core(body) and ball_radius(body) > 0:
            lam = lambda_of(body)
        if R is None:
            R = circumradius(body)
        if D is None:
            D = diameter(body)

    reports: List[InequalityReport] = []
    kw = dict(body=body, body_id=body_id, tolerance=tolerance)

    if lam is not None:
        for k in range(2, d + 1):
            for j in range(1, k):
                for i in range(j):
                    reports.append(reverse_triple(W, lam, i, j, k, **kw))
        if d >= 2:
            reports.append(reverse_isoperimetric(W, lam, **kw))
            reports.append(difference_chain_report(W, lam, **kw))
            for l in range(d - 1):
                reports.append(consecutive_deficit_report(W, lam, l, **kw))
        if d >= 3:
            reports.append(first_triple_residual(W, lam, **kw))
        if D is not None:
            for i in range(d):
                reports.append(reverse_isodiametric(W, lam, D, i, **kw))

    if R is not None and R > 0:
        for k in range(2, d + 1):
            for j in range(1, k):
                for i in range(j):
                    reports.append(bokowski_heil(W, R, i, j, k, **kw))
        if d >= 2:
            reports.append(bokowski_heil_volume(W, R, **kw))
    if d >= 2:
        reports.append(classical_isoperimetric(W, **kw))

    reports.sort(key=InequalityReport.sort_key)
    return reports


def any_violated(reports: Iterable[InequalityReport]) -> bool:
    return any(r.verdict == "violated" for r in reports)


# ---------------------------------------------------------------------------
# report files

def write_jsonl(reports: Iterable[InequalityReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for report in reports:
            fh.write(report.to_json() + "\n")
    logger.info("wrote report lines to %s", path)
    return path


def read_jsonl(path: Union[str, Path]) -> List[InequalityReport]:
    lines = Path(path).read_text().splitlines()
    return [InequalityReport.model_validate(json.loads(line)) for line in lines if line.strip()]


def reports_frame(reports: Sequence[InequalityReport]) -> pd.DataFrame:
    rows = [r.model_dump(include=set(CSV_COLUMNS)) for r in reports]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_csv(reports: Sequence[InequalityReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    reports_frame(reports).to_csv(path, index=False)
    logger.info("wrote report summary to %s", path)
    return path
