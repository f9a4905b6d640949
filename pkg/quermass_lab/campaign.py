"""
Randomized verification campaigns: generate bodies, compute their
quermassintegrals, run every inequality, optionally run Kubota checks, and
persist the reports.
"""

import functools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple, Union

import pandas as pd
import tqdm
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from quermass_lab.bodies import ConvexBody, core_dimension, dump_body
from quermass_lab.errors import ConfigError, QuermassError
from quermass_lab.inequality_suite import (
    InequalityReport,
    Tolerance,
    evaluate_all,
    write_csv,
    write_jsonl,
)
from quermass_lab.integral_geometry import KubotaResult, kubota_check
from quermass_lab.quermass_engine import (
    MIN_MC_SAMPLES,
    QuermassVector,
    SteinerFit,
    exact_route_available,
    mc_steiner_fit,
    quermass_exact,
)
from quermass_lab.sampling import BodySpec, Family, generate
from quermass_lab.seeding import derive_seed
from quermass_lab.settings import ToolkitSettings, load_settings

logger = logging.getLogger(__name__)

BAR_FORMAT = "{l_bar}{bar} {n_fmt}/{total_fmt} [{elapsed} < {remaining}]"
PLOT_COLUMNS = ["body_id", "t", "volume", "volume_stderr", "fitted"]


class FamilyTemplate(BaseModel):
    """BodySpec without dimension and seed; the campaign fills both in"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Family = "random_core"
    core_dim: Optional[int] = Field(default=None, ge=0)
    core_vertex_count: int = Field(default=8, ge=1)
    core_scale: float = Field(default=1.0, gt=0)
    radius: float = Field(default=1.0, gt=0)

    def applies_to(self, dim: int) -> bool:
        return self.family != "flat_core" or (self.core_dim is not None and self.core_dim < dim)

    def spec(self, dim: int, seed: int) -> BodySpec:
        return BodySpec(dim=dim, seed=seed, **self.model_dump())


class TolerancePolicy(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    exact_abs: float = Field(default=1e-9, gt=0)
    mc_sigma_multiplier: float = Field(default=3.0, gt=0)

    def tolerance(self) -> Tolerance:
        return Tolerance(exact_tol=self.exact_abs, sigma=self.mc_sigma_multiplier)


class CampaignOutputs(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    report_jsonl: Path = Path("campaign_reports.jsonl")
    summary_csv: Path = Path("campaign_summary.csv")
    plot_csv: Path = Path("steiner_plot.csv")
    kubota_jsonl: Path = Path("kubota_reports.jsonl")
    bodies_jsonl: Optional[Path] = None


class CampaignConfig(BaseModel):
    """Everything a campaign run depends on"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    dims: List[int] = Field(min_length=1)
    bodies_per_dim: int = Field(ge=1)
    families: List[FamilyTemplate] = Field(default_factory=lambda: [FamilyTemplate()])
    mc_samples: int = Field(default=100_000, ge=MIN_MC_SAMPLES)
    rotations: int = Field(default=200, ge=1)
    base_seed: int = 0
    tol_policy: TolerancePolicy = Field(default_factory=TolerancePolicy)
    outputs: CampaignOutputs = Field(default_factory=CampaignOutputs)
    kubota_bodies_per_dim: int = Field(default=0, ge=0)
    chunk_size: Optional[int] = Field(default=None, ge=1024, description="Overrides QMC_CHUNK_SIZE")

    @model_validator(mode="after")
    def _dims(self):
        if any(d < 2 for d in self.dims):
            raise ValueError("every campaign dimension must be at least 2")
        if not self.families:
            raise ValueError("families must not be empty")
        return self


class BodyOutcome(BaseModel):
    """Everything computed for one campaign body"""
    model_config = ConfigDict(frozen=True)

    body_id: str
    dim: int
    body_json: str
    quermass: QuermassVector
    reports: List[InequalityReport]
    fit: Optional[SteinerFit] = None
    kubota: List[KubotaResult] = Field(default_factory=list)


class CampaignResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    bodies: int
    reports: List[InequalityReport]
    kubota: List[KubotaResult]
    violated: int
    kubota_misses: int

    @property
    def exit_code(self) -> int:
        return 1 if self.violated else 0


def load_campaign_config(source: Union[str, Path, dict]) -> CampaignConfig:
    """Read and validate a campaign config; field-level messages on failure"""
    try:
        if isinstance(source, dict):
            return CampaignConfig.model_validate(source)
        text = Path(source).read_text()
        return CampaignConfig.model_validate(json.loads(text))
    except FileNotFoundError as e:
        raise ConfigError(f"campaign config not found: {source}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"campaign config is not valid JSON: {e}") from e
    except ValidationError as e:
        err = e.errors()[0]
        field = ".".join(str(p) for p in err["loc"]) or "config"
        raise ConfigError(f"{field}: {err['msg']}") from e


def campaign_bodies(config: CampaignConfig) -> List[Tuple[str, ConvexBody]]:
    """(body_id, body) for every campaign body, families assigned round-robin"""
    out = []
    for dim in config.dims:
        families = [f for f in config.families if f.applies_to(dim)]
        if not families:
            raise ConfigError(f"families: no template applies to dim={dim}")
        for n in range(config.bodies_per_dim):
            template = families[n % len(families)]
            spec = template.spec(dim, derive_seed(config.base_seed, dim, n))
            out.append((f"d{dim}-{n:04d}-{template.family}", generate(spec)))
    return out


def _check_writable(outputs: CampaignOutputs) -> None:
    for path in (outputs.report_jsonl, outputs.summary_csv, outputs.plot_csv, outputs.kubota_jsonl, outputs.bodies_jsonl):
        if path is None:
            continue
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"outputs: cannot create {path.parent}: {e}") from e
        if path.exists() and path.is_dir():
            raise ConfigError(f"outputs: {path} is a directory")


def evaluate_body(
    body_id: str,
    body: ConvexBody,
    index: int,
    config: CampaignConfig,
    settings: ToolkitSettings,
) -> BodyOutcome:
    """Quermassintegrals, inequality reports and optional Kubota run for one body"""
    seed = derive_seed(config.base_seed, body.dim, index, 1)
    chunk_size = config.chunk_size or settings.chunk_size

    fit = None
    if exact_route_available(body):
        W = quermass_exact(body)
    else:
        fit = mc_steiner_fit(body, samples=config.mc_samples, seed=seed, chunk_size=chunk_size,
                             max_iter=settings.projection_max_iter)
        W = fit.quermass

    reports = evaluate_all(W, body, body_id=body_id, tolerance=config.tol_policy.tolerance())

    kubota = []
    if index < config.kubota_bodies_per_dim and body.dim >= 3:
        k = min(body.dim - 2, 2)
        for j in range(k + 1):
            kubota.append(kubota_check(body, k, j, rotations=config.rotations,
                                       seed=derive_seed(config.base_seed, body.dim, index, 2, j), rhs=W,
                                       sigma=config.tol_policy.mc_sigma_multiplier,
                                       exact_tol=config.tol_policy.exact_abs, body_id=body_id))

    logger.info("%s: %s core_rank=%d, %d reports", body_id, W.method, core_dimension(body), len(reports))
    return BodyOutcome(body_id=body_id, dim=body.dim, body_json=dump_body(body), quermass=W,
                       reports=reports, fit=fit, kubota=kubota)


def _plot_rows(outcome: BodyOutcome) -> List[dict]:
    if outcome.fit is None:
        return []
    fit = outcome.fit
    return [
        {"body_id": outcome.body_id, "t": t, "volume": v, "volume_stderr": s, "fitted": f}
        for t, v, s, f in zip(fit.t_grid, fit.volumes, fit.volume_stderr, fit.fitted)
    ]


def run_campaign(
    config: CampaignConfig,
    settings: Optional[ToolkitSettings] = None,
    progress: bool = False,
) -> CampaignResult:
    """Run a campaign and write its report files.

    Bodies are evaluated in parallel; report lines are sorted by
    (dim, body_id, inequality_id) before writing so the files do not depend on
    scheduling.
    """
    settings = settings or load_settings()
    _check_writable(config.outputs)
    bodies = campaign_bodies(config)

    # index within its dimension drives the seeds
    jobs = []
    counters = {}
    for body_id, body in bodies:
        n = counters.get(body.dim, 0)
        counters[body.dim] = n + 1
        jobs.append((body_id, body, n))

    def work(job) -> BodyOutcome:
        body_id, body, n = job
        try:
            return evaluate_body(body_id, body, n, config, settings)
        except QuermassError as e:
            raise QuermassError(f"{body_id}: {e}") from e

    if progress:
        iterator = functools.partial(tqdm.tqdm, total=len(jobs), desc="campaign", bar_format=BAR_FORMAT, ascii=True)
    else:
        iterator = iter

    outcomes: List[BodyOutcome] = []
    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            for outcome in iterator(pool.map(work, jobs)):
                outcomes.append(outcome)
    else:
        for outcome in iterator(map(work, jobs)):
            outcomes.append(outcome)

    outcomes.sort(key=lambda o: (o.dim, o.body_id))
    reports = [r for o in outcomes for r in o.reports]
    kubota = [kr for o in outcomes for kr in o.kubota]

    out = config.outputs
    write_jsonl(reports, out.report_jsonl)
    write_csv(reports, out.summary_csv)
    pd.DataFrame([row for o in outcomes for row in _plot_rows(o)], columns=PLOT_COLUMNS).to_csv(out.plot_csv, index=False)
    if kubota:
        out.kubota_jsonl.write_text("".join(kr.to_json() + "\n" for kr in kubota))
    if out.bodies_jsonl is not None:
        out.bodies_jsonl.write_text("".join(json.dumps({"body_id": o.body_id, "body": json.loads(o.body_json)}) + "\n"
                                            for o in outcomes))

    violated = sum(1 for r in reports if r.verdict == "violated")
    misses = sum(1 for kr in kubota if not kr.passed)
    if misses:
        logger.warning("%d of %d Kubota checks missed their sigma band", misses, len(kubota))
    logger.info("campaign: %d bodies, %d reports, %d violated", len(outcomes), len(reports), violated)
    return CampaignResult(bodies=len(outcomes), reports=reports, kubota=kubota, violated=violated,
                          kubota_misses=misses)
