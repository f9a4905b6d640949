"""
Seeded generation of lambda-concave test bodies.
"""

import logging
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from quermass_lab.bodies import Ball, ConvexBody, CoreBall, Sausage, _as_points
from quermass_lab.errors import RejectedInputError
from quermass_lab.integral_geometry import sample_subspace
from quermass_lab.seeding import derive_seed, stream

logger = logging.getLogger(__name__)

Family = Literal["random_core", "sausage", "ball", "flat_core"]

__all__ = ["BodySpec", "Family", "derive_seed", "generate", "generate_many", "load_spec"]


class BodySpec(BaseModel):
    """Recipe for one random body"""
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    dim: int = Field(ge=1)
    family: Family = "random_core"
    core_dim: Optional[int] = Field(default=None, ge=0, description="Affine dimension of a flat core")
    core_vertex_count: int = Field(default=8, ge=1)
    core_scale: float = Field(default=1.0, gt=0, description="Half-width of the box the core is drawn from")
    radius: float = Field(default=1.0, gt=0, description="Rolling-ball radius 1/lambda")
    seed: int = 0

    @model_validator(mode="after")
    def _flat(self):
        if self.family == "flat_core":
            if self.core_dim is None:
                raise ValueError("flat_core needs core_dim")
            if self.core_dim >= self.dim:
                raise ValueError(f"core_dim must be below dim={self.dim}")
            if self.core_vertex_count < self.core_dim + 1:
                raise ValueError(f"flat_core with core_dim={self.core_dim} needs at least {self.core_dim + 1} vertices")
        return self

    def with_seed(self, seed: int) -> "BodySpec":
        return self.model_copy(update={"seed": seed})


def load_spec(data) -> BodySpec:
    try:
        if isinstance(data, (str, bytes)):
            return BodySpec.model_validate_json(data)
        return BodySpec.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        raise RejectedInputError(err["msg"], field=".".join(str(p) for p in err["loc"]) or "spec") from e


def _random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        g = rng.standard_normal(d)
        n = float(np.linalg.norm(g))
        if n > 1e-12:
            return g / n


def generate(spec: BodySpec) -> ConvexBody:
    """Deterministic body for a spec"""
    d, s = spec.dim, spec.core_scale
    rng = stream(spec.seed, 0)

    if spec.family == "ball":
        return Ball(dim=d, center=tuple(0.0 for _ in range(d)), radius=spec.radius)

    if spec.family == "sausage":
        half = s * rng.uniform(0.1, 1.0)
        u = _random_unit(rng, d)
        return Sausage(dim=d, p=tuple(map(float, -half * u)), q=tuple(map(float, half * u)), radius=spec.radius)

    if spec.family == "flat_core":
        m = spec.core_dim
        coords = rng.uniform(-s, s, size=(spec.core_vertex_count, m))
        if m == 0:
            V = np.zeros((1, d))
        else:
            frame = sample_subspace(d, m, derive_seed(spec.seed, 1)).as_array()
            V = coords @ frame.T
        return CoreBall(dim=d, core_vertices=_as_points(V), radius=spec.radius)

    V = rng.uniform(-s, s, size=(spec.core_vertex_count, d))
    return CoreBall(dim=d, core_vertices=_as_points(V), radius=spec.radius)


def generate_many(template: BodySpec, count: int, base_seed: int) -> List[ConvexBody]:
    """count bodies from one template, body n seeded by (base_seed, dim, n)"""
    return [generate(template.with_seed(derive_seed(base_seed, template.dim, n))) for n in range(count)]
