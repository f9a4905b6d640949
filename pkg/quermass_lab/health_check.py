#!/usr/bin/env python3
"""
Toolkit doctor: required packages, settings, qhull and three small exact computations
"""

import importlib.util
import json
import math
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np

# distribution name -> import name
REQUIRED_PACKAGES = {
    "numpy": "numpy",
    "scipy": "scipy",
    "sympy": "sympy",
    "pandas": "pandas",
    "pydantic": "pydantic",
    "python-dotenv": "dotenv",
    "tqdm": "tqdm",
}


@dataclass
class HealthStatus:
    component: str
    healthy: bool
    message: str
    seconds: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)


def check_packages() -> HealthStatus:
    missing = [dist for dist, module in REQUIRED_PACKAGES.items() if importlib.util.find_spec(module) is None]
    if missing:
        return HealthStatus("packages", False, f"missing: {', '.join(missing)}", details={"missing": missing})
    return HealthStatus("packages", True, f"{len(REQUIRED_PACKAGES)} packages importable")


def check_settings() -> HealthStatus:
    from quermass_lab.errors import ConfigError
    from quermass_lab.settings import load_settings

    try:
        settings = load_settings()
    except ConfigError as e:
        return HealthStatus("settings", False, str(e))
    return HealthStatus("settings", True, f"threads={settings.threads} chunk_size={settings.chunk_size}",
                        details=settings.model_dump())


def check_qhull() -> HealthStatus:
    from scipy.spatial import ConvexHull

    cube = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    volume = ConvexHull(cube).volume
    return HealthStatus("qhull", abs(volume - 1.0) <= 1e-12, f"unit cube volume {volume:.15g}")


def check_hull_projection() -> HealthStatus:
    from quermass_lab.hull_projection import project_onto_hull

    # nearest face is the edge between two almost collinear vertices
    vertices = [(0.0, 0.0), (0.5, 1e-6), (1.0, 0.0), (0.5, -1.0)]
    _, dist = project_onto_hull((0.25, 0.5), vertices)
    expected = abs(-1e-6 * 0.25 + 0.5 * 0.5) / math.hypot(1e-6, 0.5)
    return HealthStatus("hull_projection", abs(dist - expected) <= 1e-9, f"edge distance {dist:.12g}")


def check_quermass() -> HealthStatus:
    from quermass_lab.bodies import CoreBall
    from quermass_lab.quermass_engine import quermass

    square = CoreBall(dim=2, core_vertices=((0, 0), (1, 0), (1, 1), (0, 1)), radius=1.0)
    err = max(abs(a - b) for a, b in zip(quermass(square).values, (5 + math.pi, 2 + math.pi, math.pi)))
    return HealthStatus("quermass", err <= 1e-12, f"rounded unit square within {err:.1e} of (5+pi, 2+pi, pi)")


def check_identities() -> HealthStatus:
    from quermass_lab.symbolic_poly import verify_generating_identity

    ok = verify_generating_identity(5)
    return HealthStatus("identities", ok, "generating identity " + ("holds" if ok else "fails") + " for n=5")


CHECKS: List[Callable[[], HealthStatus]] = [
    check_packages,
    check_settings,
    check_qhull,
    check_hull_projection,
    check_quermass,
    check_identities,
]


def run_checks() -> List[HealthStatus]:
    results = []
    for check in CHECKS:
        start = time.time()
        try:
            status = check()
        except Exception as e:
            status = HealthStatus(check.__name__.replace("check_", ""), False, f"raised {type(e).__name__}: {e}")
        status.seconds = round(time.time() - start, 3)
        print(f"{'✅' if status.healthy else '❌'} {status.component}: {status.message}")
        results.append(status)
    return results


def save_health_report(results: List[HealthStatus], filename: str) -> None:
    report = {
        "timestamp": datetime.now().isoformat(),
        "overall_status": "healthy" if all(s.healthy for s in results) else "unhealthy",
        "components": {s.component: asdict(s) for s in results},
    }
    with open(filename, "w") as f:
        json.dump(report, f, indent=2, default=str)
    print(f"📄 Health report saved to {filename}")


def run_health_check(save_report: Optional[str] = None) -> int:
    """0 when every check passes, 2 otherwise"""
    print("🏥 QUERMASS TOOLKIT HEALTH CHECK")
    results = run_checks()
    healthy = sum(s.healthy for s in results)
    print(f"HEALTH SUMMARY: {healthy}/{len(results)} checks passed")
    if save_report:
        save_health_report(results, save_report)
    return 0 if healthy == len(results) else 2


def main():
    import argparse

    parser = argparse.ArgumentParser(description="Quermass toolkit health check")
    parser.add_argument("--save-report", type=str, help="Save health report to file")
    args = parser.parse_args()
    return run_health_check(args.save_report)


if __name__ == "__main__":
    exit(main())
