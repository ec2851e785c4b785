"""
Pytest fixtures for iab-planner tests.
"""
from pathlib import Path
from typing import Any, Dict, Generator

import numpy as np
import pytest
from fastapi.testclient import TestClient

from iabplan.geometry import NetworkInstance, Region, Wall, sample_uniform_disk
from iabplan.network import Deployment, NetworkParams

ROOT_DIR = Path(__file__).resolve().parent.parent
TOPOLOGY_FILE = ROOT_DIR / "data" / "two_path_topology.json"


def make_instance(
    seed: int,
    n_mbs: int = 2,
    n_sbs: int = 10,
    n_ues: int = 60,
    n_walls: int = 40,
    radius: float = 300.0,
) -> NetworkInstance:
    """A fixed-size instance (counts given, not Poisson) for optimizer and network tests."""
    rng = np.random.default_rng(seed)
    region = Region(radius=radius)
    mids = sample_uniform_disk(region, n_walls, rng)
    walls = tuple(
        Wall(midpoint=(float(x), float(y)), length=5.0, orientation=float(rng.uniform(0, np.pi)))
        for x, y in mids
    )
    return NetworkInstance(
        region=region,
        mbs=sample_uniform_disk(region, n_mbs, rng),
        sbs=sample_uniform_disk(region, n_sbs, rng),
        ues=sample_uniform_disk(region, n_ues, rng),
        walls=walls,
    )


@pytest.fixture
def instance() -> NetworkInstance:
    return make_instance(seed=7)


@pytest.fixture
def params() -> NetworkParams:
    return NetworkParams()


@pytest.fixture
def deployment(instance: NetworkInstance) -> Deployment:
    return Deployment.from_instance(instance, non_iab=[0, 3])


@pytest.fixture
def tiny_config() -> Dict[str, Any]:
    """A desk-scale config: ~2 MBSs, ~6 SBSs and ~30 UEs on a 0.1 km^2 disk."""
    return {
        "name": "tiny",
        "scenario": "ga_non_iab",
        "points": {"area_km2": 0.1, "lambda_m": 20.0, "lambda_s": 60.0, "lambda_u": 300.0, "lambda_bl": 200.0},
        "ga": {"population": 4, "neighbors": 2, "iterations": 3},
        "eta_bps": [50e6, 100e6],
        "n_instances": 2,
        "n_fading_draws": 4,
        "master_seed": 11,
    }


@pytest.fixture
def data_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Point result storage at a temporary directory."""
    from src.config import settings

    monkeypatch.setattr(settings, "DATA_DIR", str(tmp_path))
    return tmp_path


@pytest.fixture(scope="function")
def test_app(data_dir: Path) -> Generator[TestClient, None, None]:
    """
    Provide a TestClient for the FastAPI app with a temporary data directory.
    """
    from iabplan.app import create_app

    app = create_app()
    with TestClient(app) as client:
        yield client
