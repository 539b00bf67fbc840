"""
Pytest configuration and fixtures
"""
import os

# Celery runs eagerly against in-memory transports during tests
os.environ.setdefault("HARMONY_CELERY_BROKER_URL", "memory://")
os.environ.setdefault("HARMONY_CELERY_RESULT_BACKEND", "cache+memory://")
os.environ.setdefault("HARMONY_TASK_ALWAYS_EAGER", "true")
os.environ.setdefault("HARMONY_THREADS", "1")

import pytest
from fastapi.testclient import TestClient

from harmony.codes.generators import generate
from harmony.main import app
from harmony.models.hypergraph import Component, ErrorHypergraph, Mechanism
from harmony.models.schemas import CodeSpec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo checks (deselect with -m 'not slow')")


@pytest.fixture
def client():
    """FastAPI test client with Celery in eager mode"""
    from harmony.workers.celery_app import celery_app

    celery_app.conf.task_always_eager = True
    return TestClient(app)


@pytest.fixture(scope="session")
def repetition_model() -> ErrorHypergraph:
    return generate(CodeSpec(family="repetition", distance=3, rounds=2, p=0.05))


@pytest.fixture(scope="session")
def surface_model() -> ErrorHypergraph:
    """d=3, r=2 rotated surface code: has X detectors and therefore Y hyperedges"""
    return generate(CodeSpec(family="rotated_surface", distance=3, rounds=2, p=0.04))


@pytest.fixture
def toy_model() -> ErrorHypergraph:
    """
    Four Z detectors on a ring and one X detector.

    m0: 0-1, m1: 1-2 (flips L0), m2: Y-type hyperedge (0-3 in Z, 4 in X),
    m3: 2-3, all with the same probability; m4: a rare X flip on 4.
    """
    p = 0.1
    return ErrorHypergraph(
        mechanisms=(
            Mechanism(p, (0, 1)),
            Mechanism(p, (1, 2), 1),
            Mechanism.from_components(p, [Component((0, 3)), Component((4,))]),
            Mechanism(p, (2, 3)),
            Mechanism(0.01, (4,)),
        ),
        num_detectors=5,
        num_observables=1,
        detector_basis=tuple("ZZZZX"),
    )


@pytest.fixture
def rep_dem_path(tmp_path):
    """Generated repetition model on disk with its basis sidecar"""
    from harmony.models.basis import sidecar_path, write_basis
    from harmony.models.dem import serialize_dem

    h = generate(CodeSpec(family="repetition", distance=3, rounds=2, p=0.05))
    path = tmp_path / "rep.dem"
    path.write_text(serialize_dem(h))
    write_basis(sidecar_path(path), h.detector_basis)
    return path
