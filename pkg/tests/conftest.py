from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from accessgraph import GraphParams, apply_all, build_graph, fixtures


FLOOR_PARAMS = dict(tau=(0.0, 0.0, 0.5))
STAIR_PARAMS = dict(tau=(0.0, -1.875, 0.5), step_up=0.2, step_down=-0.2)
HILL_PARAMS = dict(tau=(-2.0, 0.0, 1.0), step_up=0.2, step_down=-0.2)


def built(scene, **kwargs):
    graph, report = build_graph(scene, GraphParams(**kwargs))
    graph.finalize_csr()
    apply_all(graph)
    return graph, report


@pytest.fixture(scope="session")
def floor_scene():
    return fixtures.flat_floor_scene()


@pytest.fixture(scope="session")
def floor_graph(floor_scene):
    return built(floor_scene, **FLOOR_PARAMS)


@pytest.fixture(scope="session")
def stairs_scene():
    return fixtures.stairs_scene()


@pytest.fixture(scope="session")
def stairs_graph(stairs_scene):
    return built(stairs_scene, **STAIR_PARAMS)


@pytest.fixture(scope="session")
def hill_scene():
    return fixtures.hill_scene()


@pytest.fixture(scope="session")
def hill_graph(hill_scene):
    return built(hill_scene, **HILL_PARAMS)


@pytest.fixture(scope="session")
def kitchen():
    scene, points = fixtures.kitchen_scene()
    return scene, points


@pytest.fixture(scope="session")
def building():
    scene, points = fixtures.building_scene()
    return scene, points
