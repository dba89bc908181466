from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache

import pytest

from ychannel.channel import deactivate, sample
from ychannel.planner import plan
from ychannel.region import AntennaConfig, DofTuple, build_region, enumerate_vertices
from ychannel.transceiver import synthesize

BANK = ["1,1,1,1", "2,2,2,3", "3,2,2,4", "2,1,1,3", "4,3,2,5", "2,2,2,1"]

ANCHOR_CONFIG = "3,2,2,4"
ANCHOR_DOF = "2,0,0,2,2,0"
# smallest feasible neighbour of the (2,1,1,3) Case II example; see notes
CASE2_CONFIG = "2,1,2,3"
CASE2_DOF = "1,1,0,1,0,0"


def cfg(text: str) -> AntennaConfig:
    return AntennaConfig.parse(text)


def dof(text: str) -> DofTuple:
    return DofTuple.parse(text)


@lru_cache(maxsize=None)
def vertices_of(config_text: str) -> tuple[DofTuple, ...]:
    return tuple(enumerate_vertices(build_region(cfg(config_text))).points())


def random_tuple(rng: random.Random, config: AntennaConfig, denom: int = 12) -> DofTuple:
    """Uniform rational tuple in the box d_ij <= min(M_i, M_j, N)."""
    coords = []
    for i, j in ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)):
        hi = min(config.antennas(i), config.antennas(j), config.N) * denom
        coords.append(Fraction(rng.randint(0, hi), denom))
    return DofTuple.of(*coords)


def convex_combination(rng: random.Random, points) -> DofTuple:
    w = [Fraction(rng.randint(0, 9)) for _ in points]
    if not any(w):
        w[rng.randrange(len(w))] = Fraction(1)
    s = sum(w)
    coords = [sum(wk * p.coords[k] for wk, p in zip(w, points)) / s for k in range(6)]
    return DofTuple.of(*coords)


def design_for(config: AntennaConfig, d: DofTuple, seed: int = 0):
    p = plan(d, config)
    ch = sample(config, p.t, seed)
    return synthesize(p, deactivate(ch, p.relay_dims_per_use), seed)


@pytest.fixture
def anchor():
    return cfg(ANCHOR_CONFIG), dof(ANCHOR_DOF)


@pytest.fixture
def case2():
    return cfg(CASE2_CONFIG), dof(CASE2_DOF)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
