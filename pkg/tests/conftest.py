"""Shared fixtures for the test suite."""

import os

import pytest

from src.arena import coalition_indices, partition_from_coalition
from src.textio import read_arena

FIXTURES_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
MACHINES_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "machines")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES_DIR, f"{name}.neg")


def load_fixture(name: str, coalition: str | None = None):
    """Reads a fixture arena; `coalition` replaces its partition."""
    arena = read_arena(fixture_path(name))
    if coalition is None:
        return arena
    negotiation = arena.negotiation
    return partition_from_coalition(
        negotiation, coalition_indices(negotiation, coalition.split(",")), arena.goals
    )


@pytest.fixture
def _fig1_right():
    """The cyclic outing negotiation with every atom owned by Player 1."""
    return load_fixture("fig1_right", coalition="F,D,M")


@pytest.fixture
def _fig1_left():
    return load_fixture("fig1_left")


@pytest.fixture
def _fig2():
    """Two daughters against their parents; coalition D1, D2."""
    return load_fixture("fig2")


@pytest.fixture
def _fig5():
    """Daughters with goals; coalition F, D1."""
    return load_fixture("fig5")


@pytest.fixture
def _machines_dir():
    return MACHINES_DIR
