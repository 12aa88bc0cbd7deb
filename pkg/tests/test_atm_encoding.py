"""Unit tests for the atm_encoding module."""

import os

import pytest

from src.atm_encoding import (
    StateKind,
    accepts,
    encode_deterministic,
    encode_nondeterministic,
    parse_atm,
    read_atm,
)
from src.errors import EncodingError, ParseError
from src.game_graph import solve_general
from src.negotiation import validate
from src.semantics import classify, explore_markings

OFF_TAPE = """\
atm off_tape
states q0[E] q1[E]
alphabet a
input a
delta q0 a -> (q1 a R)
"""


def _machine(machines_dir, name):
    return read_atm(os.path.join(machines_dir, f"{name}.atm"))


def test_parse_atm_reads_states_and_moves():
    """Test that states, alphabet, input and transitions are read."""
    # Arrange
    text = (
        "atm m  # comment\n"
        "states q0[U] qa[acc]\n"
        "alphabet a b\n"
        "input a b a\n"
        "delta q0 a -> (qa b L) (qa a R)\n"
    )

    # Act
    machine = parse_atm(text)

    # Assert
    assert machine.initial == "q0"
    assert machine.kinds["q0"] is StateKind.UNIVERSAL
    assert machine.word == ("a", "b", "a")
    assert [move.label for move in machine.moves("q0", "a")] == ["qa.b.L", "qa.a.R"]
    assert machine.moves("q0", "b") == ()


@pytest.mark.parametrize(
    "text, message",
    [
        ("states q0[E]\n", "expected 'atm <name>'"),
        ("atm m\nstates q0[X]\n", "expected '<state>"),
        ("atm m\nstates q0[E]\nalphabet a\ninput b\n", "not in the alphabet"),
        (
            "atm m\nstates q0[E] qa[acc]\nalphabet a\ninput a\ndelta qa a -> (q0 a R)\n",
            "halting state",
        ),
        ("atm m\nstates q0[E]\nalphabet a\ninput a\ndelta q0 a -> q0 a R\n", "expected 'delta"),
        ("atm m\nstates q0[E]\nalphabet a\n", "input word is empty"),
    ],
)
def test_parse_atm_errors(text, message):
    """Test that malformed machines raise ParseError."""
    # Act & Assert
    with pytest.raises(ParseError, match=message):
        parse_atm(text)


@pytest.mark.parametrize(
    "name, expected",
    [
        ("first_a", True),
        ("universal_ab", True),
        ("universal_aa", False),
        ("existential_rewrite", True),
        ("ping_pong", False),
        ("alternating_aba", True),
        ("alternating_abb", False),
    ],
)
def test_accepts_machine_corpus(_machines_dir, name, expected):
    """Test direct acceptance of the hand-written machines."""
    # Act & Assert
    assert accepts(_machine(_machines_dir, name)) is expected


def test_moving_off_tape_is_an_encoding_error():
    """Test that a reachable move past the last cell into a working state is refused."""
    # Arrange
    machine = parse_atm(OFF_TAPE)

    # Act & Assert
    with pytest.raises(EncodingError, match="leaves the tape"):
        encode_nondeterministic(machine)


@pytest.mark.parametrize("name", ["first_a", "universal_aa", "existential_rewrite", "ping_pong"])
def test_nondeterministic_encoding_matches_acceptance(_machines_dir, name):
    """Test that Player 1 wins the hyper-arc encoding exactly when the machine accepts."""
    # Arrange
    machine = _machine(_machines_dir, name)

    # Act
    arena = encode_nondeterministic(machine)
    _, result = solve_general(arena)

    # Assert
    assert validate(arena.negotiation).ok
    assert result.player1_wins is accepts(machine)


def test_nondeterministic_encoding_enables_one_atom_at_a_time(_machines_dir):
    """Test that every reachable marking of the hyper-arc encoding enables at most one atom."""
    # Arrange
    arena = encode_nondeterministic(_machine(_machines_dir, "alternating_aba"))

    # Act
    graph = explore_markings(arena.negotiation)

    # Assert
    assert all(len(enabled) <= 1 for enabled in graph.enabled)
    assert graph.final_node is not None


@pytest.mark.parametrize("name", ["first_a", "universal_ab", "universal_aa", "ping_pong"])
def test_deterministic_encoding_matches_acceptance(_machines_dir, name):
    """Test that Player 1 wins the guessing encoding exactly when the machine accepts."""
    # Arrange
    machine = _machine(_machines_dir, name)

    # Act
    arena = encode_deterministic(machine)
    _, result = solve_general(arena)

    # Assert
    assert validate(arena.negotiation).ok
    assert classify(arena.negotiation).deterministic
    assert result.player1_wins is accepts(machine)
