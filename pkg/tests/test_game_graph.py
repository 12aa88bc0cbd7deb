"""Unit tests for the game_graph module."""

import pytest

from src.errors import PreconditionError, ResourceLimitError
from src.game_graph import (
    GameMode,
    NodeStatus,
    build_game_graph,
    format_witness,
    play_out,
    result_from_payload,
    result_payload,
    solve_general,
    verify_player1_strategy,
    verify_player2_strategy,
)
from src.negotiation import Arena, NegotiationBuilder
from tests.conftest import load_fixture


@pytest.mark.parametrize(
    "name, coalition, player1_wins",
    [
        ("fig1_right", "F,D,M", True),
        ("fig1_right", "M", False),
        ("fig2", None, True),
        ("fig2_forced_s", None, False),
        ("fig1_left", "F,D", True),
    ],
)
def test_solve_general_termination(name, coalition, player1_wins):
    """Test the termination verdicts of the example arenas."""
    # Arrange
    arena = load_fixture(name, coalition=coalition)

    # Act
    _, result = solve_general(arena, GameMode.TERMINATION)

    # Assert
    assert result.player1_wins is player1_wins


def test_unsound_arena_deadlock_counts_against_player1():
    """Test that a reachable deadlock lets Player 2 win when it owns the deciding atom."""
    # Arrange
    arena = load_fixture("fig1_left_broken")

    # Act
    graph, result = solve_general(arena)

    # Assert
    assert not result.player1_wins
    assert any(node.status is NodeStatus.DEADLOCK for node in graph.schedulers)
    assert result.witness.kind == "deadlock"
    assert format_witness(graph, result.witness).endswith("deadlock")


def _race_arena() -> Arena:
    """A is wanted at n1 and n2; firing n2 first strands B at n1."""
    builder = NegotiationBuilder("race")
    for agent in ["A", "B", "C"]:
        builder.add_agent(agent)
    builder.add_atom("n0", ["A", "B", "C"], ["go"], role="initial")
    builder.add_atom("n1", ["A", "B"], ["x"])
    builder.add_atom("n2", ["A", "C"], ["x"])
    builder.add_atom("nf", ["A", "B", "C"], ["end"], role="final")
    builder.add_arc("n0", "A", "go", ["n1", "n2"])
    builder.add_arc("n0", "B", "go", ["n1"])
    builder.add_arc("n0", "C", "go", ["n2"])
    builder.add_arc("n1", "A", "x", ["n2", "nf"])
    builder.add_arc("n1", "B", "x", ["nf"])
    builder.add_arc("n2", "A", "x", ["nf"])
    builder.add_arc("n2", "C", "x", ["nf"])
    return Arena(builder.build())


def test_friendly_scheduler_helps_player1():
    """Test that only a friendly Scheduler orders n1 before n2."""
    # Arrange
    arena = _race_arena()

    # Act
    _, adversarial = solve_general(arena)
    _, friendly = solve_general(arena, friendly_scheduler=True)

    # Assert
    assert not adversarial.player1_wins
    assert friendly.player1_wins
    assert friendly.friendly_scheduler
    assert friendly.witness.kind == "finite"


def test_choice_nodes_cover_independent_sets(_fig2):
    """Test that every choice node's atoms are enabled at its scheduler node."""
    # Act
    graph = build_game_graph(_fig2)

    # Assert
    assert graph.schedulers[0].status is NodeStatus.LIVE
    for choice in graph.choices:
        rows = len(choice.player1_moves)
        columns = len(choice.player2_moves)
        assert len(choice.successors) == rows
        assert all(len(row) == columns for row in choice.successors)


def test_concurrent_choices_appear_when_daughters_split():
    """Test that split daughters yield multi-atom choices."""
    # Arrange
    arena = load_fixture("fig5")

    # Act
    graph = build_game_graph(arena)

    # Assert
    assert any(len(choice.atoms) > 1 for choice in graph.choices)


def test_concluding_outcome_requires_goals(_fig2):
    """Test that the concluding outcome game refuses arenas without goals."""
    # Act & Assert
    with pytest.raises(PreconditionError, match="goal declarations"):
        build_game_graph(_fig2, GameMode.CONCLUDING_OUTCOME)


def test_concluding_outcome_targets_need_all_flags(_fig5):
    """Test that only final scheduler nodes with every goal flag set are targets."""
    # Act
    graph = build_game_graph(_fig5, GameMode.CONCLUDING_OUTCOME)

    # Assert
    finals = [node for node in graph.schedulers if node.bits == 0]
    assert any(node.status is NodeStatus.TARGET for node in finals)
    assert any(node.status is NodeStatus.FINAL for node in finals)
    for node in finals:
        complete = node.flags == graph.constrained_mask
        assert (node.status is NodeStatus.TARGET) is complete


def test_player1_loses_concluding_outcome_of_fig5(_fig5):
    """Test that the coalition F, D1 cannot force both daughters to their goals."""
    # Act
    _, result = solve_general(_fig5, GameMode.CONCLUDING_OUTCOME)

    # Assert
    assert not result.player1_wins


def test_move_cap_is_enforced(_fig5):
    """Test that max_moves bounds the outcome matrix of a single choice."""
    # Act & Assert
    with pytest.raises(ResourceLimitError, match="outcome combinations"):
        build_game_graph(_fig5, max_moves=2)


@pytest.mark.parametrize("name", ["fig2", "fig1_left_broken"])
def test_strategies_verify(name):
    """Test that the returned strategy of the winner is sound against all behaviors."""
    # Arrange
    arena = load_fixture(name)

    # Act
    graph, result = solve_general(arena)

    # Assert
    if result.player1_wins:
        assert verify_player1_strategy(graph, result).ok
    else:
        assert verify_player2_strategy(graph, result).ok


def test_payload_round_trip_reproduces_witness(_fig2):
    """Test that strategy tables rebuilt from a payload replay the same witness."""
    # Arrange
    graph, result = solve_general(_fig2)
    payload = result_payload(graph, result)

    # Act
    rebuilt = result_from_payload(build_game_graph(_fig2), payload)
    witness = play_out(graph, rebuilt)

    # Assert
    assert payload["winner"] == 1
    assert format_witness(graph, witness) == payload["witness"]["play"]
