"""Unit tests for the negotiation module."""

import itertools

import pytest

from src.errors import SemanticError, ValidationError
from src.negotiation import (
    Arena,
    NegotiationBuilder,
    enumerate_independent_sets,
    ensure_valid,
    is_independent,
    validate,
    validate_arena,
)
from src.random_arenas import GeneratorConfig, random_arenas


def _builder() -> NegotiationBuilder:
    builder = NegotiationBuilder("pair")
    builder.add_agent("A")
    builder.add_agent("B")
    builder.add_atom("n0", ["A", "B"], ["go"], role="initial")
    builder.add_atom("na", ["A"], ["x"])
    builder.add_atom("nb", ["B"], ["x"])
    builder.add_atom("nf", ["A", "B"], ["end"], role="final")
    builder.add_arc("n0", "A", "go", ["na"])
    builder.add_arc("n0", "B", "go", ["nb"])
    builder.add_arc("na", "A", "x", ["nf"])
    builder.add_arc("nb", "B", "x", ["nf"])
    return builder


def test_build_assigns_dense_indices():
    """Test that build resolves names into dense indices in declaration order."""
    # Act
    negotiation = _builder().build()

    # Assert
    assert [atom.name for atom in negotiation.atoms] == ["n0", "na", "nb", "nf"]
    assert negotiation.initial == 0
    assert negotiation.final == 3
    assert negotiation.agent_index("B") == 1
    assert negotiation.successors(0, 1, 0) == (2,)
    assert negotiation.outcome_count == 4


def test_triples_follow_index_order():
    """Test that triples enumerates (atom, agent, outcome) in index order."""
    # Arrange
    negotiation = _builder().build()

    # Act
    triples = list(negotiation.triples())

    # Assert
    assert triples == [(0, 0, 0), (0, 1, 0), (1, 0, 0), (2, 1, 0), (3, 0, 0), (3, 1, 0)]


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda b: b.add_agent("A"), "duplicate agent 'A'"),
        (lambda b: b.add_atom("na", ["A"], ["x"]), "duplicate atom 'na'"),
        (lambda b: b.add_atom("nx", [], ["x"]), "has no parties"),
        (lambda b: b.add_atom("nx", ["A"], []), "has no outcomes"),
        (lambda b: b.add_atom("nx", ["A"], ["x"], role="initial"), "second initial atom"),
        (lambda b: b.add_arc("na", "A", "x", ["nf"]), "duplicate arc"),
        (lambda b: b.add_party("na", "A"), "already a party"),
    ],
)
def test_builder_rejects_duplicates(mutate, message):
    """Test that the builder raises SemanticError on repeated or empty declarations."""
    # Arrange
    builder = _builder()

    # Act & Assert
    with pytest.raises(SemanticError, match=message):
        mutate(builder)


def test_build_rejects_arc_of_non_party():
    """Test that an arc for an agent outside the atom's parties is rejected."""
    # Arrange
    builder = _builder()
    builder.add_arc("na", "B", "x", ["nf"])

    # Act & Assert
    with pytest.raises(SemanticError, match="not a party of 'na'"):
        builder.build()


def test_validate_accepts_well_formed_negotiation():
    """Test that a well-formed negotiation yields an empty report."""
    # Act
    report = validate(_builder().build())

    # Assert
    assert report.ok
    assert str(report) == "valid"


def test_validate_reports_missing_participation_and_empty_arcs():
    """Test that every violated invariant shows up in the report."""
    # Arrange
    builder = NegotiationBuilder("broken")
    builder.add_agent("A")
    builder.add_agent("B")
    builder.add_atom("n0", ["A"], ["go"], role="initial")
    builder.add_atom("nf", ["A", "B"], ["end"], role="final")

    # Act
    report = validate(builder.build())

    # Assert
    rules = [violation.rule for violation in report.violations]
    assert "participation" in rules
    assert "nonfinal-nonempty" in rules
    assert not report.ok


def test_validate_arena_checks_goals_lead_to_final():
    """Test that a goal pair whose arc does not reach the final atom is reported."""
    # Arrange
    negotiation = _builder().build()
    arena = Arena(negotiation, goals={0: {(0, 0)}})

    # Act
    report = validate_arena(arena)

    # Assert
    assert [v.rule for v in report.violations] == ["goal"]
    with pytest.raises(ValidationError):
        ensure_valid(arena)


def test_arena_owner_and_partition():
    """Test that atoms outside N1 belong to Player 2 and with_partition replaces N1."""
    # Arrange
    arena = Arena(_builder().build(), player1={1})

    # Act
    moved = arena.with_partition({2, 3})

    # Assert
    assert arena.owner(1) == 1
    assert arena.owner(2) == 2
    assert arena.player2 == frozenset({0, 2, 3})
    assert moved.player1 == frozenset({2, 3})


def test_empty_goal_mapping_becomes_none():
    """Test that an arena without constrained agents has goals None."""
    # Act
    arena = Arena(_builder().build(), goals={})

    # Assert
    assert arena.goals is None


def test_independent_sets_of_disjoint_atoms():
    """Test the enumeration of independent sets ordered by size."""
    # Arrange
    negotiation = _builder().build()

    # Act
    sets = enumerate_independent_sets(negotiation, [1, 2])

    # Assert
    assert [s.atoms for s in sets] == [(1,), (2,), (1, 2)]
    assert is_independent(negotiation, [1, 2])
    assert not is_independent(negotiation, [0, 1])


def _pairwise_disjoint(negotiation, atoms):
    parties = [set(negotiation.atoms[n].parties) for n in atoms]
    return all(not p & q for p, q in itertools.combinations(parties, 2))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_independent_sets_match_every_subset(seed):
    """Test the enumeration against all subsets of random negotiations of up to 12 atoms."""
    # Arrange
    config = GeneratorConfig(max_agents=6, max_atoms=12, max_outcomes=2)
    negotiations = [arena.negotiation for arena in random_arenas(seed, 10, config)]

    # Act
    found = {
        negotiation.name: [
            s.atoms
            for s in enumerate_independent_sets(
                negotiation, reversed(range(len(negotiation.atoms)))
            )
        ]
        for negotiation in negotiations
    }

    # Assert
    for negotiation in negotiations:
        atoms = range(len(negotiation.atoms))
        expected = [
            subset
            for size in range(1, len(atoms) + 1)
            for subset in itertools.combinations(atoms, size)
            if _pairwise_disjoint(negotiation, subset)
        ]
        assert found[negotiation.name] == expected, negotiation.name
        assert all(is_independent(negotiation, subset) for subset in expected)


def test_independent_sets_of_nothing_enabled():
    """Test that no enabled atom gives no independent set."""
    # Act & Assert
    assert enumerate_independent_sets(_builder().build(), []) == []


def test_to_builder_round_trips():
    """Test that to_builder rebuilds an equal negotiation."""
    # Arrange
    negotiation = _builder().build()

    # Act
    rebuilt = negotiation.to_builder().build()

    # Assert
    assert rebuilt == negotiation
