"""Unit tests for the textio module."""

import glob
import math
import os
import re

import pytest

from src.errors import NegotiationError, ParseError, SemanticError, ValidationError
from src.semantics import explore_markings
from src.textio import (
    dump_result,
    export,
    export_dot,
    export_marking_graph_dot,
    load_result,
    parse,
    read_arena,
)
from tests.conftest import FIXTURES_DIR, load_fixture

MINIMAL = """\
negotiation minimal   # one step to the end
agents A B
atom n0 initial parties A B outcomes go
atom nf final parties A B outcomes end
arc n0 A go -> nf
arc n0 B go -> nf
"""


def test_parse_minimal_document():
    """Test that a minimal document parses into an arena without partition or goals."""
    # Act
    arena = parse(MINIMAL)

    # Assert
    assert arena.negotiation.name == "minimal"
    assert len(arena.negotiation.atoms) == 2
    assert arena.player1 == frozenset()
    assert arena.goals is None


def test_parse_coalition_derives_partition():
    """Test that a coalition line yields the majority partition."""
    # Act
    arena = load_fixture("fig2")

    # Assert
    names = {arena.negotiation.atoms[n].name for n in arena.player1}
    assert names == {"n1", "n2", "n3"}
    assert {arena.negotiation.agents[a].name for a in arena.coalition} == {"D1", "D2"}


def test_parse_goal_lines():
    """Test that goal lines resolve into (atom, outcome) index pairs."""
    # Act
    arena = load_fixture("fig5")

    # Assert
    negotiation = arena.negotiation
    d1 = negotiation.agent_index("D1")
    n4 = negotiation.atom_index("n4")
    assert (n4, negotiation.outcome_index(n4, "y")) in arena.goals[d1]
    assert len(arena.goals[negotiation.agent_index("D2")]) == 4


def test_parse_player1_line():
    """Test that a player1 line lists N1 directly."""
    # Arrange
    text = MINIMAL + "player1 n0\n"

    # Act
    arena = parse(text)

    # Assert
    assert arena.player1 == frozenset({0})


@pytest.mark.parametrize(
    "text, line",
    [
        ("agents A\n", 1),
        ("negotiation x\nagents A\natom n0 initial parties A\n", 3),
        ("negotiation x\nagents A\narc n0 A go nf\n", 3),
        ("negotiation x\nfoo bar\n", 2),
        ("negotiation x\nagents atom\n", 2),
        (MINIMAL + "goal A n0\n", 7),
    ],
)
def test_parse_grammar_errors(text, line):
    """Test that grammar violations raise ParseError with the offending line."""
    # Act & Assert
    with pytest.raises(ParseError) as excinfo:
        parse(text)
    assert excinfo.value.line == line


@pytest.mark.parametrize(
    "text, message",
    [
        (MINIMAL.replace("agents A B", "agents A"), "undeclared agent 'B'"),
        (MINIMAL + "arc n0 A go -> n9\n", "duplicate arc|undeclared atom 'n9'"),
        (MINIMAL + "coalition C\n", "undeclared agent 'C'"),
        (MINIMAL + "arc nf A end -> n0\n", "arcs leaving the final atom"),
        (MINIMAL.replace("outcomes go", "outcomes go go"), "lists an outcome twice"),
    ],
)
def test_parse_semantic_errors(text, message):
    """Test that unresolved or repeated names raise SemanticError."""
    # Act & Assert
    with pytest.raises(SemanticError, match=message):
        parse(text)


def test_parse_reports_invariant_violations():
    """Test that a missing arc of a non-final atom is a ValidationError."""
    # Arrange
    text = MINIMAL.replace("arc n0 B go -> nf\n", "")

    # Act & Assert
    with pytest.raises(ValidationError) as excinfo:
        parse(text)
    assert not excinfo.value.report.ok


@pytest.mark.parametrize("name", ["fig1_right", "fig2", "fig3_left", "fig5"])
def test_export_then_parse_gives_equal_arena(name):
    """Test that the canonical text of an arena parses back into the same arena."""
    # Arrange
    arena = load_fixture(name)

    # Act
    reparsed = parse(export(arena))

    # Assert
    assert reparsed == arena


def test_export_keeps_coalition_line():
    """Test that an arena built from a coalition is written with its coalition."""
    # Act
    text = export(load_fixture("fig2"))

    # Assert
    assert "coalition D1 D2" in text
    assert "player1" not in text


def test_export_dot_marks_player1_and_hyperarcs():
    """Test that DOT export fills N1 atoms and expands hyper-arcs into labelled edges."""
    # Arrange
    arena = load_fixture("fig2")

    # Act
    dot = export_dot(arena)

    # Assert
    assert dot.startswith('digraph "fig2" {')
    assert '"n1" [label="n1", style=filled, fillcolor="lightblue"];' in dot
    assert '"n0" -> "n2" [label="st/F"];' in dot
    assert '"n0" -> "n4" [label="st/F"];' in dot
    assert '"n0" -> "nf" [label="st/F"];' in dot


def test_export_dot_with_annotations():
    """Test that attractor indices extend node labels, with inf for non-members."""
    # Arrange
    arena = load_fixture("fig3_left")

    # Act
    dot = export_dot(arena, {0: math.inf, 3: 0})

    # Assert
    assert 'label="n0\\nA=inf"' in dot
    assert 'label="nf\\nA=0"' in dot
    assert 'label="n1\\nA=inf"' in dot


def test_export_marking_graph_dot_marks_deadlocks():
    """Test that deadlocked markings are drawn as red octagons."""
    # Arrange
    negotiation = load_fixture("fig1_left_broken").negotiation

    # Act
    dot = export_marking_graph_dot(explore_markings(negotiation))

    # Assert
    assert "shape=octagon" in dot
    assert "shape=doublecircle" in dot
    assert 'x0 -> x1 [label="(n0,st)"];' in dot


def test_dump_result_writes_infinite_indices_as_null():
    """Test that JSON results replace infinite attractor indices with null."""
    # Arrange
    payload = {"attractorIndices": {"n0": math.inf, "nf": 0}, "winner": 2}

    # Act
    loaded = load_result(dump_result(payload))

    # Assert
    assert loaded == {"attractorIndices": {"n0": None, "nf": 0}, "winner": 2}



def test_parse_goal_without_pairs():
    """Test that a goal line without pairs gives the agent an empty goal set."""
    # Act
    arena = parse(MINIMAL + "goal A\n")

    # Assert
    assert arena.goals == {0: frozenset()}
    assert "goal A\n" in export(arena)


def test_read_arena_rejects_non_utf8_input(tmp_path):
    """Test that undecodable bytes are a parse error at their line and column."""
    # Arrange
    path = tmp_path / "latin1.neg"
    path.write_bytes(MINIMAL.encode("utf-8") + b"# caf\xe9\n")

    # Act & Assert
    with pytest.raises(ParseError, match="not valid UTF-8") as excinfo:
        read_arena(str(path))
    assert (excinfo.value.line, excinfo.value.column) == (7, 6)


def _mutations(text):
    """Copies of text with one token dropped, replaced or one line removed."""
    lines = text.splitlines()
    for number, line in enumerate(lines):
        yield "\n".join(lines[:number] + lines[number + 1 :])
        for match in re.finditer(r"\S+", line):
            start, end = match.span()
            for replacement in ("", "->", "n0", "nf", "x!"):
                mutated = line[:start] + replacement + line[end:]
                yield "\n".join(lines[:number] + [mutated] + lines[number + 1 :])


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(FIXTURES_DIR, "*.neg"))))
def test_mutated_documents_raise_only_negotiation_errors(path):
    """Test that damaged documents either parse or fail with a NegotiationError."""
    # Arrange
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    failures = 0

    # Act
    for mutated in _mutations(text):
        try:
            parse(mutated)
        except NegotiationError:
            failures += 1

    # Assert
    assert failures > 0


def test_export_marking_graph_dot_draws_every_outcome():
    """Test that two outcomes leading to the same marking give two labelled edges."""
    # Arrange
    text = MINIMAL.replace("outcomes go", "outcomes go also") + (
        "arc n0 A also -> nf\narc n0 B also -> nf\n"
    )
    graph = explore_markings(parse(text).negotiation)

    # Act
    dot = export_marking_graph_dot(graph)

    # Assert
    assert 'x0 -> x1 [label="(n0,go)"];' in dot
    assert 'x0 -> x1 [label="(n0,also)"];' in dot


def test_load_result_rejects_malformed_json():
    """Test that a broken result file is a ParseError with its position."""
    # Act & Assert
    with pytest.raises(ParseError) as excinfo:
        load_result('{"winner": 1,\n  oops}')
    assert excinfo.value.line == 2
