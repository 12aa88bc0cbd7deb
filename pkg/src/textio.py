"""Reading and writing .neg documents, DOT graphs and result files.

A .neg document is line oriented; '#' starts a comment:

    negotiation <name>
    agents <agent>+
    atom <id> [initial|final] parties <agent>+ outcomes <outcome>+
    arc <atom> <agent> <outcome> -> <atom>+
    player1 <atom>+            (or)   coalition <agent>+
    goal <agent> (<atom> <outcome>)*
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from src.arena import partition_from_coalition
from src.errors import ParseError, SemanticError
from src.negotiation import Arena, Negotiation, NegotiationBuilder, ensure_valid
from src.semantics import MarkingGraphRaw, MarkingStatus

logger = logging.getLogger(__name__)

KEYWORDS = frozenset(
    {
        "negotiation",
        "agents",
        "atom",
        "arc",
        "player1",
        "coalition",
        "goal",
        "parties",
        "outcomes",
        "initial",
        "final",
        "->",
    }
)
_IDENTIFIER = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.'\-]*")
_TOKEN = re.compile(r"\S+")


@dataclass
class _Token:
    text: str
    line: int
    column: int


@dataclass
class NegotiationDocument:
    """Declarations of a .neg file, before names are resolved."""

    name: str = ""
    agents: list[_Token] = field(default_factory=list)
    atoms: list[tuple[_Token, str | None, list[_Token], list[_Token]]] = field(default_factory=list)
    arcs: list[tuple[_Token, _Token, _Token, list[_Token]]] = field(default_factory=list)
    player1: list[_Token] | None = None
    coalition: list[_Token] | None = None
    goals: list[tuple[_Token, list[tuple[_Token, _Token]]]] = field(default_factory=list)


def _tokenize(text: str) -> list[list[_Token]]:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens = [_Token(m.group(), number, m.start() + 1) for m in _TOKEN.finditer(content)]
        if tokens:
            lines.append(tokens)
    return lines


def _identifier(token: _Token, kind: str) -> _Token:
    if token.text in KEYWORDS or not _IDENTIFIER.fullmatch(token.text):
        raise ParseError(
            f"expected {kind} identifier, found '{token.text}'", token.line, token.column
        )
    return token


def _identifiers(tokens: list[_Token], kind: str, after: _Token) -> list[_Token]:
    if not tokens:
        column = after.column + len(after.text)
        raise ParseError(f"expected at least one {kind}", after.line, column)
    return [_identifier(t, kind) for t in tokens]


def _parse_atom(tokens: list[_Token], doc: NegotiationDocument) -> None:
    head = tokens[0]
    if len(tokens) < 2:
        raise ParseError("expected atom identifier", head.line, head.column + len(head.text))
    name = _identifier(tokens[1], "atom")
    rest = tokens[2:]
    role = None
    if rest and rest[0].text in ("initial", "final"):
        role = rest[0].text
        rest = rest[1:]
    if not rest or rest[0].text != "parties":
        where = rest[0] if rest else name
        raise ParseError("expected 'parties'", where.line, where.column)
    try:
        split = next(i for i, t in enumerate(rest) if t.text == "outcomes")
    except StopIteration:
        raise ParseError("expected 'outcomes'", head.line, rest[-1].column) from None
    parties = _identifiers(rest[1:split], "agent", rest[0])
    outcomes = _identifiers(rest[split + 1 :], "outcome", rest[split])
    doc.atoms.append((name, role, parties, outcomes))


def _parse_arc(tokens: list[_Token], doc: NegotiationDocument) -> None:
    if len(tokens) < 5 or tokens[4].text != "->":
        where = tokens[4] if len(tokens) > 4 else tokens[-1]
        raise ParseError(
            "expected 'arc <atom> <agent> <outcome> -> <atom>+'", where.line, where.column
        )
    atom = _identifier(tokens[1], "atom")
    agent = _identifier(tokens[2], "agent")
    outcome = _identifier(tokens[3], "outcome")
    targets = _identifiers(tokens[5:], "atom", tokens[4])
    doc.arcs.append((atom, agent, outcome, targets))


def _parse_goal(tokens: list[_Token], doc: NegotiationDocument) -> None:
    head = tokens[0]
    if len(tokens) < 2:
        raise ParseError("expected agent identifier", head.line, head.column + len(head.text))
    agent = _identifier(tokens[1], "agent")
    rest = tokens[2:]
    if len(rest) % 2:
        raise ParseError("goal pairs must be '<atom> <outcome>'", rest[-1].line, rest[-1].column)
    pairs = [
        (_identifier(rest[i], "atom"), _identifier(rest[i + 1], "outcome"))
        for i in range(0, len(rest), 2)
    ]
    doc.goals.append((agent, pairs))


def parse_document(text: str) -> NegotiationDocument:
    """Checks the grammar and collects declarations without resolving names."""
    lines = _tokenize(text)
    if not lines or lines[0][0].text != "negotiation":
        where = lines[0][0] if lines else _Token("", 1, 1)
        raise ParseError("expected 'negotiation'", where.line, where.column)
    header = lines[0]
    if len(header) != 2:
        where = header[2] if len(header) > 2 else header[0]
        raise ParseError("expected 'negotiation <name>'", where.line, where.column)
    doc = NegotiationDocument(name=_identifier(header[1], "negotiation").text)

    for tokens in lines[1:]:
        keyword = tokens[0]
        if keyword.text == "agents":
            doc.agents.extend(_identifiers(tokens[1:], "agent", keyword))
        elif keyword.text == "atom":
            _parse_atom(tokens, doc)
        elif keyword.text == "arc":
            _parse_arc(tokens, doc)
        elif keyword.text in ("player1", "coalition"):
            if doc.player1 is not None or doc.coalition is not None:
                raise ParseError(
                    "only one 'player1' or 'coalition' line is allowed",
                    keyword.line,
                    keyword.column,
                )
            kind = "atom" if keyword.text == "player1" else "agent"
            names = _identifiers(tokens[1:], kind, keyword)
            if keyword.text == "player1":
                doc.player1 = names
            else:
                doc.coalition = names
        elif keyword.text == "goal":
            _parse_goal(tokens, doc)
        elif keyword.text == "negotiation":
            raise ParseError("second 'negotiation' header", keyword.line, keyword.column)
        else:
            raise ParseError(f"unknown keyword '{keyword.text}'", keyword.line, keyword.column)
    return doc


def _resolve(doc: NegotiationDocument) -> Arena:
    builder = NegotiationBuilder(doc.name)
    for token in doc.agents:
        try:
            builder.add_agent(token.text)
        except SemanticError as error:
            raise SemanticError(str(error), token.line) from None

    for name, role, parties, outcomes in doc.atoms:
        for party in parties:
            if party.text not in builder.agents:
                raise SemanticError(f"undeclared agent '{party.text}'", party.line)
        try:
            builder.add_atom(name.text, [p.text for p in parties], [o.text for o in outcomes], role)
        except SemanticError as error:
            raise SemanticError(str(error), name.line) from None

    if builder.initial is None:
        raise SemanticError("no initial atom declared")
    if builder.final is None:
        raise SemanticError("no final atom declared")

    def check_atom(token: _Token) -> tuple[list[str], list[str]]:
        if token.text not in builder.atoms:
            raise SemanticError(f"undeclared atom '{token.text}'", token.line)
        return builder.atoms[token.text]

    def check_outcome(atom: _Token, outcome: _Token) -> None:
        if outcome.text not in check_atom(atom)[1]:
            raise SemanticError(f"atom '{atom.text}' has no outcome '{outcome.text}'", outcome.line)

    def check_party(atom: _Token, agent: _Token) -> None:
        if agent.text not in builder.agents:
            raise SemanticError(f"undeclared agent '{agent.text}'", agent.line)
        if agent.text not in check_atom(atom)[0]:
            raise SemanticError(f"agent '{agent.text}' is not a party of '{atom.text}'", agent.line)

    for atom, agent, outcome, targets in doc.arcs:
        check_party(atom, agent)
        check_outcome(atom, outcome)
        if atom.text == builder.final:
            raise SemanticError(
                f"arcs leaving the final atom '{atom.text}' are not allowed", atom.line
            )
        for target in targets:
            check_atom(target)
        try:
            builder.add_arc(atom.text, agent.text, outcome.text, [t.text for t in targets])
        except SemanticError as error:
            raise SemanticError(str(error), atom.line) from None

    negotiation = builder.build()

    goals: dict[int, set[tuple[int, int]]] = {}
    for agent, pairs in doc.goals:
        if agent.text not in builder.agents:
            raise SemanticError(f"undeclared agent '{agent.text}'", agent.line)
        a = negotiation.agent_index(agent.text)
        if a in goals:
            raise SemanticError(f"second goal line for agent '{agent.text}'", agent.line)
        goals[a] = set()
        for atom, outcome in pairs:
            check_outcome(atom, outcome)
            n = negotiation.atom_index(atom.text)
            goals[a].add((n, negotiation.outcome_index(n, outcome.text)))

    if doc.coalition is not None:
        for token in doc.coalition:
            if token.text not in builder.agents:
                raise SemanticError(f"undeclared agent '{token.text}'", token.line)
        coalition = {negotiation.agent_index(t.text) for t in doc.coalition}
        return partition_from_coalition(negotiation, coalition, goals)

    player1 = set()
    for token in doc.player1 or []:
        check_atom(token)
        player1.add(negotiation.atom_index(token.text))
    return Arena(negotiation, frozenset(player1), goals)


def parse(text: str) -> Arena:
    """Parses a .neg document into a validated arena.

    Args:
        text: The document.

    Returns:
        The arena; N1 is empty without a partition line and goals are None
        without goal lines.

    Raises:
        ParseError: The text violates the grammar.
        SemanticError: A name is undeclared or declared twice.
        ValidationError: The negotiation or its goals break a model invariant.
    """
    arena = _resolve(parse_document(text))
    logger.debug(
        "parsed '%s': %d agents, %d atoms",
        arena.negotiation.name,
        len(arena.negotiation.agents),
        len(arena.negotiation.atoms),
    )
    return ensure_valid(arena)


def read_text(path: str) -> str:
    """Reads a UTF-8 file; undecodable bytes are a ParseError at their position."""
    with open(path, "rb") as handle:
        raw = handle.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as err:
        line = raw.count(b"\n", 0, err.start) + 1
        column = err.start - raw.rfind(b"\n", 0, err.start)
        raise ParseError("input is not valid UTF-8", line, column) from err


def read_arena(path: str) -> Arena:
    return parse(read_text(path))


def _exported_partition(arena: Arena) -> tuple[str, list[str]] | None:
    negotiation = arena.negotiation
    if arena.coalition:
        derived = partition_from_coalition(negotiation, arena.coalition)
        if derived.player1 == arena.player1:
            return "coalition", [negotiation.agents[a].name for a in sorted(arena.coalition)]
    if arena.player1:
        return "player1", [negotiation.atoms[n].name for n in sorted(arena.player1)]
    return None


def export(arena: Arena) -> str:
    """Writes the canonical .neg text of an arena."""
    negotiation = arena.negotiation
    lines = [f"negotiation {negotiation.name}"]
    lines.append("agents " + " ".join(agent.name for agent in negotiation.agents))
    for atom in negotiation.atoms:
        role = ""
        if atom.index == negotiation.initial:
            role = " initial"
        elif atom.index == negotiation.final:
            role = " final"
        parties = " ".join(negotiation.agents[a].name for a in atom.parties)
        outcomes = " ".join(outcome.name for outcome in atom.outcomes)
        lines.append(f"atom {atom.name}{role} parties {parties} outcomes {outcomes}")
    for (n, a, r), targets in sorted(negotiation.transition.items()):
        if not targets:
            continue
        atom = negotiation.atoms[n]
        names = " ".join(negotiation.atoms[t].name for t in targets)
        agent = negotiation.agents[a].name
        lines.append(f"arc {atom.name} {agent} {atom.outcomes[r].name} -> {names}")

    partition = _exported_partition(arena)
    if partition is not None:
        keyword, names = partition
        lines.append(f"{keyword} " + " ".join(names))
    for agent, pairs in (arena.goals or {}).items():
        words = [f"goal {negotiation.agents[agent].name}"]
        for n, r in sorted(pairs):
            words.append(f"{negotiation.atoms[n].name} {negotiation.atoms[n].outcomes[r].name}")
        lines.append(" ".join(words))
    return "\n".join(lines) + "\n"


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _format_index(value: float) -> str:
    return "inf" if value == math.inf else str(int(value))


def export_dot(arena: Arena, annotations: Mapping[int, float] | None = None) -> str:
    """Renders the arena as a DOT digraph.

    One node per atom, Player 1 atoms filled. Each triple (n, a, r) becomes
    one edge per target labelled "r/a", so a hyper-arc shows as a bundle of
    edges sharing a label. Attractor indices, when given, extend node labels.
    """
    negotiation = arena.negotiation
    lines = [f"digraph {_quote(negotiation.name)} {{", "  node [shape=box];"]
    for atom in negotiation.atoms:
        label = atom.name
        if annotations:
            label += f"\nA={_format_index(annotations.get(atom.index, math.inf))}"
        attributes = [f"label={_quote(label)}"]
        if atom.index in arena.player1:
            attributes.append('style=filled, fillcolor="lightblue"')
        if atom.index in (negotiation.initial, negotiation.final):
            attributes.append("peripheries=2")
        lines.append(f"  {_quote(atom.name)} [{', '.join(attributes)}];")
    for (n, a, r), targets in sorted(negotiation.transition.items()):
        atom = negotiation.atoms[n]
        label = f"{atom.outcomes[r].name}/{negotiation.agents[a].name}"
        for target in targets:
            lines.append(
                f"  {_quote(atom.name)} -> {_quote(negotiation.atoms[target].name)} "
                f"[label={_quote(label)}];"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_marking_graph_dot(graph: MarkingGraphRaw) -> str:
    """Renders explored markings as a DOT digraph with (n,r) edge labels."""
    negotiation = graph.negotiation
    lines = [f"digraph {_quote(negotiation.name + '_markings')} {{"]
    for node, status in enumerate(graph.status):
        label = negotiation.format_marking(graph.marking(node))
        attributes = [f"label={_quote(f'x{node} {label}')}"]
        if status is MarkingStatus.FINAL:
            attributes.append("shape=doublecircle")
        elif status is MarkingStatus.DEADLOCK:
            attributes.append('shape=octagon, color="red"')
        else:
            attributes.append("shape=ellipse")
        lines.append(f"  x{node} [{', '.join(attributes)}];")
    for source, edges in enumerate(graph.edges):
        for atom, outcome, target in edges:
            label = negotiation.step_label(atom, outcome)
            lines.append(f"  x{source} -> x{target} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and math.isinf(value):
        return None
    if isinstance(value, Mapping):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (set, frozenset)):
        return [_jsonable(item) for item in sorted(value)]
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value


def dump_result(result: Mapping[str, Any]) -> str:
    """Serializes a solver result as JSON; infinite indices become null."""
    return json.dumps(_jsonable(result), indent=2, sort_keys=True) + "\n"


def load_result(text: str) -> dict[str, Any]:
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, err.lineno, err.colno) from None


def negotiation_summary(negotiation: Negotiation) -> str:
    return (
        f"{negotiation.name}: {len(negotiation.agents)} agents, "
        f"{len(negotiation.atoms)} atoms, {negotiation.outcome_count} outcomes"
    )
