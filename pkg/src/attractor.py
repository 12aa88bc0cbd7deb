"""Attractor solver for the termination game on sound type-2 arenas.

Only deterministic parties matter: an atom joins the attractor when its
deterministic parties can be forced into earlier layers. The fixpoint keeps
one counter per (atom, outcome) of deterministic parties whose target is
still outside, so every triple is touched a constant number of times.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import networkx as nx

from src.errors import PreconditionError, ResourceLimitError
from src.game_graph import Witness, format_play
from src.negotiation import Arena, Marking, ValidationReport, Violation
from src.semantics import (
    DEFAULT_MAX_MARKINGS,
    OccurrenceStep,
    SoundnessReport,
    add_step_edge,
    check_soundness,
    deterministic_agents,
    packed,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttractorResult:
    """Attractor layers with memoryless strategies for both players.

    index[n] is the first layer containing atom n, or math.inf. strategy1
    maps every Player 1 atom and strategy2 every Player 2 atom to an outcome.
    """

    index: tuple[float, ...]
    member: frozenset[int]
    strategy1: Mapping[int, int]
    strategy2: Mapping[int, int]
    deterministic_agents: frozenset[int]
    seed: frozenset[int]

    @property
    def layers(self) -> list[list[int]]:
        depth = max((int(k) for k in self.index if k != math.inf), default=-1)
        layers: list[list[int]] = [[] for _ in range(depth + 1)]
        for atom, k in enumerate(self.index):
            if k != math.inf:
                layers[int(k)].append(atom)
        return layers


def atoms_without_deterministic_party(arena: Arena) -> list[int]:
    negotiation = arena.negotiation
    det = deterministic_agents(negotiation)
    return [atom.index for atom in negotiation.atoms if not det.intersection(atom.parties)]


def compute_attractor(
    arena: Arena, seed: Iterable[int] | None = None, barred: Iterable[int] = ()
) -> AttractorResult:
    """Least fixpoint of the attractor layers.

    Args:
        arena: A weakly deterministic type-2 arena.
        seed: Layer 0; defaults to the final atom.
        barred: Atoms that never join.

    Returns:
        The layers and both strategies.

    Raises:
        PreconditionError: Some atom has no deterministic party.
    """
    negotiation = arena.negotiation
    missing = atoms_without_deterministic_party(arena)
    if missing:
        names = ", ".join(negotiation.atoms[n].name for n in missing)
        raise PreconditionError(f"arena is not type 2: no deterministic party at {names}")

    det = deterministic_agents(negotiation)
    seed = frozenset({negotiation.final} if seed is None else seed)
    barred = frozenset(barred)
    size = len(negotiation.atoms)

    pending: list[list[int]] = []
    zero_outcomes = [0] * size
    watchers: list[list[tuple[int, int]]] = [[] for _ in range(size)]
    for atom in negotiation.atoms:
        counters = [0] * len(atom.outcomes)
        if atom.index != negotiation.final:
            for agent in atom.parties:
                if agent not in det:
                    continue
                for outcome in atom.outcomes:
                    (target,) = negotiation.successors(atom.index, agent, outcome.index)
                    watchers[target].append((atom.index, outcome.index))
                    counters[outcome.index] += 1
        pending.append(counters)

    index: list[float] = [math.inf] * size
    layer = sorted(seed)
    for atom in layer:
        index[atom] = 0
    k = 0
    while layer:
        following = []
        for joined in layer:
            for atom, outcome in watchers[joined]:
                pending[atom][outcome] -= 1
                if pending[atom][outcome] or index[atom] != math.inf or atom in barred:
                    continue
                zero_outcomes[atom] += 1
                owned = atom in arena.player1
                if owned or zero_outcomes[atom] == len(negotiation.atoms[atom].outcomes):
                    index[atom] = k + 1
                    following.append(atom)
        logger.debug("attractor layer %d: %d atoms", k, len(layer))
        layer = sorted(following)
        k += 1

    strategy1: dict[int, int] = {}
    strategy2: dict[int, int] = {}
    det_parties = [tuple(a for a in atom.parties if a in det) for atom in negotiation.atoms]
    for atom in negotiation.atoms:
        n = atom.index
        if n == negotiation.final:
            choice = 0
        elif n in arena.player1 and 0 < index[n] < math.inf:
            choice = next(
                r
                for r in range(len(atom.outcomes))
                if all(index[negotiation.successors(n, a, r)[0]] < index[n] for a in det_parties[n])
            )
        elif n not in arena.player1 and index[n] == math.inf:
            escapes = (
                r
                for r in range(len(atom.outcomes))
                if any(
                    index[negotiation.successors(n, a, r)[0]] == math.inf for a in det_parties[n]
                )
            )
            choice = next(escapes, 0)
        else:
            choice = 0
        if n in arena.player1:
            strategy1[n] = choice
        else:
            strategy2[n] = choice

    member = frozenset(n for n in range(size) if index[n] != math.inf)
    logger.debug("attractor of '%s': %d of %d atoms", negotiation.name, len(member), size)
    return AttractorResult(
        index=tuple(index),
        member=member,
        strategy1=strategy1,
        strategy2=strategy2,
        deterministic_agents=det,
        seed=seed,
    )


@dataclass(frozen=True)
class TerminationVerdict:
    player1_wins: bool
    result: AttractorResult
    soundness: SoundnessReport | None = None


def decide_termination(
    arena: Arena, assume_sound: bool = False, max_markings: int = DEFAULT_MAX_MARKINGS
) -> TerminationVerdict:
    """Player 1 wins the termination game iff n0 is in the attractor.

    Raises:
        PreconditionError: The arena is unsound (unless assume_sound is set)
            or not type 2. The soundness report travels with the error.
    """
    report = None
    if not assume_sound:
        report = check_soundness(arena.negotiation, max_markings)
        if not report.sound:
            raise PreconditionError(
                "arena is not sound:\n" + report.describe(arena.negotiation), report=report
            )
    result = compute_attractor(arena)
    wins = arena.negotiation.initial in result.member
    logger.info("attractor solver: player %d wins", 1 if wins else 2)
    return TerminationVerdict(wins, result, report)


@dataclass(frozen=True)
class PositionVector:
    """Attractor positions of the deterministic agents at one marking."""

    agents: tuple[int, ...]
    positions: tuple[float, ...]

    def precedes(self, other: PositionVector) -> bool:
        """Strict order: pointwise at most, and smaller somewhere."""
        pairs = list(zip(self.positions, other.positions))
        return all(p <= q for p, q in pairs) and any(p < q for p, q in pairs)


def position_vector(arena: Arena, attractor: AttractorResult, marking: Marking) -> PositionVector:
    if marking.is_final:
        raise PreconditionError("position vectors are undefined at the final marking")
    agents = tuple(sorted(attractor.deterministic_agents))
    positions = []
    for agent in agents:
        ready = marking.ready[agent]
        if len(ready) != 1:
            name = arena.negotiation.agents[agent].name
            raise PreconditionError(
                f"deterministic agent '{name}' is not ready for exactly one atom"
            )
        (atom,) = ready
        positions.append(attractor.index[atom])
    return PositionVector(agents, tuple(positions))


def strategy_graph(
    arena: Arena,
    attractor: AttractorResult,
    player: int,
    max_markings: int = DEFAULT_MAX_MARKINGS,
) -> nx.DiGraph:
    """Markings reachable when `player` follows its attractor strategy.

    Nodes are packed markings. Edges keep the first (atom, outcome) as `atom` and
    `outcome` and every occurrence between the two markings under `steps`.
    """
    negotiation = arena.negotiation
    codec = packed(negotiation)
    table = attractor.strategy1 if player == 1 else attractor.strategy2
    graph = nx.DiGraph()
    graph.add_node(codec.initial)
    queue = deque([codec.initial])
    while queue:
        bits = queue.popleft()
        for atom in codec.enabled(bits):
            if atom in table:
                outcomes = [table[atom]]
            else:
                outcomes = range(len(negotiation.atoms[atom].outcomes))
            for outcome in outcomes:
                successor = codec.fire(bits, atom, outcome)
                if successor not in graph:
                    if graph.number_of_nodes() >= max_markings:
                        raise ResourceLimitError("strategy exploration", max_markings)
                    graph.add_node(successor)
                    queue.append(successor)
                add_step_edge(graph, bits, successor, atom, outcome)
    return graph


def _steps(graph: nx.DiGraph, nodes: list[int]) -> list[OccurrenceStep]:
    return [
        OccurrenceStep(graph.edges[u, v]["atom"], graph.edges[u, v]["outcome"])
        for u, v in zip(nodes, nodes[1:])
    ]


def _prefix(arena: Arena, graph: nx.DiGraph, start: int, end: int) -> str:
    steps = _steps(graph, nx.shortest_path(graph, start, end))
    return " ".join(arena.negotiation.step_label(s.atom, s.outcome) for s in steps) or "<x0>"


def validate_strategies(
    arena: Arena, attractor: AttractorResult, max_markings: int = DEFAULT_MAX_MARKINGS
) -> ValidationReport:
    """Replays the winner's strategy over every Scheduler and opponent behavior.

    When n0 is in the attractor, every play under strategy1 must end in the
    final marking and position vectors must strictly decrease at every
    step. Otherwise no play under strategy2 may reach the final marking.
    """
    negotiation = arena.negotiation
    codec = packed(negotiation)
    start = codec.initial
    violations = []

    if negotiation.initial in attractor.member:
        graph = strategy_graph(arena, attractor, 1, max_markings)
        for bits in graph.nodes:
            if bits and graph.out_degree(bits) == 0:
                prefix = _prefix(arena, graph, start, bits)
                violations.append(Violation("strategy1", f"deadlock after {prefix}"))
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph, source=start)
            prefix = _prefix(arena, graph, start, cycle[0][0])
            violations.append(Violation("strategy1", f"cycle reachable after {prefix}"))
        for source, target, data in graph.edges(data=True):
            if target == 0 or data["atom"] in attractor.seed:
                continue
            before = position_vector(arena, attractor, codec.unpack(source))
            after = position_vector(arena, attractor, codec.unpack(target))
            if not after.precedes(before):
                prefix = _prefix(arena, graph, start, source)
                step = negotiation.step_label(data["atom"], data["outcome"])
                violations.append(
                    Violation(
                        "position",
                        f"step {step} after {prefix} moves {before.positions} to {after.positions}",
                    )
                )
    else:
        graph = strategy_graph(arena, attractor, 2, max_markings)
        if 0 in graph:
            violations.append(
                Violation("strategy2", f"play terminates: {_prefix(arena, graph, start, 0)}")
            )
    return ValidationReport(tuple(violations))


def longest_winning_play(arena: Arena, attractor: AttractorResult) -> int:
    """Length of the longest play under strategy1; the graph must be acyclic."""
    return nx.dag_longest_path_length(strategy_graph(arena, attractor, 1))


def play_out(arena: Arena, attractor: AttractorResult, max_steps: int | None = None) -> Witness:
    """Canonical play: the smallest enabled atom fires with its owner's table outcome."""
    return play_tables(arena, {**attractor.strategy1, **attractor.strategy2}, max_steps)


def play_tables(
    arena: Arena, table: Mapping[int, int], max_steps: int | None = None
) -> Witness:
    negotiation = arena.negotiation
    codec = packed(negotiation)
    limit = max_steps if max_steps is not None else DEFAULT_MAX_MARKINGS
    visited: dict[int, int] = {}
    nodes: list[int] = []
    rounds: list[tuple[OccurrenceStep, ...]] = []
    bits = codec.initial
    while True:
        nodes.append(bits)
        enabled = codec.enabled(bits)
        if bits == 0:
            return Witness("finite", tuple(nodes), tuple(rounds))
        if not enabled:
            return Witness("deadlock", tuple(nodes), tuple(rounds))
        if bits in visited:
            return Witness("lasso", tuple(nodes), tuple(rounds), loop_start=visited[bits])
        if len(rounds) >= limit:
            raise ResourceLimitError("play length", limit)
        visited[bits] = len(rounds)
        atom = enabled[0]
        outcome = table.get(atom, 0)
        rounds.append((OccurrenceStep(atom, outcome),))
        bits = codec.fire(bits, atom, outcome)


def result_payload(
    arena: Arena,
    result: AttractorResult,
    player1_wins: bool,
    witness: Witness,
    mode: str = "termination",
) -> dict:
    """Machine-readable view of an attractor verdict; names instead of indices."""
    negotiation = arena.negotiation

    def table(strategy: Mapping[int, int]) -> dict[str, str]:
        return {
            negotiation.atoms[n].name: negotiation.atoms[n].outcomes[r].name
            for n, r in sorted(strategy.items())
        }

    return {
        "solver": "attractor",
        "mode": mode,
        "winner": 1 if player1_wins else 2,
        "attractorIndices": {negotiation.atoms[n].name: k for n, k in enumerate(result.index)},
        "strategy": {"player1": table(result.strategy1), "player2": table(result.strategy2)},
        "witness": {
            "kind": witness.kind,
            "play": format_play(negotiation, witness),
            "loopStart": witness.loop_start,
        },
    }


def tables_from_payload(arena: Arena, payload: Mapping) -> dict[int, int]:
    """Merged atom -> outcome table of both players from a stored result."""
    negotiation = arena.negotiation
    table = {}
    for player in ("player1", "player2"):
        for atom_name, outcome_name in payload["strategy"][player].items():
            atom = negotiation.atom_index(atom_name)
            table[atom] = negotiation.outcome_index(atom, outcome_name)
    return table
