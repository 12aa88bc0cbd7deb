"""Explicit game graph solver for arbitrary arenas.

Scheduler nodes are reachable markings (plus goal flags in the concluding
outcome game). At each of them Scheduler picks a nonempty independent set S
of enabled atoms, which leads to a choice node (x, S). There both players
pick outcomes for their atoms of S at the same time, and the combined
occurrence leads to the next scheduler node.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum

import networkx as nx

from src.errors import PreconditionError, ResourceLimitError
from src.negotiation import (
    Arena,
    Marking,
    Negotiation,
    ValidationReport,
    Violation,
    enumerate_independent_sets,
)
from src.semantics import DEFAULT_MAX_MARKINGS, OccurrenceStep, packed

logger = logging.getLogger(__name__)

DEFAULT_MAX_MOVES = 10**6


class GameMode(str, Enum):
    TERMINATION = "termination"
    CONCLUDING_OUTCOME = "concluding-outcome"


class NodeStatus(str, Enum):
    TARGET = "target"
    FINAL = "final"
    DEADLOCK = "deadlock"
    LIVE = "live"


@dataclass
class SchedulerNode:
    bits: int
    flags: int
    status: NodeStatus = NodeStatus.LIVE
    choices: tuple[int, ...] = ()


@dataclass
class ChoiceNode:
    """A scheduler choice S at a marking with the outcome matrix of both players."""

    scheduler: int
    atoms: tuple[int, ...]
    player1_atoms: tuple[int, ...]
    player2_atoms: tuple[int, ...]
    player1_moves: tuple[tuple[int, ...], ...]
    player2_moves: tuple[tuple[int, ...], ...]
    successors: tuple[tuple[int, ...], ...] = ()

    def steps(self, move1: int, move2: int) -> tuple[OccurrenceStep, ...]:
        chosen = dict(zip(self.player1_atoms, self.player1_moves[move1]))
        chosen.update(zip(self.player2_atoms, self.player2_moves[move2]))
        return tuple(OccurrenceStep(atom, chosen[atom]) for atom in self.atoms)


@dataclass
class MarkingGraph:
    arena: Arena
    mode: GameMode
    schedulers: list[SchedulerNode] = field(default_factory=list)
    choices: list[ChoiceNode] = field(default_factory=list)
    constrained_mask: int = 0

    def marking(self, node: int) -> Marking:
        return packed(self.arena.negotiation).unpack(self.schedulers[node].bits)

    @property
    def targets(self) -> list[int]:
        return [i for i, node in enumerate(self.schedulers) if node.status is NodeStatus.TARGET]

    def describe_choice(self, choice: int) -> str:
        node = self.choices[choice]
        names = ",".join(self.arena.negotiation.atoms[n].name for n in node.atoms)
        return f"x{node.scheduler}/{{{names}}}"


class _FlagUpdater:
    """Goal flag bookkeeping for constrained agents."""

    def __init__(self, arena: Arena):
        negotiation = arena.negotiation
        goals = arena.goals or {}
        self.constrained_mask = 0
        for agent in goals:
            self.constrained_mask |= 1 << agent
        self.clear: list[int] = []
        self.good: list[list[int]] = []
        for atom in negotiation.atoms:
            clear = 0
            good = [0] * len(atom.outcomes)
            if atom.index != negotiation.final:
                for agent in atom.parties:
                    if agent not in goals:
                        continue
                    clear |= 1 << agent
                    for outcome in atom.outcomes:
                        if (atom.index, outcome.index) in goals[agent]:
                            good[outcome.index] |= 1 << agent
            self.clear.append(clear)
            self.good.append(good)

    def update(self, flags: int, atom: int, outcome: int) -> int:
        return (flags & ~self.clear[atom]) | self.good[atom][outcome]


def build_game_graph(
    arena: Arena,
    mode: GameMode = GameMode.TERMINATION,
    max_markings: int = DEFAULT_MAX_MARKINGS,
    max_moves: int = DEFAULT_MAX_MOVES,
) -> MarkingGraph:
    """Explores the game graph from x0.

    Args:
        arena: The arena to play on.
        mode: Termination, or concluding outcome (requires goals).
        max_markings: Cap on scheduler nodes.
        max_moves: Cap on outcome combinations of a single choice node.

    Raises:
        PreconditionError: Concluding outcome mode without goals.
        ResourceLimitError: A cap was exceeded.
    """
    if mode is GameMode.CONCLUDING_OUTCOME and arena.goals is None:
        raise PreconditionError("the concluding outcome game needs goal declarations")
    negotiation = arena.negotiation
    codec = packed(negotiation)
    flags = _FlagUpdater(arena) if mode is GameMode.CONCLUDING_OUTCOME else None
    constrained = flags.constrained_mask if flags else 0

    graph = MarkingGraph(arena=arena, mode=mode, constrained_mask=constrained)
    index: dict[tuple[int, int], int] = {}

    def node_for(bits: int, goal_flags: int) -> int:
        key = (bits, goal_flags)
        if key not in index:
            if len(graph.schedulers) >= max_markings:
                raise ResourceLimitError("game graph exploration", max_markings)
            index[key] = len(graph.schedulers)
            graph.schedulers.append(SchedulerNode(bits, goal_flags))
            queue.append(index[key])
        return index[key]

    queue: deque[int] = deque()
    node_for(codec.initial, constrained)
    while queue:
        current = queue.popleft()
        node = graph.schedulers[current]
        enabled = codec.enabled(node.bits)
        if node.bits == 0:
            node.status = NodeStatus.TARGET if node.flags == constrained else NodeStatus.FINAL
            continue
        if not enabled:
            node.status = NodeStatus.DEADLOCK
            continue

        choice_ids = []
        for independent in enumerate_independent_sets(negotiation, enabled):
            atoms = independent.atoms
            p1 = tuple(n for n in atoms if n in arena.player1)
            p2 = tuple(n for n in atoms if n not in arena.player1)
            size = 1
            for n in atoms:
                size *= len(negotiation.atoms[n].outcomes)
            if size > max_moves:
                raise ResourceLimitError("outcome combinations of a choice node", max_moves)

            def moves(owned: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
                ranges = [range(len(negotiation.atoms[n].outcomes)) for n in owned]
                return tuple(itertools.product(*ranges))

            choice = ChoiceNode(current, atoms, p1, p2, moves(p1), moves(p2))
            rows = []
            for move1 in range(len(choice.player1_moves)):
                row = []
                for move2 in range(len(choice.player2_moves)):
                    bits, goal_flags = node.bits, node.flags
                    for step in choice.steps(move1, move2):
                        bits = codec.fire(bits, step.atom, step.outcome)
                        if flags is not None:
                            goal_flags = flags.update(goal_flags, step.atom, step.outcome)
                    row.append(node_for(bits, goal_flags))
                rows.append(tuple(row))
            choice.successors = tuple(rows)
            choice_ids.append(len(graph.choices))
            graph.choices.append(choice)
        node.choices = tuple(choice_ids)

    logger.debug(
        "game graph of '%s' (%s): %d scheduler nodes, %d choice nodes",
        negotiation.name,
        mode.value,
        len(graph.schedulers),
        len(graph.choices),
    )
    return graph


@dataclass(frozen=True)
class Witness:
    """A canonical play: finite, ending in a deadlock, or a lasso."""

    kind: str
    nodes: tuple[int, ...]
    rounds: tuple[tuple[OccurrenceStep, ...], ...]
    loop_start: int | None = None


@dataclass(frozen=True)
class GameResult:
    """Verdict and positional strategies over the nodes of a game graph.

    strategy1 maps winning choice nodes, and strategy2 losing choice nodes,
    to a move index into the node's player1_moves / player2_moves. scheduler
    maps scheduler nodes to the choice node the canonical play takes.
    """

    player1_wins: bool
    winning_nodes: frozenset[int]
    winning_choices: frozenset[int]
    strategy1: Mapping[int, int]
    strategy2: Mapping[int, int]
    scheduler: Mapping[int, int]
    friendly_scheduler: bool = False
    witness: Witness | None = None


def _choice_winning_row(graph: MarkingGraph, choice: int, won: list) -> int | None:
    for move1, row in enumerate(graph.choices[choice].successors):
        if all(won[target] is not None for target in row):
            return move1
    return None


def solve_game(graph: MarkingGraph, friendly_scheduler: bool = False) -> GameResult:
    """Computes Player 1's sure-winning region by backward induction.

    A choice node wins when one row of its outcome matrix leads only to
    winning scheduler nodes. A scheduler node wins when it is a target, or
    when it has a choice and every choice wins (some choice, with a friendly
    Scheduler). Nodes are numbered in the order they join the region and
    strategy1 only points to earlier nodes, so it makes progress.
    """
    schedulers, choices = graph.schedulers, graph.choices
    won_scheduler: list[int | None] = [None] * len(schedulers)
    won_choice: list[int | None] = [None] * len(choices)
    pending = [len(node.choices) for node in schedulers]
    predecessors: list[set[int]] = [set() for _ in schedulers]
    for choice_id, choice in enumerate(choices):
        for row in choice.successors:
            for target in row:
                predecessors[target].add(choice_id)

    strategy1: dict[int, int] = {}
    scheduler: dict[int, int] = {}
    order = itertools.count()
    queue: deque[tuple[str, int]] = deque()

    def win_scheduler(node: int, via: int | None) -> None:
        won_scheduler[node] = next(order)
        if via is not None:
            scheduler[node] = via
        queue.append(("scheduler", node))

    for node in graph.targets:
        win_scheduler(node, None)

    while queue:
        kind, node = queue.popleft()
        if kind == "scheduler":
            for choice_id in sorted(predecessors[node]):
                if won_choice[choice_id] is not None:
                    continue
                move1 = _choice_winning_row(graph, choice_id, won_scheduler)
                if move1 is not None:
                    won_choice[choice_id] = next(order)
                    strategy1[choice_id] = move1
                    queue.append(("choice", choice_id))
        else:
            owner = choices[node].scheduler
            if won_scheduler[owner] is not None:
                continue
            if friendly_scheduler:
                win_scheduler(owner, node)
            else:
                pending[owner] -= 1
                if pending[owner] == 0:
                    win_scheduler(owner, None)

    winning = frozenset(i for i, mark in enumerate(won_scheduler) if mark is not None)
    winning_choices = frozenset(i for i, mark in enumerate(won_choice) if mark is not None)

    strategy2: dict[int, int] = {}
    for choice_id, choice in enumerate(choices):
        if choice_id in winning_choices:
            continue
        best, best_count = 0, -1
        for move2 in range(len(choice.player2_moves)):
            count = sum(1 for row in choice.successors if row[move2] not in winning)
            if count > best_count:
                best, best_count = move2, count
        strategy2[choice_id] = best

    for node_id, node in enumerate(schedulers):
        if node_id in scheduler or not node.choices:
            continue
        if node_id in winning:
            scheduler[node_id] = node.choices[0]
        else:
            losing = [c for c in node.choices if c not in winning_choices]
            scheduler[node_id] = losing[0] if losing else node.choices[0]

    result = GameResult(
        player1_wins=0 in winning,
        winning_nodes=winning,
        winning_choices=winning_choices,
        strategy1=strategy1,
        strategy2=strategy2,
        scheduler=scheduler,
        friendly_scheduler=friendly_scheduler,
    )
    logger.debug("sure-winning region: %d of %d scheduler nodes", len(winning), len(schedulers))
    return replace(result, witness=play_out(graph, result))


def play_out(graph: MarkingGraph, result: GameResult) -> Witness:
    """Plays the canonical play from x0.

    Scheduler follows result.scheduler, each player its strategy table, and
    moves default to the first row or column where no table entry exists.
    """
    visited: dict[int, int] = {}
    nodes: list[int] = []
    rounds: list[tuple[OccurrenceStep, ...]] = []
    current = 0
    while True:
        node = graph.schedulers[current]
        nodes.append(current)
        if node.status is not NodeStatus.LIVE:
            kind = "finite" if node.status in (NodeStatus.TARGET, NodeStatus.FINAL) else "deadlock"
            return Witness(kind, tuple(nodes), tuple(rounds))
        if current in visited:
            return Witness("lasso", tuple(nodes), tuple(rounds), loop_start=visited[current])
        visited[current] = len(rounds)
        choice_id = result.scheduler.get(current, node.choices[0])
        choice = graph.choices[choice_id]
        move1 = result.strategy1.get(choice_id, 0)
        move2 = result.strategy2.get(choice_id, 0)
        rounds.append(choice.steps(move1, move2))
        current = choice.successors[move1][move2]


def format_witness(graph: MarkingGraph, witness: Witness) -> str:
    return format_play(graph.arena.negotiation, witness)


def format_play(negotiation: Negotiation, witness: Witness) -> str:
    """Renders rounds as "(n,r)" labels; concurrent rounds in braces."""

    def render(steps: tuple[OccurrenceStep, ...]) -> str:
        labels = [negotiation.step_label(s.atom, s.outcome) for s in steps]
        return labels[0] if len(labels) == 1 else "{" + ",".join(labels) + "}"

    parts = [render(steps) for steps in witness.rounds]
    if witness.kind == "lasso":
        prefix, loop = parts[: witness.loop_start], parts[witness.loop_start :]
        return " ".join(prefix + ["loop:"] + loop)
    if witness.kind == "deadlock":
        return " ".join(parts + ["deadlock"])
    return " ".join(parts)


def _restricted_graph(graph: MarkingGraph, result: GameResult, player: int) -> nx.DiGraph:
    """Scheduler-node graph where `player` (and a friendly Scheduler) follow their strategy."""
    restricted = nx.DiGraph()
    restricted.add_nodes_from(range(len(graph.schedulers)))
    scheduler_sides_with = 1 if result.friendly_scheduler else 2
    for node_id, node in enumerate(graph.schedulers):
        region_matches = (node_id in result.winning_nodes) == (player == 1)
        if player == scheduler_sides_with and region_matches and node_id in result.scheduler:
            choice_ids = [result.scheduler[node_id]]
        else:
            choice_ids = list(node.choices)
        for choice_id in choice_ids:
            choice = graph.choices[choice_id]
            fixed1 = result.strategy1.get(choice_id) if player == 1 else None
            fixed2 = result.strategy2.get(choice_id) if player == 2 else None
            for move1, row in enumerate(choice.successors):
                if fixed1 is not None and move1 != fixed1:
                    continue
                for move2, target in enumerate(row):
                    if fixed2 is not None and move2 != fixed2:
                        continue
                    restricted.add_edge(node_id, target)
    return restricted


def verify_player1_strategy(graph: MarkingGraph, result: GameResult) -> ValidationReport:
    """Checks that every play under strategy1 reaches a target without cycling."""
    if not result.player1_wins:
        return ValidationReport((Violation("strategy1", "player 1 does not win from x0"),))
    restricted = _restricted_graph(graph, result, player=1)
    reachable = restricted.subgraph(nx.descendants(restricted, 0) | {0})
    violations = []
    for node in sorted(reachable.nodes):
        status = graph.schedulers[node].status
        if reachable.out_degree(node) == 0 and status is not NodeStatus.TARGET:
            marking = graph.arena.negotiation.format_marking(graph.marking(node))
            violations.append(
                Violation("strategy1", f"play under strategy1 stops at x{node} {marking}")
            )
    if not nx.is_directed_acyclic_graph(reachable):
        cycle = [u for u, _ in nx.find_cycle(reachable, source=0)]
        nodes = ", ".join(f"x{n}" for n in cycle)
        violations.append(Violation("strategy1", f"play under strategy1 can cycle through {nodes}"))
    return ValidationReport(tuple(violations))


def verify_player2_strategy(graph: MarkingGraph, result: GameResult) -> ValidationReport:
    """Checks that no Player 1 behavior reaches a target against strategy2."""
    if result.player1_wins:
        return ValidationReport((Violation("strategy2", "player 1 wins from x0"),))
    restricted = _restricted_graph(graph, result, player=2)
    reachable = nx.descendants(restricted, 0) | {0}
    violations = [
        Violation("strategy2", f"target x{node} is reachable against strategy2")
        for node in sorted(reachable)
        if graph.schedulers[node].status is NodeStatus.TARGET
    ]
    return ValidationReport(tuple(violations))


def solve_general(
    arena: Arena,
    mode: GameMode = GameMode.TERMINATION,
    max_markings: int = DEFAULT_MAX_MARKINGS,
    max_moves: int = DEFAULT_MAX_MOVES,
    friendly_scheduler: bool = False,
) -> tuple[MarkingGraph, GameResult]:
    graph = build_game_graph(arena, mode, max_markings, max_moves)
    return graph, solve_game(graph, friendly_scheduler)


def result_payload(graph: MarkingGraph, result: GameResult) -> dict:
    """Machine-readable view of a game result, keyed by node ids."""
    negotiation = graph.arena.negotiation

    def assignment(atoms: tuple[int, ...], outcomes: tuple[int, ...]) -> dict[str, str]:
        return {
            negotiation.atoms[n].name: negotiation.atoms[n].outcomes[r].name
            for n, r in zip(atoms, outcomes)
        }

    strategy1 = {
        graph.describe_choice(c): assignment(
            graph.choices[c].player1_atoms, graph.choices[c].player1_moves[m]
        )
        for c, m in sorted(result.strategy1.items())
        if graph.choices[c].player1_atoms
    }
    strategy2 = {
        graph.describe_choice(c): assignment(
            graph.choices[c].player2_atoms, graph.choices[c].player2_moves[m]
        )
        for c, m in sorted(result.strategy2.items())
        if graph.choices[c].player2_atoms
    }
    payload = {
        "solver": "general",
        "mode": graph.mode.value,
        "winner": 1 if result.player1_wins else 2,
        "friendlyScheduler": result.friendly_scheduler,
        "schedulerNodes": len(graph.schedulers),
        "choiceNodes": len(graph.choices),
        "winningNodes": sorted(result.winning_nodes),
        "strategy": {"player1": strategy1, "player2": strategy2},
        "scheduler": {
            f"x{node}": graph.describe_choice(c) for node, c in sorted(result.scheduler.items())
        },
    }
    if result.witness is not None:
        payload["witness"] = {
            "kind": result.witness.kind,
            "play": format_witness(graph, result.witness),
            "loopStart": result.witness.loop_start,
        }
    return payload


def result_from_payload(graph: MarkingGraph, payload: Mapping) -> GameResult:
    """Rebuilds the strategy tables of a stored result against a rebuilt graph."""
    negotiation = graph.arena.negotiation
    by_description = {graph.describe_choice(c): c for c in range(len(graph.choices))}

    def move_index(atoms: tuple[int, ...], moves: tuple, table: Mapping[str, str]) -> int:
        wanted = tuple(
            negotiation.outcome_index(n, table[negotiation.atoms[n].name]) for n in atoms
        )
        return moves.index(wanted)

    strategy1, strategy2 = {}, {}
    for description, table in payload["strategy"]["player1"].items():
        choice = graph.choices[by_description[description]]
        strategy1[by_description[description]] = move_index(
            choice.player1_atoms, choice.player1_moves, table
        )
    for description, table in payload["strategy"]["player2"].items():
        choice = graph.choices[by_description[description]]
        strategy2[by_description[description]] = move_index(
            choice.player2_atoms, choice.player2_moves, table
        )
    scheduler = {
        int(node[1:]): by_description[description]
        for node, description in payload.get("scheduler", {}).items()
    }
    return GameResult(
        player1_wins=payload["winner"] == 1,
        winning_nodes=frozenset(payload.get("winningNodes", ())),
        winning_choices=frozenset(),
        strategy1=strategy1,
        strategy2=strategy2,
        scheduler=scheduler,
        friendly_scheduler=bool(payload.get("friendlyScheduler", False)),
    )
