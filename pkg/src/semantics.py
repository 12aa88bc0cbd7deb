"""Execution semantics: enabledness, occurrence, exploration and soundness."""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import networkx as nx

from src.errors import PreconditionError, ResourceLimitError
from src.negotiation import Marking, Negotiation, is_independent

logger = logging.getLogger(__name__)

DEFAULT_MAX_MARKINGS = 10**7


@dataclass(frozen=True)
class OccurrenceStep:
    """The occurrence of an atom with one of its outcomes."""

    atom: int
    outcome: int


class PackedNegotiation:
    """Bit masks for firing atoms on packed markings.

    A marking is packed into one integer: agent a owns the bits
    [a * width, (a + 1) * width), one bit per atom it is ready for.
    """

    def __init__(self, negotiation: Negotiation):
        self.negotiation = negotiation
        self.width = width = len(negotiation.atoms)
        agent_field = (1 << width) - 1

        self.enable_masks: list[int] = []
        self.party_fields: list[int] = []
        self.post_masks: list[list[int]] = []
        for atom in negotiation.atoms:
            enable = fields = 0
            for agent in atom.parties:
                enable |= 1 << (agent * width + atom.index)
                fields |= agent_field << (agent * width)
            self.enable_masks.append(enable)
            self.party_fields.append(fields)
            posts = []
            for outcome in atom.outcomes:
                post = 0
                for agent in atom.parties:
                    for target in negotiation.successors(atom.index, agent, outcome.index):
                        post |= 1 << (agent * width + target)
                posts.append(post)
            self.post_masks.append(posts)

        self.initial = 0
        for agent in negotiation.agents:
            self.initial |= 1 << (agent.index * width + negotiation.initial)

    def enabled(self, bits: int) -> list[int]:
        return [n for n, mask in enumerate(self.enable_masks) if bits & mask == mask]

    def is_enabled(self, bits: int, atom: int) -> bool:
        mask = self.enable_masks[atom]
        return bits & mask == mask

    def fire(self, bits: int, atom: int, outcome: int) -> int:
        return (bits & ~self.party_fields[atom]) | self.post_masks[atom][outcome]

    def pack(self, marking: Marking) -> int:
        bits = 0
        for agent, ready in enumerate(marking.ready):
            for atom in ready:
                bits |= 1 << (agent * self.width + atom)
        return bits

    def unpack(self, bits: int) -> Marking:
        ready = []
        for agent in range(len(self.negotiation.agents)):
            chunk = (bits >> (agent * self.width)) & ((1 << self.width) - 1)
            ready.append(frozenset(n for n in range(self.width) if chunk >> n & 1))
        return Marking(tuple(ready))


@lru_cache(maxsize=32)
def packed(negotiation: Negotiation) -> PackedNegotiation:
    return PackedNegotiation(negotiation)


def initial_marking(negotiation: Negotiation) -> Marking:
    return Marking(tuple(frozenset({negotiation.initial}) for _ in negotiation.agents))


def final_marking(negotiation: Negotiation) -> Marking:
    return Marking(tuple(frozenset() for _ in negotiation.agents))


def enabled_atoms(negotiation: Negotiation, marking: Marking) -> frozenset[int]:
    """Atoms n such that every party of n is ready for n."""
    return frozenset(
        atom.index
        for atom in negotiation.atoms
        if all(atom.index in marking.ready[a] for a in atom.parties)
    )


def _check_step(negotiation: Negotiation, marking: Marking, step: OccurrenceStep) -> None:
    if not 0 <= step.atom < len(negotiation.atoms):
        raise PreconditionError(f"unknown atom index {step.atom}")
    atom = negotiation.atoms[step.atom]
    if not 0 <= step.outcome < len(atom.outcomes):
        raise PreconditionError(f"atom '{atom.name}' has no outcome index {step.outcome}")
    for agent in atom.parties:
        if step.atom not in marking.ready[agent]:
            raise PreconditionError(
                f"atom '{atom.name}' is not enabled: party "
                f"'{negotiation.agents[agent].name}' is not ready for it"
            )


def occur(negotiation: Negotiation, marking: Marking, step: OccurrenceStep) -> Marking:
    """Fires one enabled atom; its parties move to transition(n, a, r)."""
    _check_step(negotiation, marking, step)
    ready = list(marking.ready)
    for agent in negotiation.atoms[step.atom].parties:
        ready[agent] = frozenset(negotiation.successors(step.atom, agent, step.outcome))
    return Marking(tuple(ready))


def occur_set(
    negotiation: Negotiation, marking: Marking, steps: Iterable[OccurrenceStep]
) -> Marking:
    """Fires an independent set of enabled atoms, one outcome per atom."""
    steps = list(steps)
    atoms = [step.atom for step in steps]
    if len(set(atoms)) != len(atoms):
        raise PreconditionError("an atom occurs twice in the set")
    if not is_independent(negotiation, atoms):
        names = ", ".join(negotiation.atoms[n].name for n in atoms)
        raise PreconditionError(f"atoms {{{names}}} are not independent")
    for step in steps:
        _check_step(negotiation, marking, step)
    ready = list(marking.ready)
    for step in steps:
        for agent in negotiation.atoms[step.atom].parties:
            ready[agent] = frozenset(negotiation.successors(step.atom, agent, step.outcome))
    return Marking(tuple(ready))


def run_sequence(
    negotiation: Negotiation, steps: Sequence[OccurrenceStep], start: Marking | None = None
) -> list[Marking]:
    """Replays an occurrence sequence, returning every visited marking."""
    markings = [start or initial_marking(negotiation)]
    for step in steps:
        markings.append(occur(negotiation, markings[-1], step))
    return markings


def add_step_edge(graph: nx.DiGraph, source: int, target: int, atom: int, outcome: int) -> None:
    """Adds one occurrence to the edge source -> target, keeping every step on it."""
    if graph.has_edge(source, target):
        graph.edges[source, target]["steps"].append(OccurrenceStep(atom, outcome))
    else:
        graph.add_edge(
            source, target, atom=atom, outcome=outcome, steps=[OccurrenceStep(atom, outcome)]
        )


class MarkingStatus(str, Enum):
    FINAL = "final"
    DEADLOCK = "deadlock"
    LIVE = "live"


@dataclass(frozen=True)
class MarkingGraphRaw:
    """All reachable markings in breadth-first order; node 0 is x0."""

    negotiation: Negotiation
    markings: tuple[int, ...]
    enabled: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[tuple[int, int, int], ...], ...]
    status: tuple[MarkingStatus, ...]

    def __len__(self) -> int:
        return len(self.markings)

    def marking(self, node: int) -> Marking:
        return packed(self.negotiation).unpack(self.markings[node])

    @property
    def final_node(self) -> int | None:
        for node, status in enumerate(self.status):
            if status is MarkingStatus.FINAL:
                return node
        return None

    @property
    def deadlocks(self) -> list[int]:
        return [n for n, status in enumerate(self.status) if status is MarkingStatus.DEADLOCK]

    def to_networkx(self) -> nx.DiGraph:
        """Directed graph of markings.

        Edge attributes `atom` and `outcome` hold the first step from u to v;
        `steps` lists every (atom, outcome) pair leading from u to v.
        """
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.markings)))
        for source, out in enumerate(self.edges):
            for atom, outcome, target in out:
                add_step_edge(graph, source, target, atom, outcome)
        return graph

    def path_steps(self, graph: nx.DiGraph, nodes: Sequence[int]) -> tuple[OccurrenceStep, ...]:
        return tuple(
            OccurrenceStep(graph.edges[u, v]["atom"], graph.edges[u, v]["outcome"])
            for u, v in zip(nodes, nodes[1:])
        )


def explore_markings(
    negotiation: Negotiation, max_markings: int = DEFAULT_MAX_MARKINGS
) -> MarkingGraphRaw:
    """Breadth-first closure of x0 under single-atom occurrences."""
    codec = packed(negotiation)
    index = {codec.initial: 0}
    markings = [codec.initial]
    enabled_per_node: list[tuple[int, ...]] = []
    edges: list[tuple[tuple[int, int, int], ...]] = []
    status: list[MarkingStatus] = []

    queue = deque([codec.initial])
    while queue:
        bits = queue.popleft()
        enabled = codec.enabled(bits)
        out = []
        for atom in enabled:
            for outcome in range(len(negotiation.atoms[atom].outcomes)):
                successor = codec.fire(bits, atom, outcome)
                if successor not in index:
                    if len(markings) >= max_markings:
                        raise ResourceLimitError("marking exploration", max_markings)
                    index[successor] = len(markings)
                    markings.append(successor)
                    queue.append(successor)
                out.append((atom, outcome, index[successor]))
        enabled_per_node.append(tuple(enabled))
        edges.append(tuple(out))
        if bits == 0:
            status.append(MarkingStatus.FINAL)
        elif not enabled:
            status.append(MarkingStatus.DEADLOCK)
        else:
            status.append(MarkingStatus.LIVE)

    logger.debug("explored %d markings of '%s'", len(markings), negotiation.name)
    return MarkingGraphRaw(
        negotiation=negotiation,
        markings=tuple(markings),
        enabled=tuple(enabled_per_node),
        edges=tuple(edges),
        status=tuple(status),
    )


@dataclass(frozen=True)
class SoundnessReport:
    """Result of a soundness check; witnesses are shortest paths from x0."""

    sound: bool
    unreachable_atoms: frozenset[int]
    deadlock_witness: tuple[OccurrenceStep, ...] | None
    non_terminating_witness: Marking | None
    non_terminating_path: tuple[OccurrenceStep, ...] | None = None

    def describe(self, negotiation: Negotiation) -> str:
        if self.sound:
            return "sound"
        lines = ["unsound"]
        if self.unreachable_atoms:
            names = ", ".join(negotiation.atoms[n].name for n in sorted(self.unreachable_atoms))
            lines.append(f"  never enabled: {names}")
        if self.deadlock_witness is not None:
            lines.append(f"  deadlock after: {format_steps(negotiation, self.deadlock_witness)}")
        if self.non_terminating_witness is not None:
            lines.append(
                "  cannot terminate from: "
                f"{negotiation.format_marking(self.non_terminating_witness)}"
            )
        return "\n".join(lines)


def format_steps(negotiation: Negotiation, steps: Iterable[OccurrenceStep]) -> str:
    return " ".join(negotiation.step_label(s.atom, s.outcome) for s in steps)


def check_soundness(
    negotiation: Negotiation,
    max_markings: int = DEFAULT_MAX_MARKINGS,
    graph: MarkingGraphRaw | None = None,
) -> SoundnessReport:
    """Checks that every atom can occur and x_f stays reachable everywhere."""
    graph = graph or explore_markings(negotiation, max_markings)
    enabled_somewhere = set()
    for enabled in graph.enabled:
        enabled_somewhere.update(enabled)
    unreachable = frozenset(range(len(negotiation.atoms))) - enabled_somewhere

    digraph = graph.to_networkx()
    final = graph.final_node
    can_finish = set() if final is None else nx.ancestors(digraph, final) | {final}

    deadlock_witness = None
    if graph.deadlocks:
        nodes = nx.shortest_path(digraph, 0, graph.deadlocks[0])
        deadlock_witness = graph.path_steps(digraph, nodes)

    stuck = [
        node
        for node, status in enumerate(graph.status)
        if status is MarkingStatus.LIVE and node not in can_finish
    ]
    non_terminating = non_terminating_path = None
    if stuck:
        non_terminating = graph.marking(stuck[0])
        non_terminating_path = graph.path_steps(digraph, nx.shortest_path(digraph, 0, stuck[0]))

    sound = not unreachable and deadlock_witness is None and non_terminating is None
    logger.debug("soundness of '%s': %s", negotiation.name, sound)
    return SoundnessReport(
        sound=sound,
        unreachable_atoms=unreachable,
        deadlock_witness=deadlock_witness,
        non_terminating_witness=non_terminating,
        non_terminating_path=non_terminating_path,
    )


@dataclass(frozen=True)
class Classification:
    """Determinism classes of a negotiation."""

    deterministic_agents: frozenset[int]
    deterministic: bool
    weakly_deterministic: bool
    weakly_deterministic_type2: bool


def deterministic_agents(negotiation: Negotiation) -> frozenset[int]:
    """Agents sent to exactly one atom by every non-final outcome."""
    nondeterministic = {
        a
        for n, a, r in negotiation.triples()
        if n != negotiation.final and len(negotiation.successors(n, a, r)) != 1
    }
    return frozenset(range(len(negotiation.agents))) - nondeterministic


def classify(negotiation: Negotiation) -> Classification:
    det = deterministic_agents(negotiation)
    det_mask = 0
    for agent in det:
        det_mask |= 1 << agent
    masks = negotiation.party_masks

    weakly = True
    for n, a, r in negotiation.triples():
        if n == negotiation.final or a in det:
            continue
        common = det_mask
        for target in negotiation.successors(n, a, r):
            common &= masks[target]
        if not common:
            weakly = False
            break

    type2 = all(masks[atom.index] & det_mask for atom in negotiation.atoms)
    return Classification(
        deterministic_agents=det,
        deterministic=len(det) == len(negotiation.agents),
        weakly_deterministic=weakly,
        weakly_deterministic_type2=type2,
    )
