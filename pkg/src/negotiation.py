"""Domain types for negotiations, markings and arenas.

Atoms, agents and outcomes get dense integer indices when a negotiation is
built; every set used by the solvers is index based and names are only kept
for input and output. All types are immutable once constructed.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property

from src.errors import SemanticError, ValidationError

Triple = tuple[int, int, int]
GoalPair = tuple[int, int]


@dataclass(frozen=True)
class AgentId:
    """An agent of a negotiation."""

    name: str
    index: int


@dataclass(frozen=True)
class OutcomeId:
    """An outcome of an atom; the index is dense within the atom."""

    name: str
    index: int


@dataclass(frozen=True)
class Atom:
    """An atomic negotiation: a nonempty set of parties and outcomes."""

    name: str
    index: int
    parties: tuple[int, ...]
    outcomes: tuple[OutcomeId, ...]

    def outcome_index(self, name: str) -> int:
        for outcome in self.outcomes:
            if outcome.name == name:
                return outcome.index
        raise SemanticError(f"atom '{self.name}' has no outcome '{name}'")


@dataclass(frozen=True)
class IndependentSet:
    """Atoms whose parties are pairwise disjoint."""

    atoms: tuple[int, ...]


@dataclass(frozen=True)
class Violation:
    """One violated invariant, tagged with the rule it breaks."""

    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a validation pass; an empty report means valid."""

    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"[{v.rule}] {v.message}" for v in self.violations)


@dataclass(frozen=True)
class Negotiation:
    """A negotiation N = (atoms, n0, nf, transition).

    `transition` maps every triple (atom, party, outcome) of T(N) to the sorted
    tuple of atom indices the party is ready for after that outcome.
    """

    name: str
    agents: tuple[AgentId, ...]
    atoms: tuple[Atom, ...]
    initial: int
    final: int
    transition: Mapping[Triple, tuple[int, ...]] = field(hash=False)

    @cached_property
    def _agent_by_name(self) -> dict[str, int]:
        return {agent.name: agent.index for agent in self.agents}

    @cached_property
    def _atom_by_name(self) -> dict[str, int]:
        return {atom.name: atom.index for atom in self.atoms}

    @cached_property
    def party_masks(self) -> tuple[int, ...]:
        """Per atom, the bitmask over agent indices of its parties."""
        masks = []
        for atom in self.atoms:
            mask = 0
            for agent in atom.parties:
                mask |= 1 << agent
            masks.append(mask)
        return tuple(masks)

    @property
    def outcome_count(self) -> int:
        return sum(len(atom.outcomes) for atom in self.atoms)

    def agent_index(self, name: str) -> int:
        try:
            return self._agent_by_name[name]
        except KeyError:
            raise SemanticError(f"undeclared agent '{name}'") from None

    def atom_index(self, name: str) -> int:
        try:
            return self._atom_by_name[name]
        except KeyError:
            raise SemanticError(f"undeclared atom '{name}'") from None

    def outcome_index(self, atom: int, name: str) -> int:
        return self.atoms[atom].outcome_index(name)

    def successors(self, atom: int, agent: int, outcome: int) -> tuple[int, ...]:
        return self.transition.get((atom, agent, outcome), ())

    def triples(self) -> Iterator[Triple]:
        """Iterates T(N) ordered by (atom, agent, outcome) indices."""
        for atom in self.atoms:
            for agent in atom.parties:
                for outcome in atom.outcomes:
                    yield atom.index, agent, outcome.index

    def step_label(self, atom: int, outcome: int) -> str:
        return f"({self.atoms[atom].name},{self.atoms[atom].outcomes[outcome].name})"

    def format_marking(self, marking: Marking) -> str:
        parts = []
        for agent, ready in zip(self.agents, marking.ready):
            names = ",".join(self.atoms[n].name for n in sorted(ready))
            parts.append(f"{agent.name}->{{{names}}}")
        return "{" + ", ".join(parts) + "}"

    def to_builder(self) -> NegotiationBuilder:
        """Returns a mutable copy keyed by names, for constructions."""
        builder = NegotiationBuilder(self.name)
        for agent in self.agents:
            builder.add_agent(agent.name)
        for atom in self.atoms:
            builder.add_atom(
                atom.name,
                [self.agents[a].name for a in atom.parties],
                [o.name for o in atom.outcomes],
            )
        builder.initial = self.atoms[self.initial].name
        builder.final = self.atoms[self.final].name
        for (n, a, r), targets in self.transition.items():
            atom = self.atoms[n]
            builder.add_arc(
                atom.name,
                self.agents[a].name,
                atom.outcomes[r].name,
                [self.atoms[t].name for t in targets],
            )
        return builder


@dataclass(frozen=True)
class Marking:
    """Per agent, the set of atoms the agent is ready to engage in."""

    ready: tuple[frozenset[int], ...]

    @property
    def is_final(self) -> bool:
        return all(not atoms for atoms in self.ready)


@dataclass(frozen=True)
class Arena:
    """A negotiation whose atoms are split between Player 1 (N1) and Player 2.

    `goals` maps each constrained agent to its goal set G_a of (atom, outcome)
    pairs; unconstrained agents have no entry. `coalition` remembers the agent
    set a partition was derived from and is ignored by equality.
    """

    negotiation: Negotiation
    player1: frozenset[int] = frozenset()
    goals: Mapping[int, frozenset[GoalPair]] | None = field(default=None, hash=False)
    coalition: frozenset[int] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "player1", frozenset(self.player1))
        if self.goals is not None:
            frozen = {agent: frozenset(pairs) for agent, pairs in sorted(self.goals.items())}
            object.__setattr__(self, "goals", frozen or None)
        if self.coalition is not None:
            object.__setattr__(self, "coalition", frozenset(self.coalition))

    @property
    def player2(self) -> frozenset[int]:
        return frozenset(range(len(self.negotiation.atoms))) - self.player1

    def owner(self, atom: int) -> int:
        return 1 if atom in self.player1 else 2

    def with_partition(
        self, player1: Iterable[int], coalition: Iterable[int] | None = None
    ) -> Arena:
        return replace(
            self,
            player1=frozenset(player1),
            coalition=None if coalition is None else frozenset(coalition),
        )


class NegotiationBuilder:
    """Collects a negotiation by names and resolves it into indices."""

    def __init__(self, name: str):
        self.name = name
        self.agents: list[str] = []
        self.atoms: dict[str, tuple[list[str], list[str]]] = {}
        self.initial: str | None = None
        self.final: str | None = None
        self.arcs: dict[tuple[str, str, str], list[str]] = {}

    def add_agent(self, name: str) -> None:
        if name in self.agents:
            raise SemanticError(f"duplicate agent '{name}'")
        self.agents.append(name)

    def add_atom(
        self,
        name: str,
        parties: Sequence[str],
        outcomes: Sequence[str],
        role: str | None = None,
    ) -> None:
        if name in self.atoms:
            raise SemanticError(f"duplicate atom '{name}'")
        if not parties:
            raise SemanticError(f"atom '{name}' has no parties")
        if not outcomes:
            raise SemanticError(f"atom '{name}' has no outcomes")
        if len(set(parties)) != len(parties):
            raise SemanticError(f"atom '{name}' lists a party twice")
        if len(set(outcomes)) != len(outcomes):
            raise SemanticError(f"atom '{name}' lists an outcome twice")
        self.atoms[name] = (list(parties), list(outcomes))
        if role == "initial":
            if self.initial is not None:
                raise SemanticError(f"second initial atom '{name}'")
            self.initial = name
        elif role == "final":
            if self.final is not None:
                raise SemanticError(f"second final atom '{name}'")
            self.final = name

    def add_party(self, atom: str, agent: str) -> None:
        if atom not in self.atoms:
            raise SemanticError(f"undeclared atom '{atom}'")
        parties = self.atoms[atom][0]
        if agent in parties:
            raise SemanticError(f"agent '{agent}' is already a party of '{atom}'")
        parties.append(agent)

    def add_arc(
        self, atom: str, agent: str, outcome: str, targets: Sequence[str]
    ) -> None:
        key = (atom, agent, outcome)
        if key in self.arcs:
            raise SemanticError(f"duplicate arc for ({atom},{agent},{outcome})")
        if len(set(targets)) != len(targets):
            raise SemanticError(f"arc ({atom},{agent},{outcome}) repeats a target")
        self.arcs[key] = list(targets)

    def build(self) -> Negotiation:
        if self.initial is None:
            raise SemanticError("no initial atom declared")
        if self.final is None:
            raise SemanticError("no final atom declared")

        agent_index = {name: i for i, name in enumerate(self.agents)}
        atom_index = {name: i for i, name in enumerate(self.atoms)}

        def resolve(table: dict[str, int], kind: str, name: str) -> int:
            if name not in table:
                raise SemanticError(f"undeclared {kind} '{name}'")
            return table[name]

        atoms = []
        for name, (parties, outcomes) in self.atoms.items():
            atoms.append(
                Atom(
                    name=name,
                    index=atom_index[name],
                    parties=tuple(sorted(resolve(agent_index, "agent", p) for p in parties)),
                    outcomes=tuple(OutcomeId(o, i) for i, o in enumerate(outcomes)),
                )
            )

        transition: dict[Triple, tuple[int, ...]] = {}
        for (atom_name, agent_name, outcome_name), targets in self.arcs.items():
            n = resolve(atom_index, "atom", atom_name)
            a = resolve(agent_index, "agent", agent_name)
            if a not in atoms[n].parties:
                raise SemanticError(f"agent '{agent_name}' is not a party of '{atom_name}'")
            r = atoms[n].outcome_index(outcome_name)
            transition[(n, a, r)] = tuple(
                sorted(resolve(atom_index, "atom", t) for t in targets)
            )

        return Negotiation(
            name=self.name,
            agents=tuple(AgentId(name, i) for i, name in enumerate(self.agents)),
            atoms=tuple(atoms),
            initial=atom_index[self.initial],
            final=atom_index[self.final],
            transition=dict(sorted(transition.items())),
        )


def validate(negotiation: Negotiation) -> ValidationReport:
    """Lists every violated negotiation invariant."""
    violations = []
    initial = negotiation.atoms[negotiation.initial]
    final = negotiation.atoms[negotiation.final]
    if initial.index == final.index:
        violations.append(
            Violation("initial-final", f"atom '{initial.name}' is both initial and final")
        )
    for agent in negotiation.agents:
        for atom, role in ((initial, "initial"), (final, "final")):
            if agent.index not in atom.parties:
                violations.append(
                    Violation(
                        "participation",
                        f"agent '{agent.name}' does not participate in {role} atom '{atom.name}'",
                    )
                )
    for n, a, r in negotiation.triples():
        targets = negotiation.successors(n, a, r)
        label = (
            f"transition({negotiation.atoms[n].name},{negotiation.agents[a].name},"
            f"{negotiation.atoms[n].outcomes[r].name})"
        )
        if n == negotiation.final and targets:
            violations.append(Violation("final-empty", f"{label} must be empty on the final atom"))
        elif n != negotiation.final and not targets:
            violations.append(
                Violation("nonfinal-nonempty", f"{label} is empty but the atom is not final")
            )
    return ValidationReport(tuple(violations))


def validate_arena(arena: Arena) -> ValidationReport:
    """Validates the negotiation plus the partition and goal sets."""
    negotiation = arena.negotiation
    violations = list(validate(negotiation).violations)
    for atom in sorted(arena.player1):
        if not 0 <= atom < len(negotiation.atoms):
            violations.append(Violation("partition", f"player1 names unknown atom index {atom}"))
    for agent, pairs in (arena.goals or {}).items():
        name = negotiation.agents[agent].name
        for n, r in sorted(pairs):
            atom = negotiation.atoms[n]
            if agent not in atom.parties:
                violations.append(
                    Violation("goal", f"goal of '{name}' names atom '{atom.name}' without it")
                )
            elif negotiation.final not in negotiation.successors(n, agent, r):
                violations.append(
                    Violation(
                        "goal",
                        f"goal ({atom.name},{atom.outcomes[r].name}) of '{name}' "
                        "does not lead to the final atom",
                    )
                )
    return ValidationReport(tuple(violations))


def ensure_valid(arena: Arena) -> Arena:
    report = validate_arena(arena)
    if not report.ok:
        raise ValidationError(report)
    return arena


def is_independent(negotiation: Negotiation, atoms: Iterable[int]) -> bool:
    """True iff no two distinct atoms of the set share a party."""
    used = 0
    for atom in set(atoms):
        mask = negotiation.party_masks[atom]
        if used & mask:
            return False
        used |= mask
    return True


def enumerate_independent_sets(
    negotiation: Negotiation, enabled: Iterable[int]
) -> list[IndependentSet]:
    """All nonempty independent subsets, ordered by size then atom indices."""
    order = sorted(set(enabled))
    masks = negotiation.party_masks
    found: list[tuple[int, ...]] = []
    chosen: list[int] = []

    def extend(start: int, used: int) -> None:
        for i in range(start, len(order)):
            atom = order[i]
            if used & masks[atom]:
                continue
            chosen.append(atom)
            found.append(tuple(chosen))
            extend(i + 1, used | masks[atom])
            chosen.pop()

    extend(0, 0)
    found.sort(key=lambda atoms: (len(atoms), atoms))
    return [IndependentSet(atoms) for atoms in found]
