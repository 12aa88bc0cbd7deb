"""Game arenas: coalition majorities and the control retargeting gadget."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping

from src.errors import PreconditionError, SemanticError, UnsupportedError
from src.negotiation import Arena, GoalPair, Negotiation

logger = logging.getLogger(__name__)

CONTROL_AGENT_PREFIX = "_ctl"


def coalition_indices(negotiation: Negotiation, names: Iterable[str]) -> frozenset[int]:
    """Resolves agent names; raises SemanticError on unknown names."""
    return frozenset(negotiation.agent_index(name.strip()) for name in names if name.strip())


def controls(negotiation: Negotiation, coalition: frozenset[int], atom: int) -> bool:
    """True iff the coalition holds a strict majority of the parties of atom."""
    parties = negotiation.atoms[atom].parties
    inside = sum(1 for a in parties if a in coalition)
    return inside > len(parties) - inside


def partition_from_coalition(
    negotiation: Negotiation,
    coalition: Iterable[int],
    goals: Mapping[int, Iterable[GoalPair]] | None = None,
) -> Arena:
    """Builds the arena where Player 1 owns the atoms its coalition dominates.

    Ties go to Player 2.

    Args:
        negotiation: The underlying negotiation.
        coalition: Agent indices forming A1; the remaining agents form A2.
        goals: Optional goal sets per constrained agent.

    Returns:
        An arena whose N1 is the set of atoms with an A1 majority.
    """
    coalition = frozenset(coalition)
    for agent in coalition:
        if not 0 <= agent < len(negotiation.agents):
            raise SemanticError(f"coalition names unknown agent index {agent}")
    player1 = frozenset(
        atom.index for atom in negotiation.atoms if controls(negotiation, coalition, atom.index)
    )
    return Arena(negotiation, player1, goals, coalition)


def _fresh_names(negotiation: Negotiation, count: int, start: int = 0) -> list[str]:
    taken = {agent.name for agent in negotiation.agents}
    names = []
    k = start
    while len(names) < count:
        candidate = f"{CONTROL_AGENT_PREFIX}{k}"
        if candidate not in taken:
            names.append(candidate)
            taken.add(candidate)
        k += 1
    return names


def retarget_control(
    negotiation: Negotiation,
    coalition: Iterable[int],
    atom: int,
    preserve_determinism: bool = False,
) -> tuple[Negotiation, frozenset[int]]:
    """Adds nondeterministic agents so that the coalition controls `atom`.

    Each added coalition agent joins `atom`, n0 and nf, and is sent to
    {atom, nf} by every outcome of n0 and of `atom`. When the additions would
    flip the owner of n0 and nf, balancing agents join the opposition on n0
    and nf only, moving from n0 straight to nf.

    Args:
        negotiation: A sound, weakly deterministic negotiation.
        coalition: Agent indices of A1.
        atom: Index of the atom to hand over to the coalition.
        preserve_determinism: Request a deterministic gadget; no such gadget
            exists, so any request that needs new agents is rejected.

    Returns:
        The new negotiation and the coalition extended by the added A1 agents.

    Raises:
        PreconditionError: If atom is the initial or the final atom.
        UnsupportedError: If preserve_determinism is set and agents are needed.
    """
    coalition = frozenset(coalition)
    if atom in (negotiation.initial, negotiation.final):
        raise PreconditionError(
            f"cannot retarget '{negotiation.atoms[atom].name}': "
            "the initial and final atoms keep their owner"
        )
    if controls(negotiation, coalition, atom):
        return negotiation, coalition
    if preserve_determinism:
        raise UnsupportedError(
            "handing over control requires nondeterministic agents; "
            "no deterministic gadget exists"
        )

    parties = negotiation.atoms[atom].parties
    inside = sum(1 for a in parties if a in coalition)
    added = len(parties) - 2 * inside + 1

    members = len(coalition)
    others = len(negotiation.agents) - members
    owned_before = members > others
    balancing = 0 if owned_before else max(0, members + added - others)

    target = negotiation.atoms[atom]
    initial = negotiation.atoms[negotiation.initial]
    final = negotiation.atoms[negotiation.final]
    control_names = _fresh_names(negotiation, added + balancing)
    majority, balance = control_names[:added], control_names[added:]

    builder = negotiation.to_builder()
    for name in majority:
        builder.add_agent(name)
        for host in (initial, target, final):
            builder.add_party(host.name, name)
        for outcome in initial.outcomes:
            builder.add_arc(initial.name, name, outcome.name, [target.name, final.name])
        for outcome in target.outcomes:
            builder.add_arc(target.name, name, outcome.name, [target.name, final.name])
    for name in balance:
        builder.add_agent(name)
        for host in (initial, final):
            builder.add_party(host.name, name)
        for outcome in initial.outcomes:
            builder.add_arc(initial.name, name, outcome.name, [final.name])

    result = builder.build()
    extended = coalition | {result.agent_index(name) for name in majority}
    logger.debug(
        "retargeted '%s' with %d coalition and %d balancing agents",
        target.name,
        added,
        balancing,
    )
    return result, frozenset(extended)
