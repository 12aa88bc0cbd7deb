"""Seeded generators for cross-check instances and scaling benchmarks."""

from __future__ import annotations

import logging
import random
from collections.abc import Iterator
from dataclasses import dataclass

from src.negotiation import Arena, NegotiationBuilder

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorConfig:
    """Size bounds and mutation rates of random arenas.

    Atoms are laid out in a sequence n0, n1, ..., nf and every party moves on
    to the next atom of the sequence it takes part in. That skeleton is always
    sound; retries, rewires and extra hyper-arc targets perturb it, so some
    instances come out unsound or without a deterministic party somewhere.
    """

    max_agents: int = 6
    max_atoms: int = 8
    max_outcomes: int = 3
    retry_probability: float = 0.2
    rewire_probability: float = 0.1
    hyperarc_probability: float = 0.1
    player1_probability: float = 0.5
    goal_probability: float = 0.3


def random_arena(
    rng: random.Random, config: GeneratorConfig | None = None, name: str = "random"
) -> Arena:
    config = config or GeneratorConfig()
    agents = [f"A{i}" for i in range(rng.randint(1, config.max_agents))]
    middle = rng.randint(0, max(0, config.max_atoms - 2))
    order = ["n0"] + [f"n{i}" for i in range(1, middle + 1)] + ["nf"]

    parties: dict[str, list[str]] = {"n0": agents, "nf": agents}
    outcomes: dict[str, list[str]] = {"nf": ["end"]}
    for atom in order[:-1]:
        if atom != "n0":
            chosen = [agent for agent in agents if rng.random() < 0.5]
            parties[atom] = chosen or [rng.choice(agents)]
        outcomes[atom] = [f"r{k}" for k in range(rng.randint(1, config.max_outcomes))]

    visits = {agent: [atom for atom in order if agent in parties[atom]] for agent in agents}
    builder = NegotiationBuilder(name)
    for agent in agents:
        builder.add_agent(agent)
    for atom in order:
        role = "initial" if atom == "n0" else "final" if atom == "nf" else None
        builder.add_atom(atom, parties[atom], outcomes[atom], role=role)

    for atom in order[:-1]:
        for k, outcome in enumerate(outcomes[atom]):
            retry = atom != "n0" and k > 0 and rng.random() < config.retry_probability
            for agent in parties[atom]:
                if retry:
                    builder.add_arc(atom, agent, outcome, [atom])
                    continue
                later = visits[agent][visits[agent].index(atom) + 1 :]
                target = later[0]
                if len(later) > 1 and rng.random() < config.rewire_probability:
                    target = rng.choice(later[1:])
                targets = [target]
                extra = [t for t in later if t != target]
                if extra and rng.random() < config.hyperarc_probability:
                    targets.append(rng.choice(extra))
                builder.add_arc(atom, agent, outcome, targets)

    negotiation = builder.build()
    player1 = frozenset(
        atom.index
        for atom in negotiation.atoms
        if atom.index != negotiation.final and rng.random() < config.player1_probability
    )
    goals = {}
    for agent in negotiation.agents:
        if rng.random() >= config.goal_probability:
            continue
        finishing = [
            (n, r)
            for n, a, r in negotiation.triples()
            if a == agent.index and negotiation.final in negotiation.successors(n, a, r)
        ]
        goals[agent.index] = frozenset(pair for pair in finishing if rng.random() < 0.5)
    return Arena(negotiation, player1, goals or None)


def random_arenas(seed: int, count: int, config: GeneratorConfig | None = None) -> Iterator[Arena]:
    """`count` arenas from one seeded stream; the same seed gives the same arenas."""
    rng = random.Random(seed)
    for k in range(count):
        yield random_arena(rng, config, name=f"random{seed}_{k}")


def chain_arena(total_outcomes: int, agents: int = 2, outcomes_per_atom: int = 10) -> Arena:
    """Sound deterministic chain with roughly `total_outcomes` outcomes.

    Every atom has all agents as parties. Outcome r0 moves everyone to the
    next atom, the others retry the same atom. Player 1 owns every atom, so the
    attractor grows through the whole chain.
    """
    length = max(1, total_outcomes // outcomes_per_atom)
    names = ["n0"] + [f"n{i}" for i in range(1, length)] + ["nf"]
    agent_names = [f"A{i}" for i in range(agents)]
    builder = NegotiationBuilder(f"chain{total_outcomes}")
    for agent in agent_names:
        builder.add_agent(agent)
    for position, atom in enumerate(names):
        if atom == "nf":
            builder.add_atom(atom, agent_names, ["end"], role="final")
            continue
        outcomes = [f"r{k}" for k in range(outcomes_per_atom)]
        builder.add_atom(atom, agent_names, outcomes, role="initial" if position == 0 else None)
        for k, outcome in enumerate(outcomes):
            target = names[position + 1] if k == 0 else atom
            for agent in agent_names:
                builder.add_arc(atom, agent, outcome, [target])
    negotiation = builder.build()
    logger.debug("chain arena with %d atoms, %d agents", len(names), agents)
    return Arena(negotiation, frozenset(range(len(names) - 1)))
