"""Concluding outcome games solved as seeded attractors over good/bad atoms."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

from src.attractor import AttractorResult, compute_attractor
from src.errors import PreconditionError
from src.negotiation import Arena, Negotiation, Triple
from src.semantics import DEFAULT_MAX_MARKINGS, SoundnessReport, check_soundness

logger = logging.getLogger(__name__)

DUMMY_OUTCOME = "done"


@dataclass(frozen=True)
class TransformMap:
    """Where the final-atom arcs of constrained agents were redirected.

    Atom indices refer to the transformed negotiation; original atoms keep
    their indices there.
    """

    good: Mapping[int, int]
    bad: Mapping[int, int]
    redirected: Mapping[Triple, int]

    def to_dict(self, negotiation: Negotiation) -> dict:
        atoms, agents = negotiation.atoms, negotiation.agents
        return {
            "good": {agents[a].name: atoms[n].name for a, n in self.good.items()},
            "bad": {agents[a].name: atoms[n].name for a, n in self.bad.items()},
            "redirected": {
                f"({atoms[n].name},{agents[a].name},{atoms[n].outcomes[r].name})": atoms[t].name
                for (n, a, r), t in sorted(self.redirected.items())
            },
        }


def _fresh_atom_name(taken: set[str], base: str) -> str:
    name, k = base, 1
    while name in taken:
        name = f"{base}_{k}"
        k += 1
    taken.add(name)
    return name


def transform(arena: Arena) -> tuple[Arena, TransformMap]:
    """Redirects every final-atom arc of a constrained agent to good_a or bad_a.

    An arc (n, a, r) whose target set contains nf gets nf replaced by good_a
    when (n, r) is in G_a and by bad_a otherwise. The added atoms have the
    single party a and one outcome leading to nf, and belong to Player 2.

    Raises:
        PreconditionError: The arena has no goals, or a goal pair does not
            lead to the final atom.
    """
    if arena.goals is None:
        raise PreconditionError("the concluding outcome transform needs goal declarations")
    negotiation = arena.negotiation
    final = negotiation.final
    for agent, pairs in arena.goals.items():
        for n, r in sorted(pairs):
            if final not in negotiation.successors(n, agent, r):
                raise PreconditionError(
                    f"goal {negotiation.step_label(n, r)} of "
                    f"'{negotiation.agents[agent].name}' does not lead to the final atom"
                )

    plan: dict[Triple, str] = {}
    for (n, a, r), targets in negotiation.transition.items():
        if n != final and a in arena.goals and final in targets:
            plan[(n, a, r)] = "good" if (n, r) in arena.goals[a] else "bad"

    builder = negotiation.to_builder()
    taken = {atom.name for atom in negotiation.atoms}
    final_name = negotiation.atoms[final].name
    needed = {(a, kind) for (_, a, _), kind in plan.items()}
    names: dict[tuple[int, str], str] = {}
    for agent in sorted(arena.goals):
        for kind in ("good", "bad"):
            if (agent, kind) not in needed:
                continue
            agent_name = negotiation.agents[agent].name
            name = _fresh_atom_name(taken, f"{kind}_{agent_name}")
            builder.add_atom(name, [agent_name], [DUMMY_OUTCOME])
            builder.add_arc(name, agent_name, DUMMY_OUTCOME, [final_name])
            names[(agent, kind)] = name

    for (n, a, r), kind in plan.items():
        atom = negotiation.atoms[n]
        key = (atom.name, negotiation.agents[a].name, atom.outcomes[r].name)
        dummy = names[(a, kind)]
        builder.arcs[key] = [dummy if t == final_name else t for t in builder.arcs[key]]

    result = builder.build()
    good = {a: result.atom_index(name) for (a, kind), name in names.items() if kind == "good"}
    bad = {a: result.atom_index(name) for (a, kind), name in names.items() if kind == "bad"}
    redirected = {
        triple: (good if kind == "good" else bad)[triple[1]] for triple, kind in plan.items()
    }
    logger.debug(
        "outcome transform of '%s': %d good, %d bad atoms, %d arcs redirected",
        negotiation.name,
        len(good),
        len(bad),
        len(redirected),
    )
    return Arena(result, arena.player1), TransformMap(good, bad, redirected)


@dataclass(frozen=True)
class ConcludingVerdict:
    player1_wins: bool
    attractor: AttractorResult
    transformed: Arena
    transform_map: TransformMap
    soundness: SoundnessReport | None = None


def solve_concluding_outcome(
    arena: Arena, assume_sound: bool = False, max_markings: int = DEFAULT_MAX_MARKINGS
) -> ConcludingVerdict:
    """Seeds the attractor with the good atoms and the final atom; bad atoms never join."""
    transformed, mapping = transform(arena)
    report = None
    if not assume_sound:
        report = check_soundness(transformed.negotiation, max_markings)
        if not report.sound:
            raise PreconditionError(
                "transformed arena is not sound:\n" + report.describe(transformed.negotiation),
                report=report,
            )
    seed = set(mapping.good.values()) | {transformed.negotiation.final}
    attractor = compute_attractor(transformed, seed=seed, barred=mapping.bad.values())
    wins = transformed.negotiation.initial in attractor.member
    logger.info("seeded attractor solver: player %d wins", 1 if wins else 2)
    return ConcludingVerdict(wins, attractor, transformed, mapping, report)
