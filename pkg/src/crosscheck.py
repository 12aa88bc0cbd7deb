"""Batch cross-checks of the two solvers and the attractor scaling benchmark."""

from __future__ import annotations

import argparse
import glob
import logging
import os
import time
from dataclasses import dataclass

from src.atm_encoding import (
    AtmSpec,
    accepts,
    encode_deterministic,
    encode_nondeterministic,
    read_atm,
)
from src.attractor import compute_attractor, decide_termination, validate_strategies
from src.chart_generator import generate_scaling_chart
from src.game_graph import DEFAULT_MAX_MOVES, GameMode, solve_general
from src.negotiation import Arena
from src.outcome_transform import solve_concluding_outcome, transform
from src.random_arenas import GeneratorConfig, chain_arena, random_arenas
from src.reports import records_frame, scaling_table, summarize_crosscheck
from src.semantics import DEFAULT_MAX_MARKINGS, check_soundness, classify, explore_markings

logger = logging.getLogger(__name__)

DEFAULT_SIZES = "1000,10000,100000"


@dataclass
class CrosscheckRecord:
    """One random arena; verdict columns stay None unless it is sound and of type 2."""

    instance: int
    name: str
    agents: int
    atoms: int
    outcomes: int
    markings: int
    sound: bool
    type2: bool
    attractor_wins: bool | None = None
    general_wins: bool | None = None
    strategies_ok: bool | None = None
    agree: bool | None = None
    outcome_agree: bool | None = None


@dataclass
class MachineRecord:
    machine: str
    encoding: str
    accepts: bool
    player1_wins: bool
    structure_ok: bool

    @property
    def agree(self) -> bool:
        return self.accepts == self.player1_wins


@dataclass
class BenchmarkRecord:
    outcomes: int
    agents: int
    atoms: int
    seconds: float


def attractor_applicable(arena: Arena, max_markings: int = DEFAULT_MAX_MARKINGS) -> bool:
    """Sound, weakly deterministic and every atom with a deterministic party."""
    classification = classify(arena.negotiation)
    if not (classification.weakly_deterministic and classification.weakly_deterministic_type2):
        return False
    return check_soundness(arena.negotiation, max_markings).sound


def check_arena(
    arena: Arena,
    instance: int = 0,
    max_markings: int = DEFAULT_MAX_MARKINGS,
    max_moves: int = DEFAULT_MAX_MOVES,
) -> CrosscheckRecord:
    """Solves one arena with both solvers and replays the attractor strategies."""
    negotiation = arena.negotiation
    graph = explore_markings(negotiation, max_markings)
    classification = classify(negotiation)
    record = CrosscheckRecord(
        instance=instance,
        name=negotiation.name,
        agents=len(negotiation.agents),
        atoms=len(negotiation.atoms),
        outcomes=negotiation.outcome_count,
        markings=len(graph),
        sound=check_soundness(negotiation, max_markings, graph=graph).sound,
        type2=classification.weakly_deterministic and classification.weakly_deterministic_type2,
    )
    if not (record.sound and record.type2):
        return record

    verdict = decide_termination(arena, assume_sound=True)
    _, result = solve_general(arena, GameMode.TERMINATION, max_markings, max_moves)
    record.attractor_wins = verdict.player1_wins
    record.general_wins = result.player1_wins
    record.strategies_ok = validate_strategies(arena, verdict.result, max_markings).ok
    record.agree = record.attractor_wins == record.general_wins
    if not record.agree:
        logger.warning("solvers disagree on '%s'", negotiation.name)
    if arena.goals is not None:
        record.outcome_agree = _check_concluding_if_applicable(arena, max_markings, max_moves)
    return record


def _check_concluding_if_applicable(arena: Arena, max_markings: int, max_moves: int) -> bool | None:
    transformed, _ = transform(arena)
    if not attractor_applicable(transformed, max_markings):
        return None
    seeded, general = check_concluding(arena, max_markings, max_moves)
    if seeded != general:
        logger.warning("concluding outcome solvers disagree on '%s'", arena.negotiation.name)
    return seeded == general


def check_concluding(
    arena: Arena, max_markings: int = DEFAULT_MAX_MARKINGS, max_moves: int = DEFAULT_MAX_MOVES
) -> tuple[bool, bool]:
    """Seeded attractor verdict and general concluding-outcome verdict of one arena."""
    verdict = solve_concluding_outcome(arena, max_markings=max_markings)
    _, result = solve_general(arena, GameMode.CONCLUDING_OUTCOME, max_markings, max_moves)
    return verdict.player1_wins, result.player1_wins


def check_machine(
    machine: AtmSpec, max_markings: int = DEFAULT_MAX_MARKINGS, max_moves: int = DEFAULT_MAX_MOVES
) -> list[MachineRecord]:
    """Compares both encodings of a machine against direct evaluation."""
    expected = accepts(machine)
    records = []

    arena = encode_nondeterministic(machine)
    graph = explore_markings(arena.negotiation, max_markings)
    _, result = solve_general(arena, GameMode.TERMINATION, max_markings, max_moves)
    records.append(
        MachineRecord(
            machine=machine.name,
            encoding="nondeterministic",
            accepts=expected,
            player1_wins=result.player1_wins,
            structure_ok=all(len(enabled) <= 1 for enabled in graph.enabled),
        )
    )

    arena = encode_deterministic(machine)
    _, result = solve_general(arena, GameMode.TERMINATION, max_markings, max_moves)
    records.append(
        MachineRecord(
            machine=machine.name,
            encoding="deterministic",
            accepts=expected,
            player1_wins=result.player1_wins,
            structure_ok=classify(arena.negotiation).deterministic,
        )
    )
    return records


def benchmark(sizes: list[int], agents: list[int], repeats: int = 3) -> list[BenchmarkRecord]:
    """Best-of-`repeats` wall time of compute_attractor on chain arenas."""
    records = []
    for count in agents:
        for size in sizes:
            arena = chain_arena(size, agents=count)
            best = float("inf")
            for _ in range(repeats):
                start = time.perf_counter()
                compute_attractor(arena)
                best = min(best, time.perf_counter() - start)
            records.append(
                BenchmarkRecord(
                    outcomes=arena.negotiation.outcome_count,
                    agents=count,
                    atoms=len(arena.negotiation.atoms),
                    seconds=best,
                )
            )
            logger.debug("chain of %d outcomes, %d agents: %.4fs", size, count, best)
    return records


def run(args: argparse.Namespace) -> int:
    """Runs the random-arena and machine cross-checks; returns the number of failures."""
    config = GeneratorConfig(
        max_agents=args.max_agents, max_atoms=args.max_atoms, max_outcomes=args.max_outcomes
    )
    print(f"Cross-checking {args.count} random arenas with seed {args.seed}...")
    records = []
    for k, arena in enumerate(random_arenas(args.seed, args.count, config)):
        try:
            record = check_arena(arena, k, args.max_markings, args.max_moves)
        except ValueError as e:
            print(f"Error processing instance {k}: {e}")
            continue
        records.append(record)
        if False in (record.agree, record.strategies_ok, record.outcome_agree):
            print(
                f"Instance {k} ({record.name}): attractor says {record.attractor_wins}, "
                f"general says {record.general_wins}, strategies ok: {record.strategies_ok}, "
                f"concluding outcome agrees: {record.outcome_agree}"
            )

    summary = summarize_crosscheck(records_frame(records))
    print(summary.to_string(index=False))
    failures = int(
        summary[["disagreements", "strategy_failures", "outcome_disagreements"]].iloc[0].sum()
    )

    if args.machines_dir:
        for path in sorted(glob.glob(os.path.join(args.machines_dir, "*.atm"))):
            try:
                print(f"Checking machine {path}...")
                for record in check_machine(read_atm(path), args.max_markings, args.max_moves):
                    status = "ok" if record.agree and record.structure_ok else "MISMATCH"
                    print(
                        f"  {record.encoding}: accepts={record.accepts} "
                        f"player1_wins={record.player1_wins} "
                        f"structure_ok={record.structure_ok} {status}"
                    )
                    failures += not (record.agree and record.structure_ok)
            except ValueError as e:
                print(f"Error processing {path}: {e}")
                failures += 1
    return failures


def run_benchmark(args: argparse.Namespace) -> int:
    sizes = [int(size.strip()) for size in args.sizes.split(",")]
    agents = [int(count.strip()) for count in args.agents.split(",")]
    print(f"Timing the attractor on chain arenas of {sizes} outcomes...")
    table = scaling_table(records_frame(benchmark(sizes, agents, args.repeats)))
    print(table.to_string(index=False))
    if args.plot or args.save_html_dir:
        generate_scaling_chart(table, output_dir=args.save_html_dir)
    return 0
