"""Main entry point for the application."""

import argparse
import logging
import re
import sys
from dataclasses import dataclass

from src import attractor, crosscheck, game_graph
from src.arena import coalition_indices, partition_from_coalition, retarget_control
from src.atm_encoding import accepts, encode_deterministic, encode_nondeterministic, read_atm
from src.chart_generator import generate_attractor_chart
from src.errors import (
    EncodingError,
    ParseError,
    PreconditionError,
    ResourceLimitError,
    SemanticError,
    ValidationError,
)
from src.game_graph import DEFAULT_MAX_MOVES, GameMode
from src.negotiation import Arena
from src.outcome_transform import solve_concluding_outcome, transform
from src.random_arenas import GeneratorConfig
from src.reports import attractor_table, classification_table
from src.semantics import (
    DEFAULT_MAX_MARKINGS,
    OccurrenceStep,
    check_soundness,
    classify,
    enabled_atoms,
    explore_markings,
    format_steps,
    run_sequence,
)
from src.textio import (
    dump_result,
    export,
    export_dot,
    export_marking_graph_dot,
    load_result,
    negotiation_summary,
    parse,
    read_arena,
    read_text,
)

logger = logging.getLogger(__name__)

EXIT_PLAYER1 = 0
EXIT_PLAYER2 = 1
EXIT_USAGE = 2
EXIT_PRECONDITION = 3

SOLVERS = ("auto", "attractor", "general")
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

_STEP = re.compile(r"\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\)")


@dataclass(frozen=True)
class RunConfig:
    """Options shared by the subcommands, taken from the parsed namespace."""

    command: str
    input_path: str | None = None
    output_path: str | None = None
    solver: str = "auto"
    max_markings: int = DEFAULT_MAX_MARKINGS
    max_moves: int = DEFAULT_MAX_MOVES
    assume_sound: bool = False
    friendly_scheduler: bool = False
    coalition: tuple[str, ...] | None = None
    player1: tuple[str, ...] | None = None
    seed: int = 0
    verbose: bool = False
    save_html_dir: str | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        def names(value: str | None) -> tuple[str, ...] | None:
            if value is None:
                return None
            return tuple(name.strip() for name in value.split(",") if name.strip())

        return cls(
            command=args.command,
            input_path=getattr(args, "input", None),
            output_path=args.output,
            solver=getattr(args, "solver", "auto"),
            max_markings=args.max_markings,
            max_moves=args.max_moves,
            assume_sound=getattr(args, "assume_sound", False),
            friendly_scheduler=getattr(args, "friendly_scheduler", False),
            coalition=names(getattr(args, "coalition", None)),
            player1=names(getattr(args, "player1", None)),
            seed=args.seed,
            verbose=args.verbose,
            save_html_dir=args.save_html_dir,
        )


def _write(path: str | None, text: str):
    if path is None:
        print(text, end="")
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    print(f"Written to {path}")


def _load_arena(config: RunConfig) -> Arena:
    """Reads the input arena; --coalition and --player1 replace the file's partition."""
    arena = read_arena(config.input_path)
    negotiation = arena.negotiation
    if config.coalition is not None:
        coalition = coalition_indices(negotiation, config.coalition)
        return partition_from_coalition(negotiation, coalition, arena.goals)
    if config.player1 is not None:
        return arena.with_partition(negotiation.atom_index(name) for name in config.player1)
    return arena


def _player1_names(arena: Arena) -> list[str]:
    return [arena.negotiation.atoms[n].name for n in sorted(arena.player1)]


def _select_solver(arena: Arena, config: RunConfig) -> str:
    """Resolves `auto`; an explicit attractor request on a non-type-2 arena is an error.

    `auto` takes the attractor only for sound, weakly deterministic type 2
    arenas and an adversarial Scheduler.
    """
    if config.solver == "general":
        return "general"
    classification = classify(arena.negotiation)
    if config.solver == "attractor":
        if not classification.weakly_deterministic_type2:
            missing = attractor.atoms_without_deterministic_party(arena)
            names = ", ".join(arena.negotiation.atoms[n].name for n in missing)
            raise PreconditionError(f"arena is not type 2: no deterministic party at {names}")
        if config.friendly_scheduler:
            raise PreconditionError("the attractor solver assumes an adversarial Scheduler")
        return "attractor"
    applicable = classification.weakly_deterministic and classification.weakly_deterministic_type2
    if not applicable or config.friendly_scheduler:
        selected = "general"
    elif config.assume_sound:
        selected = "attractor"
    else:
        sound = check_soundness(arena.negotiation, config.max_markings).sound
        selected = "attractor" if sound else "general"
    logger.info("auto selected the %s solver", selected)
    return selected


def _report_attractor(arena: Arena, result, config: RunConfig):
    table = attractor_table(arena, result)
    print(table.to_string(index=False))
    if config.save_html_dir:
        generate_attractor_chart(arena.negotiation.name, table, output_dir=config.save_html_dir)


def _finish(arena: Arena, payload: dict, config: RunConfig) -> int:
    payload["player1"] = _player1_names(arena)
    print(f"Winner: player {payload['winner']} ({payload['solver']} solver)")
    if "witness" in payload:
        print(f"Witness ({payload['witness']['kind']}): {payload['witness']['play']}")
    if config.output_path:
        _write(config.output_path, dump_result(payload))
    return EXIT_PLAYER1 if payload["winner"] == 1 else EXIT_PLAYER2


def _validate(config: RunConfig, args: argparse.Namespace) -> int:
    text = read_text(config.input_path)
    try:
        arena = parse(text)
    except ValidationError as e:
        print(e.report)
        return EXIT_PLAYER2
    print(negotiation_summary(arena.negotiation))
    print("valid")
    return EXIT_PLAYER1


def _classify(config: RunConfig, args: argparse.Namespace) -> int:
    negotiation = _load_arena(config).negotiation
    classification = classify(negotiation)
    print(negotiation_summary(negotiation))
    print(classification_table(negotiation).to_string(index=False))
    print(f"deterministic: {classification.deterministic}")
    print(f"weakly deterministic: {classification.weakly_deterministic}")
    print(f"type 2: {classification.weakly_deterministic_type2}")
    if config.output_path:
        payload = {
            "deterministicAgents": [
                negotiation.agents[a].name for a in sorted(classification.deterministic_agents)
            ],
            "deterministic": classification.deterministic,
            "weaklyDeterministic": classification.weakly_deterministic,
            "weaklyDeterministicType2": classification.weakly_deterministic_type2,
        }
        _write(config.output_path, dump_result(payload))
    return EXIT_PLAYER1


def _soundness(config: RunConfig, args: argparse.Namespace) -> int:
    negotiation = _load_arena(config).negotiation
    report = check_soundness(negotiation, config.max_markings)
    print(report.describe(negotiation))
    if config.output_path:
        payload = {
            "sound": report.sound,
            "unreachableAtoms": sorted(negotiation.atoms[n].name for n in report.unreachable_atoms),
            "deadlockWitness": (
                None if report.deadlock_witness is None
                else format_steps(negotiation, report.deadlock_witness)
            ),
            "nonTerminatingWitness": (
                None if report.non_terminating_path is None
                else format_steps(negotiation, report.non_terminating_path)
            ),
        }
        _write(config.output_path, dump_result(payload))
    return EXIT_PLAYER1 if report.sound else EXIT_PLAYER2


def parse_steps(arena: Arena, text: str) -> list[OccurrenceStep]:
    """Reads an occurrence sequence written as "(n0,y) (n1,tm)"."""
    negotiation = arena.negotiation
    matches = list(_STEP.finditer(text))
    if _STEP.sub("", text).strip():
        raise ParseError("expected steps written as (atom,outcome)", line=1)
    steps = []
    for match in matches:
        atom = negotiation.atom_index(match.group(1))
        steps.append(OccurrenceStep(atom, negotiation.outcome_index(atom, match.group(2))))
    return steps


def _follow_strategy(arena: Arena, path: str, config: RunConfig) -> int:
    payload = load_result(read_text(path))
    if config.coalition is None and config.player1 is None and "player1" in payload:
        negotiation = arena.negotiation
        arena = arena.with_partition(negotiation.atom_index(name) for name in payload["player1"])

    if payload["solver"] == "attractor":
        if payload["mode"] == GameMode.CONCLUDING_OUTCOME.value:
            arena, _ = transform(arena)
        witness = attractor.play_tables(arena, attractor.tables_from_payload(arena, payload))
        play = game_graph.format_play(arena.negotiation, witness)
    else:
        graph = game_graph.build_game_graph(
            arena, GameMode(payload["mode"]), config.max_markings, config.max_moves
        )
        witness = game_graph.play_out(graph, game_graph.result_from_payload(graph, payload))
        play = game_graph.format_witness(graph, witness)

    print(f"Replayed ({witness.kind}): {play}")
    if play != payload["witness"]["play"]:
        print(f"Recorded witness differs: {payload['witness']['play']}")
        return EXIT_PLAYER2
    print("Witness reproduced.")
    return EXIT_PLAYER1


def _simulate(config: RunConfig, args: argparse.Namespace) -> int:
    arena = _load_arena(config)
    if args.follow_strategy:
        return _follow_strategy(arena, args.follow_strategy, config)
    negotiation = arena.negotiation
    steps = parse_steps(arena, args.steps or "")
    markings = run_sequence(negotiation, steps)
    print(negotiation.format_marking(markings[0]))
    for step, marking in zip(steps, markings[1:]):
        label = negotiation.step_label(step.atom, step.outcome)
        print(f"{label} -> {negotiation.format_marking(marking)}")
    last = markings[-1]
    if last.is_final:
        print("final marking reached")
    else:
        names = [negotiation.atoms[n].name for n in sorted(enabled_atoms(negotiation, last))]
        print(f"enabled: {', '.join(names) if names else 'none (deadlock)'}")
    return EXIT_PLAYER1


def _solve_termination(config: RunConfig, args: argparse.Namespace) -> int:
    arena = _load_arena(config)
    print(negotiation_summary(arena.negotiation))
    solver = _select_solver(arena, config)
    if solver == "attractor":
        verdict = attractor.decide_termination(
            arena,
            assume_sound=config.assume_sound or config.solver == "auto",
            max_markings=config.max_markings,
        )
        _report_attractor(arena, verdict.result, config)
        witness = attractor.play_out(arena, verdict.result)
        payload = attractor.result_payload(arena, verdict.result, verdict.player1_wins, witness)
    else:
        graph, result = game_graph.solve_general(
            arena,
            GameMode.TERMINATION,
            config.max_markings,
            config.max_moves,
            config.friendly_scheduler,
        )
        payload = game_graph.result_payload(graph, result)
        print(
            f"Game graph: {len(graph.schedulers)} scheduler nodes, "
            f"{len(graph.choices)} choice nodes"
        )
    return _finish(arena, payload, config)


def _solve_outcome(config: RunConfig, args: argparse.Namespace) -> int:
    arena = _load_arena(config)
    print(negotiation_summary(arena.negotiation))
    if arena.goals is None:
        raise PreconditionError("the concluding outcome game needs goal declarations")
    transformed, _ = transform(arena)
    solver = _select_solver(transformed, config)
    if solver == "attractor":
        verdict = solve_concluding_outcome(
            arena,
            assume_sound=config.assume_sound or config.solver == "auto",
            max_markings=config.max_markings,
        )
        _report_attractor(verdict.transformed, verdict.attractor, config)
        witness = attractor.play_out(verdict.transformed, verdict.attractor)
        payload = attractor.result_payload(
            verdict.transformed,
            verdict.attractor,
            verdict.player1_wins,
            witness,
            mode=GameMode.CONCLUDING_OUTCOME.value,
        )
        payload["transform"] = verdict.transform_map.to_dict(verdict.transformed.negotiation)
    else:
        graph, result = game_graph.solve_general(
            arena,
            GameMode.CONCLUDING_OUTCOME,
            config.max_markings,
            config.max_moves,
            config.friendly_scheduler,
        )
        payload = game_graph.result_payload(graph, result)
    return _finish(arena, payload, config)


def _transform_control(config: RunConfig, args: argparse.Namespace) -> int:
    arena = _load_arena(config)
    negotiation = arena.negotiation
    if arena.coalition is None:
        raise PreconditionError("transform-control needs a coalition")
    result, extended = retarget_control(
        negotiation,
        arena.coalition,
        negotiation.atom_index(args.atom),
        preserve_determinism=args.preserve_determinism,
    )
    retargeted = partition_from_coalition(result, extended, arena.goals)
    added = [agent.name for agent in result.agents[len(negotiation.agents) :]]
    logger.info("added agents: %s", ", ".join(added) or "none")
    _write(config.output_path, export(retargeted))
    return EXIT_PLAYER1


def _encode_atm(config: RunConfig, args: argparse.Namespace) -> int:
    machine = read_atm(config.input_path)
    encode = encode_deterministic if args.encoding == "deterministic" else encode_nondeterministic
    arena = encode(machine)
    text = f"# {machine.name}: {'accepts' if accepts(machine) else 'rejects'} its input\n"
    _write(config.output_path, text + export(arena))
    return EXIT_PLAYER1


def _export_dot(config: RunConfig, args: argparse.Namespace) -> int:
    arena = _load_arena(config)
    annotations = None
    if args.attractor:
        annotations = dict(enumerate(attractor.compute_attractor(arena).index))
    _write(config.output_path, export_dot(arena, annotations))
    return EXIT_PLAYER1


def _export_stategraph(config: RunConfig, args: argparse.Namespace) -> int:
    negotiation = _load_arena(config).negotiation
    graph = explore_markings(negotiation, config.max_markings)
    _write(config.output_path, export_marking_graph_dot(graph))
    return EXIT_PLAYER1


def _crosscheck(config: RunConfig, args: argparse.Namespace) -> int:
    failures = crosscheck.run(args)
    return EXIT_PLAYER1 if failures == 0 else EXIT_PLAYER2


def _benchmark(config: RunConfig, args: argparse.Namespace) -> int:
    return crosscheck.run_benchmark(args)


COMMANDS = {
    "validate": _validate,
    "classify": _classify,
    "soundness": _soundness,
    "simulate": _simulate,
    "solve-termination": _solve_termination,
    "solve-outcome": _solve_outcome,
    "transform-control": _transform_control,
    "encode-atm": _encode_atm,
    "export-dot": _export_dot,
    "export-stategraph": _export_stategraph,
    "crosscheck": _crosscheck,
    "benchmark": _benchmark,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--output",
        type=str,
        default=None,
        help="Write the machine-readable result to this path.",
    )
    common.add_argument(
        "--max-markings",
        type=int,
        default=DEFAULT_MAX_MARKINGS,
        help="Cap on explored markings and game graph nodes.",
    )
    common.add_argument(
        "--max-moves",
        type=int,
        default=DEFAULT_MAX_MOVES,
        help="Cap on outcome combinations of a single Scheduler choice.",
    )
    common.add_argument("--seed", type=int, default=0, help="Seed for generated instances.")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    common.add_argument(
        "--save-html-dir",
        type=str,
        default=None,
        help="Save charts as HTML files in the specified directory.",
    )

    arena_input = argparse.ArgumentParser(add_help=False)
    arena_input.add_argument("input", type=str, help="Path of a .neg file.")
    partition = arena_input.add_mutually_exclusive_group()
    partition.add_argument(
        "--coalition", type=str, default=None, help="Comma-separated agents of A1."
    )
    partition.add_argument("--player1", type=str, default=None, help="Comma-separated atoms of N1.")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--solver", choices=SOLVERS, default="auto", help="Solver to use.")
    solving.add_argument(
        "--assume-sound",
        action="store_true",
        help="Skip the soundness check before the attractor solver.",
    )
    solving.add_argument(
        "--friendly-scheduler",
        action="store_true",
        help="Let the Scheduler side with Player 1 (general solver only).",
    )

    parser = argparse.ArgumentParser(description="Negotiation Games")
    commands = parser.add_subparsers(dest="command", required=True)
    with_arena = [common, arena_input]
    commands.add_parser("validate", parents=with_arena, help="Check the model invariants.")
    commands.add_parser("classify", parents=with_arena, help="Report determinism classes.")
    commands.add_parser("soundness", parents=with_arena, help="Check soundness.")

    simulate = commands.add_parser(
        "simulate", parents=with_arena, help="Replay an occurrence sequence."
    )
    simulate.add_argument(
        "--steps", type=str, default=None, help='Occurrence sequence, e.g. "(n0,y) (n1,tm)".'
    )
    simulate.add_argument(
        "--follow-strategy",
        type=str,
        default=None,
        help="Replay the witness of a result file written by a solve command.",
    )

    solve = with_arena + [solving]
    commands.add_parser("solve-termination", parents=solve, help="Solve the termination game.")
    commands.add_parser("solve-outcome", parents=solve, help="Solve the concluding outcome game.")

    control = commands.add_parser(
        "transform-control", parents=with_arena, help="Hand an atom over to the coalition."
    )
    control.add_argument(
        "--atom", type=str, required=True, help="Atom the coalition should control."
    )
    control.add_argument(
        "--preserve-determinism",
        action="store_true",
        help="Refuse constructions that add nondeterministic agents.",
    )

    encode = commands.add_parser(
        "encode-atm", parents=[common], help="Encode a .atm machine as an arena."
    )
    encode.add_argument("input", type=str, help="Path of a .atm file.")
    encode.add_argument(
        "--encoding",
        choices=("nondeterministic", "deterministic"),
        default="nondeterministic",
        help="Which encoding to produce.",
    )

    dot = commands.add_parser("export-dot", parents=with_arena, help="Export the arena as DOT.")
    dot.add_argument(
        "--attractor", action="store_true", help="Annotate atoms with attractor indices."
    )
    commands.add_parser(
        "export-stategraph", parents=with_arena, help="Export the marking graph as DOT."
    )

    defaults = GeneratorConfig()
    check = commands.add_parser(
        "crosscheck", parents=[common], help="Cross-check the solvers on random arenas."
    )
    check.add_argument("--count", type=int, default=500, help="Number of random arenas.")
    check.add_argument("--max-agents", type=int, default=defaults.max_agents)
    check.add_argument("--max-atoms", type=int, default=defaults.max_atoms)
    check.add_argument("--max-outcomes", type=int, default=defaults.max_outcomes)
    check.add_argument(
        "--machines-dir", type=str, default=None, help="Directory of .atm machines to check."
    )

    bench = commands.add_parser(
        "benchmark", parents=[common], help="Time the attractor on chain arenas."
    )
    bench.add_argument(
        "--sizes",
        type=str,
        default=crosscheck.DEFAULT_SIZES,
        help="Comma-separated outcome counts.",
    )
    bench.add_argument("--agents", type=str, default="2", help="Comma-separated agent counts.")
    bench.add_argument("--repeats", type=int, default=3, help="Timing repetitions per size.")
    bench.add_argument("--plot", action="store_true", help="Show the scaling chart.")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    config = RunConfig.from_args(args)
    logging.basicConfig(
        level=logging.DEBUG if config.verbose else logging.WARNING, format=LOG_FORMAT
    )
    try:
        return COMMANDS[config.command](config, args)
    except (ParseError, SemanticError, ValidationError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, ResourceLimitError, EncodingError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
