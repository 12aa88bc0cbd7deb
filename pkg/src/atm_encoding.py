"""Alternating linearly bounded machines encoded as negotiation arenas.

Two encodings produce arenas whose termination game Player 1 wins exactly
when the machine accepts its input: a nondeterministic one where agents I
(state), P (head) and one agent per tape cell track the configuration, and
a deterministic one where Player 1 guesses the next symbol and state
through extra atoms.

Machines are read from a small text format:

    atm <name>
    states q0[E] q1[U] qa[acc] qr[rej]     (the first state is initial)
    alphabet a b
    input ab                               (or space separated symbols)
    delta q0 a -> (q1 b R) (qa a L)
"""

from __future__ import annotations

import logging
import re
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

from src.errors import EncodingError, ParseError
from src.negotiation import Arena, NegotiationBuilder
from src.textio import read_text

logger = logging.getLogger(__name__)

_NAME = re.compile(r"[A-Za-z0-9_]+")
_STATE = re.compile(r"([A-Za-z0-9_]+)\[(E|U|acc|rej)\]")
_MOVE = re.compile(r"\(\s*([A-Za-z0-9_]+)\s+([A-Za-z0-9_]+)\s+([LR])\s*\)")
_MOVES = re.compile(r"(\s*\(\s*[A-Za-z0-9_]+\s+[A-Za-z0-9_]+\s+[LR]\s*\))+\s*")


class StateKind(str, Enum):
    EXISTENTIAL = "E"
    UNIVERSAL = "U"
    ACCEPT = "acc"
    REJECT = "rej"


@dataclass(frozen=True)
class Move:
    state: str
    symbol: str
    direction: str

    @property
    def label(self) -> str:
        return f"{self.state}.{self.symbol}.{self.direction}"


@dataclass(frozen=True)
class AtmSpec:
    """An alternating machine whose head stays on the cells of its input."""

    name: str
    states: tuple[str, ...]
    kinds: Mapping[str, StateKind] = field(hash=False)
    alphabet: tuple[str, ...]
    word: tuple[str, ...]
    delta: Mapping[tuple[str, str], tuple[Move, ...]] = field(hash=False)

    @property
    def initial(self) -> str:
        return self.states[0]

    @property
    def length(self) -> int:
        return len(self.word)

    def moves(self, state: str, symbol: str) -> tuple[Move, ...]:
        return self.delta.get((state, symbol), ())

    def is_halting(self, state: str) -> bool:
        return self.kinds[state] in (StateKind.ACCEPT, StateKind.REJECT)


Configuration = tuple[str, tuple[str, ...], int]


def _target_cell(machine: AtmSpec, cell: int, move: Move) -> int | None:
    """Cell reached by a move from `cell` (1-based); None if it leaves the tape."""
    target = cell + (1 if move.direction == "R" else -1)
    if 1 <= target <= machine.length:
        return target
    if machine.is_halting(move.state):
        return cell
    return None


def _successors(machine: AtmSpec, config: Configuration) -> list[Configuration]:
    state, tape, cell = config
    result = []
    for move in machine.moves(state, tape[cell - 1]):
        target = _target_cell(machine, cell, move)
        if target is None:
            raise EncodingError(
                f"move {move.label} from state {state} at cell {cell} leaves the tape"
            )
        written = tape[: cell - 1] + (move.symbol,) + tape[cell:]
        result.append((move.state, written, target))
    return result


def reachable_configurations(machine: AtmSpec) -> dict[Configuration, list[Configuration]]:
    """Configuration graph from the initial configuration.

    Raises:
        EncodingError: A reachable move leaves the tape into a non-halting state.
    """
    start = (machine.initial, machine.word, 1)
    graph: dict[Configuration, list[Configuration]] = {}
    queue = deque([start])
    while queue:
        config = queue.popleft()
        if config in graph:
            continue
        successors = [] if machine.is_halting(config[0]) else _successors(machine, config)
        graph[config] = successors
        queue.extend(s for s in successors if s not in graph)
    return graph


def accepts(machine: AtmSpec) -> bool:
    """Evaluates acceptance directly as a least fixpoint; cycles reject."""
    graph = reachable_configurations(machine)
    accepted = {c for c in graph if machine.kinds[c[0]] is StateKind.ACCEPT}
    changed = True
    while changed:
        changed = False
        for config, successors in graph.items():
            if config in accepted or not successors:
                continue
            kind = machine.kinds[config[0]]
            if kind is StateKind.EXISTENTIAL:
                wins = any(s in accepted for s in successors)
            elif kind is StateKind.UNIVERSAL:
                wins = all(s in accepted for s in successors)
            else:
                wins = False
            if wins:
                accepted.add(config)
                changed = True
    return (machine.initial, machine.word, 1) in accepted


def _reachable_triples(machine: AtmSpec) -> set[tuple[str, str, int]]:
    return {(q, tape[k - 1], k) for q, tape, k in reachable_configurations(machine)}


def _planned_moves(
    machine: AtmSpec, reachable: set[tuple[str, str, int]], state: str, symbol: str, cell: int
) -> list[tuple[Move, int]]:
    """Moves kept for the atom of (state, symbol, cell) with their target cells."""
    planned = []
    for move in machine.moves(state, symbol):
        target = _target_cell(machine, cell, move)
        if target is None:
            if (state, symbol, cell) in reachable:
                raise EncodingError(
                    f"move {move.label} from state {state} at cell {cell} leaves the tape"
                )
            continue
        planned.append((move, target))
    return planned


def _config_atom(state: str, symbol: str, cell: int) -> str:
    return f"c.{state}.{symbol}.{cell}"


def _cells(machine: AtmSpec) -> range:
    return range(1, machine.length + 1)


def encode_nondeterministic(machine: AtmSpec) -> Arena:
    """Hyper-arc encoding: at every reachable marking at most one atom is enabled.

    Atom c.q.a.k has parties I, P and C_k and one outcome per move. After a
    move (q', b, d) agent I is ready for every atom of state q', P for every
    atom of the target cell, and C_k for every atom of cell k with symbol b.
    Tape agents also stay ready for the final atom. Accepting atoms send
    their parties to the final atom; rejecting and stuck atoms loop.
    """
    reachable = _reachable_triples(machine)
    tape = [f"C{k}" for k in _cells(machine)]
    builder = NegotiationBuilder(f"{machine.name}_nd")
    for agent in ["I", "P", *tape]:
        builder.add_agent(agent)
    builder.add_atom("n0", ["I", "P", *tape], ["init"], role="initial")
    builder.add_atom("nf", ["I", "P", *tape], ["end"], role="final")

    def of_state(state: str) -> list[str]:
        return [_config_atom(state, a, k) for a in machine.alphabet for k in _cells(machine)]

    def of_cell(cell: int, symbol: str | None = None) -> list[str]:
        symbols = machine.alphabet if symbol is None else (symbol,)
        return [_config_atom(q, a, cell) for q in machine.states for a in symbols]

    player1 = []
    for state in machine.states:
        kind = machine.kinds[state]
        for symbol in machine.alphabet:
            for cell in _cells(machine):
                name = _config_atom(state, symbol, cell)
                parties = ["I", "P", tape[cell - 1]]
                planned = [] if machine.is_halting(state) else _planned_moves(
                    machine, reachable, state, symbol, cell
                )
                if kind is StateKind.ACCEPT:
                    builder.add_atom(name, parties, ["acc"])
                    for agent in parties:
                        builder.add_arc(name, agent, "acc", ["nf"])
                elif not planned:
                    builder.add_atom(name, parties, ["rej"])
                    builder.add_arc(name, "I", "rej", [name])
                    builder.add_arc(name, "P", "rej", [name])
                    builder.add_arc(name, tape[cell - 1], "rej", [name, "nf"])
                else:
                    builder.add_atom(name, parties, [m.label for m, _ in planned])
                    for move, target in planned:
                        builder.add_arc(name, "I", move.label, of_state(move.state))
                        builder.add_arc(name, "P", move.label, of_cell(target))
                        builder.add_arc(
                            name, tape[cell - 1], move.label, of_cell(cell, move.symbol) + ["nf"]
                        )
                    if kind is StateKind.EXISTENTIAL:
                        player1.append(name)

    builder.add_arc("n0", "I", "init", of_state(machine.initial))
    builder.add_arc("n0", "P", "init", of_cell(1))
    for cell in _cells(machine):
        initial_targets = of_cell(cell, machine.word[cell - 1]) + ["nf"]
        builder.add_arc("n0", tape[cell - 1], "init", initial_targets)

    negotiation = builder.build()
    logger.debug(
        "nondeterministic encoding of '%s': %d atoms", machine.name, len(negotiation.atoms)
    )
    return Arena(negotiation, frozenset(negotiation.atom_index(n) for n in player1))


def encode_deterministic(machine: AtmSpec) -> Arena:
    """Deterministic encoding where Player 1 guesses symbols and states.

    After a move (q', b, d) at c.q.a.k agent C_k goes to cell.b.k, while I
    and P go to guess.q'.k'. There Player 1 names the symbol g under the
    head, sending I to c.q'.g.k' and P to cell.g.k'; at cell.g.k' Player 1
    names the state, sending P and C_k' on to the configuration atom. A wrong
    guess deadlocks. Acceptance sends I to the final atom and P on a sweep
    that releases every tape agent through the extra outcome 'release'.
    """
    reachable = _reachable_triples(machine)
    tape = [f"C{k}" for k in _cells(machine)]
    cells = list(_cells(machine))
    builder = NegotiationBuilder(f"{machine.name}_det")
    for agent in ["I", "P", *tape]:
        builder.add_agent(agent)
    builder.add_atom("n0", ["I", "P", *tape], ["init"], role="initial")
    builder.add_atom("nf", ["I", "P", *tape], ["end"], role="final")

    def guess(state: str, cell: int) -> str:
        return f"guess.{state}.{cell}"

    def cell_atom(symbol: str, cell: int) -> str:
        return f"cell.{symbol}.{cell}"

    def sweep(cell: int) -> str:
        return f"sweep.{cell}" if cell <= machine.length else "nf"

    player1 = []
    for state in machine.states:
        for cell in cells:
            name = guess(state, cell)
            builder.add_atom(name, ["I", "P"], list(machine.alphabet))
            for symbol in machine.alphabet:
                builder.add_arc(name, "I", symbol, [_config_atom(state, symbol, cell)])
                builder.add_arc(name, "P", symbol, [cell_atom(symbol, cell)])
            player1.append(name)

    for symbol in machine.alphabet:
        for cell in cells:
            name = cell_atom(symbol, cell)
            agent = tape[cell - 1]
            builder.add_atom(name, ["P", agent], [*machine.states, "release"])
            for state in machine.states:
                target = _config_atom(state, symbol, cell)
                builder.add_arc(name, "P", state, [target])
                builder.add_arc(name, agent, state, [target])
            builder.add_arc(name, "P", "release", [sweep(cell + 1)])
            builder.add_arc(name, agent, "release", ["nf"])
            player1.append(name)

    for cell in cells:
        name = sweep(cell)
        builder.add_atom(name, ["P"], list(machine.alphabet))
        for symbol in machine.alphabet:
            builder.add_arc(name, "P", symbol, [cell_atom(symbol, cell)])
        player1.append(name)

    for state in machine.states:
        kind = machine.kinds[state]
        for symbol in machine.alphabet:
            for cell in cells:
                name = _config_atom(state, symbol, cell)
                agent = tape[cell - 1]
                parties = ["I", "P", agent]
                planned = [] if machine.is_halting(state) else _planned_moves(
                    machine, reachable, state, symbol, cell
                )
                if kind is StateKind.ACCEPT:
                    builder.add_atom(name, parties, ["acc"])
                    builder.add_arc(name, "I", "acc", ["nf"])
                    builder.add_arc(name, "P", "acc", [sweep(1)])
                    builder.add_arc(name, agent, "acc", [cell_atom(symbol, cell)])
                elif not planned:
                    builder.add_atom(name, parties, ["rej"])
                    for party in parties:
                        builder.add_arc(name, party, "rej", [name])
                else:
                    builder.add_atom(name, parties, [m.label for m, _ in planned])
                    for move, target in planned:
                        builder.add_arc(name, "I", move.label, [guess(move.state, target)])
                        builder.add_arc(name, "P", move.label, [guess(move.state, target)])
                        builder.add_arc(name, agent, move.label, [cell_atom(move.symbol, cell)])
                    if kind is StateKind.EXISTENTIAL:
                        player1.append(name)

    builder.add_arc("n0", "I", "init", [guess(machine.initial, 1)])
    builder.add_arc("n0", "P", "init", [guess(machine.initial, 1)])
    for cell in cells:
        builder.add_arc("n0", tape[cell - 1], "init", [cell_atom(machine.word[cell - 1], cell)])

    negotiation = builder.build()
    logger.debug("deterministic encoding of '%s': %d atoms", machine.name, len(negotiation.atoms))
    return Arena(negotiation, frozenset(negotiation.atom_index(n) for n in player1))


def _check_name(token: str, kind: str, line: int) -> str:
    if not _NAME.fullmatch(token):
        raise ParseError(f"invalid {kind} name '{token}'", line)
    return token


def parse_atm(text: str) -> AtmSpec:
    """Parses the machine format described in the module docstring."""
    name = None
    states: list[str] = []
    kinds: dict[str, StateKind] = {}
    alphabet: list[str] = []
    word: list[str] = []
    delta: dict[tuple[str, str], tuple[Move, ...]] = {}
    pending: list[tuple[int, str, str, list[Move]]] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        keyword, _, rest = content.partition(" ")
        tokens = rest.split()
        if name is None:
            if keyword != "atm" or len(tokens) != 1:
                raise ParseError("expected 'atm <name>'", number)
            name = _check_name(tokens[0], "machine", number)
        elif keyword == "states":
            for token in tokens:
                match = _STATE.fullmatch(token)
                if match is None:
                    raise ParseError(f"expected '<state>[E|U|acc|rej]', found '{token}'", number)
                if match.group(1) in kinds:
                    raise ParseError(f"duplicate state '{match.group(1)}'", number)
                states.append(match.group(1))
                kinds[match.group(1)] = StateKind(match.group(2))
        elif keyword == "alphabet":
            for token in tokens:
                if token in alphabet:
                    raise ParseError(f"duplicate symbol '{token}'", number)
                alphabet.append(_check_name(token, "symbol", number))
        elif keyword == "input":
            word = tokens if len(tokens) > 1 else list(tokens[0]) if tokens else []
        elif keyword == "delta":
            head, arrow, moves = rest.partition("->")
            parts = head.split()
            if not arrow or len(parts) != 2 or not _MOVES.fullmatch(moves):
                raise ParseError(
                    "expected 'delta <state> <symbol> -> (<state> <symbol> <L|R>)+'", number
                )
            found = [Move(*m) for m in _MOVE.findall(moves)]
            pending.append((number, parts[0], parts[1], found))
        else:
            raise ParseError(f"unknown keyword '{keyword}'", number)

    if name is None:
        raise ParseError("expected 'atm <name>'", 1)
    if not states:
        raise ParseError("no states declared", 1)
    if not word:
        raise ParseError("the input word is empty", 1)
    for symbol in word:
        if symbol not in alphabet:
            raise ParseError(f"input symbol '{symbol}' is not in the alphabet", 1)
    for number, state, symbol, moves in pending:
        if state not in kinds or symbol not in alphabet:
            raise ParseError(f"delta for undeclared state or symbol ({state}, {symbol})", number)
        if kinds[state] in (StateKind.ACCEPT, StateKind.REJECT):
            raise ParseError(f"halting state '{state}' has moves", number)
        for move in moves:
            if move.state not in kinds or move.symbol not in alphabet:
                raise ParseError(f"move ({move.label}) names an undeclared state or symbol", number)
        if (state, symbol) in delta:
            raise ParseError(f"second delta line for ({state}, {symbol})", number)
        delta[(state, symbol)] = tuple(dict.fromkeys(moves))

    return AtmSpec(
        name=name,
        states=tuple(states),
        kinds=kinds,
        alphabet=tuple(alphabet),
        word=tuple(word),
        delta=delta,
    )


def read_atm(path: str) -> AtmSpec:
    return parse_atm(read_text(path))
