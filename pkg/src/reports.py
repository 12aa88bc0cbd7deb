"""Tabular reports built with pandas."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import asdict, is_dataclass

import pandas as pd

from src.attractor import AttractorResult
from src.negotiation import Arena, Negotiation
from src.semantics import classify, deterministic_agents


def attractor_table(arena: Arena, result: AttractorResult) -> pd.DataFrame:
    """One row per atom: owner, attractor layer and the outcome its owner's strategy picks."""
    negotiation = arena.negotiation
    strategy = {**result.strategy1, **result.strategy2}
    rows = []
    for atom in negotiation.atoms:
        index = result.index[atom.index]
        det = [negotiation.agents[a].name for a in atom.parties if a in result.deterministic_agents]
        rows.append(
            {
                "atom": atom.name,
                "owner": arena.owner(atom.index),
                "index": None if index == math.inf else int(index),
                "strategy": atom.outcomes[strategy[atom.index]].name,
                "deterministic_parties": ",".join(det),
            }
        )
    frame = pd.DataFrame(rows)
    frame["index"] = frame["index"].astype("Int64")
    return frame


def classification_table(negotiation: Negotiation) -> pd.DataFrame:
    det = deterministic_agents(negotiation)
    rows = []
    for agent in negotiation.agents:
        atoms = [atom.name for atom in negotiation.atoms if agent.index in atom.parties]
        rows.append(
            {"agent": agent.name, "deterministic": agent.index in det, "atoms": ",".join(atoms)}
        )
    return pd.DataFrame(rows)


def classification_summary(negotiation: Negotiation) -> pd.Series:
    summary = pd.Series(asdict(classify(negotiation)), name=negotiation.name)
    return summary.drop("deterministic_agents")


def records_frame(records: Iterable) -> pd.DataFrame:
    """Frame from a sequence of dataclass records, one row each."""
    return pd.DataFrame([asdict(r) if is_dataclass(r) else dict(r) for r in records])


def summarize_crosscheck(frame: pd.DataFrame) -> pd.DataFrame:
    """Counts per verdict class over the instances that were sound and of type 2."""
    if frame.empty:
        checked = frame
    else:
        checked = frame[frame["sound"].astype(bool) & frame["type2"].astype(bool)]

    def count(column: str, value: bool) -> int:
        if checked.empty:
            return 0
        return int((checked[column] == value).sum())

    return pd.DataFrame(
        [
            {
                "generated": len(frame),
                "checked": len(checked),
                "p1_wins": count("attractor_wins", True),
                "p2_wins": count("attractor_wins", False),
                "disagreements": count("agree", False),
                "strategy_failures": count("strategies_ok", False),
                "outcome_disagreements": count("outcome_agree", False),
            }
        ]
    )


def scaling_table(frame: pd.DataFrame) -> pd.DataFrame:
    """Adds |R|*|A|, time per unit of work and growth per size step to benchmark rows."""
    table = frame.sort_values("outcomes").reset_index(drop=True)
    table["work"] = table["outcomes"] * table["agents"]
    table["seconds_per_unit"] = table["seconds"] / table["work"]
    table["growth"] = table["seconds"] / table["seconds"].shift(1)
    table["work_growth"] = table["work"] / table["work"].shift(1)
    return table
