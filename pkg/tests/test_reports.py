"""Unit tests for the reports module."""

import pandas as pd
import pytest

from src.attractor import compute_attractor
from src.crosscheck import BenchmarkRecord, CrosscheckRecord
from src.reports import (
    attractor_table,
    classification_summary,
    classification_table,
    records_frame,
    scaling_table,
    summarize_crosscheck,
)


def test_attractor_table_rows(_fig2):
    """Test that the table lists owner, layer and chosen outcome per atom."""
    # Arrange
    result = compute_attractor(_fig2)

    # Act
    table = attractor_table(_fig2, result)

    # Assert
    row = table.set_index("atom").loc["n1"]
    assert row["owner"] == 1
    assert row["index"] == 2
    assert row["strategy"] == "t"
    assert row["deterministic_parties"] == "D1,D2"
    assert table.set_index("atom")["index"].isna().sum() == 2
    assert str(table["index"].dtype) == "Int64"


def test_classification_table_and_summary(_fig2):
    """Test the per-agent determinism table and the class summary."""
    # Act
    table = classification_table(_fig2.negotiation)
    summary = classification_summary(_fig2.negotiation)

    # Assert
    assert table.set_index("agent")["deterministic"].to_dict() == {
        "F": False,
        "D1": True,
        "D2": True,
        "M": False,
    }
    assert table.set_index("agent").loc["F", "atoms"] == "n0,n2,n4,nf"
    assert bool(summary["weakly_deterministic"])
    assert not bool(summary["deterministic"])


def _record(instance, sound=True, type2=True, wins=True, agree=True, strategies_ok=True):
    return CrosscheckRecord(
        instance=instance,
        name=f"r{instance}",
        agents=2,
        atoms=3,
        outcomes=4,
        markings=5,
        sound=sound,
        type2=type2,
        attractor_wins=wins if sound and type2 else None,
        general_wins=wins if sound and type2 else None,
        strategies_ok=strategies_ok if sound and type2 else None,
        agree=agree if sound and type2 else None,
    )


def test_summarize_crosscheck_counts_checked_instances():
    """Test that only sound type-2 instances are counted and None never counts as a failure."""
    # Arrange
    frame = records_frame(
        [
            _record(0),
            _record(1, wins=False),
            _record(2, sound=False),
            _record(3, type2=False),
            _record(4, agree=False),
            _record(5, strategies_ok=False),
        ]
    )

    # Act
    summary = summarize_crosscheck(frame).iloc[0]

    # Assert
    assert summary["generated"] == 6
    assert summary["checked"] == 4
    assert summary["p1_wins"] == 3
    assert summary["p2_wins"] == 1
    assert summary["disagreements"] == 1
    assert summary["strategy_failures"] == 1
    assert summary["outcome_disagreements"] == 0


def test_summarize_crosscheck_empty():
    """Test that an empty run yields zero counts."""
    # Act
    summary = summarize_crosscheck(pd.DataFrame()).iloc[0]

    # Assert
    assert summary["generated"] == 0
    assert summary["disagreements"] == 0


def test_scaling_table_adds_work_and_growth():
    """Test the derived columns of the benchmark table."""
    # Arrange
    frame = records_frame(
        [
            BenchmarkRecord(outcomes=1000, agents=2, atoms=101, seconds=0.2),
            BenchmarkRecord(outcomes=100, agents=2, atoms=11, seconds=0.02),
        ]
    )

    # Act
    table = scaling_table(frame)

    # Assert
    assert table["outcomes"].tolist() == [100, 1000]
    assert table["work"].tolist() == [200, 2000]
    assert table["seconds_per_unit"].tolist() == pytest.approx([0.0001, 0.0001])
    assert pd.isna(table["growth"].iloc[0])
    assert table["growth"].iloc[1] == pytest.approx(10.0)
    assert table["work_growth"].iloc[1] == 10.0
