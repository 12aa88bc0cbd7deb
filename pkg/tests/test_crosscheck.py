"""Tests for the crosscheck module."""

import argparse
import os
import shutil

import pytest

from src.atm_encoding import read_atm
from src.crosscheck import (
    CrosscheckRecord,
    attractor_applicable,
    benchmark,
    check_arena,
    check_machine,
    run,
    run_benchmark,
)
from src.game_graph import DEFAULT_MAX_MOVES
from src.semantics import DEFAULT_MAX_MARKINGS
from tests.conftest import MACHINES_DIR, load_fixture


def _args(**overrides) -> argparse.Namespace:
    values = {
        "count": 3,
        "seed": 0,
        "max_agents": 3,
        "max_atoms": 5,
        "max_outcomes": 2,
        "max_markings": DEFAULT_MAX_MARKINGS,
        "max_moves": DEFAULT_MAX_MOVES,
        "machines_dir": None,
    }
    values.update(overrides)
    return argparse.Namespace(**values)


def _record(instance, agree=True):
    return CrosscheckRecord(
        instance=instance,
        name=f"random0_{instance}",
        agents=2,
        atoms=3,
        outcomes=4,
        markings=5,
        sound=True,
        type2=True,
        attractor_wins=True,
        general_wins=agree,
        strategies_ok=True,
        agree=agree,
    )


@pytest.mark.parametrize(
    "name, applicable",
    [("fig2", True), ("fig1_right", True), ("fig1_left_broken", False), ("fig5", False)],
)
def test_attractor_applicable(name, applicable):
    """Test that only sound weakly deterministic type 2 arenas qualify."""
    # Act & Assert
    assert attractor_applicable(load_fixture(name)) is applicable


def test_check_arena_agrees_on_fig2(_fig2):
    """Test that both solvers give Player 1 the win and the strategies replay."""
    # Act
    record = check_arena(_fig2, instance=4)

    # Assert
    assert record.instance == 4
    assert record.sound and record.type2
    assert record.attractor_wins is True
    assert record.general_wins is True
    assert record.agree is True
    assert record.strategies_ok is True
    assert record.outcome_agree is None


def test_check_arena_skips_verdicts_outside_the_attractor_class(_fig5):
    """Test that an arena that is not weakly deterministic only gets its structure recorded."""
    # Act
    record = check_arena(_fig5)

    # Assert
    assert record.sound
    assert not record.type2
    assert record.attractor_wins is None
    assert record.agree is None


@pytest.mark.parametrize("name", ["first_a", "universal_aa"])
def test_check_machine_agrees_with_direct_evaluation(_machines_dir, name):
    """Test both encodings of a machine against its direct acceptance."""
    # Arrange
    machine = read_atm(os.path.join(_machines_dir, f"{name}.atm"))

    # Act
    records = check_machine(machine)

    # Assert
    assert [record.encoding for record in records] == ["nondeterministic", "deterministic"]
    for record in records:
        assert record.agree
        assert record.structure_ok


def test_run_reports_disagreements(mocker, _fig2, capsys):
    """Test that run counts instances where the solvers disagree."""
    # Arrange
    mocker.patch("src.crosscheck.random_arenas", return_value=[_fig2, _fig2])
    mock_check = mocker.patch(
        "src.crosscheck.check_arena", side_effect=[_record(0), _record(1, agree=False)]
    )

    # Act
    failures = run(_args(count=2))

    # Assert
    assert failures == 1
    assert mock_check.call_count == 2
    output = capsys.readouterr().out
    assert "Cross-checking 2 random arenas with seed 0..." in output
    assert "Instance 1 (random0_1)" in output


def test_run_skips_instances_that_fail(mocker, _fig2, capsys):
    """Test that an error on one instance is printed and the run goes on."""
    # Arrange
    mocker.patch("src.crosscheck.random_arenas", return_value=[_fig2, _fig2])
    mocker.patch("src.crosscheck.check_arena", side_effect=[ValueError("too big"), _record(1)])

    # Act
    failures = run(_args(count=2))

    # Assert
    assert failures == 0
    assert "Error processing instance 0: too big" in capsys.readouterr().out


def test_run_checks_machines(tmp_path, capsys):
    """Test that run evaluates every machine file of the directory."""
    # Arrange
    shutil.copy(os.path.join(MACHINES_DIR, "first_a.atm"), tmp_path)

    # Act
    failures = run(_args(count=0, machines_dir=str(tmp_path)))

    # Assert
    assert failures == 0
    output = capsys.readouterr().out
    assert "nondeterministic: accepts=True player1_wins=True structure_ok=True ok" in output
    assert "MISMATCH" not in output


def test_benchmark_records_chain_sizes():
    """Test that every size and agent count gets one timing."""
    # Act
    records = benchmark([100, 200], [2, 3], repeats=1)

    # Assert
    assert [(r.outcomes, r.agents) for r in records] == [
        (101, 2),
        (201, 2),
        (101, 3),
        (201, 3),
    ]
    assert all(r.seconds >= 0 for r in records)


def test_run_benchmark_saves_chart(mocker, tmp_path):
    """Test that run_benchmark hands the scaling table to the chart generator."""
    # Arrange
    mock_chart = mocker.patch("src.crosscheck.generate_scaling_chart")
    args = argparse.Namespace(
        sizes="100, 200", agents="2", repeats=1, plot=False, save_html_dir=str(tmp_path)
    )

    # Act
    exit_code = run_benchmark(args)

    # Assert
    assert exit_code == 0
    table = mock_chart.call_args.args[0]
    assert table["outcomes"].tolist() == [101, 201]
    assert mock_chart.call_args.kwargs == {"output_dir": str(tmp_path)}


def test_run_benchmark_without_chart(mocker):
    """Test that no chart is drawn unless asked for."""
    # Arrange
    mock_chart = mocker.patch("src.crosscheck.generate_scaling_chart")
    args = argparse.Namespace(sizes="100", agents="2", repeats=1, plot=False, save_html_dir=None)

    # Act
    run_benchmark(args)

    # Assert
    mock_chart.assert_not_called()


@pytest.mark.integration
def test_crosscheck_500_random_arenas():
    """Test that the solvers agree on 500 generated arenas and every machine."""
    # Arrange
    args = _args(
        count=500, seed=0, max_agents=6, max_atoms=8, max_outcomes=3, machines_dir=MACHINES_DIR
    )

    # Act
    failures = run(args)

    # Assert
    assert failures == 0


@pytest.mark.integration
def test_attractor_time_grows_linearly():
    """Test near-linear growth over 10^3, 10^4 and 10^5 outcomes and the 2 s bound."""
    # Act
    records = benchmark([1000, 10000, 100000], [2], repeats=5)

    # Assert
    assert [r.outcomes for r in records] == [1001, 10001, 100001]
    per_outcome = [r.seconds / r.outcomes for r in records]
    for smaller, larger in zip(per_outcome, per_outcome[1:]):
        assert larger <= 2.5 * smaller
    assert records[-1].seconds < 2.0
