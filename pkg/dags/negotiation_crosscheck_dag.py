"""Module containing the Negotiation Cross-check DAG."""

from __future__ import annotations

import argparse
import json

import pendulum

from airflow import DAG
from airflow.models import Variable
from airflow.operators.python import PythonOperator

from src.crosscheck import run
from src.game_graph import DEFAULT_MAX_MOVES
from src.semantics import DEFAULT_MAX_MARKINGS


def _run_crosscheck():
    """
    Fetches configuration from an Airflow Variable and cross-checks the solvers.

    The DAG expects an Airflow Variable named 'negotiation_crosscheck_config'
    containing a JSON object with the following structure:

    {
        "count": 500,
        "seed": 0,
        "max_agents": 6,
        "max_atoms": 8,
        "max_outcomes": 3,
        "machines_dir": "/opt/airflow/machines"
    }

    The task fails when the solvers disagree on any instance.
    """
    config_str = Variable.get("negotiation_crosscheck_config", default_var="{}")
    config = json.loads(config_str)

    default_args = {
        "count": 500,
        "seed": int(pendulum.now("UTC").format("YYYYMMDD")),
        "max_agents": 6,
        "max_atoms": 8,
        "max_outcomes": 3,
        "max_markings": DEFAULT_MAX_MARKINGS,
        "max_moves": DEFAULT_MAX_MOVES,
        "machines_dir": "/opt/airflow/machines",
    }

    final_args = {**default_args, **config}
    args = argparse.Namespace(**final_args)

    if args.count < 1:
        raise ValueError(
            "A positive count must be provided in the 'negotiation_crosscheck_config' Variable."
        )

    failures = run(args)
    if failures:
        raise ValueError(f"Cross-check found {failures} failing instances.")


with DAG(
    dag_id="negotiation_crosscheck",
    start_date=pendulum.yesterday("UTC"),
    schedule_interval="0 0 * * *",  # Run daily at midnight
    catchup=False,
    tags=["negotiation"],
    doc_md=_run_crosscheck.__doc__,
) as dag:
    run_negotiation_crosscheck = PythonOperator(
        task_id="run_negotiation_crosscheck",
        python_callable=_run_crosscheck,
    )
