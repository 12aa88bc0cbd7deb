"""Module for generating charts."""

import os

import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

OWNER_COLORS = {1: "royalblue", 2: "darkorange"}
OUTSIDE_LABEL = "outside"


def _layer_positions(table: pd.DataFrame) -> pd.Series:
    """x position per atom; atoms outside the attractor go one column past the last layer."""
    depth = int(table["index"].max()) + 1 if table["index"].notna().any() else 0
    return table["index"].fillna(depth).astype(int)


def _add_layer_bands(fig: go.Figure, positions: pd.Series, has_outside: bool):
    """Shades every other attractor layer, and the outside column in red."""
    last = int(positions.max()) if not positions.empty else -1
    layers = last if has_outside else last + 1
    for layer in range(0, layers, 2):
        fig.add_vrect(
            x0=layer - 0.5,
            x1=layer + 0.5,
            fillcolor="rgba(0, 0, 255, 0.08)",
            layer="below",
            line_width=0,
            row=1,
            col=1,
        )
    if has_outside:
        fig.add_vrect(
            x0=last - 0.5,
            x1=last + 0.5,
            fillcolor="rgba(255, 0, 0, 0.15)",
            layer="below",
            line_width=0,
            row=1,
            col=1,
        )


def _save_or_show(fig: go.Figure, output_dir: str | None, filename: str):
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        chart_filename = os.path.join(output_dir, filename)
        fig.write_html(chart_filename)
        print(f"Chart saved to {chart_filename}")
    else:
        fig.show()


def generate_attractor_chart(
    name: str,
    table: pd.DataFrame,
    output_dir: str | None = None,
):
    """Generates and either saves or displays the attractor layers of an arena.

    Args:
        name: The negotiation name, used in the title and file name.
        table: Attractor table with columns atom, owner, index and strategy.
        output_dir: If provided, saves the chart as an HTML file in this directory.
                    If None, opens the chart in a web browser.
    """
    if table.empty:
        print("No data to plot.")
        return

    positions = _layer_positions(table)
    has_outside = bool(table["index"].isna().any())

    fig = make_subplots(
        rows=2,
        cols=1,
        shared_xaxes=True,
        vertical_spacing=0.05,
        row_heights=[0.7, 0.3],
    )

    for owner, color in OWNER_COLORS.items():
        mask = table["owner"] == owner
        fig.add_trace(
            go.Scatter(
                x=positions[mask],
                y=table.loc[mask, "atom"],
                mode="markers+text",
                text=table.loc[mask, "strategy"],
                textposition="middle right",
                marker={"size": 14, "color": color},
                name=f"Player {owner}",
            ),
            row=1,
            col=1,
        )

    counts = positions.value_counts().sort_index()
    fig.add_trace(
        go.Bar(x=counts.index, y=counts.values, name="Atoms per layer", marker_color="gray"),
        row=2,
        col=1,
    )

    ticks = sorted(positions.unique())
    labels = [OUTSIDE_LABEL if has_outside and t == ticks[-1] else str(t) for t in ticks]
    fig.update_layout(
        title_text=f"Attractor layers of {name}",
        template="plotly_white",
        legend_title="Owner",
    )
    fig.update_xaxes(tickvals=ticks, ticktext=labels, title_text="Layer", row=2, col=1)
    fig.update_yaxes(title_text="Atom", row=1, col=1)
    fig.update_yaxes(title_text="Count", row=2, col=1)

    _add_layer_bands(fig, positions, has_outside)
    _save_or_show(fig, output_dir, f"{name.replace('/', '_')}_attractor_chart.html")


def generate_scaling_chart(
    table: pd.DataFrame,
    output_dir: str | None = None,
):
    """Generates and either saves or displays attractor timings against |R|*|A|.

    Args:
        table: Benchmark rows from reports.scaling_table.
        output_dir: If provided, saves the chart as an HTML file in this directory.
                    If None, opens the chart in a web browser.
    """
    if table.empty:
        print("No data to plot.")
        return

    fig = make_subplots(
        rows=2,
        cols=1,
        shared_xaxes=True,
        vertical_spacing=0.05,
        row_heights=[0.6, 0.4],
    )
    for agents, rows in table.groupby("agents"):
        fig.add_trace(
            go.Scatter(
                x=rows["work"],
                y=rows["seconds"],
                mode="lines+markers",
                name=f"Seconds ({agents} agents)",
                line={"width": 2},
            ),
            row=1,
            col=1,
        )
        fig.add_trace(
            go.Scatter(
                x=rows["work"],
                y=rows["seconds_per_unit"],
                mode="lines+markers",
                name=f"Seconds per unit ({agents} agents)",
                line={"width": 1, "dash": "dash"},
            ),
            row=2,
            col=1,
        )

    fig.update_layout(
        title_text="Attractor computation time",
        template="plotly_white",
        legend_title="Series",
    )
    fig.update_xaxes(type="log", title_text="|R| * |A|", row=2, col=1)
    fig.update_xaxes(type="log", row=1, col=1)
    fig.update_yaxes(type="log", title_text="Seconds", row=1, col=1)
    fig.update_yaxes(title_text="Seconds per unit", row=2, col=1)

    _save_or_show(fig, output_dir, "attractor_scaling_chart.html")
