"""Bundled resources: the study dataset and the fitted graph structures.

The dataset is the selected subgroup of the Zatonski et al. (1991) Lower
Silesia laryngeal cancer case-control study: 580 men cross-classified by
case status L, heavy vodka drinking V, heavy cigarette smoking C, urban
region R, older age group A and low formal education E (level 1 is the
named category throughout, so R = 1 means urban).
"""

from __future__ import annotations

from importlib import resources

from .. import graphs, tables

DATASET_NAME = "zatonski_selected.csv"


def bundled_dataset_text() -> str:
    return (resources.files(__package__) / DATASET_NAME).read_text(encoding="utf-8")


def bundled_table() -> tables.ContingencyTable:
    """The 64-cell study table over (L, V, C, R, A, E)."""
    return tables.ingest(bundled_dataset_text())


def graph_names() -> list[str]:
    root = resources.files(__package__) / "graphs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_graph(name: str) -> graphs.MixedGraph:
    """A bundled graph fixture by bare name (see ``graph_names``)."""
    path = resources.files(__package__) / "graphs" / f"{name}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise tables.DataError(f"no bundled graph named {name!r}") from None
    return graphs.MixedGraph.from_json(text)
