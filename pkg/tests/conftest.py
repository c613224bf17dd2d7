from __future__ import annotations

from pathlib import Path

import pytest

from cellannot.gateway import Gateway, MockProvider
from cellannot.graph import EdgeKind, KnowledgeGraph, NodeKind
from cellannot.ingest import build_graph, read_association_csv

DATA_DIR = Path(__file__).parent / "data"

# Top differentially expressed markers of the bundled blood walkthrough.
BLOOD_MARKERS = ["IL7R", "TMSB10", "CD4", "ITGB1", "LTB", "TRAC", "AQP3", "LDHB", "IL32", "MAL"]


@pytest.fixture(scope="session")
def demo_graph() -> KnowledgeGraph:
    """Graph built from the bundled association fixture (blood walkthrough)."""
    return build_graph(read_association_csv(DATA_DIR / "expected_associations.csv"))


@pytest.fixture
def annotation_gateway() -> Gateway:
    """Scripted mock for the blood walkthrough's selection/annotation turns."""
    return Gateway(MockProvider.from_script_file(DATA_DIR / "annotation_script.json"))


@pytest.fixture
def blood_markers() -> list[str]:
    return list(BLOOD_MARKERS)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].removeprefix("test_").replace("_", " ")
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {outcome}: {name}")


@pytest.fixture
def cd4_graph() -> KnowledgeGraph:
    """Small hand-built graph around the CD4 / T cell neighborhood.

    Includes an unrelated Brain/Astrocyte corner so tissue scoping has
    something to exclude.
    """
    g = KnowledgeGraph()
    cd4 = g.upsert_node(NodeKind.MARKER, "CD4")
    il7r = g.upsert_node(NodeKind.MARKER, "IL7R")
    cd4_pos = g.upsert_node(NodeKind.FEATURE_FUNCTION, "CD4+")
    central_memory = g.upsert_node(NodeKind.FEATURE_FUNCTION, "Central Memory")
    t_cell_name = g.upsert_node(NodeKind.CELL_NAME, "Central Memory CD4+ T cell")
    t_cell = g.upsert_node(NodeKind.BROAD_CELL_TYPE, "T cell")
    peripheral_blood = g.upsert_node(NodeKind.TISSUE, "Peripheral blood", {"tissue_class": "Blood"})
    blood = g.upsert_node(NodeKind.TISSUE, "Blood", {"tissue_class": "Blood"})

    g.add_edge(t_cell_name, EdgeKind.EXPRESSES, cd4)
    g.add_edge(t_cell_name, EdgeKind.EXPRESSES, il7r)
    g.add_edge(t_cell_name, EdgeKind.IS_A, t_cell)
    g.add_edge(t_cell_name, EdgeKind.HAS_FEATURE_FUNCTION, cd4_pos)
    g.add_edge(t_cell_name, EdgeKind.HAS_FEATURE_FUNCTION, central_memory)
    g.add_edge(cd4, EdgeKind.MARK, cd4_pos)
    g.add_edge(cd4, EdgeKind.SUGGESTS_BROAD_TYPE, t_cell)
    g.add_edge(il7r, EdgeKind.SUGGESTS_BROAD_TYPE, t_cell)
    g.add_edge(t_cell_name, EdgeKind.LOCATED_IN, peripheral_blood)
    g.add_edge(t_cell_name, EdgeKind.LOCATED_IN, blood)

    gfap = g.upsert_node(NodeKind.MARKER, "GFAP")
    astro_name = g.upsert_node(NodeKind.CELL_NAME, "Mature Astrocyte")
    astro = g.upsert_node(NodeKind.BROAD_CELL_TYPE, "Astrocyte")
    brain = g.upsert_node(NodeKind.TISSUE, "Brain", {"tissue_class": "Brain"})
    g.add_edge(astro_name, EdgeKind.EXPRESSES, gfap)
    g.add_edge(astro_name, EdgeKind.IS_A, astro)
    g.add_edge(gfap, EdgeKind.SUGGESTS_BROAD_TYPE, astro)
    g.add_edge(astro_name, EdgeKind.LOCATED_IN, brain)
    return g.finalize()
