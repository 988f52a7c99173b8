import pytest

from cliquegrowth import Graph, parse_graph

# 8-vertex test graph with exactly six maximal cliques:
# {1,2}, {2,7}, {4,8}, {7,8}, {4,5,6}, {2,3,4,5}
FIG1_EDGES = """\
1 2
2 3
2 4
2 5
2 7
3 4
3 5
4 5
4 6
4 8
5 6
7 8
"""


@pytest.fixture(scope="session")
def fig1() -> Graph:
    return parse_graph(FIG1_EDGES)


def idx(g: Graph, *labels: int) -> tuple[int, ...]:
    """Map vertex labels to internal indices."""
    return tuple(g.index(lab) for lab in labels)


def labs(g: Graph, verts) -> tuple[int, ...]:
    """Map internal indices back to labels, sorted."""
    return tuple(sorted(g.labels[v] for v in verts))
