import logging
from pathlib import Path
from typing import Union

import networkx as nx
from pyvis.network import Network

from cube_hamiltonian.dynamics import ULG, ulg_to_networkx

logger = logging.getLogger(__name__)

TAG_COLORS = {"I": "#888888", "G": "#d62728", "Gd": "#1f77b4"}


def export_graphml(ulg: ULG, path: Union[str, Path]) -> Path:
    path = Path(path)
    nx.write_graphml(ulg_to_networkx(ulg), path)
    logger.info("wrote %d-vertex graph to %s", ulg.vertex_count, path)
    return path


def export_html(ulg: ULG, path: Union[str, Path]) -> Path:
    """Interactive view; gate edges are coloured by their tag."""
    path = Path(path)
    graph = ulg_to_networkx(ulg)
    net = Network(height="750px", width="100%", notebook=False)
    for v, data in graph.nodes(data=True):
        color = "#2ca02c" if data["initial"] else "#ff7f0e" if data["terminal"] else "#97c2fc"
        net.add_node(v, label=data["label"], title=data["label"], color=color)
    for u, v, data in graph.edges(data=True):
        net.add_edge(u, v, title=data["rule"], color=TAG_COLORS.get(data["tag"], "#888888"))
    net.write_html(str(path))
    logger.info("wrote interactive graph to %s", path)
    return path


def export_graph(ulg: ULG, path: Union[str, Path]) -> Path:
    """GraphML for .graphml paths, HTML otherwise."""
    path = Path(path)
    if path.suffix == ".graphml":
        return export_graphml(ulg, path)
    return export_html(ulg, path)
