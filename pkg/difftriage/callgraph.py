import logging
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

import networkx

from difftriage.model import DiffArtifact

logger = logging.getLogger(__name__)


class DiffCallgraph:
    """
    Caller -> callee graph restricted to the functions of one diff.

    Self references (direct recursion) are not edges: a function is never its own dependency.
    """

    def __init__(self, nodes: Iterable[str], edges: Iterable[Tuple[str, str]] = ()):
        self._graph = networkx.DiGraph()
        self._graph.add_nodes_from(sorted(set(nodes)))
        for caller, callee in sorted(set(edges)):
            if caller == callee:
                continue
            if caller not in self._graph or callee not in self._graph:
                raise ValueError(f"edge ({caller}, {callee}) references a function outside the graph")
            self._graph.add_edge(caller, callee)

    @property
    def graph(self) -> networkx.DiGraph:
        return self._graph

    @property
    def nodes(self) -> FrozenSet[str]:
        return frozenset(self._graph.nodes)

    @property
    def edges(self) -> FrozenSet[Tuple[str, str]]:
        return frozenset(self._graph.edges)

    def callees(self, name: str) -> List[str]:
        return sorted(self._graph.successors(name))

    def to_dot(self, name: str = "diff_callgraph") -> str:
        """Renders the graph as Graphviz DOT text, nodes and edges in name order."""
        lines = [f"digraph {name} {{"]
        for node in sorted(self._graph.nodes):
            lines.append(f'    "{node}";')
        for caller, callee in sorted(self._graph.edges):
            lines.append(f'    "{caller}" -> "{callee}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


class Schedule:
    """
    Summarization order of a diff callgraph.

    Functions are grouped into strongly connected components. Components are ordered callee
    first, every member of a component is listed contiguously in name order.

    Attributes:
        order (List[str]): all functions, dependencies before dependents wherever the graph allows.
        dep_map (Dict[str, List[str]]): in-graph callees of every function, sorted by name.
        components (List[Tuple[str, ...]]): the components in processing order.
    """

    def __init__(self, components: List[Tuple[str, ...]], dep_map: Dict[str, List[str]]):
        self.components = components
        self.dep_map = dep_map
        self.order: List[str] = [name for component in components for name in component]
        self._component_of: Dict[str, int] = {
            name: index for index, component in enumerate(components) for name in component
        }

    def component_of(self, name: str) -> int:
        return self._component_of[name]

    def in_cycle_with(self, name: str, other: str) -> bool:
        return self._component_of[name] == self._component_of[other]

    def external_dependencies(self, component_index: int) -> Set[int]:
        """Indices of the components the given component depends on."""
        return {
            self._component_of[callee]
            for name in self.components[component_index]
            for callee in self.dep_map[name]
            if self._component_of[callee] != component_index
        }

    def ready_components(self, completed: Set[int], started: Set[int]) -> List[int]:
        """
        Wavefront of the schedule: components not yet started whose dependencies are all complete.
        """
        return [
            index for index in range(len(self.components))
            if index not in started and self.external_dependencies(index) <= completed
        ]


def build_diff_callgraph(artifact: DiffArtifact) -> DiffCallgraph:
    """
    Builds the diff callgraph of an artifact.

    Every function becomes a node; a callee becomes an edge only if it is a diff function itself,
    calls to anything outside the diff (library functions, unchanged code) are dropped.
    """
    names = {function.display_name for function in artifact.functions}
    edges = [
        (function.display_name, callee)
        for function in artifact.functions
        for callee in function.callees
        if callee in names
    ]
    callgraph = DiffCallgraph(nodes=names, edges=edges)
    logger.debug(f"diff callgraph with {len(callgraph.nodes)} nodes and {len(callgraph.edges)} edges")
    return callgraph


def schedule(callgraph: DiffCallgraph) -> Schedule:
    """
    Computes the summarization order of a diff callgraph.

    The graph is condensed into strongly connected components, the components are ordered
    topologically callee first, ties between independent components are broken by their
    smallest member name.
    """
    graph = callgraph.graph
    condensed = networkx.condensation(graph)
    members: Dict[int, Tuple[str, ...]] = {
        node: tuple(sorted(data["members"])) for node, data in condensed.nodes(data=True)
    }
    # callee first: walk the condensation along reversed edges
    component_order = networkx.lexicographical_topological_sort(
        condensed.reverse(copy=True),
        key=lambda node: members[node][0],
    )
    components = [members[node] for node in component_order]
    dep_map = {name: callgraph.callees(name) for name in sorted(graph.nodes)}

    cycles = sum(1 for component in components if len(component) > 1)
    if cycles:
        logger.info(f"schedule contains {cycles} cycle(s) of mutually recursive functions")
    return Schedule(components=components, dep_map=dep_map)
