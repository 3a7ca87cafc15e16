import random

from hypothesis import given, settings, strategies

from difftriage.callgraph import DiffCallgraph, build_diff_callgraph, schedule
from difftriage.ingest import preprocess
from tests import TestBase, added, artifact_of

MAX_NODES = 200


@strategies.composite
def random_graphs(draw, acyclic: bool = False):
    size = draw(strategies.integers(min_value=1, max_value=MAX_NODES))
    density = draw(strategies.floats(min_value=0.0, max_value=3.0))
    rng = random.Random(draw(strategies.integers(min_value=0, max_value=2 ** 32)))
    names = [f"f{index}" for index in range(size)]
    edges = []
    for _ in range(int(size * density)):
        caller, callee = rng.randrange(size), rng.randrange(size)
        if acyclic:
            # callers only call functions with a higher index
            if caller == callee:
                continue
            caller, callee = min(caller, callee), max(caller, callee)
        edges.append((names[caller], names[callee]))
    return names, edges


def random_dags():
    return random_graphs(acyclic=True)


class TestCallgraph(TestBase):

    def test_chain_is_scheduled_callee_first(self):
        # GIVEN
        artifact = preprocess(self._chain_artifact())

        # WHEN
        callgraph = build_diff_callgraph(artifact)
        order = schedule(callgraph)

        # THEN
        self.assertEqual(["FUN_401300", "FUN_401200", "mod_401000_401100"], order.order)
        self.assertEqual(
            {("mod_401000_401100", "FUN_401200"), ("FUN_401200", "FUN_401300")},
            callgraph.edges,
        )
        self.assertEqual(["FUN_401200"], order.dep_map["mod_401000_401100"])

    def test_library_calls_are_not_edges(self):
        # GIVEN
        artifact = artifact_of(
            added("1000", "void FUN_1000() { printf(); FUN_2000(); }", callees=["printf", "FUN_2000"]),
        )

        # WHEN
        callgraph = build_diff_callgraph(artifact)

        # THEN
        self.assertEqual(frozenset({"FUN_1000"}), callgraph.nodes)
        self.assertEqual(frozenset(), callgraph.edges)

    def test_self_loop_is_dropped(self):
        # WHEN
        callgraph = DiffCallgraph(nodes=["a", "b"], edges=[("a", "a"), ("a", "b")])
        order = schedule(callgraph)

        # THEN
        self.assertEqual(frozenset({("a", "b")}), callgraph.edges)
        self.assertEqual([("b",), ("a",)], order.components)

    def test_mutual_recursion_is_one_component(self):
        # GIVEN
        callgraph = DiffCallgraph(
            nodes=["main", "even", "odd", "leaf"],
            edges=[("main", "even"), ("even", "odd"), ("odd", "even"), ("odd", "leaf")],
        )

        # WHEN
        order = schedule(callgraph)

        # THEN
        self.assertEqual([("leaf",), ("even", "odd"), ("main",)], order.components)
        self.assertEqual(["leaf", "even", "odd", "main"], order.order)
        self.assertTrue(order.in_cycle_with("even", "odd"))
        self.assertFalse(order.in_cycle_with("main", "odd"))

    def test_edge_outside_graph_is_rejected(self):
        with self.assertRaises(ValueError):
            DiffCallgraph(nodes=["a"], edges=[("a", "b")])

    def test_independent_components_are_ordered_by_name(self):
        # WHEN
        order = schedule(DiffCallgraph(nodes=["c", "a", "b"]))

        # THEN
        self.assertEqual(["a", "b", "c"], order.order)

    def test_wavefront(self):
        # GIVEN
        order = schedule(DiffCallgraph(nodes=["a", "b", "c"], edges=[("a", "b"), ("a", "c")]))

        # WHEN
        first = order.ready_components(completed=set(), started=set())

        # THEN
        self.assertEqual([order.component_of("b"), order.component_of("c")], first)
        started = set(first)
        self.assertEqual([], order.ready_components(completed={order.component_of("b")}, started=started))
        self.assertEqual(
            [order.component_of("a")],
            order.ready_components(completed=started, started=started),
        )

    def test_dot_output(self):
        # GIVEN
        callgraph = DiffCallgraph(nodes=["b", "a"], edges=[("a", "b")])

        # WHEN
        dot = callgraph.to_dot()

        # THEN
        self.assertEqual('digraph diff_callgraph {\n    "a";\n    "b";\n    "a" -> "b";\n}\n', dot)

    @settings(max_examples=100, deadline=None)
    @given(random_dags())
    def test_dag_dependencies_come_first(self, graph):
        names, edges = graph
        order = schedule(DiffCallgraph(nodes=names, edges=edges))

        position = {name: index for index, name in enumerate(order.order)}
        self.assertEqual(sorted(names), sorted(order.order))
        for caller, callee in edges:
            self.assertLess(position[callee], position[caller])
        self.assertTrue(all(len(component) == 1 for component in order.components))

    @settings(max_examples=100, deadline=None)
    @given(random_graphs())
    def test_components_are_contiguous_and_dependencies_come_first(self, graph):
        names, edges = graph
        order = schedule(DiffCallgraph(nodes=names, edges=edges))

        self.assertEqual(sorted(names), sorted(order.order))
        for component in order.components:
            self.assertEqual(list(component), sorted(component))
        component_position = {index: index for index in range(len(order.components))}
        for caller, callee in edges:
            if order.in_cycle_with(caller, callee):
                continue
            self.assertLess(
                component_position[order.component_of(callee)],
                component_position[order.component_of(caller)],
            )

    @settings(max_examples=100, deadline=None)
    @given(random_graphs())
    def test_schedule_is_deterministic(self, graph):
        names, edges = graph

        first = schedule(DiffCallgraph(nodes=names, edges=edges))
        second = schedule(DiffCallgraph(nodes=list(reversed(names)), edges=list(reversed(edges))))

        self.assertEqual(first.components, second.components)
