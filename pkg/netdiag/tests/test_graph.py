"""Tests related to netdiag.graph module."""
import json

import networkx as nx
import pytest

from netdiag import exceptions
from netdiag.graph import (
    DependencyGraph,
    Edge,
    EdgeClass,
    ExportFormat,
    Vertex,
    add_inter_edges,
    assemble,
    build_model,
    export,
    import_graph,
    is_sorted,
    summary,
    topological_sort,
)
from netdiag.templates import (
    LayerTag,
    TemplateProfile,
    VertexKind,
    instantiate_all,
)
from netdiag.topology import ControlMode, ElementType
from netdiag.topology.generator import TopologyKind, generate_topology

TABLE = TemplateProfile.table_compat()
ADAPTIVE = TemplateProfile.degree_adaptive()


def _vertex(index, label, owner, kind=VertexKind.CPU):
    return Vertex(index, label, kind, kind.layer, owner, 0, 0)


def _inter_targets(g, link_label):
    source = g.vertex(link_label).index
    return sorted(
        g.at(e.target).label
        for e in g.edges_of(EdgeClass.E_INTER)
        if e.source == source
    )


class TestAssemble:
    def test_disjoint_union_in_fragment_order(self, sample_oob):
        g = assemble(instantiate_all(*sample_oob, TABLE))
        assert 38 == len(g)
        assert list(range(38)) == [v.index for v in g.vertices]
        assert 0 == len(g.edges_of(EdgeClass.E_INTER))
        assert "C_1.CPU_1" == g.at(0).label
        assert not g.sorted

    def test_label_collision(self, sample_oob):
        fragments = instantiate_all(*sample_oob, TABLE)
        with pytest.raises(exceptions.LabelCollisionError) as excinfo:
            assemble(fragments + fragments[:1])
        assert "C_1.CPU_1" == excinfo.value.label


class TestTopologicalSort:
    def test_moves_parents_first(self):
        g = DependencyGraph(
            [_vertex(0, "X.CPU_1", "X"), _vertex(1, "Y.CPU_1", "Y")],
            [Edge(1, 0, EdgeClass.E_INTER)],
        )
        result = topological_sort(g)
        assert ["Y.CPU_1", "X.CPU_1"] == [v.label for v in result.vertices]
        assert [Edge(0, 1, EdgeClass.E_INTER)] == list(result.edges)
        assert result.sorted

    def test_cycle(self):
        g = DependencyGraph(
            [_vertex(0, "A.CPU_1", "A"), _vertex(1, "B.CPU_1", "B")],
            [
                Edge(0, 1, EdgeClass.E_INTER),
                Edge(1, 0, EdgeClass.E_INTER),
            ],
        )
        with pytest.raises(exceptions.CycleError) as excinfo:
            topological_sort(g)
        assert excinfo.value.cycle[0] == excinfo.value.cycle[-1]
        assert {"A.CPU_1", "B.CPU_1"} == set(excinfo.value.cycle)

    def test_is_idempotent(self, sample_oob_model):
        again = topological_sort(sample_oob_model)
        assert export(sample_oob_model) == export(again)

    def test_layers_ordered_within_fragments(self, sample_oob_model):
        for owner in sample_oob_model.owners:
            members = sorted(
                sample_oob_model.vertices_of(owner), key=lambda v: v.index
            )
            ranks = [v.layer.rank for v in members]
            assert sorted(ranks) == ranks

    def test_indices_are_a_permutation(self, sample_oob_model):
        indices = [v.index for v in sample_oob_model.vertices]
        assert list(range(len(sample_oob_model))) == indices


class TestAddInterEdges:
    def test_sample_oob_table_compat(self, sample_oob):
        g = build_model(*sample_oob, profile=TABLE)
        assert 38 == len(g)
        assert 10 == len(g.edges_of(EdgeClass.E_INTER))
        assert ["C_1.NC_1", "MS_1.NC_1"] == _inter_targets(g, "CL_1.LINK_1")
        assert ["C_1.NC_1", "MS_2.NC_1"] == _inter_targets(g, "CL_2.LINK_1")
        assert ["MS_1.NC_2", "MS_2.NC_2"] == _inter_targets(g, "IL_1.LINK_1")
        assert ["H_1.NC_1", "MS_1.NC_3"] == _inter_targets(g, "AL_1.LINK_1")

    def test_every_edge_goes_low_to_high(self, sample_oob_model):
        assert is_sorted(sample_oob_model)
        assert sample_oob_model.sorted

    def test_degree_adaptive_cards_take_one_link(self, sample_oob_model):
        parents = {}
        for edge in sample_oob_model.edges_of(EdgeClass.E_INTER):
            parents[edge.target] = parents.get(edge.target, 0) + 1
        cards = sample_oob_model.of_kind(VertexKind.NETWORK_CARD)
        assert 10 == len(cards)
        assert all(parents[card.index] == 1 for card in cards)
        assert 35 == len(sample_oob_model)

    def test_full_switch_runs_out_of_cards(self):
        topology = generate_topology(
            TopologyKind.star(), 5, ControlMode.OUT_OF_BAND
        )
        with pytest.raises(exceptions.CapacityError) as excinfo:
            build_model(*topology, profile=TABLE)
        assert "MS_1" in excinfo.value.msg

    def test_missing_link_vertex(self, sample_oob):
        descriptor, links = sample_oob
        nodes_only = [
            f
            for f in instantiate_all(descriptor, links, TABLE)
            if not descriptor.get(f.owner_element).type.is_link
        ]
        g = topological_sort(assemble(nodes_only))
        with pytest.raises(exceptions.ModelError) as excinfo:
            add_inter_edges(g, links)
        assert "CL_1" in excinfo.value.msg


class TestBuildModel:
    @pytest.mark.parametrize(
        "kind,n_hosts,count",
        (
            ("linear", 4, 72),
            ("linear", 8, 140),
            ("linear", 16, 276),
            ("linear", 32, 548),
            # Published tables list 1036 here; the closed form gives 1092
            ("linear", 64, 1092),
            ("linear", 128, 2180),
            ("linear", 256, 4356),
            ("tree", 4, 62),
            ("tree", 8, 130),
            ("tree", 16, 266),
            ("tree", 32, 538),
            ("tree", 64, 1082),
            ("tree", 128, 2170),
            ("tree", 256, 4346),
        ),
    )
    def test_table_compat_vertex_counts(self, kind, n_hosts, count):
        topology = generate_topology(
            TopologyKind.parse(kind), n_hosts, ControlMode.OUT_OF_BAND
        )
        g = build_model(*topology, profile=TABLE)
        assert count == len(g)
        assert is_sorted(g)

    def test_in_band_has_one_control_link_vertex(self, sample_inband):
        g = build_model(*sample_inband)
        control = [
            v
            for v in g.of_kind(VertexKind.LINK_STATE)
            if v.owner.startswith(ElementType.CONTROL_LINK.prefix + "_")
        ]
        assert ["CL_1.LINK_1"] == [v.label for v in control]

    def test_keeps_topology(self, sample_oob, sample_oob_model):
        assert sample_oob == sample_oob_model.topology

    def test_defaults_to_degree_adaptive(self, sample_oob):
        assert 35 == len(build_model(*sample_oob))


class TestDependencyGraph:
    def test_unknown_vertex(self, sample_oob_model):
        with pytest.raises(exceptions.EvidenceError) as excinfo:
            sample_oob_model.vertex("C_9.CPU_1")
        assert "C_9.CPU_1" in excinfo.value.msg

    def test_parents_and_children(self, sample_oob_model):
        cpu = sample_oob_model.vertex("H_1.CPU_1")
        card = sample_oob_model.vertex("H_1.NC_1")
        link = sample_oob_model.vertex("AL_1.LINK_1")
        assert [cpu.index, link.index] == sorted(
            sample_oob_model.parents(card.index)
        )
        assert card.index in sample_oob_model.children(cpu.index)

    def test_vertices_of_follow_template_order(self, sample_oob_model):
        assert [
            "H_2.CPU_1",
            "H_2.NC_1",
            "H_2.VNFP_1",
            "H_2.VNFC_1",
            "H_2.VNFA_1",
        ] == [v.label for v in sample_oob_model.vertices_of("H_2")]

    def test_summary(self, sample_oob):
        result = summary(build_model(*sample_oob, profile=TABLE))
        assert 38 == result["vertices"]
        assert 38 == result["edges"]
        assert 10 == result["elements"]
        assert {"inside": 28, "inter": 10} == result["edges_by_class"]
        assert 13 == result["vertices_by_kind"]["network-card"]
        assert 5 == result["vertices_by_layer"][
            LayerTag.LOGICAL_ACTIVATED.value
        ]


class TestExport:
    def test_dot(self, sample_oob):
        text = export(
            build_model(*sample_oob, profile=TABLE), ExportFormat.DOT
        )
        lines = text.decode("utf-8").splitlines()
        assert "digraph netdiag {" == lines[0]
        assert "}" == lines[-1]
        nodes = [line for line in lines if "[label=" in line]
        assert 38 == len(nodes)
        assert 28 == sum("style=dashed" in line for line in lines)
        assert 10 == sum("style=solid" in line for line in lines)

    def test_json_is_canonical(self, sample_oob):
        first = export(build_model(*sample_oob))
        second = export(build_model(*sample_oob))
        assert first == second
        assert first.endswith(b"\n")
        data = json.loads(first.decode("utf-8"))
        assert sorted(data) == list(data)

    def test_import_restores_model(self, sample_oob_model):
        document = export(sample_oob_model)
        restored = import_graph(document)
        assert document == export(restored)
        assert restored.sorted
        descriptor, links = restored.topology
        assert ControlMode.OUT_OF_BAND == descriptor.control_mode
        assert 5 == len(links)

    @pytest.mark.parametrize(
        "document",
        (
            b"[]",
            b'{"schema_version": "99"}',
            b'{"schema_version": "1", "vertices": [{}]}',
        ),
    )
    def test_import_rejects_invalid(self, document):
        with pytest.raises(exceptions.InputError) as excinfo:
            import_graph(document, "model.json")
        assert "Invalid model document" in excinfo.value.msg

    def test_import_rejects_bad_indices(self, sample_oob_model):
        data = json.loads(export(sample_oob_model).decode("utf-8"))
        data["vertices"][0]["index"] = 500
        with pytest.raises(exceptions.InputError) as excinfo:
            import_graph(json.dumps(data).encode("utf-8"))
        assert "0..V-1" in excinfo.value.msg

    def test_import_then_sort_restores_order(self, sample_oob_model):
        data = json.loads(export(sample_oob_model).decode("utf-8"))
        data["sorted"] = False
        restored = import_graph(json.dumps(data).encode("utf-8"))
        assert not restored.sorted
        assert export(sample_oob_model) == export(topological_sort(restored))


GRID_SIZES = {
    "linear": (1, 2, 3, 5, 8, 16, 32),
    "ring": (1, 2, 3, 5, 8, 16, 32),
    "star": (1, 2, 3, 5, 8, 16, 32),
    "tree": (2, 4, 8, 16, 32),
}
GRID = [
    (kind, mode, n_hosts)
    for kind, sizes in sorted(GRID_SIZES.items())
    for mode in (ControlMode.OUT_OF_BAND, ControlMode.IN_BAND)
    for n_hosts in sizes
]


def _parent_classes(g, index):
    return sorted(
        e.edge_class.value for e in g.edges if e.target == index
    )


class TestGeneratedModels:
    @pytest.mark.parametrize("kind,mode,n_hosts", GRID)
    def test_structure(self, kind, mode, n_hosts):
        topology = generate_topology(TopologyKind.parse(kind), n_hosts, mode)
        descriptor, links = topology
        g = build_model(*topology)
        assert nx.is_directed_acyclic_graph(g.to_networkx())
        assert is_sorted(g)
        assert 2 * len(links) == len(g.edges_of(EdgeClass.E_INTER))
        for vertex in g.of_kind(VertexKind.LINK_STATE):
            assert [] == g.parents(vertex.index)
            children = g.children(vertex.index)
            assert 2 == len(children)
            assert all(
                g.at(c).kind == VertexKind.NETWORK_CARD for c in children
            )
        for card in g.of_kind(VertexKind.NETWORK_CARD):
            classes = _parent_classes(g, card.index)
            assert 1 == classes.count(EdgeClass.E_INSIDE.value)
            assert classes.count(EdgeClass.E_INTER.value) <= 1
            inside = [
                p
                for p in g.parents(card.index)
                if g.at(p).kind == VertexKind.CPU
            ]
            assert [card.owner] == [g.at(p).owner for p in inside]
        assert descriptor.control_mode in (mode, ControlMode.OUT_OF_BAND)

    @pytest.mark.parametrize("kind,mode,n_hosts", GRID)
    def test_rebuild_is_byte_identical(self, kind, mode, n_hosts):
        def build():
            return export(
                build_model(
                    *generate_topology(
                        TopologyKind.parse(kind), n_hosts, mode
                    )
                )
            )

        assert build() == build()

    @pytest.mark.parametrize("kind", ("linear", "ring", "tree"))
    def test_table_compat_controller_card_is_shared(self, kind):
        topology = generate_topology(
            TopologyKind.parse(kind), 8, ControlMode.OUT_OF_BAND
        )
        descriptor, links = topology
        g = build_model(*topology, profile=TABLE)
        assert 2 * len(links) == len(g.edges_of(EdgeClass.E_INTER))
        for card in g.of_kind(VertexKind.NETWORK_CARD):
            inter = _parent_classes(g, card.index).count(
                EdgeClass.E_INTER.value
            )
            if descriptor.get(card.owner).type == ElementType.CONTROLLER:
                assert len(descriptor.switches) == inter
            else:
                assert inter <= 1


class TestDroppedAccessLink:
    def test_one_vertex_and_two_inter_edges_fewer(self):
        descriptor, links = generate_topology(
            TopologyKind.linear(), 4, ControlMode.OUT_OF_BAND
        )
        before = build_model(descriptor, links, profile=TABLE)
        after = build_model(
            descriptor.without(["AL_2"]),
            links.without(["AL_2"]),
            profile=TABLE,
        )
        assert len(before) - 1 == len(after)
        assert "AL_2.LINK_1" in before
        assert "AL_2.LINK_1" not in after
        assert len(before.edges_of(EdgeClass.E_INTER)) - 2 == len(
            after.edges_of(EdgeClass.E_INTER)
        )
        assert is_sorted(after)

    def test_without_keeps_control_mode_and_ids(self, sample_oob):
        descriptor, links = sample_oob
        trimmed = descriptor.without(["AL_1", "H_1"])
        assert descriptor.control_mode == trimmed.control_mode
        assert len(descriptor) - 2 == len(trimmed)
        assert "H_2" in [e.element_id for e in trimmed.elements]
        assert ["AL_2", "CL_1", "CL_2", "IL_1"] == sorted(
            e.link_id for e in links.without(["AL_1"])
        )
