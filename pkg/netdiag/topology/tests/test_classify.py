"""Tests related to topology classification and control detection."""
import mock
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netdiag import exceptions
from netdiag.topology import (
    ControlMode,
    Dialect,
    ElementType,
    RawLink,
    RawNode,
    RawTopology,
    classify,
    descriptor_from_dict,
    descriptor_to_dict,
    detect_control_mode,
    diff_snapshots,
    id_sort_key,
    interpret,
    to_raw,
)
from netdiag.topology.generator import TopologyKind, generate_topology

T = ElementType


def _raw(nodes, links, controller="c1"):
    """Nodes are ids or (id, kind hint) pairs."""
    return RawTopology(
        [
            RawNode(*n) if isinstance(n, tuple) else RawNode(n, None)
            for n in nodes
        ],
        [RawLink(*link) for link in links],
        Dialect.NATIVE,
        controller,
    )


def _counts(descriptor):
    return dict(
        (t.prefix, c) for t, c in descriptor.type_counts().items()
    )


class TestClassify:
    def test_out_of_band_counts(self, sample_oob):
        descriptor, _links = sample_oob
        assert {
            "C": 1,
            "MS": 2,
            "SS": 0,
            "H": 2,
            "CL": 2,
            "AL": 2,
            "IL": 1,
        } == _counts(descriptor)

    def test_in_band_counts(self, sample_inband):
        descriptor, _links = sample_inband
        assert {
            "C": 1,
            "MS": 1,
            "SS": 1,
            "H": 2,
            "CL": 1,
            "AL": 2,
            "IL": 1,
        } == _counts(descriptor)

    def test_descriptor_order_and_normalized_ids(self, sample_oob):
        descriptor, links = sample_oob
        assert [
            "C_1",
            "MS_1",
            "MS_2",
            "H_1",
            "H_2",
            "CL_1",
            "CL_2",
            "AL_1",
            "AL_2",
            "IL_1",
        ] == [e.element_id for e in descriptor.elements]
        assert "s2" == descriptor.get("MS_2").raw_id
        assert ("IL_1", "MS_1", "MS_2") == tuple(links.get("IL_1"))

    def test_every_link_has_two_distinct_endpoints(self, sample_oob):
        descriptor, links = sample_oob
        assert len(descriptor.links) == len(links)
        for entry in links:
            assert entry.endpoint_a != entry.endpoint_b
            assert entry.endpoint_a in descriptor
            assert entry.endpoint_b in descriptor

    def test_ids_are_numbered_in_raw_id_order(self):
        raw = _raw(
            ["c1", ("sw-b", "switch"), ("sw-a", "switch"), "hb", "ha"],
            [
                ("x", "c1", "sw-b"),
                ("y", "c1", "sw-a"),
                ("z", "sw-a", "sw-b"),
                ("p", "ha", "sw-a"),
                ("q", "hb", "sw-b"),
            ],
        )
        descriptor, _links = classify(raw)
        assert "sw-a" == descriptor.get("MS_1").raw_id
        assert "ha" == descriptor.get("H_1").raw_id
        assert "x" == descriptor.get("CL_1").raw_id

    def test_ten_switches_sort_numerically(self):
        nodes = ["c1"] + ["s{}".format(i) for i in range(10)]
        links = [("cl{}".format(i), "c1", "s{}".format(i)) for i in range(10)]
        descriptor, _links = classify(_raw(nodes, links))
        switch_ids = [e.element_id for e in descriptor.switches]
        assert "MS_10" == switch_ids[-1]
        assert "MS_2" == switch_ids[1]

    def test_unhinted_leaf_behind_a_node_is_a_host(self):
        raw = _raw(["c1", "a", "b"], [("l1", "c1", "a"), ("l2", "a", "b")])
        descriptor, _links = classify(raw)
        assert "a" == descriptor.get("MS_1").raw_id
        assert "b" == descriptor.get("H_1").raw_id
        assert T.ACCESS_LINK == descriptor.get("AL_1").type

    def test_unhinted_leaf_pair_are_switches(self):
        raw = _raw(
            ["c1", ("s1", "switch"), "a", "b"],
            [("l1", "c1", "s1"), ("l2", "a", "b")],
        )
        descriptor, _links = classify(raw)
        assert ["a", "b"] == [
            e.raw_id for e in descriptor.of_type(T.SLAVE_SWITCH)
        ]
        assert 0 == len(descriptor.of_type(T.HOST))

    def test_unknown_controller(self):
        raw = _raw(["s1", "h1"], [("l", "s1", "h1")], controller="c9")
        with pytest.raises(exceptions.ClassificationError) as excinfo:
            classify(raw)
        assert "c9" in excinfo.value.msg

    def test_second_controller_is_unsupported(self):
        raw = _raw(
            ["c1", ("c2", "controller"), "s1"],
            [("l1", "c1", "s1"), ("l2", "c2", "s1")],
        )
        with pytest.raises(exceptions.UnsupportedTopologyError) as excinfo:
            classify(raw)
        assert "c1, c2" in excinfo.value.msg

    def test_self_loop(self):
        raw = _raw(["c1", "s1"], [("l1", "c1", "s1"), ("l2", "s1", "s1")])
        with pytest.raises(exceptions.ClassificationError) as excinfo:
            classify(raw)
        assert "l2" in excinfo.value.msg

    def test_isolated_node(self):
        raw = _raw(["c1", "s1", "s2"], [("l1", "c1", "s1")])
        with pytest.raises(exceptions.IsolationError) as excinfo:
            classify(raw)
        assert "Node s2 is not attached to any link" == excinfo.value.msg

    def test_host_to_host_link(self):
        raw = _raw(
            ["c1", "s1", ("h1", "host"), ("h2", "host")],
            [("l1", "c1", "s1"), ("l2", "h1", "s1"), ("l3", "h1", "h2")],
        )
        with pytest.raises(exceptions.ClassificationError) as excinfo:
            classify(raw)
        assert "two hosts" in excinfo.value.msg

    def test_host_to_controller_link(self):
        raw = _raw(
            ["c1", "s1", ("h1", "host")],
            [("l1", "c1", "s1"), ("l2", "h1", "c1")],
        )
        with pytest.raises(exceptions.ClassificationError) as excinfo:
            classify(raw)
        assert "h1" in excinfo.value.msg

    def test_snapshot_instant_is_monotonic_clock(self):
        with mock.patch("netdiag.topology.classify.time.monotonic") as m:
            m.return_value = 42.0
            descriptor, _links = classify(
                _raw(["c1", "s1"], [("l", "c1", "s1")])
            )
        assert 42.0 == descriptor.snapshot_instant


class TestDetectControlMode:
    def test_out_of_band(self, sample_oob):
        assert ControlMode.OUT_OF_BAND == detect_control_mode(*sample_oob)
        assert ControlMode.OUT_OF_BAND == sample_oob[0].control_mode

    def test_in_band(self, sample_inband):
        assert ControlMode.IN_BAND == detect_control_mode(*sample_inband)

    def test_no_control_link(self):
        raw = _raw(
            ["c1", ("s1", "switch"), ("s2", "switch"), "h1"],
            [("il", "s1", "s2"), ("al", "h1", "s1")],
        )
        with pytest.raises(exceptions.NoControlPathError):
            interpret(raw)

    def test_partitioned_control(self):
        raw = _raw(
            ["c1", ("s1", "switch"), ("s2", "switch"), "h1", "h2"],
            [("cl", "c1", "s1"), ("a1", "h1", "s1"), ("a2", "h2", "s2")],
        )
        with pytest.raises(exceptions.PartitionedControlError) as excinfo:
            interpret(raw)
        assert "SS_1" in excinfo.value.msg

    def test_hybrid_control_is_unsupported(self):
        raw = _raw(
            ["c1", ("s1", "switch"), ("s2", "switch"), ("s3", "switch")],
            [
                ("cl1", "c1", "s1"),
                ("cl2", "c1", "s2"),
                ("il1", "s1", "s2"),
                ("il2", "s2", "s3"),
            ],
        )
        with pytest.raises(exceptions.UnsupportedTopologyError):
            interpret(raw)

    def test_single_switch_is_out_of_band(self):
        raw = _raw(
            ["c1", "s1", "h1"], [("cl", "c1", "s1"), ("al", "h1", "s1")]
        )
        descriptor, _links = interpret(raw)
        assert ControlMode.OUT_OF_BAND == descriptor.control_mode

    def test_controller_only_network(self):
        descriptor, links = classify(_raw(["c1"], []))
        assert ControlMode.OUT_OF_BAND == detect_control_mode(
            descriptor, links
        )

    @pytest.mark.parametrize("kind", ("linear", "tree", "ring", "star"))
    @pytest.mark.parametrize("n_hosts", (4, 8, 16))
    @pytest.mark.parametrize(
        "mode", (ControlMode.OUT_OF_BAND, ControlMode.IN_BAND)
    )
    def test_generated_networks(self, kind, n_hosts, mode):
        descriptor, _links = generate_topology(
            TopologyKind.parse(kind), n_hosts, mode
        )
        n_switches = len(descriptor.switches)
        control_links = descriptor.of_type(T.CONTROL_LINK)
        if n_switches == 1:
            assert ControlMode.OUT_OF_BAND == descriptor.control_mode
            assert 1 == len(control_links)
        elif mode == ControlMode.IN_BAND:
            assert mode == descriptor.control_mode
            assert 1 == len(control_links)
            assert 1 == len(descriptor.of_type(T.MASTER_SWITCH))
        else:
            assert mode == descriptor.control_mode
            assert n_switches == len(control_links)
            assert 0 == len(descriptor.of_type(T.SLAVE_SWITCH))


class TestIdSortKey:
    def test_orders_by_type_then_number(self):
        ids = ["IL_1", "H_10", "C_1", "H_2", "MS_1", "CL_3"]
        assert ["C_1", "MS_1", "H_2", "H_10", "CL_3", "IL_1"] == sorted(
            ids, key=id_sort_key
        )


class TestDescriptorSerialization:
    def test_dict_form_omits_snapshot_instant(self, sample_oob):
        data = descriptor_to_dict(*sample_oob)
        assert "snapshot_instant" not in data
        assert "out-of-band" == data["control_mode"]
        assert {
            "link_id": "CL_1",
            "endpoint_a": "C_1",
            "endpoint_b": "MS_1",
        } == data["links"][0]

    def test_restores_descriptor(self, sample_inband):
        data = descriptor_to_dict(*sample_inband)
        descriptor, links = descriptor_from_dict(data)
        assert ControlMode.IN_BAND == descriptor.control_mode
        assert data == descriptor_to_dict(descriptor, links)

    def test_dangling_reference(self, sample_oob):
        data = descriptor_to_dict(*sample_oob)
        data["links"][0]["endpoint_b"] = "MS_7"
        with pytest.raises(exceptions.ReferentialError) as excinfo:
            descriptor_from_dict(data)
        assert "CL_1" == excinfo.value.link

    @pytest.mark.parametrize(
        "data", ({}, {"elements": [{"element_id": "C_1"}], "links": []})
    )
    def test_invalid_document(self, data):
        with pytest.raises(exceptions.InputError) as excinfo:
            descriptor_from_dict(data)
        assert "Invalid descriptor document" in excinfo.value.msg


class TestToRaw:
    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(
        kind=st.sampled_from(["linear", "ring", "star", "tree"]),
        exponent=st.integers(min_value=1, max_value=4),
        mode=st.sampled_from(list(ControlMode)),
    )
    def test_classify_recovers_generated_network(self, kind, exponent, mode):
        n_hosts = 2 ** exponent
        descriptor, links = generate_topology(
            TopologyKind.parse(kind), n_hosts, mode
        )
        again = interpret(to_raw(descriptor, links))
        assert descriptor_to_dict(descriptor, links) == descriptor_to_dict(
            *again
        )


class TestDiffSnapshots:
    def test_identical_snapshots(self, sample_oob):
        diff = diff_snapshots(sample_oob, sample_oob)
        assert ([], [], [], False) == tuple(diff)

    def test_dropped_control_link(self, sample_oob, sample_inband):
        diff = diff_snapshots(sample_oob, sample_inband)
        assert [] == diff.added
        assert ["cl2"] == diff.removed
        assert ["s2"] == diff.changed
        assert diff.rebuild_required

    def test_added_control_link(self, sample_oob, sample_inband):
        diff = diff_snapshots(sample_inband, sample_oob)
        assert ["cl2"] == diff.added
        assert [] == diff.removed
