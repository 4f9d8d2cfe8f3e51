"""Tests related to netdiag.bayes module."""
import math

import pytest

from netdiag import exceptions
from netdiag.bayes import (
    Evidence,
    NoisyOrCpt,
    PriorConfig,
    attach_parameters,
    cpt_probability,
    enumerate_disjunction,
    enumerate_joint,
)
from netdiag.defaults import DEFAULT_LEAKS
from netdiag.status import State
from netdiag.templates import VertexKind
from netdiag.testing import data

DOWN = State.DOWN
UP = State.UP


class TestCptProbability:
    @pytest.mark.parametrize(
        "states,expected",
        (
            ([UP, UP], 0.1),
            ([DOWN, UP], 0.55),
            ([UP, DOWN], 0.82),
            ([DOWN, DOWN], 1 - 0.9 * 0.5 * 0.2),
            (["down", "up"], 0.55),
        ),
    )
    def test_noisy_or(self, states, expected):
        cpt = NoisyOrCpt(0.1, (0.5, 0.2))
        assert expected == pytest.approx(cpt_probability(cpt, states))
        assert expected == pytest.approx(cpt.p_down(states))

    def test_root_is_its_leak(self):
        assert 0.01 == NoisyOrCpt(0.01, ()).p_down([])

    def test_zero_inhibition_makes_a_down_parent_certain(self):
        assert 1.0 == NoisyOrCpt(0.0, (0.0,)).p_down([DOWN])
        assert 0.0 == NoisyOrCpt(0.0, (0.0,)).p_down([UP])

    def test_arity_mismatch(self):
        with pytest.raises(exceptions.ModelError) as excinfo:
            cpt_probability(NoisyOrCpt(0.1, (0.5,)), [UP, UP])
        assert "Expected 1 " in excinfo.value.msg
        assert 4 == excinfo.value.exit_code

    def test_invalid_state(self):
        with pytest.raises(ValueError):
            cpt_probability(NoisyOrCpt(0.1, (0.5,)), ["sideways"])


class TestPriorConfig:
    def test_defaults(self):
        priors = PriorConfig()
        assert DEFAULT_LEAKS == priors.leaks
        assert {} == priors.overrides
        assert 0.0 == priors.inhibition

    def test_kind_leak_and_override(self):
        priors = PriorConfig(
            leaks={"cpu": 0.2}, overrides={"C_1.CPU_1": "0.5"}
        )
        assert 0.2 == priors.leak_for(VertexKind.CPU)
        assert {"C_1.CPU_1": 0.5} == priors.overrides
        assert DEFAULT_LEAKS["network-card"] == priors.leak_for(
            VertexKind.NETWORK_CARD
        )

    @pytest.mark.parametrize(
        "kwargs",
        (
            {"leaks": {"cpu": 1.2}},
            {"leaks": {"cpu": -0.1}},
            {"leaks": {"cpu": "lots"}},
            {"leaks": {"cpu": float("nan")}},
            {"overrides": {"C_1.CPU_1": None}},
            {"inhibition": 2},
        ),
    )
    def test_out_of_range_probabilities(self, kwargs):
        with pytest.raises(exceptions.ConfigError) as excinfo:
            PriorConfig(**kwargs)
        assert "within [0, 1]" in excinfo.value.msg

    def test_unknown_kind(self):
        with pytest.raises(exceptions.ConfigError) as excinfo:
            PriorConfig(leaks={"gpu": 0.1})
        assert "gpu" in excinfo.value.msg
        assert "network-card" in excinfo.value.msg

    @pytest.mark.parametrize(
        "document,error",
        (
            ({"leak": {}}, "unknown keys: leak"),
            (["cpu"], "expected a mapping"),
        ),
    )
    def test_from_dict_rejects(self, document, error):
        with pytest.raises(exceptions.ConfigError) as excinfo:
            PriorConfig.from_dict(document)
        assert error in excinfo.value.msg

    def test_from_empty_dict_is_default(self):
        assert PriorConfig().to_dict() == PriorConfig.from_dict(None).to_dict()

    def test_load(self, tmpdir):
        path = tmpdir.join("priors.yaml")
        path.write(
            "leaks:\n  network-card: 0.0\noverrides:\n  H_1.CPU_1: 0.3\n"
        )
        priors = PriorConfig.load(path.strpath)
        assert 0.0 == priors.leaks["network-card"]
        assert {"H_1.CPU_1": 0.3} == priors.overrides
        assert priors.to_dict() == PriorConfig.from_dict(
            priors.to_dict()
        ).to_dict()

    def test_load_without_path(self):
        assert DEFAULT_LEAKS == PriorConfig.load(None).leaks

    def test_load_missing_file(self, tmpdir):
        with pytest.raises(exceptions.ConfigError) as excinfo:
            PriorConfig.load(tmpdir.join("nope.yaml").strpath)
        assert "nope.yaml" in excinfo.value.msg


class TestAttachParameters:
    def test_one_table_per_vertex(self, sample_oob_model):
        bn = attach_parameters(sample_oob_model)
        assert len(sample_oob_model) == len(bn)
        assert 35 == len(bn.cpts)
        for vertex, cpt in zip(sample_oob_model.vertices, bn.cpts):
            assert DEFAULT_LEAKS[vertex.kind.value] == cpt.leak
            assert len(sample_oob_model.parents(vertex.index)) == len(
                cpt.inhibitions
            )
            assert all(0.0 == i for i in cpt.inhibitions)

    def test_override_and_inhibition(self, sample_oob_model):
        priors = PriorConfig(
            overrides={"C_1.CPU_1": 0.5, "C_1.VNFA_1": 0.2}, inhibition=0.1
        )
        bn = attach_parameters(sample_oob_model, priors)
        assert 0.5 == bn.cpt("C_1.CPU_1").leak
        assert NoisyOrCpt(0.2, (0.1,)) == bn.cpt("C_1.VNFA_1")
        assert DEFAULT_LEAKS["cpu"] == bn.cpt("H_1.CPU_1").leak
        assert all(
            0.1 == i for cpt in bn.cpts for i in cpt.inhibitions
        )

    def test_unknown_override(self, sample_oob_model):
        priors = PriorConfig(overrides={"Z_9.CPU_1": 0.5})
        with pytest.raises(exceptions.ConfigError) as excinfo:
            attach_parameters(sample_oob_model, priors)
        assert "Z_9.CPU_1" in excinfo.value.msg


class TestBayesianNetwork:
    def test_arity_checked_on_construction(self):
        with pytest.raises(exceptions.ModelError):
            data.network([[], [0]], [NoisyOrCpt(0.1, ()), NoisyOrCpt(0.1, ())])

    def test_table_count_checked(self):
        with pytest.raises(exceptions.ModelError):
            data.network([[], [0]], [NoisyOrCpt(0.1, ())])

    def test_index_of_unknown(self):
        bn = data.chain_network()
        assert 2 == bn.index_of("C")
        assert "C" in bn
        assert "D" not in bn
        with pytest.raises(exceptions.EvidenceError) as excinfo:
            bn.index_of("D")
        assert "Unknown vertex label: D" == excinfo.value.msg

    def test_extend_leaves_original_untouched(self):
        bn = data.chain_network()
        extended = bn.extend("OR", ["C", "A"], NoisyOrCpt(0.0, (0.0, 0.0)))
        assert 3 == len(bn)
        assert 4 == len(extended)
        assert (0, 2) == extended.parents[3]
        assert 3 == extended.index_of("OR")
        assert "OR" not in bn

    def test_extend_collision(self):
        bn = data.chain_network()
        with pytest.raises(exceptions.LabelCollisionError):
            bn.extend("B", ["A"], NoisyOrCpt(0.0, (0.0,)))

    def test_extend_arity(self):
        bn = data.chain_network()
        with pytest.raises(exceptions.ModelError):
            bn.extend("OR", ["A", "B"], NoisyOrCpt(0.0, (0.0,)))

    def test_with_cpt(self):
        bn = data.chain_network()
        changed = bn.with_cpt("A", NoisyOrCpt(0.5, ()))
        assert 0.5 == changed.cpt("A").leak
        assert 0.1 == bn.cpt("A").leak
        with pytest.raises(exceptions.ModelError):
            bn.with_cpt("A", NoisyOrCpt(0.5, (0.1,)))


class TestEvidence:
    def test_pairs_and_mapping_agree(self):
        assert Evidence({"A": "down", "B": UP}) == Evidence(
            [("B", "up"), ("A", "down"), ("A", DOWN)]
        )

    def test_conflicting_pairs(self):
        with pytest.raises(exceptions.EvidenceError) as excinfo:
            Evidence([("A", "down"), ("A", "up")])
        assert "A" in excinfo.value.msg

    def test_hard_and_soft_overlap(self):
        with pytest.raises(exceptions.EvidenceError):
            Evidence({"A": "down"}, {"A": (0.1, 0.9)})

    @pytest.mark.parametrize(
        "likelihood",
        (
            (0.0, 0.0),
            (1.5, 0.5),
            (-0.1, 0.5),
            (float("nan"), 0.5),
            (0.5,),
            "ab",
            None,
        ),
    )
    def test_invalid_likelihood(self, likelihood):
        with pytest.raises(exceptions.EvidenceError):
            Evidence(soft={"A": likelihood})

    def test_invalid_state(self):
        with pytest.raises(exceptions.EvidenceError) as excinfo:
            Evidence({"A": "broken"})
        assert "'broken'" in excinfo.value.msg

    def test_labels_and_serialization(self):
        evidence = Evidence({"B": "up", "A": "down"}, {"C": [0.05, 0.95]})
        assert ["A", "B", "C"] == evidence.labels
        assert 3 == len(evidence)
        assert [("A", "down"), ("B", "up")] == evidence.assignment()
        assert {
            "hard": {"A": "down", "B": "up"},
            "soft": {"C": [0.05, 0.95]},
        } == evidence.to_dict()

    def test_combine(self):
        combined = Evidence({"A": "down"}).combine(
            Evidence({"B": "up"}, {"C": (0.2, 0.8)})
        )
        assert ["A", "B", "C"] == combined.labels
        with pytest.raises(exceptions.EvidenceError):
            combined.combine(Evidence({"A": "up"}))
        with pytest.raises(exceptions.EvidenceError):
            combined.combine(Evidence(soft={"C": (0.8, 0.2)}))

    def test_validate(self):
        with pytest.raises(exceptions.EvidenceError):
            Evidence({"Z": "down"}).validate(data.chain_network())


class TestEnumerateJoint:
    def test_chain_prior(self):
        result = enumerate_joint(data.chain_network())
        assert 0.1 == pytest.approx(result["A"])
        assert 0.19 == pytest.approx(result["B"])
        assert 0.271 == pytest.approx(result["C"])

    def test_chain_explaining_down_leaf(self):
        result = enumerate_joint(
            data.chain_network(), Evidence({"C": "down"}), ["A", "B"]
        )
        assert ["A", "B"] == sorted(result)
        assert 0.1 / 0.271 == pytest.approx(result["A"])
        assert 0.19 / 0.271 == pytest.approx(result["B"])
        assert math.isclose(result["A"], 0.369004, abs_tol=1e-6)

    def test_soft_evidence_moves_posterior(self):
        bn = data.chain_network()
        soft = enumerate_joint(bn, Evidence(soft={"C": (0.05, 0.95)}))
        hard = enumerate_joint(bn, Evidence({"C": "down"}))
        assert 0.1 < soft["A"] < hard["A"]
        assert 1.0 == hard["C"]

    def test_disjunction(self):
        bn = data.chain_network()
        evidence = Evidence({"C": "down"})
        assert 0.19 / 0.271 == pytest.approx(
            enumerate_disjunction(bn, evidence, ["A", "B"])
        )
        assert 1.0 == pytest.approx(
            enumerate_disjunction(bn, evidence, ["C"])
        )

    def test_empty_disjunction(self):
        with pytest.raises(exceptions.EvidenceError):
            enumerate_disjunction(data.chain_network(), None, [])

    def test_size_cap(self):
        with pytest.raises(exceptions.SizeError) as excinfo:
            enumerate_joint(data.chain_network(), cap=2)
        assert 4 == excinfo.value.exit_code

    def test_contradiction(self):
        bn = data.chain_network(leak=0.0)
        with pytest.raises(exceptions.ContradictionError) as excinfo:
            enumerate_joint(bn, Evidence({"C": "down"}))
        assert 5 == excinfo.value.exit_code
        assert "C" in excinfo.value.msg
