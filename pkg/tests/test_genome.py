"""Encoding, mutation, and decoding tests."""
import math

import numpy as np
import pytest

from linksynth.genome import (EncodingConfig, Genome, decode, mutate,
                              random_genome, reflect_unit)
from linksynth.kinematics import ExtensionJoint, TwoBeamJoint


class TestRandomGenome:
    def test_length_is_seven_per_section(self):
        cfg = EncodingConfig(n_joints=8)
        g = random_genome(np.random.default_rng(0), cfg)
        assert len(g.genes) == 63
        assert g.sigma == 0.1

    def test_same_seed_same_genome(self):
        cfg = EncodingConfig()
        a = random_genome(np.random.default_rng(42), cfg)
        b = random_genome(np.random.default_rng(42), cfg)
        assert np.array_equal(a.genes, b.genes)
        assert a.sigma == b.sigma

    def test_per_gene_mean_is_uniform(self, rng):
        cfg = EncodingConfig(n_joints=1)
        samples = np.array([random_genome(rng, cfg).genes for _ in range(10_000)])
        assert np.all(np.abs(samples.mean(axis=0) - 0.5) < 0.02)


class TestReflectUnit:
    @pytest.mark.parametrize("value,expected", [
        (1.04, 0.96), (-0.04, 0.04), (0.0, 0.0), (1.0, 1.0),
        (2.0, 0.0), (-1.5, 0.5), (2.5, 0.5), (0.73, 0.73),
    ])
    def test_reflection(self, value, expected):
        assert float(reflect_unit(value)) == pytest.approx(expected, abs=1e-12)

    def test_vector_round_trip_stays_inside(self, rng):
        v = rng.normal(0.0, 5.0, 10_000)
        r = reflect_unit(v)
        assert np.all((r >= 0.0) & (r <= 1.0))


class TestMutate:
    def test_bounce_back_example(self):
        # a gene at 0.98 pushed by +0.06 lands at 0.96
        assert float(reflect_unit(0.98 + 0.06)) == pytest.approx(0.96, abs=1e-12)

    def test_zero_sigma_is_identity_on_genes(self, rng):
        cfg = EncodingConfig()
        g = Genome(rng.random(cfg.n_genes), 0.0)
        out = mutate(g, np.random.default_rng(3), cfg)
        assert np.array_equal(out.genes, g.genes)

    def test_length_preserved_and_in_range_over_chained_mutations(self, rng):
        cfg = EncodingConfig()
        g = random_genome(rng, cfg)
        for i in range(2_000):
            g = mutate(g, np.random.default_rng([9, i]), cfg)
            assert len(g.genes) == cfg.n_genes
            assert g.genes.min() >= 0.0 and g.genes.max() <= 1.0
            assert 0.0 <= g.sigma <= 1.0

    def test_length_genes_always_perturbed(self, rng):
        cfg = EncodingConfig()
        idx = cfg.length_gene_indices()
        unchanged = 0
        trials = 10_000
        for i in range(trials):
            g = random_genome(rng, cfg)
            out = mutate(g, np.random.default_rng([11, i]), cfg)
            unchanged += int(np.any(out.genes[idx] == g.genes[idx]))
        assert unchanged / trials < 1e-3

    def test_deterministic_for_fixed_stream(self, rng):
        cfg = EncodingConfig()
        g = random_genome(rng, cfg)
        a = mutate(g, np.random.default_rng(77), cfg)
        b = mutate(g, np.random.default_rng(77), cfg)
        assert np.array_equal(a.genes, b.genes) and a.sigma == b.sigma


class TestDecode:
    def test_type_gene_threshold(self):
        cfg = EncodingConfig(n_joints=1)
        genes = np.full(cfg.n_genes, 0.5)
        genes[7] = 0.10
        assert isinstance(decode(Genome(genes, 0.1), cfg).joints[0], ExtensionJoint)
        genes[7] = 0.80
        assert isinstance(decode(Genome(genes, 0.1), cfg).joints[0], TwoBeamJoint)

    def test_midpoint_header_centers_static_nodes(self):
        cfg = EncodingConfig(n_joints=1, static_pos_range=100.0)
        genes = np.full(cfg.n_genes, 0.5)
        linkage = decode(Genome(genes, 0.1), cfg)
        assert np.allclose(linkage.static_nodes, 0.0)
        lo, hi = cfg.crank_len_range
        assert linkage.crank_length == pytest.approx((lo + hi) / 2)

    def test_header_range_mapping(self):
        cfg = EncodingConfig(n_joints=1, static_pos_range=100.0)
        genes = np.full(cfg.n_genes, 0.5)
        genes[0] = 0.0   # static 1 x -> -100
        genes[1] = 1.0   # static 1 y -> +100
        genes[6] = 1.0   # crank -> max
        linkage = decode(Genome(genes, 0.1), cfg)
        assert linkage.static_nodes[0].tolist() == [-100.0, 100.0]
        assert linkage.crank_length == cfg.crank_len_range[1]

    def test_hand_built_four_bar(self):
        """14-gene vector decoding to motor + crank + one coupler joint
        anchored at the first static node, checked against the drawing."""
        cfg = EncodingConfig(n_joints=1, static_pos_range=100.0,
                             crank_len_range=(10.0, 60.0),
                             beam_len_range=(16.0, 152.0))
        genes = np.zeros(cfg.n_genes)
        genes[0] = 1.0    # static 1 at x=+100
        genes[1] = 0.5    # static 1 at y=0
        genes[2:6] = 0.5  # statics 2, 3 at the origin offset
        genes[6] = 0.4    # crank 10 + 0.4*50 = 30
        genes[7] = 0.9    # two-beam joint
        genes[8] = 0.9    # parent a: floor(0.9*5) = 4 -> crank tip
        genes[9] = 0.2    # parent b: floor(0.2*5) = 1 -> static 1
        genes[10] = 0.0   # branch 0
        genes[12] = 0.5   # length a: 16 + 0.5*136 = 84
        genes[13] = 0.25  # length b: 16 + 0.25*136 = 50
        linkage = decode(Genome(genes, 0.1), cfg)
        assert linkage.crank_length == pytest.approx(30.0)
        assert linkage.static_nodes[0].tolist() == [100.0, 0.0]
        assert len(linkage.joints) == 1
        joint = linkage.joints[0]
        assert isinstance(joint, TwoBeamJoint)
        assert (joint.parent_a, joint.parent_b, joint.branch) == (4, 1, 0)
        assert joint.length_a == pytest.approx(84.0)
        assert joint.length_b == pytest.approx(50.0)
        # beams: crank plus the two coupler beams
        assert [(b.node_a, b.node_b) for b in linkage.beams] == [(0, 4), (4, 5), (1, 5)]

    def test_duplicate_two_beam_parents_resolved(self):
        cfg = EncodingConfig(n_joints=1)
        genes = np.full(cfg.n_genes, 0.5)
        genes[7] = 0.9
        genes[8] = 0.5  # floor(0.5*5) = 2
        genes[9] = 0.5  # same -> bumped to 3
        joint = decode(Genome(genes, 0.1), cfg).joints[0]
        assert (joint.parent_a, joint.parent_b) == (2, 3)

    def test_decode_is_pure(self, rng):
        cfg = EncodingConfig()
        g = random_genome(rng, cfg)
        a = decode(g, cfg)
        b = decode(g, cfg)
        assert a.joints == b.joints
        assert np.array_equal(a.static_nodes, b.static_nodes)
        assert a.crank_length == b.crank_length

    def test_index_mapping_total_at_boundaries(self):
        cfg = EncodingConfig(n_joints=8)
        for fill in (0.0, 0.2499999, 0.25, 0.999999, 1.0):
            genes = np.full(cfg.n_genes, fill)
            linkage = decode(Genome(genes, 0.1), cfg)  # must not raise
            for joint in linkage.joints:
                if isinstance(joint, TwoBeamJoint):
                    assert joint.parent_a != joint.parent_b

    def test_length_mismatch_rejected(self):
        cfg = EncodingConfig(n_joints=2)
        with pytest.raises(ValueError):
            decode(Genome(np.full(14, 0.5), 0.1), cfg)

    def test_extension_slot_mapping(self):
        cfg = EncodingConfig(n_joints=2)
        genes = np.full(cfg.n_genes, 0.5)
        genes[7] = 0.9        # first joint: two-beam -> now 3 beams exist
        genes[14] = 0.1       # second joint: extension
        genes[16] = 0.99      # parent beam: floor(0.99*3) = 2
        genes[17] = 0.7       # end B
        genes[18] = 0.25      # angle pi/2
        genes[19] = 1.0       # length -> max
        joint = decode(Genome(genes, 0.1), cfg).joints[1]
        assert isinstance(joint, ExtensionJoint)
        assert joint.parent_beam == 2
        assert joint.end == 1
        assert joint.angle_offset == pytest.approx(math.pi / 2)
        assert joint.length == cfg.beam_len_range[1]
