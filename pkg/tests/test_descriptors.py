"""Descriptor and binning tests, including a hand-traced structural case."""
import numpy as np
import pytest

from linksynth.descriptors import (GridSpec, bin_index, default_grid,
                                   descriptor_lis, descriptor_st,
                                   descriptor_wh, mean_beam_length)
from linksynth.genome import EncodingConfig, decode, random_genome
from linksynth.kinematics import Linkage, TwoBeamJoint, solve

from conftest import circle_path, rectangle_path, synthetic_trace


class TestDescriptorWh:
    def test_circle(self):
        trace = synthetic_trace(circle_path(30.0, 72))
        assert descriptor_wh(trace) == pytest.approx((60.0, 60.0))

    def test_rectangle(self):
        trace = synthetic_trace(rectangle_path(40.0, 20.0))
        assert descriptor_wh(trace) == pytest.approx((40.0, 20.0))

    def test_empty_path_invalid(self):
        trace = synthetic_trace(np.empty((0, 2)), error_count=10)
        assert descriptor_wh(trace) is None

    def test_translation_invariance(self, rng):
        path = rng.uniform(-40, 40, (30, 2))
        a = descriptor_wh(synthetic_trace(path))
        b = descriptor_wh(synthetic_trace(path + np.array([55.0, -20.0])))
        assert a == pytest.approx(b)


def hand_linkage():
    """Three two-beam joints: a stationary node hung between two statics,
    the foot hung below the crank and that node, and a high node tying in
    the third static. All three statics reach the foot in two beams."""
    statics = np.array([[30.0, 40.0], [110.0, 40.0], [35.0, 60.0]])
    la = np.sqrt(3200.0)  # puts node 5 exactly at (70, 0)
    joints = [TwoBeamJoint(1, 2, 1, la, la),
              TwoBeamJoint(4, 5, 1, 60.0, 60.0),
              TwoBeamJoint(3, 6, 0, 100.0, 100.0)]
    return Linkage(10.0, statics, joints)


class TestDescriptorLis:
    def test_uniform_beam_lengths(self):
        statics = np.array([[100.0, 0.0], [0.0, 300.0], [50.0, 300.0]])
        linkage = Linkage(40.0, statics, [TwoBeamJoint(4, 1, 0, 40.0, 40.0)])
        trace = solve(linkage, 72)
        d = descriptor_lis(linkage, trace)
        assert d[0] == pytest.approx(40.0)

    def test_lift_component_zero_for_flat_path(self):
        statics = np.array([[100.0, 0.0], [0.0, 300.0], [50.0, 300.0]])
        linkage = Linkage(40.0, statics, [])
        path = np.column_stack([np.linspace(0, 50, 20), np.zeros(20)])
        trace = synthetic_trace(path)
        assert descriptor_lis(linkage, trace)[1] == 0.0

    def test_mean_matches_hand_sum(self, rng):
        cfg = EncodingConfig()
        linkage = decode(random_genome(rng, cfg), cfg)
        # direct recomputation without the helper
        lengths = [linkage.crank_length]
        for j in linkage.joints:
            if hasattr(j, "length"):
                lengths.append(j.length)
            else:
                lengths.extend([j.length_a, j.length_b])
        assert mean_beam_length(linkage) == pytest.approx(np.mean(lengths))


class TestDescriptorSt:
    def test_crank_only(self):
        statics = np.array([[0.0, 100.0], [50.0, 100.0], [-50.0, 100.0]])
        linkage = Linkage(25.0, statics, [])
        trace = solve(linkage, 72)
        d = descriptor_st(linkage, trace)
        # statics are disconnected from the crank beam: capped at 10
        assert d == pytest.approx((25.0, 10.0, 1.0, 1.0 / 5.0))

    def test_hand_built_all_anchors_two_beams_from_foot(self):
        linkage = hand_linkage()
        trace = solve(linkage, 72)
        assert trace.error_count == 0
        assert trace.foot_index == 6
        d = descriptor_st(linkage, trace)
        expected_mean = (10.0 + 2 * np.sqrt(3200.0) + 2 * 60.0 + 2 * 100.0) / 7.0
        assert d[0] == pytest.approx(expected_mean)
        assert d[1] == 2.0  # every static node reaches the foot in 2 beams
        assert d[2] == 2.0  # foot + crank tip move; node 5 is stationary
        assert d[3] == pytest.approx(3.0 / 8.0)  # moving 4, 6, 7 of 8 nodes

    def test_structural_components_scale_invariant(self):
        linkage = hand_linkage()
        trace = solve(linkage, 72)
        base = descriptor_st(linkage, trace)
        c = 2.5
        scaled = Linkage(linkage.crank_length * c, linkage.static_nodes * c,
                         [TwoBeamJoint(j.parent_a, j.parent_b, j.branch,
                                       j.length_a * c, j.length_b * c)
                          for j in linkage.joints])
        scaled_trace = solve(scaled, 72)
        got = descriptor_st(scaled, scaled_trace)
        assert got[0] == pytest.approx(base[0] * c)
        assert got[1:] == pytest.approx(base[1:])

    def test_unresolved_foot_gives_none(self):
        statics = np.array([[200.0, 0.0], [0.0, 300.0], [50.0, 300.0]])
        linkage = Linkage(30.0, statics, [TwoBeamJoint(4, 1, 0, 20.0, 20.0)])
        trace = solve(linkage, 72)
        assert descriptor_st(linkage, trace) is None


class TestBinning:
    def test_boundary_convention(self):
        grid = GridSpec("wh", (0.0, 0.0), (300.0, 300.0), (100, 100))
        assert bin_index((0.0, 0.0), grid) == (0, 0)
        assert bin_index((300.0, 300.0), grid) == (99, 99)
        assert bin_index((150.0, 150.0), grid) == (50, 50)

    def test_out_of_range_clamps(self):
        grid = GridSpec("wh", (0.0, 0.0), (300.0, 300.0), (100, 100))
        assert bin_index((-10.0, 400.0), grid) == (0, 99)

    def test_monotone_per_dimension(self, rng):
        grid = GridSpec("lis", (0.0, 0.0), (10.0, 10.0), (100, 100))
        vals = np.sort(rng.uniform(-1, 11, 200))
        idx = [bin_index((v, 5.0), grid)[0] for v in vals]
        assert all(a <= b for a, b in zip(idx, idx[1:]))

    def test_uniform_inputs_fill_uniformly(self, rng):
        grid = GridSpec("wh", (0.0, 0.0), (1.0, 1.0), (10, 10))
        counts = np.zeros(10)
        n = 100_000
        for v in rng.random(n):
            counts[bin_index((v, 0.5), grid)[0]] += 1
        assert np.all(np.abs(counts / n - 0.1) < 0.005)

    def test_total_cells(self):
        for space in ("wh", "lis", "st", "au"):
            assert default_grid(space).total_cells == 10_000

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            GridSpec("wh", (0.0, 1.0), (1.0, 1.0), (10, 10))
