import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from imgany import (
    FusionConfig,
    FusionWeights,
    ModalityFeature,
    ModalityTag,
    mean_feature,
    normalize,
    total_variance,
)
from imgany.errors import (
    DimMismatchError,
    EmptyInputError,
    NoBranchesError,
    NonFiniteError,
    ValidationError,
    ZeroVectorError,
)

from synth import random_features

TAGS = list(ModalityTag)


@st.composite
def vectors(draw, min_dim=2, max_dim=24):
    dim = draw(st.integers(min_dim, max_dim))
    vals = draw(st.lists(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False),
        min_size=dim, max_size=dim))
    v = np.asarray(vals, dtype=np.float64)
    assume(float(np.linalg.norm(v)) > 1e-6)
    return v


@st.composite
def feature_lists(draw, dim=8, min_m=1, max_m=7):
    m = draw(st.integers(min_m, max_m))
    tags = draw(st.permutations(TAGS))[:m]
    feats = []
    for tag in tags:
        feats.append(ModalityFeature(tag, draw(vectors(min_dim=dim, max_dim=dim))))
    return feats


class TestNormalize:
    def test_axis_vector(self):
        assert np.array_equal(normalize([3.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0])

    def test_symmetry(self):
        out = normalize([1.0, 1.0])
        assert out == pytest.approx([math.sqrt(2) / 2, math.sqrt(2) / 2], abs=1e-12)

    def test_seeded_random_direction_preserved(self):
        rng = np.random.default_rng(7)
        v = rng.standard_normal(64)
        out = normalize(v)
        # oracle: recompute norm and cosine from scratch
        assert abs(float(np.sqrt(np.sum(out * out))) - 1.0) <= 1e-9
        cosine = float(np.dot(out, v) / np.sqrt(np.sum(v * v)))
        assert abs(cosine - 1.0) <= 1e-9

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            normalize([0.0, 0.0, 0.0])
        with pytest.raises(ZeroVectorError):
            normalize([1e-13, 0.0])

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteError):
            normalize([1.0, float("nan")])
        with pytest.raises(NonFiniteError):
            normalize([float("inf"), 0.0])

    def test_huge_components_survive(self):
        out = normalize([1e300, 1e300])
        assert out == pytest.approx([math.sqrt(2) / 2, math.sqrt(2) / 2], abs=1e-12)

    @given(v=vectors())
    def test_idempotent(self, v):
        once = normalize(v)
        twice = normalize(once)
        assert np.max(np.abs(twice - once)) <= 1e-12


class TestMeanFeature:
    def test_single_feature_identity(self):
        [f] = random_features(np.random.default_rng(0), 1, 16)
        assert np.array_equal(mean_feature([f]), f.embedding)

    def test_midpoint(self):
        feats = [ModalityFeature(ModalityTag.TEXT, [1.0, 0.0]),
                 ModalityFeature(ModalityTag.AUDIO, [0.0, 1.0])]
        assert np.array_equal(mean_feature(feats), [0.5, 0.5])

    def test_matches_scalar_loop(self):
        feats = random_features(np.random.default_rng(3), 3, 64)
        got = mean_feature(feats)
        for j in range(64):
            expected = sum(float(f.embedding[j]) for f in feats) / 3.0
            assert got[j] == pytest.approx(expected, abs=1e-12)

    def test_not_renormalized(self):
        feats = [ModalityFeature(ModalityTag.TEXT, [1.0, 0.0]),
                 ModalityFeature(ModalityTag.AUDIO, [0.0, 1.0])]
        assert float(np.linalg.norm(mean_feature(feats))) < 0.9

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            mean_feature([])

    def test_dim_mismatch_rejected(self):
        feats = [ModalityFeature(ModalityTag.TEXT, [1.0, 0.0]),
                 ModalityFeature(ModalityTag.AUDIO, [0.0, 1.0, 0.0])]
        with pytest.raises(DimMismatchError):
            mean_feature(feats)

    @given(feats=feature_lists(), data=st.data())
    def test_permutation_invariant(self, feats, data):
        shuffled = data.draw(st.permutations(feats))
        assert np.array_equal(mean_feature(feats), mean_feature(shuffled))


class TestTotalVariance:
    def test_identical_features_zero(self):
        rng = np.random.default_rng(11)
        u = rng.standard_normal(32)
        feats = [ModalityFeature(t, u) for t in TAGS[:3]]
        assert total_variance(feats) == 0.0

    def test_single_feature_zero(self):
        [f] = random_features(np.random.default_rng(5), 1, 16)
        assert total_variance([f]) == 0.0

    def test_orthogonal_pair(self):
        feats = [ModalityFeature(ModalityTag.TEXT, [1.0, 0.0]),
                 ModalityFeature(ModalityTag.AUDIO, [0.0, 1.0])]
        assert total_variance(feats) == pytest.approx(0.5, abs=1e-12)

    def test_spread_pair_above_threshold(self):
        feats = [ModalityFeature(ModalityTag.TEXT, [1.0, 0.0]),
                 ModalityFeature(ModalityTag.AUDIO, [-0.8, 0.6])]
        assert total_variance(feats) == pytest.approx(0.9, abs=1e-12)

    @given(feats=feature_lists())
    def test_matches_direct_loop(self, feats):
        got = total_variance(feats)
        m = len(feats)
        mean = [sum(float(f.embedding[j]) for f in feats) / m
                for j in range(feats[0].dim)]
        loop = sum(
            sum((float(f.embedding[j]) - mean[j]) ** 2 for j in range(f.dim))
            for f in feats) / m
        assert got == pytest.approx(loop, abs=1e-9)
        assert 0.0 <= got <= 1.0


class TestModalityFeature:
    def test_normalizes_on_ingest(self):
        f = ModalityFeature(ModalityTag.IMAGE, [3.0, 4.0])
        assert f.embedding == pytest.approx([0.6, 0.8], abs=1e-12)
        assert abs(float(np.linalg.norm(f.embedding)) - 1.0) <= 1e-6

    def test_embedding_is_read_only(self):
        f = ModalityFeature(ModalityTag.IMAGE, [1.0, 0.0])
        with pytest.raises(ValueError):
            f.embedding[0] = 2.0

    def test_zero_rejected(self):
        with pytest.raises(ZeroVectorError):
            ModalityFeature(ModalityTag.TEXT, [0.0, 0.0])


class TestModalityTag:
    def test_canonical_order(self):
        labels = [t.label for t in sorted(ModalityTag)]
        assert labels == ["Text", "Audio", "Image", "PointCloud", "Thermal", "Depth", "Event"]

    @pytest.mark.parametrize("name,expected", [
        ("text", ModalityTag.TEXT),
        ("TEXT", ModalityTag.TEXT),
        ("PointCloud", ModalityTag.POINT_CLOUD),
        ("point_cloud", ModalityTag.POINT_CLOUD),
        ("Event", ModalityTag.EVENT),
    ])
    def test_from_name(self, name, expected):
        assert ModalityTag.from_name(name) is expected

    def test_unknown_name(self):
        with pytest.raises(ValidationError):
            ModalityTag.from_name("smell")


class TestFusionConfig:
    def test_defaults(self):
        cfg = FusionConfig()
        assert cfg.k_entity == 4 and cfg.k_attribute == 4
        assert cfg.variance_threshold == 0.8
        assert cfg.entity_upweight == 0.6
        assert cfg.balanced_weight == 0.5
        assert cfg.enable_entity_branch and cfg.enable_attribute_branch
        assert cfg.enable_adjective_filter

    @pytest.mark.parametrize("kwargs", [
        {"k_entity": 0},
        {"k_attribute": -1},
        {"variance_threshold": 1.5},
        {"entity_upweight": -0.1},
        {"balanced_weight": 2.0},
    ])
    def test_bad_values(self, kwargs):
        with pytest.raises(ValidationError):
            FusionConfig(**kwargs)

    def test_both_branches_disabled(self):
        with pytest.raises(NoBranchesError):
            FusionConfig(enable_entity_branch=False, enable_attribute_branch=False)


class TestFusionWeights:
    def test_negative_raw_clamped(self):
        w = FusionWeights.from_raw("entity", {ModalityTag.TEXT: -0.5, ModalityTag.AUDIO: 0.5})
        assert w.normalized == {ModalityTag.TEXT: 0.0, ModalityTag.AUDIO: 1.0}
        assert w.raw[ModalityTag.TEXT] == -0.5

    def test_zero_sum_falls_back_to_uniform(self):
        w = FusionWeights.from_raw("attribute", {t: 0.0 for t in TAGS[:4]})
        assert all(v == pytest.approx(0.25, abs=1e-12) for v in w.normalized.values())

    @given(m=st.integers(1, 7), data=st.data())
    def test_normalized_is_probability_vector(self, m, data):
        raw = {TAGS[i]: data.draw(st.floats(-1, 4, allow_nan=False)) for i in range(m)}
        w = FusionWeights.from_raw("entity", raw)
        values = list(w.normalized.values())
        assert min(values) >= 0.0
        assert sum(values) == pytest.approx(1.0, abs=1e-9)
