"""Tests for partition rules and point assignment."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal
from pydantic import TypeAdapter, ValidationError

from assaybounds.bounds import classification_error
from assaybounds.confusion import confusion_matrix
from assaybounds.densities import ClassModel, Gaussian1D
from assaybounds.errors import ConfigError
from assaybounds.partitions import (
    Bayes,
    CutPoints1D,
    Partition,
    Predicate,
    RatioThreshold,
    assign,
    assign_many,
    bayes_partition,
    prevalence_for_threshold,
    threshold_for_prevalence,
)


class TestCutPoints:
    def test_point_on_cut_goes_left(self, three_uniforms):
        part = CutPoints1D(cuts=[0.9, 1.7])
        assert assign(part, three_uniforms, 0.9) == 0
        assert assign(part, three_uniforms, 1.7) == 1
        assert assign(part, three_uniforms, 1.7000001) == 2

    def test_order_permutes_intervals(self, three_uniforms):
        part = CutPoints1D(cuts=[0.9, 1.7], order=[2, 0, 1])
        assert_array_equal(assign_many(part, three_uniforms, [0.0, 1.0, 2.0]), [2, 0, 1])

    def test_cuts_must_increase(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            CutPoints1D(cuts=[1.7, 0.9])

    def test_order_must_be_permutation(self):
        with pytest.raises(ValidationError, match="permutation"):
            CutPoints1D(cuts=[1.0], order=[0, 0])

    def test_cut_count_must_match_classes(self, three_uniforms):
        with pytest.raises(ConfigError, match="do not give 3 classes"):
            assign(CutPoints1D(cuts=[1.0]), three_uniforms, 0.5)


class TestRatioThreshold:
    def test_sides_of_threshold(self, gaussian_pair):
        part = RatioThreshold(t=1.0)
        assert assign(part, gaussian_pair, -0.5) == 0
        assert assign(part, gaussian_pair, 0.5) == 1

    def test_boundary_goes_to_configured_class(self, gaussian_pair):
        assert assign(RatioThreshold(t=1.0), gaussian_pair, 0.0) == 0
        assert assign(RatioThreshold(t=1.0, boundary_to=1), gaussian_pair, 0.0) == 1

    def test_boundary_cut_splits_flat_set(self, three_uniforms):
        model = ClassModel.of(*three_uniforms.densities[:2])
        part = RatioThreshold(t=1.0, boundary_cut=0.95)
        assert_array_equal(assign_many(part, model, [0.5, 0.92, 0.98, 1.5]), [0, 0, 1, 1])

    def test_needs_two_classes(self, three_uniforms):
        with pytest.raises(ConfigError, match="needs 2 classes"):
            assign(RatioThreshold(t=1.0), three_uniforms, 0.5)

    def test_threshold_shifts_boundary(self, gaussian_pair):
        # log ratio of N(-1,1) to N(1,1) is -2x, so the boundary sits at -log(t)/2
        part = RatioThreshold(t=np.exp(1.0))
        assert assign(part, gaussian_pair, -0.51) == 0
        assert assign(part, gaussian_pair, -0.49) == 1


class TestBayes:
    def test_matches_ratio_rule(self, gaussian_pair):
        xs = np.linspace(-3.0, 3.0, 61) + 0.013
        bayes = bayes_partition(gaussian_pair, [0.25, 0.75])
        assert_array_equal(assign_many(bayes, gaussian_pair, xs), assign_many(bayes.as_threshold(), gaussian_pair, xs))

    def test_ties_go_to_lowest_index(self):
        model = ClassModel.of(Gaussian1D(mean=0.0, sd=1.0), Gaussian1D(mean=0.0, sd=1.0))
        assert assign(Bayes(q=[0.5, 0.5]), model, 0.3) == 0

    def test_zero_prevalence_class_never_chosen(self, three_gaussians):
        labels = assign_many(Bayes(q=[0.5, 0.0, 0.5]), three_gaussians, np.linspace(-1.0, 1.0, 21))
        assert 1 not in labels

    def test_prevalence_must_sum_to_one(self, gaussian_pair):
        with pytest.raises(ConfigError, match="does not sum to 1"):
            bayes_partition(gaussian_pair, [0.6, 0.6])

    def test_threshold_prevalence_conversion(self):
        assert threshold_for_prevalence(0.25) == pytest.approx(3.0)
        assert prevalence_for_threshold(3.0) == pytest.approx(0.25)
        with pytest.raises(ConfigError):
            threshold_for_prevalence(0.0)

    def test_beats_perturbed_partitions(self, three_gaussians, rng):
        q = [0.2, 0.5, 0.3]
        bayes_error = classification_error(confusion_matrix(three_gaussians, Bayes(q=q)), q)
        for _ in range(20):
            cuts = np.sort(rng.uniform(-3.0, 3.0, 2))
            other = confusion_matrix(three_gaussians, CutPoints1D(cuts=cuts.tolist()))
            assert classification_error(other, q) >= bayes_error - 1e-7


@pytest.mark.parametrize(
    "part, model",
    [
        (Bayes(q=[0.2, 0.5, 0.3]), "three_gaussians"),
        (CutPoints1D(cuts=[0.9, 1.7]), "three_uniforms"),
        (RatioThreshold(t=1.5), "gaussian_pair"),
    ],
)
def test_every_point_gets_a_label(part, model, request, rng):
    model = request.getfixturevalue(model)
    labels = assign_many(part, model, rng.normal(0.0, 4.0, 10_000))
    assert labels.shape == (10_000,)
    assert labels.min() >= 0
    assert labels.max() < model.c


class TestPredicate:
    def test_callable_rule(self, gaussian_pair):
        part = Predicate(assign_fn=lambda r: int(r[0] > 2.0))
        assert_array_equal(assign_many(part, gaussian_pair, [1.0, 3.0]), [0, 1])

    def test_out_of_range_label(self, gaussian_pair):
        part = Predicate(assign_fn=lambda r: 5)
        with pytest.raises(ConfigError, match="outside"):
            assign(part, gaussian_pair, 0.0)


def test_partition_json_discriminates_on_kind():
    adapter = TypeAdapter(Partition)
    assert isinstance(adapter.validate_python({"kind": "cutpoints", "cuts": [1.0]}), CutPoints1D)
    assert isinstance(adapter.validate_python({"kind": "ratio_threshold", "t": 2.0}), RatioThreshold)
    assert isinstance(adapter.validate_python({"kind": "bayes", "q": [0.5, 0.5]}), Bayes)
