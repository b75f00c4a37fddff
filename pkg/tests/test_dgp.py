"""Tests for the declared data-generating process module."""

import numpy as np
import pytest
from scipy.special import expit

from fairaudit import dgp
from fairaudit.errors import ConfigurationError, InputError


def two_feature_spec(**outcome_kwargs):
    defaults = dict(true_features=("x",), intercept=-1.0, coefficients={"x": 0.8})
    defaults.update(outcome_kwargs)
    return dgp.DgpSpec(
        features=(
            dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Categorical(("a", "b"), (0.5, 0.5))),
            dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
        ),
        outcome=dgp.OutcomeSpec(**defaults),
    )


class TestValidate:
    def test_well_formed_spec_is_ok(self):
        assert dgp.validate(two_feature_spec()) == []

    def test_categorical_probabilities_must_sum_to_one(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "g", dgp.FeatureRole("protected"), dgp.Categorical(("a", "b"), (0.5, 0.6))
                ),
            ),
            outcome=dgp.OutcomeSpec(("g",), 0.0, {}),
        )
        rules = [v.rule for v in dgp.validate(spec)]
        assert "probabilities sum != 1" in rules

    def test_exact_proxy_must_target_declared_protected_feature(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "preg",
                    dgp.FeatureRole("exact_proxy", proxy_target="gender"),
                    dgp.Bernoulli(0.1),
                ),
            ),
            outcome=dgp.OutcomeSpec(("preg",), 0.0, {}),
        )
        rules = [v.rule for v in dgp.validate(spec)]
        assert "unknown proxy target" in rules

    def test_proxy_target_must_come_before_the_proxy(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "preg", dgp.FeatureRole("exact_proxy", proxy_target="gender"), dgp.Bernoulli(0.1)
                ),
                dgp.FeatureSpec(
                    "gender", dgp.FeatureRole("protected"), dgp.Categorical(("m", "f"), (0.5, 0.5))
                ),
            ),
            outcome=dgp.OutcomeSpec(("preg",), 0.0, {}),
        )
        rules = [v.rule for v in dgp.validate(spec)]
        assert "unknown proxy target" in rules

    def test_bernoulli_probability_range(self):
        spec = dgp.DgpSpec(
            features=(dgp.FeatureSpec("b", dgp.FeatureRole("legitimate"), dgp.Bernoulli(1.5)),),
            outcome=dgp.OutcomeSpec(("b",), 0.0, {}),
        )
        assert any(v.rule == "probability range" for v in dgp.validate(spec))

    def test_negative_sd_rejected(self):
        spec = dgp.DgpSpec(
            features=(dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, -1.0)),),
            outcome=dgp.OutcomeSpec(("x",), 0.0, {}),
        )
        assert any(v.rule == "sd >= 0" for v in dgp.validate(spec))

    def test_dependence_parent_must_be_declared_earlier(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "x",
                    dgp.FeatureRole("legitimate"),
                    dgp.Gaussian(0.0, 1.0),
                    dgp.Dependence(parents={"later": 1.0}, noise_sd=1.0),
                ),
                dgp.FeatureSpec("later", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
            ),
            outcome=dgp.OutcomeSpec(("x",), 0.0, {}),
        )
        assert any(v.rule == "parent order" for v in dgp.validate(spec))

    def test_dependence_only_on_gaussian_children(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
                dgp.FeatureSpec(
                    "b",
                    dgp.FeatureRole("legitimate"),
                    dgp.Bernoulli(0.5),
                    dgp.Dependence(parents={"x": 1.0}, noise_sd=0.0),
                ),
            ),
            outcome=dgp.OutcomeSpec(("x",), 0.0, {}),
        )
        assert any(v.rule == "structural equation" for v in dgp.validate(spec))

    def test_level_offsets_must_cover_all_parent_levels(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "g", dgp.FeatureRole("protected"), dgp.Categorical(("a", "b", "c"), (0.3, 0.3, 0.4))
                ),
                dgp.FeatureSpec(
                    "x",
                    dgp.FeatureRole("legitimate"),
                    dgp.Gaussian(0.0, 1.0),
                    dgp.Dependence(parents={"g": {"a": 0.0, "b": 1.0}}, noise_sd=1.0),
                ),
            ),
            outcome=dgp.OutcomeSpec(("x",), 0.0, {}),
        )
        assert any("miss levels" in v.message for v in dgp.validate(spec))

    def test_outcome_features_must_be_declared_and_numeric(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "g", dgp.FeatureRole("protected"), dgp.Categorical(("a", "b"), (0.5, 0.5))
                ),
            ),
            outcome=dgp.OutcomeSpec(("g", "ghost"), 0.0, {"g": 1.0}),
        )
        rules = [v.rule for v in dgp.validate(spec)]
        assert "unknown feature" in rules
        assert "numeric feature" in rules

    def test_proxy_flip_probability_range_and_levels(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Bernoulli(0.5)),
                dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
            ),
            outcome=dgp.OutcomeSpec(("x",), 0.0, {"x": 1.0}),
            proxy=dgp.ProxyLabelSpec("g", flip0={1: 1.4, "zz": 0.1}, flip1={}),
        )
        rules = [v.rule for v in dgp.validate(spec)]
        assert "probability range" in rules
        assert "unknown level" in rules


class TestSample:
    def test_n_zero_gives_empty_dataset(self):
        data = dgp.sample(two_feature_spec(), 0, 3)
        assert data.n == 0
        assert len(data.y) == 0 and len(data.pi_true) == 0
        assert all(len(col) == 0 for col in data.columns.values())

    def test_same_inputs_give_identical_datasets(self):
        a = dgp.sample(two_feature_spec(), 5000, 42)
        b = dgp.sample(two_feature_spec(), 5000, 42)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.pi_true, b.pi_true)
        for name in a.columns:
            assert np.array_equal(a.columns[name], b.columns[name])

    def test_different_seeds_differ(self):
        a = dgp.sample(two_feature_spec(), 1000, 1)
        b = dgp.sample(two_feature_spec(), 1000, 2)
        assert not np.array_equal(a.column("x"), b.column("x"))

    def test_bernoulli_concentration_against_counting_oracle(self):
        # oracle: direct count of ones, bound from binomial concentration
        spec = dgp.DgpSpec(
            features=(dgp.FeatureSpec("b", dgp.FeatureRole("legitimate"), dgp.Bernoulli(0.3)),),
            outcome=dgp.OutcomeSpec(("b",), 0.0, {}),
        )
        n = 50_000
        data = dgp.sample(spec, n, 7)
        col = data.column("b")
        count = sum(1 for v in col.tolist() if v == 1)  # counting oracle
        assert count == int(col.sum())
        bound = 3.0 * np.sqrt(0.3 * 0.7 / n)
        assert abs(count / n - 0.3) < bound

    def test_invalid_spec_raises_configuration_error_naming_first_violation(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "g", dgp.FeatureRole("protected"), dgp.Categorical(("a", "b"), (0.5, 0.6))
                ),
            ),
            outcome=dgp.OutcomeSpec(("g",), 0.0, {}),
        )
        with pytest.raises(ConfigurationError, match="probabilities sum"):
            dgp.sample(spec, 10, 0)

    def test_pi_true_round_trips_through_true_prob(self):
        data = dgp.sample(two_feature_spec(), 2000, 9)
        recomputed = dgp.true_probs(two_feature_spec(), data.columns, data.n)
        assert np.array_equal(data.pi_true, recomputed)

    def test_zero_flip_probabilities_reproduce_labels(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Bernoulli(0.5)),
                dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
            ),
            outcome=dgp.OutcomeSpec(("x",), -0.5, {"x": 1.0}),
            proxy=dgp.ProxyLabelSpec("g", flip0={0: 0.0, 1: 0.0}, flip1={0: 0.0, 1: 0.0}),
        )
        data = dgp.sample(spec, 5000, 13)
        assert data.y_proxy is not None
        assert np.array_equal(data.y_proxy, data.y)

    def test_certain_flips_invert_labels(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Bernoulli(0.5)),
                dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
            ),
            outcome=dgp.OutcomeSpec(("x",), -0.5, {"x": 1.0}),
            proxy=dgp.ProxyLabelSpec("g", flip0={0: 1.0, 1: 1.0}, flip1={0: 1.0, 1: 1.0}),
        )
        data = dgp.sample(spec, 2000, 13)
        assert np.array_equal(data.y_proxy, 1 - data.y)

    def test_structural_equation_shifts_child_mean(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec(
                    "g", dgp.FeatureRole("protected"), dgp.Categorical(("a", "b"), (0.5, 0.5))
                ),
                dgp.FeatureSpec(
                    "x",
                    dgp.FeatureRole("legitimate"),
                    dgp.Gaussian(1.0, 1.0),
                    dgp.Dependence(parents={"g": {"a": 0.0, "b": 2.0}}, noise_sd=0.5),
                ),
            ),
            outcome=dgp.OutcomeSpec(("x",), 0.0, {"x": 1.0}),
        )
        data = dgp.sample(spec, 40_000, 3)
        g, x = data.column("g"), data.column("x")
        assert x[g == "a"].mean() == pytest.approx(1.0, abs=0.02)
        assert x[g == "b"].mean() == pytest.approx(3.0, abs=0.02)
        assert x[g == "b"].std() == pytest.approx(0.5, abs=0.02)

    def test_dataset_arrays_are_read_only(self):
        data = dgp.sample(two_feature_spec(), 100, 0)
        with pytest.raises(ValueError):
            data.y[0] = 1
        with pytest.raises(ValueError):
            data.column("x")[0] = 0.0


class TestTrueProb:
    def test_intercept_zero_no_coefficients_gives_half(self):
        spec = two_feature_spec(true_features=("x",), intercept=0.0, coefficients={})
        assert dgp.true_prob(spec, {"x": 3.0}) == pytest.approx(0.5)

    def test_closed_form_logistic(self):
        spec = two_feature_spec(true_features=("x",), intercept=0.0, coefficients={"x": 2.0})
        assert dgp.true_prob(spec, {"x": 1.0}) == pytest.approx(0.8807970779778823, abs=1e-12)

    def test_ignores_features_outside_true_set(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("x", dgp.FeatureRole("legitimate"), dgp.Gaussian(0.0, 1.0)),
                dgp.FeatureSpec("noise", dgp.FeatureRole("non_legitimate"), dgp.Gaussian(0.0, 1.0)),
            ),
            outcome=dgp.OutcomeSpec(("x",), -0.3, {"x": 0.7}),
        )
        base = dgp.true_prob(spec, {"x": 0.5, "noise": 0.0})
        perturbed = dgp.true_prob(spec, {"x": 0.5, "noise": 99.0})
        assert base == perturbed

    def test_missing_true_feature_is_input_error(self):
        with pytest.raises(InputError, match="missing true feature"):
            dgp.true_prob(two_feature_spec(), {"g": "a"})


class TestTrueGroupParityCheck:
    def outcome_only_on_legitimate(self):
        return dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Bernoulli(0.4)),
                dgp.FeatureSpec(
                    "L", dgp.FeatureRole("legitimate"), dgp.Categorical((-1.0, 1.0), (0.5, 0.5))
                ),
            ),
            outcome=dgp.OutcomeSpec(("L",), 0.2, {"L": 0.5}),
        )

    def test_independent_protected_feature_gives_parity(self):
        check = dgp.true_group_parity_check(self.outcome_only_on_legitimate(), n_mc=40_000, seed=5)
        assert check.verdict == "true parity holds"
        assert check.max_gap < 0.01

    def test_protected_coefficient_creates_gap_matching_analytic_oracle(self):
        # oracle: exact integration over the declared discrete distributions
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Bernoulli(0.4)),
                dgp.FeatureSpec(
                    "L", dgp.FeatureRole("legitimate"), dgp.Categorical((-1.0, 1.0), (0.5, 0.5))
                ),
            ),
            outcome=dgp.OutcomeSpec(("g", "L"), 0.2, {"g": 1.0, "L": 0.5}),
        )
        p_g = 0.4
        analytic = {0: 0.0, 1: 0.0}
        for level, p_level in ((-1.0, 0.5), (1.0, 0.5)):
            mean_l = (1 - p_g) * expit(0.2 + 0.5 * level) + p_g * expit(1.2 + 0.5 * level)
            analytic[0] += p_level * abs(expit(0.2 + 0.5 * level) - mean_l)
            analytic[1] += p_level * abs(expit(1.2 + 0.5 * level) - mean_l)

        check = dgp.true_group_parity_check(spec, n_mc=60_000, seed=5)
        assert check.verdict == "true differences exist"
        gaps = check.per_feature["g"].per_group
        assert gaps[0] == pytest.approx(analytic[0], abs=0.015)
        assert gaps[1] == pytest.approx(analytic[1], abs=0.015)
        assert analytic[1] > 0.05  # the effect is genuinely bounded away from zero

    def test_single_stratum_symmetric_groups_gap_zero(self):
        spec = dgp.DgpSpec(
            features=(
                dgp.FeatureSpec("g", dgp.FeatureRole("protected"), dgp.Bernoulli(0.5)),
                dgp.FeatureSpec("L", dgp.FeatureRole("legitimate"), dgp.Categorical((1.0,), (1.0,))),
            ),
            outcome=dgp.OutcomeSpec(("L",), 0.1, {"L": 0.4}),
        )
        check = dgp.true_group_parity_check(spec, n_mc=10_000, seed=2)
        assert check.max_gap < 1e-12
