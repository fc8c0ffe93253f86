"""Forest, logistic, boosting, and the metrics suite."""

import numpy as np
import pytest

from surveybn.classify import (
    auprc,
    auroc,
    evaluate,
    fit_boosted,
    fit_forest,
    fit_logistic,
    logistic_gradient,
    logistic_loss,
    model_from_json,
    model_to_json,
    one_hot,
    predict_proba,
)
from surveybn.dataset import DatasetTable
from surveybn.errors import SchemaMismatch, SingleClassLabels, SingleClassTrain
from surveybn.jsonio import canonical_dumps
from surveybn.model import VariableSpec
from surveybn.rng import derive_rng


def binary_table(codes, names=None):
    codes = np.array(codes, dtype=np.int32)
    names = names or [f"c{j}" for j in range(codes.shape[1])]
    cols = tuple(VariableSpec(n, ("0", "1"), j) for j, n in enumerate(names))
    return DatasetTable(cols, codes, tuple(range(codes.shape[0])))


def copy_label_table(n=200, noise_cols=2, seed=0):
    """label == informative feature exactly; extra columns are coin flips."""
    rng = derive_rng(seed)
    informative = rng.integers(0, 2, size=n)
    cols = [informative]
    cols.extend(rng.integers(0, 2, size=n) for _ in range(noise_cols))
    cols.append(informative)  # label last
    names = [f"x{j}" for j in range(noise_cols + 1)] + ["label"]
    return binary_table(np.column_stack(cols), names)


def pairwise_auroc(scores, labels):
    """O(n^2) oracle: (concordant + 0.5 * ties) / (P * N)."""
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    num = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                num += 1.0
            elif sp == sn:
                num += 0.5
    return num / (len(pos) * len(neg))


# -- forest -----------------------------------------------------------------------


def test_forest_perfectly_separable():
    table = copy_label_table()
    model = fit_forest(table, "label", n_trees=10, seed=3)
    scores = predict_proba(model, table)
    labels = table.codes[:, -1]
    assert np.all((scores >= 0.5) == (labels == 1))


def test_depth_one_tree_splits_on_informative_column():
    # hand Gini: parent ~0.5, splitting on the copy column leaves pure halves
    # (decrease ~0.5) while a coin column's decrease is near zero
    table = copy_label_table(n=400, noise_cols=3, seed=5)
    model = fit_forest(
        table, "label", n_trees=1, max_depth=1, feature_fraction=1.0, seed=0
    )
    root = model.trees[0]
    assert not root.is_leaf
    assert root.column == 0
    assert model.feature_importance[0] == max(model.feature_importance)


def test_forest_serialization_deterministic_per_seed():
    table = copy_label_table(seed=7)
    a = fit_forest(table, "label", n_trees=5, seed=11)
    b = fit_forest(table, "label", n_trees=5, seed=11)
    c = fit_forest(table, "label", n_trees=5, seed=12)
    assert canonical_dumps(model_to_json(a)) == canonical_dumps(model_to_json(b))
    assert canonical_dumps(model_to_json(a)) != canonical_dumps(model_to_json(c))


def test_forest_trees_depend_only_on_seed_and_index():
    table = copy_label_table(seed=9)
    big = fit_forest(table, "label", n_trees=5, seed=2)
    small = fit_forest(table, "label", n_trees=3, seed=2)
    for t in range(3):
        assert canonical_dumps(model_to_json(big)["trees"][t]) == canonical_dumps(
            model_to_json(small)["trees"][t]
        )


def test_forest_round_trips_through_json():
    table = copy_label_table(seed=1)
    model = fit_forest(table, "label", n_trees=4, seed=8)
    clone = model_from_json(model_to_json(model))
    np.testing.assert_array_equal(predict_proba(clone, table), predict_proba(model, table))


def test_single_class_train_rejected():
    codes = np.column_stack([np.random.default_rng(0).integers(0, 2, 30), np.ones(30, dtype=int)])
    table = binary_table(codes, ["x0", "label"])
    with pytest.raises(SingleClassTrain):
        fit_forest(table, "label", n_trees=2, seed=0)
    with pytest.raises(SingleClassTrain):
        fit_logistic(table, "label")
    with pytest.raises(SingleClassTrain):
        fit_boosted(table, "label", stages=2)


def test_predict_schema_mismatch():
    table = copy_label_table(seed=2)
    model = fit_forest(table, "label", n_trees=2, seed=0)
    other = binary_table(np.zeros((4, 2), dtype=int), ["y0", "y1"])
    with pytest.raises(SchemaMismatch):
        predict_proba(model, other)


# -- logistic ---------------------------------------------------------------------


def test_logistic_uninformative_predicts_half():
    # balanced labels, features independent of them, symmetric by construction
    rng = derive_rng(4)
    n = 400
    labels = np.r_[np.zeros(n // 2, dtype=int), np.ones(n // 2, dtype=int)]
    features = rng.integers(0, 2, size=n)
    table = binary_table(np.column_stack([features, labels]), ["x0", "label"])
    model = fit_logistic(table, "label", learn_rate=0.5, epochs=300)
    scores = predict_proba(model, table)
    assert np.all(np.abs(scores - 0.5) < 0.05)


def test_logistic_loss_strictly_decreases():
    table = copy_label_table(n=120, seed=6)
    x = one_hot(table.codes[:, :3].astype(np.int64), [2, 2, 2])
    y = table.codes[:, 3].astype(float)
    w = np.zeros(x.shape[1])
    b = 0.0
    losses = [logistic_loss(x, y, w, b, 0.01)]
    for _ in range(60):
        gw, gb = logistic_gradient(x, y, w, b, 0.01)
        w, b = w - 0.1 * gw, b - 0.1 * gb
        losses.append(logistic_loss(x, y, w, b, 0.01))
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_logistic_gradient_matches_finite_differences():
    rng = derive_rng(12)
    x = rng.integers(0, 2, size=(60, 5)).astype(float)
    y = rng.integers(0, 2, size=60).astype(float)
    w = rng.normal(size=5)
    b = float(rng.normal())
    l2 = 0.05
    grad_w, grad_b = logistic_gradient(x, y, w, b, l2)
    eps = 1e-6
    for k in range(5):
        bump = np.zeros(5)
        bump[k] = eps
        fd = (logistic_loss(x, y, w + bump, b, l2) - logistic_loss(x, y, w - bump, b, l2)) / (2 * eps)
        assert abs(fd - grad_w[k]) <= 1e-4 * max(1.0, abs(fd))
    fd_b = (logistic_loss(x, y, w, b + eps, l2) - logistic_loss(x, y, w, b - eps, l2)) / (2 * eps)
    assert abs(fd_b - grad_b) <= 1e-4 * max(1.0, abs(fd_b))


def test_logistic_gradient_near_zero_at_optimum():
    table = copy_label_table(n=100, noise_cols=1, seed=8)
    model = fit_logistic(table, "label", learn_rate=1.0, epochs=4000, l2=0.05)
    x = one_hot(table.codes[:, :2].astype(np.int64), [2, 2])
    y = table.codes[:, 2].astype(float)
    gw, gb = logistic_gradient(x, y, model.weights, model.intercept, 0.05)
    assert max(np.max(np.abs(gw)), abs(gb)) <= 1e-4


# -- boosting ---------------------------------------------------------------------


def test_boosted_eta_zero_is_prior_constant():
    table = copy_label_table(n=80, seed=10)
    base_rate = table.codes[:, -1].mean()
    model = fit_boosted(table, "label", stages=5, eta=0.0)
    scores = predict_proba(model, table)
    np.testing.assert_allclose(scores, base_rate, atol=1e-12)


def test_boosted_one_stage_separates():
    # one depth-1 stage on label == feature: residuals are +-(1 - base) and
    # the split leaves push scores to the correct side of 0.5
    table = copy_label_table(n=100, noise_cols=0, seed=3)
    model = fit_boosted(table, "label", stages=1, max_depth=1, eta=0.1)
    scores = predict_proba(model, table)
    labels = table.codes[:, -1]
    assert np.all((scores >= 0.5) == (labels == 1))


def test_boosted_training_logloss_non_increasing():
    table = copy_label_table(n=150, noise_cols=2, seed=13)
    model = fit_boosted(table, "label", stages=50, max_depth=2, eta=0.2)
    labels = table.codes[:, -1].astype(float)
    losses = []
    for t in range(0, 51, 5):
        partial = type(model)(
            model.features, model.label, model.label_states,
            model.initial_log_odds, model.eta, model.trees[:t],
            t, model.max_depth, model.min_leaf,
        )
        p = np.clip(predict_proba(partial, table), 1e-12, 1 - 1e-12)
        losses.append(float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p))))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


# -- metrics ----------------------------------------------------------------------


def test_confusion_fixture_hand_values():
    scores = np.array([0.9, 0.8, 0.7, 0.3, 0.6, 0.4, 0.3, 0.2, 0.1, 0.05])
    labels = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
    report = evaluate(scores, labels, threshold=0.5, bootstrap=50, seed=0)
    assert report.accuracy.point == pytest.approx(0.8, abs=1e-12)
    assert report.sensitivity.point == pytest.approx(0.75, abs=1e-12)
    assert report.specificity.point == pytest.approx(5 / 6, abs=1e-4)
    assert report.f1.point == pytest.approx(0.75, abs=1e-12)


def test_perfect_ranking_areas():
    scores = np.array([0.9, 0.8, 0.7, 0.3, 0.2, 0.1])
    labels = np.array([1, 1, 1, 0, 0, 0])
    assert auroc(scores, labels) == 1.0
    assert auprc(scores, labels) == pytest.approx(1.0, abs=1e-12)


def test_auroc_equals_pairwise_oracle_exactly():
    rng = derive_rng(21)
    for _ in range(30):
        n = int(rng.integers(4, 40))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            continue
        # quantized scores force plenty of ties
        scores = np.round(rng.random(n), 1)
        assert auroc(scores, labels) == pairwise_auroc(scores, labels)


def test_rank_invariance_under_monotone_transform():
    rng = derive_rng(22)
    labels = rng.integers(0, 2, size=50)
    labels[0], labels[1] = 0, 1
    scores = rng.random(50)
    assert auroc(scores, labels) == auroc(3.0 * scores + 1.0, labels)
    assert auprc(scores, labels) == auprc(np.exp(scores), labels)


def test_evaluate_bounds_and_ci_internal_consistency():
    rng = derive_rng(23)
    scores = rng.random(120)
    labels = (scores + rng.normal(0, 0.4, 120) > 0.5).astype(int)
    report = evaluate(scores, labels, bootstrap=200, seed=5)
    for m in (report.accuracy, report.f1, report.sensitivity,
              report.specificity, report.au_roc, report.au_prc):
        assert 0.0 <= m.ci_low <= m.point <= m.ci_high <= 1.0
    assert report.roc_points[0] == (0.0, 0.0)
    assert report.roc_points[-1] == (1.0, 1.0)


def test_evaluate_deterministic_and_single_class_error():
    rng = derive_rng(24)
    scores = rng.random(40)
    labels = rng.integers(0, 2, size=40)
    labels[:2] = [0, 1]
    a = evaluate(scores, labels, bootstrap=100, seed=9)
    b = evaluate(scores, labels, bootstrap=100, seed=9)
    assert canonical_dumps(a.to_json()) == canonical_dumps(b.to_json())
    with pytest.raises(SingleClassLabels):
        evaluate(scores, np.zeros(40, dtype=int))


def test_ci_covers_known_accuracy():
    # scores built so accuracy has true value 0.8; the 95% interval should
    # cover it in the vast majority of simulated datasets
    rng = derive_rng(25)
    covered = 0
    runs = 100
    for i in range(runs):
        labels = rng.integers(0, 2, size=150)
        labels[:2] = [0, 1]
        flip = rng.random(150) < 0.2
        scores = np.where(flip ^ (labels == 1), 0.9, 0.1)
        report = evaluate(scores, labels, bootstrap=300, seed=i)
        if report.accuracy.ci_low <= 0.8 <= report.accuracy.ci_high:
            covered += 1
    assert covered >= 90
