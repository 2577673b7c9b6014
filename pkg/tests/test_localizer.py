import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from wstal.inference import Detection
from wstal.localizer import TwoStreamLocalizer
from wstal.numerics import make_rng


def make_xy(rng, n_videos=6, C=2, d=6, T=20):
    """Tiny separable in-memory dataset: one planted block per video."""
    centers = rng.standard_normal((C + 1, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    centers *= 5.0
    X, y = [], []
    for i in range(n_videos):
        cls = 1 + i % C
        feats = {}
        start = int(rng.integers(2, T - 8))
        for modality in ("rgb", "flow"):
            arr = centers[0] + rng.standard_normal((T, d))
            arr[start:start + 6] = centers[cls] + rng.standard_normal((6, d))
            feats[modality] = arr
        X.append(feats)
        y.append([cls])
    return X, y


def test_get_params_set_params_round_trip():
    est = TwoStreamLocalizer(epochs=7, alpha=0.25, seed=3)
    params = est.get_params()
    assert params["epochs"] == 7
    assert params["alpha"] == 0.25
    est2 = TwoStreamLocalizer().set_params(**params)
    assert est2.get_params() == params


def test_sklearn_clone_compatible():
    est = TwoStreamLocalizer(epochs=2, hidden_dim=8, nms_iou=0.4)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_predict_before_fit_raises():
    rng = make_rng(0)
    X, _ = make_xy(rng, n_videos=1)
    with pytest.raises(NotFittedError):
        TwoStreamLocalizer().predict(X)


def test_fit_predict_shapes_and_types():
    rng = make_rng(1)
    X, y = make_xy(rng)
    est = TwoStreamLocalizer(epochs=3, hidden_dim=8, seed=0)
    assert est.fit(X, y) is est
    assert est.n_classes_ == 2
    assert list(est.classes_) == [1, 2]
    out = est.predict(X)
    assert len(out) == len(X)
    for dets in out:
        for det in dets:
            assert isinstance(det, Detection)
            assert det.class_id in (1, 2)


def test_predict_proba_rows_are_simplex():
    rng = make_rng(2)
    X, y = make_xy(rng, n_videos=4)
    est = TwoStreamLocalizer(epochs=2, hidden_dim=8, seed=0).fit(X, y)
    proba = est.predict_proba(X)
    assert proba.shape == (4, 3)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)


def test_fit_is_deterministic_given_seed():
    rng = make_rng(3)
    X, y = make_xy(rng, n_videos=4)
    a = TwoStreamLocalizer(epochs=2, hidden_dim=8, seed=5).fit(X, y)
    b = TwoStreamLocalizer(epochs=2, hidden_dim=8, seed=5).fit(X, y)
    assert np.array_equal(a.models_["rgb"].w1, b.models_["rgb"].w1)
    assert np.array_equal(a.models_["flow"].classifier, b.models_["flow"].classifier)


def test_fit_rejects_mismatched_lengths():
    rng = make_rng(4)
    X, y = make_xy(rng, n_videos=3)
    with pytest.raises(ValueError, match="label sets"):
        TwoStreamLocalizer(epochs=1, hidden_dim=4).fit(X, y[:-1])


def test_fit_rejects_inconsistent_modalities():
    rng = make_rng(5)
    X, y = make_xy(rng, n_videos=3)
    del X[1]["flow"]
    with pytest.raises(ValueError, match="modalities"):
        TwoStreamLocalizer(epochs=1, hidden_dim=4).fit(X, y)


def test_fit_rejects_background_label():
    rng = make_rng(6)
    X, y = make_xy(rng, n_videos=2)
    y[0] = [0]
    with pytest.raises(ValueError, match="reserved for background"):
        TwoStreamLocalizer(epochs=1, hidden_dim=4).fit(X, y)


def test_single_modality_fit_predict():
    rng = make_rng(7)
    X, y = make_xy(rng, n_videos=4)
    X = [{"rgb": entry["rgb"]} for entry in X]
    est = TwoStreamLocalizer(epochs=2, hidden_dim=8).fit(X, y)
    assert set(est.models_) == {"rgb"}
    out = est.predict(X)
    assert len(out) == 4


def test_localizer_learns_separable_blocks():
    # Above the background-bootstrap threshold (alpha > 1/C) the estimator
    # localizes planted blocks on its own training videos.
    rng = make_rng(8)
    X, y = make_xy(rng, n_videos=10, C=2, d=12, T=30)
    est = TwoStreamLocalizer(epochs=60, alpha=0.6, hidden_dim=16, seed=0)
    est.fit(X, y)
    hits = 0
    for dets, labels in zip(est.predict(X), y):
        if dets and dets[0].class_id == labels[0]:
            hits += 1
    assert hits >= 8
