import numpy as np
import pytest

from wstal.adam import init_adam
from wstal.gradcheck import random_instance
from wstal.model import PARAM_FIELDS, LossWeights
from wstal.numerics import make_rng
from wstal.training import (
    CheckpointError,
    TrainConfig,
    TrainingError,
    TrainingVideo,
    load_checkpoint,
    save_checkpoint,
    train_stream,
    write_trace_csv,
)


def make_videos(rng, count=6, C=3, d=8, t_range=(10, 20), scale=1.0):
    videos = []
    for i in range(count):
        T = int(rng.integers(*t_range))
        videos.append(TrainingVideo(
            video_id=f"v{i:02d}",
            label_ids=(int(rng.integers(1, C + 1)),),
            features={
                "rgb": scale * rng.standard_normal((T, d)),
                "flow": scale * rng.standard_normal((T, d)),
            },
        ))
    return videos


def small_config(**kw):
    defaults = dict(epochs=3, seed=9, hidden_dim=8)
    defaults.update(kw)
    return TrainConfig(**defaults)


def test_same_seed_gives_bit_identical_models():
    videos = make_videos(make_rng(0))
    a, _, trace_a = train_stream(videos, "rgb", 3, small_config())
    b, _, trace_b = train_stream(videos, "rgb", 3, small_config())
    for name in PARAM_FIELDS:
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert trace_a == trace_b


def test_different_seeds_differ():
    videos = make_videos(make_rng(1))
    a, _, _ = train_stream(videos, "rgb", 3, small_config(seed=1))
    b, _, _ = train_stream(videos, "rgb", 3, small_config(seed=2))
    assert not np.array_equal(a.w1, b.w1)


def test_streams_are_independent_models():
    videos = make_videos(make_rng(2))
    rgb, _, _ = train_stream(videos, "rgb", 3, small_config())
    flow, _, _ = train_stream(videos, "flow", 3, small_config())
    assert not np.array_equal(rgb.w1, flow.w1)


def test_zero_epochs_rejected():
    videos = make_videos(make_rng(3))
    with pytest.raises(ValueError, match="epochs"):
        train_stream(videos, "rgb", 3, small_config(epochs=0))


def test_missing_modality_rejected():
    videos = make_videos(make_rng(4))
    videos[2].features.pop("flow")
    with pytest.raises(TrainingError, match="flow"):
        train_stream(videos, "flow", 3, small_config())


def test_unknown_modality_rejected():
    videos = make_videos(make_rng(5))
    with pytest.raises(TrainingError, match="unknown modality"):
        train_stream(videos, "depth", 3, small_config())


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_aborts_naming_video():
    videos = make_videos(make_rng(6), scale=1e160)  # overflow in the forward pass
    with pytest.raises(TrainingError, match="v0"):
        train_stream(videos, "rgb", 3, small_config(epochs=1))


def test_training_does_not_mutate_features():
    videos = make_videos(make_rng(7))
    before = [v.features["rgb"].copy() for v in videos]
    train_stream(videos, "rgb", 3, small_config())
    for prev, video in zip(before, videos):
        assert np.array_equal(prev, video.features["rgb"])


def test_trace_has_one_row_per_epoch_and_csv_round_trips(tmp_path):
    videos = make_videos(make_rng(8))
    _, _, trace = train_stream(videos, "rgb", 3, small_config(epochs=4))
    assert [t.epoch for t in trace] == [1, 2, 3, 4]
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "epoch,l_fg,l_bg,l_guide,l_cluster,l_sparse,total"
    assert len(rows) == 5
    first = rows[1].split(",")
    assert float(first[1]) == trace[0].fg
    assert float(first[6]) == trace[0].total


def test_epoch_mean_foreground_loss_non_increasing_early(separable_dataset):
    # Statistical property of the first five epochs on separable data.
    videos, num_classes = separable_dataset
    for seed in (0, 1, 2):
        _, _, trace = train_stream(videos, "rgb", num_classes,
                                   TrainConfig(epochs=5, seed=seed))
        fg = [t.fg for t in trace]
        assert all(a >= b - 1e-12 for a, b in zip(fg, fg[1:])), (seed, fg)


# ------------------------------------------------------------- checkpoints

def test_checkpoint_round_trip_bit_identical(tmp_path):
    rng = make_rng(10)
    model, X, labels = random_instance(rng)
    state = init_adam(model, lr=3e-4)
    state.step_count = 17
    state.m.w1[...] = rng.standard_normal(state.m.w1.shape)
    state.v.w1[...] = rng.random(state.v.w1.shape)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, state)
    loaded, loaded_state = load_checkpoint(path)
    for name in PARAM_FIELDS:
        assert np.array_equal(getattr(model, name), getattr(loaded, name))
        assert np.array_equal(getattr(state.m, name), getattr(loaded_state.m, name))
        assert np.array_equal(getattr(state.v, name), getattr(loaded_state.v, name))
    assert loaded_state.step_count == 17
    assert loaded_state.lr == 3e-4
    # save(load(x)) is byte-identical
    path2 = tmp_path / "model2.ckpt"
    save_checkpoint(path2, loaded, loaded_state)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_bad_magic(tmp_path):
    rng = make_rng(11)
    model, _, _ = random_instance(rng)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, init_adam(model))
    raw = bytearray(path.read_bytes())
    raw[0] = ord(b"X")
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_truncated(tmp_path):
    rng = make_rng(12)
    model, _, _ = random_instance(rng)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, init_adam(model))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError, match="expected .* bytes"):
        load_checkpoint(path)


def test_checkpoint_wrong_dimension_names_both(tmp_path):
    rng = make_rng(13)
    model, _, _ = random_instance(rng)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model, init_adam(model))
    d = model.feature_dim
    with pytest.raises(CheckpointError, match=f"dim {d}.*expected dim {d + 3}"):
        load_checkpoint(path, expected_dim=d + 3)


def test_checkpoint_cadence_writes_files(tmp_path):
    videos = make_videos(make_rng(14))
    config = small_config(epochs=4, checkpoint_every=2)
    train_stream(videos, "rgb", 3, config, checkpoint_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["rgb_epoch00002.ckpt", "rgb_epoch00004.ckpt"]
    load_checkpoint(tmp_path / "rgb_epoch00004.ckpt")
