import pytest

from wstal.data import load_manifest
from wstal.synthetic import SyntheticSpec, generate_synthetic
from wstal.training import load_training_videos


@pytest.fixture(scope="session")
def separable_dataset(tmp_path_factory):
    """Small, well-separated synthetic training set loaded into memory."""
    out = tmp_path_factory.mktemp("separable")
    spec = SyntheticSpec(num_classes=3, feature_dim=16, train_videos=10, test_videos=0,
                         min_segments=40, max_segments=60, max_block_len=12,
                         separation=5.0, noise=1.0, seed=123)
    paths = generate_synthetic(spec, out)
    dataset = load_manifest(paths.train_manifest)
    return load_training_videos(dataset), dataset.num_classes
