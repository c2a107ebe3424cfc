import struct

import numpy as np
import pytest

from ldpaudit.data import (
    Dataset,
    SyntheticSpec,
    filter_by_label,
    generate_blobs,
    load_idx_images,
    load_idx_labels,
)
from ldpaudit.nn import Example


def test_default_blob_shape():
    ds = generate_blobs(SyntheticSpec())
    assert ds.features.shape == (1000, 20)
    assert ds.labels.shape == (1000,)
    assert ds.num_classes == 10
    assert ds.input_dim == 20
    assert len(ds) == 1000
    for label in range(10):
        assert (ds.labels == label).sum() == 100


def test_blob_determinism():
    a = generate_blobs(SyntheticSpec(seed=3))
    b = generate_blobs(SyntheticSpec(seed=3))
    c = generate_blobs(SyntheticSpec(seed=4))
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert not np.array_equal(a.features, c.features)


def test_blob_centers_orthogonal_when_noiseless():
    # with zero noise every example sits exactly on its class center;
    # centers are orthogonal with norm equal to the separation
    spec = SyntheticSpec(num_classes=4, input_dim=9, examples_per_class=3,
                        class_separation=2.5, noise_sigma=0.0, seed=2)
    ds = generate_blobs(spec)
    centers = np.stack([ds.features[ds.labels == k][0] for k in range(4)])
    for k in range(4):
        np.testing.assert_array_equal(ds.features[ds.labels == k], np.tile(centers[k], (3, 1)))
        assert np.linalg.norm(centers[k]) == pytest.approx(2.5, rel=1e-12)
    gram = centers @ centers.T
    np.testing.assert_allclose(gram - np.diag(np.diag(gram)), 0.0, atol=1e-9)


def test_blob_class_means_converge_to_centers():
    # the noise choice does not perturb the direction draws, so a zero
    # noise run with the same seed exposes the true centers
    noisy = SyntheticSpec(num_classes=5, input_dim=8, examples_per_class=200,
                         class_separation=3.0, noise_sigma=0.5, seed=8)
    clean = SyntheticSpec(num_classes=5, input_dim=8, examples_per_class=200,
                         class_separation=3.0, noise_sigma=0.0, seed=8)
    ds = generate_blobs(noisy)
    centers = generate_blobs(clean)
    tol = 3.0 * noisy.noise_sigma / np.sqrt(noisy.examples_per_class)
    for k in range(5):
        mean = ds.features[ds.labels == k].mean(axis=0)
        center = centers.features[centers.labels == k][0]
        np.testing.assert_allclose(mean, center, atol=tol)


def test_blob_more_classes_than_dims():
    ds = generate_blobs(SyntheticSpec(num_classes=5, input_dim=3, examples_per_class=2, seed=0))
    assert ds.features.shape == (10, 3)


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(noise_sigma=-0.1)
    with pytest.raises(ValueError):
        SyntheticSpec(num_classes=0)
    with pytest.raises(ValueError):
        SyntheticSpec(examples_per_class=0)
    with pytest.raises(ValueError):
        SyntheticSpec(class_separation=0.0)


def test_dataset_example_accessor():
    ds = generate_blobs(SyntheticSpec(num_classes=3, input_dim=4, examples_per_class=2, seed=1))
    ex = ds.example(3)
    assert isinstance(ex, Example)
    assert isinstance(ex.label, int)
    np.testing.assert_array_equal(ex.features, ds.features[3])


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.array([0, 1]), 2)  # length mismatch
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([0, 5]), 2)  # label out of range


def test_filter_by_label():
    ds = generate_blobs(SyntheticSpec(num_classes=3, input_dim=4, examples_per_class=5, seed=1))
    subset = filter_by_label(ds, 2)
    assert len(subset) == 5
    assert np.all(subset.labels == 2)
    assert subset.num_classes == 3  # class space preserved
    with pytest.raises(ValueError):
        filter_by_label(ds, 7)
    lopsided = Dataset(np.zeros((2, 2)), np.array([0, 0]), 2)
    with pytest.raises(ValueError):
        filter_by_label(lopsided, 1)


def idx_image_bytes(values, n, rows, cols):
    header = struct.pack(">4l", 0x00000803, n, rows, cols)
    return header + bytes(values)


def idx_label_bytes(values):
    return struct.pack(">2l", 0x00000801, len(values)) + bytes(values)


def test_idx_round_trip(tmp_path):
    img_path = tmp_path / "imgs.idx3-ubyte"
    lbl_path = tmp_path / "lbls.idx1-ubyte"
    pixels = [0, 51, 102, 153, 204, 255, 10, 20]
    img_path.write_bytes(idx_image_bytes(pixels, 2, 2, 2))
    lbl_path.write_bytes(idx_label_bytes([3, 7]))
    images = load_idx_images(str(img_path))
    labels = load_idx_labels(str(lbl_path))
    assert images.shape == (2, 4)
    np.testing.assert_allclose(images[0], np.array([0, 51, 102, 153]) / 255.0, rtol=1e-12)
    np.testing.assert_allclose(images[1], np.array([204, 255, 10, 20]) / 255.0, rtol=1e-12)
    np.testing.assert_array_equal(labels, [3, 7])
    ds = Dataset(images, labels, 10)
    assert ds.example(1).label == 7


def test_idx_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(struct.pack(">4l", -0x21524111, 1, 2, 2) + bytes(4))  # 0xDEADBEEF
    with pytest.raises(ValueError, match="magic"):
        load_idx_images(str(path))
    lbl = tmp_path / "bad-lbl.idx"
    lbl.write_bytes(struct.pack(">2l", 0x00000803, 1) + bytes(1))  # image magic in label file
    with pytest.raises(ValueError, match="magic"):
        load_idx_labels(str(lbl))


def test_idx_truncated(tmp_path):
    path = tmp_path / "short.idx"
    path.write_bytes(idx_image_bytes([7] * 3, 1, 2, 2))  # body needs 4 bytes
    with pytest.raises(ValueError, match="truncated"):
        load_idx_images(str(path))
    header_only = tmp_path / "header.idx"
    header_only.write_bytes(struct.pack(">2l", 0x00000803, 5))
    with pytest.raises(ValueError, match="truncated"):
        load_idx_images(str(header_only))
    lbl = tmp_path / "short-lbl.idx"
    lbl.write_bytes(idx_label_bytes([1, 2])[:-1])
    with pytest.raises(ValueError, match="truncated"):
        load_idx_labels(str(lbl))
