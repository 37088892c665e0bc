import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttqnn.data import (
    IdxParseError,
    RawDataset,
    area_weights,
    class_means,
    downsample_and_filter,
    generate_synthetic,
    idx_bytes,
    load_dataset,
    normalize,
    parse_idx,
    parse_idx_bytes,
    save_dataset,
    train_test_split,
    write_idx,
)


def test_synthetic_is_seeded_and_unit_norm():
    a = generate_synthetic(4, 400, 4.0, 3)
    b = generate_synthetic(4, 400, 4.0, 3)
    assert np.array_equal(a.vectors, b.vectors) and len(a) == 800
    assert np.allclose(np.linalg.norm(a.vectors, axis=1), 1)
    assert np.bincount(a.labels).tolist() == [400, 400]


def test_synthetic_noiseless_limit():
    mu0, mu1 = class_means(3)
    assert mu0 @ mu1 == 0
    d = generate_synthetic(3, 2, 1e12, 0)
    assert np.allclose(d.vectors[d.labels == 0], mu0) and np.allclose(d.vectors[d.labels == 1], mu1)


def test_synthetic_validation():
    with pytest.raises(ValueError):
        generate_synthetic(3, 0, 1.0)
    with pytest.raises(ValueError):
        generate_synthetic(3, 1, 0.0)


def test_split_keeps_class_balance():
    train, test = train_test_split(generate_synthetic(2, 10, 2.0, 0), 6)
    assert np.bincount(train.labels).tolist() == [6, 6]
    assert np.bincount(test.labels).tolist() == [4, 4]


def test_normalize_examples():
    d = normalize(RawDataset([[3.0, 4.0]], [0]))
    assert np.allclose(d.vectors, [[0.6, 0.8]])
    assert np.array_equal(normalize(d).vectors, d.vectors)


def test_normalize_rejects_zero_with_index():
    with pytest.raises(ValueError, match="index 1"):
        normalize(RawDataset([[1.0, 0.0], [0.0, 0.0]], [0, 1]))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_normalize_property(seed):
    rng = np.random.default_rng(seed)
    d = normalize(RawDataset(rng.standard_normal((50, 8)) * rng.uniform(0.01, 100), np.zeros(50)))
    assert np.allclose(np.linalg.norm(d.vectors, axis=1), 1, atol=1e-12)
    assert np.allclose(normalize(d).vectors, d.vectors, atol=1e-12)


def test_raw_dataset_invariants():
    with pytest.raises(ValueError):
        RawDataset(np.zeros((2, 3)), [0, 1])
    with pytest.raises(ValueError):
        RawDataset(np.zeros((2, 4)), [0, 2])
    with pytest.raises(ValueError):
        RawDataset(np.zeros((2, 4)), [0])


# ---------------------------------------------------------------------------
# IDX
# ---------------------------------------------------------------------------


def test_idx_header_parse():
    images = np.zeros((3, 28, 28), np.uint8)
    img, lab = idx_bytes(images, [1, 2, 3])
    assert img[:4] == bytes([0, 0, 8, 3]) and lab[:4] == bytes([0, 0, 8, 1])
    out, labels = parse_idx_bytes(img, lab)
    assert out.shape == (3, 28, 28) and labels.tolist() == [1, 2, 3]


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (2, 5, 7), dtype=np.uint8)
    labels = np.array([4, 9], np.uint8)
    write_idx(images, labels, tmp_path / "img", tmp_path / "lab")
    back, back_labels = parse_idx(tmp_path / "img", tmp_path / "lab")
    assert np.array_equal(back, images) and np.array_equal(back_labels, labels)


def test_idx_count_mismatch():
    img, _ = idx_bytes(np.zeros((2, 2, 2), np.uint8), [0, 1])
    _, lab = idx_bytes(np.zeros((3, 2, 2), np.uint8), [0, 1, 2])
    with pytest.raises(IdxParseError, match="count mismatch"):
        parse_idx_bytes(img, lab)


def test_idx_bad_magic():
    img, lab = idx_bytes(np.zeros((1, 2, 2), np.uint8), [0])
    with pytest.raises(IdxParseError, match="offset 0") as err:
        parse_idx_bytes(lab, lab)
    assert err.value.offset == 0


def test_idx_truncated():
    img, lab = idx_bytes(np.zeros((2, 3, 3), np.uint8), [0, 1])
    with pytest.raises(IdxParseError) as err:
        parse_idx_bytes(img[:-1], lab)
    assert err.value.offset == len(img) - 1
    with pytest.raises(IdxParseError):
        parse_idx_bytes(img[:10], lab)
    with pytest.raises(IdxParseError):
        parse_idx_bytes(struct.pack(">H", 8), lab)


# ---------------------------------------------------------------------------
# downsampling
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("side", [4, 16, 32, 64])
def test_area_weights_rows_and_columns(side):
    w = area_weights(28, side)
    assert np.allclose(w.sum(axis=1), 1)
    assert np.allclose(w.sum(axis=0), side / 28)


def test_downsample_constant_and_labels():
    images = np.full((4, 28, 28), 7, np.uint8)
    d = downsample_and_filter(images, [0, 2, 5, 2], (0, 2), 16)
    assert d.vectors.shape == (3, 256)
    assert np.allclose(d.vectors, 7)
    assert d.labels.tolist() == [0, 1, 1]


def test_downsample_preserves_mean():
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, (5, 28, 28), dtype=np.uint8)
    for side in (16, 32):
        d = downsample_and_filter(images, [0, 1, 0, 1, 0], (0, 1), side)
        assert np.allclose(d.vectors.mean(axis=1), images.reshape(5, -1).mean(axis=1), atol=1e-9)


def test_downsample_drops_blank_and_rejects_empty_class():
    images = np.zeros((3, 28, 28), np.uint8)
    images[1:] = 9
    d = downsample_and_filter(images, [0, 0, 1], (0, 1), 4)
    assert len(d) == 2 and d.provenance["dropped_zero"] == 1
    with pytest.raises(ValueError):
        downsample_and_filter(images, [0, 0, 0], (0, 1), 4)
    with pytest.raises(ValueError):
        downsample_and_filter(images, [0, 0, 1], (1, 1), 4)


def test_dataset_cache_round_trip(tmp_path):
    d = generate_synthetic(2, 3, 2.0, 0)
    save_dataset(d, tmp_path / "d.json")
    back = load_dataset(tmp_path / "d.json")
    assert np.array_equal(back.vectors, d.vectors) and back.provenance == d.provenance
