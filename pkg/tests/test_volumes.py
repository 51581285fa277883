import numpy as np
import pytest

from headforge.errors import DatatypeError, GeometryError, TaxonomyError
from headforge.geometry import Geometry
from headforge.volumes import (
    IntensityVolume,
    LabelVolume,
    ProbVolume,
    argmax_labels,
    one_hot,
    renormalize_channels,
)

from conftest import make_label_volume


def test_geometry_rejects_nonpositive_voxel_size():
    with pytest.raises(GeometryError):
        Geometry.axis_aligned((4, 4, 4), (1.0, 0.0, 1.0))


def test_geometry_rejects_affine_voxel_size_mismatch():
    aff = np.diag([2.0, 1.0, 1.0, 1.0])
    with pytest.raises(GeometryError):
        Geometry(voxel_size=np.ones(3), dims=np.array([4, 4, 4]), affine=aff)


def test_geometry_voxel_volume():
    g = Geometry.axis_aligned((4, 4, 4), (0.75, 0.75, 0.75))
    assert g.voxel_volume_mm3 == pytest.approx(0.421875)


def test_label_volume_rejects_float_data():
    geom = Geometry.isotropic((2, 2, 2), 1.0)
    with pytest.raises(DatatypeError):
        LabelVolume(geometry=geom, data=np.zeros((2, 2, 2), dtype=np.float32))


def test_label_volume_rejects_shape_mismatch():
    geom = Geometry.isotropic((2, 2, 2), 1.0)
    with pytest.raises(GeometryError):
        LabelVolume(geometry=geom, data=np.zeros((2, 2, 3), dtype=np.int32))


def test_prob_volume_rejects_bad_channel_sums():
    geom = Geometry.isotropic((2, 2, 2), 1.0)
    data = np.full((2, 2, 2, 2), 0.3, dtype=np.float32)  # sums to 0.6
    with pytest.raises(DatatypeError):
        ProbVolume(geometry=geom, data=data)


def test_prob_volume_rejects_out_of_range_values():
    geom = Geometry.isotropic((1, 1, 1), 1.0)
    data = np.array([1.5, -0.5], dtype=np.float32).reshape(2, 1, 1, 1)
    with pytest.raises(DatatypeError):
        ProbVolume(geometry=geom, data=data)


def test_intensity_volume_rejects_nan():
    geom = Geometry.isotropic((2, 2, 2), 1.0)
    data = np.zeros((2, 2, 2), dtype=np.float32)
    data[0, 0, 0] = np.nan
    with pytest.raises(DatatypeError):
        IntensityVolume(geometry=geom, data=data)


def test_one_hot_single_voxel_maps_to_expected_channel(small_taxonomy):
    # raw label 3 maps to class 3 here; build a taxonomy where 3 -> class 2
    tax = small_taxonomy
    tax = type(tax)(
        classes=tax.classes[:4],
        raw_to_class={0: 0, 1: 1, 3: 2, 4: 3},
        morph_rules=(),
    )
    vol = make_label_volume(np.full((1, 1, 1), 3, dtype=np.int32))
    pv = one_hot(vol, tax)
    np.testing.assert_array_equal(pv.data[:, 0, 0, 0], [0.0, 0.0, 1.0, 0.0])


def test_one_hot_all_background(small_taxonomy):
    vol = make_label_volume(np.zeros((3, 3, 3), dtype=np.int32))
    pv = one_hot(vol, small_taxonomy)
    np.testing.assert_array_equal(pv.data[0], np.ones((3, 3, 3)))
    np.testing.assert_array_equal(pv.data[1:], np.zeros((3, 3, 3, 3)))


def test_one_hot_unmapped_value_names_value_and_voxel(small_taxonomy):
    data = np.zeros((2, 2, 2), dtype=np.int32)
    data[1, 0, 1] = 9
    vol = make_label_volume(data)
    with pytest.raises(TaxonomyError, match=r"9.*\(1, 0, 1\)"):
        one_hot(vol, small_taxonomy)


def test_argmax_is_inverse_of_one_hot(small_taxonomy):
    rng = np.random.default_rng(7)
    data = rng.integers(0, 4, size=(4, 4, 4)).astype(np.int32)
    vol = make_label_volume(data)
    back = argmax_labels(one_hot(vol, small_taxonomy))
    np.testing.assert_array_equal(back.data, data)


def test_argmax_tie_breaks_to_lowest_class():
    geom = Geometry.isotropic((1, 1, 1), 1.0)
    pv = ProbVolume(
        geometry=geom, data=np.array([0.5, 0.5], dtype=np.float32).reshape(2, 1, 1, 1)
    )
    assert argmax_labels(pv).data[0, 0, 0] == 0


def test_argmax_picks_highest_channel():
    geom = Geometry.isotropic((1, 1, 1), 1.0)
    pv = ProbVolume(
        geometry=geom,
        data=np.array([0.2, 0.3, 0.5], dtype=np.float32).reshape(3, 1, 1, 1),
    )
    assert argmax_labels(pv).data[0, 0, 0] == 2


def test_argmax_one_hot_roundtrip_property(small_taxonomy):
    # randomized property: argmax(one_hot(L)) == mapped L exactly
    rng = np.random.default_rng(123)
    for _ in range(20):
        data = rng.integers(0, 4, size=(6, 5, 4)).astype(np.int64)
        vol = make_label_volume(data)
        back = argmax_labels(one_hot(vol, small_taxonomy))
        np.testing.assert_array_equal(back.data, data)


def test_renormalize_channels_sums_to_one_exactly_within_tol():
    rng = np.random.default_rng(5)
    raw = rng.random((5, 6, 6, 6)).astype(np.float32)
    out = renormalize_channels(raw)
    sums = out.sum(axis=0, dtype=np.float64)
    assert np.abs(sums - 1.0).max() < 1e-6
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_renormalize_channels_empty_voxels_become_background():
    raw = np.zeros((3, 2, 2, 2), dtype=np.float32)
    out = renormalize_channels(raw)
    np.testing.assert_array_equal(out[0], np.ones((2, 2, 2)))
