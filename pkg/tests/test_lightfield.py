import os
import numpy as np
import pytest

from ciln.data.lightfield import (LightField, ViewPattern, ViewStack, normalize_coord, angular_grid_coords,
                                  spatial_grid_coords, select_views, extract_epi, sample_patch, save_lightfield,
                                  load_lightfield, save_lightfield_h5, load_lightfield_h5, list_dataset,
                                  load_dataset, save_image, to_uint8)
from ciln.util.utils import DataError, ShapeError, file_digest

def test_normalize_coord_examples():
    assert normalize_coord(0, 7) == -1.0
    assert normalize_coord(3, 7) == 0.0
    assert normalize_coord(6, 7) == 1.0
    assert normalize_coord(1, 3) == 0.0
    assert normalize_coord(0, 1) == 0.0
    assert normalize_coord(3.5, 8) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        normalize_coord(0, 0)

def test_normalize_coord_symmetric():
    for size in (2, 5, 8):
        for i in range(size):
            assert normalize_coord(i, size) == pytest.approx(-normalize_coord(size - 1 - i, size))

def test_angular_grid_coords_row_major():
    coords = angular_grid_coords(2, 3)
    assert coords == [(-1.0, -1.0), (-1.0, 0.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 0.0), (1.0, 1.0)]

def test_spatial_grid_coords():
    coords = spatial_grid_coords(3, 5)
    assert coords.shape == (15, 2)
    assert coords.dtype == np.float32
    np.testing.assert_allclose(coords[0], [-1.0, -1.0])
    np.testing.assert_allclose(coords[4], [1.0, -1.0])
    np.testing.assert_allclose(coords[7], [0.0, 0.0])

def test_lightfield_validates_values():
    with pytest.raises(DataError):
        LightField(np.full((1, 1, 2, 2, 3), 1.5))
    with pytest.raises(DataError):
        LightField(np.full((1, 1, 2, 2, 3), np.nan))
    with pytest.raises(ShapeError):
        LightField(np.zeros((2, 2, 3)))
    lf = LightField(np.zeros((2, 3, 4, 5, 1)))
    assert lf.grid == (2, 3)
    assert (lf.height, lf.width, lf.channels) == (4, 5, 1)

def test_view_pattern_presets():
    assert ViewPattern.from_name('corners', (7, 7)).indices == [(0, 0), (0, 6), (6, 0), (6, 6)]
    assert ViewPattern.from_name('center', (7, 7)).indices == [(3, 3)]
    assert ViewPattern.from_name('cross', (5, 5)).indices == [(0, 2), (2, 0), (2, 4), (4, 2)]
    assert ViewPattern.from_spec('[[1, 2], [0, 0]]', (3, 3)).indices == [(1, 2), (0, 0)]
    assert ViewPattern.from_spec([[0, 1]], (3, 3)).v == 1
    with pytest.raises(ValueError):
        ViewPattern.from_name('diagonal', (7, 7))
    with pytest.raises(ValueError):
        ViewPattern([(0, 0), (0, 0)])
    with pytest.raises(ValueError):
        ViewPattern([])

def test_select_views_concatenates_in_pattern_order(small_lf):
    pattern = ViewPattern([(2, 2), (0, 1)])
    stack = select_views(small_lf, pattern)
    assert stack.data.shape == (6, 16, 16)
    np.testing.assert_array_equal(stack.data[0:3], small_lf.views[2, 2].transpose(2, 0, 1))
    np.testing.assert_array_equal(stack.data[3:6], small_lf.views[0, 1].transpose(2, 0, 1))
    np.testing.assert_array_equal(stack.views()[1], small_lf.views[0, 1])
    assert stack.angular_coords() == [(1.0, 1.0), (-1.0, 0.0)]

def test_select_views_rejects_out_of_grid(small_lf):
    with pytest.raises(DataError):
        select_views(small_lf, ViewPattern([(0, 3)]))

def test_network_input_appends_masks(small_lf):
    stack = select_views(small_lf, ViewPattern.from_name('corners', small_lf.grid))
    assert stack.network_input().shape == (12, 16, 16)
    with_mask = stack.network_input(mask_channels=True)
    assert with_mask.shape == (16, 16, 16)
    np.testing.assert_array_equal(with_mask[12:], 1.0)
    with pytest.raises(ShapeError):
        ViewStack(stack.data, stack.pattern, stack.source_grid, mask=np.ones((3, 16, 16)))

def test_extract_epi_shapes_and_values(small_lf):
    horizontal = extract_epi(small_lf, 'horizontal', 1, 5)
    assert horizontal.shape == (3, 16, 3)
    np.testing.assert_array_equal(horizontal[2], small_lf.views[1, 2, 5])
    vertical = extract_epi(small_lf, 'vertical', 0, 7)
    assert vertical.shape == (3, 16, 3)
    np.testing.assert_array_equal(vertical[1], small_lf.views[1, 0, :, 7])
    with pytest.raises(DataError):
        extract_epi(small_lf, 'horizontal', 3, 0)
    with pytest.raises(DataError):
        extract_epi(small_lf, 'vertical', 0, 16)
    with pytest.raises(ValueError):
        extract_epi(small_lf, 'diagonal', 0, 0)

def test_sample_patch_is_seeded_and_shared_across_views(small_lf):
    a = sample_patch(small_lf, 8, 6, seed=11)
    b = sample_patch(small_lf, 8, 6, seed=11)
    assert a.views.shape == (3, 3, 8, 6, 3)
    np.testing.assert_array_equal(a.views, b.views)
    # the window position is the same in every view
    found = [ (y, x) for y in range(9) for x in range(11)
              if np.array_equal(small_lf.views[0, 0, y:y + 8, x:x + 6], a.views[0, 0]) ]
    assert found
    y, x = found[0]
    np.testing.assert_array_equal(small_lf.views[2, 1, y:y + 8, x:x + 6], a.views[2, 1])
    with pytest.raises(DataError):
        sample_patch(small_lf, 17, 4, seed=0)

def test_directory_round_trip(tmp_path, small_lf):
    directory = str(tmp_path / 'scene')
    save_lightfield(small_lf, directory)
    assert os.path.isfile(os.path.join(directory, 'view_r2_c1.png'))
    loaded = load_lightfield(directory)
    assert loaded.views.shape == small_lf.views.shape
    assert np.max(np.abs(loaded.views - small_lf.views)) <= 1.0 / 255 + 1e-6

def test_resave_is_byte_identical(tmp_path, small_lf):
    first = str(tmp_path / 'first')
    second = str(tmp_path / 'second')
    save_lightfield(small_lf, first)
    save_lightfield(load_lightfield(first), second)
    assert file_digest(first) == file_digest(second)

def test_missing_view_names_the_file(tmp_path, small_lf):
    directory = str(tmp_path / 'scene')
    save_lightfield(small_lf, directory)
    os.remove(os.path.join(directory, 'view_r1_c2.png'))
    with pytest.raises(DataError, match='view_r1_c2.png'):
        load_lightfield(directory)

def test_missing_descriptor(tmp_path):
    with pytest.raises(DataError, match='meta.json'):
        load_lightfield(str(tmp_path))

def test_h5_round_trip_is_exact(tmp_path, small_lf):
    path = str(tmp_path / 'scene.h5')
    save_lightfield_h5(small_lf, path)
    np.testing.assert_array_equal(load_lightfield_h5(path).views, small_lf.views)
    with pytest.raises(DataError):
        load_lightfield_h5(str(tmp_path / 'missing.h5'))

def test_load_dataset_from_directory_and_list(tmp_path, small_lf, flat_lf):
    root = tmp_path / 'data'
    save_lightfield(small_lf, str(root / 'a'))
    save_lightfield_h5(flat_lf, str(root / 'b.h5'))
    (root / 'notes.txt').write_text('not a light field')
    lfs, paths = load_dataset(str(root))
    assert [ os.path.basename(p) for p in paths ] == ['a', 'b.h5']
    assert lfs[1].grid == (7, 7)
    list_file = root / 'train.list'
    list_file.write_text('# scenes\nb.h5\n\na\n')
    assert [ os.path.basename(p) for p in list_dataset(str(list_file)) ] == ['b.h5', 'a']
    with pytest.raises(DataError):
        list_dataset(str(tmp_path / 'nothing'))
    (tmp_path / 'empty').mkdir()
    with pytest.raises(DataError):
        list_dataset(str(tmp_path / 'empty'))

def test_save_image_clamps(tmp_path):
    image = np.array([[[-0.5, 0.5, 2.0]]])
    np.testing.assert_array_equal(to_uint8(image), [[[0, 128, 255]]])
    save_image(str(tmp_path / 'pixel.png'), image)
    assert os.path.getsize(str(tmp_path / 'pixel.png')) > 0
