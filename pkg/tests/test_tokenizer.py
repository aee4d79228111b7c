import numpy as np
import pytest

from causalflow.models.image import ImageTensor
from causalflow.models.parameter_store import ParameterStore
from causalflow.models.view_errors import CanvasTooSmallError
from causalflow.numerics.numerics_errors import ShapeError
from causalflow.schemas.tokenizer.config import TokenizerConfig
from causalflow.services import tokenizer_service
from causalflow.services.tokenizer_service import _merge_index


@pytest.mark.parametrize(
    "height,width,expected",
    [(1024, 1024, 256), (768, 768, 144), (64, 64, 1), (256, 256, 16), (192, 192, 9)],
)
def test_token_count_formula(height, width, expected):
    assert tokenizer_service.token_count(height, width, TokenizerConfig()) == expected


def test_full_scale_config_keeps_the_count():
    assert TokenizerConfig.full_scale().token_count(1024, 1024) == 256
    assert TokenizerConfig.full_scale().stride == 64


@pytest.fixture
def small_tokenizer():
    cfg = TokenizerConfig(patch=4, downsample_stages=2, d_out=8)
    store = ParameterStore(np.float64)
    tokenizer_service.init_tokenizer(store, cfg, np.random.default_rng(3))
    return cfg, store


def test_tokenize_shape_and_determinism(small_tokenizer, rng):
    cfg, store = small_tokenizer
    image = ImageTensor(rng.random((32, 48)))
    first = tokenizer_service.tokenize(image, cfg, store)
    second = tokenizer_service.tokenize(image, cfg, store)
    assert first.shape == (cfg.token_count(32, 48), 8) == (6, 8)
    assert np.array_equal(first.data, second.data)


def test_token_count_ignores_pixel_values(small_tokenizer):
    cfg, store = small_tokenizer
    blank = tokenizer_service.tokenize(ImageTensor(np.zeros((16, 16))), cfg, store)
    full = tokenizer_service.tokenize(ImageTensor(np.ones((16, 16))), cfg, store)
    assert blank.shape == full.shape == (1, 8)


def test_tokenize_refuses_non_divisible_image(small_tokenizer):
    cfg, store = small_tokenizer
    with pytest.raises(ShapeError):
        tokenizer_service.tokenize(ImageTensor(np.zeros((16, 20))), cfg, store)


def test_tokenize_refuses_wrong_channel_count(small_tokenizer):
    cfg, store = small_tokenizer
    with pytest.raises(ShapeError):
        tokenizer_service.tokenize(ImageTensor(np.zeros((16, 16, 3))), cfg, store)


def test_patch_embedding_is_local(small_tokenizer, rng):
    cfg, store = small_tokenizer
    values = rng.random((16, 16))
    swapped = values.copy()
    swapped[0:4, 0:4], swapped[8:12, 4:8] = values[8:12, 4:8], values[0:4, 0:4]

    before = tokenizer_service.embed_patches(ImageTensor(values), cfg, store).data
    after = tokenizer_service.embed_patches(ImageTensor(swapped), cfg, store).data
    # patch (0, 0) is row 0, patch (2, 1) is row 9
    order = np.arange(16)
    order[[0, 9]] = order[[9, 0]]
    assert np.array_equal(after, before[order])


def test_merge_index_groups_two_by_two_neighbourhoods():
    assert _merge_index(2, 4).tolist() == [[0, 2], [1, 3], [4, 6], [5, 7]]


def test_pad_to_canvas_records_valid_region():
    padded = tokenizer_service.pad_to_canvas(ImageTensor(np.ones((768, 500))), 768, 768)
    assert padded.valid == (768, 500)
    assert padded.values[:, 500:].sum() == 0
    assert padded.values[:, :500].min() == 1
    assert TokenizerConfig().token_count(padded.height, padded.width) == 144


def test_pad_to_own_size_is_identity(rng):
    image = ImageTensor(rng.random((8, 12)))
    padded = tokenizer_service.pad_to_canvas(image, 8, 12, fill=0.5)
    assert np.array_equal(padded.values, image.values)
    assert padded.valid == (8, 12)


def test_pad_to_smaller_canvas():
    with pytest.raises(CanvasTooSmallError):
        tokenizer_service.pad_to_canvas(ImageTensor(np.zeros((10, 10))), 8, 12)
