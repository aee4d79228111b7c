"""
vision tokenizer: patch embedding followed by learned 2x2 merges

Each merge stage halves both grid axes, so two stages give the 16x token
compression: m = H*W / (patch^2 * 4^stages).
"""

import logging

import numpy as np

from causalflow.models.image import ImageTensor
from causalflow.models.parameter_store import ParameterStore
from causalflow.models.view_errors import CanvasTooSmallError
from causalflow.numerics import ops
from causalflow.numerics.numerics_errors import ShapeError
from causalflow.numerics.tensor import Tensor
from causalflow.schemas.tokenizer.config import TokenizerConfig

log = logging.getLogger("causalflow")

GROUP = "tokenizer"


def token_count(height: int, width: int, cfg: TokenizerConfig) -> int:
    return cfg.token_count(height, width)


def init_tokenizer(store: ParameterStore, cfg: TokenizerConfig, rng: np.random.Generator) -> None:
    patch_inputs = cfg.patch * cfg.patch * cfg.channels
    store.normal("tokenizer.patch_w", GROUP, (patch_inputs, cfg.d_out), rng, cfg.init_scale)
    store.add("tokenizer.patch_b", GROUP, np.zeros(cfg.d_out))
    for stage in range(cfg.downsample_stages):
        store.normal(f"tokenizer.merge{stage}_w", GROUP, (4 * cfg.d_out, cfg.d_out), rng, cfg.init_scale)
        store.add(f"tokenizer.merge{stage}_b", GROUP, np.zeros(cfg.d_out))


def pad_to_canvas(image: ImageTensor, target_h: int, target_w: int, fill: float = 0.0) -> ImageTensor:
    """Place the image top-left on a target_h x target_w canvas"""
    if target_h < image.height or target_w < image.width:
        raise CanvasTooSmallError(
            f"Canvas {target_h}x{target_w} is smaller than the image {image.height}x{image.width}"
        )
    canvas = np.full((target_h, target_w, image.channels), fill, dtype=image.values.dtype)
    canvas[: image.height, : image.width] = image.values
    return ImageTensor(canvas, valid=(image.height, image.width))


def extract_patches(image: ImageTensor, patch: int) -> np.ndarray:
    """(grid_h * grid_w, patch * patch * channels), grid in row-major order"""
    h, w, c = image.values.shape
    grid_h, grid_w = h // patch, w // patch
    blocks = image.values.reshape(grid_h, patch, grid_w, patch, c).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(grid_h * grid_w, patch * patch * c)


def _check_image(image: ImageTensor, cfg: TokenizerConfig) -> None:
    if image.channels != cfg.channels:
        raise ShapeError(f"Tokenizer expects {cfg.channels} channel(s), image has {image.channels}")
    if not cfg.divides(image.height, image.width):
        raise ShapeError(
            f"Image {image.height}x{image.width} is not divisible by {cfg.stride}; pad it onto a canvas first"
        )


def embed_patches(image: ImageTensor, cfg: TokenizerConfig, store: ParameterStore) -> Tensor:
    """Pre-merge embeddings, one row per patch"""
    _check_image(image, cfg)
    patches = Tensor.constant(extract_patches(image, cfg.patch), dtype=store.dtype)
    return ops.linear(patches, store["tokenizer.patch_w"], store["tokenizer.patch_b"])


def _merge_index(grid_h: int, grid_w: int) -> np.ndarray:
    """(4, grid_h/2 * grid_w/2) source rows of each 2x2 neighbourhood: tl, tr, bl, br"""
    r, c = np.meshgrid(np.arange(grid_h // 2), np.arange(grid_w // 2), indexing="ij")
    top = (2 * r) * grid_w + 2 * c
    bottom = (2 * r + 1) * grid_w + 2 * c
    return np.stack([top, top + 1, bottom, bottom + 1]).reshape(4, -1)


def tokenize(image: ImageTensor, cfg: TokenizerConfig, store: ParameterStore) -> Tensor:
    """Map an image to m visual tokens, row-major over the final grid"""
    x = embed_patches(image, cfg, store)
    grid_h, grid_w = image.height // cfg.patch, image.width // cfg.patch
    for stage in range(cfg.downsample_stages):
        index = _merge_index(grid_h, grid_w)
        gathered = ops.concat([ops.take_rows(x, rows) for rows in index], axis=1)
        x = ops.linear(gathered, store[f"tokenizer.merge{stage}_w"], store[f"tokenizer.merge{stage}_b"])
        if stage < cfg.downsample_stages - 1:
            x = ops.silu(x)
        grid_h, grid_w = grid_h // 2, grid_w // 2
    log.debug("tokenized %dx%d image into %d tokens", image.height, image.width, x.shape[0])
    return x
