"""
multi-crop planning: one global view plus up to k_max local crops per page
"""

import logging
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from causalflow.models.configuration_error import ConfigurationError
from causalflow.models.image import ImageTensor
from causalflow.models.view_errors import DimensionMismatchError
from causalflow.schemas.planner.plan import CropPlan, CropRect, PlannerConfig, ViewTransform
from causalflow.services.tokenizer_service import pad_to_canvas

log = logging.getLogger("causalflow")


def _fit(source: CropRect, canvas: Tuple[int, int]) -> ViewTransform:
    """Largest aspect-preserving size of source that fits inside canvas"""
    scale = min(Fraction(canvas[0], source.width), Fraction(canvas[1], source.height))
    resized = (
        max(1, min(canvas[0], round(source.width * scale))),
        max(1, min(canvas[1], round(source.height * scale))),
    )
    return ViewTransform(source=source, canvas=canvas, resized=resized)


def choose_grid(width: int, height: int, cfg: PlannerConfig) -> Tuple[int, int]:
    """
    (rows, cols) of the local crop grid, (0, 0) when no crop applies.
    Candidates with rows * cols <= k_max are ranked by aspect distortion
    |cols * Lw / width - rows * Lh / height|, then by more tiles, then by
    fewer rows.
    """
    local_w, local_h = cfg.local_canvas
    if (width < local_w and height < local_h) or cfg.k_max == 0:
        return 0, 0
    candidates = [(r, c) for r in range(1, cfg.k_max + 1) for c in range(1, cfg.k_max // r + 1)]

    def key(grid: Tuple[int, int]):
        r, c = grid
        distortion = abs(Fraction(c * local_w, width) - Fraction(r * local_h, height))
        return distortion, -r * c, r

    return min(candidates, key=key)


def _tile(width: int, height: int, rows: int, cols: int) -> List[CropRect]:
    xs = [i * width // cols for i in range(cols + 1)]
    ys = [i * height // rows for i in range(rows + 1)]
    return [CropRect(x0=xs[c], y0=ys[r], x1=xs[c + 1], y1=ys[r + 1]) for r in range(rows) for c in range(cols)]


def plan(width: int, height: int, cfg: PlannerConfig) -> CropPlan:
    if width < 1 or height < 1:
        raise ConfigurationError(f"Page size must be positive, got {width}x{height}")
    rows, cols = choose_grid(width, height, cfg)
    page = CropRect(x0=0, y0=0, x1=width, y1=height)
    local_views = [_fit(rect, cfg.local_canvas) for rect in _tile(width, height, rows, cols)] if rows else []
    result = CropPlan(
        width=width,
        height=height,
        grid=(rows, cols),
        global_view=_fit(page, cfg.global_canvas),
        local_views=local_views,
    )
    log.debug("planned %dx%d page: grid %dx%d, k=%d", width, height, rows, cols, result.k)
    return result


def token_budget(crop_plan: CropPlan, cfg: PlannerConfig) -> int:
    return crop_plan.k * cfg.n_l + cfg.n_g


def describe(crop_plan: CropPlan, cfg: PlannerConfig) -> str:
    rows, cols = crop_plan.grid
    return f"k={crop_plan.k} budget={token_budget(crop_plan, cfg)} grid={rows}x{cols}"


def resize_nearest(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbour resize sampling at pixel centres"""
    src_h, src_w = values.shape[:2]
    rows = ((2 * np.arange(height) + 1) * src_h) // (2 * height)
    cols = ((2 * np.arange(width) + 1) * src_w) // (2 * width)
    return values[rows][:, cols]


def _render_view(image: ImageTensor, view: ViewTransform) -> ImageTensor:
    src = view.source
    region = image.values[src.y0 : src.y1, src.x0 : src.x1]
    resized = ImageTensor(resize_nearest(region, view.resized[1], view.resized[0]))
    return pad_to_canvas(resized, view.canvas[1], view.canvas[0])


def apply(crop_plan: CropPlan, image: ImageTensor) -> Tuple[ImageTensor, List[ImageTensor]]:
    """Materialize the global canvas and every local canvas of a plan"""
    if (image.width, image.height) != (crop_plan.width, crop_plan.height):
        raise DimensionMismatchError(
            f"Plan is for a {crop_plan.width}x{crop_plan.height} page, image is {image.width}x{image.height}"
        )
    return _render_view(image, crop_plan.global_view), [_render_view(image, v) for v in crop_plan.local_views]


def single_view(image: ImageTensor, canvas: Tuple[int, int]) -> ImageTensor:
    """Whole page resized and padded onto one canvas"""
    page = CropRect(x0=0, y0=0, x1=image.width, y1=image.height)
    return _render_view(image, _fit(page, canvas))
