import numpy as np
import pytest

from causalflow.models.configuration_error import ConfigurationError
from causalflow.models.image import ImageTensor
from causalflow.models.view_errors import DimensionMismatchError
from causalflow.schemas.planner.plan import PlannerConfig
from causalflow.services import planner_service, tokenizer_service

FULL_SCALE = PlannerConfig.full_scale()


@pytest.mark.parametrize(
    "width,height,grid,budget",
    [
        (700, 500, (0, 0), 256),
        (1536, 768, (1, 2), 544),
        (1536, 1536, (2, 2), 832),
        (2304, 1536, (2, 3), 1120),
        (4608, 768, (1, 6), 1120),
        (800, 100, (1, 6), 1120),
    ],
)
def test_plan_with_full_scale(width, height, grid, budget):
    crop_plan = planner_service.plan(width, height, FULL_SCALE)
    assert crop_plan.grid == grid
    assert crop_plan.k == grid[0] * grid[1]
    assert planner_service.token_budget(crop_plan, FULL_SCALE) == budget


def test_describe_line():
    assert planner_service.describe(planner_service.plan(700, 500, FULL_SCALE), FULL_SCALE) == "k=0 budget=256 grid=0x0"
    assert planner_service.describe(planner_service.plan(1536, 768, FULL_SCALE), FULL_SCALE) == "k=2 budget=544 grid=1x2"


def test_no_crops_when_k_max_is_zero():
    cfg = FULL_SCALE.model_copy(update={"k_max": 0})
    assert planner_service.plan(4000, 3000, cfg).k == 0


def test_page_must_have_positive_size():
    with pytest.raises(ConfigurationError):
        planner_service.plan(0, 10, FULL_SCALE)


def test_budget_stays_in_range_and_plan_is_deterministic():
    rng = np.random.default_rng(5)
    low, high = FULL_SCALE.budget_bounds
    assert (low, high) == (256, 1120)
    for width, height in rng.integers(1, 5000, size=(10000, 2)):
        crop_plan = planner_service.plan(int(width), int(height), FULL_SCALE)
        assert low <= planner_service.token_budget(crop_plan, FULL_SCALE) <= high
        assert crop_plan.k <= FULL_SCALE.k_max
        if width < 768 and height < 768:
            assert crop_plan.k == 0
    assert planner_service.plan(1234, 987, FULL_SCALE) == planner_service.plan(1234, 987, FULL_SCALE)


@pytest.mark.parametrize("width,height", [(1536, 768), (1001, 1999), (2304, 1537), (769, 3001)])
def test_local_crops_tile_the_page(width, height):
    crop_plan = planner_service.plan(width, height, FULL_SCALE)
    cover = np.zeros((height, width), dtype=np.int32)
    for view in crop_plan.local_views:
        src = view.source
        cover[src.y0 : src.y1, src.x0 : src.x1] += 1
    assert np.all(cover == 1)


def test_views_fit_their_canvas():
    crop_plan = planner_service.plan(1999, 1001, FULL_SCALE)
    assert crop_plan.global_view.resized == (1024, 513)
    for view in crop_plan.local_views:
        assert view.resized[0] <= 768 and view.resized[1] <= 768
        assert max(view.resized) == 768


def test_square_page_on_square_canvas_needs_no_padding(tiny_cfg):
    global_view, _ = planner_service.apply(
        planner_service.plan(32, 32, tiny_cfg.planner), ImageTensor(np.ones((32, 32)))
    )
    assert global_view.valid == (32, 32)
    assert global_view.values.min() == 1.0


def test_wide_page_pads_the_bottom_half(tiny_cfg):
    global_view, _ = planner_service.apply(
        planner_service.plan(64, 32, tiny_cfg.planner), ImageTensor(np.ones((32, 64)))
    )
    assert global_view.valid == (16, 32)
    assert global_view.values[:16].min() == 1.0
    assert global_view.values[16:].max() == 0.0


def test_apply_checks_dimensions(tiny_cfg):
    with pytest.raises(DimensionMismatchError):
        planner_service.apply(planner_service.plan(24, 24, tiny_cfg.planner), ImageTensor(np.ones((24, 30))))


def test_tokens_of_applied_views_match_the_budget(tiny_cfg, tiny_model, rng):
    cfg = tiny_cfg.planner
    crop_plan = planner_service.plan(24, 24, cfg)
    assert crop_plan.grid == (2, 2)
    global_view, local_views = planner_service.apply(crop_plan, ImageTensor(rng.random((24, 24))))
    counts = [tokenizer_service.tokenize(v, tiny_cfg.tokenizer, tiny_model.store).shape[0] for v in local_views]
    global_count = tokenizer_service.tokenize(global_view, tiny_cfg.tokenizer, tiny_model.store).shape[0]
    assert counts == [cfg.n_l] * 4
    assert global_count == cfg.n_g
    assert sum(counts) + global_count == planner_service.token_budget(crop_plan, cfg) == 52


def test_resize_nearest_samples_pixel_centres():
    values = np.arange(16).reshape(4, 4)
    assert planner_service.resize_nearest(values, 2, 2).tolist() == [[5, 7], [13, 15]]
    assert planner_service.resize_nearest(values, 4, 4).tolist() == values.tolist()


def test_single_view_places_the_page_top_left():
    view = planner_service.single_view(ImageTensor(np.ones((10, 20))), (40, 40))
    assert view.values.shape == (40, 40, 1)
    assert view.valid == (20, 40)
