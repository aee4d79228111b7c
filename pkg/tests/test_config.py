import pytest

from causalflow.models.configuration_error import ConfigurationError
from causalflow.schemas.run.config import RunConfig, load_run_config
from causalflow.schemas.synthetic.dataset import LayoutKind


def test_defaults_are_consistent():
    cfg = load_run_config()
    assert cfg == RunConfig()
    assert (cfg.planner.n_g, cfg.planner.n_l) == (16, 9)
    assert cfg.max_visual_tokens() == 70


def test_file_then_overrides(tmp_path):
    path = tmp_path / "toy.env"
    path.write_text(
        "# toy run\n"
        "seed=3\n"
        "data.count=40  # small\n"
        "data.mix=raster:0.4,two_column:0.3,spiral:0.3\n"
        "training.betas=0.9,0.99\n"
    )
    cfg = load_run_config(str(path), ["seed=11", "eval.workers=2"])
    assert cfg.seed == 11
    assert cfg.data.count == 40
    assert cfg.data.mix == {LayoutKind.RASTER: 0.4, LayoutKind.TWO_COLUMN: 0.3, LayoutKind.SPIRAL: 0.3}
    assert cfg.training.betas == (0.9, 0.99)
    assert cfg.eval.workers == 2


def test_canvas_pairs_parse_from_text():
    cfg = load_run_config(overrides=["planner.global_canvas=256x256", "planner.local_canvas=192,192"])
    assert cfg.planner.global_canvas == (256, 256)


@pytest.mark.parametrize(
    "override",
    [
        "encoder.widht=3",
        "nosuch=1",
        "encoder.d=abc",
        "a.b.c=1",
        "seed",
        "tokenizer.d_out=32",
        "planner.n_g=12",
        "decoder.vocab_size=20",
        "decoder.max_text_len=30",
        "encoder.max_seq=20",
        "decoder.bos=3",
    ],
)
def test_bad_configs_are_rejected(override):
    with pytest.raises(ConfigurationError) as exc:
        load_run_config(overrides=[override])
    assert exc.value.status_code == 2


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_run_config(str(tmp_path / "missing.env"))


def test_digest_tracks_content():
    base = load_run_config()
    assert base.digest() == load_run_config().digest()
    assert len(base.digest()) == 64
    assert base.digest() != load_run_config(overrides=["seed=1"]).digest()


def test_raster_mode_budget_counts_visual_tokens():
    cfg = load_run_config(overrides=["encoder.mode=raster", "encoder.equal_cardinality=false", "encoder.query_ratio=0.5"])
    assert cfg.max_visual_tokens() == 70
    assert load_run_config(
        overrides=["encoder.equal_cardinality=false", "encoder.query_ratio=0.5"]
    ).max_visual_tokens() == 6 * 4 + 8


def test_digest_ignores_the_output_location(tmp_path):
    here = load_run_config(overrides=[f"out_dir={tmp_path / 'a'}"])
    there = load_run_config(overrides=[f"out_dir={tmp_path / 'b'}"])
    assert here.out_dir != there.out_dir
    assert here.digest() == there.digest()
    assert "out_dir" not in here.content()
