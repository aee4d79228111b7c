import numpy as np
import pytest

from causalflow.models.parameter_store import ParameterStore
from causalflow.schemas.run.config import load_run_config
from causalflow.schemas.synthetic.dataset import DatasetConfig
from causalflow.services import model_service, synthetic_service

# 24x24 pages on a 32x32 global canvas (16 tokens) and 24x24 local canvases (9 tokens)
TINY_OVERRIDES = [
    "seed=7",
    "tokenizer.patch=4",
    "tokenizer.downsample_stages=1",
    "tokenizer.d_out=16",
    "encoder.layers=1",
    "encoder.heads=2",
    "encoder.d=16",
    "encoder.max_seq=32",
    "decoder.layers=1",
    "decoder.heads=2",
    "decoder.d=16",
    "decoder.vocab_size=11",
    "decoder.max_text_len=20",
    "generation.max_new_tokens=20",
    "planner.global_canvas=32,32",
    "planner.local_canvas=24,24",
    "planner.n_g=16",
    "planner.n_l=9",
    "data.count=24",
    "data.rows=4",
    "data.cols=4",
    "data.vocab=8",
    "data.cell_pixels=6",
    "data.holdout=0.25",
    "training.batch=2",
    "training.stage1_steps=3",
    "training.stage2_steps=3",
    "training.stage3_steps=3",
    "training.stage1_decoder_layers=1",
]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_cfg(tmp_path):
    return load_run_config(None, TINY_OVERRIDES + [f"out_dir={tmp_path / 'run'}"])


@pytest.fixture
def tiny_double_cfg(tmp_path):
    return load_run_config(
        None,
        TINY_OVERRIDES
        + [
            f"out_dir={tmp_path / 'run'}",
            "training.dtype=double",
            "tokenizer.init_scale=0.3",
            "encoder.init_scale=0.3",
            "decoder.init_scale=0.3",
        ],
    )


@pytest.fixture
def tiny_model(tiny_cfg):
    return model_service.build_model(tiny_cfg, tiny_cfg.seed)


@pytest.fixture
def tiny_dataset(tiny_cfg):
    samples, _ = synthetic_service.make_dataset(tiny_cfg.seed, tiny_cfg.data)
    return samples


@pytest.fixture
def double_store():
    return ParameterStore(np.float64)


@pytest.fixture
def small_data_cfg():
    return DatasetConfig(count=10, rows=4, cols=5, vocab=6, density=0.8, cell_pixels=4)
