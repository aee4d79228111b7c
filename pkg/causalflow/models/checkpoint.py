from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np


@dataclass
class OptimizerState:
    """AdamW moments keyed by parameter name; shapes mirror the parameters"""

    step: int = 0
    betas: Tuple[float, float] = (0.9, 0.95)
    weight_decay: float = 0.0
    epsilon: float = 1e-8
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class Checkpoint:
    format_version: int
    config_digest: str
    configs: Dict[str, Any]
    parameters: Dict[str, np.ndarray]
    groups: Dict[str, str]
    optimizer: OptimizerState
    rng_state: Dict[str, Any]
    step: int
    stage: int
    trainable: Optional[Dict[str, bool]] = None
