from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from causalflow.numerics.numerics_errors import ShapeError


@dataclass(frozen=True)
class ImageTensor:
    """
    Pixels in [0, 1] laid out (height, width, channels). valid records the
    (height, width) of real content when the image was padded onto a canvas.
    """

    values: np.ndarray
    valid: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.values.ndim == 2:
            object.__setattr__(self, "values", self.values[:, :, None])
        if self.values.ndim != 3 or min(self.values.shape) < 1:
            raise ShapeError(f"ImageTensor needs (height, width, channels), got {self.values.shape}")
        if self.valid is None:
            object.__setattr__(self, "valid", (self.height, self.width))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]
