from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from causalflow.models.image import ImageTensor
from causalflow.schemas.synthetic.dataset import LayoutKind

Cell = Tuple[int, int]


@dataclass
class GlyphGrid:
    """cells[r, c] holds a glyph id, 0 for blank"""

    cells: np.ndarray
    layout: LayoutKind
    reading_order: List[Cell] = field(default_factory=list)

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    def glyphs_in_order(self) -> List[int]:
        return [int(self.cells[r, c]) for r, c in self.reading_order]


@dataclass
class Sample:
    image: ImageTensor
    target: List[int]
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def layout(self) -> str:
        return str(self.meta.get("layout", "unknown"))

    @property
    def seed(self) -> int:
        return int(self.meta.get("seed", 0))
