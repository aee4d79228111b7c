from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _parse_pair(v):
    if isinstance(v, str):
        v = [i.strip() for i in v.replace("x", ",").split(",") if i.strip()]
    return v


class PlannerConfig(BaseModel, extra="forbid"):
    """Canvas sizes are (width, height) in pixels"""

    global_canvas: Tuple[int, int] = Field(examples=[(256, 256), (1024, 1024)], default=(256, 256))
    local_canvas: Tuple[int, int] = Field(examples=[(192, 192), (768, 768)], default=(192, 192))
    k_max: int = Field(default=6, ge=0)
    n_g: int = Field(examples=[16, 256], default=16, ge=1)
    n_l: int = Field(examples=[9, 144], default=9, ge=1)

    @field_validator("global_canvas", "local_canvas", mode="before")
    def parse_canvas(cls, v):
        return _parse_pair(v)

    @field_validator("global_canvas", "local_canvas")
    def validate_canvas(cls, v):
        assert v[0] >= 1 and v[1] >= 1, "canvas sides must be positive"
        return v

    @classmethod
    def full_scale(cls) -> "PlannerConfig":
        return cls(global_canvas=(1024, 1024), local_canvas=(768, 768), k_max=6, n_g=256, n_l=144)

    @property
    def budget_bounds(self) -> Tuple[int, int]:
        return self.n_g, self.k_max * self.n_l + self.n_g


class CropRect(BaseModel):
    """Half-open source rectangle [x0, x1) x [y0, y1)"""

    model_config = ConfigDict(frozen=True)

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


class ViewTransform(BaseModel):
    """Aspect-preserving resize of a source region onto a canvas, then pad"""

    model_config = ConfigDict(frozen=True)

    source: CropRect
    canvas: Tuple[int, int]
    resized: Tuple[int, int]


class CropPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    width: int = Field(examples=[1536])
    height: int = Field(examples=[768])
    grid: Tuple[int, int] = Field(examples=[(1, 2)], description="(rows, cols); (0, 0) when no crop")
    global_view: ViewTransform
    local_views: List[ViewTransform] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_grid(self) -> "CropPlan":
        rows, cols = self.grid
        assert rows * cols == len(self.local_views), "grid must match the number of local views"
        return self

    @property
    def k(self) -> int:
        return len(self.local_views)
