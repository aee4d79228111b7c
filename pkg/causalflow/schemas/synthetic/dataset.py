from enum import Enum
from typing import Dict, List

from pydantic import BaseModel, Field, field_validator


class LayoutKind(str, Enum):
    RASTER = "raster"
    TWO_COLUMN = "two_column"
    SPIRAL = "spiral"
    TABLE_ROWWISE = "table_rowwise"


DEFAULT_MIX = {
    LayoutKind.RASTER: 0.6,
    LayoutKind.SPIRAL: 0.2,
    LayoutKind.TABLE_ROWWISE: 0.2,
}


class DatasetConfig(BaseModel, extra="forbid"):
    count: int = Field(examples=[4000], default=1000, ge=0)
    rows: int = Field(default=8, ge=1)
    cols: int = Field(default=8, ge=1)
    vocab: int = Field(examples=[32], default=32, ge=1)
    density: float = Field(default=0.5, gt=0, le=1)
    cell_pixels: int = Field(default=24, ge=4)
    holdout: float = Field(default=0.1, ge=0, lt=1)
    mix: Dict[LayoutKind, float] = Field(default_factory=lambda: dict(DEFAULT_MIX))

    @field_validator("mix", mode="before")
    def parse_mix(cls, v):
        if isinstance(v, str):
            pairs = [i.split(":", 1) for i in v.split(",") if i.strip()]
            v = {key.strip(): float(value) for key, value in pairs}
        return v

    @field_validator("mix")
    def validate_mix(cls, v):
        assert v, "mix needs at least one layout"
        assert all(f >= 0 for f in v.values()), "mix fractions must be non-negative"
        assert abs(sum(v.values()) - 1.0) <= 1e-9, "mix fractions must sum to 1"
        return v


class ManifestRecord(BaseModel):
    index: int
    seed: int
    layout: LayoutKind
    rows: int
    cols: int
    image_file: str
    target: List[int]

    def to_line(self) -> str:
        targets = " ".join(str(t) for t in self.target)
        return f"{self.index}\t{self.seed}\t{self.layout.value}\t{self.rows}\t{self.cols}\t{self.image_file}\t{targets}"

    @classmethod
    def from_line(cls, line: str) -> "ManifestRecord":
        index, seed, layout, rows, cols, image_file, targets = line.rstrip("\n").split("\t")
        return cls(
            index=int(index),
            seed=int(seed),
            layout=LayoutKind(layout),
            rows=int(rows),
            cols=int(cols),
            image_file=image_file,
            target=[int(t) for t in targets.split()],
        )


class Manifest(BaseModel):
    seed: int
    counts: Dict[str, int]
    records: List[ManifestRecord] = Field(default_factory=list)
