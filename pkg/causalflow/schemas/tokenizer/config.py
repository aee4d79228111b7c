from pydantic import BaseModel, Field


class TokenizerConfig(BaseModel, extra="forbid"):
    patch: int = Field(examples=[16], default=16, ge=1)
    downsample_stages: int = Field(examples=[2], default=2, ge=0)
    d_out: int = Field(examples=[64, 896], default=64, ge=1)
    channels: int = Field(examples=[1, 3], default=1, ge=1)
    init_scale: float = Field(default=0.02, gt=0)

    @property
    def stride(self) -> int:
        """Pixels per side covered by one output token"""
        return self.patch * 2**self.downsample_stages

    def token_count(self, height: int, width: int) -> int:
        return (height * width) // (self.patch**2 * 4**self.downsample_stages)

    def divides(self, height: int, width: int) -> bool:
        return height % self.stride == 0 and width % self.stride == 0

    @classmethod
    def full_scale(cls) -> "TokenizerConfig":
        return cls(patch=16, downsample_stages=2, d_out=896, channels=3)
