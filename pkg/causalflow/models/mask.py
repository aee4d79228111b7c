from dataclasses import dataclass

from causalflow.models.configuration_error import ConfigurationError


@dataclass(frozen=True)
class DualStreamMask:
    """
    Block attention mask over [m visual tokens | n flow queries]:

        [ 1(m x m)   0(m x n)     ]
        [ 1(n x m)   LowerTri(n)  ]
    """

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigurationError(f"DualStreamMask needs m >= 1 and n >= 1, got m={self.m} n={self.n}")

    @property
    def size(self) -> int:
        return self.m + self.n

    @property
    def allowed_pairs(self) -> int:
        """Number of ones in the materialized mask"""
        return self.m * self.m + self.n * self.m + self.n * (self.n + 1) // 2
