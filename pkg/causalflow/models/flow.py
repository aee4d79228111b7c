import typing
from dataclasses import dataclass

from causalflow.numerics.tensor import Parameter, Tensor

VIEW_KINDS = typing.Literal["global", "local"]


@dataclass
class QueryBank:
    """Learnable flow queries: one set for the global view, one shared by every local view"""

    query_global: Parameter
    query_local: Parameter

    def for_kind(self, kind: VIEW_KINDS) -> Parameter:
        return self.query_global if kind == "global" else self.query_local

    def count(self, kind: VIEW_KINDS) -> int:
        return self.for_kind(kind).shape[0]


@dataclass
class FlowTokens:
    """Encoder outputs at the query positions of one view"""

    values: Tensor
    view_kind: VIEW_KINDS
    view_index: int

    @property
    def count(self) -> int:
        return self.values.shape[0]
