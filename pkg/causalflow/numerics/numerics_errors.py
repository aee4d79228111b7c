from causalflow.models.causalflow_error import CausalFlowError


class NumericsError(CausalFlowError):
    """Raised when a tensor operation cannot be evaluated"""

    def __init__(self, error_msg: str, status_code: int = 3):
        super().__init__(error_msg, status_code=status_code)


class ShapeError(NumericsError):
    """Raised when operand extents do not line up"""

    pass


class DegenerateRowError(NumericsError):
    """Raised when a softmax row has no allowed column"""

    pass


class EmptyLossError(NumericsError):
    """Raised when every position of a loss is ignored"""

    def __init__(self, error_msg: str = "No positions left to score", status_code: int = 3):
        super().__init__(error_msg, status_code=status_code)


class GraphError(NumericsError):
    """Raised when backward is asked of a value with no recorded graph"""

    pass


class NonFiniteError(NumericsError):
    """Raised when an operation produces NaN or infinity"""

    pass
