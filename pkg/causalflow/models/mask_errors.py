from causalflow.models.causalflow_error import CausalFlowError


class MaskIndexError(CausalFlowError):
    """Raised when a mask is queried outside its (m+n)x(m+n) extent"""

    def __init__(self, error_msg: str = "Mask index out of range", status_code: int = 3):
        super().__init__(error_msg, status_code=status_code)
