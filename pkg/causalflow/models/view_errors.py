from causalflow.models.causalflow_error import CausalFlowError


class ViewError(CausalFlowError):
    """Raised when views of a page cannot be built or assembled"""

    def __init__(self, error_msg: str, status_code: int = 3):
        super().__init__(error_msg, status_code=status_code)


class DuplicateViewError(ViewError):
    pass


class DimensionMismatchError(ViewError):
    pass


class CanvasTooSmallError(ViewError):
    """Raised when padding targets a canvas smaller than the source"""

    pass
