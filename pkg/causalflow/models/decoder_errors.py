from causalflow.models.causalflow_error import CausalFlowError


class OverlengthError(CausalFlowError):
    """Raised when a text sequence exceeds the decoder's max_text_len"""

    def __init__(self, error_msg: str, status_code: int = 3):
        super().__init__(error_msg, status_code=status_code)
