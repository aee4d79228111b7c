from causalflow.models.causalflow_error import CausalFlowError


class DocumentError(CausalFlowError):
    """Raised when a synthetic document cannot be generated"""

    def __init__(self, error_msg: str, status_code: int = 2):
        super().__init__(error_msg, status_code=status_code)


class GridTooSmallError(DocumentError):
    pass


class GlyphTableError(DocumentError):
    pass
