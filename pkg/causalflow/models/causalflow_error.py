class CausalFlowError(Exception):
    """Base class for every error raised by causalflow"""

    def __init__(self, error_msg: str, status_code: int = 1):
        super().__init__(error_msg)

        self.error_msg = error_msg
        self.status_code = status_code
