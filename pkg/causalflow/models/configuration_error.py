from causalflow.models.causalflow_error import CausalFlowError


class ConfigurationError(CausalFlowError):
    """Raised when a configuration is malformed or internally inconsistent"""

    def __init__(self, error_msg: str, status_code: int = 2):
        super().__init__(error_msg, status_code=status_code)
