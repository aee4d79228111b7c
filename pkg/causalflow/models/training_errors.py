from causalflow.models.causalflow_error import CausalFlowError


class TrainingError(CausalFlowError):
    """Raised when a training stage cannot run"""

    def __init__(self, error_msg: str, status_code: int = 2):
        super().__init__(error_msg, status_code=status_code)


class ScheduleRangeError(TrainingError):
    pass


class EmptyDatasetError(TrainingError):
    def __init__(self, error_msg: str = "Dataset is empty", status_code: int = 2):
        super().__init__(error_msg=error_msg, status_code=status_code)


class CheckpointError(CausalFlowError):
    """Raised when a checkpoint file cannot be trusted"""

    def __init__(self, error_msg: str, status_code: int = 4):
        super().__init__(error_msg, status_code=status_code)


class CheckpointIntegrityError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass
