class LabException(Exception):
    pass


class InstanceException(LabException):
    pass


class TableTooShortError(InstanceException):
    pass


class PoleError(LabException):
    pass


class DomainError(LabException):
    pass


class ToleranceError(LabException):
    def __init__(self, message, best_value=None, best_error=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_error = best_error


class ConfigError(LabException):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
