"""
FvK Plate Exceptions Module
"""

class FvKError(Exception):
    """Base exception for fvkplate"""
    pass

class FvKNumericalError(FvKError):
    """Exception raised for numerical failures (non-finite values, stalled solves)"""
    def __init__(self, message, iterations=None, residual=None):
        self.message = message
        self.iterations = iterations
        self.residual = residual
        super().__init__(self.message)

class FvKConfigError(FvKError):
    """Exception raised for configuration and parameter errors"""
    pass

class FvKConvergenceError(FvKNumericalError):
    """Exception raised when an iterative solve exceeds its iteration cap"""
    pass

class FvKDivergenceError(FvKError):
    """Exception raised when a bounded energy was required but the run diverged"""
    pass
