from typing import Optional


#Base class for every failure raised by the simulator
class ForagingError(Exception):
    pass


#Iterative or direct solve did not meet its residual contract
class ConvergenceError(ForagingError):
    def __init__(self, message: str, residual: float, iterations: int = 0):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


#Time step exceeds the admissible CFL or positivity step
class CflViolationError(ForagingError):
    def __init__(self, dt: float, admissible_dt: float):
        super().__init__(f"dt = {dt:.6e} exceeds the CFL/positivity limit; admissible dt = {admissible_dt:.6e}")
        self.dt = dt
        self.admissible_dt = admissible_dt


#A model coefficient or initial datum violates a structural hypothesis
class HypothesisError(ForagingError, ValueError):
    def __init__(self, message: str, hypothesis: str):
        super().__init__(f"{message} - {hypothesis}")
        self.hypothesis = hypothesis


#Malformed scenario document, carries the offending line when known
class ScenarioParseError(ForagingError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


#Binary snapshot with wrong magic, version or size
class SnapshotFormatError(ForagingError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


#ODE integration left the representable range
class DivergenceError(ForagingError):
    def __init__(self, t: float, value: float):
        super().__init__(f"series diverged at t = {t:.6e} (value {value:.3e})")
        self.t = t
        self.value = value
