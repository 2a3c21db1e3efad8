from pydantic import BaseModel, Field, ConfigDict
from typing import Optional


class MesostructError(Exception):
    """
    Base error for the library and the command line

    Every error carries a short machine-readable code and the process exit
    code the CLI uses when the error reaches the top level. ``hint`` is a
    class-wide remediation text; a raise site may pass a more specific one.
    """
    code: str = "error"
    exit_code: int = 1
    hint: Optional[str] = None

    def __init__(self, detail: str, hint: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        if hint is not None:
            self.hint = hint

    def to_response(self) -> "ErrorResponse":
        return ErrorResponse(error=self.code, detail=self.detail, exit_code=self.exit_code, hint=self.hint)


class NumericDomainError(MesostructError):
    """Raised when an operation is evaluated outside its domain."""
    code = "numeric_domain"
    exit_code = 3
    hint = "f_m and gamma must both be positive"

    def __init__(self, operation: str, detail: str):
        super().__init__(f"{operation}: {detail}")
        self.operation = operation


class DegenerateSignalError(MesostructError):
    code = "degenerate_signal"
    exit_code = 3
    hint = "theta renders silence; check EVENT_RANGE and the synthesis settings"


class ShiftRangeError(MesostructError):
    code = "shift_range"
    exit_code = 2
    hint = "keep |tau| below NUM_SAMPLES"


class ConfigurationError(MesostructError):
    code = "configuration"
    exit_code = 2
    hint = "check the settings in the environment, .env or the --config file"


class OptimizationError(MesostructError):
    code = "optimization"
    exit_code = 4
    hint = "lower LEARNING_RATE or start from another point"


class ExportError(MesostructError):
    code = "export"
    exit_code = 5
    hint = "check that OUTPUT_DIR or --out is writable"


class ErrorResponse(BaseModel):
    """
    Machine-readable error line written to stderr by the CLI
    """
    model_config = ConfigDict(
        json_schema_extra={
            "examples": [
                {
                    "error": "numeric_domain",
                    "detail": "chirplet_phase: chirp rate must be positive, got 0.0",
                    "exit_code": 3,
                    "hint": "f_m and gamma must both be positive"
                }
            ]
        }
    )

    error: str = Field(..., description="Short error code")
    detail: str = Field(..., description="Human readable message")
    exit_code: int = Field(..., description="Process exit code")
    hint: Optional[str] = Field(None, description="Optional remediation hint")


VALIDATION_ERROR = lambda detail: ErrorResponse(
    error="validation",
    detail=detail,
    exit_code=2,
    hint="run the command with --help for accepted values"
)

INTERNAL_ERROR = lambda detail: ErrorResponse(
    error="internal",
    detail=detail,
    exit_code=1
)
