"""
Error Handler for the PLDM toolchain
Exception hierarchy plus centralized mapping of failures to error records and
process exit codes.
"""

import logging
from typing import Dict, Any, Optional

logger = logging.getLogger(__name__)


class PLDMError(Exception):
    """Base class for every categorized failure raised by the toolchain."""


class ConfigError(PLDMError):
    """Invalid or unknown configuration; the message cites the dotted key."""


class DataError(PLDMError):
    """Dataset, checkpoint or metrics file problems; the message cites the path."""


class DatasetFormatError(DataError):
    """File is not a container of the expected kind."""


class DatasetVersionError(DataError):
    """Container written by an unsupported format version."""


class DatasetTruncatedError(DataError):
    """Container shorter than its header declares."""


class ChecksumError(DataError):
    """Payload checksum does not match the stored checksum."""


class SimulationError(PLDMError):
    """Environment or data-generation failure (rejection stalls, unreachable targets)."""


class NumericError(PLDMError):
    """Numerical failure inside the tensor library, training or planning."""


class ShapeError(NumericError):
    """Operands with incompatible shapes; the message names the op and the shapes."""


class NonFiniteError(NumericError):
    """NaN or Inf produced where finite values are required."""


class ErrorHandler:
    """Centralized error handling for the PLDM command-line tools."""

    # Process exit codes
    SUCCESS = 0
    INTERNAL_ERROR = 1
    CONFIG_ERROR = 2
    DATA_ERROR = 3
    NUMERIC_ERROR = 4

    @staticmethod
    def exit_code_for(exception: BaseException) -> int:
        """
        Map an exception to the process exit code of its category.

        Args:
            exception: The exception that terminated a command

        Returns:
            Exit code (2 config, 3 data, 4 numeric, 1 anything else)
        """
        if isinstance(exception, ConfigError):
            return ErrorHandler.CONFIG_ERROR
        if isinstance(exception, (DataError, SimulationError, FileNotFoundError)):
            return ErrorHandler.DATA_ERROR
        if isinstance(exception, NumericError):
            return ErrorHandler.NUMERIC_ERROR
        return ErrorHandler.INTERNAL_ERROR

    @staticmethod
    def handle_exception(
        exception: Exception, command: str = "unknown"
    ) -> Dict[str, Any]:
        """
        Handle an exception and return a categorized error record.

        Args:
            exception: The exception that occurred
            command: The command that caused the error

        Returns:
            Dictionary containing the error code, message and context
        """
        code = ErrorHandler.exit_code_for(exception)
        error_info = {
            "code": code,
            "message": str(exception),
            "data": {"command": command, "exception_type": type(exception).__name__},
        }

        # Categorized errors are expected; only unknown ones get a traceback
        if code == ErrorHandler.INTERNAL_ERROR:
            logger.error(f"Error in {command}: {exception}", exc_info=True)
        else:
            logger.error(f"Error in {command}: {exception}")

        return error_info

    @staticmethod
    def create_error_response(
        error_code: int, message: str, data: Optional[Dict] = None
    ) -> Dict[str, Any]:
        """
        Create a standardized error result record.

        Args:
            error_code: The error code
            message: Error message
            data: Additional error data

        Returns:
            Dictionary containing the error record
        """
        response = {"status": "error", "error": {"code": error_code, "message": message}}

        if data:
            response["error"]["data"] = data

        return response

    @staticmethod
    def create_success_response(result: Dict[str, Any]) -> Dict[str, Any]:
        """
        Create a standardized success result record.

        Args:
            result: The result data to include

        Returns:
            Dictionary containing the success record
        """
        return {"status": "ok", "result": result}
