"""
Logging Module

Provides structured logging with run IDs for tracing experiments and chains.
"""
import functools
import json
import logging
import time
import uuid
from contextvars import ContextVar
from datetime import datetime, timezone
from typing import Callable, Optional

# Context variable for the run ID (thread-safe)
run_id_var: ContextVar[str] = ContextVar('run_id', default='')


def get_run_id() -> str:
    """Get the current run ID"""
    return run_id_var.get() or str(uuid.uuid4())[:8]


def set_run_id(run_id: Optional[str] = None) -> str:
    """
    Set a run ID for the current context.

    Args:
        run_id: Optional ID to use, generates new one if not provided

    Returns:
        The run ID that was set
    """
    rid = run_id or str(uuid.uuid4())[:8]
    run_id_var.set(rid)
    return rid


class StructuredLogger:
    """
    Structured logger that outputs JSON-formatted logs with context.
    """

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)
        self.name = name

    def _format_message(
        self,
        message: str,
        level: str,
        **extra
    ) -> str:
        """Format log message as JSON"""
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": level,
            "logger": self.name,
            "run_id": get_run_id(),
            "message": message
        }
        log_data.update(extra)
        return json.dumps(log_data, default=str)

    def debug(self, message: str, **kwargs):
        """Log debug message"""
        self.logger.debug(self._format_message(message, "DEBUG", **kwargs))

    def info(self, message: str, **kwargs):
        """Log info message"""
        self.logger.info(self._format_message(message, "INFO", **kwargs))

    def warning(self, message: str, **kwargs):
        """Log warning message"""
        self.logger.warning(self._format_message(message, "WARNING", **kwargs))

    def error(self, message: str, exception: Exception = None, **kwargs):
        """Log error message"""
        if exception:
            kwargs["exception_type"] = type(exception).__name__
            kwargs["exception_message"] = str(exception)
        self.logger.error(self._format_message(message, "ERROR", **kwargs))

    def chain_start(self, kind: str, steps: int, beta: float, **kwargs):
        """Log the start of a pCN chain"""
        self.info(
            f"Chain started: {kind}",
            event="chain_start",
            kind=kind,
            steps=steps,
            beta=beta,
            **kwargs
        )

    def chain_progress(self, step: int, acceptance_rate: float, potential: float, **kwargs):
        """Log a periodic chain checkpoint"""
        self.debug(
            f"Chain at step {step}",
            event="chain_progress",
            step=step,
            acceptance_rate=round(acceptance_rate, 4),
            potential=potential,
            **kwargs
        )

    def chain_complete(
        self,
        steps: int,
        acceptance_rate: float,
        duration_seconds: float,
        **kwargs
    ):
        """Log chain completion"""
        self.info(
            f"Chain completed after {steps} steps",
            event="chain_complete",
            steps=steps,
            acceptance_rate=round(acceptance_rate, 4),
            duration_seconds=round(duration_seconds, 2),
            **kwargs
        )

    def experiment_start(self, method: str, truth: str, **kwargs):
        """Log experiment start"""
        self.info(
            f"Experiment started: {method} on truth {truth}",
            event="experiment_start",
            method=method,
            truth=truth,
            **kwargs
        )

    def experiment_complete(self, output_dir: str, duration_seconds: float, **kwargs):
        """Log experiment completion"""
        self.info(
            f"Experiment completed: {output_dir}",
            event="experiment_complete",
            output_dir=output_dir,
            duration_seconds=round(duration_seconds, 2),
            **kwargs
        )

    def experiment_failed(self, error: str, **kwargs):
        """Log experiment failure"""
        self.error(
            "Experiment failed",
            event="experiment_failed",
            error=error,
            **kwargs
        )


# Default logger instance
logger = StructuredLogger("binverse")


def log_operation(operation_name: str = None) -> Callable:
    """
    Decorator to log operation start/end with timing.

    Usage:
        @log_operation("pcn-run")
        def pcn_run(args):
            ...
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            set_run_id()
            operation = operation_name or func.__name__

            start_time = time.time()
            logger.info(f"Operation started: {operation}", event="operation_start", operation=operation)

            try:
                result = func(*args, **kwargs)
                duration_ms = (time.time() - start_time) * 1000
                logger.info(
                    f"Operation completed: {operation}",
                    event="operation_end",
                    operation=operation,
                    duration_ms=round(duration_ms, 2)
                )
                return result

            except Exception as e:
                duration_ms = (time.time() - start_time) * 1000
                logger.error(
                    f"Operation failed: {operation}",
                    exception=e,
                    duration_ms=round(duration_ms, 2)
                )
                raise

        return wrapper
    return decorator


def configure_logging(level: str = "INFO"):
    """
    Configure logging for the application.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
    """
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(message)s'  # We handle formatting in StructuredLogger
    )
