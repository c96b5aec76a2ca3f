"""
Unit tests for logging_config.py
"""
import pytest
import json
from logging_config import (
    get_run_id,
    set_run_id,
    StructuredLogger,
    log_operation,
    configure_logging
)


class TestRunId:
    """Tests for run ID functions"""

    def test_get_generates_id_if_not_set(self):
        rid = get_run_id()
        assert rid is not None
        assert len(rid) > 0

    def test_set_run_id(self):
        assert set_run_id("test-123") == "test-123"

    def test_get_returns_set_id(self):
        set_run_id("my-id")
        assert get_run_id() == "my-id"

    def test_set_generates_id_if_none(self):
        rid = set_run_id(None)
        assert len(rid) == 8  # First 8 chars of UUID


class TestStructuredLogger:
    """Tests for StructuredLogger class"""

    def test_logger_creation(self):
        logger = StructuredLogger("test-logger")
        assert logger.name == "test-logger"

    def test_format_message_includes_required_fields(self):
        set_run_id("test-rid")
        logger = StructuredLogger("test")

        data = json.loads(logger._format_message("Test message", "INFO", extra_key="extra_value"))

        assert data["message"] == "Test message"
        assert data["level"] == "INFO"
        assert data["logger"] == "test"
        assert data["run_id"] == "test-rid"
        assert "timestamp" in data
        assert data["extra_key"] == "extra_value"

    def test_error_logging_with_exception(self, caplog):
        logger = StructuredLogger("test")
        with caplog.at_level("ERROR"):
            logger.error("Error occurred", exception=ValueError("Test error"))

        data = json.loads(caplog.records[0].message)
        assert data["exception_type"] == "ValueError"
        assert data["exception_message"] == "Test error"

    def test_chain_events(self, caplog):
        logger = StructuredLogger("test")
        with caplog.at_level("DEBUG"):
            logger.chain_start("level_set", steps=1000, beta=0.05)
            logger.chain_progress(500, acceptance_rate=0.312345, potential=12.5)
            logger.chain_complete(1000, acceptance_rate=0.3, duration_seconds=1.234)

        events = [json.loads(record.message) for record in caplog.records]
        assert [e["event"] for e in events] == ["chain_start", "chain_progress", "chain_complete"]
        assert events[0]["kind"] == "level_set"
        assert events[1]["acceptance_rate"] == 0.3123
        assert events[2]["duration_seconds"] == 1.23

    def test_progress_is_debug_level(self, caplog):
        logger = StructuredLogger("test")
        with caplog.at_level("INFO"):
            logger.chain_progress(500, acceptance_rate=0.3, potential=1.0)
        assert caplog.records == []

    def test_experiment_events(self, caplog):
        logger = StructuredLogger("test")
        with caplog.at_level("INFO"):
            logger.experiment_start("gp", "A")
            logger.experiment_complete("runs/x", duration_seconds=2.0)
            logger.experiment_failed("boom")

        events = [json.loads(record.message) for record in caplog.records]
        assert events[0]["event"] == "experiment_start"
        assert events[0]["method"] == "gp"
        assert events[1]["output_dir"] == "runs/x"
        assert events[2]["event"] == "experiment_failed"
        assert events[2]["level"] == "ERROR"


class TestLogOperationDecorator:
    """Tests for log_operation decorator"""

    def test_decorator_preserves_function_name(self):
        @log_operation("test-op")
        def my_function():
            return "result"

        assert my_function.__name__ == "my_function"

    def test_decorator_sets_run_id(self):
        @log_operation("test")
        def handler():
            return get_run_id()

        assert handler() != handler()

    def test_decorator_returns_function_result(self):
        @log_operation("test")
        def handler():
            return {"status": "ok"}

        assert handler() == {"status": "ok"}

    def test_decorator_logs_and_reraises(self, caplog):
        @log_operation("failing")
        def handler():
            raise RuntimeError("bad")

        with caplog.at_level("INFO"):
            with pytest.raises(RuntimeError):
                handler()

        messages = [json.loads(record.message) for record in caplog.records]
        assert messages[0]["event"] == "operation_start"
        assert messages[-1]["exception_type"] == "RuntimeError"


class TestConfigureLogging:
    """Tests for configure_logging function"""

    def test_configure_with_level(self):
        configure_logging("DEBUG")
        configure_logging("INFO")
        configure_logging("WARNING")
        configure_logging("ERROR")
