"""
Logging setup shared by the CLI and the HTTP service
"""
import logging

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """Configure the root logger once per entry point."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, force=True)
