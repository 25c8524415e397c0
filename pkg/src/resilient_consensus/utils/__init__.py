# ABOUTME: Utility modules for resilient-consensus.
# ABOUTME: Provides logging setup and YAML/output-directory storage.

from resilient_consensus.utils.logging import setup_logging
from resilient_consensus.utils.storage import StorageManager

__all__ = ["StorageManager", "setup_logging"]
