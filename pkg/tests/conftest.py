# ABOUTME: Pytest configuration and shared fixtures.
# ABOUTME: Provides temporary output dirs, the five-agent graph and preset scenario loading.

import tempfile
from collections.abc import Callable, Iterator
from pathlib import Path
from typing import Any

import pytest

from resilient_consensus.dynamics import SimParams
from resilient_consensus.graph import Digraph, build_five_agent_example
from resilient_consensus.presets import get_preset
from resilient_consensus.scenario import Scenario, load_scenario
from resilient_consensus.sweep import set_dotted
from resilient_consensus.utils import StorageManager


@pytest.fixture
def temp_output_dir() -> Iterator[Path]:
    """Create a temporary output directory."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def storage_manager(temp_output_dir: Path) -> StorageManager:
    """Create a storage manager with temporary directory."""
    return StorageManager(temp_output_dir)


@pytest.fixture
def five_agent_graph() -> Digraph:
    """The shipped (2,2)-robust five-agent graph."""
    return build_five_agent_example()


@pytest.fixture
def sync_params() -> SimParams:
    """Sampling period and gain used by every reference experiment."""
    return SimParams(T=0.3, alpha=3.67, n=5, f=1)


@pytest.fixture
def preset_scenario() -> Callable[..., Scenario]:
    """Build a preset scenario, with optional dotted-key overrides."""

    def build(name: str, **overrides: Any) -> Scenario:
        data = get_preset(name)
        for key, value in overrides.items():
            set_dotted(data, key.replace("__", "."), value)
        return load_scenario(data)

    return build
