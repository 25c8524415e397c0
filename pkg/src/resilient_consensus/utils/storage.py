# ABOUTME: YAML persistence and run output directories for resilient-consensus.
# ABOUTME: Scenario, grid and preset files go through here; each run gets its own directory.

import os
import re
from pathlib import Path
from typing import Any

import yaml

OUTPUT_DIR_ENV = "RESILIENT_CONSENSUS_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = Path("runs")


def load_yaml(path: Path) -> dict[str, Any]:
    """Load a YAML mapping; an empty file gives an empty dict."""
    with open(path) as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{path} does not contain a YAML mapping")
    return data


def dump_yaml(data: dict[str, Any], path: Path) -> None:
    """Write a mapping as block-style YAML, keeping key order."""
    with open(path, "w") as f:
        yaml.dump(data, f, default_flow_style=False, sort_keys=False)


class StorageManager:
    """Owns the output directory and the per-run subdirectories inside it."""

    def __init__(self, output_dir: Path | None = None) -> None:
        env_dir = os.environ.get(OUTPUT_DIR_ENV)
        self.output_dir = output_dir or (Path(env_dir) if env_dir else DEFAULT_OUTPUT_DIR)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def run_dir(self, name: str) -> Path:
        """Directory for one run, named after the scenario."""
        slug = re.sub(r"[^A-Za-z0-9_.-]+", "-", name).strip("-") or "run"
        path = self.output_dir / slug
        path.mkdir(parents=True, exist_ok=True)
        return path

    def load_scenario(self, path: Path) -> dict[str, Any]:
        """Load a scenario file."""
        return load_yaml(path)

    def save_scenario(self, data: dict[str, Any], path: Path) -> None:
        """Save a scenario file."""
        path.parent.mkdir(parents=True, exist_ok=True)
        dump_yaml(data, path)

    def load_grid(self, path: Path) -> dict[str, list[Any]]:
        """Load a sweep grid: dotted scenario keys mapped to value lists."""
        data = load_yaml(path)
        grid: dict[str, list[Any]] = {}
        for key, values in data.items():
            grid[str(key)] = list(values) if isinstance(values, list) else [values]
        return grid
