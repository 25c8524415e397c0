# ABOUTME: Built-in scenarios reproducing the reference experiments on five- and seven-agent networks.
# ABOUTME: Presets are plain scenario mappings, validated like any scenario file.

import copy
from typing import Any

from resilient_consensus.errors import InputError

T = 0.3
ALPHA = 3.67

# Agent 1 is malicious in the synchronous runs, agent 4 in the asynchronous ones.
SYNC_POSITIONS = [10.0, 4.0, 2.5, 1.0, 8.0]
SYNC_VELOCITIES = [0.0, -6.0, -5.0, 1.0, 4.0]
ASYNC_POSITIONS = [4.0, 10.0, 8.0, 9.0, 1.0]
ASYNC_VELOCITIES = [0.0, -1.0, -1.0, 4.0, 3.0]

ASYNC_UPDATES = [
    {"kind": "periodic", "period": 12, "phase": 6, "agents": [1]},
    {"kind": "periodic", "period": 12, "phase": 9, "agents": [2]},
    {"kind": "periodic", "period": 12, "phase": 11, "agents": [3]},
    {"kind": "periodic", "period": 12, "phase": 4, "agents": [5]},
]


def _sync(name: str, algorithm: str, horizon: int, **graph: Any) -> dict[str, Any]:
    return {
        "schema_version": 1,
        "name": name,
        "mode": "sync",
        "algorithm": algorithm,
        "f": 1,
        "horizon": horizon,
        "params": {"T": T, "alpha": ALPHA},
        "graph": {"preset": "five-agent", **graph},
        "initial": {"positions": SYNC_POSITIONS, "velocities": SYNC_VELOCITIES},
        "adversary": {"kind": "f-total", "agents": {1: {"strategy": "hold", "position": 10.0}}},
    }


def _async(name: str, graph: dict[str, Any]) -> dict[str, Any]:
    return {
        "schema_version": 1,
        "name": name,
        "mode": "async",
        "algorithm": "dp-msr",
        "f": 1,
        "horizon": 5000,
        "params": {"T": T, "alpha": ALPHA},
        "graph": graph,
        "initial": {"positions": ASYNC_POSITIONS, "velocities": ASYNC_VELOCITIES},
        "adversary": {
            "kind": "f-total",
            "agents": {4: {"strategy": "oscillate", "low": 2.0, "high": 9.0}},
        },
        "async": {
            "tau": 11,
            "delays": [{"kind": "constant", "value": 0}],
            "updates": ASYNC_UPDATES,
        },
    }


PRESETS: dict[str, dict[str, Any]] = {
    "fig4-sync-conventional": _sync("fig4-sync-conventional", "conventional", 1000),
    "fig5-sync-dpmsr": _sync("fig5-sync-dpmsr", "dp-msr", 2000),
    "fig6-sync-nonrobust": _sync("fig6-sync-nonrobust", "dp-msr", 2000, remove_edges=[[2, 5]]),
    "fig6-async-robust-fail": _async("fig6-async-robust-fail", {"preset": "five-agent"}),
    "fig7-async-complete": _async("fig7-async-complete", {"generator": "complete", "n": 5}),
    "proposition1": {
        "schema_version": 1,
        "name": "proposition1",
        "mode": "async",
        "algorithm": "dp-msr",
        "f": 1,
        "horizon": 1000,
        "params": {"T": T, "alpha": ALPHA},
        # One G1 link into G4 keeps G4 fully blocked; the default of four lets G1 pull it away.
        "graph": {"generator": "proposition", "f": 1, "g4_links": 1},
        "initial": {"positions": [5.0, 5.0, 5.0, 5.0, 1.0, 1.0, 9.0]},
        "adversary": {
            "kind": "f-total",
            "agents": {5: {"strategy": "oscillate", "low": 1.0, "high": 9.0}},
        },
        "async": {
            "tau": 1,
            "delays": [
                {"kind": "parity", "even": 0, "odd": 1, "edges": [[5, 6]]},
                {"kind": "parity", "even": 1, "odd": 0, "edges": [[5, 7]]},
            ],
            "history": [[5.0, 5.0, 5.0, 5.0, 9.0, 1.0, 9.0]],
        },
    },
}

DESCRIPTIONS: dict[str, str] = {
    "fig4-sync-conventional": "Unfiltered consensus; agent 1 held at 10 drags everyone out of the safety interval",
    "fig5-sync-dpmsr": "DP-MSR with f=1 on the (2,2)-robust graph; consensus inside the safety interval",
    "fig6-sync-nonrobust": "Edge (2,5) removed; agent 5 filters out all neighbours and never agrees",
    "fig6-async-robust-fail": "Asynchronous DP-MSR, period 12, tau=11, agent 4 oscillating; two clusters",
    "fig7-async-complete": "Same schedules on the complete graph; consensus",
    "proposition1": "Seven-agent blocking construction; G3 stays at 1 and G4 at 9",
}


def list_presets() -> list[str]:
    return list(PRESETS)


def get_preset(name: str) -> dict[str, Any]:
    """Independent copy of a preset scenario mapping."""
    if name not in PRESETS:
        raise InputError(f"Unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
