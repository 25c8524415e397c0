# ABOUTME: Sampled-data double-integrator dynamics, the nominal control law and parameter checks.
# ABOUTME: Also builds the two-step matrices that propagate positions under filtered control.

from collections.abc import Collection, Iterable
from dataclasses import dataclass

import numpy as np

from resilient_consensus.errors import InputError, NumericError, ParameterError
from resilient_consensus.graph import Digraph, laplacian

# Slack on the closed interval 1 + T^2/2 <= alpha*T <= 2 - T^2/2.
PARAM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SimParams:
    """Sampling period T, damping gain alpha, agent count n and filter parameter f."""

    T: float
    alpha: float
    n: int
    f: int = 0

    @property
    def position_gain(self) -> float:
        """T - alpha*T^2/2, the weight of velocity in the next position."""
        return self.T - self.alpha * self.T**2 / 2

    @property
    def half_t_squared(self) -> float:
        return self.T * self.T / 2


@dataclass
class NetworkState:
    """Offset-adjusted positions x_i - delta_i, velocities and offsets at step k."""

    positions: np.ndarray
    velocities: np.ndarray
    offsets: np.ndarray
    step: int = 0

    @classmethod
    def create(
        cls,
        positions: Iterable[float],
        velocities: Iterable[float] | None = None,
        offsets: Iterable[float] | None = None,
        step: int = 0,
    ) -> "NetworkState":
        """Build a state; velocities and offsets default to zero."""
        x = np.asarray(list(positions), dtype=float)
        v = np.zeros_like(x) if velocities is None else np.asarray(list(velocities), dtype=float)
        d = np.zeros_like(x) if offsets is None else np.asarray(list(offsets), dtype=float)
        if not (x.shape == v.shape == d.shape) or x.ndim != 1:
            raise InputError(
                f"positions, velocities and offsets must be equal-length vectors, "
                f"got {x.shape}, {v.shape}, {d.shape}"
            )
        for name, vector in (("position", x), ("velocity", v), ("offset", d)):
            bad = np.flatnonzero(~np.isfinite(vector))
            if bad.size:
                raise NumericError(f"Initial {name} of agent {bad[0]} is not finite", int(bad[0]))
        return cls(positions=x, velocities=v, offsets=d, step=step)

    @property
    def n(self) -> int:
        return int(self.positions.shape[0])

    @property
    def raw_positions(self) -> np.ndarray:
        """Positions x_i with the formation offsets added back."""
        return self.positions + self.offsets


def validate_params(p: SimParams) -> bool:
    """True when 1 + T^2/2 <= alpha*T <= 2 - T^2/2 (boundaries included)."""
    if p.T <= 0 or p.alpha <= 0:
        raise InputError(f"T and alpha must be positive, got T={p.T}, alpha={p.alpha}")
    product = p.alpha * p.T
    lower = 1 + p.half_t_squared
    upper = 2 - p.half_t_squared
    return lower - PARAM_TOLERANCE <= product <= upper + PARAM_TOLERANCE


def require_valid_params(p: SimParams) -> None:
    """Raise ParameterError unless validate_params holds."""
    if not validate_params(p):
        raise ParameterError(
            f"alpha*T = {p.alpha * p.T:.6g} is outside "
            f"[{1 + p.half_t_squared:.6g}, {2 - p.half_t_squared:.6g}] for T={p.T}, alpha={p.alpha}"
        )


def step_state(s: NetworkState, u: np.ndarray, p: SimParams) -> NetworkState:
    """Advance every agent one sampling period under control u."""
    u = np.asarray(u, dtype=float)
    if u.shape != s.positions.shape:
        raise InputError(f"Control has shape {u.shape}, state has {s.positions.shape}")
    positions = s.positions + p.T * s.velocities + p.half_t_squared * u
    velocities = s.velocities + p.T * u
    bad = np.flatnonzero(~(np.isfinite(positions) & np.isfinite(velocities)))
    if bad.size:
        agent = int(bad[0])
        raise NumericError(f"Non-finite state at step {s.step + 1}", agent)
    return NetworkState(positions, velocities, s.offsets, s.step + 1)


def agent_control(
    position: float,
    velocity: float,
    samples: Iterable[tuple[float, float]],
    alpha: float,
) -> float:
    """sum_j a_ij (x_j - x_i) - alpha*v_i over (weight, sample) pairs, in the given order.

    Both simulation engines go through this one function so that their traces
    agree bit for bit.
    """
    total = 0.0
    for weight, sample in samples:
        total += weight * (sample - position)
    return total - alpha * velocity


def nominal_control(s: NetworkState, g: Digraph, p: SimParams) -> np.ndarray:
    """Unfiltered control for every agent over all of its in-neighbours."""
    if g.n != s.n:
        raise InputError(f"Graph has {g.n} nodes but the state has {s.n} agents")
    x, v = s.positions, s.velocities
    return np.array(
        [
            agent_control(
                float(x[i]),
                float(v[i]),
                ((g.weight(j, i), float(x[j])) for j in g.in_neighbors(i)),
                p.alpha,
            )
            for i in range(s.n)
        ]
    )


def normal_mask(n: int, malicious: Collection[int]) -> np.ndarray:
    """Boolean vector, true for normal agents."""
    mask = np.ones(n, dtype=bool)
    for agent in malicious:
        mask[agent] = False
    return mask


def q_r_matrices(p: SimParams, malicious: Collection[int]) -> tuple[np.ndarray, np.ndarray]:
    """Q = T*I - (alpha*T^2/2) on normal rows, R = I - alpha*T on normal rows."""
    normal = normal_mask(p.n, malicious).astype(float)
    q = np.diag(p.T - p.alpha * p.half_t_squared * normal)
    r = np.diag(1 - p.alpha * p.T * normal)
    return q, r


def phi_matrices(
    gk: Digraph, gk_prev: Digraph, p: SimParams, malicious: Collection[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Phi_1, Phi_2 with x[k+1] = Phi_1 x[k] + Phi_2 x[k-1] on normal rows.

    ``gk`` and ``gk_prev`` are the effective (filtered) graphs of steps k and k-1.
    """
    require_valid_params(p)
    normal = np.diag(normal_mask(p.n, malicious).astype(float))
    _, r = q_r_matrices(p, malicious)
    identity = np.eye(p.n)
    phi1 = r + identity - p.half_t_squared * normal @ laplacian(gk)
    phi2 = -r - p.half_t_squared * normal @ laplacian(gk_prev)
    return phi1, phi2
