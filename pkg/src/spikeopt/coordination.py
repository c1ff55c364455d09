"""Population-level coordination: spike propagation, neighbourhoods, global best.

Spike activity travels over a boolean adjacency matrix replicated across
dimensions and contracted against the population spike matrix; positional
information travels over a separate boolean graph whose rows define each
unit's neighbourhood.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "SpikeTopology",
    "InfoTopology",
    "GlobalBest",
    "tensor_contract",
    "high_level_selector_step",
    "neighbour_manager_step",
    "build_ring",
    "build_full_spike",
    "build_random_info",
    "build_full_info",
]


@dataclass
class SpikeTopology:
    """Boolean synapse graph; no self-connections."""

    W_s: np.ndarray
    _tensor_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        W = np.asarray(self.W_s, dtype=bool)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W_s must be a square matrix")
        if np.any(np.diagonal(W)):
            raise ValueError("W_s must have a zero diagonal")
        self.W_s = W

    @property
    def n(self) -> int:
        return self.W_s.shape[0]

    def weight_tensor(self, d: int) -> np.ndarray:
        """The (n, n, d) weight tensor: the adjacency replicated per dimension."""
        if d not in self._tensor_cache:
            self._tensor_cache[d] = np.repeat(self.W_s[:, :, None], d, axis=2)
        return self._tensor_cache[d]


@dataclass
class InfoTopology:
    """Boolean information-sharing graph; every unit needs >= 1 neighbour."""

    W_x: np.ndarray
    neighbour_lists: Tuple[np.ndarray, ...] = ()
    m: int = 0

    def __post_init__(self):
        W = np.asarray(self.W_x, dtype=bool)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W_x must be a square matrix")
        if np.any(np.diagonal(W)):
            raise ValueError("W_x must have a zero diagonal")
        lists = tuple(np.flatnonzero(row) for row in W)
        if any(lst.size == 0 for lst in lists):
            raise ValueError("every unit needs at least one neighbour")
        self.W_x = W
        self.neighbour_lists = lists
        self.m = max(lst.size for lst in lists)

    @property
    def n(self) -> int:
        return self.W_x.shape[0]


@dataclass
class GlobalBest:
    """Greedy record of the best position seen by the high-level selector."""

    g: Optional[np.ndarray] = None
    f_g: float = np.inf
    is_init: bool = False


def tensor_contract(topology: SpikeTopology, S: np.ndarray) -> np.ndarray:
    """Activation matrix A[i, j] = OR_k (W[i, k, j] AND S[k, j])."""
    S = np.asarray(S, dtype=bool)
    n = topology.n
    if S.ndim != 2 or S.shape[0] != n:
        raise ValueError(f"spike matrix must have shape ({n}, d), got {S.shape}")
    W = topology.weight_tensor(S.shape[1])
    return np.einsum("ikj,kj->ij", W.astype(np.uint8), S.astype(np.uint8)) > 0


def high_level_selector_step(
    state: GlobalBest,
    P: np.ndarray,
    f_p: np.ndarray,
) -> Tuple[np.ndarray, float]:
    """Greedy global-best update; ties resolve to the lowest unit index."""
    P = np.asarray(P, dtype=float)
    f_p = np.asarray(f_p, dtype=float)
    if P.ndim != 2 or f_p.shape != (P.shape[0],):
        raise ValueError("positions and fitness lengths must match")
    if P.shape[0] == 0:
        raise ValueError("empty population")
    i_star = int(np.argmin(f_p))
    if f_p[i_star] < state.f_g or not state.is_init:
        state.g = P[i_star].copy()
        state.f_g = float(f_p[i_star])
        state.is_init = True
    return state.g, state.f_g


def neighbour_manager_step(
    topology: InfoTopology,
    P: np.ndarray,
    f_p: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Group best positions and fitness by neighbourhood.

    Returns the (m, d, n) position tensor and (m, n) fitness matrix; slice i
    lists unit i's neighbours in ascending index order, and short
    neighbourhoods are padded with the unit's own entry.
    """
    P = np.asarray(P, dtype=float)
    f_p = np.asarray(f_p, dtype=float)
    n = topology.n
    if P.ndim != 2 or P.shape[0] != n or f_p.shape != (n,):
        raise ValueError("positions/fitness shapes inconsistent with the topology")
    d = P.shape[1]
    m = topology.m
    pos = np.empty((m, d, n))
    fit = np.empty((m, n))
    for i, neighbours in enumerate(topology.neighbour_lists):
        k = neighbours.size
        pos[:k, :, i] = P[neighbours]
        fit[:k, i] = f_p[neighbours]
        if k < m:
            pos[k:, :, i] = P[i]
            fit[k:, i] = f_p[i]
    return pos, fit


def build_ring(n: int) -> SpikeTopology:
    """Bidirectional ring: unit i synapses with i-1 and i+1, modulo n."""
    if n < 3:
        raise ValueError("a ring needs at least 3 units")
    W = np.zeros((n, n), dtype=bool)
    idx = np.arange(n)
    W[idx, (idx + 1) % n] = True
    W[idx, (idx - 1) % n] = True
    return SpikeTopology(W_s=W)


def build_full_spike(n: int) -> SpikeTopology:
    """All-to-all synapses, no self-connection."""
    if n < 2:
        raise ValueError("a full graph needs at least 2 units")
    return SpikeTopology(W_s=~np.eye(n, dtype=bool))


def build_random_info(n: int, m: int, rng: np.random.Generator) -> InfoTopology:
    """Each unit gets exactly ``m`` distinct random neighbours (never itself)."""
    if not 1 <= m <= n - 1:
        raise ValueError("need 1 <= m <= n - 1")
    W = np.zeros((n, n), dtype=bool)
    for i in range(n):
        candidates = np.delete(np.arange(n), i)
        W[i, rng.choice(candidates, size=m, replace=False)] = True
    return InfoTopology(W_x=W)


def build_full_info(n: int) -> InfoTopology:
    """Complete information graph minus the diagonal."""
    if n < 2:
        raise ValueError("a full graph needs at least 2 units")
    return InfoTopology(W_x=~np.eye(n, dtype=bool))
