"""Node layouts for the reduced concept graph.

Two layouts are provided. The circular layout spaces nodes evenly on the
unit circle, counterclockwise from angle zero, in the node order given. The
spring layout follows the classical stress model: desired pairwise lengths
are weighted shortest-path distances (an edge of weight w has length 1/w,
so strongly related concepts sit close), and coordinates minimize

    stress(x) = sum_{i<j} (|x_i - x_j| - d_ij)^2 / d_ij^2

by gradient descent with Armijo backtracking from a circular start.
Disconnected components are solved independently and then packed side by
side; their infinite mutual distances never enter the stress.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import InputError

MAX_ITERS = 500
GRAD_TOL = 1e-6
ARMIJO_C = 1e-4
PACK_GAP = 0.5


def layout_circular(n_nodes: int) -> np.ndarray:
    """n points on the unit circle; node 0 at (1, 0), counterclockwise."""
    if n_nodes < 1:
        raise InputError("need at least one node")
    if n_nodes == 1:
        return np.zeros((1, 2))
    angles = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _edge_length_matrix(n_nodes: int, edges) -> csr_matrix:
    rows, cols, vals = [], [], []
    for i, j, w in edges:
        if not 0 <= i < n_nodes or not 0 <= j < n_nodes:
            raise InputError("edge endpoint out of range")
        if i == j:
            raise InputError("self-loops have no length")
        if w <= 0:
            raise InputError("edge weights must be positive")
        rows += [i, j]
        cols += [j, i]
        vals += [1.0 / w, 1.0 / w]
    return csr_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes))


def stress_and_gradient(coords: np.ndarray, dists: np.ndarray):
    """Stress and its analytic gradient for one connected component."""
    diff = coords[:, None, :] - coords[None, :, :]
    norm = np.sqrt((diff ** 2).sum(axis=2))
    m = coords.shape[0]
    off = ~np.eye(m, dtype=bool)
    k = np.zeros_like(dists)
    k[off] = 1.0 / dists[off] ** 2
    delta = norm - dists
    stress = 0.5 * float((k * delta * delta)[off].sum())
    safe = np.where(norm > 0, norm, 1.0)
    coeff = np.where(off & (norm > 0), 2.0 * k * delta / safe, 0.0)
    grad = (coeff[:, :, None] * diff).sum(axis=1)
    return stress, grad


def _descend(coords: np.ndarray, dists: np.ndarray, max_iters: int,
             tol: float, trace) -> tuple[np.ndarray, float]:
    x = coords.copy()
    stress, grad = stress_and_gradient(x, dists)
    for _ in range(max_iters):
        gnorm2 = float((grad * grad).sum())
        if math.sqrt(gnorm2) < tol:
            break
        step = 1.0
        while step > 1e-12:
            candidate = x - step * grad
            new_stress, new_grad = stress_and_gradient(candidate, dists)
            if new_stress <= stress - ARMIJO_C * step * gnorm2:
                break
            step *= 0.5
        else:
            break
        x, stress, grad = candidate, new_stress, new_grad
        if trace is not None:
            trace.append(stress)
    return x, stress


@dataclass(frozen=True)
class SpringLayout:
    coords: np.ndarray  # n x 2
    stress: float       # summed over components


def layout_kamada_kawai(n_nodes: int, edges, max_iters: int = MAX_ITERS,
                        tol: float = GRAD_TOL, trace=None) -> SpringLayout:
    """Stress-minimizing 2-D layout; `edges` holds (i, j, weight) triples.

    Deterministic: the start is the circular layout scaled to half the
    component's graph diameter, and the descent has no randomness. Pass a
    list as `trace` to record the stress after each accepted step.
    """
    if n_nodes < 1:
        raise InputError("need at least one node")
    lengths = _edge_length_matrix(n_nodes, list(edges))
    n_comp, labels = connected_components(lengths, directed=False)
    dmat = dijkstra(lengths, directed=False)

    coords = np.zeros((n_nodes, 2))
    total_stress = 0.0
    cursor = 0.0
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        if members.size == 1:
            local = np.zeros((1, 2))
        else:
            sub = dmat[np.ix_(members, members)]
            radius = 0.5 * float(sub.max())
            init = layout_circular(members.size) * radius
            local, stress = _descend(init, sub, max_iters, tol, trace)
            total_stress += stress
        width = float(local[:, 0].max() - local[:, 0].min()) if members.size else 0.0
        shift = cursor - float(local[:, 0].min())
        local = local + np.array([shift, -float(local[:, 1].min())])
        coords[members] = local
        cursor += width + PACK_GAP
    return SpringLayout(coords=coords, stress=total_stress)
