"""Ready-made test instances: stabilizer ring states, uniform k-local
instances, and seeded random feasible instances with a known witness."""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .hilbert import check_dims, partial_trace, total_dim
from .marginal import ConsistencyInstance, MarginalConstraint
from .numerics import hermitian_part

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

__all__ = ["PAULIS", "pauli_string_matrix", "ring_stabilizers",
           "ring_graph_state", "maximally_mixed_klocal_instance",
           "random_feasible_instance"]


def pauli_string_matrix(letters: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, qubit 0 most significant."""
    if not letters or any(c not in PAULIS for c in letters):
        raise ValueError(f"Pauli string must be letters from IXYZ, got {letters!r}")
    m = PAULIS[letters[0]]
    for c in letters[1:]:
        m = np.kron(m, PAULIS[c])
    return m


def ring_stabilizers(n: int) -> list[str]:
    """Z X Z with wraparound: generator i acts as X on qubit i and Z on its
    ring neighbours."""
    n = int(n)
    if n < 3:
        raise ValueError("ring needs at least 3 qubits")
    out = []
    for i in range(n):
        letters = ["I"] * n
        letters[i] = "X"
        letters[(i - 1) % n] = "Z"
        letters[(i + 1) % n] = "Z"
        out.append("".join(letters))
    return out


def ring_graph_state(n: int) -> np.ndarray:
    """Pure stabilizer state of the n-cycle: product of (I + g_i)/2."""
    rho = np.eye(2 ** int(n), dtype=complex)
    for s in ring_stabilizers(n):
        rho = rho @ (np.eye(2 ** int(n), dtype=complex) + pauli_string_matrix(s)) / 2
    return hermitian_part(rho)


def maximally_mixed_klocal_instance(n: int, k: int) -> ConsistencyInstance:
    """Every k-subset of n qubits pinned to the maximally mixed state."""
    n, k = int(n), int(k)
    if not 1 <= k < n:
        raise ValueError(f"local size must be in 1..{n - 1}, got {k}")
    target = np.eye(2 ** k, dtype=complex) / 2 ** k
    cons = tuple(MarginalConstraint(subs, target)
                 for subs in combinations(range(n), k))
    return ConsistencyInstance((2,) * n, cons)


def random_feasible_instance(dims, subsets, global_rank: int,
                             seed: int = 0) -> tuple[ConsistencyInstance, np.ndarray]:
    """Instance whose targets are exact marginals of a hidden random state.

    The witness is G G^dag / Tr for a complex Gaussian dims-by-rank G drawn
    from numpy's default generator at the given seed, so feasibility holds by
    construction and runs are reproducible.  Returns (instance, witness).
    """
    dims = check_dims(dims)
    d = total_dim(dims)
    global_rank = int(global_rank)
    if not 1 <= global_rank <= d:
        raise ValueError(f"global rank must be in 1..{d}, got {global_rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, global_rank)) + 1j * rng.standard_normal((d, global_rank))
    rho = g @ g.conj().T
    rho = hermitian_part(rho / np.trace(rho).real)
    cons = tuple(MarginalConstraint(tuple(s), partial_trace(rho, dims, tuple(s)))
                 for s in subsets)
    return ConsistencyInstance(dims, cons), rho
