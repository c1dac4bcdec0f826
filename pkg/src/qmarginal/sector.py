"""Fixed-statistics particle sectors: instances, reduction, special states.

States live in the antisymmetric (fermionic) or symmetric (bosonic)
N-particle sector of (C^d)^{tensor N}, expressed in the occupation basis of
hilbert.sector_isometry.  The single constraint of a sector instance pins
the k-particle reduced state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from ._engine import (DEFAULT_RANK_TOL, DEFAULT_REPAIR_TOL, FeasibilityResult,
                      ReductionTrace)
from .hilbert import embed_with_identity, partial_trace, sector_isometry
from .numerics import as_hermitian, numerical_rank

__all__ = ["SectorInstance", "reduce_rank_sector", "find_feasible_sector",
           "bosonic_sigma_p", "bosonic_maximally_mixed_2",
           "admissible_sigma_range"]


@dataclass
class SectorInstance:
    """Prescribed k-particle reduced state inside an N-particle sector."""

    statistics: str
    particles: int
    levels: int
    marginal_particles: int
    target: np.ndarray

    def __post_init__(self):
        self.particles = int(self.particles)
        self.levels = int(self.levels)
        self.marginal_particles = int(self.marginal_particles)
        if not 1 <= self.marginal_particles <= self.particles:
            raise ValueError(
                f"marginal particle count must be in 1..{self.particles}, "
                f"got {self.marginal_particles}")
        emb = sector_isometry(self.statistics, self.marginal_particles, self.levels)
        self.target = as_hermitian(self.target)
        want = emb.sector_dim
        if self.target.shape != (want, want):
            raise ValueError(
                f"target for a {self.marginal_particles}-particle "
                f"{self.statistics} sector over {self.levels} levels must be "
                f"{want}x{want}, got {self.target.shape}")
        tr = np.trace(self.target)
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"target must have unit trace, got {tr:.12g}")
        w = np.linalg.eigvalsh(self.target)
        if w.min() < -1e-8 * max(1.0, float(np.abs(w).max())):
            raise ValueError("target is not positive semidefinite")

    @property
    def sector_dim(self) -> int:
        return sector_isometry(self.statistics, self.particles, self.levels).sector_dim


def engine_system(instance: SectorInstance) -> _engine.ConstraintSystem:
    """The sector marginal map and its adjoint, wired for the engine."""
    n, d, k = instance.particles, instance.levels, instance.marginal_particles
    wn = sector_isometry(instance.statistics, n, d).isometry
    wk = sector_isometry(instance.statistics, k, d).isometry
    dims = (d,) * n
    front = tuple(range(k))

    def apply(x: np.ndarray) -> np.ndarray:
        if k == n:
            return x
        t = partial_trace(wn @ x @ wn.conj().T, dims, front)
        return wk.conj().T @ t @ wk

    def adjoint(y: np.ndarray) -> np.ndarray:
        if k == n:
            return y
        lifted = embed_with_identity(wk @ y @ wk.conj().T, dims, front)
        return wn.conj().T @ lifted @ wn

    con = _engine.Constraint(target=instance.target, apply=apply,
                             adjoint=adjoint, label=f"{k}-particle")
    return _engine.ConstraintSystem(wn.shape[1], (con,))


def find_feasible_sector(instance: SectorInstance, *, tol: float = 1e-8,
                         max_iters: int = 5000, seed: int = 0) -> FeasibilityResult:
    """Alternating-projection search inside the sector, from its mixed state."""
    del seed
    return _engine.solve_feasible(engine_system(instance), tol=tol,
                                  max_iters=max_iters)


def reduce_rank_sector(sigma0: np.ndarray, instance: SectorInstance, *,
                       rank_tol: float = DEFAULT_RANK_TOL,
                       repair_tol: float = DEFAULT_REPAIR_TOL,
                       seed: int = 0,
                       max_steps: int | None = None) -> tuple[np.ndarray, ReductionTrace]:
    """Rank reduction with the marginal map replaced by the sector version.

    The bound is the numerical rank of the target (the single-constraint
    value of the general square-sum bound).
    """
    return _engine.reduce_core(
        np.asarray(sigma0, dtype=complex), engine_system(instance),
        bound=numerical_rank(instance.target, rank_tol), rank_tol=rank_tol,
        repair_tol=repair_tol, seed=seed, max_steps=max_steps)


def admissible_sigma_range(particles: int) -> tuple[int, int]:
    """Inclusive excitation range (lo, hi) where bosonic_sigma_p is a state."""
    n = int(particles)
    if n < 2:
        raise ValueError("particle number must be >= 2")
    lo = max(1, math.ceil((n - 1) / 3))
    hi = min(n - 1, (2 * n + 1) // 3)
    return lo, hi


def bosonic_sigma_p(particles: int, p: int) -> np.ndarray:
    """Three-term diagonal family in the two-level bosonic occupation basis.

    sigma_p mixes the all-zeros state, the all-ones state, and the p-excitation
    Dicke state with weights (3p+1-N)/(6p), (2N-3p+1)/(6(N-p)), and
    N(N-1)/(6p(N-p)); every admissible member shares the same two-particle
    reduced state, the maximally mixed one.
    """
    n, p = int(particles), int(p)
    lo, hi = admissible_sigma_range(n)
    if not lo <= p <= hi:
        raise ValueError(
            f"excitation number {p} outside the admissible range "
            f"{lo}..{hi} for {n} particles")
    a = (3 * p + 1 - n) / (6 * p)
    b = (2 * n - 3 * p + 1) / (6 * (n - p))
    dicke = n * (n - 1) / (6 * p * (n - p))
    sigma = np.zeros((n + 1, n + 1), dtype=complex)
    sigma[0, 0] = a
    sigma[n, n] = b
    sigma[p, p] += dicke
    return sigma


def bosonic_maximally_mixed_2() -> np.ndarray:
    """Two-particle, two-level bosonic maximally mixed state (occupation basis)."""
    return np.eye(3, dtype=complex) / 3
